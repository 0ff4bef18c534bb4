//! File formats, parallel simulation and the command line for the
//! `wlfrailty-core` models.

pub mod cli;
pub mod csv_io;
pub mod error;
pub mod result;
pub mod scenario;
pub mod simulate;

pub use csv_io::{dump_csv, load_csv, load_csv_from, ColumnSpec};
pub use error::{Error, Result};
pub use result::{p_value, read_result, write_result, FitReport};
pub use scenario::{format_scenario, load_scenario, parse_scenario};
pub use simulate::{recovery_study_parallel, simulate, SimulationReport};
