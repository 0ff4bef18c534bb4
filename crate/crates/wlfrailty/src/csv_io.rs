//! CSV ingestion and the debug dump.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use wlfrailty_core::{Cluster, Dataset, Subject};

use crate::error::{Error, Result};

/// Column roles for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub time: String,
    pub status: String,
    pub cluster: String,
    pub covariates: Vec<String>,
}

impl ColumnSpec {
    pub fn new(time: &str, status: &str, cluster: &str, covariates: &[&str]) -> Self {
        Self {
            time: time.into(),
            status: status.into(),
            cluster: cluster.into(),
            covariates: covariates.iter().map(|c| c.to_string()).collect(),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv_from(file, spec)
}

enum Column {
    Numeric(Vec<f64>),
    /// Raw values with the sorted level set; the first level is the reference.
    Categorical(Vec<String>, Vec<String>),
}

/// Read a header-first CSV. Numeric covariate columns are taken as is; any
/// column with a non-numeric entry is treated as categorical and expanded
/// into reference-coded dummies named `<column><level>`.
pub fn load_csv_from<R: Read>(reader: R, spec: &ColumnSpec) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let (ti, si, ci) = (find(&spec.time)?, find(&spec.status)?, find(&spec.cluster)?);
    let cov_idx = spec.covariates.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;

    let mut times = Vec::new();
    let mut status = Vec::new();
    let mut ids = Vec::new();
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); cov_idx.len()];
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let time: f64 = rec[ti]
            .parse()
            .map_err(|_| Error::parse(line, format!("time `{}` is not a number", &rec[ti])))?;
        if time <= 0.0 || !time.is_finite() {
            return Err(Error::parse(line, format!("time must be positive, got {time}")));
        }
        let event = match &rec[si] {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(line, format!("status must be 0 or 1, got `{other}`"))),
        };
        times.push(time);
        status.push(event);
        ids.push(rec[ci].to_string());
        for (k, &j) in cov_idx.iter().enumerate() {
            raw[k].push(rec[j].to_string());
        }
        lines.push(line);
    }
    if times.is_empty() {
        return Err(Error::parse(1, "no data rows"));
    }

    let columns: Vec<Column> = raw
        .into_iter()
        .map(|vals| {
            let parsed: Option<Vec<f64>> = vals.iter().map(|v| v.parse::<f64>().ok()).collect();
            match parsed {
                Some(x) => Column::Numeric(x),
                None => {
                    let levels: Vec<String> = vals.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
                    Column::Categorical(vals, levels)
                }
            }
        })
        .collect();
    let mut names = Vec::new();
    for (name, col) in spec.covariates.iter().zip(&columns) {
        match col {
            Column::Numeric(_) => names.push(name.clone()),
            Column::Categorical(_, levels) => names.extend(levels[1..].iter().map(|l| format!("{name}{l}"))),
        }
    }

    let mut order: Vec<String> = Vec::new();
    let mut members: HashMap<String, Vec<Subject>> = HashMap::new();
    for i in 0..times.len() {
        let mut x = Vec::with_capacity(names.len());
        for col in &columns {
            match col {
                Column::Numeric(v) => x.push(v[i]),
                Column::Categorical(v, levels) => {
                    x.extend(levels[1..].iter().map(|l| if *l == v[i] { 1.0 } else { 0.0 }));
                }
            }
        }
        let subject = Subject::new(times[i], status[i], x).map_err(|e| Error::parse(lines[i], e.to_string()))?;
        let entry = members.entry(ids[i].clone()).or_insert_with(|| {
            order.push(ids[i].clone());
            Vec::new()
        });
        entry.push(subject);
    }
    let clusters = order
        .into_iter()
        .map(|id| {
            let subjects = members.remove(&id).expect("every id has members");
            Cluster::new(id, subjects)
        })
        .collect::<wlfrailty_core::Result<Vec<_>>>()?;
    Ok(Dataset::new(clusters)?.with_covariate_names(names)?)
}

/// Write a dataset back out with columns `cluster,time,status,<covariates>`.
/// Floats use Rust's shortest round-trip formatting.
pub fn dump_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["cluster".to_string(), "time".into(), "status".into()];
    header.extend(data.covariate_names().iter().cloned());
    w.write_record(&header)?;
    for c in data.clusters() {
        for s in &c.subjects {
            let mut row = vec![
                c.id.clone(),
                s.time.to_string(),
                if s.event { "1" } else { "0" }.to_string(),
            ];
            row.extend(s.covariates.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
