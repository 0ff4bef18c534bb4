//! Scenario files: one `key = value` pair per line, `#` starts a comment.
//!
//! ```text
//! case = 1            # or: layout = 200x1, 100x2, 50x3
//! mu_w = 8.6
//! sigma2_w = 230
//! theta = 0.25
//! frailty = wl        # wl | uniform | gamma | lognormal
//! beta = 0.3, 1.1, 0.4, -0.5, -0.3
//! censor_q = 0
//! replicates = 100
//! seed = 1
//! ```

use std::path::Path;

use wlfrailty_core::sim::{Case, FrailtyLaw, ScenarioConfig};

use crate::error::{Error, Result};

fn parse_num<T: std::str::FromStr>(line: u64, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::parse(line, format!("bad value `{v}` for {key}")))
}

fn parse_list(line: u64, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| parse_num(line, key, x.trim())).collect()
}

fn parse_layout(line: u64, v: &str) -> Result<Vec<(usize, usize)>> {
    v.split(',')
        .map(|item| {
            let (c, s) = item
                .trim()
                .split_once('x')
                .ok_or_else(|| Error::parse(line, format!("layout entry `{item}` is not <clusters>x<size>")))?;
            Ok((
                parse_num(line, "layout", c.trim())?,
                parse_num(line, "layout", s.trim())?,
            ))
        })
        .collect()
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::case(Case::I, 0.25, (8.6, 230.0));
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected key = value, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "case" => {
                cfg.cluster_layout = match value {
                    "1" | "i" | "I" => Case::I,
                    "2" | "ii" | "II" => Case::II,
                    "3" | "iii" | "III" => Case::III,
                    _ => return Err(Error::parse(line, format!("unknown case `{value}`"))),
                }
                .layout()
            }
            "layout" => cfg.cluster_layout = parse_layout(line, value)?,
            "mu_w" => cfg.weibull_moments.0 = parse_num(line, key, value)?,
            "sigma2_w" => cfg.weibull_moments.1 = parse_num(line, key, value)?,
            "theta" => cfg.theta = parse_num(line, key, value)?,
            "frailty" => {
                cfg.frailty_law = FrailtyLaw::parse(value)
                    .ok_or_else(|| Error::parse(line, format!("unknown frailty law `{value}`")))?
            }
            "beta" => cfg.beta = parse_list(line, key, value)?,
            "censor_q" => cfg.censor_q = parse_num(line, key, value)?,
            "replicates" => cfg.n_replicates = parse_num(line, key, value)?,
            "seed" => cfg.base_seed = parse_num(line, key, value)?,
            _ => return Err(Error::parse(line, format!("unknown key `{key}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text)
}

/// Inverse of [`parse_scenario`].
pub fn format_scenario(cfg: &ScenarioConfig) -> String {
    let layout: Vec<String> = cfg.cluster_layout.iter().map(|(c, s)| format!("{c}x{s}")).collect();
    let beta: Vec<String> = cfg.beta.iter().map(|b| b.to_string()).collect();
    format!(
        "layout = {}\nmu_w = {}\nsigma2_w = {}\ntheta = {}\nfrailty = {}\nbeta = {}\ncensor_q = {}\nreplicates = {}\nseed = {}\n",
        layout.join(", "),
        cfg.weibull_moments.0,
        cfg.weibull_moments.1,
        cfg.theta,
        cfg.frailty_law.name(),
        beta.join(", "),
        cfg.censor_q,
        cfg.n_replicates,
        cfg.base_seed
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = "case = 2\nmu_w = 6.0 # trailing\nsigma2_w=230\ntheta = 0.5\nfrailty = gamma\n\n# c\ncensor_q = 0.1\nreplicates = 7\nseed = 42\n";
        let cfg = parse_scenario(text).unwrap();
        assert_eq!(cfg.cluster_layout, Case::II.layout());
        assert_eq!(cfg.weibull_moments, (6.0, 230.0));
        assert_eq!(cfg.frailty_law, FrailtyLaw::Gamma);
        assert_eq!((cfg.censor_q, cfg.n_replicates, cfg.base_seed), (0.1, 7, 42));
    }

    #[test]
    fn round_trip() {
        let mut cfg = ScenarioConfig::case(Case::III, 0.1, (8.6, 100.0));
        cfg.beta = vec![0.1, -0.2, 1.0 / 3.0, 0.0, 2.5];
        cfg.frailty_law = FrailtyLaw::LogNormal;
        assert_eq!(parse_scenario(&format_scenario(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_line() {
        assert!(matches!(
            parse_scenario("theta = 0.1\nbogus = 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_scenario("layout = 3y2"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse_scenario("censor_q = 1.5"), Err(Error::Model(_))));
    }
}
