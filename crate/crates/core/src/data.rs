//! Clustered right-censored survival data.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{FrailtyError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub time: f64,
    /// `true` for an observed failure, `false` for right censoring.
    pub event: bool,
    pub covariates: Vec<f64>,
}

impl Subject {
    pub fn new(time: f64, event: bool, covariates: Vec<f64>) -> Result<Self> {
        if !(time > 0.0) || !time.is_finite() {
            return Err(FrailtyError::InvalidData(format!(
                "follow-up time must be positive and finite, got {time}"
            )));
        }
        if let Some(bad) = covariates.iter().find(|v| !v.is_finite()) {
            return Err(FrailtyError::InvalidData(format!("non-finite covariate {bad}")));
        }
        Ok(Self {
            time,
            event,
            covariates,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: String,
    pub subjects: Vec<Subject>,
}

impl Cluster {
    pub fn new(id: impl Into<String>, subjects: Vec<Subject>) -> Result<Self> {
        let id = id.into();
        if subjects.is_empty() {
            return Err(FrailtyError::InvalidData(format!("cluster {id} has no subjects")));
        }
        Ok(Self { id, subjects })
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    /// r_i, the number of observed failures.
    pub fn n_events(&self) -> usize {
        self.subjects.iter().filter(|s| s.event).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    clusters: Vec<Cluster>,
    p: usize,
    covariate_names: Vec<String>,
}

impl Dataset {
    pub fn new(clusters: Vec<Cluster>) -> Result<Self> {
        let first = clusters
            .first()
            .ok_or_else(|| FrailtyError::InvalidData("dataset has no clusters".to_string()))?;
        let p = first.subjects[0].covariates.len();
        for c in &clusters {
            if c.subjects.is_empty() {
                return Err(FrailtyError::InvalidData(format!("cluster {} has no subjects", c.id)));
            }
            for s in &c.subjects {
                if s.covariates.len() != p {
                    return Err(FrailtyError::Dimension {
                        what: "covariate vector",
                        expected: p,
                        actual: s.covariates.len(),
                    });
                }
                if !(s.time > 0.0) || !s.time.is_finite() {
                    return Err(FrailtyError::InvalidData(format!(
                        "follow-up time must be positive and finite, got {}",
                        s.time
                    )));
                }
            }
        }
        let covariate_names = (1..=p).map(|k| format!("x{k}")).collect();
        Ok(Self {
            clusters,
            p,
            covariate_names,
        })
    }

    pub fn with_covariate_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(FrailtyError::Dimension {
                what: "covariate names",
                expected: self.p,
                actual: names.len(),
            });
        }
        self.covariate_names = names;
        Ok(self)
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// Number of clusters m.
    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Covariate dimension p.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn n_subjects(&self) -> usize {
        self.clusters.iter().map(Cluster::len).sum()
    }

    pub fn n_events(&self) -> usize {
        self.clusters.iter().map(Cluster::n_events).sum()
    }

    pub fn subjects(&self) -> impl Iterator<Item = (usize, &Subject)> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.subjects.iter().map(move |s| (i, s)))
    }

    /// Checks the preconditions shared by the estimators: at least two
    /// clusters and one failure.
    pub fn check_fittable(&self) -> Result<()> {
        if self.clusters.len() < 2 {
            return Err(FrailtyError::InvalidData(
                "at least two clusters are required for fitting".to_string(),
            ));
        }
        if self.n_events() == 0 {
            return Err(FrailtyError::InvalidData(
                "dataset has no observed failures".to_string(),
            ));
        }
        Ok(())
    }

    /// Same data with every follow-up time multiplied by `factor`.
    pub fn scale_times(&self, factor: f64) -> Result<Self> {
        let mut out = self.clone();
        for c in &mut out.clusters {
            for s in &mut c.subjects {
                s.time *= factor;
            }
        }
        Dataset::new(out.clusters)?.with_covariate_names(self.covariate_names.clone())
    }
}

pub(crate) fn dot(x: &[f64], beta: &[f64]) -> f64 {
    x.iter().zip(beta).map(|(a, b)| a * b).sum()
}

pub(crate) fn check_beta(data: &Dataset, beta: &[f64]) -> Result<()> {
    if beta.len() != data.p() {
        return Err(FrailtyError::Dimension {
            what: "coefficient vector",
            expected: data.p(),
            actual: beta.len(),
        });
    }
    Ok(())
}
