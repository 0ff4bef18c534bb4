use alloc::format;
use alloc::vec::Vec;

// unused when std happens to be linked into the build graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{FrailtyError, Result};

/// Cumulative baseline hazard Λ0.
#[derive(Debug, Clone, PartialEq)]
pub enum Baseline {
    /// Λ0(t) = λ t^ρ, λ0(t) = λ ρ t^{ρ-1}.
    Weibull { lambda: f64, rho: f64 },
    /// Nondecreasing step function with jumps at the distinct failure times.
    Step(StepFn),
}

impl Baseline {
    pub fn weibull(lambda: f64, rho: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(FrailtyError::domain("Weibull lambda", lambda));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(FrailtyError::domain("Weibull rho", rho));
        }
        Ok(Baseline::Weibull { lambda, rho })
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        match self {
            Baseline::Weibull { lambda, rho } => {
                if t <= 0.0 {
                    0.0
                } else {
                    lambda * t.powf(*rho)
                }
            }
            Baseline::Step(s) => s.cumulative(t),
        }
    }

    /// λ0(t). For a step baseline this is the jump height and `t` must be
    /// one of the jump points.
    pub fn hazard(&self, t: f64) -> Result<f64> {
        match self {
            Baseline::Weibull { lambda, rho } => {
                if !(t > 0.0) {
                    return Err(FrailtyError::domain("hazard time", t));
                }
                Ok(lambda * rho * t.powf(rho - 1.0))
            }
            Baseline::Step(s) => s.jump_at(t).ok_or(FrailtyError::NotJumpPoint { time: t }),
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        (-self.cumulative(t)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFn {
    times: Vec<f64>,
    increments: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepFn {
    pub fn new(times: Vec<f64>, increments: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(FrailtyError::InvalidData(
                "step baseline needs at least one jump".into(),
            ));
        }
        if times.len() != increments.len() {
            return Err(FrailtyError::Dimension {
                what: "step increments",
                expected: times.len(),
                actual: increments.len(),
            });
        }
        if !(times[0] > 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FrailtyError::InvalidData(
                "step times must be positive and strictly increasing".into(),
            ));
        }
        if let Some(bad) = increments.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(FrailtyError::InvalidData(format!(
                "step increment {bad} is not positive"
            )));
        }
        let cumulative = increments
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            times,
            increments,
            cumulative,
        })
    }

    /// Build from cumulative values Λ0(t_k), which must strictly increase.
    pub fn from_cumulative(times: Vec<f64>, cumulative: &[f64]) -> Result<Self> {
        let mut prev = 0.0;
        let increments = cumulative
            .iter()
            .map(|c| {
                let d = c - prev;
                prev = *c;
                d
            })
            .collect();
        Self::new(times, increments)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Λ0 at each jump point.
    pub fn cumulative_values(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Jump height at `t`, matched by exact equality.
    pub fn jump_at(&self, t: f64) -> Option<f64> {
        self.times
            .binary_search_by(|s| s.total_cmp(&t))
            .ok()
            .map(|k| self.increments[k])
    }

    /// Ŝ0 = exp(-Λ0) at each jump point.
    pub fn survival_values(&self) -> Vec<f64> {
        self.cumulative.iter().map(|c| (-c).exp()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn weibull_baseline() {
        let b = Baseline::weibull(0.514, 0.44).unwrap();
        assert!((b.hazard(1.0).unwrap() - 0.514 * 0.44).abs() < 1e-15);
        assert!((b.cumulative(1.0) - 0.514).abs() < 1e-15);
        assert_eq!(b.cumulative(0.0), 0.0);
        assert!(Baseline::weibull(0.0, 1.0).is_err());
        assert!(Baseline::weibull(1.0, -1.0).is_err());
    }

    #[test]
    fn step_baseline() {
        let s = StepFn::new(vec![1.0, 2.0, 3.0], vec![1.0 / 3.0, 0.5, 1.0]).unwrap();
        assert_eq!(s.cumulative(0.5), 0.0);
        assert!((s.cumulative(1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.cumulative(2.5) - 5.0 / 6.0).abs() < 1e-15);
        assert!((s.cumulative(10.0) - 11.0 / 6.0).abs() < 1e-15);
        let b = Baseline::Step(s);
        assert_eq!(b.hazard(2.0).unwrap(), 0.5);
        assert!(matches!(b.hazard(2.5), Err(FrailtyError::NotJumpPoint { .. })));
    }

    #[test]
    fn step_validation() {
        assert!(StepFn::new(vec![], vec![]).is_err());
        assert!(StepFn::new(vec![2.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(StepFn::new(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(StepFn::new(vec![1.0], vec![0.0]).is_err());
        assert!(StepFn::new(vec![1.0], vec![1.0, 2.0]).is_err());
        let s = StepFn::from_cumulative(vec![1.0, 3.0], &[0.5, 1.5]).unwrap();
        assert_eq!(s.increments(), &[0.5, 1.0]);
    }
}
