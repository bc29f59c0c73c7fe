//! Rate allocation over the cut-set polyhedron.
//!
//! Every solver here works through a single primitive: the largest feasible
//! value of one coordinate given the others ([`Backend::coordinate`]). It is
//! computed either by exhaustive pinned minimization ([`crate::sfm`]) or by
//! the dual subgradient method in [`subgradient`].

mod convex;
mod edmonds;
pub mod subgradient;

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::CutSetOracle;
use crate::sfm::{self, GroundSet};

pub(crate) use convex::{cheapest_tied, search_convex};
pub use convex::{convex_alloc, eval_h, min_cost, zero_is_feasible, ConvexAllocation, Optimum};
pub use edmonds::{min_sum_rate, modified_edmonds};
pub use subgradient::{dual_maximizer, subgrad_coordinate, DualPoint, SubgradientConfig};

/// Two derivative values closer than this are treated as equal.
pub const DERIVATIVE_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocError {
    /// The budget (or the capacity vector) admits no rate vector. `achieved`
    /// is how far the solver got: the sum reached by the greedy sweep, or the
    /// number of completed increment rounds.
    #[error("sum-rate {beta} is infeasible (solver reached {achieved})")]
    Infeasible { beta: i64, achieved: i64 },
    #[error("invalid cost function: {0}")]
    InvalidCost(String),
    #[error("invalid capacity vector: {0}")]
    InvalidCaps(String),
    #[error("invalid subgradient configuration: {0}")]
    InvalidConfig(String),
    #[error("sum-rate budget must be non-negative, got {0}")]
    NegativeBudget(i64),
}

/// Per-user transmission counts, in field symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateVector(Vec<i64>);

impl RateVector {
    pub fn new(rates: Vec<i64>) -> Result<Self, AllocError> {
        if let Some(r) = rates.iter().find(|&&r| r < 0) {
            return Err(AllocError::InvalidCaps(format!("negative rate {r}")));
        }
        Ok(Self(rates))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0; m])
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<i64> {
        self.0
    }

    pub(crate) fn increment(&mut self, user: usize) {
        self.0[user] += 1;
    }
}

impl Deref for RateVector {
    type Target = [i64];

    fn deref(&self) -> &[i64] {
        &self.0
    }
}

/// Separable cost `Σ φ_i(R_i)` with each `φ_i` convex, non-decreasing and
/// `φ_i(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum CostFunction {
    /// `φ_i(R) = α_i R` with `α_i > 0`.
    Linear(Vec<f64>),
    /// `φ_i(R) = R ln R` for every user.
    Fair,
    /// Explicit discrete derivatives `d_i(1), d_i(2), ...`. Past the end of a
    /// table the last increment repeats.
    Table(Vec<Vec<f64>>),
}

impl CostFunction {
    pub fn unit(m: usize) -> Self {
        CostFunction::Linear(vec![1.0; m])
    }

    pub fn validate(&self, m: usize) -> Result<(), AllocError> {
        match self {
            CostFunction::Linear(w) => {
                if w.len() != m {
                    return Err(AllocError::InvalidCost(format!(
                        "{} weights for {m} users",
                        w.len()
                    )));
                }
                if let Some(a) = w.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
                    return Err(AllocError::InvalidCost(format!(
                        "weights must be positive, got {a}"
                    )));
                }
            }
            CostFunction::Fair => {}
            CostFunction::Table(t) => {
                if t.len() != m {
                    return Err(AllocError::InvalidCost(format!(
                        "{} derivative tables for {m} users",
                        t.len()
                    )));
                }
                for (i, d) in t.iter().enumerate() {
                    if d.is_empty() {
                        return Err(AllocError::InvalidCost(format!(
                            "user {} has an empty derivative table",
                            i + 1
                        )));
                    }
                    if d.iter().any(|x| !x.is_finite() || *x < 0.0) {
                        return Err(AllocError::InvalidCost(format!(
                            "user {} has a negative or non-finite derivative",
                            i + 1
                        )));
                    }
                    if d.windows(2).any(|w| w[1] < w[0]) {
                        return Err(AllocError::InvalidCost(format!(
                            "user {} derivatives are not non-decreasing",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, CostFunction::Linear(_))
    }

    /// `d_i(r) = φ_i(r) − φ_i(r − 1)` for `r ≥ 1`.
    pub fn derivative(&self, user: usize, r: i64) -> f64 {
        debug_assert!(r >= 1);
        match self {
            CostFunction::Linear(w) => w[user],
            CostFunction::Fair => xlnx(r) - xlnx(r - 1),
            CostFunction::Table(t) => {
                let d = &t[user];
                d[((r - 1) as usize).min(d.len() - 1)]
            }
        }
    }

    /// `φ_i(r)`.
    pub fn value(&self, user: usize, r: i64) -> f64 {
        match self {
            CostFunction::Linear(w) => w[user] * r as f64,
            CostFunction::Fair => xlnx(r),
            CostFunction::Table(_) => (1..=r).map(|k| self.derivative(user, k)).sum(),
        }
    }

    pub fn total(&self, rates: &[i64]) -> f64 {
        rates
            .iter()
            .enumerate()
            .map(|(i, &r)| self.value(i, r))
            .sum()
    }
}

fn xlnx(r: i64) -> f64 {
    if r <= 0 {
        0.0
    } else {
        let x = r as f64;
        x * x.ln()
    }
}

/// Per-user upper bounds on transmissions, or no bounds at all.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CapacityVector(Option<Vec<i64>>);

impl CapacityVector {
    pub fn unbounded() -> Self {
        Self(None)
    }

    pub fn new(caps: Vec<i64>) -> Result<Self, AllocError> {
        if let Some(c) = caps.iter().find(|&&c| c < 0) {
            return Err(AllocError::InvalidCaps(format!("negative capacity {c}")));
        }
        Ok(Self(Some(caps)))
    }

    pub fn validate(&self, m: usize) -> Result<(), AllocError> {
        match &self.0 {
            Some(c) if c.len() != m => Err(AllocError::InvalidCaps(format!(
                "{} capacities for {m} users",
                c.len()
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.0.is_some()
    }

    pub fn as_slice(&self) -> Option<&[i64]> {
        self.0.as_deref()
    }

    #[inline]
    pub fn cap(&self, user: usize) -> i64 {
        self.0.as_ref().map_or(i64::MAX, |c| c[user])
    }

    /// Sum of all capacities, saturating for unbounded vectors.
    pub fn total(&self) -> i64 {
        self.0.as_ref().map_or(i64::MAX, |c| {
            c.iter().fold(0i64, |a, &b| a.saturating_add(b))
        })
    }
}

/// How the per-coordinate maximization is computed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Backend {
    /// Exhaustive pinned minimization.
    #[default]
    Sfm,
    /// Dual subgradient descent; `None` picks the default configuration for
    /// the instance size.
    Subgradient(Option<SubgradientConfig>),
}

impl Backend {
    pub fn validate(&self, oracle: &CutSetOracle) -> Result<(), AllocError> {
        match self {
            Backend::Subgradient(Some(cfg)) => cfg.validate(oracle.users(), oracle.packets()),
            _ => Ok(()),
        }
    }

    /// `min { f_β(S ∪ {i}) − R(S) : S ⊆ free }`, the largest value the pinned
    /// coordinate can take while the free coordinates stay at `rates`.
    pub fn coordinate(
        &self,
        oracle: &CutSetOracle,
        beta: i64,
        rates: &[i64],
        ground: GroundSet,
    ) -> i64 {
        match self {
            Backend::Sfm => sfm::min_pinned(oracle, beta, rates, ground).value,
            Backend::Subgradient(cfg) => {
                let cfg = cfg.unwrap_or_else(|| {
                    SubgradientConfig::default_for(oracle.users(), oracle.packets())
                });
                subgrad_coordinate(oracle, beta, rates, ground, &cfg)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fair_derivatives_increase() {
        let c = CostFunction::Fair;
        assert_eq!(c.derivative(0, 1), 0.0);
        let ds: Vec<f64> = (1..10).map(|r| c.derivative(0, r)).collect();
        assert!(ds.windows(2).all(|w| w[1] > w[0]));
        assert!((c.value(0, 2) - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(c.value(3, 0), 0.0);
    }

    #[test]
    fn table_costs_extend_with_last_increment() {
        let c = CostFunction::Table(vec![vec![1.0, 2.0], vec![0.5]]);
        assert!(c.validate(2).is_ok());
        assert_eq!(c.derivative(0, 5), 2.0);
        assert_eq!(c.value(0, 3), 5.0);
        assert_eq!(c.value(1, 4), 2.0);
        assert!(CostFunction::Table(vec![vec![2.0, 1.0]])
            .validate(1)
            .is_err());
        assert!(CostFunction::Table(vec![vec![]]).validate(1).is_err());
        assert!(CostFunction::Table(vec![vec![-1.0]]).validate(1).is_err());
    }

    #[test]
    fn linear_cost_validation() {
        assert!(CostFunction::Linear(vec![1.0, 3.0, 2.0])
            .validate(3)
            .is_ok());
        assert!(CostFunction::Linear(vec![1.0, 0.0]).validate(2).is_err());
        assert!(CostFunction::Linear(vec![1.0]).validate(2).is_err());
        assert_eq!(
            CostFunction::Linear(vec![1.0, 3.0, 2.0]).total(&[1, 1, 3]),
            10.0
        );
    }

    #[test]
    fn capacity_helpers() {
        let c = CapacityVector::new(vec![2, 2, 2]).unwrap();
        assert_eq!(c.total(), 6);
        assert_eq!(c.cap(1), 2);
        assert!(c.validate(2).is_err());
        assert_eq!(CapacityVector::unbounded().cap(0), i64::MAX);
        assert!(CapacityVector::new(vec![-1]).is_err());
    }

    #[test]
    fn cost_serde_shape() {
        let json = serde_json::to_string(&CostFunction::Linear(vec![1.0, 2.0])).unwrap();
        assert_eq!(json, r#"{"kind":"linear","params":[1.0,2.0]}"#);
        let fair: CostFunction = serde_json::from_str(r#"{"kind":"fair"}"#).unwrap();
        assert_eq!(fair, CostFunction::Fair);
    }
}
