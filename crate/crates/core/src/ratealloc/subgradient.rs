//! Dual subgradient computation of a single coordinate maximum.
//!
//! For a pinned user `i` and fixed rates `R*` on the free users, the largest
//! feasible `R_i` equals the minimum over `λ ≥ 0` of the dual function
//!
//! ```text
//! δ(λ) = max { R_i + Σ λ_k R_k : R(S ∪ {i}) ≤ f_β(S ∪ {i}) for all S } − Σ λ_k R*_k
//! ```
//!
//! The inner maximum is a greedy over a submodular polyhedron
//! ([`dual_maximizer`]). Projected subgradient steps with a constant step
//! size drive the best dual value to within `ε < 1/2` of the integer optimum,
//! which is then recovered by rounding.

use serde::{Deserialize, Serialize};

use crate::model::{CutSetOracle, UserSubset};
use crate::sfm::GroundSet;

use super::AllocError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgradientConfig {
    /// Constant step size; must stay below `1 / (2N²)`.
    pub theta: f64,
    /// Number of iterations `l`; must exceed `m² / (θ (1 − 2N²θ))`.
    pub iterations: usize,
    /// Accuracy target for the best dual value; below `1/2`.
    pub epsilon: f64,
}

impl SubgradientConfig {
    /// `θ = 1/(4N²)`, the smallest admissible integer `l` plus one, and
    /// `ε = 0.49`.
    pub fn default_for(users: usize, packets: usize) -> Self {
        let n2 = (packets.max(1) * packets.max(1)) as f64;
        let theta = 1.0 / (4.0 * n2);
        Self {
            theta,
            iterations: Self::iteration_floor(users, packets, theta).ceil() as usize + 1,
            epsilon: 0.49,
        }
    }

    /// `m² / (θ (1 − 2N²θ))`.
    fn iteration_floor(users: usize, packets: usize, theta: f64) -> f64 {
        let n2 = (packets * packets) as f64;
        (users * users) as f64 / (theta * (1.0 - 2.0 * n2 * theta))
    }

    pub fn validate(&self, users: usize, packets: usize) -> Result<(), AllocError> {
        let n2 = (packets * packets) as f64;
        if !(self.theta > 0.0 && self.theta < 1.0 / (2.0 * n2)) {
            return Err(AllocError::InvalidConfig(format!(
                "step {} must lie in (0, 1/(2N²)) = (0, {})",
                self.theta,
                1.0 / (2.0 * n2)
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(AllocError::InvalidConfig(format!(
                "tolerance {} must lie in (0, 0.5)",
                self.epsilon
            )));
        }
        let floor = Self::iteration_floor(users, packets, self.theta);
        if (self.iterations as f64) <= floor {
            return Err(AllocError::InvalidConfig(format!(
                "{} iterations do not exceed the bound {floor:.1}",
                self.iterations
            )));
        }
        Ok(())
    }
}

/// Maximizer of `R_i + Σ λ_k R_k` over the coordinate region of a pinned
/// user. `others[k]` pairs with `lambda[k]` and with the output entry
/// `others[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualPoint {
    pub pinned: i64,
    pub others: Vec<i64>,
}

/// Greedy maximizer: visit the free users by non-increasing multiplier (ties
/// by user index). The pinned user takes `f_β({i})` when no multiplier
/// exceeds one and nothing otherwise; each free user then takes whatever
/// the chain `f_β(S_t(k) ∪ {i})` leaves.
pub fn dual_maximizer(
    oracle: &CutSetOracle,
    beta: i64,
    pinned: usize,
    others: &[usize],
    lambda: &[f64],
) -> DualPoint {
    assert_eq!(others.len(), lambda.len());
    let mut order: Vec<usize> = (0..others.len()).collect();
    order.sort_by(|&a, &b| {
        lambda[b]
            .total_cmp(&lambda[a])
            .then(others[a].cmp(&others[b]))
    });

    let base = UserSubset::singleton(pinned);
    let pinned_rate = match order.first() {
        Some(&top) if lambda[top] > 1.0 => 0,
        _ => oracle.cut_set_f(beta, base),
    };
    let mut out = vec![0i64; others.len()];
    let mut chain = base;
    let mut spent = pinned_rate;
    for k in order {
        chain = chain.with(others[k]);
        let r = oracle.cut_set_f(beta, chain) - spent;
        out[k] = r;
        spent += r;
    }
    DualPoint {
        pinned: pinned_rate,
        others: out,
    }
}

/// Largest feasible value of the pinned coordinate given `rates` on the free
/// users, by projected dual subgradient descent from `λ = 0`.
pub fn subgrad_coordinate(
    oracle: &CutSetOracle,
    beta: i64,
    rates: &[i64],
    ground: GroundSet,
    cfg: &SubgradientConfig,
) -> i64 {
    let pinned = ground.pinned();
    let others: Vec<usize> = ground.free().iter().collect();
    if others.is_empty() {
        return oracle.cut_set_f(beta, UserSubset::singleton(pinned));
    }
    let fixed: Vec<f64> = others.iter().map(|&k| rates[k] as f64).collect();
    let mut lambda = vec![0.0f64; others.len()];
    let mut best = f64::INFINITY;
    for step in 0..=cfg.iterations {
        let point = dual_maximizer(oracle, beta, pinned, &others, &lambda);
        let grad: Vec<f64> = point
            .others
            .iter()
            .zip(&fixed)
            .map(|(&r, &f)| r as f64 - f)
            .collect();
        let dual = point.pinned as f64 + lambda.iter().zip(&grad).map(|(l, g)| l * g).sum::<f64>();
        best = best.min(dual);
        // A zero subgradient certifies that λ is a dual optimum.
        if step == cfg.iterations || grad.iter().all(|&g| g == 0.0) {
            break;
        }
        for (l, g) in lambda.iter_mut().zip(&grad) {
            *l = (*l - cfg.theta * g).max(0.0);
        }
    }
    best.round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;
    use crate::model::example1;

    fn ex1() -> CutSetOracle {
        CutSetOracle::new(example1(FieldSpec::new(257).unwrap()))
    }

    #[test]
    fn default_config_satisfies_bounds() {
        for (m, n) in [(1, 1), (3, 6), (4, 6), (12, 32)] {
            let cfg = SubgradientConfig::default_for(m, n);
            assert!(cfg.validate(m, n).is_ok(), "{m} {n}");
            assert_eq!(cfg.theta, 1.0 / (4.0 * (n * n) as f64));
            assert_eq!(cfg.iterations, 8 * m * m * n * n + 1);
        }
        let mut cfg = SubgradientConfig::default_for(3, 6);
        cfg.theta = 1.0 / 72.0;
        assert!(cfg.validate(3, 6).is_err());
        cfg = SubgradientConfig::default_for(3, 6);
        cfg.iterations = 8 * 9 * 36;
        assert!(cfg.validate(3, 6).is_err());
        cfg = SubgradientConfig::default_for(3, 6);
        cfg.epsilon = 0.5;
        assert!(cfg.validate(3, 6).is_err());
    }

    #[test]
    fn running_example_coordinates() {
        let o = ex1();
        let cfg = SubgradientConfig::default_for(3, 6);
        let one = |pinned, free: &[usize], rates: &[i64]| {
            subgrad_coordinate(
                &o,
                5,
                rates,
                GroundSet::new(pinned, UserSubset::from_users(free.iter().copied())),
                &cfg,
            )
        };
        assert_eq!(one(0, &[], &[0, 0, 0]), 1);
        assert_eq!(one(2, &[0], &[1, 0, 0]), 3);
        assert_eq!(one(1, &[0, 2], &[1, 0, 3]), 1);
    }

    #[test]
    fn maximizer_cases() {
        let o = ex1();
        // λ = 0: pinned user 3 takes f_5({3}) = 3, then user 1 fills to f_5({1,3}) = 5
        let p = dual_maximizer(&o, 5, 2, &[0], &[0.0]);
        assert_eq!(
            p,
            DualPoint {
                pinned: 3,
                others: vec![2]
            }
        );
        // λ > 1: pinned user yields
        let p = dual_maximizer(&o, 5, 2, &[0], &[2.0]);
        assert_eq!(
            p,
            DualPoint {
                pinned: 0,
                others: vec![5]
            }
        );
        // no free users
        let p = dual_maximizer(&o, 5, 1, &[], &[]);
        assert_eq!(
            p,
            DualPoint {
                pinned: 3,
                others: vec![]
            }
        );
        // ordering by multiplier: user 3 before user 1
        let p = dual_maximizer(&o, 5, 1, &[0, 2], &[0.5, 0.7]);
        // f({2}) = 3, f({2,3}) = 4 -> 1, f({1,2,3}) = 5 -> 1
        assert_eq!(
            p,
            DualPoint {
                pinned: 3,
                others: vec![1, 1]
            }
        );
    }
}
