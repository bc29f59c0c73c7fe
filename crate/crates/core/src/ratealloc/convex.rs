use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::{CutSetOracle, UserSubset};
use crate::sfm::GroundSet;

use super::{
    min_sum_rate, modified_edmonds, AllocError, Backend, CapacityVector, CostFunction, RateVector,
    DERIVATIVE_TIE_TOLERANCE,
};

/// Result of the incremental allocator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexAllocation {
    pub rates: RateVector,
    /// `T_j` for every round: users whose unit increment stays inside the
    /// polyhedron, before capacity filtering.
    pub rounds: Vec<UserSubset>,
    /// Zero-based user picked in each round.
    pub picks: Vec<usize>,
}

/// Optimal budget together with its allocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimum {
    pub beta: i64,
    pub value: f64,
    pub rates: RateVector,
}

/// Whether the zero vector lies in `P(f_β)`. Every base vector is
/// non-negative and `P(f_β)` is closed downwards, so failing this means the
/// base polyhedron is empty.
pub fn zero_is_feasible(oracle: &CutSetOracle, beta: i64) -> bool {
    if beta < 0 {
        return false;
    }
    if oracle.users() == 1 {
        return true;
    }
    // f_β grows with S on proper subsets and tops out at β, so singletons
    // carry the binding constraints.
    (0..oracle.users()).all(|i| oracle.cut_set_f(beta, UserSubset::singleton(i)) >= 0)
}

/// Incremental allocation: `beta` rounds, each giving one more symbol to the
/// admissible user with the smallest marginal cost (ties by index).
pub fn convex_alloc(
    oracle: &CutSetOracle,
    beta: i64,
    cost: &CostFunction,
    caps: &CapacityVector,
    backend: Backend,
) -> Result<ConvexAllocation, AllocError> {
    let m = oracle.users();
    if beta < 0 {
        return Err(AllocError::NegativeBudget(beta));
    }
    cost.validate(m)?;
    caps.validate(m)?;
    backend.validate(oracle)?;
    if !zero_is_feasible(oracle, beta) {
        return Err(AllocError::Infeasible { beta, achieved: 0 });
    }

    let everyone = oracle.all_users();
    let mut rates = RateVector::zeros(m);
    let mut rounds = Vec::with_capacity(beta as usize);
    let mut picks = Vec::with_capacity(beta as usize);
    for round in 0..beta {
        let admissible = UserSubset::from_users((0..m).filter(|&i| {
            let ground = GroundSet::new(i, everyone.without(i));
            backend.coordinate(oracle, beta, &rates, ground) - rates[i] >= 1
        }));
        rounds.push(admissible);
        let pick = cheapest(admissible.iter().filter(|&i| rates[i] < caps.cap(i)), |i| {
            cost.derivative(i, rates[i] + 1)
        });
        let Some(user) = pick else {
            return Err(AllocError::Infeasible {
                beta,
                achieved: round,
            });
        };
        rates.increment(user);
        picks.push(user);
    }
    Ok(ConvexAllocation {
        rates,
        rounds,
        picks,
    })
}

/// Lowest-index user whose marginal cost is within tolerance of the minimum.
pub(crate) fn cheapest<I, F>(candidates: I, marginal: F) -> Option<usize>
where
    I: Iterator<Item = usize>,
    F: Fn(usize) -> f64,
{
    cheapest_tied(candidates, marginal).first().copied()
}

/// All users whose marginal cost is within tolerance of the minimum, in
/// increasing order.
pub(crate) fn cheapest_tied<I, F>(candidates: I, marginal: F) -> Vec<usize>
where
    I: Iterator<Item = usize>,
    F: Fn(usize) -> f64,
{
    let scored: Vec<(usize, f64)> = candidates.map(|i| (i, marginal(i))).collect();
    let best = scored.iter().map(|&(_, d)| d).fold(f64::INFINITY, f64::min);
    let mut tied: Vec<usize> = scored
        .into_iter()
        .filter(|&(_, d)| d - best <= DERIVATIVE_TIE_TOLERANCE)
        .map(|(i, _)| i)
        .collect();
    tied.sort_unstable();
    tied
}

/// `h(β)`: the minimum cost at sum-rate `beta`, with the allocation that
/// attains it. Linear costs go through the greedy sweep.
pub fn eval_h(
    oracle: &CutSetOracle,
    beta: i64,
    cost: &CostFunction,
    caps: &CapacityVector,
    backend: Backend,
) -> Result<(f64, RateVector), AllocError> {
    let rates = match cost {
        CostFunction::Linear(w) => modified_edmonds(oracle, beta, w, caps, backend)?,
        _ => convex_alloc(oracle, beta, cost, caps, backend)?.rates,
    };
    Ok((cost.total(&rates), rates))
}

/// Minimizes `h` over feasible budgets. `h` is convex on the feasible range
/// and its minimizer is at most `N`, so a binary search for the first
/// non-negative forward difference on `[β_min, min(N, Σc)]` finds the
/// smallest minimizer.
pub fn min_cost(
    oracle: &CutSetOracle,
    cost: &CostFunction,
    caps: &CapacityVector,
    backend: Backend,
) -> Result<Optimum, AllocError> {
    cost.validate(oracle.users())?;
    let lo = min_sum_rate(oracle, caps, backend)?;
    let hi = (oracle.packets() as i64).min(caps.total());
    search_convex(lo, hi, |beta| eval_h(oracle, beta, cost, caps, backend))
}

/// Smallest minimizer of a convex function on `[lo, hi]`, every point of
/// which must evaluate successfully.
pub(crate) fn search_convex<E, F>(mut lo: i64, mut hi: i64, mut eval: F) -> Result<Optimum, E>
where
    F: FnMut(i64) -> Result<(f64, RateVector), E>,
{
    let mut memo: BTreeMap<i64, (f64, RateVector)> = BTreeMap::new();
    let mut h = |beta: i64| -> Result<f64, E> {
        if let Some((v, _)) = memo.get(&beta) {
            return Ok(*v);
        }
        let (v, r) = eval(beta)?;
        memo.insert(beta, (v, r));
        Ok(v)
    };
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let here = h(mid)?;
        let next = h(mid + 1)?;
        if next >= here - tie_tolerance(here) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let value = h(lo)?;
    let rates = memo.remove(&lo).expect("evaluated").1;
    Ok(Optimum {
        beta: lo,
        value,
        rates,
    })
}

fn tie_tolerance(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;
    use crate::model::{example1, raw_instance};

    fn ex1() -> CutSetOracle {
        CutSetOracle::new(example1(FieldSpec::new(257).unwrap()))
    }

    fn set(users: &[usize]) -> UserSubset {
        UserSubset::from_users(users.iter().map(|u| u - 1))
    }

    #[test]
    fn fair_allocation_and_trace() {
        let a = convex_alloc(
            &ex1(),
            5,
            &CostFunction::Fair,
            &CapacityVector::unbounded(),
            Backend::Sfm,
        )
        .unwrap();
        assert_eq!(&*a.rates, &[1, 2, 2]);
        assert_eq!(
            a.rounds,
            vec![
                set(&[1, 2, 3]),
                set(&[2, 3]),
                set(&[2, 3]),
                set(&[2, 3]),
                set(&[2, 3])
            ]
        );
        assert_eq!(a.picks, vec![0, 1, 2, 1, 2]);
    }

    #[test]
    fn linear_cost_agrees_with_greedy_sweep() {
        let o = ex1();
        let cost = CostFunction::Linear(vec![1.0, 3.0, 2.0]);
        let a = convex_alloc(&o, 5, &cost, &CapacityVector::unbounded(), Backend::Sfm).unwrap();
        assert_eq!(cost.total(&a.rates), 10.0);
        let (v, r) = eval_h(&o, 5, &cost, &CapacityVector::unbounded(), Backend::Sfm).unwrap();
        assert_eq!((v, &*r), (10.0, &[1, 1, 3][..]));
        let (v, r) = eval_h(
            &o,
            5,
            &CostFunction::Linear(vec![2.0, 1.0, 3.0]),
            &CapacityVector::unbounded(),
            Backend::Sfm,
        )
        .unwrap();
        assert_eq!((v, &*r), (8.0, &[1, 3, 1][..]));
    }

    #[test]
    fn infeasible_budgets() {
        let o = ex1();
        let none = CapacityVector::unbounded();
        assert!(matches!(
            convex_alloc(&o, 4, &CostFunction::Fair, &none, Backend::Sfm),
            Err(AllocError::Infeasible { beta: 4, .. })
        ));
        // zero vector already violates f_3({1}) = -1
        assert_eq!(
            convex_alloc(&o, 3, &CostFunction::Fair, &none, Backend::Sfm),
            Err(AllocError::Infeasible {
                beta: 3,
                achieved: 0
            })
        );
        assert!(eval_h(&o, 2, &CostFunction::unit(3), &none, Backend::Sfm).is_err());
    }

    #[test]
    fn min_cost_examples() {
        let o = ex1();
        let none = CapacityVector::unbounded();
        let opt = min_cost(&o, &CostFunction::unit(3), &none, Backend::Sfm).unwrap();
        assert_eq!((opt.beta, opt.value), (5, 5.0));
        let opt = min_cost(&o, &CostFunction::Fair, &none, Backend::Sfm).unwrap();
        assert_eq!(opt.beta, 5);
        assert_eq!(&*opt.rates, &[1, 2, 2]);

        let solo =
            CutSetOracle::new(raw_instance(FieldSpec::new(5).unwrap(), 2, &[&[0, 1]]).unwrap());
        let opt = min_cost(&solo, &CostFunction::Fair, &none, Backend::Sfm).unwrap();
        assert_eq!((opt.beta, opt.value, &*opt.rates), (0, 0.0, &[0][..]));
    }

    #[test]
    fn capacity_filter_in_incremental_allocator() {
        let o = ex1();
        let caps = CapacityVector::new(vec![1, 2, 2]).unwrap();
        let a = convex_alloc(&o, 5, &CostFunction::unit(3), &caps, Backend::Sfm).unwrap();
        assert_eq!(&*a.rates, &[1, 2, 2]);
        let tight = CapacityVector::new(vec![1, 1, 2]).unwrap();
        assert!(matches!(
            convex_alloc(&o, 5, &CostFunction::unit(3), &tight, Backend::Sfm),
            Err(AllocError::Infeasible {
                beta: 5,
                achieved: 4
            })
        ));
    }

    #[test]
    fn cheapest_breaks_ties_by_index() {
        assert_eq!(cheapest([2, 0, 1].into_iter(), |_| 1.0), Some(0));
        assert_eq!(
            cheapest([0, 1].into_iter(), |i| [1.0, 1.0 - 1e-13][i]),
            Some(0)
        );
        assert_eq!(cheapest([0, 1].into_iter(), |i| [1.0, 0.5][i]), Some(1));
        assert_eq!(cheapest(std::iter::empty(), |_| 0.0), None);
    }
}
