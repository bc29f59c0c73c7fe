//! Exhaustive reference computations.
//!
//! Nothing here is on a solver path. These functions enumerate partitions,
//! subsets and integer boxes directly so that the solvers can be checked
//! against definitions rather than against each other. All of them are
//! exponential and meant for a handful of users.

use crate::model::{CutSetOracle, UserSubset};
use crate::ratealloc::CostFunction;

/// Relative tolerance used when comparing floating-point costs.
pub const COST_TOLERANCE: f64 = 1e-9;

/// Whether two costs agree within [`COST_TOLERANCE`].
pub fn costs_agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= COST_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Every partition of `s` into non-empty blocks. The empty set has exactly
/// one partition, the empty one.
pub fn set_partitions(s: UserSubset) -> Vec<Vec<UserSubset>> {
    let Some(first) = s.iter().next() else {
        return vec![Vec::new()];
    };
    let rest = s.without(first);
    let mut out = Vec::new();
    for extra in rest.subsets() {
        let block = extra.with(first);
        for mut tail in set_partitions(rest.difference(extra)) {
            tail.insert(0, block);
            out.push(tail);
        }
    }
    out
}

/// Dilworth truncation `g_β(S) = min over partitions P of S of Σ_{V∈P} f_β(V)`,
/// by listing every partition.
pub fn dilworth_value(oracle: &CutSetOracle, beta: i64, s: UserSubset) -> i64 {
    set_partitions(s)
        .iter()
        .map(|p| p.iter().map(|&v| oracle.cut_set_f(beta, v)).sum())
        .min()
        .expect("at least one partition")
}

/// Restriction of `g_β` by capacities: `min over V ⊆ S of g_β(V) + c(S∖V)`.
pub fn restriction_value(oracle: &CutSetOracle, beta: i64, caps: &[i64], s: UserSubset) -> i64 {
    s.subsets()
        .map(|v| dilworth_value(oracle, beta, v) + s.difference(v).sum_of(caps))
        .min()
        .expect("at least the empty subset")
}

/// `R ∈ P(f)`: `R(S) ≤ f(S)` for every non-empty `S`.
pub fn in_polyhedron<F: Fn(UserSubset) -> i64>(f: F, m: usize, rates: &[i64]) -> bool {
    UserSubset::full(m)
        .subsets()
        .skip(1)
        .all(|s| s.sum_of(rates) <= f(s))
}

/// `R ∈ B(f)`: in the polyhedron with `R(M) = f(M)`.
pub fn in_base<F: Fn(UserSubset) -> i64>(f: F, m: usize, rates: &[i64]) -> bool {
    rates.iter().sum::<i64>() == f(UserSubset::full(m)) && in_polyhedron(f, m, rates)
}

/// Every integer vector `v` with `0 ≤ v_i ≤ bounds[i]`, in odometer order
/// (first coordinate fastest).
pub fn box_points(bounds: &[i64]) -> impl Iterator<Item = Vec<i64>> + '_ {
    let mut next = if bounds.iter().all(|&b| b >= 0) {
        Some(vec![0i64; bounds.len()])
    } else {
        None
    };
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut step = current.clone();
        for (k, v) in step.iter_mut().enumerate() {
            if *v < bounds[k] {
                *v += 1;
                next = Some(step);
                break;
            }
            *v = 0;
        }
        Some(current)
    })
}

/// Per-user box `[0, min(N, c_i)]`: no useful rate exceeds the file size.
pub fn search_box(oracle: &CutSetOracle, caps: Option<&[i64]>) -> Vec<i64> {
    let n = oracle.packets() as i64;
    (0..oracle.users())
        .map(|i| caps.map_or(n, |c| c[i].min(n)))
        .collect()
}

/// Every cut-set feasible vector in the search box.
pub fn feasible_points(oracle: &CutSetOracle, caps: Option<&[i64]>) -> Vec<Vec<i64>> {
    box_points(&search_box(oracle, caps))
        .filter(|r| oracle.in_rate_region(r))
        .collect()
}

/// Cheapest of `points` that, when `beta` is given, sums to it. Among
/// vectors of equal cost the one with the smallest sum wins, so the returned
/// sum is the smallest optimal budget.
pub fn cheapest_point(
    points: &[Vec<i64>],
    cost: &CostFunction,
    beta: Option<i64>,
) -> Option<(f64, Vec<i64>)> {
    let mut best: Option<(f64, &Vec<i64>)> = None;
    for r in points {
        let sum: i64 = r.iter().sum();
        if beta.is_some_and(|b| sum != b) {
            continue;
        }
        let v = cost.total(r);
        let better = match best {
            None => true,
            Some((bv, br)) if costs_agree(v, bv) => sum < br.iter().sum::<i64>(),
            Some((bv, _)) => v < bv,
        };
        if better {
            best = Some((v, r));
        }
    }
    best.map(|(v, r)| (v, r.clone()))
}

/// Cheapest cut-set feasible vector in the box, optionally at a fixed sum.
pub fn exhaustive_min(
    oracle: &CutSetOracle,
    cost: &CostFunction,
    caps: Option<&[i64]>,
    beta: Option<i64>,
) -> Option<(f64, Vec<i64>)> {
    cheapest_point(&feasible_points(oracle, caps), cost, beta)
}

/// Least sum over all cut-set feasible vectors in the box.
pub fn exhaustive_min_sum(oracle: &CutSetOracle, caps: Option<&[i64]>) -> Option<i64> {
    box_points(&search_box(oracle, caps))
        .filter(|r| oracle.in_rate_region(r))
        .map(|r| r.iter().sum())
        .min()
}

/// Users whose unit increment keeps `rates` inside `P(f_β)`, checked
/// against every constraint.
pub fn brute_t_set(oracle: &CutSetOracle, beta: i64, rates: &[i64]) -> UserSubset {
    let m = oracle.users();
    UserSubset::from_users((0..m).filter(|&i| {
        let mut r = rates.to_vec();
        r[i] += 1;
        in_polyhedron(|s| oracle.cut_set_f(beta, s), m, &r)
    }))
}

/// `max R_i + Σ λ_k R_k` over non-negative integer vectors on `others ∪ {i}`
/// satisfying `R(S ∪ {i}) ≤ f_β(S ∪ {i})` for all `S ⊆ others`. Requires
/// `f_β` to be non-negative on singletons so the optimum is a non-negative
/// integer point; the box `[0, β]` then contains it.
pub fn brute_dual_max(
    oracle: &CutSetOracle,
    beta: i64,
    pinned: usize,
    others: &[usize],
    lambda: &[f64],
) -> f64 {
    let k = others.len();
    let bounds = vec![beta.max(0); k + 1];
    let mut best = f64::NEG_INFINITY;
    for r in box_points(&bounds) {
        // r[0] is the pinned user, r[1..] follow `others`
        let ok = (0u32..1 << k).all(|mask| {
            let mut s = UserSubset::singleton(pinned);
            let mut sum = r[0];
            for (b, &u) in others.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    s = s.with(u);
                    sum += r[b + 1];
                }
            }
            sum <= oracle.cut_set_f(beta, s)
        });
        if ok {
            let v = r[0] as f64
                + lambda
                    .iter()
                    .zip(&r[1..])
                    .map(|(l, &x)| l * x as f64)
                    .sum::<f64>();
            best = best.max(v);
        }
    }
    best
}

/// First pair `(S, T)` breaking `f(S) + f(T) ≥ f(S ∪ T) + f(S ∩ T)`.
/// With `intersecting_only` disjoint pairs are skipped.
pub fn submodularity_violation(
    oracle: &CutSetOracle,
    beta: i64,
    intersecting_only: bool,
) -> Option<(UserSubset, UserSubset)> {
    let all = oracle.all_users();
    let f = |s| oracle.cut_set_f(beta, s);
    for s in all.subsets() {
        for t in all.subsets() {
            if intersecting_only && s.intersection(t).is_empty() {
                continue;
            }
            if f(s) + f(t) < f(s.union(t)) + f(s.intersection(t)) {
                return Some((s, t));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;
    use crate::model::example1;

    fn ex1() -> CutSetOracle {
        CutSetOracle::new(example1(FieldSpec::new(257).unwrap()))
    }

    fn set(users: &[usize]) -> UserSubset {
        UserSubset::from_users(users.iter().map(|u| u - 1))
    }

    #[test]
    fn partition_counts_are_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203];
        for (n, &b) in bell.iter().enumerate() {
            assert_eq!(set_partitions(UserSubset::full(n)).len(), b);
        }
        for p in set_partitions(UserSubset::full(4)) {
            let union = p.iter().fold(UserSubset::EMPTY, |a, &b| a.union(b));
            assert_eq!(union, UserSubset::full(4));
            assert_eq!(p.iter().map(|b| b.len()).sum::<usize>(), 4);
        }
    }

    #[test]
    fn truncation_values() {
        let o = ex1();
        assert_eq!(dilworth_value(&o, 4, set(&[1, 2, 3])), 3);
        assert_eq!(dilworth_value(&o, 5, set(&[1, 2, 3])), 5);
        assert_eq!(dilworth_value(&o, 5, set(&[1, 3])), 4);
        for i in 1..=3 {
            assert_eq!(dilworth_value(&o, 5, set(&[i])), o.cut_set_f(5, set(&[i])));
        }
        assert_eq!(dilworth_value(&o, 5, UserSubset::EMPTY), 0);
    }

    #[test]
    fn restriction_values() {
        let o = ex1();
        assert_eq!(restriction_value(&o, 5, &[2, 2, 2], set(&[1, 2, 3])), 5);
        assert_eq!(restriction_value(&o, 5, &[2, 2, 2], UserSubset::EMPTY), 0);
        for s in o.all_users().subsets() {
            assert_eq!(
                restriction_value(&o, 5, &[6, 6, 6], s),
                dilworth_value(&o, 5, s)
            );
        }
    }

    #[test]
    fn box_enumeration() {
        let pts: Vec<_> = box_points(&[1, 2]).collect();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec![1, 0]);
        assert_eq!(box_points(&[]).count(), 1);
        assert_eq!(box_points(&[-1]).count(), 0);
    }

    #[test]
    fn exhaustive_running_example() {
        let o = ex1();
        assert_eq!(exhaustive_min_sum(&o, None), Some(5));
        let (v, r) = exhaustive_min(
            &o,
            &CostFunction::Linear(vec![1.0, 3.0, 2.0]),
            None,
            Some(5),
        )
        .unwrap();
        assert_eq!((v, r), (10.0, vec![1, 1, 3]));
        assert!(exhaustive_min(&o, &CostFunction::unit(3), None, Some(4)).is_none());
        assert_eq!(brute_t_set(&o, 5, &[0, 0, 0]), set(&[1, 2, 3]));
        assert_eq!(brute_t_set(&o, 5, &[1, 0, 0]), set(&[2, 3]));
    }

    #[test]
    fn rate_region_membership() {
        let o = ex1();
        assert!(o.in_rate_region(&[1, 1, 3]));
        assert!(o.in_rate_region(&[1, 2, 2]));
        assert!(!o.in_rate_region(&[0, 0, 0]));
        assert!(!o.in_rate_region(&[0, 2, 3]));
        assert!(!o.in_rate_region(&[1, 2]));
    }

    #[test]
    fn cut_set_function_submodularity() {
        let o = ex1();
        for beta in 0..=8 {
            assert_eq!(submodularity_violation(&o, beta, true), None, "β = {beta}");
        }
        for beta in 6..=8 {
            assert_eq!(submodularity_violation(&o, beta, false), None, "β = {beta}");
        }
        // below N disjoint pairs can fail
        assert!(submodularity_violation(&o, 5, false).is_some());
    }
}
