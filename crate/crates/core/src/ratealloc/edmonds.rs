use crate::model::{CutSetOracle, UserSubset};
use crate::sfm::GroundSet;

use super::{AllocError, Backend, CapacityVector, RateVector};

/// Greedy sweep over users in non-decreasing weight order (ties by index).
/// Each coordinate is raised to the polyhedron boundary given the users
/// already fixed, then clipped to its capacity. The result lies in the base
/// polyhedron exactly when it sums to `beta`; otherwise the budget (or the
/// capacity vector) is infeasible and the reached sum is reported.
pub fn modified_edmonds(
    oracle: &CutSetOracle,
    beta: i64,
    weights: &[f64],
    caps: &CapacityVector,
    backend: Backend,
) -> Result<RateVector, AllocError> {
    let m = oracle.users();
    if beta < 0 {
        return Err(AllocError::NegativeBudget(beta));
    }
    super::CostFunction::Linear(weights.to_vec()).validate(m)?;
    caps.validate(m)?;
    backend.validate(oracle)?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));

    let mut rates = vec![0i64; m];
    let mut prefix = UserSubset::EMPTY;
    for user in order {
        let reach = backend.coordinate(oracle, beta, &rates, GroundSet::new(user, prefix));
        rates[user] = reach.min(caps.cap(user));
        prefix = prefix.with(user);
    }
    let achieved: i64 = rates.iter().sum();
    if achieved == beta {
        Ok(RateVector(rates))
    } else {
        Err(AllocError::Infeasible { beta, achieved })
    }
}

/// Least feasible sum-rate, found by binary search with unit weights. With
/// capacities the feasible sums form an interval ending at `Σ c_i`, so the
/// search runs on `[0, min(N, Σ c_i)]` and fails if even the top is
/// infeasible.
pub fn min_sum_rate(
    oracle: &CutSetOracle,
    caps: &CapacityVector,
    backend: Backend,
) -> Result<i64, AllocError> {
    let m = oracle.users();
    caps.validate(m)?;
    let unit = vec![1.0; m];
    let feasible = |beta: i64| modified_edmonds(oracle, beta, &unit, caps, backend);

    let mut hi = (oracle.packets() as i64).min(caps.total());
    feasible(hi)?;
    let mut lo = 0i64;
    // invariant: hi feasible; everything below lo infeasible
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match feasible(mid) {
            Ok(_) => hi = mid,
            Err(AllocError::Infeasible { .. }) => lo = mid + 1,
            Err(e) => return Err(e),
        }
    }
    Ok(hi)
}
