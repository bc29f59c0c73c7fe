//! Cross-checks of the solvers against the exhaustive references in
//! [`crate::oracle`], the worked running-example values, and the random
//! coding success rate. These back `dexchange validate` and the acceptance
//! tests.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::gf::{EchelonBasis, Elem, FMatrix, FieldSpec};
use crate::model::{
    example1, generate_instance, CutSetOracle, GenerateSpec, InstanceKind, UserSubset,
};
use crate::netcode::{
    randomized_alloc, randomized_alloc_with, rlnc_trials, verify_decodable, CoefficientSource,
    NetcodeError, RandomSource, RngSpec, ScriptedSource, TrialStats,
};
use crate::oracle::{
    box_points, brute_dual_max, brute_t_set, cheapest_point, costs_agree, dilworth_value,
    feasible_points, in_base, in_polyhedron, restriction_value, search_box,
    submodularity_violation,
};
use crate::ratealloc::{
    convex_alloc, dual_maximizer, eval_h, min_cost, min_sum_rate, modified_edmonds,
    zero_is_feasible, AllocError, Backend, CapacityVector, CostFunction, RateVector,
};
use crate::sfm::GroundSet;

/// Fields drawn by the random suite.
pub const SUITE_FIELDS: [u32; 4] = [2, 3, 5, 257];

/// Counterexamples kept per property.
const MAX_REPORTED: usize = 10;

/// Size limits and seed for the random suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub max_m: usize,
    pub max_n: usize,
    pub cases: usize,
    pub seed: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            max_m: 4,
            max_n: 6,
            cases: 50,
            seed: 0,
        }
    }
}

/// One random instance with the costs and capacities checked on it.
#[derive(Debug)]
pub struct Case {
    pub index: usize,
    pub kind: InstanceKind,
    pub oracle: CutSetOracle,
    pub weights: Vec<f64>,
    pub table: CostFunction,
    /// Always used by the restriction checks; applied to the solver checks
    /// only when `capped`.
    pub caps: Vec<i64>,
    pub capped: bool,
    pub seed: u64,
}

impl Case {
    pub fn label(&self) -> String {
        let o = &self.oracle;
        format!(
            "case {} (m={}, N={}, q={}, {:?}{})",
            self.index,
            o.users(),
            o.packets(),
            o.instance().field().order(),
            self.kind,
            if self.capped { ", capped" } else { "" }
        )
    }

    pub fn costs(&self) -> [CostFunction; 3] {
        [
            CostFunction::Linear(self.weights.clone()),
            CostFunction::Fair,
            self.table.clone(),
        ]
    }

    pub fn cap_vector(&self) -> CapacityVector {
        if self.capped {
            CapacityVector::new(self.caps.clone()).expect("non-negative")
        } else {
            CapacityVector::unbounded()
        }
    }

    pub fn cap_slice(&self) -> Option<&[i64]> {
        self.capped.then_some(self.caps.as_slice())
    }

    fn n(&self) -> i64 {
        self.oracle.packets() as i64
    }
}

/// Deterministic random instances within `bounds`; case `k` uses stream `k`.
pub fn suite_cases(bounds: &Bounds) -> Vec<Case> {
    (0..bounds.cases)
        .into_par_iter()
        .map(|k| make_case(bounds, k))
        .collect()
}

fn make_case(bounds: &Bounds, index: usize) -> Case {
    let mut rng = RngSpec::new(bounds.seed)
        .with_stream(index as u64)
        .generator();
    loop {
        let m = rng.random_range(1..=bounds.max_m.max(1));
        let n = rng.random_range(1..=bounds.max_n.max(1));
        let q = SUITE_FIELDS[rng.random_range(0..SUITE_FIELDS.len())];
        let kind = if rng.random_bool(0.5) {
            InstanceKind::Raw
        } else {
            InstanceKind::Coded
        };
        let coverage: Vec<usize> = (0..m).map(|_| rng.random_range(0..=n)).collect();
        if coverage.iter().sum::<usize>() < n {
            continue;
        }
        let spec = GenerateSpec {
            kind,
            packets: n,
            field: FieldSpec::new(q).expect("prime"),
            coverage,
            seed: rng.random(),
        };
        let Ok(instance) = generate_instance(&spec) else {
            continue;
        };
        let weights = (0..m).map(|_| rng.random_range(1..=4) as f64).collect();
        let table = CostFunction::Table(
            (0..m)
                .map(|_| {
                    let mut d = rng.random_range(0..=2) as f64;
                    (0..n)
                        .map(|_| {
                            let here = d;
                            d += rng.random_range(0..=2) as f64;
                            here
                        })
                        .collect()
                })
                .collect(),
        );
        let caps = (0..m).map(|_| rng.random_range(0..=n as i64)).collect();
        return Case {
            index,
            kind,
            oracle: CutSetOracle::new(instance),
            weights,
            table,
            caps,
            capped: rng.random_bool(0.5),
            seed: rng.random(),
        };
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub case: String,
    pub detail: String,
    /// Instance file contents, when the property is about an instance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caps: Option<Vec<i64>>,
}

/// Result of one property over a set of cases.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub property: String,
    pub checked: usize,
    pub passed: bool,
    pub failures: usize,
    pub counterexamples: Vec<Counterexample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<TrialStats>,
}

impl Outcome {
    fn from_failures(property: &str, checked: usize, found: Vec<Counterexample>) -> Self {
        let failures = found.len();
        Self {
            property: property.to_string(),
            checked,
            passed: failures == 0,
            failures,
            counterexamples: found.into_iter().take(MAX_REPORTED).collect(),
            stats: None,
        }
    }
}

/// A per-case property: pushes a description of each violation.
pub type Check = fn(&Case, &mut Vec<String>);

/// Runs `check` on every case in parallel.
pub fn run_check(property: &str, cases: &[Case], check: Check) -> Outcome {
    let found: Vec<Counterexample> = cases
        .par_iter()
        .flat_map_iter(|c| {
            let mut details = Vec::new();
            check(c, &mut details);
            let instance: Option<serde_json::Value> = (!details.is_empty())
                .then(|| serde_json::to_value(c.oracle.instance().to_file()).expect("serializes"));
            details
                .into_iter()
                .map(|detail| Counterexample {
                    case: c.label(),
                    detail,
                    instance: instance.clone(),
                    caps: Some(c.caps.clone()),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Outcome::from_failures(property, cases.len(), found)
}

/// Every per-case property, by name.
pub const CHECKS: [(&str, Check); 10] = [
    ("cut-set submodularity", check_submodularity),
    ("dilworth truncation", check_truncation),
    ("linear-cost optimality", check_linear),
    ("convex-cost optimality", check_convex),
    ("min-cost optimality", check_min_cost),
    ("convexity of h", check_convexity),
    ("subgradient agreement", check_subgradient),
    ("dual maximizer", check_dual_maximizer),
    ("restriction identity", check_restriction),
    ("transmit-set equivalence", check_t_sets),
];

pub fn property_suite(bounds: &Bounds) -> Vec<Outcome> {
    let cases = suite_cases(bounds);
    CHECKS
        .iter()
        .map(|(name, check)| run_check(name, &cases, *check))
        .collect()
}

/// Intersecting submodularity for budgets up to `N + 1`, full submodularity
/// from `N` on.
pub fn check_submodularity(c: &Case, out: &mut Vec<String>) {
    let o = &c.oracle;
    for beta in 0..=c.n() + 1 {
        if let Some((s, t)) = submodularity_violation(o, beta, true) {
            out.push(format!("β={beta}: intersecting pair {s:?}, {t:?}"));
        }
        if beta >= c.n() {
            if let Some((s, t)) = submodularity_violation(o, beta, false) {
                out.push(format!("β={beta}: pair {s:?}, {t:?}"));
            }
        }
    }
}

/// `g_β ≤ f_β`, `P(g_β) = P(f_β)` on the search box, and `g_β(M) = β`
/// exactly when some feasible vector sums to `β`.
pub fn check_truncation(c: &Case, out: &mut Vec<String>) {
    let o = &c.oracle;
    let m = o.users();
    let all = o.all_users();
    let points = feasible_points(o, None);
    let grid: Vec<Vec<i64>> = box_points(&search_box(o, None)).collect();
    for beta in 0..=c.n() {
        let g: Vec<i64> = all.subsets().map(|s| dilworth_value(o, beta, s)).collect();
        let g_of = |s: UserSubset| g[s.bits() as usize];
        let f_of = |s: UserSubset| o.cut_set_f(beta, s);
        if let Some(s) = all.subsets().find(|&s| g_of(s) > f_of(s)) {
            out.push(format!(
                "β={beta}: g({s:?}) = {} > f = {}",
                g_of(s),
                f_of(s)
            ));
        }
        let reachable = points.iter().any(|r| r.iter().sum::<i64>() == beta);
        if (g_of(all) == beta) != reachable {
            out.push(format!(
                "β={beta}: g(M) = {} but a feasible vector summing to β {}",
                g_of(all),
                if reachable {
                    "exists"
                } else {
                    "does not exist"
                }
            ));
        }
        if let Some(r) = grid
            .iter()
            .find(|r| in_polyhedron(f_of, m, r) != in_polyhedron(g_of, m, r))
        {
            out.push(format!("β={beta}: P(f) and P(g) disagree at {r:?}"));
        }
    }
}

/// Compares a fixed-budget solver result with the exhaustive optimum.
fn compare_budget(
    c: &Case,
    beta: i64,
    cost: &CostFunction,
    what: &str,
    solved: Result<RateVector, AllocError>,
    points: &[Vec<i64>],
    out: &mut Vec<String>,
) {
    let o = &c.oracle;
    let best = cheapest_point(points, cost, Some(beta));
    match (solved, best) {
        (Ok(r), Some((v, opt))) => {
            let got = cost.total(&r);
            if !costs_agree(got, v) {
                out.push(format!(
                    "{what} β={beta}: cost {got} at {:?}, optimum {v} at {opt:?}",
                    &*r
                ));
            }
            let within_caps = c
                .cap_slice()
                .is_none_or(|caps| r.iter().zip(caps).all(|(x, c)| x <= c));
            if r.sum() != beta || !o.in_rate_region(&r) || !within_caps {
                out.push(format!("{what} β={beta}: returned infeasible {:?}", &*r));
            }
        }
        (Err(AllocError::Infeasible { .. }), None) => {}
        (Ok(r), None) => out.push(format!(
            "{what} β={beta}: returned {:?} but no feasible vector exists",
            &*r
        )),
        (Err(AllocError::Infeasible { .. }), Some((v, opt))) => out.push(format!(
            "{what} β={beta}: reported infeasible, but {opt:?} costs {v}"
        )),
        (Err(e), _) => out.push(format!("{what} β={beta}: {e}")),
    }
}

/// Greedy sweep and least sum-rate against enumeration.
pub fn check_linear(c: &Case, out: &mut Vec<String>) {
    let o = &c.oracle;
    let caps = c.cap_vector();
    let points = feasible_points(o, c.cap_slice());
    let least = points.iter().map(|r| r.iter().sum::<i64>()).min();
    match (min_sum_rate(o, &caps, Backend::Sfm), least) {
        (Ok(a), Some(b)) if a == b => {}
        (Err(AllocError::Infeasible { .. }), None) => {}
        (got, want) => out.push(format!("least sum-rate {got:?}, enumeration {want:?}")),
    }
    let cost = CostFunction::Linear(c.weights.clone());
    for beta in 0..=c.n() {
        let r = modified_edmonds(o, beta, &c.weights, &caps, Backend::Sfm);
        compare_budget(c, beta, &cost, "greedy sweep", r, &points, out);
    }
}

/// Incremental allocator for all three cost families against enumeration.
pub fn check_convex(c: &Case, out: &mut Vec<String>) {
    let o = &c.oracle;
    let caps = c.cap_vector();
    let points = feasible_points(o, c.cap_slice());
    for cost in c.costs() {
        for beta in 0..=c.n() {
            let r = convex_alloc(o, beta, &cost, &caps, Backend::Sfm).map(|a| a.rates);
            compare_budget(c, beta, &cost, &format!("{cost:?}"), r, &points, out);
        }
    }
}

/// Optimal budget and value against enumeration over every sum; the optimal
/// budget never exceeds `N`.
pub fn check_min_cost(c: &Case, out: &mut Vec<String>) {
    let o = &c.oracle;
    let caps = c.cap_vector();
    let points = feasible_points(o, c.cap_slice());
    for cost in c.costs() {
        match (
            min_cost(o, &cost, &caps, Backend::Sfm),
            cheapest_point(&points, &cost, None),
        ) {
            (Ok(opt), Some((v, r))) => {
                let beta = r.iter().sum::<i64>();
                if !costs_agree(opt.value, v) || opt.beta != beta {
                    out.push(format!(
                        "{cost:?}: solver β={} value {}, enumeration β={beta} value {v} at {r:?}",
                        opt.beta, opt.value
                    ));
                }
                if opt.beta > c.n() {
                    out.push(format!("{cost:?}: optimal budget {} exceeds N", opt.beta));
                }
            }
            (Err(AllocError::Infeasible { .. }), None) => {}
            (got, want) => out.push(format!("{cost:?}: solver {got:?}, enumeration {want:?}")),
        }
    }
}

/// Non-negative second differences of `h` over the feasible budgets up to
/// `N + 1`.
pub fn check_convexity(c: &Case, out: &mut Vec<String>) {
    let o = &c.oracle;
    let caps = c.cap_vector();
    let Ok(lo) = min_sum_rate(o, &caps, Backend::Sfm) else {
        return;
    };
    let hi = (c.n() + 1).min(caps.total());
    for cost in c.costs() {
        let mut h = Vec::new();
        for beta in lo..=hi {
            match eval_h(o, beta, &cost, &caps, Backend::Sfm) {
                Ok((v, _)) => h.push(v),
                Err(e) => {
                    out.push(format!(
                        "{cost:?}: budget {beta} inside [{lo}, {hi}] failed: {e}"
                    ));
                    break;
                }
            }
        }
        for (k, w) in h.windows(3).enumerate() {
            let second = w[2] - 2.0 * w[1] + w[0];
            if second < -1e-9 * w[1].abs().max(1.0) {
                out.push(format!(
                    "{cost:?}: second difference {second} at β={}",
                    lo + k as i64 + 1
                ));
            }
        }
    }
}

/// Subgradient and exhaustive coordinate values on every query issued by
/// the greedy sweep and by the incremental allocator, and identical solver
/// outputs from both backends.
pub fn check_subgradient(c: &Case, out: &mut Vec<String>) {
    let o = &c.oracle;
    let m = o.users();
    let sg = Backend::Subgradient(None);
    let none = CapacityVector::unbounded();
    let mut compare = |beta: i64, rates: &[i64], ground: GroundSet| -> i64 {
        let exact = Backend::Sfm.coordinate(o, beta, rates, ground);
        let dual = sg.coordinate(o, beta, rates, ground);
        if exact != dual {
            out.push(format!(
                "β={beta}: user {} against {:?} at {rates:?}: exhaustive {exact}, subgradient {dual}",
                ground.pinned() + 1,
                ground.free()
            ));
        }
        exact
    };
    for beta in 0..=c.n() {
        if !zero_is_feasible(o, beta) {
            continue;
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| c.weights[a].total_cmp(&c.weights[b]).then(a.cmp(&b)));
        let mut rates = vec![0i64; m];
        let mut prefix = UserSubset::EMPTY;
        for &i in &order {
            rates[i] = compare(beta, &rates, GroundSet::new(i, prefix));
            prefix = prefix.with(i);
        }
        if let Ok(a) = convex_alloc(o, beta, &CostFunction::Fair, &none, Backend::Sfm) {
            let mut rates = vec![0i64; m];
            for &pick in &a.picks {
                for i in 0..m {
                    compare(beta, &rates, GroundSet::new(i, o.all_users().without(i)));
                }
                rates[pick] += 1;
            }
        }
    }
    let caps = c.cap_vector();
    let exact = min_sum_rate(o, &caps, Backend::Sfm);
    let dual = min_sum_rate(o, &caps, sg);
    if exact != dual {
        out.push(format!(
            "least sum-rate: exhaustive {exact:?}, subgradient {dual:?}"
        ));
    }
}

fn dual_feasible(o: &CutSetOracle, beta: i64, pinned: usize, others: &[usize], p: &[i64]) -> bool {
    // p[0] is the pinned user, p[1..] follow `others`
    (0u32..1 << others.len()).all(|mask| {
        let mut s = UserSubset::singleton(pinned);
        let mut sum = p[0];
        for (b, &u) in others.iter().enumerate() {
            if mask >> b & 1 == 1 {
                s = s.with(u);
                sum += p[b + 1];
            }
        }
        sum <= o.cut_set_f(beta, s)
    })
}

/// Greedy dual maximizer against enumeration of the integer points of the
/// coordinate region.
pub fn check_dual_maximizer(c: &Case, out: &mut Vec<String>) {
    const LEVELS: [f64; 7] = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0];
    let o = &c.oracle;
    let m = o.users();
    let mut rng = RngSpec::new(c.seed).generator();
    for beta in 0..=c.n() {
        if !zero_is_feasible(o, beta) {
            continue;
        }
        for i in 0..m {
            let others: Vec<usize> = (0..m).filter(|&k| k != i).collect();
            for _ in 0..2 {
                let lambda: Vec<f64> = others
                    .iter()
                    .map(|_| LEVELS[rng.random_range(0..LEVELS.len())])
                    .collect();
                let p = dual_maximizer(o, beta, i, &others, &lambda);
                let value = p.pinned as f64
                    + lambda
                        .iter()
                        .zip(&p.others)
                        .map(|(l, &r)| l * r as f64)
                        .sum::<f64>();
                let best = brute_dual_max(o, beta, i, &others, &lambda);
                let point: Vec<i64> = std::iter::once(p.pinned)
                    .chain(p.others.iter().copied())
                    .collect();
                if (value - best).abs() > 1e-9 || !dual_feasible(o, beta, i, &others, &point) {
                    out.push(format!(
                        "β={beta}, user {}, λ={lambda:?}: greedy {point:?} worth {value}, optimum {best}",
                        i + 1
                    ));
                }
            }
        }
    }
}

/// The capped base polyhedron equals the base polyhedron of the restricted
/// function, and the capped greedy sweep succeeds exactly when the
/// restriction reaches `β`.
pub fn check_restriction(c: &Case, out: &mut Vec<String>) {
    let o = &c.oracle;
    let m = o.users();
    let all = o.all_users();
    let caps = CapacityVector::new(c.caps.clone()).expect("non-negative");
    let grid: Vec<Vec<i64>> = box_points(&search_box(o, None)).collect();
    for beta in 0..=c.n() {
        if dilworth_value(o, beta, all) != beta {
            continue;
        }
        let gc: Vec<i64> = all
            .subsets()
            .map(|s| restriction_value(o, beta, &c.caps, s))
            .collect();
        let gc_of = |s: UserSubset| gc[s.bits() as usize];
        let reaches = gc_of(all) == beta;
        for r in &grid {
            let capped = r.iter().zip(&c.caps).all(|(x, c)| x <= c)
                && in_base(|s| o.cut_set_f(beta, s), m, r);
            let restricted = reaches && in_base(gc_of, m, r);
            if capped != restricted {
                out.push(format!(
                    "β={beta}: {r:?} capped-base {capped}, restricted-base {restricted}"
                ));
                break;
            }
        }
        match modified_edmonds(o, beta, &c.weights, &caps, Backend::Sfm) {
            Ok(r) if reaches && in_base(gc_of, m, &r) => {}
            Err(AllocError::Infeasible { .. }) if !reaches => {}
            got => out.push(format!(
                "β={beta}: capped sweep {got:?} while restriction gives {}",
                gc_of(all)
            )),
        }
    }
}

/// Records the draws of a [`RandomSource`] so a run can be replayed even
/// when it stops early.
struct Recorder {
    inner: RandomSource,
    log: Vec<(usize, Vec<Elem>)>,
}

impl CoefficientSource for Recorder {
    fn choose(&mut self, round: usize, tied: &[usize]) -> Result<usize, NetcodeError> {
        self.inner.choose(round, tied)
    }

    fn draw(
        &mut self,
        round: usize,
        user: usize,
        len: usize,
        field: FieldSpec,
    ) -> Result<Vec<Elem>, NetcodeError> {
        let b = self.inner.draw(round, user, len, field)?;
        self.log.push((user, b.clone()));
        Ok(b)
    }

    fn spec(&self) -> Option<RngSpec> {
        self.inner.spec()
    }
}

/// Polyhedral transmit sets match brute force at every round. For random
/// coding the rank-based sets are recomputed from scratch and must match the
/// allocator's incremental ones; they may differ from the polyhedral sets
/// only after a degenerate draw, one after which some user's span is smaller
/// than it would be for coefficients in general position. An infeasible budget never decodes.
pub fn check_t_sets(c: &Case, out: &mut Vec<String>) {
    let o = &c.oracle;
    let inst = o.instance();
    let (m, n) = (o.users(), c.n());
    let none = CapacityVector::unbounded();
    for beta in 0..=n {
        let polyhedral = convex_alloc(o, beta, &CostFunction::Fair, &none, Backend::Sfm);
        let mut rec = Recorder {
            inner: RandomSource::new(RngSpec::new(c.seed)),
            log: Vec::new(),
        };
        let random = randomized_alloc_with(o, beta, &CostFunction::Fair, &none, &mut rec);
        let decodes = random
            .as_ref()
            .is_ok_and(|r| verify_decodable(inst, &r.schedule).all);

        // naive rank-based sets and the first degenerate round
        let us: Vec<Vec<Elem>> = rec
            .log
            .iter()
            .map(|(s, b)| inst.observation(*s).left_mul_vec(b).expect("shape"))
            .collect();
        let mut naive = Vec::new();
        let mut degenerate: Option<usize> = None;
        let rounds_seen = if zero_is_feasible(o, beta) {
            (us.len() + 1).min(beta as usize)
        } else {
            0
        };
        for j in 1..=rounds_seen {
            let heard: Vec<&[Elem]> = us[..j - 1].iter().map(|u| u.as_slice()).collect();
            let threshold = n - (beta - j as i64 + 1);
            naive.push(UserSubset::from_users((0..m).filter(|&i| {
                let stack = FMatrix::vstack(
                    inst.field(),
                    inst.packets(),
                    [
                        inst.observation(i),
                        &FMatrix::from_rows(inst.field(), inst.packets(), &widen(&heard))
                            .expect("canonical"),
                    ],
                )
                .expect("shape");
                stack.rank() as i64 > threshold
            })));
            if degenerate.is_none() && j <= us.len() {
                let senders: Vec<usize> = rec.log[..j].iter().map(|(s, _)| *s).collect();
                let short = (0..m).any(|k| {
                    let mut span = EchelonBasis::from_matrix(inst.observation(k));
                    for u in &us[..j] {
                        span.insert(u);
                    }
                    span.rank() < generic_rank(o, k, &senders)
                });
                if short {
                    degenerate = Some(j);
                }
            }
        }
        if let Ok(r) = &random {
            if r.rounds != naive {
                out.push(format!(
                    "β={beta}: incremental sets {:?}, recomputed {naive:?}",
                    r.rounds
                ));
            }
        }

        match polyhedral {
            Ok(a) => {
                let mut rates = vec![0i64; m];
                for (j, &pick) in a.picks.iter().enumerate() {
                    let brute = brute_t_set(o, beta, &rates);
                    if brute != a.rounds[j] {
                        out.push(format!(
                            "β={beta} round {}: allocator {:?}, brute force {brute:?}",
                            j + 1,
                            a.rounds[j]
                        ));
                    }
                    rates[pick] += 1;
                }
                let diverged = naive.iter().zip(&a.rounds).position(|(x, y)| x != y);
                if let Some(j) = diverged {
                    // sets at round j + 1 depend on draws 1..=j
                    if degenerate.is_none_or(|d| d > j) {
                        out.push(format!(
                            "β={beta}: rank-based sets {naive:?} leave {:?} at round {} without a degenerate draw",
                            a.rounds,
                            j + 1
                        ));
                    }
                } else if degenerate.is_none() && !decodes {
                    out.push(format!(
                        "β={beta}: no degenerate draw, yet some user cannot decode"
                    ));
                }
            }
            Err(_) => {
                if decodes {
                    out.push(format!(
                        "β={beta}: infeasible budget, yet random coding decodes"
                    ));
                }
            }
        }
    }
}

/// Rank of `A_k` stacked with one generic combination of each sender's rows:
/// the least, over sender sets `S`, of `rank(A_k ∪ A_S)` plus the number of
/// rounds sent from outside `S`.
fn generic_rank(o: &CutSetOracle, k: usize, senders: &[usize]) -> usize {
    let from = UserSubset::from_users(senders.iter().copied());
    from.subsets()
        .map(|s| o.joint_rank(s.with(k)) + senders.iter().filter(|&&t| !s.contains(t)).count())
        .min()
        .expect("at least the empty set")
}

fn widen(rows: &[&[Elem]]) -> Vec<Vec<u64>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| u64::from(x)).collect())
        .collect()
}

fn single(property: &str, result: Result<(), String>) -> Outcome {
    let found = match result {
        Ok(()) => Vec::new(),
        Err(detail) => vec![Counterexample {
            case: "running example".into(),
            detail,
            instance: None,
            caps: None,
        }],
    };
    Outcome::from_failures(property, 1, found)
}

fn expect<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, expected {want:?}"))
    }
}

/// The three-user running example's published values: cut-set tables,
/// truncation, least sum-rate, greedy vertices, fair allocation and its
/// transmit sets, infeasibility at budget 4, capacity handling, and the
/// random coding trace over GF(19).
pub fn worked_examples() -> Vec<Outcome> {
    let f257 = FieldSpec::new(257).expect("prime");
    let o = CutSetOracle::new(example1(f257));
    let none = CapacityVector::unbounded();
    let set = |users: &[usize]| UserSubset::from_users(users.iter().map(|u| u - 1));
    let subsets = [
        set(&[1]),
        set(&[2]),
        set(&[3]),
        set(&[1, 2]),
        set(&[1, 3]),
        set(&[2, 3]),
        set(&[1, 2, 3]),
    ];
    let table = |beta| {
        subsets
            .iter()
            .map(|&s| o.cut_set_f(beta, s))
            .collect::<Vec<_>>()
    };

    let mut outcomes = vec![
        single(
            "f_4 table",
            expect("f_4", table(4), vec![0, 2, 2, 3, 4, 3, 4]),
        ),
        single(
            "f_5 table",
            expect("f_5", table(5), vec![1, 3, 3, 4, 5, 4, 5]),
        ),
        single(
            "truncation values",
            (|| {
                expect("g_4(M)", dilworth_value(&o, 4, set(&[1, 2, 3])), 3)?;
                expect("g_5(M)", dilworth_value(&o, 5, set(&[1, 2, 3])), 5)?;
                expect("g_5({1,3})", dilworth_value(&o, 5, set(&[1, 3])), 4)
            })(),
        ),
        single(
            "least sum-rate",
            expect("β_min", min_sum_rate(&o, &none, Backend::Sfm), Ok(5)),
        ),
        single(
            "greedy vertices",
            (|| {
                let sweep = |w: &[f64], caps: &CapacityVector| {
                    modified_edmonds(&o, 5, w, caps, Backend::Sfm).map(|r| r.into_inner())
                };
                expect(
                    "weights (1,3,2)",
                    sweep(&[1.0, 3.0, 2.0], &none),
                    Ok(vec![1, 1, 3]),
                )?;
                expect(
                    "weights (2,1,3)",
                    sweep(&[2.0, 1.0, 3.0], &none),
                    Ok(vec![1, 3, 1]),
                )?;
                let caps = CapacityVector::new(vec![2, 2, 2]).expect("valid");
                expect(
                    "caps (2,2,2)",
                    sweep(&[1.0, 3.0, 2.0], &caps),
                    Ok(vec![1, 2, 2]),
                )?;
                let cost = CostFunction::Linear(vec![1.0, 3.0, 2.0]);
                expect("cost of (1,1,3)", cost.total(&[1, 1, 3]), 10.0)
            })(),
        ),
        single(
            "fair allocation",
            (|| {
                let a = convex_alloc(&o, 5, &CostFunction::Fair, &none, Backend::Sfm)
                    .map_err(|e| e.to_string())?;
                expect("rates", a.rates.into_inner(), vec![1, 2, 2])?;
                let t23 = set(&[2, 3]);
                expect(
                    "T-sets",
                    a.rounds,
                    vec![set(&[1, 2, 3]), t23, t23, t23, t23],
                )
            })(),
        ),
        single(
            "budget 4 infeasible",
            (|| {
                let infeasible = |r: Result<(), AllocError>| {
                    matches!(r, Err(AllocError::Infeasible { beta: 4, .. }))
                };
                let w = [1.0, 1.0, 1.0];
                expect("g_4(M) < 4", dilworth_value(&o, 4, o.all_users()) < 4, true)?;
                expect(
                    "greedy sweep",
                    infeasible(modified_edmonds(&o, 4, &w, &none, Backend::Sfm).map(|_| ())),
                    true,
                )?;
                expect(
                    "incremental allocator",
                    infeasible(
                        convex_alloc(&o, 4, &CostFunction::Fair, &none, Backend::Sfm).map(|_| ()),
                    ),
                    true,
                )?;
                expect(
                    "subgradient backend",
                    infeasible(
                        modified_edmonds(&o, 4, &w, &none, Backend::Subgradient(None)).map(|_| ()),
                    ),
                    true,
                )?;
                let random = randomized_alloc(&o, 4, &CostFunction::Fair, &none, RngSpec::new(0));
                expect(
                    "random coding",
                    matches!(
                        random,
                        Err(NetcodeError::Alloc(AllocError::Infeasible { beta: 4, .. }))
                    ),
                    true,
                )
            })(),
        ),
        single(
            "subgradient coordinates",
            (|| {
                let sg = Backend::Subgradient(None);
                let at = |i: usize, free: &[usize], r: &[i64]| {
                    sg.coordinate(
                        &o,
                        5,
                        r,
                        GroundSet::new(i, UserSubset::from_users(free.iter().copied())),
                    )
                };
                expect("R_1", at(0, &[], &[0, 0, 0]), 1)?;
                expect("R_3", at(2, &[0], &[1, 0, 0]), 3)?;
                expect("R_2", at(1, &[0, 2], &[1, 0, 3]), 1)
            })(),
        ),
        single(
            "minimum cost",
            (|| {
                let opt = min_cost(&o, &CostFunction::unit(3), &none, Backend::Sfm)
                    .map_err(|e| e.to_string())?;
                expect("unit weights", (opt.beta, opt.value), (5, 5.0))?;
                let opt = min_cost(&o, &CostFunction::Fair, &none, Backend::Sfm)
                    .map_err(|e| e.to_string())?;
                expect(
                    "fair",
                    (opt.beta, opt.rates.into_inner()),
                    (5, vec![1, 2, 2]),
                )
            })(),
        ),
        single(
            "restriction value",
            expect(
                "g^c_5(M) with caps (2,2,2)",
                restriction_value(&o, 5, &[2, 2, 2], o.all_users()),
                5,
            ),
        ),
    ];

    let f19 = FieldSpec::new(19).expect("prime");
    let o19 = CutSetOracle::new(example1(f19));
    outcomes.push(single(
        "random coding trace",
        (|| {
            let script = vec![
                (0, vec![1, 7]),
                (2, vec![1, 1, 5, 11]),
                (1, vec![4, 3, 13, 8]),
                (2, vec![9, 5, 14, 17]),
                (1, vec![11, 2, 18, 6]),
            ];
            let a = randomized_alloc_with(
                &o19,
                5,
                &CostFunction::Fair,
                &none,
                &mut ScriptedSource::new(script),
            )
            .map_err(|e| e.to_string())?;
            expect("rates", a.rates.into_inner(), vec![1, 2, 2])?;
            let t23 = set(&[2, 3]);
            expect(
                "T-sets",
                a.rounds,
                vec![set(&[1, 2, 3]), t23, t23, t23, t23],
            )?;
            expect(
                "first transmission",
                a.schedule.entries()[0].u.clone(),
                vec![1, 7, 0, 0, 0, 0],
            )?;
            expect(
                "decodability",
                verify_decodable(o19.instance(), &a.schedule).per_user,
                vec![true, true, true],
            )
        })(),
    ));
    outcomes
}

/// Random coding on the running example at budget 5 with the fair cost.
pub fn rlnc_suite(q: u32, trials: usize, seed: u64) -> Result<Outcome, crate::gf::GfError> {
    let field = FieldSpec::new(q)?;
    let o = CutSetOracle::new(example1(field));
    let stats = rlnc_trials(&o, 5, &CostFunction::Fair, seed, trials);
    let found = if stats.passed {
        Vec::new()
    } else {
        vec![Counterexample {
            case: format!("running example over GF({q})"),
            detail: format!(
                "success rate {} below bound {} − 3σ ({})",
                stats.rate, stats.bound, stats.sigma
            ),
            instance: None,
            caps: None,
        }]
    };
    let mut outcome =
        Outcome::from_failures(&format!("random coding success at q={q}"), trials, found);
    outcome.stats = Some(stats);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples_pass() {
        for o in worked_examples() {
            assert!(o.passed, "{}: {:?}", o.property, o.counterexamples);
        }
    }

    #[test]
    fn cases_are_deterministic() {
        let b = Bounds {
            cases: 4,
            ..Bounds::default()
        };
        let a = suite_cases(&b);
        let again = suite_cases(&b);
        for (x, y) in a.iter().zip(&again) {
            assert_eq!(x.oracle.instance(), y.oracle.instance());
            assert_eq!(x.caps, y.caps);
            assert!(x.oracle.users() <= 4 && x.oracle.packets() <= 6);
        }
    }

    #[test]
    fn small_property_run() {
        let b = Bounds {
            max_m: 3,
            max_n: 4,
            cases: 6,
            seed: 11,
        };
        for o in property_suite(&b) {
            assert!(o.passed, "{}: {:?}", o.property, o.counterexamples);
        }
    }
}
