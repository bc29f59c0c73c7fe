//! Linear network codes for the exchange: randomized allocation with
//! on-the-fly coding, code construction for a given rate vector,
//! decodability checks and decoding.
//!
//! Every transmission is a combination `b · A_i` of the sender's own
//! observations. Its packet-space row `u = b · A_i` is what receivers stack
//! under their side information; a user can decode once `[A_i; U]` has full
//! column rank.

use std::collections::VecDeque;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{EchelonBasis, Elem, FMatrix, FieldSpec, GfError};
use crate::model::{CutSetOracle, ProblemInstance, UserSubset};
use crate::ratealloc::{
    cheapest_tied, zero_is_feasible, AllocError, CapacityVector, CostFunction, RateVector,
};

/// Attempts made by [`construct_code`] when the caller has no preference.
pub const DEFAULT_MAX_RETRIES: usize = 64;

/// Rate vectors are checked against every cut-set constraint up to this many
/// users; past it the caller is trusted.
pub const REGION_CHECK_MAX_USERS: usize = 20;

#[derive(Debug, Error)]
pub enum NetcodeError {
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error("rate vector {0:?} lies outside the cut-set region")]
    InfeasibleRates(Vec<i64>),
    #[error("no decodable code after {attempts} attempts; try a larger field")]
    ConstructionFailed { attempts: usize },
    #[error("user {} cannot decode: rank {rank} of {packets}", .user + 1)]
    NotDecodable {
        user: usize,
        rank: usize,
        packets: usize,
    },
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("replay script: {0}")]
    Script(String),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("malformed schedule file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Seed and stream of a ChaCha20 generator. Equal specs give equal draws;
/// independent trials use distinct streams under one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl RngSpec {
    pub const FAMILY: &'static str = "chacha20";

    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn generator(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn uniform_row(rng: &mut ChaCha20Rng, len: usize, field: FieldSpec) -> Vec<Elem> {
    (0..len)
        .map(|_| rng.random_range(0..field.order()))
        .collect()
}

/// One broadcast symbol. `round` counts from 1; `user` is zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub round: usize,
    pub user: usize,
    /// Combining coefficients over the sender's observation rows.
    pub b: Vec<Elem>,
    /// `b · A_user`, the transmission in packet coordinates.
    pub u: Vec<Elem>,
}

/// An ordered list of transmissions, optionally with the generator that
/// produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ScheduleFile", try_from = "ScheduleFile")]
pub struct TransmissionSchedule {
    field: FieldSpec,
    packets: usize,
    entries: Vec<ScheduleEntry>,
    rng: Option<RngSpec>,
}

impl TransmissionSchedule {
    pub fn new(field: FieldSpec, packets: usize, rng: Option<RngSpec>) -> Self {
        Self {
            field,
            packets,
            entries: Vec::new(),
            rng,
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn packets(&self) -> usize {
        self.packets
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn rng(&self) -> Option<RngSpec> {
        self.rng
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends `b · A_user` as the next round.
    pub fn push(
        &mut self,
        instance: &ProblemInstance,
        user: usize,
        b: Vec<Elem>,
    ) -> Result<&ScheduleEntry, NetcodeError> {
        let u = instance.observation(user).left_mul_vec(&b)?;
        self.entries.push(ScheduleEntry {
            round: self.entries.len() + 1,
            user,
            b,
            u,
        });
        Ok(self.entries.last().expect("just pushed"))
    }

    /// Transmissions per user.
    pub fn rates(&self, users: usize) -> Vec<i64> {
        let mut r = vec![0i64; users];
        for e in &self.entries {
            r[e.user] += 1;
        }
        r
    }

    /// All `u` rows stacked in round order.
    pub fn u_matrix(&self) -> FMatrix {
        let rows: Vec<&[Elem]> = self.entries.iter().map(|e| e.u.as_slice()).collect();
        FMatrix::from_elem_rows(self.field, self.packets, &rows)
    }

    /// Checks that the schedule fits the instance and that every stored `u`
    /// equals `b · A_user`.
    pub fn check_against(&self, instance: &ProblemInstance) -> Result<(), NetcodeError> {
        if self.field != instance.field() || self.packets != instance.packets() {
            return Err(NetcodeError::Schedule(format!(
                "schedule is over {} with {} packets, instance over {} with {}",
                self.field,
                self.packets,
                instance.field(),
                instance.packets()
            )));
        }
        for e in &self.entries {
            if e.user >= instance.users() {
                return Err(NetcodeError::Schedule(format!(
                    "round {} names user {} of {}",
                    e.round,
                    e.user + 1,
                    instance.users()
                )));
            }
            let a = instance.observation(e.user);
            if e.b.len() != a.rows() {
                return Err(NetcodeError::Schedule(format!(
                    "round {}: {} coefficients for {} observation rows",
                    e.round,
                    e.b.len(),
                    a.rows()
                )));
            }
            if a.left_mul_vec(&e.b)? != e.u {
                return Err(NetcodeError::Schedule(format!(
                    "round {}: stored u differs from b · A_{}",
                    e.round,
                    e.user + 1
                )));
            }
        }
        Ok(())
    }

    /// Broadcast symbols `v_j = u_j · w` for a packet vector `w`.
    pub fn transmit(&self, w: &[Elem]) -> Result<Vec<Elem>, NetcodeError> {
        Ok(self.u_matrix().mul_vec(w)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NetcodeError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, NetcodeError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), NetcodeError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// On-disk schedule layout; users are one-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScheduleFile {
    q: u32,
    #[serde(rename = "N")]
    packets: usize,
    entries: Vec<EntryFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rng: Option<RngSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EntryFile {
    round: usize,
    user: usize,
    b: Vec<u64>,
    u: Vec<u64>,
}

impl From<TransmissionSchedule> for ScheduleFile {
    fn from(s: TransmissionSchedule) -> Self {
        let widen = |v: Vec<Elem>| v.into_iter().map(u64::from).collect();
        ScheduleFile {
            q: s.field.order(),
            packets: s.packets,
            entries: s
                .entries
                .into_iter()
                .map(|e| EntryFile {
                    round: e.round,
                    user: e.user + 1,
                    b: widen(e.b),
                    u: widen(e.u),
                })
                .collect(),
            rng: s.rng,
        }
    }
}

impl TryFrom<ScheduleFile> for TransmissionSchedule {
    type Error = NetcodeError;

    fn try_from(f: ScheduleFile) -> Result<Self, NetcodeError> {
        let field = FieldSpec::new(f.q)?;
        let narrow = |v: Vec<u64>, round: usize| -> Result<Vec<Elem>, NetcodeError> {
            v.into_iter()
                .map(|x| {
                    if field.is_canonical(x) {
                        Ok(x as Elem)
                    } else {
                        Err(NetcodeError::Schedule(format!(
                            "round {round}: entry {x} is not below q = {field}"
                        )))
                    }
                })
                .collect()
        };
        let mut entries = Vec::with_capacity(f.entries.len());
        for e in f.entries {
            if e.user == 0 {
                return Err(NetcodeError::Schedule(format!(
                    "round {}: users are numbered from 1",
                    e.round
                )));
            }
            if e.u.len() != f.packets {
                return Err(NetcodeError::Schedule(format!(
                    "round {}: u has {} entries, expected {}",
                    e.round,
                    e.u.len(),
                    f.packets
                )));
            }
            entries.push(ScheduleEntry {
                round: e.round,
                user: e.user - 1,
                b: narrow(e.b, e.round)?,
                u: narrow(e.u, e.round)?,
            });
        }
        Ok(TransmissionSchedule {
            field,
            packets: f.packets,
            entries,
            rng: f.rng,
        })
    }
}

/// Supplies the randomized allocator's choices: which of the tied cheapest
/// users transmits, and with which coefficients.
pub trait CoefficientSource {
    /// `tied` is non-empty and increasing.
    fn choose(&mut self, round: usize, tied: &[usize]) -> Result<usize, NetcodeError>;
    fn draw(
        &mut self,
        round: usize,
        user: usize,
        len: usize,
        field: FieldSpec,
    ) -> Result<Vec<Elem>, NetcodeError>;
    /// Generator to record in the schedule, if any.
    fn spec(&self) -> Option<RngSpec>;
}

/// Uniform coefficients from a seeded generator; ties go to the lowest
/// index.
pub struct RandomSource {
    spec: RngSpec,
    rng: ChaCha20Rng,
}

impl RandomSource {
    pub fn new(spec: RngSpec) -> Self {
        Self {
            spec,
            rng: spec.generator(),
        }
    }
}

impl CoefficientSource for RandomSource {
    fn choose(&mut self, _round: usize, tied: &[usize]) -> Result<usize, NetcodeError> {
        Ok(tied[0])
    }

    fn draw(
        &mut self,
        _round: usize,
        _user: usize,
        len: usize,
        field: FieldSpec,
    ) -> Result<Vec<Elem>, NetcodeError> {
        Ok(uniform_row(&mut self.rng, len, field))
    }

    fn spec(&self) -> Option<RngSpec> {
        Some(self.spec)
    }
}

/// Replays a fixed list of `(user, b)` steps. Each scripted user must be
/// among the cheapest admissible users of its round.
pub struct ScriptedSource {
    steps: VecDeque<(usize, Vec<Elem>)>,
}

impl ScriptedSource {
    pub fn new(steps: Vec<(usize, Vec<Elem>)>) -> Self {
        Self {
            steps: steps.into(),
        }
    }
}

impl CoefficientSource for ScriptedSource {
    fn choose(&mut self, round: usize, tied: &[usize]) -> Result<usize, NetcodeError> {
        let Some((user, _)) = self.steps.front() else {
            return Err(NetcodeError::Script(format!(
                "no step left for round {round}"
            )));
        };
        if tied.contains(user) {
            Ok(*user)
        } else {
            Err(NetcodeError::Script(format!(
                "round {round}: user {} is not among the cheapest admissible users",
                user + 1
            )))
        }
    }

    fn draw(
        &mut self,
        round: usize,
        _user: usize,
        len: usize,
        field: FieldSpec,
    ) -> Result<Vec<Elem>, NetcodeError> {
        let (_, b) = self.steps.pop_front().expect("choose checked the step");
        if b.len() != len || b.iter().any(|&x| !field.is_canonical(x as u64)) {
            return Err(NetcodeError::Script(format!(
                "round {round}: coefficients {b:?} do not fit {len} rows over {field}"
            )));
        }
        Ok(b)
    }

    fn spec(&self) -> Option<RngSpec> {
        None
    }
}

/// Output of [`randomized_alloc`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomizedAllocation {
    pub rates: RateVector,
    pub schedule: TransmissionSchedule,
    /// `T_j` per round, before capacity filtering.
    pub rounds: Vec<UserSubset>,
}

/// Incremental allocation where each round's winner immediately broadcasts a
/// random combination. Round `j` admits user `i` when
/// `rank(A_i ∪ u^(1..j−1)) > N − (β − j + 1)`.
pub fn randomized_alloc(
    oracle: &CutSetOracle,
    beta: i64,
    cost: &CostFunction,
    caps: &CapacityVector,
    rng: RngSpec,
) -> Result<RandomizedAllocation, NetcodeError> {
    randomized_alloc_with(oracle, beta, cost, caps, &mut RandomSource::new(rng))
}

/// [`randomized_alloc`] with an arbitrary coefficient source.
pub fn randomized_alloc_with(
    oracle: &CutSetOracle,
    beta: i64,
    cost: &CostFunction,
    caps: &CapacityVector,
    source: &mut dyn CoefficientSource,
) -> Result<RandomizedAllocation, NetcodeError> {
    let instance = oracle.instance();
    let (m, n) = (instance.users(), instance.packets() as i64);
    if beta < 0 {
        return Err(AllocError::NegativeBudget(beta).into());
    }
    cost.validate(m)?;
    caps.validate(m)?;
    if !zero_is_feasible(oracle, beta) {
        return Err(AllocError::Infeasible { beta, achieved: 0 }.into());
    }

    let field = instance.field();
    let mut spans: Vec<EchelonBasis> = instance
        .observations()
        .iter()
        .map(EchelonBasis::from_matrix)
        .collect();
    let mut rates = RateVector::zeros(m);
    let mut rounds = Vec::with_capacity(beta as usize);
    let mut schedule = TransmissionSchedule::new(field, instance.packets(), source.spec());
    for j in 1..=beta {
        let threshold = n - (beta - j + 1);
        let admissible =
            UserSubset::from_users((0..m).filter(|&i| spans[i].rank() as i64 > threshold));
        rounds.push(admissible);
        let tied = cheapest_tied(admissible.iter().filter(|&i| rates[i] < caps.cap(i)), |i| {
            cost.derivative(i, rates[i] + 1)
        });
        if tied.is_empty() {
            return Err(AllocError::Infeasible {
                beta,
                achieved: j - 1,
            }
            .into());
        }
        let round = j as usize;
        let user = source.choose(round, &tied)?;
        let b = source.draw(round, user, instance.observation(user).rows(), field)?;
        let u = schedule.push(instance, user, b)?.u.clone();
        for span in spans.iter_mut() {
            span.insert(&u);
        }
        rates.increment(user);
    }
    Ok(RandomizedAllocation {
        rates,
        schedule,
        rounds,
    })
}

/// Per-user outcome of the full-rank test on `[A_i; U]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decodability {
    pub per_user: Vec<bool>,
    pub ranks: Vec<usize>,
    pub all: bool,
}

/// Every user hears every transmission, so user `i` decodes exactly when
/// its observations together with all `u` rows span the packet space.
pub fn verify_decodable(
    instance: &ProblemInstance,
    schedule: &TransmissionSchedule,
) -> Decodability {
    let n = instance.packets();
    let mut heard = EchelonBasis::new(instance.field(), n);
    for e in schedule.entries() {
        heard.insert(&e.u);
    }
    let ranks: Vec<usize> = instance
        .observations()
        .iter()
        .map(|a| {
            let mut span = heard.clone();
            for row in a.row_iter() {
                span.insert(row);
            }
            span.rank()
        })
        .collect();
    let per_user: Vec<bool> = ranks.iter().map(|&r| r == n).collect();
    Decodability {
        all: per_user.iter().all(|&d| d),
        per_user,
        ranks,
    }
}

/// An accepted schedule together with the number of draws it took.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructedCode {
    pub schedule: TransmissionSchedule,
    pub attempts: usize,
}

/// Draws `rates[i]` uniform combinations for each user (users in index
/// order) until every user can decode, for at most `max_retries` attempts.
pub fn construct_code(
    instance: &ProblemInstance,
    rates: &[i64],
    rng: RngSpec,
    max_retries: usize,
) -> Result<ConstructedCode, NetcodeError> {
    let m = instance.users();
    let outside = || NetcodeError::InfeasibleRates(rates.to_vec());
    if rates.len() != m || rates.iter().any(|&r| r < 0) {
        return Err(outside());
    }
    if m <= REGION_CHECK_MAX_USERS && !CutSetOracle::new(instance.clone()).in_rate_region(rates) {
        return Err(outside());
    }

    let field = instance.field();
    let mut gen = rng.generator();
    for attempt in 1..=max_retries {
        let mut schedule = TransmissionSchedule::new(field, instance.packets(), Some(rng));
        for (user, &r) in rates.iter().enumerate() {
            let len = instance.observation(user).rows();
            for _ in 0..r {
                schedule.push(instance, user, uniform_row(&mut gen, len, field))?;
            }
        }
        if verify_decodable(instance, &schedule).all {
            return Ok(ConstructedCode {
                schedule,
                attempts: attempt,
            });
        }
    }
    Err(NetcodeError::ConstructionFailed {
        attempts: max_retries,
    })
}

/// Recovers `w` at user `user` from its side information `x = A_i w` and the
/// broadcast symbols `v = U w`.
pub fn decode(
    instance: &ProblemInstance,
    user: usize,
    schedule: &TransmissionSchedule,
    x: &[Elem],
    v: &[Elem],
) -> Result<Vec<Elem>, NetcodeError> {
    if user >= instance.users() {
        return Err(NetcodeError::Schedule(format!(
            "user {} of {}",
            user + 1,
            instance.users()
        )));
    }
    let a = instance.observation(user);
    if x.len() != a.rows() || v.len() != schedule.len() {
        return Err(NetcodeError::Schedule(format!(
            "{} side-information symbols for {} rows, {} received for {} rounds",
            x.len(),
            a.rows(),
            v.len(),
            schedule.len()
        )));
    }
    let system = FMatrix::vstack(
        instance.field(),
        instance.packets(),
        [a, &schedule.u_matrix()],
    )?;
    let rank = system.rank();
    if rank < instance.packets() {
        return Err(NetcodeError::NotDecodable {
            user,
            rank,
            packets: instance.packets(),
        });
    }
    let rhs: Vec<Elem> = x.iter().chain(v).copied().collect();
    Ok(system.solve_full_rank(&rhs)?)
}

/// Uniform packet vector, for synthetic round trips.
pub fn random_packets(field: FieldSpec, packets: usize, rng: RngSpec) -> Vec<Elem> {
    uniform_row(&mut rng.generator(), packets, field)
}

/// `(1 − m/q)^β`: lower bound on the probability that random coding at
/// budget `β` lets every user decode.
pub fn success_bound(users: usize, q: u32, beta: i64) -> f64 {
    (1.0 - users as f64 / q as f64).max(0.0).powi(beta as i32)
}

/// Monte-Carlo estimate of the randomized allocator's decoding success.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialStats {
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub bound: f64,
    /// Binomial standard deviation of the rate at the bound.
    pub sigma: f64,
    /// Observed rate must reach `bound − 3σ`.
    pub passed: bool,
}

/// Runs `trials` independent randomized allocations (stream `k` for trial
/// `k`) and counts those after which every user decodes.
pub fn rlnc_trials(
    oracle: &CutSetOracle,
    beta: i64,
    cost: &CostFunction,
    seed: u64,
    trials: usize,
) -> TrialStats {
    let instance = oracle.instance();
    let caps = CapacityVector::unbounded();
    let successes = (0..trials as u64)
        .into_par_iter()
        .filter(|&k| {
            randomized_alloc(oracle, beta, cost, &caps, RngSpec::new(seed).with_stream(k))
                .is_ok_and(|a| verify_decodable(instance, &a.schedule).all)
        })
        .count();
    let bound = success_bound(instance.users(), instance.field().order(), beta);
    let sigma = (bound * (1.0 - bound) / trials.max(1) as f64).sqrt();
    let rate = successes as f64 / trials.max(1) as f64;
    TrialStats {
        trials,
        successes,
        rate,
        bound,
        sigma,
        passed: rate >= bound - 3.0 * sigma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::example1;
    use crate::ratealloc::convex_alloc;
    use crate::ratealloc::Backend;

    fn ex1(q: u32) -> CutSetOracle {
        CutSetOracle::new(example1(FieldSpec::new(q).unwrap()))
    }

    fn set(users: &[usize]) -> UserSubset {
        UserSubset::from_users(users.iter().map(|u| u - 1))
    }

    fn replay_script() -> Vec<(usize, Vec<Elem>)> {
        vec![
            (0, vec![1, 7]),
            (2, vec![1, 1, 5, 11]),
            (1, vec![4, 3, 13, 8]),
            (2, vec![9, 5, 14, 17]),
            (1, vec![11, 2, 18, 6]),
        ]
    }

    #[test]
    fn replays_the_worked_trace() {
        let o = ex1(19);
        let mut src = ScriptedSource::new(replay_script());
        let a = randomized_alloc_with(
            &o,
            5,
            &CostFunction::Fair,
            &CapacityVector::unbounded(),
            &mut src,
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
        let us: Vec<&[Elem]> = a
            .schedule
            .entries()
            .iter()
            .map(|e| e.u.as_slice())
            .collect();
        assert_eq!(
            us,
            vec![
                &[1, 7, 0, 0, 0, 0][..],
                &[0, 0, 1, 1, 5, 11],
                &[0, 4, 0, 3, 13, 8],
                &[0, 0, 9, 5, 14, 17],
                &[0, 11, 0, 2, 18, 6],
            ]
        );
        let d = verify_decodable(o.instance(), &a.schedule);
        assert_eq!(d.per_user, vec![true, true, true]);
        assert!(a.schedule.check_against(o.instance()).is_ok());
    }

    #[test]
    fn script_must_pick_a_cheapest_user() {
        let o = ex1(19);
        // round 3 has user 2 strictly cheapest; scripting user 3 is rejected
        let mut script = replay_script();
        script[2].0 = 2;
        let err = randomized_alloc_with(
            &o,
            5,
            &CostFunction::Fair,
            &CapacityVector::unbounded(),
            &mut ScriptedSource::new(script),
        )
        .unwrap_err();
        assert!(matches!(err, NetcodeError::Script(_)));
    }

    #[test]
    fn random_allocation_matches_polyhedral_allocation() {
        let o = ex1(257);
        let none = CapacityVector::unbounded();
        let a = randomized_alloc(&o, 5, &CostFunction::Fair, &none, RngSpec::new(3)).unwrap();
        let c = convex_alloc(&o, 5, &CostFunction::Fair, &none, Backend::Sfm).unwrap();
        assert_eq!(a.rates, c.rates);
        assert_eq!(a.rounds, c.rounds);
        assert_eq!(a.schedule.rates(3), vec![1, 2, 2]);
        // same spec, same schedule
        let again = randomized_alloc(&o, 5, &CostFunction::Fair, &none, RngSpec::new(3)).unwrap();
        assert_eq!(a.schedule, again.schedule);
    }

    #[test]
    fn infeasible_budget_stops_early() {
        let o = ex1(257);
        let err = randomized_alloc(
            &o,
            4,
            &CostFunction::Fair,
            &CapacityVector::unbounded(),
            RngSpec::new(0),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            NetcodeError::Alloc(AllocError::Infeasible { beta: 4, achieved }) if achieved < 4
        ));
    }

    #[test]
    fn single_full_rank_user() {
        let f = FieldSpec::new(5).unwrap();
        let inst = crate::model::raw_instance(f, 2, &[&[0, 1]]).unwrap();
        let o = CutSetOracle::new(inst.clone());
        let a = randomized_alloc(
            &o,
            0,
            &CostFunction::Fair,
            &CapacityVector::unbounded(),
            RngSpec::new(1),
        )
        .unwrap();
        assert!(a.schedule.is_empty());
        assert_eq!(&*a.rates, &[0]);
        assert!(verify_decodable(&inst, &a.schedule).all);
        let w = vec![3, 4];
        let x = inst.observe(0, &w).unwrap();
        assert_eq!(decode(&inst, 0, &a.schedule, &x, &[]).unwrap(), w);
    }

    #[test]
    fn empty_schedule_on_running_example() {
        let o = ex1(257);
        let s = TransmissionSchedule::new(o.instance().field(), 6, None);
        let d = verify_decodable(o.instance(), &s);
        assert_eq!(d.per_user, vec![false, false, false]);
        assert_eq!(d.ranks, vec![2, 4, 4]);
        let x = o.instance().observe(0, &[1, 2, 3, 4, 5, 6]).unwrap();
        assert!(matches!(
            decode(o.instance(), 0, &s, &x, &[]),
            Err(NetcodeError::NotDecodable {
                user: 0,
                rank: 2,
                packets: 6
            })
        ));
    }

    #[test]
    fn construct_and_decode_round_trip() {
        let o = ex1(257);
        let inst = o.instance();
        let code = construct_code(inst, &[1, 1, 3], RngSpec::new(1), DEFAULT_MAX_RETRIES).unwrap();
        assert_eq!(code.schedule.rates(3), vec![1, 1, 3]);
        assert!(code.schedule.check_against(inst).is_ok());
        let w = random_packets(inst.field(), 6, RngSpec::new(99));
        let v = code.schedule.transmit(&w).unwrap();
        for i in 0..3 {
            let x = inst.observe(i, &w).unwrap();
            assert_eq!(decode(inst, i, &code.schedule, &x, &v).unwrap(), w);
        }
    }

    #[test]
    fn construct_rejects_rates_outside_region() {
        let o = ex1(257);
        assert!(matches!(
            construct_code(o.instance(), &[0, 0, 0], RngSpec::new(1), 8),
            Err(NetcodeError::InfeasibleRates(_))
        ));
        assert!(matches!(
            construct_code(o.instance(), &[1, 1], RngSpec::new(1), 8),
            Err(NetcodeError::InfeasibleRates(_))
        ));
        assert!(matches!(
            construct_code(o.instance(), &[1, 1, 3], RngSpec::new(1), 0),
            Err(NetcodeError::ConstructionFailed { attempts: 0 })
        ));
    }

    #[test]
    fn schedule_json_round_trip() {
        let o = ex1(19);
        let a = randomized_alloc_with(
            &o,
            5,
            &CostFunction::Fair,
            &CapacityVector::unbounded(),
            &mut ScriptedSource::new(replay_script()),
        )
        .unwrap();
        let json = a.schedule.to_json();
        assert!(json.starts_with(r#"{"q":19,"N":6,"entries":[{"round":1,"user":1,"b":[1,7]"#));
        assert_eq!(TransmissionSchedule::from_json(&json).unwrap(), a.schedule);

        let code =
            construct_code(o.instance(), &[1, 1, 3], RngSpec::new(5).with_stream(2), 64).unwrap();
        let json = code.schedule.to_json();
        assert!(json.ends_with(r#""rng":{"seed":5,"stream":2}}"#));
        assert_eq!(
            TransmissionSchedule::from_json(&json).unwrap(),
            code.schedule
        );

        for bad in [
            r#"{"q":4,"N":1,"entries":[]}"#,
            r#"{"q":5,"N":1,"entries":[{"round":1,"user":0,"b":[1],"u":[1]}]}"#,
            r#"{"q":5,"N":1,"entries":[{"round":1,"user":1,"b":[7],"u":[1]}]}"#,
            r#"{"q":5,"N":2,"entries":[{"round":1,"user":1,"b":[1],"u":[1]}]}"#,
        ] {
            assert!(TransmissionSchedule::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn tampered_u_is_detected() {
        let o = ex1(257);
        let code = construct_code(o.instance(), &[1, 1, 3], RngSpec::new(2), 64).unwrap();
        let mut json: serde_json::Value = serde_json::from_str(&code.schedule.to_json()).unwrap();
        let u0 = &mut json["entries"][0]["u"][0];
        *u0 = serde_json::json!((u0.as_u64().unwrap() + 1) % 257);
        let bad = TransmissionSchedule::from_json(&json.to_string()).unwrap();
        assert!(bad.check_against(o.instance()).is_err());
    }

    #[test]
    fn bound_values() {
        assert!((success_bound(3, 19, 5) - (16.0f64 / 19.0).powi(5)).abs() < 1e-15);
        assert_eq!(success_bound(3, 2, 5), 0.0);
        assert_eq!(success_bound(3, 257, 0), 1.0);
    }
}
