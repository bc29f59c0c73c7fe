//! Problem instances, user subsets and the cut-set set function.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::RwLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gf::{Elem, FMatrix, FieldSpec, GfError};

/// Largest supported number of users. Subsets are bitmasks and several
/// algorithms enumerate them.
pub const MAX_USERS: usize = 30;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("instance needs at least one user")]
    NoUsers,
    #[error("instance needs at least one packet")]
    NoPackets,
    #[error("{0} users exceeds the supported maximum of {MAX_USERS}")]
    TooManyUsers(usize),
    #[error("user {user} has {found} columns, expected {expected}")]
    ColumnMismatch {
        user: usize,
        expected: usize,
        found: usize,
    },
    #[error("user {user}: {source}")]
    BadRows { user: usize, source: GfError },
    #[error("collective rank {rank} is below the packet count {packets}: the users cannot jointly recover the file")]
    RankDeficient { rank: usize, packets: usize },
    #[error("infeasible instance request: {0}")]
    InfeasibleInstance(String),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A set of users encoded as a bitmask; bit `i` is user `i` (zero-based).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct UserSubset(u32);

impl UserSubset {
    pub const EMPTY: UserSubset = UserSubset(0);

    #[inline]
    pub const fn from_bits(bits: u32) -> Self {
        Self(bits)
    }

    #[inline]
    pub const fn bits(self) -> u32 {
        self.0
    }

    /// `{0, ..., m-1}`.
    #[inline]
    pub fn full(m: usize) -> Self {
        debug_assert!(m <= MAX_USERS);
        Self(((1u64 << m) - 1) as u32)
    }

    #[inline]
    pub fn singleton(i: usize) -> Self {
        Self(1 << i)
    }

    pub fn from_users<I: IntoIterator<Item = usize>>(users: I) -> Self {
        users.into_iter().fold(Self::EMPTY, |s, i| s.with(i))
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    #[inline]
    #[must_use]
    pub fn with(self, i: usize) -> Self {
        Self(self.0 | 1 << i)
    }

    #[inline]
    #[must_use]
    pub fn without(self, i: usize) -> Self {
        Self(self.0 & !(1 << i))
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        Self(self.0 & !other.0)
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// All subsets of `self`, in increasing bitmask order, starting with the
    /// empty set.
    pub fn subsets(self) -> impl Iterator<Item = UserSubset> {
        let mask = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask {
                None
            } else {
                Some(cur.wrapping_sub(mask) & mask)
            };
            Some(UserSubset(cur))
        })
    }

    /// Sum of `values[i]` over members.
    pub fn sum_of(self, values: &[i64]) -> i64 {
        self.iter().map(|i| values[i]).sum()
    }
}

impl fmt::Debug for UserSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Serialized as the sorted list of one-based user numbers, matching the
/// numbering used in files and on the command line.
impl Serialize for UserSubset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter().map(|i| i + 1))
    }
}

/// `m` users observing linear combinations `x_i = A_i w` of `N` packets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    field: FieldSpec,
    packets: usize,
    observations: Vec<FMatrix>,
}

impl ProblemInstance {
    /// Validates shapes and that the users collectively span the packet
    /// space.
    pub fn new(
        field: FieldSpec,
        packets: usize,
        observations: Vec<FMatrix>,
    ) -> Result<Self, ModelError> {
        if observations.is_empty() {
            return Err(ModelError::NoUsers);
        }
        if observations.len() > MAX_USERS {
            return Err(ModelError::TooManyUsers(observations.len()));
        }
        if packets == 0 {
            return Err(ModelError::NoPackets);
        }
        for (user, a) in observations.iter().enumerate() {
            if a.field() != field {
                return Err(GfError::FieldMismatch(field.order(), a.field().order()).into());
            }
            if a.cols() != packets {
                return Err(ModelError::ColumnMismatch {
                    user,
                    expected: packets,
                    found: a.cols(),
                });
            }
        }
        let rank = FMatrix::vstack(field, packets, &observations)?.rank();
        if rank < packets {
            return Err(ModelError::RankDeficient { rank, packets });
        }
        Ok(Self {
            field,
            packets,
            observations,
        })
    }

    #[inline]
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    /// Number of packets `N`.
    #[inline]
    pub fn packets(&self) -> usize {
        self.packets
    }

    /// Number of users `m`.
    #[inline]
    pub fn users(&self) -> usize {
        self.observations.len()
    }

    #[inline]
    pub fn observation(&self, user: usize) -> &FMatrix {
        &self.observations[user]
    }

    pub fn observations(&self) -> &[FMatrix] {
        &self.observations
    }

    pub fn all_users(&self) -> UserSubset {
        UserSubset::full(self.users())
    }

    /// Observation rows of every user in `s`, stacked.
    pub fn stacked(&self, s: UserSubset) -> FMatrix {
        FMatrix::vstack(
            self.field,
            self.packets,
            s.iter().map(|i| &self.observations[i]),
        )
        .expect("observations share field and width")
    }

    /// Side information `x_i = A_i w` for a packet vector `w`.
    pub fn observe(&self, user: usize, w: &[Elem]) -> Result<Vec<Elem>, GfError> {
        self.observations[user].mul_vec(w)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            q: self.field.order(),
            packets: self.packets,
            users: self
                .observations
                .iter()
                .map(|a| UserRows { rows: a.to_rows() })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("instance serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// SHA-256 over the canonical JSON encoding, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// On-disk instance: `{ "q": int, "N": int, "users": [ { "rows": [[int,...],...] }, ... ] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub q: u32,
    #[serde(rename = "N")]
    pub packets: usize,
    pub users: Vec<UserRows>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRows {
    pub rows: Vec<Vec<u64>>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<ProblemInstance, ModelError> {
        let field = FieldSpec::new(self.q)?;
        let observations = self
            .users
            .iter()
            .enumerate()
            .map(|(user, u)| {
                FMatrix::from_rows(field, self.packets, &u.rows)
                    .map_err(|source| ModelError::BadRows { user, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        ProblemInstance::new(field, self.packets, observations)
    }
}

/// Memoized `rank(A_S)` over user subsets, plus the cut-set function
/// `f_β`. Safe to share between threads.
#[derive(Debug)]
pub struct CutSetOracle {
    instance: ProblemInstance,
    memo: RwLock<HashMap<u32, usize>>,
}

impl CutSetOracle {
    pub fn new(instance: ProblemInstance) -> Self {
        Self {
            instance,
            memo: RwLock::new(HashMap::new()),
        }
    }

    #[inline]
    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    #[inline]
    pub fn users(&self) -> usize {
        self.instance.users()
    }

    #[inline]
    pub fn packets(&self) -> usize {
        self.instance.packets()
    }

    pub fn all_users(&self) -> UserSubset {
        self.instance.all_users()
    }

    /// Rank of the stacked observations of the users in `s`.
    pub fn joint_rank(&self, s: UserSubset) -> usize {
        debug_assert!(s.is_subset_of(self.all_users()));
        if s.is_empty() {
            return 0;
        }
        if let Some(&r) = self.memo.read().expect("rank memo poisoned").get(&s.bits()) {
            return r;
        }
        let r = self.instance.stacked(s).rank();
        self.memo
            .write()
            .expect("rank memo poisoned")
            .insert(s.bits(), r);
        r
    }

    /// `f_β(S)`: 0 on the empty set, `β` on the full set, and
    /// `β − N + rank(A_S)` otherwise. Negative for small budgets.
    pub fn cut_set_f(&self, beta: i64, s: UserSubset) -> i64 {
        if s.is_empty() {
            0
        } else if s == self.all_users() {
            beta
        } else {
            beta - self.packets() as i64 + self.joint_rank(s) as i64
        }
    }

    /// Cut-set feasibility of a rate vector: every proper subset `S` must
    /// send at least what the rest of the users are missing,
    /// `R(S) ≥ N − rank(A_{M∖S})`. Enumerates all `2^m` subsets.
    pub fn in_rate_region(&self, rates: &[i64]) -> bool {
        let everyone = self.all_users();
        let n = self.packets() as i64;
        rates.len() == self.users()
            && rates.iter().all(|&r| r >= 0)
            && everyone
                .subsets()
                .filter(|&s| s != everyone)
                .all(|s| s.sum_of(rates) >= n - self.joint_rank(everyone.difference(s)) as i64)
    }

    /// Number of cached ranks.
    pub fn memo_len(&self) -> usize {
        self.memo.read().expect("rank memo poisoned").len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    /// Each user holds a subset of the uncoded packets.
    Raw,
    /// Each user holds uniformly random combinations.
    Coded,
}

#[derive(Debug, Clone)]
pub struct GenerateSpec {
    pub kind: InstanceKind,
    pub packets: usize,
    pub field: FieldSpec,
    /// Rows held by each user; its length is the user count.
    pub coverage: Vec<usize>,
    pub seed: u64,
}

const MAX_CODED_ATTEMPTS: usize = 10_000;

/// Random instance with the requested per-user row counts. Deterministic in
/// `seed`.
pub fn generate_instance(spec: &GenerateSpec) -> Result<ProblemInstance, ModelError> {
    let m = spec.coverage.len();
    let n = spec.packets;
    if m == 0 {
        return Err(ModelError::NoUsers);
    }
    if m > MAX_USERS {
        return Err(ModelError::TooManyUsers(m));
    }
    if n == 0 {
        return Err(ModelError::NoPackets);
    }
    let total: usize = spec.coverage.iter().sum();
    if total < n {
        return Err(ModelError::InfeasibleInstance(format!(
            "{total} rows in total cannot span {n} packets"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    match spec.kind {
        InstanceKind::Raw => {
            if let Some(user) = spec.coverage.iter().position(|&c| c > n) {
                return Err(ModelError::InfeasibleInstance(format!(
                    "user {} asks for {} distinct packets out of {n}",
                    user + 1,
                    spec.coverage[user]
                )));
            }
            let held = raw_assignment(&spec.coverage, n, &mut rng);
            let observations = held
                .into_iter()
                .map(|packets| {
                    let rows: Vec<Vec<u64>> = packets
                        .iter()
                        .map(|&k| (0..n).map(|c| (c == k) as u64).collect())
                        .collect();
                    FMatrix::from_rows(spec.field, n, &rows)
                })
                .collect::<Result<Vec<_>, _>>()?;
            ProblemInstance::new(spec.field, n, observations)
        }
        InstanceKind::Coded => {
            let p = spec.field.order();
            for _ in 0..MAX_CODED_ATTEMPTS {
                let observations: Vec<FMatrix> = spec
                    .coverage
                    .iter()
                    .map(|&rows| {
                        let data = (0..rows * n).map(|_| rng.random_range(0..p)).collect();
                        FMatrix::from_flat(spec.field, rows, n, data).expect("canonical draws")
                    })
                    .collect();
                match ProblemInstance::new(spec.field, n, observations) {
                    Ok(inst) => return Ok(inst),
                    Err(ModelError::RankDeficient { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(ModelError::InfeasibleInstance(format!(
                "no full-rank draw after {MAX_CODED_ATTEMPTS} attempts"
            )))
        }
    }
}

/// Chooses distinct packet indices per user so that every packet is held by
/// someone: first deal a shuffled copy of all packets round-robin over the
/// free slots, then top each user up with random packets it lacks.
fn raw_assignment(coverage: &[usize], n: usize, rng: &mut ChaCha20Rng) -> Vec<Vec<usize>> {
    let m = coverage.len();
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut user = rng.random_range(0..m);
    for k in order {
        while held[user].len() >= coverage[user] {
            user = (user + 1) % m;
        }
        held[user].push(k);
        user = (user + 1) % m;
    }
    for (i, packets) in held.iter_mut().enumerate() {
        let mut missing: Vec<usize> = (0..n).filter(|k| !packets.contains(k)).collect();
        missing.shuffle(rng);
        let need = coverage[i] - packets.len();
        packets.extend(missing.into_iter().take(need));
        packets.sort_unstable();
    }
    held
}

/// Raw-packet instance where user `i` holds the packets listed in
/// `holdings[i]` (zero-based packet indices).
pub fn raw_instance(
    field: FieldSpec,
    packets: usize,
    holdings: &[&[usize]],
) -> Result<ProblemInstance, ModelError> {
    let observations = holdings
        .iter()
        .map(|held| {
            let rows: Vec<Vec<u64>> = held
                .iter()
                .map(|&k| (0..packets).map(|c| (c == k) as u64).collect())
                .collect();
            FMatrix::from_rows(field, packets, &rows)
        })
        .collect::<Result<Vec<_>, _>>()?;
    ProblemInstance::new(field, packets, observations)
}

/// The three-user, six-packet running example: user 1 holds `{w1, w2}`,
/// user 2 holds `{w2, w4, w5, w6}` and user 3 holds `{w3, w4, w5, w6}`.
pub fn example1(field: FieldSpec) -> ProblemInstance {
    raw_instance(field, 6, &[&[0, 1], &[1, 3, 4, 5], &[2, 3, 4, 5]])
        .expect("example instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(users: &[usize]) -> UserSubset {
        // tests speak in one-based user labels
        UserSubset::from_users(users.iter().map(|u| u - 1))
    }

    fn ex1() -> CutSetOracle {
        CutSetOracle::new(example1(FieldSpec::new(257).unwrap()))
    }

    #[test]
    fn subset_enumeration_is_ordered_and_complete() {
        let set = UserSubset::from_bits(0b1011);
        let subs: Vec<u32> = set.subsets().map(|s| s.bits()).collect();
        assert_eq!(subs, vec![0, 1, 2, 3, 8, 9, 10, 11]);
        assert_eq!(UserSubset::EMPTY.subsets().count(), 1);
        assert_eq!(set.iter().collect::<Vec<_>>(), vec![0, 1, 3]);
        assert_eq!(UserSubset::full(30).len(), 30);
    }

    #[test]
    fn joint_rank_example() {
        let o = ex1();
        assert_eq!(o.joint_rank(s(&[2])), 4);
        assert_eq!(o.joint_rank(UserSubset::EMPTY), 0);
        assert_eq!(o.joint_rank(s(&[1, 2, 3])), 6);
        assert_eq!(o.joint_rank(s(&[1, 3])), 6);
        let before = o.memo_len();
        assert_eq!(o.joint_rank(s(&[2])), 4);
        assert_eq!(o.memo_len(), before);
    }

    #[test]
    fn f_tables_match_running_example() {
        let o = ex1();
        let f4 = [
            (&[1][..], 0),
            (&[2], 2),
            (&[3], 2),
            (&[1, 2], 3),
            (&[1, 3], 4),
            (&[2, 3], 3),
            (&[1, 2, 3], 4),
        ];
        for (set, v) in f4 {
            assert_eq!(o.cut_set_f(4, s(set)), v, "f_4({set:?})");
        }
        let f5 = [
            (&[1][..], 1),
            (&[2], 3),
            (&[3], 3),
            (&[1, 2], 4),
            (&[1, 3], 5),
            (&[2, 3], 4),
            (&[1, 2, 3], 5),
        ];
        for (set, v) in f5 {
            assert_eq!(o.cut_set_f(5, s(set)), v, "f_5({set:?})");
        }
        assert_eq!(o.cut_set_f(5, UserSubset::EMPTY), 0);
        assert_eq!(o.cut_set_f(0, s(&[1])), -4);
    }

    #[test]
    fn loader_errors_are_distinct() {
        let bad_entry = r#"{"q":5,"N":2,"users":[{"rows":[[1,0],[0,7]]}]}"#;
        let ragged = r#"{"q":5,"N":2,"users":[{"rows":[[1,0],[0]]}]}"#;
        let deficient = r#"{"q":5,"N":2,"users":[{"rows":[[1,0]]},{"rows":[[2,0]]}]}"#;
        let e1 = ProblemInstance::from_json(bad_entry).unwrap_err();
        let e2 = ProblemInstance::from_json(ragged).unwrap_err();
        let e3 = ProblemInstance::from_json(deficient).unwrap_err();
        assert!(matches!(
            e1,
            ModelError::BadRows {
                source: GfError::EntryOutOfRange { .. },
                ..
            }
        ));
        assert!(matches!(
            e2,
            ModelError::BadRows {
                source: GfError::Ragged { .. },
                ..
            }
        ));
        assert!(matches!(
            e3,
            ModelError::RankDeficient {
                rank: 1,
                packets: 2
            }
        ));
        let msgs = [e1.to_string(), e2.to_string(), e3.to_string()];
        assert!(msgs[0] != msgs[1] && msgs[1] != msgs[2] && msgs[0] != msgs[2]);
        assert!(ProblemInstance::from_json(r#"{"q":4,"N":1,"users":[{"rows":[[1]]}]}"#).is_err());
    }

    #[test]
    fn json_round_trip_and_digest() {
        let inst = example1(FieldSpec::new(19).unwrap());
        let back = ProblemInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.digest(), inst.digest());
        assert!(inst.to_json().contains("\"N\":6"));
    }

    #[test]
    fn generate_raw_example_coverage() {
        let spec = GenerateSpec {
            kind: InstanceKind::Raw,
            packets: 4,
            field: FieldSpec::new(257).unwrap(),
            coverage: vec![1, 1],
            seed: 0,
        };
        assert!(matches!(
            generate_instance(&spec),
            Err(ModelError::InfeasibleInstance(_))
        ));
    }

    #[test]
    fn generate_is_deterministic_and_full_rank() {
        for kind in [InstanceKind::Raw, InstanceKind::Coded] {
            for seed in 0..20 {
                let spec = GenerateSpec {
                    kind,
                    packets: 5,
                    field: FieldSpec::new(3).unwrap(),
                    coverage: vec![2, 1, 2],
                    seed,
                };
                let a = generate_instance(&spec).unwrap();
                let b = generate_instance(&spec).unwrap();
                assert_eq!(a, b);
                assert_eq!(a.stacked(a.all_users()).rank(), 5);
                for (i, obs) in a.observations().iter().enumerate() {
                    assert_eq!(obs.rows(), spec.coverage[i]);
                }
            }
        }
        let coded = GenerateSpec {
            kind: InstanceKind::Coded,
            packets: 3,
            field: FieldSpec::new(257).unwrap(),
            coverage: vec![2, 2],
            seed: 11,
        };
        let inst = generate_instance(&coded).unwrap();
        assert_eq!(inst.stacked(inst.all_users()).rank(), 3);
    }
}
