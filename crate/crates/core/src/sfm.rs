//! Minimization of `S ↦ f_β(S ∪ {i}) − R(S)` over subsets of a free ground
//! set, with `i` always included.
//!
//! The minimizer is exhaustive. Subsets are visited in increasing bitmask
//! order and ties keep the first (smallest) bitmask, so results do not
//! depend on whether the enumeration ran in parallel.

use rayon::prelude::*;

use crate::model::{CutSetOracle, UserSubset};

/// Free sets at least this large are enumerated on the rayon pool.
const PARALLEL_THRESHOLD: usize = 14;

/// A pinned element together with the subsets it may be combined with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundSet {
    pinned: usize,
    free: UserSubset,
}

impl GroundSet {
    /// # Panics
    /// If `free` contains `pinned`.
    pub fn new(pinned: usize, free: UserSubset) -> Self {
        assert!(
            !free.contains(pinned),
            "pinned user {pinned} may not be in the free set"
        );
        Self { pinned, free }
    }

    #[inline]
    pub fn pinned(&self) -> usize {
        self.pinned
    }

    #[inline]
    pub fn free(&self) -> UserSubset {
        self.free
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PinnedMin {
    pub value: i64,
    /// Minimizing subset of the free set (the pinned element is implied).
    pub argmin: UserSubset,
}

/// `min { f_β(S ∪ {i}) − R(S) : S ⊆ free }` with the smallest minimizing
/// bitmask. `rates` is indexed by user and must cover every free element.
pub fn min_pinned(oracle: &CutSetOracle, beta: i64, rates: &[i64], ground: GroundSet) -> PinnedMin {
    let members: Vec<usize> = ground.free.iter().collect();
    let pinned = UserSubset::singleton(ground.pinned);
    let eval = |k: u64| -> (i64, u64) {
        let mut s = UserSubset::EMPTY;
        let mut r = 0i64;
        for (bit, &u) in members.iter().enumerate() {
            if k >> bit & 1 == 1 {
                s = s.with(u);
                r += rates[u];
            }
        }
        (oracle.cut_set_f(beta, s.union(pinned)) - r, k)
    };
    let count = 1u64 << members.len();
    let (value, k) = if members.len() >= PARALLEL_THRESHOLD {
        (0..count)
            .into_par_iter()
            .map(eval)
            .min()
            .expect("at least the empty set")
    } else {
        (0..count).map(eval).min().expect("at least the empty set")
    };
    // members are increasing, so k order is bitmask order
    let argmin = UserSubset::from_users(
        members
            .iter()
            .enumerate()
            .filter(|(bit, _)| k >> bit & 1 == 1)
            .map(|(_, &u)| u),
    );
    PinnedMin { value, argmin }
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
    fn running_example_steps() {
        let o = ex1();
        // user 3 against prefix {1} with R_1 = 1
        let r = min_pinned(
            &o,
            5,
            &[1, 0, 0],
            GroundSet::new(2, UserSubset::from_users([0])),
        );
        assert_eq!(r.value, 3);
        assert_eq!(r.argmin, UserSubset::EMPTY);
        // user 2 against prefix {1, 3} with R = (1, _, 3)
        let r = min_pinned(
            &o,
            5,
            &[1, 0, 3],
            GroundSet::new(1, UserSubset::from_users([0, 2])),
        );
        assert_eq!(r.value, 1);
    }

    #[test]
    fn empty_free_set_is_singleton_value() {
        let o = ex1();
        for i in 0..3 {
            let r = min_pinned(&o, 5, &[0, 0, 0], GroundSet::new(i, UserSubset::EMPTY));
            assert_eq!(r.value, o.cut_set_f(5, UserSubset::singleton(i)));
        }
    }

    #[test]
    fn ties_break_to_smallest_bitmask() {
        let o = ex1();
        // f_5({1,3}) - R_1 = 5 - 2 = 3 = f_5({3}); the empty set wins
        let r = min_pinned(
            &o,
            5,
            &[2, 0, 0],
            GroundSet::new(2, UserSubset::from_users([0])),
        );
        assert_eq!(r.value, 3);
        assert_eq!(r.argmin, UserSubset::EMPTY);
    }

    #[test]
    #[should_panic]
    fn pinned_in_free_set_panics() {
        GroundSet::new(1, UserSubset::from_users([1, 2]));
    }
}
