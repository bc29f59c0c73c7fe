//! Arithmetic and dense linear algebra over prime fields GF(p).
//!
//! Elements are stored as canonical `u32` representatives in `[0, p)`.
//! Products are formed in `u64`, so any prime modulus that fits in a `u32`
//! is supported.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A field element. Always canonical with respect to the [`FieldSpec`] it
/// was produced by.
pub type Elem = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("field modulus {0} is not prime")]
    NotPrime(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("entry {value} at row {row}, column {col} is not below the field order {p}")]
    EntryOutOfRange {
        row: usize,
        col: usize,
        value: u64,
        p: u32,
    },
    #[error("ragged rows: row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("system is singular (rank {rank} < {cols} unknowns)")]
    SingularSystem { rank: usize, cols: usize },
    #[error("system is inconsistent")]
    Inconsistent,
    #[error("operands live in different fields (GF({0}) vs GF({1}))")]
    FieldMismatch(u32, u32),
}

/// A prime field GF(p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct FieldSpec {
    p: u32,
}

impl FieldSpec {
    /// Default order for generated instances.
    pub const DEFAULT_ORDER: u32 = 257;

    pub fn new(p: u32) -> Result<Self, GfError> {
        if is_prime(p as u64) {
            Ok(Self { p })
        } else {
            Err(GfError::NotPrime(p as u64))
        }
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.p
    }

    /// Reduce an arbitrary integer into the field.
    #[inline]
    pub fn reduce(&self, v: i64) -> Elem {
        v.rem_euclid(self.p as i64) as Elem
    }

    #[inline]
    pub fn is_canonical(&self, a: u64) -> bool {
        a < self.p as u64
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        let s = a as u64 + b as u64;
        let p = self.p as u64;
        (if s >= p { s - p } else { s }) as Elem
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        if a >= b {
            a - b
        } else {
            (a as u64 + self.p as u64 - b as u64) as Elem
        }
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        ((a as u64 * b as u64) % self.p as u64) as Elem
    }

    pub fn pow(&self, mut base: Elem, mut exp: u64) -> Elem {
        let mut acc: Elem = 1 % self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: Elem) -> Result<Elem, GfError> {
        if a == 0 {
            return Err(GfError::DivisionByZero);
        }
        Ok(self.pow(a, self.p as u64 - 2))
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Inner product of two equal-length slices.
    pub fn dot(&self, a: &[Elem], b: &[Elem]) -> Elem {
        debug_assert_eq!(a.len(), b.len());
        let p = self.p as u64;
        a.iter()
            .zip(b)
            .fold(0u64, |acc, (&x, &y)| (acc + x as u64 * y as u64) % p) as Elem
    }

    /// `dst += factor * src`, entrywise.
    fn axpy(&self, dst: &mut [Elem], factor: Elem, src: &[Elem]) {
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = self.add(*d, self.mul(factor, s));
        }
    }
}

impl TryFrom<u32> for FieldSpec {
    type Error = GfError;

    fn try_from(p: u32) -> Result<Self, Self::Error> {
        FieldSpec::new(p)
    }
}

impl From<FieldSpec> for u32 {
    fn from(f: FieldSpec) -> u32 {
        f.p
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.p)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Dense row-major matrix over a prime field.
#[derive(Clone, PartialEq, Eq)]
pub struct FMatrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

impl fmt::Debug for FMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FMatrix {}x{} over {}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl FMatrix {
    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.order();
        }
        m
    }

    /// Build from nested rows, rejecting ragged input and non-canonical
    /// entries. `cols` is required so that a zero-row matrix still has a
    /// well-defined width.
    pub fn from_rows<R: AsRef<[u64]>>(
        field: FieldSpec,
        cols: usize,
        rows: &[R],
    ) -> Result<Self, GfError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(GfError::Ragged {
                    row: r,
                    expected: cols,
                    found: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !field.is_canonical(v) {
                    return Err(GfError::EntryOutOfRange {
                        row: r,
                        col: c,
                        value: v,
                        p: field.order(),
                    });
                }
                data.push(v as Elem);
            }
        }
        Ok(Self {
            field,
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Build from a flat row-major buffer of canonical elements.
    pub fn from_flat(
        field: FieldSpec,
        rows: usize,
        cols: usize,
        data: Vec<Elem>,
    ) -> Result<Self, GfError> {
        if data.len() != rows * cols {
            return Err(GfError::ShapeError(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|&v| v >= field.order()) {
            return Err(GfError::EntryOutOfRange {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
                value: data[pos] as u64,
                p: field.order(),
            });
        }
        Ok(Self {
            field,
            rows,
            cols,
            data,
        })
    }

    /// Row vectors given as field elements (assumed canonical).
    pub(crate) fn from_elem_rows(field: FieldSpec, cols: usize, rows: &[&[Elem]]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            debug_assert_eq!(row.len(), cols);
            data.extend_from_slice(row);
        }
        Self {
            field,
            rows: rows.len(),
            cols,
            data,
        }
    }

    #[inline]
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Elem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Elem) {
        assert!(v < self.field.order(), "non-canonical entry {v}");
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Elem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[Elem]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn as_slice(&self) -> &[Elem] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.row_iter()
            .map(|r| r.iter().map(|&v| v as u64).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    /// Vertical concatenation. All parts must share field and width.
    pub fn vstack<'a, I>(field: FieldSpec, cols: usize, parts: I) -> Result<Self, GfError>
    where
        I: IntoIterator<Item = &'a FMatrix>,
    {
        let mut out = Self::zeros(field, 0, cols);
        for part in parts {
            if part.field != field {
                return Err(GfError::FieldMismatch(field.order(), part.field.order()));
            }
            if part.cols != cols {
                return Err(GfError::ShapeError(format!(
                    "cannot stack a {}-column block onto {cols} columns",
                    part.cols
                )));
            }
            out.data.extend_from_slice(&part.data);
            out.rows += part.rows;
        }
        Ok(out)
    }

    pub fn push_row(&mut self, row: &[Elem]) -> Result<(), GfError> {
        if row.len() != self.cols {
            return Err(GfError::ShapeError(format!(
                "row of length {} for {} columns",
                row.len(),
                self.cols
            )));
        }
        debug_assert!(row.iter().all(|&v| v < self.field.order()));
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Sub-matrix consisting of the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self {
            field: self.field,
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// `M · x` for a column vector `x`.
    pub fn mul_vec(&self, x: &[Elem]) -> Result<Vec<Elem>, GfError> {
        if x.len() != self.cols {
            return Err(GfError::ShapeError(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(self.row_iter().map(|r| self.field.dot(r, x)).collect())
    }

    /// `y · M` for a row vector `y`.
    pub fn left_mul_vec(&self, y: &[Elem]) -> Result<Vec<Elem>, GfError> {
        if y.len() != self.rows {
            return Err(GfError::ShapeError(format!(
                "row vector of length {} against {} rows",
                y.len(),
                self.rows
            )));
        }
        let mut out = vec![0; self.cols];
        for (r, &coef) in y.iter().enumerate() {
            if coef != 0 {
                self.field.axpy(&mut out, coef, self.row(r));
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &FMatrix) -> Result<FMatrix, GfError> {
        if self.field != other.field {
            return Err(GfError::FieldMismatch(
                self.field.order(),
                other.field.order(),
            ));
        }
        if self.cols != other.rows {
            return Err(GfError::ShapeError(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = FMatrix::zeros(self.field, self.rows, other.cols);
        for r in 0..self.rows {
            let row = other.left_mul_vec(self.row(r))?;
            out.data[r * other.cols..(r + 1) * other.cols].copy_from_slice(&row);
        }
        Ok(out)
    }

    /// Dimension of the row space. The input is not modified.
    pub fn rank(&self) -> usize {
        let mut work = self.data.clone();
        row_reduce(self.field, &mut work, self.rows, self.cols, self.cols).len()
    }

    /// Solve `M · w = rhs` for a matrix of full column rank. Extra rows are
    /// allowed as long as the system is consistent.
    pub fn solve_full_rank(&self, rhs: &[Elem]) -> Result<Vec<Elem>, GfError> {
        if rhs.len() != self.rows {
            return Err(GfError::ShapeError(format!(
                "right-hand side of length {} for {} rows",
                rhs.len(),
                self.rows
            )));
        }
        let width = self.cols + 1;
        let mut aug = Vec::with_capacity(self.rows * width);
        for (r, &b) in rhs.iter().enumerate() {
            if b >= self.field.order() {
                return Err(GfError::EntryOutOfRange {
                    row: r,
                    col: self.cols,
                    value: b as u64,
                    p: self.field.order(),
                });
            }
            aug.extend_from_slice(self.row(r));
            aug.push(b);
        }
        let pivots = row_reduce(self.field, &mut aug, self.rows, width, self.cols);
        if pivots.len() < self.cols {
            return Err(GfError::SingularSystem {
                rank: pivots.len(),
                cols: self.cols,
            });
        }
        // Rows below the pivot block must reduce to 0 = 0.
        if (self.cols..self.rows).any(|r| aug[r * width + self.cols] != 0) {
            return Err(GfError::Inconsistent);
        }
        // Fully reduced: pivot row k has a 1 in column k and zeros elsewhere.
        Ok((0..self.cols).map(|k| aug[k * width + self.cols]).collect())
    }
}

/// Gauss–Jordan elimination in place on a `rows x width` buffer, pivoting
/// only within the first `pivot_cols` columns. Pivot rows are normalised to
/// a leading one and cleared above and below. For each column the pivot is
/// the lowest-index remaining row with a nonzero entry, which makes the
/// elimination order reproducible. Returns the pivot columns in order;
/// their count is the rank of the leading block.
fn row_reduce(
    field: FieldSpec,
    data: &mut [Elem],
    rows: usize,
    width: usize,
    pivot_cols: usize,
) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut next = 0usize;
    for col in 0..pivot_cols {
        if next == rows {
            break;
        }
        let Some(src) = (next..rows).find(|&r| data[r * width + col] != 0) else {
            continue;
        };
        if src != next {
            for c in 0..width {
                data.swap(src * width + c, next * width + c);
            }
        }
        let inv = field
            .inv(data[next * width + col])
            .expect("pivot is nonzero");
        for c in col..width {
            data[next * width + c] = field.mul(data[next * width + c], inv);
        }
        let (before, rest) = data.split_at_mut(next * width);
        let (pivot_row, after) = rest.split_at_mut(width);
        for other in before
            .chunks_exact_mut(width)
            .chain(after.chunks_exact_mut(width))
        {
            let factor = other[col];
            if factor != 0 {
                field.axpy(&mut other[col..], field.neg(factor), &pivot_row[col..]);
            }
        }
        pivots.push(col);
        next += 1;
    }
    pivots
}

/// A row space kept in reduced echelon form so that rows can be appended
/// one at a time and the rank read off without re-eliminating.
#[derive(Debug, Clone)]
pub struct EchelonBasis {
    field: FieldSpec,
    cols: usize,
    // (pivot column, row with a 1 at the pivot and zeros at other pivots)
    rows: Vec<(usize, Vec<Elem>)>,
}

impl EchelonBasis {
    pub fn new(field: FieldSpec, cols: usize) -> Self {
        Self {
            field,
            cols,
            rows: Vec::new(),
        }
    }

    pub fn from_matrix(m: &FMatrix) -> Self {
        let mut basis = Self::new(m.field(), m.cols());
        for r in m.row_iter() {
            basis.insert(r);
        }
        basis
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Residue of `row` after eliminating against the current basis.
    fn reduce(&self, row: &[Elem]) -> Vec<Elem> {
        let mut v = row.to_vec();
        for (pc, b) in &self.rows {
            let factor = v[*pc];
            if factor != 0 {
                self.field.axpy(&mut v, self.field.neg(factor), b);
            }
        }
        v
    }

    pub fn contains(&self, row: &[Elem]) -> bool {
        assert_eq!(row.len(), self.cols);
        self.reduce(row).iter().all(|&v| v == 0)
    }

    /// Adds `row` to the span. Returns whether the rank grew.
    pub fn insert(&mut self, row: &[Elem]) -> bool {
        assert_eq!(row.len(), self.cols);
        let mut v = self.reduce(row);
        let Some(pc) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = self.field.inv(v[pc]).expect("nonzero");
        for x in v.iter_mut() {
            *x = self.field.mul(*x, inv);
        }
        for (_, b) in self.rows.iter_mut() {
            let factor = b[pc];
            if factor != 0 {
                self.field.axpy(b, self.field.neg(factor), &v);
            }
        }
        self.rows.push((pc, v));
        true
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    const PRIMES: [u32; 4] = [2, 3, 5, 257];

    fn matrix_strategy(max_rows: usize, max_cols: usize) -> impl Strategy<Value = FMatrix> {
        (0..PRIMES.len(), 0..=max_rows, 1..=max_cols).prop_flat_map(|(pi, r, c)| {
            let p = PRIMES[pi];
            proptest::collection::vec(0..p, r * c).prop_map(move |data| {
                FMatrix::from_flat(FieldSpec::new(p).unwrap(), r, c, data).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn rank_equals_transpose_rank(m in matrix_strategy(6, 6)) {
            prop_assert_eq!(m.rank(), m.transpose().rank());
            prop_assert!(m.rank() <= m.rows().min(m.cols()));
        }

        #[test]
        fn incremental_rank_matches_batch(m in matrix_strategy(8, 5)) {
            prop_assert_eq!(EchelonBasis::from_matrix(&m).rank(), m.rank());
        }

        #[test]
        fn rank_submodular_in_row_subsets(m in matrix_strategy(4, 4)) {
            let ranks: Vec<usize> = (0u32..1 << m.rows())
                .map(|mask| {
                    let rows: Vec<usize> = (0..m.rows()).filter(|r| mask >> r & 1 == 1).collect();
                    m.select_rows(&rows).rank()
                })
                .collect();
            for s in 0..ranks.len() {
                for t in 0..ranks.len() {
                    prop_assert!(ranks[s] + ranks[t] >= ranks[s | t] + ranks[s & t]);
                }
            }
        }

        #[test]
        fn solve_round_trip(m in matrix_strategy(7, 4), seed in any::<u64>()) {
            let f = m.field();
            let w: Vec<Elem> = (0..m.cols())
                .map(|k| f.reduce((seed.rotate_left(k as u32 * 7) % 1_000_003) as i64))
                .collect();
            let rhs = m.mul_vec(&w).unwrap();
            if m.rank() == m.cols() {
                prop_assert_eq!(m.solve_full_rank(&rhs).unwrap(), w);
            } else {
                let is_singular = matches!(m.solve_full_rank(&rhs), Err(GfError::SingularSystem { .. }));
                prop_assert!(is_singular);
            }
        }
    }
}
