//! Exact arithmetic over prime fields F_q: scalars, vectors, matrices,
//! rank and linear solving.
//!
//! The modulus `q` must be a prime no larger than 2^16 so that every value
//! fits in a `u16` and all arithmetic stays exact in 64-bit intermediates.
//! Extension fields are out of scope.

use std::fmt;

use rand::Rng;

/// Largest supported modulus. All primes up to this bound fit in `u16`.
pub const MAX_MODULUS: u32 = 1 << 16;

/// Errors from field and linear-algebra operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldError {
    /// The modulus is not a prime in the supported range.
    NonPrimeModulus(u32),
    /// Two operands live in different fields.
    ModulusMismatch { left: u16, right: u16 },
    /// Multiplicative inverse of zero requested.
    ZeroInverse,
    /// A matrix or vector was constructed with a zero dimension.
    Degenerate { rows: usize, cols: usize },
    /// Operand shapes are incompatible.
    DimensionMismatch { expected: usize, got: usize },
    /// The coefficient matrix does not determine a unique solution.
    Unsolvable { rank: usize, required: usize },
    /// The right-hand side is not in the span of the coefficient matrix.
    Inconsistent,
    /// An index is outside the valid range.
    IndexOutOfRange { index: usize, len: usize },
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::NonPrimeModulus(q) => write!(f, "modulus {} is not a supported prime", q),
            FieldError::ModulusMismatch { left, right } => {
                write!(f, "modulus mismatch: {} vs {}", left, right)
            }
            FieldError::ZeroInverse => write!(f, "zero has no multiplicative inverse"),
            FieldError::Degenerate { rows, cols } => {
                write!(f, "degenerate shape {}x{}", rows, cols)
            }
            FieldError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {}, got {}", expected, got)
            }
            FieldError::Unsolvable { rank, required } => {
                write!(f, "system unsolvable: rank {} < {}", rank, required)
            }
            FieldError::Inconsistent => write!(f, "inconsistent linear system"),
            FieldError::IndexOutOfRange { index, len } => {
                write!(f, "index {} out of range for length {}", index, len)
            }
        }
    }
}

impl std::error::Error for FieldError {}

/// Trial-division primality test. Desk-scale moduli keep this cheap.
pub fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    if q.is_multiple_of(2) {
        return q == 2;
    }
    let mut d = 3u32;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

fn check_modulus(q: u32) -> Result<u16, FieldError> {
    if q >= MAX_MODULUS || !is_prime(q) {
        return Err(FieldError::NonPrimeModulus(q));
    }
    Ok(q as u16)
}

/// An element of F_q for a prime q, carrying its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u16,
    modulus: u16,
}

impl FieldElement {
    /// Builds an element, validating the modulus by trial division and
    /// reducing `value` mod q.
    pub fn new(value: u32, q: u32) -> Result<Self, FieldError> {
        let modulus = check_modulus(q)?;
        Ok(Self {
            value: (value % q) as u16,
            modulus,
        })
    }

    /// Internal constructor for values already known to be reduced and a
    /// modulus already validated.
    pub(crate) fn from_raw(value: u16, modulus: u16) -> Self {
        debug_assert!(value < modulus);
        Self { value, modulus }
    }

    pub fn value(&self) -> u16 {
        self.value
    }

    pub fn modulus(&self) -> u16 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &Self) -> Result<(), FieldError> {
        if self.modulus != other.modulus {
            return Err(FieldError::ModulusMismatch {
                left: self.modulus,
                right: other.modulus,
            });
        }
        Ok(())
    }

    /// Addition modulo q.
    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.same_field(other)?;
        let q = self.modulus as u32;
        let v = (self.value as u32 + other.value as u32) % q;
        Ok(Self::from_raw(v as u16, self.modulus))
    }

    /// Subtraction modulo q.
    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.same_field(other)?;
        let q = self.modulus as u32;
        let v = (self.value as u32 + q - other.value as u32) % q;
        Ok(Self::from_raw(v as u16, self.modulus))
    }

    /// Multiplication modulo q.
    pub fn mul(&self, other: &Self) -> Result<Self, FieldError> {
        self.same_field(other)?;
        let q = self.modulus as u64;
        let v = (self.value as u64 * other.value as u64) % q;
        Ok(Self::from_raw(v as u16, self.modulus))
    }

    pub fn neg(&self) -> Self {
        let q = self.modulus as u32;
        Self::from_raw(((q - self.value as u32) % q) as u16, self.modulus)
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(&self) -> Result<Self, FieldError> {
        if self.value == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let q = self.modulus as i64;
        let (mut r0, mut r1) = (q, self.value as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let k = r0 / r1;
            (r0, r1) = (r1, r0 - k * r1);
            (t0, t1) = (t1, t0 - k * t1);
        }
        debug_assert_eq!(r0, 1, "modulus is prime so gcd must be 1");
        Ok(Self::from_raw(t0.rem_euclid(q) as u16, self.modulus))
    }
}

/// Adds element `a` into `acc` and multiplies raw residues; helpers for the
/// tight loops below. All operands share the validated modulus.
#[inline]
fn raw_add(a: u16, b: u16, q: u16) -> u16 {
    ((a as u32 + b as u32) % q as u32) as u16
}

#[inline]
fn raw_sub(a: u16, b: u16, q: u16) -> u16 {
    ((a as u32 + q as u32 - b as u32) % q as u32) as u16
}

#[inline]
fn raw_mul(a: u16, b: u16, q: u16) -> u16 {
    ((a as u64 * b as u64) % q as u64) as u16
}

fn raw_inv(a: u16, q: u16) -> u16 {
    FieldElement::from_raw(a, q).inv().expect("nonzero pivot").value()
}

/// A vector over F_q. All entries share one modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldVector {
    modulus: u16,
    entries: Vec<u16>,
}

impl FieldVector {
    pub fn new(entries: &[u32], q: u32) -> Result<Self, FieldError> {
        let modulus = check_modulus(q)?;
        if entries.is_empty() {
            return Err(FieldError::Degenerate { rows: 0, cols: 1 });
        }
        Ok(Self {
            modulus,
            entries: entries.iter().map(|&v| (v % q) as u16).collect(),
        })
    }

    pub fn zero(len: usize, q: u32) -> Result<Self, FieldError> {
        if len == 0 {
            return Err(FieldError::Degenerate { rows: 0, cols: 1 });
        }
        Self::new(&vec![0u32; len], q)
    }

    pub(crate) fn from_raw(entries: Vec<u16>, modulus: u16) -> Self {
        Self { modulus, entries }
    }

    pub fn modulus(&self) -> u16 {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> Result<FieldElement, FieldError> {
        self.entries
            .get(i)
            .map(|&v| FieldElement::from_raw(v, self.modulus))
            .ok_or(FieldError::IndexOutOfRange {
                index: i,
                len: self.entries.len(),
            })
    }

    /// Raw residues, in order.
    pub fn values(&self) -> &[u16] {
        &self.entries
    }

    fn same_shape(&self, other: &Self) -> Result<(), FieldError> {
        if self.modulus != other.modulus {
            return Err(FieldError::ModulusMismatch {
                left: self.modulus,
                right: other.modulus,
            });
        }
        if self.entries.len() != other.entries.len() {
            return Err(FieldError::DimensionMismatch {
                expected: self.entries.len(),
                got: other.entries.len(),
            });
        }
        Ok(())
    }

    /// Componentwise sum modulo q.
    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.same_shape(other)?;
        let q = self.modulus;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| raw_add(a, b, q))
            .collect();
        Ok(Self::from_raw(entries, q))
    }

    /// Componentwise difference modulo q.
    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.same_shape(other)?;
        let q = self.modulus;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| raw_sub(a, b, q))
            .collect();
        Ok(Self::from_raw(entries, q))
    }

    /// Scales every entry by `c`.
    pub fn scale(&self, c: &FieldElement) -> Result<Self, FieldError> {
        if c.modulus() != self.modulus {
            return Err(FieldError::ModulusMismatch {
                left: self.modulus,
                right: c.modulus(),
            });
        }
        let q = self.modulus;
        let entries = self.entries.iter().map(|&a| raw_mul(a, c.value(), q)).collect();
        Ok(Self::from_raw(entries, q))
    }
}

/// A dense row-major matrix over F_q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    modulus: u16,
    rows: usize,
    cols: usize,
    data: Vec<u16>,
}

impl FieldMatrix {
    /// Builds a matrix from row-major entries. Zero-dimension shapes are
    /// rejected rather than silently accepted as empties.
    pub fn new(rows: usize, cols: usize, entries: &[u32], q: u32) -> Result<Self, FieldError> {
        let modulus = check_modulus(q)?;
        if rows == 0 || cols == 0 {
            return Err(FieldError::Degenerate { rows, cols });
        }
        if entries.len() != rows * cols {
            return Err(FieldError::DimensionMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        Ok(Self {
            modulus,
            rows,
            cols,
            data: entries.iter().map(|&v| (v % q) as u16).collect(),
        })
    }

    pub fn zero(rows: usize, cols: usize, q: u32) -> Result<Self, FieldError> {
        Self::new(rows, cols, &vec![0u32; rows * cols], q)
    }

    pub fn identity(n: usize, q: u32) -> Result<Self, FieldError> {
        let mut m = Self::zero(n, n, q)?;
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        Ok(m)
    }

    /// Stacks row vectors into a matrix. All rows must share length and modulus.
    pub fn from_rows(rows: &[FieldVector]) -> Result<Self, FieldError> {
        let first = rows.first().ok_or(FieldError::Degenerate { rows: 0, cols: 0 })?;
        let q = first.modulus();
        let cols = first.len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            first.same_shape(r)?;
            data.extend_from_slice(r.values());
        }
        Ok(Self {
            modulus: q,
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn modulus(&self) -> u16 {
        self.modulus
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        assert!(i < self.rows && j < self.cols);
        FieldElement::from_raw(self.data[i * self.cols + j], self.modulus)
    }

    pub(crate) fn raw(&self, i: usize, j: usize) -> u16 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) -> Result<(), FieldError> {
        if v.modulus() != self.modulus {
            return Err(FieldError::ModulusMismatch {
                left: self.modulus,
                right: v.modulus(),
            });
        }
        assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v.value();
        Ok(())
    }

    /// Extracts row `i` as a vector.
    pub fn row(&self, i: usize) -> Result<FieldVector, FieldError> {
        if i >= self.rows {
            return Err(FieldError::IndexOutOfRange {
                index: i,
                len: self.rows,
            });
        }
        Ok(FieldVector::from_raw(
            self.data[i * self.cols..(i + 1) * self.cols].to_vec(),
            self.modulus,
        ))
    }

    /// Textbook matrix product over F_q.
    pub fn matmul(&self, other: &Self) -> Result<Self, FieldError> {
        if self.modulus != other.modulus {
            return Err(FieldError::ModulusMismatch {
                left: self.modulus,
                right: other.modulus,
            });
        }
        if self.cols != other.rows {
            return Err(FieldError::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let q = self.modulus;
        let mut out = vec![0u16; self.rows * other.cols];
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u16;
                for k in 0..self.cols {
                    acc = raw_add(acc, raw_mul(self.raw(i, k), other.raw(k, j), q), q);
                }
                out[i * other.cols + j] = acc;
            }
        }
        Ok(Self {
            modulus: q,
            rows: self.rows,
            cols: other.cols,
            data: out,
        })
    }

    /// Applies the matrix to a vector.
    pub fn matvec(&self, v: &FieldVector) -> Result<FieldVector, FieldError> {
        if self.modulus != v.modulus() {
            return Err(FieldError::ModulusMismatch {
                left: self.modulus,
                right: v.modulus(),
            });
        }
        if self.cols != v.len() {
            return Err(FieldError::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        let q = self.modulus;
        let out = (0..self.rows)
            .map(|i| {
                let mut acc = 0u16;
                for k in 0..self.cols {
                    acc = raw_add(acc, raw_mul(self.raw(i, k), v.values()[k], q), q);
                }
                acc
            })
            .collect();
        Ok(FieldVector::from_raw(out, q))
    }

    /// Rank via Gaussian elimination. Pivots take the first nonzero entry in
    /// the column, lowest row index first, so the result is deterministic.
    pub fn rank(&self) -> usize {
        let mut work = self.data.clone();
        gaussian_rank(&mut work, self.rows, self.cols, self.modulus)
    }
}

fn gaussian_rank(data: &mut [u16], rows: usize, cols: usize, q: u16) -> usize {
    let mut pivot_row = 0;
    for col in 0..cols {
        if pivot_row == rows {
            break;
        }
        let Some(src) = (pivot_row..rows).find(|&r| data[r * cols + col] != 0) else {
            continue;
        };
        if src != pivot_row {
            for j in 0..cols {
                data.swap(pivot_row * cols + j, src * cols + j);
            }
        }
        let inv = raw_inv(data[pivot_row * cols + col], q);
        for j in col..cols {
            data[pivot_row * cols + j] = raw_mul(data[pivot_row * cols + j], inv, q);
        }
        for r in 0..rows {
            if r != pivot_row && data[r * cols + col] != 0 {
                let factor = data[r * cols + col];
                for j in col..cols {
                    let sub = raw_mul(factor, data[pivot_row * cols + j], q);
                    data[r * cols + j] = raw_sub(data[r * cols + j], sub, q);
                }
            }
        }
        pivot_row += 1;
    }
    pivot_row
}

/// Solves `A * W = U` for `W` where `A` is M-by-L with rank L and `U` stacks
/// the observed combinations as rows (M-by-k). Rank deficiency yields an
/// [`FieldError::Unsolvable`] carrying the achieved rank; an inconsistent
/// right-hand side (only possible for M > L) yields
/// [`FieldError::Inconsistent`].
pub fn solve(a: &FieldMatrix, u: &FieldMatrix) -> Result<FieldMatrix, FieldError> {
    if a.modulus() != u.modulus() {
        return Err(FieldError::ModulusMismatch {
            left: a.modulus(),
            right: u.modulus(),
        });
    }
    if a.rows() != u.rows() {
        return Err(FieldError::DimensionMismatch {
            expected: a.rows(),
            got: u.rows(),
        });
    }
    let q = a.modulus();
    let (m, l, k) = (a.rows(), a.cols(), u.cols());
    // Augmented [A | U], reduced to RREF in one pass.
    let width = l + k;
    let mut aug = vec![0u16; m * width];
    for i in 0..m {
        for j in 0..l {
            aug[i * width + j] = a.raw(i, j);
        }
        for j in 0..k {
            aug[i * width + l + j] = u.raw(i, j);
        }
    }
    let mut pivot_row = 0;
    for col in 0..l {
        if pivot_row == m {
            break;
        }
        let Some(src) = (pivot_row..m).find(|&r| aug[r * width + col] != 0) else {
            continue;
        };
        if src != pivot_row {
            for j in 0..width {
                aug.swap(pivot_row * width + j, src * width + j);
            }
        }
        let inv = raw_inv(aug[pivot_row * width + col], q);
        for j in col..width {
            aug[pivot_row * width + j] = raw_mul(aug[pivot_row * width + j], inv, q);
        }
        for r in 0..m {
            if r != pivot_row && aug[r * width + col] != 0 {
                let factor = aug[r * width + col];
                for j in col..width {
                    let sub = raw_mul(factor, aug[pivot_row * width + j], q);
                    aug[r * width + j] = raw_sub(aug[r * width + j], sub, q);
                }
            }
        }
        pivot_row += 1;
    }
    if pivot_row < l {
        return Err(FieldError::Unsolvable {
            rank: pivot_row,
            required: l,
        });
    }
    // Rows below the pivots must have an all-zero right-hand side.
    for r in l..m {
        if aug[r * width + l..(r + 1) * width].iter().any(|&v| v != 0) {
            return Err(FieldError::Inconsistent);
        }
    }
    let mut out = vec![0u32; l * k];
    for i in 0..l {
        for j in 0..k {
            out[i * k + j] = aug[i * width + l + j] as u32;
        }
    }
    FieldMatrix::new(l, k, &out, q as u32)
}

/// Draws an i.i.d. uniform matrix over F_q. Reproducible for a fixed RNG
/// stream.
pub fn random_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    q: u32,
    rng: &mut R,
) -> Result<FieldMatrix, FieldError> {
    let modulus = check_modulus(q)?;
    if rows == 0 || cols == 0 {
        return Err(FieldError::Degenerate { rows, cols });
    }
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(0..modulus))
        .collect();
    Ok(FieldMatrix {
        modulus,
        rows,
        cols,
        data,
    })
}

/// Draws an i.i.d. uniform vector over F_q.
pub fn random_vector<R: Rng + ?Sized>(
    len: usize,
    q: u32,
    rng: &mut R,
) -> Result<FieldVector, FieldError> {
    let modulus = check_modulus(q)?;
    if len == 0 {
        return Err(FieldError::Degenerate { rows: 0, cols: 1 });
    }
    Ok(FieldVector::from_raw(
        (0..len).map(|_| rng.gen_range(0..modulus)).collect(),
        modulus,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn fe(v: u32, q: u32) -> FieldElement {
        FieldElement::new(v, q).unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(fe(3, 5).add(&fe(4, 5)).unwrap(), fe(2, 5));
        assert_eq!(fe(1, 2).add(&fe(1, 2)).unwrap(), fe(0, 2));
        assert_eq!(fe(0, 7).add(&fe(6, 7)).unwrap(), fe(6, 7));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(fe(3, 5).mul(&fe(4, 5)).unwrap(), fe(2, 5));
        assert_eq!(fe(2, 3).mul(&fe(2, 3)).unwrap(), fe(1, 3));
        assert_eq!(fe(1, 11).mul(&fe(9, 11)).unwrap(), fe(9, 11));
    }

    #[test]
    fn modulus_mismatch_rejected() {
        assert!(matches!(
            fe(1, 5).add(&fe(1, 7)),
            Err(FieldError::ModulusMismatch { .. })
        ));
        assert!(matches!(
            fe(1, 5).mul(&fe(1, 7)),
            Err(FieldError::ModulusMismatch { .. })
        ));
    }

    #[test]
    fn nonprime_modulus_rejected() {
        for q in [0, 1, 4, 6, 9, 65536, 100_000] {
            assert!(matches!(
                FieldElement::new(1, q),
                Err(FieldError::NonPrimeModulus(_))
            ));
        }
        for q in [2, 3, 5, 7, 11, 65521] {
            assert!(FieldElement::new(1, q).is_ok());
        }
    }

    #[test]
    fn inv_examples() {
        assert_eq!(fe(2, 5).inv().unwrap(), fe(3, 5));
        assert_eq!(fe(1, 7).inv().unwrap(), fe(1, 7));
        // Oracle: brute-force scan over all 12 nonzero candidates in F_13.
        let mut found = None;
        for j in 1..13u32 {
            if (5 * j) % 13 == 1 {
                found = Some(j);
                break;
            }
        }
        assert_eq!(found, Some(8));
        assert_eq!(fe(5, 13).inv().unwrap(), fe(8, 13));
        assert!(matches!(fe(0, 5).inv(), Err(FieldError::ZeroInverse)));
    }

    #[test]
    fn field_axioms_random_triples() {
        // 10^4 exact checks of associativity, commutativity, distributivity,
        // and inverses across several primes.
        let mut rng = ChaCha8Rng::seed_from_u64(0x1234);
        let primes = [2u32, 3, 5, 7, 11, 251, 65521];
        for _ in 0..10_000 {
            let q = primes[rng.gen_range(0..primes.len())];
            let a = fe(rng.gen_range(0..q), q);
            let b = fe(rng.gen_range(0..q), q);
            let c = fe(rng.gen_range(0..q), q);
            let ab_c = a.add(&b).unwrap().add(&c).unwrap();
            let a_bc = a.add(&b.add(&c).unwrap()).unwrap();
            assert_eq!(ab_c, a_bc);
            assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
            let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
            assert_eq!(a.add(&a.neg()).unwrap(), fe(0, q));
            if !a.is_zero() {
                assert_eq!(a.mul(&a.inv().unwrap()).unwrap(), fe(1, q));
            }
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(FieldMatrix::identity(3, 2).unwrap().rank(), 3);
        assert_eq!(FieldMatrix::zero(2, 4, 5).unwrap().rank(), 0);
        // Row 2 = 2 * row 1 over F_3.
        let m = FieldMatrix::new(2, 2, &[1, 1, 2, 2], 3).unwrap();
        assert_eq!(m.rank(), 1);
    }

    /// Brute-force rank oracle: the row space of an r-by-c matrix over F_q
    /// has exactly q^rank distinct vectors.
    fn rank_by_row_space(m: &FieldMatrix) -> usize {
        let q = m.modulus() as u32;
        let rows = m.rows();
        let mut span = HashSet::new();
        let mut coeffs = vec![0u32; rows];
        loop {
            let mut v = vec![0u16; m.cols()];
            for (r, &c) in coeffs.iter().enumerate() {
                for (j, slot) in v.iter_mut().enumerate() {
                    *slot = raw_add(*slot, raw_mul(c as u16, m.raw(r, j), m.modulus()), m.modulus());
                }
            }
            span.insert(v);
            let mut i = 0;
            while i < rows {
                coeffs[i] += 1;
                if coeffs[i] < q {
                    break;
                }
                coeffs[i] = 0;
                i += 1;
            }
            if i == rows {
                break;
            }
        }
        let mut rank = 0;
        while q.pow(rank) < span.len() as u32 {
            rank += 1;
        }
        assert_eq!(q.pow(rank) as usize, span.len());
        rank as usize
    }

    #[test]
    fn rank_matches_row_space_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for q in [2u32, 3] {
            for rows in 1..=3usize {
                for cols in 1..=3usize {
                    for _ in 0..20 {
                        let m = random_matrix(rows, cols, q, &mut rng).unwrap();
                        assert_eq!(m.rank(), rank_by_row_space(&m), "matrix {:?}", m);
                    }
                }
            }
        }
    }

    #[test]
    fn solve_identity_case() {
        let a = FieldMatrix::identity(2, 3).unwrap();
        let u = FieldMatrix::new(2, 2, &[1, 0, 2, 1], 3).unwrap();
        assert_eq!(solve(&a, &u).unwrap(), u);
    }

    #[test]
    fn solve_two_user_example() {
        // Oracle: enumerate all 9 message pairs over F_3 and confirm
        // W = [[1],[2]] is the unique preimage of U = [[0],[2]].
        let a = FieldMatrix::new(2, 2, &[1, 1, 1, 2], 3).unwrap();
        let u = FieldMatrix::new(2, 1, &[0, 2], 3).unwrap();
        let mut matches = Vec::new();
        for w1 in 0..3u32 {
            for w2 in 0..3u32 {
                let w = FieldMatrix::new(2, 1, &[w1, w2], 3).unwrap();
                if a.matmul(&w).unwrap() == u {
                    matches.push((w1, w2));
                }
            }
        }
        assert_eq!(matches, vec![(1, 2)]);
        let expect = FieldMatrix::new(2, 1, &[1, 2], 3).unwrap();
        assert_eq!(solve(&a, &u).unwrap(), expect);
    }

    #[test]
    fn solve_rank_deficient_reports_rank() {
        let a = FieldMatrix::new(2, 2, &[1, 1, 2, 2], 3).unwrap();
        let u = FieldMatrix::new(2, 1, &[0, 2], 3).unwrap();
        assert_eq!(
            solve(&a, &u),
            Err(FieldError::Unsolvable {
                rank: 1,
                required: 2
            })
        );
    }

    #[test]
    fn solve_inconsistent_overdetermined() {
        // Duplicate coefficient rows with conflicting right-hand sides.
        let a = FieldMatrix::new(3, 2, &[1, 0, 0, 1, 1, 0], 3).unwrap();
        let u = FieldMatrix::new(3, 1, &[1, 2, 2], 3).unwrap();
        assert_eq!(solve(&a, &u), Err(FieldError::Inconsistent));
    }

    #[test]
    fn solve_roundtrip_random_full_rank() {
        // solve(A, A*W) == W for random full-rank A across small primes.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let primes = [2u32, 3, 5, 7, 11];
        let mut done = 0;
        while done < 400 {
            let q = primes[done % primes.len()];
            let l = rng.gen_range(1..=6usize);
            let k = rng.gen_range(1..=4usize);
            let a = random_matrix(l, l, q, &mut rng).unwrap();
            if a.rank() < l {
                continue;
            }
            let w = random_matrix(l, k, q, &mut rng).unwrap();
            let u = a.matmul(&w).unwrap();
            assert_eq!(solve(&a, &u).unwrap(), w);
            done += 1;
        }
    }

    #[test]
    fn random_matrix_deterministic_under_seed() {
        let mut rng1 = ChaCha8Rng::seed_from_u64(42);
        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        let a = random_matrix(4, 5, 7, &mut rng1).unwrap();
        let b = random_matrix(4, 5, 7, &mut rng2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_matrix_uniform_chi_square() {
        // Each symbol count stays within 3 sigma of the multinomial mean
        // over 10^5 draws.
        let q = 5u32;
        let draws = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let m = random_matrix(draws / 100, 100, q, &mut rng).unwrap();
        let mut counts = vec![0usize; q as usize];
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                counts[m.raw(i, j) as usize] += 1;
            }
        }
        let n = (m.rows() * m.cols()) as f64;
        let p = 1.0 / q as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!((c as f64 - n * p).abs() < 3.0 * sigma, "counts {:?}", counts);
        }
    }

    #[test]
    fn random_matrix_binary_hits_both_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = HashSet::new();
        for _ in 0..100 {
            let m = random_matrix(1, 1, 2, &mut rng).unwrap();
            seen.insert(m.raw(0, 0));
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn degenerate_shapes_rejected() {
        assert!(matches!(
            FieldMatrix::new(0, 3, &[], 5),
            Err(FieldError::Degenerate { .. })
        ));
        assert!(matches!(
            FieldMatrix::new(3, 0, &[], 5),
            Err(FieldError::Degenerate { .. })
        ));
        assert!(matches!(
            FieldVector::new(&[], 5),
            Err(FieldError::Degenerate { .. })
        ));
    }
}
