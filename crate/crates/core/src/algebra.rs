//! Arithmetic over Z_q, characters, and linear algebra over prime fields.
//!
//! Vectors are plain `Vec<u8>` with every entry reduced mod q. Rank, kernel
//! and image computations require q to be prime.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector over Z_q, one byte per entry.
pub type ZqVector = Vec<u8>;

/// Checks that `q` is a usable alphabet size.
pub fn check_modulus(q: u32) -> Result<()> {
    if (2..=255).contains(&q) {
        Ok(())
    } else {
        Err(Error::InvalidModulus { q })
    }
}

pub fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn require_prime(q: u32) -> Result<()> {
    check_modulus(q)?;
    if is_prime(q) {
        Ok(())
    } else {
        Err(Error::CompositeModulus { q })
    }
}

#[inline]
pub(crate) fn add_mod(a: u8, b: u8, q: u32) -> u8 {
    ((a as u32 + b as u32) % q) as u8
}

#[inline]
pub(crate) fn neg_mod(a: u8, q: u32) -> u8 {
    ((q - a as u32) % q) as u8
}

#[inline]
pub(crate) fn mul_mod(a: u8, b: u8, q: u32) -> u8 {
    ((a as u32 * b as u32) % q) as u8
}

fn inv_mod(a: u8, q: u32) -> u8 {
    // Fermat inverse; q is prime here.
    let mut result = 1u32;
    let mut base = a as u32 % q;
    let mut e = q - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % q;
        }
        base = base * base % q;
        e >>= 1;
    }
    result as u8
}

/// Reduces a signed integer into `0..q`.
pub fn reduce(value: i64, q: u32) -> u8 {
    value.rem_euclid(q as i64) as u8
}

/// An element of Z_q that remembers its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZqElem {
    value: u8,
    q: u32,
}

impl ZqElem {
    pub fn new(value: i64, q: u32) -> Result<Self> {
        check_modulus(q)?;
        Ok(Self {
            value: reduce(value, q),
            q,
        })
    }

    pub fn zero(q: u32) -> Result<Self> {
        Self::new(0, q)
    }

    pub fn value(self) -> u8 {
        self.value
    }

    pub fn modulus(self) -> u32 {
        self.q
    }

    fn same_modulus(self, other: Self) -> Result<()> {
        if self.q == other.q {
            Ok(())
        } else {
            Err(Error::ModulusMismatch {
                left: self.q,
                right: other.q,
            })
        }
    }

    pub fn try_add(self, other: Self) -> Result<Self> {
        self.same_modulus(other)?;
        Ok(Self {
            value: add_mod(self.value, other.value, self.q),
            q: self.q,
        })
    }

    pub fn try_sub(self, other: Self) -> Result<Self> {
        self.same_modulus(other)?;
        Ok(Self {
            value: add_mod(self.value, neg_mod(other.value, self.q), self.q),
            q: self.q,
        })
    }

    pub fn try_mul(self, other: Self) -> Result<Self> {
        self.same_modulus(other)?;
        Ok(Self {
            value: mul_mod(self.value, other.value, self.q),
            q: self.q,
        })
    }

    /// Multiplicative inverse; `None` for zero or when q is composite and
    /// the element is not a unit.
    pub fn inverse(self) -> Option<Self> {
        (1..self.q)
            .find(|&b| (self.value as u32 * b) % self.q == 1)
            .map(|b| Self {
                value: b as u8,
                q: self.q,
            })
    }
}

/// Panics on mismatched moduli; use [`ZqElem::try_add`] to get an error instead.
impl Add for ZqElem {
    type Output = ZqElem;
    fn add(self, rhs: Self) -> Self {
        self.try_add(rhs).expect("ZqElem moduli differ")
    }
}

impl Sub for ZqElem {
    type Output = ZqElem;
    fn sub(self, rhs: Self) -> Self {
        self.try_sub(rhs).expect("ZqElem moduli differ")
    }
}

impl Mul for ZqElem {
    type Output = ZqElem;
    fn mul(self, rhs: Self) -> Self {
        self.try_mul(rhs).expect("ZqElem moduli differ")
    }
}

impl Neg for ZqElem {
    type Output = ZqElem;
    fn neg(self) -> Self {
        Self {
            value: neg_mod(self.value, self.q),
            q: self.q,
        }
    }
}

impl fmt::Display for ZqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.q)
    }
}

/// The character x -> exp(2 pi i k x / q) of Z_q.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Character {
    q: u32,
    k: u8,
}

impl Character {
    pub fn new(k: i64, q: u32) -> Result<Self> {
        check_modulus(q)?;
        Ok(Self {
            q,
            k: reduce(k, q),
        })
    }

    pub fn index(self) -> u8 {
        self.k
    }

    pub fn modulus(self) -> u32 {
        self.q
    }

    pub fn eval(self, x: u8) -> Complex64 {
        root_of_unity(self.k as u64 * x as u64, self.q)
    }
}

/// exp(2 pi i m / q), with m reduced first so the angle stays small.
pub fn root_of_unity(m: u64, q: u32) -> Complex64 {
    let m = m % q as u64;
    Complex64::from_polar(1.0, 2.0 * PI * m as f64 / q as f64)
}

/// Dense row-major matrix over Z_q.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZqMatrix {
    rows: usize,
    cols: usize,
    q: u32,
    data: Vec<u8>,
}

impl ZqMatrix {
    pub fn zeros(rows: usize, cols: usize, q: u32) -> Result<Self> {
        check_modulus(q)?;
        Ok(Self {
            rows,
            cols,
            q,
            data: vec![0; rows * cols],
        })
    }

    pub fn identity(size: usize, q: u32) -> Result<Self> {
        let mut m = Self::zeros(size, size, q)?;
        for i in 0..size {
            m.set(i, i, 1);
        }
        Ok(m)
    }

    /// Builds a matrix from signed integer rows, reducing every entry mod q.
    pub fn from_rows(rows: &[Vec<i64>], q: u32) -> Result<Self> {
        check_modulus(q)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data = rows.iter().flatten().map(|&v| reduce(v, q)).collect();
        Ok(Self {
            rows: rows.len(),
            cols,
            q,
            data,
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[ZqVector], rows: usize, q: u32) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len(), q)?;
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            for (i, &v) in c.iter().enumerate() {
                m.set(i, j, v % q as u8);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u32 {
        self.q
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    pub fn elem(&self, r: usize, c: usize) -> ZqElem {
        ZqElem {
            value: self.get(r, c),
            q: self.q,
        }
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        self.data[r * self.cols + c] = v % self.q as u8;
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> ZqVector {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self {
            rows: self.cols,
            cols: self.rows,
            q: self.q,
            data: vec![0; self.data.len()],
        };
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[u8]) -> Result<ZqVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                let s: u64 = self
                    .row(r)
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a as u64 * b as u64)
                    .sum();
                (s % self.q as u64) as u8
            })
            .collect())
    }

    pub fn mul(&self, other: &ZqMatrix) -> Result<ZqMatrix> {
        if self.q != other.q {
            return Err(Error::ModulusMismatch {
                left: self.q,
                right: other.q,
            });
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ZqMatrix::zeros(self.rows, other.cols, self.q)?;
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k) as u64;
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] =
                        ((out.data[idx] as u64 + a * other.get(k, j) as u64) % self.q as u64) as u8;
                }
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Reduced row echelon form and the pivot column of each nonzero row.
    fn rref(&self) -> Result<(ZqMatrix, Vec<usize>)> {
        require_prime(self.q)?;
        let q = self.q;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| m.get(i, c) != 0) else {
                continue;
            };
            if p != r {
                for j in 0..m.cols {
                    m.data.swap(p * m.cols + j, r * m.cols + j);
                }
            }
            let inv = inv_mod(m.get(r, c), q);
            for j in c..m.cols {
                let v = mul_mod(m.get(r, j), inv, q);
                m.data[r * m.cols + j] = v;
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c);
                if f == 0 {
                    continue;
                }
                let nf = neg_mod(f, q);
                for j in c..m.cols {
                    let v = add_mod(m.get(i, j), mul_mod(nf, m.get(r, j), q), q);
                    m.data[i * m.cols + j] = v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        Ok((m, pivots))
    }
}

/// Rank over F_q.
pub fn rank(m: &ZqMatrix) -> Result<usize> {
    Ok(m.rref()?.1.len())
}

/// A basis of {v : m v = 0}, one vector per free column of the echelon form.
pub fn kernel_basis(m: &ZqMatrix) -> Result<Vec<ZqVector>> {
    let (r, pivots) = m.rref()?;
    let q = m.q;
    let mut is_pivot = vec![false; m.cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::with_capacity(m.cols - pivots.len());
    for free in (0..m.cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![0u8; m.cols];
        v[free] = 1;
        for (row, &p) in pivots.iter().enumerate() {
            v[p] = neg_mod(r.get(row, free), q);
        }
        basis.push(v);
    }
    Ok(basis)
}

/// A basis of the column space: the original columns at pivot positions.
pub fn image_basis(m: &ZqMatrix) -> Result<Vec<ZqVector>> {
    let (_, pivots) = m.rref()?;
    Ok(pivots.iter().map(|&c| m.column(c)).collect())
}

/// Rank of a list of vectors of common length `len`.
pub fn span_rank(basis: &[ZqVector], len: usize, q: u32) -> Result<usize> {
    rank(&ZqMatrix::from_columns(basis, len, q)?)
}

/// Whether `v` lies in the span of `basis`.
pub fn in_span(basis: &[ZqVector], v: &[u8], q: u32) -> Result<bool> {
    let len = v.len();
    let r = span_rank(basis, len, q)?;
    let mut ext = basis.to_vec();
    ext.push(v.to_vec());
    Ok(span_rank(&ext, len, q)? == r)
}

/// A basis of { y : x . y = 0 for every x in span(basis) }.
pub fn orthogonal_complement(basis: &[ZqVector], len: usize, q: u32) -> Result<Vec<ZqVector>> {
    require_prime(q)?;
    let mut m = ZqMatrix::zeros(basis.len(), len, q)?;
    for (i, v) in basis.iter().enumerate() {
        if v.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "basis vector {i} has length {}, expected {len}",
                v.len()
            )));
        }
        for (j, &x) in v.iter().enumerate() {
            m.set(i, j, x);
        }
    }
    kernel_basis(&m)
}

/// Whether two lists of vectors span the same subspace.
pub fn same_span(a: &[ZqVector], b: &[ZqVector], len: usize, q: u32) -> Result<bool> {
    let ra = span_rank(a, len, q)?;
    let rb = span_rank(b, len, q)?;
    if ra != rb {
        return Ok(false);
    }
    let mut joint = a.to_vec();
    joint.extend_from_slice(b);
    Ok(span_rank(&joint, len, q)? == ra)
}

/// Deterministic enumeration of every Z_q-combination of a list of vectors.
///
/// Index `i` maps to the combination whose coefficient on basis vector `j`
/// is the `j`-th base-q digit of `i` (least significant first).
#[derive(Clone, Debug)]
pub struct SpanEnumerator {
    basis: Vec<ZqVector>,
    len: usize,
    q: u32,
    count: u64,
}

/// Prepares the enumeration of span(basis); fails if q^k exceeds `cap`.
pub fn enumerate_span(basis: &[ZqVector], len: usize, q: u32, cap: u64) -> Result<SpanEnumerator> {
    check_modulus(q)?;
    if let Some(bad) = basis.iter().position(|v| v.len() != len) {
        return Err(Error::DimensionMismatch(format!(
            "basis vector {bad} has length {}, expected {len}",
            basis[bad].len()
        )));
    }
    let count = checked_pow(q as u64, basis.len(), cap)?;
    Ok(SpanEnumerator {
        basis: basis.to_vec(),
        len,
        q,
        count,
    })
}

/// q^k if it does not exceed `cap`.
pub(crate) fn checked_pow(q: u64, k: usize, cap: u64) -> Result<u64> {
    let mut acc: u64 = 1;
    for _ in 0..k {
        acc = match acc.checked_mul(q) {
            Some(v) if v <= cap => v,
            _ => {
                return Err(Error::BudgetExceeded {
                    needed: (q as f64).powi(k as i32),
                    cap,
                })
            }
        };
    }
    if acc > cap {
        return Err(Error::BudgetExceeded {
            needed: acc as f64,
            cap,
        });
    }
    Ok(acc)
}

impl SpanEnumerator {
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn vector_len(&self) -> usize {
        self.len
    }

    pub fn vector_at(&self, index: u64) -> ZqVector {
        let mut v = vec![0u8; self.len];
        let mut rest = index;
        for b in &self.basis {
            let coeff = (rest % self.q as u64) as u8;
            rest /= self.q as u64;
            if coeff != 0 {
                for (x, &y) in v.iter_mut().zip(b) {
                    *x = add_mod(*x, mul_mod(coeff, y, self.q), self.q);
                }
            }
        }
        v
    }

    /// Calls `f` on the vectors with indices in `range`, in order.
    pub fn for_each_in_range(&self, range: std::ops::Range<u64>, mut f: impl FnMut(&[u8])) {
        if range.start >= range.end {
            return;
        }
        let q = self.q;
        let k = self.basis.len();
        let mut digits = vec![0u32; k];
        let mut rest = range.start;
        for d in digits.iter_mut() {
            *d = (rest % q as u64) as u32;
            rest /= q as u64;
        }
        let mut v = self.vector_at(range.start);
        f(&v);
        for _ in range.start + 1..range.end {
            // Odometer step: adding a basis vector q times is the identity,
            // so a wrapping digit needs no correction before carrying.
            let mut j = 0;
            loop {
                for (x, &y) in v.iter_mut().zip(&self.basis[j]) {
                    *x = add_mod(*x, y, q);
                }
                digits[j] += 1;
                if digits[j] == q {
                    digits[j] = 0;
                    j += 1;
                    continue;
                }
                break;
            }
            f(&v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ZqVector> + '_ {
        (0..self.count).map(move |i| self.vector_at(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elem_arithmetic_wraps() {
        let a = ZqElem::new(4, 5).unwrap();
        let b = ZqElem::new(3, 5).unwrap();
        assert_eq!((a + b).value(), 2);
        assert_eq!((a - b).value(), 1);
        assert_eq!((b - a).value(), 4);
        assert_eq!((a * b).value(), 2);
        assert_eq!((-a).value(), 1);
        assert_eq!(a.inverse().unwrap().value(), 4);
        assert_eq!(ZqElem::new(-1, 7).unwrap().value(), 6);
    }

    #[test]
    fn mismatched_moduli_are_rejected() {
        let a = ZqElem::new(1, 2).unwrap();
        let b = ZqElem::new(1, 3).unwrap();
        assert_eq!(
            a.try_add(b),
            Err(Error::ModulusMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn rank_of_identity_and_zero() {
        assert_eq!(rank(&ZqMatrix::identity(3, 2).unwrap()).unwrap(), 3);
        assert_eq!(rank(&ZqMatrix::zeros(2, 5, 3).unwrap()).unwrap(), 0);
    }

    #[test]
    fn composite_modulus_rejected() {
        let m = ZqMatrix::identity(2, 4).unwrap();
        assert_eq!(rank(&m), Err(Error::CompositeModulus { q: 4 }));
        assert!(kernel_basis(&m).is_err());
        assert!(orthogonal_complement(&[vec![1, 1]], 2, 6).is_err());
    }

    #[test]
    fn small_kernels() {
        assert!(kernel_basis(&ZqMatrix::identity(3, 2).unwrap())
            .unwrap()
            .is_empty());
        let m = ZqMatrix::from_rows(&[vec![1, 1]], 2).unwrap();
        assert_eq!(kernel_basis(&m).unwrap(), vec![vec![1, 1]]);
        let z = ZqMatrix::zeros(2, 2, 3).unwrap();
        assert!(image_basis(&z).unwrap().is_empty());
    }

    #[test]
    fn complement_examples() {
        let c = orthogonal_complement(&[vec![1, 1]], 2, 2).unwrap();
        assert!(same_span(&c, &[vec![1, 1]], 2, 2).unwrap());
        let full = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        assert!(orthogonal_complement(&full, 3, 5).unwrap().is_empty());
    }

    #[test]
    fn span_enumeration() {
        let e = enumerate_span(&[], 3, 2, 16).unwrap();
        assert_eq!(e.iter().collect::<Vec<_>>(), vec![vec![0, 0, 0]]);
        let e = enumerate_span(&[vec![1, 0, 1]], 3, 2, 16).unwrap();
        assert_eq!(
            e.iter().collect::<Vec<_>>(),
            vec![vec![0, 0, 0], vec![1, 0, 1]]
        );
        assert!(matches!(
            enumerate_span(&[vec![1], vec![1], vec![1]], 1, 3, 20),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn range_iteration_matches_vector_at() {
        let basis = vec![vec![1, 2, 0, 1], vec![0, 1, 1, 2], vec![2, 2, 1, 0]];
        let e = enumerate_span(&basis, 4, 3, 1000).unwrap();
        let mut seen = Vec::new();
        e.for_each_in_range(5..27, |v| seen.push(v.to_vec()));
        let expected: Vec<_> = (5..27).map(|i| e.vector_at(i)).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn character_values() {
        let chi = Character::new(1, 4).unwrap();
        assert!((chi.eval(1) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((chi.eval(0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
