// Copyright 2026 The qss Authors
// SPDX-License-Identifier: Apache-2.0

//! Prime-field arithmetic and the small amount of exact linear algebra the
//! threshold schemes need: Vandermonde construction, Gauss-Jordan inversion,
//! products and solves.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::{QssError, Result};

/// Largest supported modulus.
pub const MAX_MODULUS: u32 = 1 << 16;

/// Trial-division primality test, adequate for moduli up to 2^16.
pub fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn check_modulus(q: u32) -> Result<()> {
    if q > MAX_MODULUS || !is_prime(q) {
        return Err(QssError::NotPrime(q));
    }
    Ok(())
}

/// An element of F_q for prime q.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FqElement {
    value: u32,
    modulus: u32,
}

impl FqElement {
    /// Builds `value mod q`. Fails if `q` is not prime.
    pub fn new(value: u64, modulus: u32) -> Result<Self> {
        check_modulus(modulus)?;
        Ok(Self::reduce(value, modulus))
    }

    // Caller guarantees the modulus is prime.
    fn reduce(value: u64, modulus: u32) -> Self {
        Self {
            value: (value % modulus as u64) as u32,
            modulus,
        }
    }

    pub fn zero(modulus: u32) -> Result<Self> {
        Self::new(0, modulus)
    }

    pub fn one(modulus: u32) -> Result<Self> {
        Self::new(1, modulus)
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> u32 {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Self::reduce(1, self.modulus);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self) -> Result<Self> {
        if self.value == 0 {
            return Err(QssError::ZeroInverse);
        }
        Ok(self.pow(self.modulus as u64 - 2))
    }

    fn same_field(self, other: Self) {
        assert_eq!(
            self.modulus, other.modulus,
            "mixed-modulus arithmetic on F_{} and F_{}",
            self.modulus, other.modulus
        );
    }
}

/// Free-function form of [`FqElement::inv`].
pub fn field_inv(x: FqElement) -> Result<FqElement> {
    x.inv()
}

impl fmt::Debug for FqElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

impl fmt::Display for FqElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FqElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.same_field(rhs);
        Self::reduce(self.value as u64 + rhs.value as u64, self.modulus)
    }
}

impl Sub for FqElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.same_field(rhs);
        Self::reduce(
            self.value as u64 + self.modulus as u64 - rhs.value as u64,
            self.modulus,
        )
    }
}

impl Mul for FqElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.same_field(rhs);
        Self::reduce(self.value as u64 * rhs.value as u64, self.modulus)
    }
}

impl Neg for FqElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self::reduce(self.modulus as u64 - self.value as u64, self.modulus)
    }
}

/// Dense row-major matrix over F_q.
#[derive(Clone, PartialEq, Eq)]
pub struct FqMatrix {
    rows: usize,
    cols: usize,
    modulus: u32,
    entries: Vec<u32>,
}

impl fmt::Debug for FqMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FqMatrix {}x{} over F_{}", self.rows, self.cols, self.modulus)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.entries[r * self.cols..(r + 1) * self.cols])?;
        }
        Ok(())
    }
}

impl FqMatrix {
    /// Builds a matrix from row-major integer entries, reducing each mod q.
    pub fn from_rows(modulus: u32, rows: &[Vec<u64>]) -> Result<Self> {
        check_modulus(modulus)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 {
            return Err(QssError::ShapeMismatch("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(QssError::ShapeMismatch("ragged rows".into()));
        }
        let entries = rows
            .iter()
            .flatten()
            .map(|&v| (v % modulus as u64) as u32)
            .collect();
        Ok(Self {
            rows: nrows,
            cols: ncols,
            modulus,
            entries,
        })
    }

    /// Builds a matrix from field elements that must share one modulus.
    pub fn from_elements(rows: usize, cols: usize, entries: &[FqElement]) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(QssError::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let modulus = entries[0].modulus;
        if let Some(bad) = entries.iter().find(|e| e.modulus != modulus) {
            return Err(QssError::ModulusMismatch(modulus, bad.modulus));
        }
        Ok(Self {
            rows,
            cols,
            modulus,
            entries: entries.iter().map(|e| e.value).collect(),
        })
    }

    pub fn identity(n: usize, modulus: u32) -> Result<Self> {
        check_modulus(modulus)?;
        if n == 0 {
            return Err(QssError::ShapeMismatch("empty identity".into()));
        }
        let mut entries = vec![0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1;
        }
        Ok(Self {
            rows: n,
            cols: n,
            modulus,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn get(&self, r: usize, c: usize) -> FqElement {
        FqElement::reduce(self.entries[r * self.cols + c] as u64, self.modulus)
    }

    /// Raw residue at `(r, c)`.
    pub fn value(&self, r: usize, c: usize) -> u32 {
        self.entries[r * self.cols + c]
    }

    pub fn row_values(&self, r: usize) -> &[u32] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// Submatrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() || rows.iter().any(|&r| r >= self.rows) {
            return Err(QssError::ShapeMismatch(format!(
                "row selection {rows:?} out of {} rows",
                self.rows
            )));
        }
        let mut entries = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            entries.extend_from_slice(self.row_values(r));
        }
        Ok(Self {
            rows: rows.len(),
            cols: self.cols,
            modulus: self.modulus,
            entries,
        })
    }

    /// Submatrix made of the given columns, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> Result<Self> {
        if cols.is_empty() || cols.iter().any(|&c| c >= self.cols) {
            return Err(QssError::ShapeMismatch(format!(
                "column selection {cols:?} out of {} columns",
                self.cols
            )));
        }
        let mut entries = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            entries.extend(cols.iter().map(|&c| self.value(r, c)));
        }
        Ok(Self {
            rows: self.rows,
            cols: cols.len(),
            modulus: self.modulus,
            entries,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.modulus != other.modulus {
            return Err(QssError::ModulusMismatch(self.modulus, other.modulus));
        }
        if self.cols != other.rows {
            return Err(QssError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let q = self.modulus as u64;
        let mut entries = vec![0u32; self.rows * other.cols];
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u64;
                for k in 0..self.cols {
                    acc = (acc + self.value(i, k) as u64 * other.value(k, j) as u64) % q;
                }
                entries[i * other.cols + j] = acc as u32;
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            modulus: self.modulus,
            entries,
        })
    }

    /// Matrix-vector product on raw residues. Entries of `v` must be < q.
    pub fn apply(&self, v: &[u32]) -> Result<Vec<u32>> {
        if v.len() != self.cols {
            return Err(QssError::ShapeMismatch(format!(
                "vector of length {} for {} columns",
                v.len(),
                self.cols
            )));
        }
        let q = self.modulus as u64;
        Ok((0..self.rows)
            .map(|i| {
                self.row_values(i)
                    .iter()
                    .zip(v)
                    .fold(0u64, |acc, (&m, &x)| (acc + m as u64 * x as u64) % q)
                    as u32
            })
            .collect())
    }

    /// Gauss-Jordan inverse with exact field inverses.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(QssError::ShapeMismatch(format!(
                "inverse of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let q = self.modulus as u64;
        let mut a: Vec<Vec<u64>> = (0..n)
            .map(|r| self.row_values(r).iter().map(|&v| v as u64).collect())
            .collect();
        let mut inv: Vec<Vec<u64>> = (0..n)
            .map(|r| (0..n).map(|c| u64::from(r == c)).collect())
            .collect();

        for col in 0..n {
            let pivot = (col..n).find(|&r| a[r][col] != 0).ok_or(QssError::SingularMatrix)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);

            let p = FqElement::reduce(a[col][col], self.modulus).inv()?.value as u64;
            for c in 0..n {
                a[col][c] = a[col][c] * p % q;
                inv[col][c] = inv[col][c] * p % q;
            }
            for r in 0..n {
                if r == col || a[r][col] == 0 {
                    continue;
                }
                let f = a[r][col];
                for c in 0..n {
                    a[r][c] = (a[r][c] + q * q - f * a[col][c]) % q;
                    inv[r][c] = (inv[r][c] + q * q - f * inv[col][c]) % q;
                }
            }
        }
        Ok(Self {
            rows: n,
            cols: n,
            modulus: self.modulus,
            entries: inv.into_iter().flatten().map(|v| v as u32).collect(),
        })
    }

    /// Solves `self · x = rhs`.
    pub fn solve(&self, rhs: &[u32]) -> Result<Vec<u32>> {
        if self.rows != self.cols || rhs.len() != self.rows {
            return Err(QssError::ShapeMismatch(format!(
                "solve with a {}x{} matrix and rhs of length {}",
                self.rows,
                self.cols,
                rhs.len()
            )));
        }
        let reduced: Vec<u32> = rhs.iter().map(|&v| v % self.modulus).collect();
        self.inverse()?.apply(&reduced)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..self.cols).all(|c| self.value(r, c) == u32::from(r == c)))
    }
}

/// Evaluation matrix of the threshold polynomial
/// `p(x) = s·x^(degree-1) + a_1 + a_2 x + ... + a_(degree-1) x^(degree-2)`
/// against the coefficient vector `(s, a_1, ..., a_(degree-1))`.
///
/// Row `k` is `(x_k^(degree-1), 1, x_k, ..., x_k^(degree-2))`.
pub fn vandermonde(points: &[FqElement], degree: usize) -> Result<FqMatrix> {
    if points.is_empty() || degree == 0 {
        return Err(QssError::ShapeMismatch(format!(
            "{} points with degree {degree}",
            points.len()
        )));
    }
    let modulus = points[0].modulus;
    if let Some(bad) = points.iter().find(|p| p.modulus != modulus) {
        return Err(QssError::ModulusMismatch(modulus, bad.modulus));
    }
    for (i, p) in points.iter().enumerate() {
        if points[..i].contains(p) {
            return Err(QssError::DuplicatePoints);
        }
    }
    let mut entries = Vec::with_capacity(points.len() * degree);
    for &x in points {
        entries.push(x.pow(degree as u64 - 1));
        entries.extend((0..degree - 1).map(|i| x.pow(i as u64)));
    }
    FqMatrix::from_elements(points.len(), degree, &entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(v: u64, q: u32) -> FqElement {
        FqElement::new(v, q).unwrap()
    }

    #[test]
    fn rejects_composite_moduli() {
        for q in [0, 1, 4, 6, 9, 15, 65537 * 2] {
            assert!(matches!(FqElement::new(1, q), Err(QssError::NotPrime(_))), "q={q}");
        }
        assert!(FqElement::new(3, 65521).is_ok());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(field_inv(el(1, 3)).unwrap().value(), 1);
        assert_eq!(field_inv(el(2, 3)).unwrap().value(), 2);
        // brute-force scan for 3y = 1 mod 5
        let y = (1..5u32).find(|y| (3 * y) % 5 == 1).unwrap();
        assert_eq!(field_inv(el(3, 5)).unwrap().value(), y);
        assert!(matches!(field_inv(el(0, 7)), Err(QssError::ZeroInverse)));
    }

    #[test]
    fn exhaustive_agreement_with_integer_arithmetic() {
        for q in [2u32, 3, 5, 7] {
            for a in 0..q {
                for b in 0..q {
                    let (x, y) = (el(a as u64, q), el(b as u64, q));
                    assert_eq!((x + y).value(), (a + b) % q);
                    assert_eq!((x - y).value(), (a + q - b) % q);
                    assert_eq!((x * y).value(), (a * b) % q);
                }
                let x = el(a as u64, q);
                assert_eq!((-x).value(), (q - a) % q);
                if a != 0 {
                    assert_eq!((x * x.inv().unwrap()).value(), 1);
                }
            }
        }
    }

    #[test]
    fn vandermonde_over_f3_matches_cgl_shares() {
        let pts: Vec<_> = (0..3).map(|x| el(x, 3)).collect();
        let m = vandermonde(&pts, 2).unwrap();
        let expected = FqMatrix::from_rows(3, &[vec![0, 1], vec![1, 1], vec![2, 1]]).unwrap();
        assert_eq!(m, expected);
        assert_eq!(m.apply(&[1, 0]).unwrap(), vec![0, 1, 2]);
        assert_eq!(m.apply(&[2, 0]).unwrap(), vec![0, 2, 1]);
        for a in 0..3 {
            assert_eq!(m.apply(&[0, a]).unwrap(), vec![a, a, a]);
        }
    }

    #[test]
    fn vandermonde_rejects_duplicates() {
        let pts = [el(1, 5), el(2, 5), el(1, 5)];
        assert!(matches!(vandermonde(&pts, 2), Err(QssError::DuplicatePoints)));
    }

    #[test]
    fn inverse_examples_and_singular() {
        let id = FqMatrix::identity(3, 5).unwrap();
        assert_eq!(id.inverse().unwrap(), id);

        let m = FqMatrix::from_rows(3, &[vec![1, 0], vec![1, 1]]).unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(inv, FqMatrix::from_rows(3, &[vec![1, 0], vec![2, 1]]).unwrap());
        assert!(m.mul(&inv).unwrap().is_identity());

        let s = FqMatrix::from_rows(3, &[vec![1, 1], vec![1, 1]]).unwrap();
        assert!(matches!(s.inverse(), Err(QssError::SingularMatrix)));
    }

    #[test]
    fn mul_and_solve() {
        let m = FqMatrix::from_rows(7, &[vec![1, 2, 3], vec![4, 5, 6]]).unwrap();
        let id = FqMatrix::identity(3, 7).unwrap();
        assert_eq!(m.mul(&id).unwrap(), m);
        assert!(matches!(id.mul(&m), Err(QssError::ShapeMismatch(_))));

        let a = FqMatrix::from_rows(3, &[vec![1, 0], vec![1, 1]]).unwrap();
        let x = a.solve(&[1, 2]).unwrap();
        assert_eq!(x, vec![1, 1]);
        assert_eq!(a.apply(&x).unwrap(), vec![1, 2]);
    }

    #[test]
    fn vandermonde_row_times_coefficients_is_the_share() {
        let q = 7;
        let pts: Vec<_> = (0..5).map(|x| el(x, q)).collect();
        let m = vandermonde(&pts, 3).unwrap();
        let (s, a1, a2) = (4u64, 2u64, 5u64);
        for (k, &x) in pts.iter().enumerate() {
            let x = x.value() as u64;
            let share = (s * x * x + a1 + a2 * x) % q as u64;
            assert_eq!(m.apply(&[4, 2, 5]).unwrap()[k] as u64, share);
        }
    }

    #[test]
    fn every_t_row_subset_of_vandermonde_is_invertible() {
        for (t, q) in [(1usize, 2u32), (2, 3), (2, 5), (3, 5), (3, 7)] {
            let n = 2 * t - 1;
            let pts: Vec<_> = (0..n as u64).map(|x| el(x, q)).collect();
            let m = vandermonde(&pts, t).unwrap();
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != t {
                    continue;
                }
                let rows: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                let sub = m.select_rows(&rows).unwrap();
                let inv = sub.inverse().expect("sub-Vandermonde must be invertible");
                assert!(sub.mul(&inv).unwrap().is_identity());
            }
        }
    }
}
