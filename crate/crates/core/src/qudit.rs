// Copyright 2026 The qss Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense simulation of pure states and density matrices over products of
//! qudit registers.
//!
//! Registers are ordered, first register slowest in the flat index. All
//! entropies are in bits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{QssError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default cap on the product of register dimensions.
pub const DEFAULT_AMPLITUDE_CAP: usize = 1 << 20;

/// Eigenvalues in `[-EIGEN_CLIP, 0)` are treated as zero.
pub const EIGEN_CLIP: f64 = 1e-10;

const PURE_NORM_TOL: f64 = 1e-12;
const DENSITY_TOL: f64 = 1e-10;

/// Ordered local dimensions with register names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterShape {
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl RegisterShape {
    pub fn new<S: Into<String>>(dims: Vec<usize>, labels: Vec<S>) -> Result<Self> {
        Self::with_cap(dims, labels, DEFAULT_AMPLITUDE_CAP)
    }

    pub fn with_cap<S: Into<String>>(dims: Vec<usize>, labels: Vec<S>, cap: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(QssError::DimMismatch("register list is empty".into()));
        }
        if dims.len() != labels.len() {
            return Err(QssError::DimMismatch(format!(
                "{} dims but {} labels",
                dims.len(),
                labels.len()
            )));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(QssError::DimMismatch(format!("local dimension {d} < 2")));
        }
        let total = checked_product(&dims, cap)?;
        debug_assert!(total <= cap);
        Ok(Self {
            dims,
            labels: labels.into_iter().map(Into::into).collect(),
        })
    }

    /// One register of dimension `d`.
    pub fn single(d: usize, label: &str) -> Result<Self> {
        Self::new(vec![d], vec![label])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let dims: Vec<usize> = self.dims.iter().chain(&other.dims).copied().collect();
        let labels: Vec<String> = self.labels.iter().chain(&other.labels).cloned().collect();
        Self::new(dims, labels)
    }

    /// Shape restricted to `regs`, in that order.
    pub fn select(&self, regs: &[usize]) -> Self {
        Self {
            dims: regs.iter().map(|&r| self.dims[r]).collect(),
            labels: regs.iter().map(|&r| self.labels[r].clone()).collect(),
        }
    }
}

fn checked_product(dims: &[usize], cap: usize) -> Result<usize> {
    let mut total = 1usize;
    for &d in dims {
        total = total
            .checked_mul(d)
            .filter(|&t| t <= cap)
            .ok_or(QssError::ShapeCapExceeded {
                dim: dims.iter().fold(1usize, |a, &d| a.saturating_mul(d)),
                cap,
            })?;
    }
    Ok(total)
}

/// Validates a register subset: nonempty, distinct, in range.
fn check_registers(shape: &RegisterShape, regs: &[usize]) -> Result<()> {
    if regs.is_empty() {
        return Err(QssError::EmptyKeepSet);
    }
    for (i, &r) in regs.iter().enumerate() {
        if r >= shape.len() {
            return Err(QssError::DimMismatch(format!(
                "register {r} out of {} registers",
                shape.len()
            )));
        }
        if regs[..i].contains(&r) {
            return Err(QssError::DimMismatch(format!("register {r} listed twice")));
        }
    }
    Ok(())
}

fn check_permutation(n: usize, perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(QssError::DimMismatch(format!(
            "permutation of length {} for {n} registers",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(QssError::DimMismatch(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

fn complement(n: usize, regs: &[usize]) -> Vec<usize> {
    (0..n).filter(|r| !regs.contains(r)).collect()
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Splits a flat index into per-register digits.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        out[i] = index % dims[i];
        index /= dims[i];
    }
    out
}

/// Joins per-register digits into a flat index.
pub fn flat_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

/// For a permutation where new register `i` is old register `perm[i]`,
/// returns the new flat index of every old flat index.
fn permutation_index_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let new_strides = strides(&new_dims);
    // stride of old register p inside the new layout
    let mut old_to_new_stride = vec![0; dims.len()];
    for (i, &p) in perm.iter().enumerate() {
        old_to_new_stride[p] = new_strides[i];
    }
    let total: usize = dims.iter().product();
    let mut map = Vec::with_capacity(total);
    let mut digit = vec![0usize; dims.len()];
    let mut target = 0usize;
    for _ in 0..total {
        map.push(target);
        for r in (0..dims.len()).rev() {
            digit[r] += 1;
            target += old_to_new_stride[r];
            if digit[r] < dims[r] {
                break;
            }
            target -= old_to_new_stride[r] * dims[r];
            digit[r] = 0;
        }
    }
    map
}

/// For each flat index: (index within `targets`, index within the rest).
fn split_indices(dims: &[usize], targets: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let rest = complement(dims.len(), targets);
    let mut perm = rest.clone();
    perm.extend_from_slice(targets);
    let map = permutation_index_map(dims, &perm);
    let dt: usize = targets.iter().map(|&t| dims[t]).product();
    map.iter().map(|&m| (m % dt, m / dt)).unzip()
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigen-decomposition of a Hermitian matrix: (eigenvalues, eigenvectors as columns).
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitize(m).symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let roots = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| C64::new(v.max(0.0).sqrt(), 0.0)),
    );
    &vecs * DMatrix::from_diagonal(&roots) * vecs.adjoint()
}

/// Maximum deviation of `U†U` from the identity.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).camax()
}

fn check_unitary(u: &CMatrix) -> Result<()> {
    let defect = unitarity_defect(u);
    if defect > DENSITY_TOL {
        return Err(QssError::NotUnitary(defect));
    }
    Ok(())
}

/// Generalized shift `X|j> = |j+1 mod d>`.
pub fn weyl_x(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |r, c| {
        if r == (c + 1) % d {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Clock operator `Z|j> = ω^j |j>`, `ω = exp(2πi/d)`.
pub fn weyl_z(d: usize) -> CMatrix {
    let diag = DVector::from_iterator(
        d,
        (0..d).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / d as f64)),
    );
    CMatrix::from_diagonal(&diag)
}

/// `X^a Z^b`.
pub fn weyl(d: usize, a: usize, b: usize) -> CMatrix {
    let x = weyl_x(d);
    let z = weyl_z(d);
    let mut out = CMatrix::identity(d, d);
    for _ in 0..a % d {
        out = &x * out;
    }
    for _ in 0..b % d {
        out *= &z;
    }
    out
}

/// Permutation matrix `|v> -> |f(v)>` over basis-label tuples of `dims`.
pub fn classical_reversible_unitary<F>(dims: &[usize], f: F) -> Result<CMatrix>
where
    F: Fn(&[usize]) -> Vec<usize>,
{
    let total = checked_product(dims, DEFAULT_AMPLITUDE_CAP)?;
    let mut hit = vec![false; total];
    let mut u = CMatrix::zeros(total, total);
    for col in 0..total {
        let image = f(&digits(col, dims));
        if image.len() != dims.len() || image.iter().zip(dims).any(|(&v, &d)| v >= d) {
            return Err(QssError::NotBijective);
        }
        let row = flat_index(&image, dims);
        if hit[row] {
            return Err(QssError::NotBijective);
        }
        hit[row] = true;
        u[(row, col)] = C64::new(1.0, 0.0);
    }
    Ok(u)
}

/// Complex Gaussian sample.
fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// A normalized state vector.
#[derive(Debug, Clone)]
pub struct PureState {
    shape: RegisterShape,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(shape: RegisterShape, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != shape.total_dim() {
            return Err(QssError::DimMismatch(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                shape.total_dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > PURE_NORM_TOL {
            return Err(QssError::InvalidState(format!("norm {norm} != 1")));
        }
        Ok(Self { shape, amplitudes })
    }

    /// Normalizes `amplitudes` before construction.
    pub fn normalized(shape: RegisterShape, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QssError::InvalidState("zero or non-finite vector".into()));
        }
        Self::new(shape, amplitudes.unscale(norm))
    }

    /// Computational basis state with the given per-register labels.
    pub fn basis(shape: RegisterShape, labels: &[usize]) -> Result<Self> {
        if labels.len() != shape.len() || labels.iter().zip(shape.dims()).any(|(&l, &d)| l >= d) {
            return Err(QssError::DimMismatch(format!("basis labels {labels:?}")));
        }
        let mut amps = CVector::zeros(shape.total_dim());
        amps[flat_index(labels, shape.dims())] = C64::new(1.0, 0.0);
        Ok(Self {
            shape,
            amplitudes: amps,
        })
    }

    /// Haar-random state (normalized complex Gaussian vector).
    pub fn random(shape: RegisterShape, rng: &mut impl Rng) -> Self {
        let n = shape.total_dim();
        let amps = CVector::from_iterator(n, (0..n).map(|_| gaussian(rng)));
        let norm = amps.norm();
        Self {
            shape,
            amplitudes: amps.unscale(norm),
        }
    }

    pub(crate) fn from_parts(shape: RegisterShape, amplitudes: CVector) -> Self {
        debug_assert_eq!(shape.total_dim(), amplitudes.len());
        Self { shape, amplitudes }
    }

    pub fn shape(&self) -> &RegisterShape {
        &self.shape
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let shape = self.shape.concat(&other.shape)?;
        Ok(Self {
            shape,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }

    /// New register `i` is old register `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(self.shape.len(), perm)?;
        let map = permutation_index_map(self.shape.dims(), perm);
        let mut amps = CVector::zeros(self.dim());
        for (old, &new) in map.iter().enumerate() {
            amps[new] = self.amplitudes[old];
        }
        Ok(Self {
            shape: self.shape.select(perm),
            amplitudes: amps,
        })
    }

    /// Applies `u` to `targets` (in that order), identity elsewhere.
    pub fn apply_unitary(&self, u: &CMatrix, targets: &[usize]) -> Result<Self> {
        check_registers(&self.shape, targets)?;
        let dt: usize = targets.iter().map(|&t| self.shape.dims()[t]).product();
        if u.nrows() != dt || u.ncols() != dt {
            return Err(QssError::DimMismatch(format!(
                "{}x{} operator on targets of dimension {dt}",
                u.nrows(),
                u.ncols()
            )));
        }
        check_unitary(u)?;
        Ok(self.apply_operator_unchecked(u, targets))
    }

    fn apply_operator_unchecked(&self, op: &CMatrix, targets: &[usize]) -> Self {
        let (t_idx, r_idx) = split_indices(self.shape.dims(), targets);
        let dt = op.ncols();
        let dr = self.dim() / dt;
        let mut block = CMatrix::zeros(dt, dr);
        for (i, amp) in self.amplitudes.iter().enumerate() {
            block[(t_idx[i], r_idx[i])] = *amp;
        }
        let out = op * block;
        let amps = CVector::from_iterator(self.dim(), (0..self.dim()).map(|i| out[(t_idx[i], r_idx[i])]));
        Self {
            shape: self.shape.clone(),
            amplitudes: amps,
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            shape: self.shape.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// Marginal density matrix on `keep` (in that order), computed from the
    /// amplitudes without forming the full projector.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        check_registers(&self.shape, keep)?;
        let (k_idx, r_idx) = split_indices(self.shape.dims(), keep);
        let dk: usize = keep.iter().map(|&k| self.shape.dims()[k]).product();
        let dr = self.dim() / dk;
        let mut block = CMatrix::zeros(dk, dr);
        for (i, amp) in self.amplitudes.iter().enumerate() {
            block[(k_idx[i], r_idx[i])] = *amp;
        }
        Ok(DensityMatrix {
            shape: self.shape.select(keep),
            matrix: &block * block.adjoint(),
        })
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    shape: RegisterShape,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validated construction.
    pub fn new(shape: RegisterShape, matrix: CMatrix) -> Result<Self> {
        let rho = Self { shape, matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_parts(shape: RegisterShape, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), shape.total_dim());
        Self { shape, matrix }
    }

    pub fn maximally_mixed(shape: RegisterShape) -> Self {
        let d = shape.total_dim();
        Self {
            shape,
            matrix: CMatrix::identity(d, d).unscale(d as f64),
        }
    }

    /// Random full-rank state `G G† / tr`, with G a complex Ginibre matrix.
    pub fn random(shape: RegisterShape, rng: &mut impl Rng) -> Self {
        let d = shape.total_dim();
        let g = CMatrix::from_fn(d, d, |_, _| gaussian(rng));
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        Self {
            shape,
            matrix: m.unscale(tr),
        }
    }

    /// Checks Hermiticity, unit trace and positivity to 1e-10.
    pub fn validate(&self) -> Result<()> {
        let d = self.shape.total_dim();
        if self.matrix.nrows() != d || self.matrix.ncols() != d {
            return Err(QssError::DimMismatch(format!(
                "{}x{} matrix for dimension {d}",
                self.matrix.nrows(),
                self.matrix.ncols()
            )));
        }
        let herm = (&self.matrix - self.matrix.adjoint()).camax();
        if herm > DENSITY_TOL {
            return Err(QssError::InvalidState(format!("not Hermitian ({herm:.3e})")));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(QssError::InvalidState(format!("trace {tr} != 1")));
        }
        let min = hermitian_eigenvalues(&self.matrix)[0];
        if min < -EIGEN_CLIP {
            return Err(QssError::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn shape(&self) -> &RegisterShape {
        &self.shape
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Same matrix with new register labels.
    pub fn with_labels<S: AsRef<str>>(self, labels: &[S]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
        let shape = RegisterShape::new(self.shape.dims().to_vec(), labels)?;
        Ok(Self {
            shape,
            matrix: self.matrix,
        })
    }

    /// Eigenvalues with small negatives clipped to zero, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
            .into_iter()
            .map(|v| if (-EIGEN_CLIP..0.0).contains(&v) { 0.0 } else { v })
            .collect()
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        let purity = (&self.matrix * &self.matrix).trace().re;
        (purity - 1.0).abs() <= tol
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let shape = self.shape.concat(&other.shape)?;
        Ok(Self {
            shape,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// New register `i` is old register `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(self.shape.len(), perm)?;
        Ok(self.permute_unchecked(perm))
    }

    fn permute_unchecked(&self, perm: &[usize]) -> Self {
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return self.clone();
        }
        let map = permutation_index_map(self.shape.dims(), perm);
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for c in 0..d {
            for r in 0..d {
                m[(map[r], map[c])] = self.matrix[(r, c)];
            }
        }
        Self {
            shape: self.shape.select(perm),
            matrix: m,
        }
    }

    /// Marginal on `keep`, registers in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        check_registers(&self.shape, keep)?;
        let rest = complement(self.shape.len(), keep);
        let mut perm = keep.to_vec();
        perm.extend_from_slice(&rest);
        let permuted = self.permute_unchecked(&perm);
        let dk: usize = keep.iter().map(|&k| self.shape.dims()[k]).product();
        let dr = self.dim() / dk;
        let m = CMatrix::from_fn(dk, dk, |i, j| {
            (0..dr).map(|r| permuted.matrix[(i * dr + r, j * dr + r)]).sum()
        });
        Ok(Self {
            shape: self.shape.select(keep),
            matrix: m,
        })
    }

    /// `U ρ U†` with `U` on `targets`.
    pub fn apply_unitary(&self, u: &CMatrix, targets: &[usize]) -> Result<Self> {
        check_registers(&self.shape, targets)?;
        check_unitary(u)?;
        let out_shape = self.shape.select(targets);
        self.apply_kraus(std::slice::from_ref(u), targets, &out_shape)
    }

    /// `Σ_i (K_i ⊗ I) ρ (K_i ⊗ I)†` with the Kraus operators acting on
    /// `targets`. The targets are replaced by the registers of `out_shape`,
    /// placed where the first target was.
    ///
    /// Completeness of the Kraus set is the caller's responsibility.
    pub fn apply_kraus(
        &self,
        ops: &[CMatrix],
        targets: &[usize],
        out_shape: &RegisterShape,
    ) -> Result<Self> {
        check_registers(&self.shape, targets)?;
        let din: usize = targets.iter().map(|&t| self.shape.dims()[t]).product();
        let dout = out_shape.total_dim();
        if let Some(k) = ops.iter().find(|k| k.ncols() != din || k.nrows() != dout) {
            return Err(QssError::DimMismatch(format!(
                "{}x{} Kraus operator for {din} -> {dout}",
                k.nrows(),
                k.ncols()
            )));
        }
        let rest = complement(self.shape.len(), targets);
        let mut perm = rest.clone();
        perm.extend_from_slice(targets);
        let permuted = self.permute_unchecked(&perm);
        let dr = self.dim() / din;

        let rest_shape = self.shape.select(&rest);
        let new_dims: Vec<usize> = rest_shape.dims().iter().chain(out_shape.dims()).copied().collect();
        let new_labels: Vec<String> = rest_shape
            .labels()
            .iter()
            .chain(out_shape.labels())
            .cloned()
            .collect();
        let new_shape = RegisterShape::new(new_dims, new_labels)?;

        let mut out = CMatrix::zeros(dr * dout, dr * dout);
        for r1 in 0..dr {
            for r2 in 0..dr {
                let block = permuted.matrix.view((r1 * din, r2 * din), (din, din));
                let mut acc = CMatrix::zeros(dout, dout);
                for k in ops {
                    acc += k * block * k.adjoint();
                }
                out.view_mut((r1 * dout, r2 * dout), (dout, dout)).copy_from(&acc);
            }
        }
        let result = Self {
            shape: new_shape,
            matrix: out,
        };

        // move the output registers back to where the first target sat
        let insert_at = rest.iter().filter(|&&r| r < targets[0]).count();
        let n_rest = rest.len();
        let n_out = out_shape.len();
        let back: Vec<usize> = (0..insert_at)
            .chain(n_rest..n_rest + n_out)
            .chain(insert_at..n_rest)
            .collect();
        Ok(result.permute_unchecked(&back))
    }
}

/// Von Neumann entropy in bits, with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues())
}

pub(crate) fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum::<f64>()
        .max(0.0)
}

/// `I(A'⟩B) = H(B) - H(A'B)`, where `reference` lists the registers of A'
/// and B is everything else.
pub fn coherent_information(rho: &DensityMatrix, reference: &[usize]) -> Result<f64> {
    check_registers(rho.shape(), reference)?;
    let output = complement(rho.shape().len(), reference);
    let h_b = von_neumann_entropy(&rho.partial_trace(&output)?);
    Ok(h_b - von_neumann_entropy(rho))
}

/// `F(ρ, σ) = ‖√ρ √σ‖₁²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.shape().dims() != sigma.shape().dims() {
        return Err(QssError::ShapeMismatch(format!(
            "{:?} vs {:?}",
            rho.shape().dims(),
            sigma.shape().dims()
        )));
    }
    let m = psd_sqrt(rho.matrix()) * psd_sqrt(sigma.matrix());
    let trace_norm: f64 = m.singular_values().iter().sum();
    Ok((trace_norm * trace_norm).clamp(0.0, 1.0))
}

/// `½‖ρ - σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.shape().dims() != sigma.shape().dims() {
        return Err(QssError::ShapeMismatch(format!(
            "{:?} vs {:?}",
            rho.shape().dims(),
            sigma.shape().dims()
        )));
    }
    let diff = rho.matrix() - sigma.matrix();
    Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>())
}

/// `(1/√d) Σ_j |j⟩|j⟩` on registers `S'`, `S`.
pub fn maximally_entangled(d: usize) -> Result<PureState> {
    let shape = RegisterShape::new(vec![d, d], vec!["S'", "S"])?;
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut amps = CVector::zeros(d * d);
    for j in 0..d {
        amps[j * d + j] = amp;
    }
    Ok(PureState::from_parts(shape, amps))
}

/// Purification `Σ_i √λ_i |i⟩_R |e_i⟩` with the reference register first.
/// The reference has the same total dimension as `rho` and label `R`.
pub fn purify(rho: &DensityMatrix) -> Result<PureState> {
    let d = rho.dim();
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let mut amps = CVector::zeros(d * d);
    for (i, &lambda) in vals.iter().enumerate() {
        let w = lambda.max(0.0).sqrt();
        if w == 0.0 {
            continue;
        }
        for j in 0..d {
            amps[i * d + j] = vecs[(j, i)] * w;
        }
    }
    let reference = RegisterShape::single(d, "R")?;
    let shape = reference.concat(rho.shape())?;
    PureState::normalized(shape, amps)
}

/// Teleports a d-dimensional state through the canonical `|Φ_d⟩`,
/// summing deterministically over all d² Bell outcomes and applying the
/// Weyl correction `X^a Z^b` to the second resource half.
pub fn teleport(input: &DensityMatrix, resource: &PureState) -> Result<DensityMatrix> {
    let d = input.dim();
    if resource.shape().dims() != [d, d] {
        return Err(QssError::DimMismatch(format!(
            "resource {:?} for a {d}-dimensional input",
            resource.shape().dims()
        )));
    }
    let canonical = maximally_entangled(d)?;
    if (canonical.inner(resource).norm_sqr() - 1.0).abs() > 1e-10 {
        return Err(QssError::InvalidState(
            "teleportation resource is not the canonical maximally entangled state".into(),
        ));
    }
    let input = input.clone().with_labels(&["in"])?;
    let resource = resource.to_density().with_labels(&["R1", "R2"])?;
    let joint = input.tensor(&resource)?;

    let phi = canonical.amplitudes();
    let out_shape = RegisterShape::single(d, "out")?;
    let mut acc = CMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let w = weyl(d, a, b);
            let bell = w.kronecker(&CMatrix::identity(d, d)) * phi;
            // (⟨bell| ⊗ I) ρ (|bell⟩ ⊗ I) contracts registers in, R1
            let isometry = CMatrix::from_column_slice(d * d, 1, bell.as_slice())
                .kronecker(&CMatrix::identity(d, d));
            let branch = isometry.adjoint() * joint.matrix() * &isometry;
            acc += &w * branch * w.adjoint();
        }
    }
    Ok(DensityMatrix::from_parts(out_shape, acc))
}
