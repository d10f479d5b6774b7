// Copyright 2026 The qss Authors
// SPDX-License-Identifier: Apache-2.0

//! Coherent information of channels and compound families, and the
//! max-min optimization `max_ρ min_ℓ I(A'⟩B_ℓ)` over input states.
//!
//! Inputs are searched through the unconstrained map
//! `x ∈ R^(2d²) ↦ A A† / tr(A A†)`, where `A` is the complex `d × d` matrix
//! whose real and imaginary parts are read from `x`. The map reaches every
//! density matrix, so the search needs no constraints. The min over members
//! is not smooth, so the search is a multi-start Nelder-Mead.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::channels::{CompoundFamily, KrausChannel};
use crate::qudit::{self, CMatrix, DensityMatrix, RegisterShape, C64};
use crate::{QssError, Result};

/// `-q log₂ q - (1-q) log₂ (1-q)`, zero at the endpoints.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(QssError::ParamOutOfRange(format!("binary entropy of {q}")));
    }
    Ok([q, 1.0 - q]
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForm {
    pub value_bits: f64,
    /// True for `d ∈ {2, 3}`, where the value is the capacity; otherwise it is
    /// only an achievable rate.
    pub capacity: bool,
}

/// `log₂ d - max_ℓ H₂(q_ℓ)` for a family of dephasing channels.
pub fn dephasing_capacity_closed_form(d: usize, qs: &[f64]) -> Result<ClosedForm> {
    if d < 2 {
        return Err(QssError::ParamOutOfRange(format!("dimension {d}")));
    }
    if qs.is_empty() {
        return Err(QssError::ParamOutOfRange("no dephasing parameters".into()));
    }
    let worst = qs
        .iter()
        .map(|&q| binary_entropy(q))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ClosedForm {
        value_bits: (d as f64).log2() - worst,
        capacity: d == 2 || d == 3,
    })
}

fn check_input(ch: &KrausChannel, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != ch.in_dim() {
        return Err(QssError::DimMismatch(format!(
            "input of dimension {} for a channel on {}",
            rho.dim(),
            ch.in_dim()
        )));
    }
    Ok(())
}

/// `I(A'⟩B)` of `(id ⊗ N)(φ_{A'A})` where `φ` purifies `rho`.
pub fn coherent_info_via_purification(ch: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    check_input(ch, rho)?;
    let phi = qudit::purify(rho)?.to_density();
    let targets: Vec<usize> = (1..phi.shape().len()).collect();
    let out = ch.apply(&phi, &targets)?;
    qudit::coherent_information(&out, &[0])
}

/// `H(N(ρ)) - H(N^c(ρ))`, with the complementary output read off the Kraus
/// operators.
pub fn coherent_info_via_environment(ch: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    check_input(ch, rho)?;
    let all: Vec<usize> = (0..rho.shape().len()).collect();
    let out = ch.apply(rho, &all)?;
    let env = ch.environment_state(rho)?;
    Ok(qudit::von_neumann_entropy(&out) - qudit::von_neumann_entropy(&env))
}

/// Coherent information in bits, through whichever route diagonalizes the
/// smaller matrices: the `d_A d_B` joint state, or the output and the
/// Kraus-index environment.
pub fn coherent_info(ch: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    if ch.in_dim() * ch.out_dim() <= ch.out_dim().max(ch.ops().len()) {
        coherent_info_via_purification(ch, rho)
    } else {
        coherent_info_via_environment(ch, rho)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub min_bits: f64,
    /// Per-member coherent information, in family order.
    pub per_member: Vec<(String, f64)>,
}

impl Objective {
    /// Label of the member attaining the minimum (first one on ties).
    pub fn argmin(&self) -> &str {
        let mut best = &self.per_member[0];
        for m in &self.per_member[1..] {
            if m.1 < best.1 {
                best = m;
            }
        }
        &best.0
    }
}

/// `min_ℓ I(A'⟩B_ℓ)` at input `rho`.
pub fn compound_objective(family: &CompoundFamily, rho: &DensityMatrix) -> Result<Objective> {
    if rho.dim() != family.input_dim() {
        return Err(QssError::DimMismatch(format!(
            "input of dimension {} for a family on {}",
            rho.dim(),
            family.input_dim()
        )));
    }
    let per_member = family
        .members()
        .iter()
        .map(|m| Ok((m.label.clone(), coherent_info(&m.channel, rho)?)))
        .collect::<Result<Vec<_>>>()?;
    let min_bits = per_member.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    Ok(Objective {
        min_bits,
        per_member,
    })
}

/// `(1/n) min_ℓ I(A'⟩B_ℓ^n)` at the product input `ρ^⊗n`, for `n ∈ {1, 2}`.
pub fn product_input_rate(family: &CompoundFamily, rho: &DensityMatrix, n: usize) -> Result<f64> {
    if !(1..=2).contains(&n) {
        return Err(QssError::ParamOutOfRange(format!("tensor power {n} (supported: 1, 2)")));
    }
    if n == 1 {
        return Ok(compound_objective(family, rho)?.min_bits);
    }
    let powered = family.tensor_power(n)?;
    let mut input = rho.clone();
    for _ in 1..n {
        input = input.tensor(rho)?;
    }
    Ok(compound_objective(&powered, &input)?.min_bits / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    /// Stop a local search once the simplex values agree to this tolerance.
    pub tolerance: f64,
    /// Evaluation budget per restart.
    pub max_evals: usize,
    /// Number of starts; the first is always the maximally mixed input.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_evals: 4000,
            restarts: 4,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CapacityReport {
    pub value_bits: f64,
    pub per_member_bits: BTreeMap<String, f64>,
    pub argmax_input: DensityMatrix,
    pub method: Method,
    pub iterations: usize,
    pub evaluations: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub converged: bool,
}

impl PartialEq for CapacityReport {
    fn eq(&self, other: &Self) -> bool {
        self.value_bits.to_bits() == other.value_bits.to_bits()
            && self.per_member_bits == other.per_member_bits
            && self.argmax_input.matrix() == other.argmax_input.matrix()
            && self.method == other.method
            && self.iterations == other.iterations
            && self.evaluations == other.evaluations
            && self.tolerance.to_bits() == other.tolerance.to_bits()
            && self.seed == other.seed
            && self.converged == other.converged
    }
}

/// Real and imaginary parts, row by row.
#[derive(Serialize)]
struct MatrixJson {
    dim: usize,
    real: Vec<Vec<f64>>,
    imag: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|r| m.row(r).iter().map(f).collect()).collect()
        };
        Self {
            dim: m.nrows(),
            real: rows(|c| c.re),
            imag: rows(|c| c.im),
        }
    }
}

impl Serialize for CapacityReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("CapacityReport", 9)?;
        s.serialize_field("value_bits", &self.value_bits)?;
        s.serialize_field("per_member_bits", &self.per_member_bits)?;
        s.serialize_field("argmax_input", &MatrixJson::from(self.argmax_input.matrix()))?;
        s.serialize_field("method", &self.method)?;
        s.serialize_field("iterations", &self.iterations)?;
        s.serialize_field("evaluations", &self.evaluations)?;
        s.serialize_field("tolerance", &self.tolerance)?;
        s.serialize_field("seed", &self.seed)?;
        s.serialize_field("converged", &self.converged)?;
        s.end()
    }
}

/// Closed-form report for families made only of dephasing (or identity)
/// members; `None` for any other family. The maximally mixed input
/// achieves the value.
pub fn dephasing_closed_form_report(family: &CompoundFamily) -> Result<Option<(CapacityReport, ClosedForm)>> {
    let Some(qs) = family.dephasing_parameters() else {
        return Ok(None);
    };
    let d = family.input_dim();
    let closed = dephasing_capacity_closed_form(d, &qs)?;
    let log_d = (d as f64).log2();
    let per_member_bits = family
        .labels()
        .into_iter()
        .zip(&qs)
        .map(|(l, &q)| Ok((l.to_string(), log_d - binary_entropy(q)?)))
        .collect::<Result<_>>()?;
    let report = CapacityReport {
        value_bits: closed.value_bits,
        per_member_bits,
        argmax_input: DensityMatrix::maximally_mixed(RegisterShape::single(d, "A")?),
        method: Method::ClosedForm,
        iterations: 0,
        evaluations: 0,
        tolerance: 0.0,
        seed: 0,
        converged: true,
    };
    Ok(Some((report, closed)))
}

/// Entry `(r, c)` of the lower-triangular factor: the diagonal is real and
/// comes first, then real and imaginary parts below it, row by row.
fn factor_from_params(x: &[f64], d: usize) -> CMatrix {
    let mut a = CMatrix::zeros(d, d);
    let mut k = d;
    for r in 0..d {
        a[(r, r)] = C64::new(x[r], 0.0);
        for c in 0..r {
            a[(r, c)] = C64::new(x[k], x[k + 1]);
            k += 2;
        }
    }
    a
}

/// `A A† / tr(A A†)` for the lower-triangular `A` read from `x`; every
/// density matrix has such a factor.
fn params_to_state(x: &[f64], d: usize) -> DensityMatrix {
    let a = factor_from_params(x, d);
    let m = &a * a.adjoint();
    let tr = m.trace().re;
    let shape = RegisterShape::single(d, "A").expect("input dimension is at least 2");
    DensityMatrix::from_parts(shape, m.unscale(tr))
}

fn identity_params(d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d * d];
    x[..d].fill(1.0);
    x
}

/// Random factor; on `near_pure` starts everything outside the first
/// column is damped so the start is close to a random pure state.
fn random_params(d: usize, near_pure: bool, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..d * d).map(|_| StandardNormal.sample(rng)).collect();
    if near_pure {
        x[1..d].iter_mut().for_each(|v| *v *= 0.1);
        let mut k = d;
        for r in 0..d {
            for c in 0..r {
                if c != 0 {
                    x[k] *= 0.1;
                    x[k + 1] *= 0.1;
                }
                k += 2;
            }
        }
    }
    x
}

struct LocalResult {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
}

/// Nelder-Mead maximization with dimension-adaptive coefficients.
fn nelder_mead_max<F>(f: &F, start: &[f64], step: f64, tol: f64, max_evals: usize) -> LocalResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);

    let evals = std::cell::Cell::new(0usize);
    // minimize the negated objective
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_finite() { -v } else { f64::INFINITY }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(start);
    simplex.push((start.to_vec(), v0));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += if x[i].abs() > 1e-12 { step * x[i].abs().max(0.5) } else { step };
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while evals.get() < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() <= tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(alpha * beta);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(alpha * gamma);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-gamma);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&best) {
                *xi = bi + delta * (*xi - bi);
            }
            *v = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    LocalResult {
        x,
        value: -v,
        iterations,
        evaluations: evals.get(),
        converged,
    }
}

/// Best value found by a derivative-free multi-start search of
/// `max_ρ min_ℓ I(A'⟩B_ℓ)`. Deterministic for fixed options. If the
/// evaluation budget runs out before the simplex collapses, the best point
/// so far is returned with `converged = false`.
pub fn maximize_min_coherent_info(
    family: &CompoundFamily,
    opts: &OptimizerOptions,
) -> Result<CapacityReport> {
    if opts.restarts == 0 || opts.max_evals == 0 || opts.tolerance.is_nan() || opts.tolerance <= 0.0 {
        return Err(QssError::ParamOutOfRange(
            "optimizer needs restarts ≥ 1, max_evals ≥ 1 and tolerance > 0".into(),
        ));
    }
    let d = family.input_dim();
    // fresh simplex around the incumbent every `chunk` evaluations
    let chunk = (50 * d * d).max(500);

    // surface dimension errors before the search swallows them
    compound_objective(family, &params_to_state(&identity_params(d), d))?;
    let objective = |x: &[f64]| {
        compound_objective(family, &params_to_state(x, d))
            .map(|o| o.min_bits)
            .unwrap_or(f64::NEG_INFINITY)
    };

    let starts: Vec<Vec<f64>> = (0..opts.restarts)
        .map(|r| {
            if r == 0 {
                return identity_params(d);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64);
            random_params(d, r % 2 == 0, &mut rng)
        })
        .collect();

    let runs: Vec<LocalResult> = starts
        .par_iter()
        .map(|start| {
            let mut res = nelder_mead_max(&objective, start, 0.25, opts.tolerance, chunk.min(opts.max_evals));
            let mut step = 0.1;
            while res.evaluations < opts.max_evals {
                let budget = (opts.max_evals - res.evaluations).min(chunk);
                let next = nelder_mead_max(&objective, &res.x, step, opts.tolerance, budget);
                let improved = next.value > res.value + opts.tolerance;
                let settled = res.converged && next.converged && !improved;
                let evaluations = res.evaluations + next.evaluations;
                let iterations = res.iterations + next.iterations;
                if next.value >= res.value {
                    res = next;
                } else {
                    res.converged = next.converged;
                }
                res.evaluations = evaluations;
                res.iterations = iterations;
                if settled {
                    break;
                }
                if res.converged {
                    step = (step * 0.5).max(1e-3);
                }
            }
            res
        })
        .collect();

    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best].value {
            best = i;
        }
    }
    let argmax = params_to_state(&runs[best].x, d);
    let objective = compound_objective(family, &argmax)?;
    Ok(CapacityReport {
        value_bits: objective.min_bits,
        per_member_bits: objective.per_member.into_iter().collect(),
        argmax_input: argmax,
        method: Method::Optimize,
        iterations: runs.iter().map(|r| r.iterations).sum(),
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
        tolerance: opts.tolerance,
        seed: opts.seed,
        converged: runs[best].converged,
    })
}
