// Copyright 2026 The qss Authors
// SPDX-License-Identifier: Apache-2.0

//! Threshold quantum secret sharing over a prime field.
//!
//! A basis secret `|s⟩` is encoded as the uniform superposition over the
//! coefficient vectors `a ∈ F_q^(t-1)` of the share tuples
//! `(p(x_1), ..., p(x_(2t-1)))`, where `p(x) = s·x^(t-1) + a_1 + ... + a_(t-1) x^(t-2)`.
//! The scheme always builds `2t-1` shares; shares beyond `K` are virtual and
//! are never handed to a participant.
//!
//! Decoding a qualified set `T` uses `t` witness shares from `T`:
//!
//! 1. `U_L` maps the witness values to the coefficient vector `(s, a)` using
//!    the inverse of the witness sub-Vandermonde matrix.
//! 2. `U_τ` shifts `a ↦ a + τ(s)`, where `τ(s)` makes every non-witness share
//!    a function of the shifted coefficients alone, so the secret register
//!    factors out of the residual state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::access::{self, AccessStructure, Subset};
use crate::finite_field::{self, FqElement, FqMatrix};
use crate::qudit::{
    self, classical_reversible_unitary, digits, flat_index, fidelity, maximally_entangled,
    trace_distance, CMatrix, CVector, PureState, RegisterShape, C64,
};
use crate::{QssError, Result};

/// Default number of Haar-random trials per recovery check.
pub const DEFAULT_TRIALS: usize = 20;

/// A `(t, K)` threshold scheme over `F_q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdScheme {
    q: u32,
    t: usize,
    k: usize,
    points: Vec<FqElement>,
    matrix: FqMatrix,
}

impl ThresholdScheme {
    /// Scheme with evaluation points `0, 1, ..., 2t-2`.
    pub fn new(q: u32, t: usize, k: usize) -> Result<Self> {
        let points: Vec<u64> = (0..(2 * t).saturating_sub(1) as u64).collect();
        Self::with_points(q, t, k, &points)
    }

    pub fn with_points(q: u32, t: usize, k: usize, points: &[u64]) -> Result<Self> {
        if !finite_field::is_prime(q) || q > finite_field::MAX_MODULUS {
            return Err(QssError::NotPrime(q));
        }
        if t == 0 || k < t {
            return Err(QssError::InvalidScheme(format!("need K ≥ t ≥ 1, got t={t}, K={k}")));
        }
        if 2 * t <= k {
            return Err(QssError::CloningViolation { t, k });
        }
        let n = 2 * t - 1;
        if (q as usize) < n {
            return Err(QssError::InvalidScheme(format!(
                "q = {q} has fewer than 2t-1 = {n} distinct points"
            )));
        }
        if points.len() != n {
            return Err(QssError::InvalidScheme(format!(
                "{} evaluation points given, need 2t-1 = {n}",
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|&&p| p >= q as u64) {
            return Err(QssError::InvalidScheme(format!("point {p} is not below q = {q}")));
        }
        let points = points
            .iter()
            .map(|&p| FqElement::new(p, q))
            .collect::<Result<Vec<_>>>()?;
        let matrix = finite_field::vandermonde(&points, t)?;
        Ok(Self {
            q,
            t,
            k,
            points,
            matrix,
        })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn threshold(&self) -> usize {
        self.t
    }

    pub fn participants(&self) -> usize {
        self.k
    }

    /// Real plus virtual shares, always `2t-1`.
    pub fn n_shares(&self) -> usize {
        2 * self.t - 1
    }

    pub fn virtual_shares(&self) -> usize {
        self.n_shares() - self.k
    }

    pub fn points(&self) -> &[FqElement] {
        &self.points
    }

    /// The `(2t-1) × t` evaluation matrix.
    pub fn matrix(&self) -> &FqMatrix {
        &self.matrix
    }

    pub fn access_structure(&self) -> Result<AccessStructure> {
        AccessStructure::from_threshold(self.t, self.k)
    }

    /// Share values `M · (s, a)`.
    pub fn share_values(&self, secret: u32, coefficients: &[u32]) -> Result<Vec<u32>> {
        let mut v = Vec::with_capacity(self.t);
        v.push(secret % self.q);
        v.extend(coefficients.iter().map(|c| c % self.q));
        self.matrix.apply(&v)
    }

    /// Register layout of the shares: `B1..BK` then `V1..`.
    pub fn share_shape(&self) -> Result<RegisterShape> {
        let labels: Vec<String> = (1..=self.k)
            .map(|i| format!("B{i}"))
            .chain((1..=self.virtual_shares()).map(|i| format!("V{i}")))
            .collect();
        RegisterShape::new(vec![self.q as usize; self.n_shares()], labels)
    }

    /// Flat share indices of the branches of `|f(s)⟩`, one per coefficient vector.
    fn branch_indices(&self, secret: u32) -> Vec<usize> {
        let q = self.q as usize;
        let dims = vec![q; self.n_shares()];
        let n_coeffs = q.pow(self.t as u32 - 1);
        (0..n_coeffs)
            .map(|idx| {
                let a: Vec<u32> = digits(idx, &vec![q; self.t - 1])
                    .into_iter()
                    .map(|x| x as u32)
                    .collect();
                let shares = self
                    .share_values(secret, &a)
                    .expect("coefficient vector has t-1 entries");
                let shares: Vec<usize> = shares.into_iter().map(|x| x as usize).collect();
                flat_index(&shares, &dims)
            })
            .collect()
    }

    fn check_participant_set(&self, set: Subset) -> Result<()> {
        if set & !access::full_set(self.k) != 0 {
            return Err(QssError::InvalidScheme(format!(
                "participant set {:?} outside 1..={}",
                access::participants(set),
                self.k
            )));
        }
        Ok(())
    }
}

/// JSON scheme descriptor: `{"q": 3, "t": 2, "K": 3, "points": [0, 1, 2]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct SchemeDescriptor {
    pub q: u32,
    pub t: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<u64>>,
}

impl SchemeDescriptor {
    pub fn build(&self) -> Result<ThresholdScheme> {
        match &self.points {
            Some(p) => ThresholdScheme::with_points(self.q, self.t, self.k, p),
            None => ThresholdScheme::new(self.q, self.t, self.k),
        }
    }
}

impl From<&ThresholdScheme> for SchemeDescriptor {
    fn from(s: &ThresholdScheme) -> Self {
        Self {
            q: s.q,
            t: s.t,
            k: s.k,
            points: Some(s.points.iter().map(|p| p.value() as u64).collect()),
        }
    }
}

/// Encoded state: untouched reference registers followed by the shares.
#[derive(Debug, Clone)]
pub struct EncodedSecret {
    state: PureState,
    references: usize,
    scheme: ThresholdScheme,
}

impl EncodedSecret {
    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn scheme(&self) -> &ThresholdScheme {
        &self.scheme
    }

    /// Number of reference registers in front of the shares.
    pub fn reference_registers(&self) -> usize {
        self.references
    }

    /// Register index of participant `k` (1-based).
    pub fn share_register(&self, participant: usize) -> usize {
        assert!((1..=self.scheme.k).contains(&participant));
        self.references + participant - 1
    }

    /// Register indices of the given participant set, ascending.
    pub fn share_registers(&self, set: Subset) -> Vec<usize> {
        access::participants(set)
            .into_iter()
            .map(|p| self.share_register(p))
            .collect()
    }

    /// Register index of share `index` (0-based, real or virtual).
    pub fn share_index_register(&self, index: usize) -> usize {
        assert!(index < self.scheme.n_shares());
        self.references + index
    }

    pub fn with_state(&self, state: PureState) -> Self {
        Self {
            state,
            references: self.references,
            scheme: self.scheme.clone(),
        }
    }
}

/// Encodes `secret`, whose last register is the q-dimensional secret; any
/// registers before it are references and are left untouched.
pub fn encode(scheme: &ThresholdScheme, secret: &PureState) -> Result<EncodedSecret> {
    let q = scheme.q as usize;
    let shape = secret.shape();
    let last = shape.len() - 1;
    if shape.dims()[last] != q {
        return Err(QssError::DimMismatch(format!(
            "secret register has dimension {}, scheme needs {q}",
            shape.dims()[last]
        )));
    }
    let references = last;
    let out_shape = if references == 0 {
        scheme.share_shape()?
    } else {
        shape.select(&(0..references).collect::<Vec<_>>()).concat(&scheme.share_shape()?)?
    };
    let share_dim = q.pow(scheme.n_shares() as u32);
    let prefix_dim = secret.dim() / q;
    let norm = 1.0 / (q as f64).powf((scheme.t as f64 - 1.0) / 2.0);
    let branches: Vec<Vec<usize>> = (0..q as u32).map(|s| scheme.branch_indices(s)).collect();

    let mut amps = CVector::zeros(prefix_dim * share_dim);
    for r in 0..prefix_dim {
        for (s, branch) in branches.iter().enumerate() {
            let amp = secret.amplitudes()[r * q + s] * norm;
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            for &idx in branch {
                amps[r * share_dim + idx] += amp;
            }
        }
    }
    Ok(EncodedSecret {
        state: PureState::new(out_shape, amps)?,
        references,
        scheme: scheme.clone(),
    })
}

/// Explicit decoding circuit for one qualified set.
#[derive(Debug, Clone)]
pub struct Decoder {
    q: u32,
    qualified: Subset,
    witnesses: Vec<usize>,
    unscramble: FqMatrix,
    shift: Vec<u32>,
}

impl Decoder {
    pub fn qualified(&self) -> Subset {
        self.qualified
    }

    /// Witness participants (1-based); the first one ends up holding the secret.
    pub fn witnesses(&self) -> &[usize] {
        &self.witnesses
    }

    pub fn secret_participant(&self) -> usize {
        self.witnesses[0]
    }

    /// `L`: witness share values to `(s, a)`.
    pub fn unscramble(&self) -> &FqMatrix {
        &self.unscramble
    }

    /// `τ(s)` for a basis secret.
    pub fn translation(&self, secret: u32) -> Vec<u32> {
        let q = self.q as u64;
        self.shift
            .iter()
            .map(|&c| (c as u64 * secret as u64 % q) as u32)
            .collect()
    }

    fn linear_map(&self, values: &[usize]) -> Vec<usize> {
        let v: Vec<u32> = values.iter().map(|&x| x as u32).collect();
        self.unscramble
            .apply(&v)
            .expect("witness count matches L")
            .into_iter()
            .map(|x| x as usize)
            .collect()
    }

    fn translation_map(&self, values: &[usize]) -> Vec<usize> {
        let q = self.q as usize;
        let tau = self.translation(values[0] as u32);
        let mut out = values.to_vec();
        for (o, t) in out[1..].iter_mut().zip(tau) {
            *o = (*o + t as usize) % q;
        }
        out
    }

    fn dims(&self) -> Vec<usize> {
        vec![self.q as usize; self.witnesses.len()]
    }

    /// `U_L` on the witness registers.
    pub fn linear_stage(&self) -> Result<CMatrix> {
        classical_reversible_unitary(&self.dims(), |v| self.linear_map(v))
    }

    /// `U_τ`: `|s⟩|a⟩ ↦ |s⟩|a + τ(s)⟩` on the witness registers.
    pub fn translation_stage(&self) -> Result<CMatrix> {
        classical_reversible_unitary(&self.dims(), |v| self.translation_map(v))
    }

    /// `U_τ · U_L` as one permutation unitary.
    pub fn unitary(&self) -> Result<CMatrix> {
        classical_reversible_unitary(&self.dims(), |v| {
            self.translation_map(&self.linear_map(v))
        })
    }

    /// Runs the circuit on the witness registers of `encoded`.
    pub fn apply(&self, encoded: &EncodedSecret) -> Result<EncodedSecret> {
        let targets: Vec<usize> = self
            .witnesses
            .iter()
            .map(|&w| encoded.share_register(w))
            .collect();
        let state = encoded.state().apply_unitary(&self.unitary()?, &targets)?;
        Ok(encoded.with_state(state))
    }
}

/// Builds the decoder for qualified set `qualified`. `witnesses` picks the
/// `t` participants (1-based, all in the set) whose shares are inverted; by
/// default the `t` smallest members are used.
pub fn build_decoder(
    scheme: &ThresholdScheme,
    qualified: Subset,
    witnesses: Option<&[usize]>,
) -> Result<Decoder> {
    scheme.check_participant_set(qualified)?;
    let members = access::participants(qualified);
    if members.len() < scheme.t {
        return Err(QssError::NotQualified(members));
    }
    let witnesses: Vec<usize> = match witnesses {
        None => members[..scheme.t].to_vec(),
        Some(w) => {
            let distinct = w.iter().enumerate().all(|(i, x)| !w[..i].contains(x));
            if w.len() != scheme.t || !distinct || w.iter().any(|x| !members.contains(x)) {
                return Err(QssError::InvalidScheme(format!(
                    "witnesses {w:?} must be {} distinct members of {members:?}",
                    scheme.t
                )));
            }
            w.to_vec()
        }
    };
    let witness_rows: Vec<usize> = witnesses.iter().map(|w| w - 1).collect();
    let unscramble = scheme.matrix.select_rows(&witness_rows)?.inverse()?;

    let others: Vec<usize> = (0..scheme.n_shares())
        .filter(|i| !witness_rows.contains(i))
        .collect();
    let shift = if others.is_empty() {
        Vec::new()
    } else {
        // non-witness share j reads c_j s + d_j · a
        let c: Vec<u32> = others.iter().map(|&j| scheme.matrix.value(j, 0)).collect();
        let d = scheme
            .matrix
            .select_rows(&others)?
            .select_cols(&(1..scheme.t).collect::<Vec<_>>())?;
        match d.solve(&c) {
            Ok(x) => x,
            Err(QssError::SingularMatrix) => return Err(QssError::SingularResidual),
            Err(e) => return Err(e),
        }
    };
    Ok(Decoder {
        q: scheme.q,
        qualified,
        witnesses,
        unscramble,
        shift,
    })
}

/// Result of the two-gate qutrit recovery.
#[derive(Debug, Clone)]
pub struct PairDecoding {
    pub state: PureState,
    /// Register now holding the secret.
    pub secret_register: usize,
    /// The remaining two share registers, in (partner, outsider) order.
    pub residual_registers: [usize; 2],
}

/// Recovers the secret of the `(2,3)` qutrit scheme from a pair of shares
/// with two modular additions: `second ← first + second`, then
/// `first ← second + first`.
///
/// The pair is unordered; `{1,2}`, `{2,3}` and `{3,1}` are taken in cyclic
/// order so the same two gates apply to each.
pub fn cgl99_pair_decode(encoded: &EncodedSecret, pair: (usize, usize)) -> Result<PairDecoding> {
    let scheme = encoded.scheme();
    let default_points = scheme.points.iter().enumerate().all(|(i, p)| p.value() as usize == i);
    if scheme.q != 3 || scheme.t != 2 || scheme.k != 3 || !default_points {
        return Err(QssError::DimMismatch(
            "pair decoding needs the (2,3) qutrit scheme on points 0,1,2".into(),
        ));
    }
    let (first, second) = match (pair.0.min(pair.1), pair.0.max(pair.1)) {
        (1, 2) => (1, 2),
        (2, 3) => (2, 3),
        (1, 3) => (3, 1),
        _ => return Err(QssError::NotQualified(vec![pair.0, pair.1])),
    };
    let outsider = 6 - first - second;
    let add = classical_reversible_unitary(&[3, 3], |v| vec![v[0], (v[0] + v[1]) % 3])?;
    let (f, s, o) = (
        encoded.share_register(first),
        encoded.share_register(second),
        encoded.share_register(outsider),
    );
    let state = encoded
        .state()
        .apply_unitary(&add, &[f, s])?
        .apply_unitary(&add, &[s, f])?;
    Ok(PairDecoding {
        state,
        secret_register: f,
        residual_registers: [s, o],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryReport {
    /// Minimum over the Haar trials and the entangled input.
    pub min_fidelity: f64,
    pub haar_min_fidelity: f64,
    pub entanglement_fidelity: f64,
    pub trials: usize,
}

/// Haar-random secret trials plus the entanglement fidelity of the
/// maximally entangled `S'S` input, decoded with the default witnesses.
pub fn verify_recovery(
    scheme: &ThresholdScheme,
    qualified: Subset,
    trials: usize,
    seed: u64,
) -> Result<RecoveryReport> {
    verify_recovery_with(scheme, qualified, None, trials, seed)
}

pub fn verify_recovery_with(
    scheme: &ThresholdScheme,
    qualified: Subset,
    witnesses: Option<&[usize]>,
    trials: usize,
    seed: u64,
) -> Result<RecoveryReport> {
    let decoder = build_decoder(scheme, qualified, witnesses)?;
    let q = scheme.q as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let secret_shape = RegisterShape::single(q, "S")?;
    let secrets: Vec<PureState> = (0..trials)
        .map(|_| PureState::random(secret_shape.clone(), &mut rng))
        .collect();

    let haar: Vec<f64> = secrets
        .par_iter()
        .map(|psi| {
            let decoded = decoder.apply(&encode(scheme, psi)?)?;
            let reg = decoded.share_register(decoder.secret_participant());
            let recovered = decoded.state().reduced(&[reg])?;
            fidelity(&psi.to_density(), &recovered)
        })
        .collect::<Result<_>>()?;
    let haar_min = haar.into_iter().fold(1.0, f64::min);

    let phi = maximally_entangled(q)?;
    let decoded = decoder.apply(&encode(scheme, &phi)?)?;
    let reg = decoded.share_register(decoder.secret_participant());
    let recovered = decoded.state().reduced(&[0, reg])?;
    let ent = fidelity(&phi.to_density(), &recovered)?;

    Ok(RecoveryReport {
        min_fidelity: haar_min.min(ent),
        haar_min_fidelity: haar_min,
        entanglement_fidelity: ent,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecrecyReport {
    /// Trace distance of `ρ_{S'B_Z}` from `ρ_{S'} ⊗ ρ_{B_Z}` for the maximally
    /// entangled input.
    pub decoupling_defect: f64,
    /// Largest trace distance between `ρ_{B_Z}(s)` and `ρ_{B_Z}(0)` over basis secrets.
    pub basis_distinguishability: f64,
    /// Maximum of the two.
    pub defect: f64,
}

pub fn verify_secrecy(scheme: &ThresholdScheme, unqualified: Subset) -> Result<SecrecyReport> {
    scheme.check_participant_set(unqualified)?;
    let members = access::participants(unqualified);
    if members.len() >= scheme.t {
        return Err(QssError::IsQualified(members));
    }
    if members.is_empty() {
        return Ok(SecrecyReport {
            decoupling_defect: 0.0,
            basis_distinguishability: 0.0,
            defect: 0.0,
        });
    }
    let q = scheme.q as usize;

    let encoded = encode(scheme, &maximally_entangled(q)?)?;
    let regs = encoded.share_registers(unqualified);
    let mut keep = vec![0];
    keep.extend(&regs);
    let joint = encoded.state().reduced(&keep)?;
    let reference = encoded.state().reduced(&[0])?;
    let shares = encoded.state().reduced(&regs)?;
    let decoupling_defect = trace_distance(&joint, &reference.tensor(&shares)?)?;

    let shape = RegisterShape::single(q, "S")?;
    let marginal = |s: usize| -> Result<qudit::DensityMatrix> {
        let enc = encode(scheme, &PureState::basis(shape.clone(), &[s])?)?;
        enc.state().reduced(&enc.share_registers(unqualified))
    };
    let base = marginal(0)?;
    let mut basis_distinguishability: f64 = 0.0;
    for s in 1..q {
        basis_distinguishability = basis_distinguishability.max(trace_distance(&marginal(s)?, &base)?);
    }
    Ok(SecrecyReport {
        decoupling_defect,
        basis_distinguishability,
        defect: decoupling_defect.max(basis_distinguishability),
    })
}
