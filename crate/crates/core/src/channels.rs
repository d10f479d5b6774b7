// Copyright 2026 The qss Authors
// SPDX-License-Identifier: Apache-2.0

//! Kraus channels and their products. A product channel with one output
//! register per share is reduced to a compound family with one member per
//! qualified set.

use std::collections::BTreeSet;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::access::{self, AccessDescriptor, AccessStructure, Subset};
use crate::qudit::{self, CMatrix, DensityMatrix, RegisterShape, C64};
use crate::{QssError, Result};

const COMPLETENESS_TOL: f64 = 1e-10;

/// Named channel constructors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelKind {
    Identity,
    /// `ρ ↦ (1-q) ρ + q Z ρ Z†` with the clock operator `Z`.
    Dephasing { q: f64 },
    /// `ρ ↦ (1-p) ρ + p I/d`.
    Depolarizing { p: f64 },
}

impl ChannelKind {
    pub fn build(self, d: usize) -> Result<KrausChannel> {
        match self {
            Self::Identity => KrausChannel::identity(d),
            Self::Dephasing { q } => KrausChannel::dephasing(d, q),
            Self::Depolarizing { p } => KrausChannel::depolarizing(d, p),
        }
    }

    /// Dephasing strength if the channel is a dephasing channel (identity is `q = 0`).
    pub fn dephasing_parameter(self) -> Option<f64> {
        match self {
            Self::Identity => Some(0.0),
            Self::Dephasing { q } => Some(q),
            Self::Depolarizing { .. } => None,
        }
    }
}

/// Completely positive trace-preserving map `Σ_i K_i ρ K_i†`.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    in_dim: usize,
    out_shape: RegisterShape,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>, in_dim: usize, out_shape: RegisterShape) -> Result<Self> {
        if ops.is_empty() {
            return Err(QssError::DimMismatch("no Kraus operators".into()));
        }
        let out_dim = out_shape.total_dim();
        if let Some(k) = ops.iter().find(|k| k.nrows() != out_dim || k.ncols() != in_dim) {
            return Err(QssError::DimMismatch(format!(
                "{}x{} Kraus operator for {in_dim} -> {out_dim}",
                k.nrows(),
                k.ncols()
            )));
        }
        let ch = Self {
            ops,
            in_dim,
            out_shape,
        };
        let defect = ch.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(QssError::NotTracePreserving(defect));
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(vec![CMatrix::identity(d, d)], d, RegisterShape::single(d, "B")?)
    }

    /// Two Kraus operators `{√(1-q) I, √q Z}`.
    pub fn dephasing(d: usize, q: f64) -> Result<Self> {
        if d < 2 || !(0.0..=1.0).contains(&q) {
            return Err(QssError::ParamOutOfRange(format!("dephasing d={d}, q={q}")));
        }
        let ops = vec![
            CMatrix::identity(d, d) * C64::new((1.0 - q).sqrt(), 0.0),
            qudit::weyl_z(d) * C64::new(q.sqrt(), 0.0),
        ];
        Self::new(ops, d, RegisterShape::single(d, "B")?)
    }

    /// Weyl-twirl form of `(1-p) ρ + p I/d`.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if d < 2 || !(0.0..=1.0).contains(&p) {
            return Err(QssError::ParamOutOfRange(format!("depolarizing d={d}, p={p}")));
        }
        let d2 = (d * d) as f64;
        let mut ops = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let w = if a == 0 && b == 0 { 1.0 - p + p / d2 } else { p / d2 };
                if w > 0.0 {
                    ops.push(qudit::weyl(d, a, b) * C64::new(w.sqrt(), 0.0));
                }
            }
        }
        Self::new(ops, d, RegisterShape::single(d, "B")?)
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_shape.total_dim()
    }

    pub fn out_shape(&self) -> &RegisterShape {
        &self.out_shape
    }

    /// `max |Σ K†K - I|`.
    pub fn completeness_defect(&self) -> f64 {
        let sum = self
            .ops
            .iter()
            .fold(CMatrix::zeros(self.in_dim, self.in_dim), |acc, k| acc + k.adjoint() * k);
        (sum - CMatrix::identity(self.in_dim, self.in_dim)).camax()
    }

    pub fn with_output_labels<S: AsRef<str>>(mut self, labels: &[S]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
        self.out_shape = RegisterShape::new(self.out_shape.dims().to_vec(), labels)?;
        Ok(self)
    }

    /// Applies the channel to `targets` of `rho`; their joint dimension must
    /// be the channel's input dimension.
    pub fn apply(&self, rho: &DensityMatrix, targets: &[usize]) -> Result<DensityMatrix> {
        rho.apply_kraus(&self.ops, targets, &self.out_shape)
    }

    /// Applies the channel to the whole of `rho`.
    pub fn apply_all(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let all: Vec<usize> = (0..rho.shape().len()).collect();
        self.apply(rho, &all)
    }

    /// Environment state `E_ij = Tr(K_i ρ K_j†)` of the Stinespring dilation.
    pub fn environment_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.in_dim {
            return Err(QssError::DimMismatch(format!(
                "input of dimension {} for a channel on {}",
                rho.dim(),
                self.in_dim
            )));
        }
        let r = self.ops.len();
        let images: Vec<CMatrix> = self.ops.iter().map(|k| k * rho.matrix()).collect();
        let m = CMatrix::from_fn(r, r, |i, j| (&images[i] * self.ops[j].adjoint()).trace());
        let shape = if r >= 2 {
            RegisterShape::single(r, "E")?
        } else {
            // a single Kraus operator leaves the environment pure
            let mut padded = CMatrix::zeros(2, 2);
            padded[(0, 0)] = m[(0, 0)];
            return Ok(DensityMatrix::from_parts(RegisterShape::single(2, "E")?, padded));
        };
        Ok(DensityMatrix::from_parts(shape, m))
    }

    /// Product channel `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let out_shape = self.out_shape.concat(&other.out_shape)?;
        let in_dim = self.in_dim * other.in_dim;
        if in_dim > qudit::DEFAULT_AMPLITUDE_CAP {
            return Err(QssError::ShapeCapExceeded {
                dim: in_dim,
                cap: qudit::DEFAULT_AMPLITUDE_CAP,
            });
        }
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        for a in &self.ops {
            for b in &other.ops {
                ops.push(a.kronecker(b));
            }
        }
        Ok(Self {
            ops,
            in_dim,
            out_shape,
        })
    }

    /// `n`-fold product with itself.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(QssError::ParamOutOfRange("tensor power n must be ≥ 1".into()));
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self)?;
        }
        Ok(acc)
    }

    /// Effective channel onto the output registers `keep` (in that order),
    /// with the remaining outputs traced out. Kraus operators are
    /// `(I_keep ⊗ ⟨e|_rest) K_i` for every basis vector `e` of the rest.
    pub fn marginal(&self, keep: &[usize]) -> Result<Self> {
        let n = self.out_shape.len();
        if keep.is_empty() {
            return Err(QssError::EmptyKeepSet);
        }
        if keep.iter().enumerate().any(|(i, &k)| k >= n || keep[..i].contains(&k)) {
            return Err(QssError::DimMismatch(format!("output registers {keep:?} of {n}")));
        }
        let dims = self.out_shape.dims();
        let rest: Vec<usize> = (0..n).filter(|r| !keep.contains(r)).collect();
        let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
        let rest_dims: Vec<usize> = rest.iter().map(|&r| dims[r]).collect();
        let dk: usize = keep_dims.iter().product();
        let dr: usize = rest_dims.iter().product();

        let mut ops = Vec::with_capacity(self.ops.len() * dr);
        for k in &self.ops {
            let mut pieces = vec![CMatrix::zeros(dk, self.in_dim); dr];
            for row in 0..k.nrows() {
                let d = qudit::digits(row, dims);
                let kd: Vec<usize> = keep.iter().map(|&i| d[i]).collect();
                let rd: Vec<usize> = rest.iter().map(|&i| d[i]).collect();
                let (ki, ri) = (
                    qudit::flat_index(&kd, &keep_dims),
                    qudit::flat_index(&rd, &rest_dims),
                );
                pieces[ri].row_mut(ki).copy_from(&k.row(row));
            }
            ops.extend(pieces.into_iter().filter(|p| p.norm() > 0.0));
        }
        Self::new(ops, self.in_dim, self.out_shape.select(keep))
    }
}

/// Product of single-register channels, one output register per channel,
/// labelled `B1..BK`.
pub fn broadcast_product(channels: &[KrausChannel]) -> Result<KrausChannel> {
    let (first, rest) = channels
        .split_first()
        .ok_or_else(|| QssError::InvalidFamily("empty broadcast".into()))?;
    let mut acc = first.clone();
    for ch in rest {
        acc = acc.tensor(ch)?;
    }
    let labels: Vec<String> = (1..=acc.out_shape.len()).map(|i| format!("B{i}")).collect();
    acc.with_output_labels(&labels)
}

/// Reference route for marginals: apply the full channel, then trace out
/// the unkept outputs.
pub fn apply_then_trace(
    channel: &KrausChannel,
    rho: &DensityMatrix,
    targets: &[usize],
    keep_outputs: &[usize],
) -> Result<DensityMatrix> {
    let out = channel.apply(rho, targets)?;
    // outputs were inserted where the first target sat
    let untouched: Vec<usize> = (0..rho.shape().len()).filter(|r| !targets.contains(r)).collect();
    let before = untouched.iter().filter(|&&r| r < targets[0]).count();
    let mut keep: Vec<usize> = (0..before).collect();
    keep.extend(keep_outputs.iter().map(|&k| before + k));
    let n_out = channel.out_shape.len();
    keep.extend((before + n_out)..out.shape().len());
    out.partial_trace(&keep)
}

/// Compact label for a participant set: letters for `K ≤ 26`, otherwise
/// dash-joined indices.
pub fn set_label(k: usize, set: Subset) -> String {
    let members = access::participants(set);
    if k <= 26 {
        members.iter().map(|&m| (b'a' + (m - 1) as u8) as char).collect()
    } else {
        members.iter().map(ToString::to_string).collect::<Vec<_>>().join("-")
    }
}

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub label: String,
    pub channel: KrausChannel,
    /// Set when the member came from a named constructor.
    pub kind: Option<ChannelKind>,
}

/// Indexed family `{N^(ℓ)}` sharing one input space.
#[derive(Debug, Clone)]
pub struct CompoundFamily {
    input_dim: usize,
    members: Vec<FamilyMember>,
}

impl CompoundFamily {
    pub fn new(members: Vec<FamilyMember>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| QssError::InvalidFamily("family has no members".into()))?;
        let input_dim = first.channel.in_dim();
        let mut seen = BTreeSet::new();
        for m in &members {
            if !seen.insert(m.label.as_str()) {
                return Err(QssError::InvalidFamily(format!("duplicate label {:?}", m.label)));
            }
            if m.channel.in_dim() != input_dim {
                return Err(QssError::InvalidFamily(format!(
                    "member {:?} has input dimension {}, expected {input_dim}",
                    m.label,
                    m.channel.in_dim()
                )));
            }
        }
        Ok(Self { input_dim, members })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.label.as_str()).collect()
    }

    /// Dephasing parameters of every member, if all members are dephasing
    /// (or identity) channels from the named constructors.
    pub fn dephasing_parameters(&self) -> Option<Vec<f64>> {
        self.members
            .iter()
            .map(|m| m.kind.and_then(ChannelKind::dephasing_parameter))
            .collect()
    }

    /// Every member replaced by its `n`-fold tensor power.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        let members = self
            .members
            .iter()
            .map(|m| {
                Ok(FamilyMember {
                    label: m.label.clone(),
                    channel: m.channel.tensor_power(n)?,
                    kind: None,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(members)
    }

    /// Members in a new order (`order[i]` is the old index of member `i`).
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(QssError::InvalidFamily("reordering must list every member".into()));
        }
        let members = order
            .iter()
            .map(|&i| {
                self.members
                    .get(i)
                    .cloned()
                    .ok_or_else(|| QssError::InvalidFamily(format!("no member {i}")))
            })
            .collect::<Result<_>>()?;
        Self::new(members)
    }
}

/// One virtual receiver per qualified set: the marginal of `broadcast` onto
/// the set's output registers. By default only the minimal qualified sets
/// and the full set are included; `all_qualified` includes every one.
pub fn compound_from_access(
    broadcast: &KrausChannel,
    access: &AccessStructure,
    all_qualified: bool,
) -> Result<CompoundFamily> {
    let k = access.participants();
    if broadcast.out_shape().len() != k {
        return Err(QssError::StructureMismatch(format!(
            "broadcast has {} output registers, access structure has {k} participants",
            broadcast.out_shape().len()
        )));
    }
    access
        .ensure_valid()
        .map_err(|e| QssError::StructureMismatch(e.to_string()))?;
    let sets: Vec<Subset> = if all_qualified {
        access.qualified().collect()
    } else {
        access.minimal_and_full()
    };
    let members = sets
        .into_iter()
        .map(|set| {
            let regs: Vec<usize> = access::participants(set).iter().map(|p| p - 1).collect();
            Ok(FamilyMember {
                label: set_label(k, set),
                channel: broadcast.marginal(&regs)?,
                kind: None,
            })
        })
        .collect::<Result<_>>()?;
    CompoundFamily::new(members)
}

/// JSON member/channel spec: `{"label": "ab", "kind": "dephasing", "q": 0.1}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl ChannelSpec {
    pub fn dephasing(label: &str, q: f64) -> Self {
        Self {
            label: Some(label.to_string()),
            kind: "dephasing".into(),
            q: Some(q),
            p: None,
        }
    }

    pub fn identity(label: &str) -> Self {
        Self {
            label: Some(label.to_string()),
            kind: "identity".into(),
            q: None,
            p: None,
        }
    }

    pub fn to_kind(&self) -> Result<ChannelKind> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| QssError::ParamOutOfRange(format!("{} needs parameter {name}", self.kind)))
        };
        match self.kind.as_str() {
            "identity" => Ok(ChannelKind::Identity),
            "dephasing" => Ok(ChannelKind::Dephasing { q: need(self.q, "q")? }),
            "depolarizing" => Ok(ChannelKind::Depolarizing { p: need(self.p, "p")? }),
            other => Err(QssError::UnknownKind(other.to_string())),
        }
    }
}

/// Family given member by member on a common input dimension `d`.
pub fn direct_family(d: usize, specs: &[ChannelSpec]) -> Result<CompoundFamily> {
    if specs.is_empty() {
        return Err(QssError::InvalidFamily("family has no members".into()));
    }
    let members = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let kind = spec.to_kind()?;
            Ok(FamilyMember {
                label: spec.label.clone().unwrap_or_else(|| format!("m{i}")),
                channel: kind.build(d)?,
                kind: Some(kind),
            })
        })
        .collect::<Result<_>>()?;
    CompoundFamily::new(members)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BroadcastSpec {
    pub per_share: Vec<ChannelSpec>,
}

/// Access part of a family descriptor: `{"threshold": [t, K]}` or an
/// [`AccessDescriptor`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AccessSpec {
    ThresholdPair { threshold: [usize; 2] },
    Full(AccessDescriptor),
}

impl AccessSpec {
    pub fn build(&self) -> Result<AccessStructure> {
        match self {
            Self::ThresholdPair { threshold: [t, k] } => AccessStructure::from_threshold(*t, *k),
            Self::Full(d) => d.build(),
        }
    }
}

/// JSON family descriptor, either
/// `{"d": 3, "members": [...]}` or
/// `{"d": 2, "broadcast": {"per_share": [...]}, "access": {"threshold": [2, 3]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<ChannelSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub broadcast: Option<BroadcastSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub access: Option<AccessSpec>,
    #[serde(default)]
    pub all_qualified: bool,
}

impl FamilyDescriptor {
    pub fn build(&self) -> Result<CompoundFamily> {
        match (&self.members, &self.broadcast, &self.access) {
            (Some(members), None, None) => {
                let d = self
                    .d
                    .ok_or_else(|| QssError::InvalidFamily("\"d\" is required".into()))?;
                direct_family(d, members)
            }
            (None, Some(broadcast), Some(access)) => {
                let d = self.d.unwrap_or(2);
                let channels = broadcast
                    .per_share
                    .iter()
                    .map(|s| s.to_kind()?.build(d))
                    .collect::<Result<Vec<_>>>()?;
                let broadcast = broadcast_product(&channels)?;
                compound_from_access(&broadcast, &access.build()?, self.all_qualified)
            }
            _ => Err(QssError::InvalidFamily(
                "descriptor needs \"members\", or \"broadcast\" together with \"access\"".into(),
            )),
        }
    }
}

impl std::str::FromStr for CompoundFamily {
    type Err = QssError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_str::<FamilyDescriptor>(s)?.build()
    }
}

/// Diagonal unitary with the given phases, used by commutation checks.
pub fn diagonal_unitary(phases: &[f64]) -> CMatrix {
    let diag = DVector::from_iterator(phases.len(), phases.iter().map(|&t| C64::from_polar(1.0, t)));
    CMatrix::from_diagonal(&diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::{maximally_entangled, von_neumann_entropy};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shape(dims: &[usize]) -> RegisterShape {
        let labels: Vec<String> = (0..dims.len()).map(|i| format!("r{i}")).collect();
        RegisterShape::new(dims.to_vec(), labels).unwrap()
    }

    fn h2(q: f64) -> f64 {
        if q <= 0.0 || q >= 1.0 {
            0.0
        } else {
            -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
        }
    }

    #[test]
    fn dephasing_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = DensityMatrix::random(shape(&[3]), &mut rng);
        let id = KrausChannel::dephasing(3, 0.0).unwrap().apply_all(&rho).unwrap();
        assert!((id.matrix() - rho.matrix()).norm() < 1e-14);

        let z = qudit::weyl_z(3);
        let full = KrausChannel::dephasing(3, 1.0).unwrap().apply_all(&rho).unwrap();
        assert!((full.matrix() - &z * rho.matrix() * z.adjoint()).norm() < 1e-14);

        let diag = DensityMatrix::new(
            shape(&[3]),
            CMatrix::from_diagonal(&DVector::from_vec(vec![
                C64::new(0.5, 0.0),
                C64::new(0.3, 0.0),
                C64::new(0.2, 0.0),
            ])),
        )
        .unwrap();
        let out = KrausChannel::dephasing(3, 1.0).unwrap().apply_all(&diag).unwrap();
        assert!((out.matrix() - diag.matrix()).norm() < 1e-14);

        assert!(KrausChannel::dephasing(3, 1.2).is_err());
        assert!(KrausChannel::dephasing(1, 0.2).is_err());
    }

    #[test]
    fn dephased_half_of_maximally_entangled_qutrits() {
        let phi = maximally_entangled(3).unwrap().to_density();
        let out = KrausChannel::dephasing(3, 0.2).unwrap().apply(&phi, &[1]).unwrap();
        let ev = out.eigenvalues();
        let nonzero: Vec<f64> = ev.iter().copied().filter(|v| v.abs() > 1e-12).collect();
        assert_eq!(nonzero.len(), 2);
        assert!((nonzero[0] - 0.2).abs() < 1e-12 && (nonzero[1] - 0.8).abs() < 1e-12);
        assert!((von_neumann_entropy(&out) - h2(0.2)).abs() < 1e-12);
    }

    #[test]
    fn kraus_validation() {
        let half = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        assert!(matches!(
            KrausChannel::new(vec![half], 2, shape(&[2])),
            Err(QssError::NotTracePreserving(_))
        ));
        assert!(KrausChannel::new(vec![CMatrix::identity(3, 3)], 2, shape(&[2])).is_err());
    }

    #[test]
    fn depolarizing_matches_its_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [2, 3] {
            let rho = DensityMatrix::random(shape(&[d]), &mut rng);
            let p = 0.37;
            let out = KrausChannel::depolarizing(d, p).unwrap().apply_all(&rho).unwrap();
            let want = rho.matrix() * C64::new(1.0 - p, 0.0)
                + CMatrix::identity(d, d) * C64::new(p / d as f64, 0.0);
            assert!((out.matrix() - want).norm() < 1e-13);
        }
    }

    #[test]
    fn tensor_power_of_identity_is_identity() {
        let ch = KrausChannel::identity(3).unwrap().tensor_power(2).unwrap();
        assert_eq!(ch.in_dim(), 9);
        assert_eq!(ch.ops().len(), 1);
        assert!((&ch.ops()[0] - CMatrix::identity(9, 9)).norm() < 1e-15);
        assert!(KrausChannel::identity(3).unwrap().tensor_power(0).is_err());
    }

    #[test]
    fn tensor_power_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = KrausChannel::dephasing(3, 0.2).unwrap().tensor_power(2).unwrap();
        assert!(ch.completeness_defect() < 1e-12);
        for _ in 0..5 {
            let rho = DensityMatrix::random(shape(&[9]), &mut rng);
            let out = ch.apply_all(&rho).unwrap();
            assert!((out.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_of_product_is_the_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = KrausChannel::dephasing(2, 0.3).unwrap();
        let b = KrausChannel::depolarizing(3, 0.4).unwrap();
        let ab = broadcast_product(&[a.clone(), b.clone()]).unwrap();
        let only_a = ab.marginal(&[0]).unwrap();
        assert!(only_a.completeness_defect() < 1e-12);

        let rho = DensityMatrix::random(shape(&[2, 3]), &mut rng);
        let via_marginal = only_a.apply(&rho, &[0, 1]).unwrap();
        let direct = a.apply(&rho.partial_trace(&[0]).unwrap(), &[0]).unwrap();
        assert!((via_marginal.matrix() - direct.matrix()).norm() < 1e-12);

        let operational = apply_then_trace(&ab, &rho, &[0, 1], &[0]).unwrap();
        assert!((operational.matrix() - direct.matrix()).norm() < 1e-12);

        // keep order is honored
        let swapped = ab.marginal(&[1, 0]).unwrap();
        assert_eq!(swapped.out_shape().dims(), &[3, 2]);
        let ba = b.tensor(&a).unwrap();
        let psi = DensityMatrix::random(shape(&[2, 3]), &mut rng);
        let x = swapped.apply_all(&psi).unwrap();
        let y = apply_then_trace(&ab, &psi, &[0, 1], &[1, 0]).unwrap();
        assert!((x.matrix() - y.matrix()).norm() < 1e-12);
        assert_eq!(ba.out_dim(), 6);
    }

    #[test]
    fn apply_places_outputs_where_the_target_was() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // 2 -> 2x2 isometry channel applied to the middle register
        let mut v = CMatrix::zeros(4, 2);
        v[(0, 0)] = C64::new(1.0, 0.0);
        v[(3, 1)] = C64::new(1.0, 0.0);
        let copy = KrausChannel::new(vec![v], 2, shape(&[2, 2])).unwrap();
        let rho = DensityMatrix::random(shape(&[3, 2, 2]), &mut rng);
        let out = copy.apply(&rho, &[1]).unwrap();
        assert_eq!(out.shape().dims(), &[3, 2, 2, 2]);
        let back = out.partial_trace(&[0, 3]).unwrap();
        let want = rho.partial_trace(&[0, 2]).unwrap();
        assert!((back.matrix() - want.matrix()).norm() < 1e-12);
    }

    #[test]
    fn dephasing_commutes_with_diagonal_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ch = KrausChannel::dephasing(3, 0.35).unwrap();
        for _ in 0..10 {
            let phases: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 6.3).collect();
            let u = diagonal_unitary(&phases);
            let rho = DensityMatrix::random(shape(&[3]), &mut rng);
            let a = ch.apply_all(&rho.apply_unitary(&u, &[0]).unwrap()).unwrap();
            let b = ch.apply_all(&rho).unwrap().apply_unitary(&u, &[0]).unwrap();
            assert!((a.matrix() - b.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn compound_families_from_access_structures() {
        let id = KrausChannel::identity(2).unwrap();
        let broadcast = broadcast_product(&[id.clone(), id.clone(), id.clone(), id.clone()]).unwrap();
        let access = AccessStructure::from_threshold(3, 4).unwrap();
        let fam = compound_from_access(&broadcast, &access, false).unwrap();
        assert_eq!(fam.labels(), vec!["abc", "abd", "acd", "bcd", "abcd"]);
        assert_eq!(fam.input_dim(), 16);

        let three = broadcast_product(&[id.clone(), id.clone(), id.clone()]).unwrap();
        let access = AccessStructure::from_threshold(2, 3).unwrap();
        let fam = compound_from_access(&three, &access, true).unwrap();
        assert_eq!(fam.len(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = DensityMatrix::random(shape(&[2, 2, 2]), &mut rng);
        let ac = &fam.members()[fam.labels().iter().position(|&l| l == "ac").unwrap()];
        let out = ac.channel.apply_all(&rho).unwrap();
        let want = rho.partial_trace(&[0, 2]).unwrap();
        assert!((out.matrix() - want.matrix()).norm() < 1e-12);

        let mismatch = compound_from_access(&broadcast, &access, false);
        assert!(matches!(mismatch, Err(QssError::StructureMismatch(_))));
    }

    #[test]
    fn direct_families() {
        let specs = vec![
            ChannelSpec::dephasing("ab", 0.1),
            ChannelSpec::dephasing("ac", 0.05),
            ChannelSpec::dephasing("bc", 0.2),
            ChannelSpec::dephasing("abc", 0.0),
        ];
        let fam = direct_family(3, &specs).unwrap();
        assert_eq!(fam.len(), 4);
        assert_eq!(fam.dephasing_parameters(), Some(vec![0.1, 0.05, 0.2, 0.0]));
        assert!(direct_family(3, &[]).is_err());
        let bad = ChannelSpec {
            label: None,
            kind: "amplitude_damping".into(),
            q: None,
            p: None,
        };
        assert!(matches!(direct_family(3, &[bad]), Err(QssError::UnknownKind(_))));
        let dup = vec![ChannelSpec::identity("x"), ChannelSpec::identity("x")];
        assert!(direct_family(3, &dup).is_err());
    }

    #[test]
    fn family_descriptors() {
        let fam: CompoundFamily = r#"{"d": 3, "members": [
            {"label": "ab", "kind": "dephasing", "q": 0.1},
            {"label": "abc", "kind": "identity"}]}"#
            .parse()
            .unwrap();
        assert_eq!(fam.len(), 2);

        let fam: CompoundFamily = r#"{"d": 2,
            "broadcast": {"per_share": [{"kind": "identity"}, {"kind": "dephasing", "q": 0.1}, {"kind": "identity"}]},
            "access": {"threshold": [2, 3]}}"#
            .parse()
            .unwrap();
        assert_eq!(fam.labels(), vec!["ab", "ac", "bc", "abc"]);
        assert_eq!(fam.dephasing_parameters(), None);

        let fam: CompoundFamily = r#"{"d": 2,
            "broadcast": {"per_share": [{"kind": "identity"}, {"kind": "identity"}, {"kind": "identity"}]},
            "access": {"K": 3, "threshold": 2}}"#
            .parse()
            .unwrap();
        assert_eq!(fam.len(), 4);

        assert!(r#"{"members": []}"#.parse::<CompoundFamily>().is_err());
        assert!(r#"{"d": 3}"#.parse::<CompoundFamily>().is_err());
        assert!(r#"{"d": 3, "members": [{"kind": "dephasing"}]}"#.parse::<CompoundFamily>().is_err());
    }
}
