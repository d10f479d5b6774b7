// Copyright 2026 The qss Authors
// SPDX-License-Identifier: Apache-2.0

//! Subcommand bodies. Each returns the rendered report and whether every
//! check met its tolerance; any `Err` is an input error.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use qss_core::access::{self, Subset};
use qss_core::capacity::{self, CapacityReport, OptimizerOptions};
use qss_core::channels::{self, ChannelSpec, FamilyDescriptor};
use qss_core::qudit::{self, DensityMatrix, PureState, RegisterShape, CVector, C64};
use qss_core::schemes::{self, SchemeDescriptor};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Format, RunConfig};

pub const SCHEMA_VERSION: &str = "qss-report/v1";

pub type CmdResult = Result<Outcome, String>;

pub struct Outcome {
    pub body: String,
    pub pass: bool,
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn tolerance(cfg: &RunConfig, default: f64) -> Result<f64, String> {
    let tol = cfg.tolerance.unwrap_or(default);
    if !tol.is_finite() || tol <= 0.0 {
        return Err(format!("tolerance must be positive, got {tol}"));
    }
    Ok(tol)
}

fn json_only(cfg: &RunConfig, command: &str) -> Result<(), String> {
    match cfg.format {
        Some(Format::Csv) => Err(format!("{command} only writes json")),
        _ => Ok(()),
    }
}

fn render<T: Serialize>(report: &T, pass: bool) -> CmdResult {
    let mut body = serde_json::to_string_pretty(report).map_err(err)?;
    body.push('\n');
    Ok(Outcome { body, pass })
}

#[derive(Serialize)]
struct QualifiedResult {
    set: String,
    participants: Vec<usize>,
    min_fidelity: f64,
    haar_min_fidelity: f64,
    entanglement_fidelity: f64,
    pass: bool,
}

#[derive(Serialize)]
struct UnqualifiedResult {
    set: String,
    participants: Vec<usize>,
    decoupling_defect: f64,
    basis_distinguishability: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    schema: &'static str,
    command: &'static str,
    seed: u64,
    tolerance: f64,
    trials: usize,
    scheme: SchemeDescriptor,
    virtual_shares: usize,
    qualified: Vec<QualifiedResult>,
    non_qualified: Vec<UnqualifiedResult>,
    min_fidelity: f64,
    max_decoupling_defect: f64,
    pass: bool,
}

fn by_size(mut sets: Vec<Subset>) -> Vec<Subset> {
    sets.sort_by_key(|s| (s.count_ones(), *s));
    sets
}

pub fn verify_scheme(cfg: &RunConfig) -> CmdResult {
    json_only(cfg, "verify-scheme")?;
    let tol = tolerance(cfg, 1e-9)?;
    if cfg.trials == 0 {
        return Err("--trials must be at least 1".into());
    }
    let desc: SchemeDescriptor = serde_json::from_str(&cfg.input).map_err(err)?;
    let scheme = desc.build().map_err(err)?;
    let structure = scheme.access_structure().map_err(err)?;
    let k = scheme.participants();

    let qualified = by_size(structure.qualified().collect());
    let qualified: Vec<QualifiedResult> = qualified
        .par_iter()
        .map(|&set| {
            let r = schemes::verify_recovery(&scheme, set, cfg.trials, cfg.seed)?;
            Ok(QualifiedResult {
                set: channels::set_label(k, set),
                participants: access::participants(set),
                min_fidelity: r.min_fidelity,
                haar_min_fidelity: r.haar_min_fidelity,
                entanglement_fidelity: r.entanglement_fidelity,
                pass: 1.0 - r.min_fidelity <= tol,
            })
        })
        .collect::<qss_core::Result<_>>()
        .map_err(err)?;

    let unqualified = by_size(structure.maximal_non_qualified());
    let non_qualified: Vec<UnqualifiedResult> = unqualified
        .par_iter()
        .map(|&set| {
            let r = schemes::verify_secrecy(&scheme, set)?;
            Ok(UnqualifiedResult {
                set: channels::set_label(k, set),
                participants: access::participants(set),
                decoupling_defect: r.decoupling_defect,
                basis_distinguishability: r.basis_distinguishability,
                pass: r.defect <= tol,
            })
        })
        .collect::<qss_core::Result<_>>()
        .map_err(err)?;

    let min_fidelity = qualified.iter().map(|r| r.min_fidelity).fold(1.0, f64::min);
    let max_decoupling_defect = non_qualified
        .iter()
        .map(|r| r.decoupling_defect.max(r.basis_distinguishability))
        .fold(0.0, f64::max);
    let pass = qualified.iter().all(|r| r.pass) && non_qualified.iter().all(|r| r.pass);
    let report = VerifyReport {
        schema: SCHEMA_VERSION,
        command: "verify-scheme",
        seed: cfg.seed,
        tolerance: tol,
        trials: cfg.trials,
        scheme: SchemeDescriptor::from(&scheme),
        virtual_shares: scheme.virtual_shares(),
        qualified,
        non_qualified,
        min_fidelity,
        max_decoupling_defect,
        pass,
    };
    render(&report, pass)
}

#[derive(Serialize)]
struct ClosedFormJson {
    value_bits: f64,
    /// "capacity" or "lower_bound_only".
    regime: &'static str,
}

#[derive(Serialize)]
struct ProductRateJson {
    n: usize,
    bits: f64,
}

#[derive(Serialize)]
struct CapacityCliReport {
    schema: &'static str,
    command: &'static str,
    seed: u64,
    tolerance: f64,
    input_dim: usize,
    members: Vec<String>,
    closed_form: Option<ClosedFormJson>,
    optimizer: CapacityReport,
    gap: Option<f64>,
    product_input_rate: ProductRateJson,
    pass: bool,
}

fn closed_form_json(family: &channels::CompoundFamily) -> Result<Option<ClosedFormJson>, String> {
    Ok(capacity::dephasing_closed_form_report(family)
        .map_err(err)?
        .map(|(_, closed)| ClosedFormJson {
            value_bits: closed.value_bits,
            regime: if closed.capacity { "capacity" } else { "lower_bound_only" },
        }))
}

fn optimizer_options(cfg: &RunConfig) -> OptimizerOptions {
    let default = OptimizerOptions::default();
    OptimizerOptions {
        seed: cfg.seed,
        max_evals: cfg.max_evals.unwrap_or(default.max_evals),
        restarts: cfg.restarts.unwrap_or(default.restarts),
        ..default
    }
}

fn within_bounds(report: &CapacityReport, d: usize) -> bool {
    report.value_bits <= (d as f64).log2() + 1e-9
}

pub fn capacity(cfg: &RunConfig) -> CmdResult {
    json_only(cfg, "capacity")?;
    let tol = tolerance(cfg, 1e-3)?;
    if !(1..=2).contains(&cfg.n) {
        return Err(format!("--n must be 1 or 2, got {}", cfg.n));
    }
    let desc: FamilyDescriptor = serde_json::from_str(&cfg.input).map_err(err)?;
    let family = desc.build().map_err(err)?;

    let closed_form = closed_form_json(&family)?;
    let opts = optimizer_options(cfg);
    let optimizer = capacity::maximize_min_coherent_info(&family, &opts).map_err(err)?;
    let rate = capacity::product_input_rate(&family, &optimizer.argmax_input, cfg.n).map_err(err)?;
    let gap = closed_form.as_ref().map(|c| c.value_bits - optimizer.value_bits);
    let pass = gap.is_none_or(|g| g.abs() <= tol) && within_bounds(&optimizer, family.input_dim());

    let report = CapacityCliReport {
        schema: SCHEMA_VERSION,
        command: "capacity",
        seed: cfg.seed,
        tolerance: tol,
        input_dim: family.input_dim(),
        members: family.labels().into_iter().map(String::from).collect(),
        closed_form,
        optimizer,
        gap,
        product_input_rate: ProductRateJson { n: cfg.n, bits: rate },
        pass,
    };
    render(&report, pass)
}

/// `{"d": 3, "kind": "dephasing", "values": [0.0, 0.1], "label": "x", "fixed": [...]}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDescriptor {
    d: usize,
    kind: String,
    values: Vec<f64>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    fixed: Vec<ChannelSpec>,
}

impl SweepDescriptor {
    fn family_at(&self, value: f64) -> qss_core::Result<channels::CompoundFamily> {
        let label = self.label.clone().unwrap_or_else(|| "x".into());
        let mut swept = ChannelSpec {
            label: Some(label),
            kind: self.kind.clone(),
            q: None,
            p: None,
        };
        match self.kind.as_str() {
            "dephasing" => swept.q = Some(value),
            "depolarizing" => swept.p = Some(value),
            other => {
                return Err(qss_core::QssError::InvalidFamily(format!(
                    "cannot sweep channel kind {other}"
                )))
            }
        }
        let mut specs = vec![swept];
        specs.extend(self.fixed.iter().cloned());
        channels::direct_family(self.d, &specs)
    }
}

#[derive(Serialize)]
struct SweepRow {
    param: f64,
    per_member_bits: BTreeMap<String, f64>,
    min_bits: f64,
    closed_form: Option<f64>,
    gap: Option<f64>,
    converged: bool,
}

#[derive(Serialize)]
struct SweepReport {
    schema: &'static str,
    command: &'static str,
    seed: u64,
    tolerance: f64,
    d: usize,
    kind: String,
    columns: Vec<String>,
    rows: Vec<SweepRow>,
    pass: bool,
}

/// Same shortest round-trip form as the JSON reports.
fn csv_number(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| "NaN".into())
}

fn csv_cell(v: Option<f64>) -> String {
    v.map(csv_number).unwrap_or_default()
}

pub fn sweep(cfg: &RunConfig) -> CmdResult {
    let tol = tolerance(cfg, 1e-3)?;
    let desc: SweepDescriptor = serde_json::from_str(&cfg.input).map_err(err)?;
    if desc.values.is_empty() {
        return Err("sweep needs at least one value".into());
    }
    let families = desc
        .values
        .iter()
        .map(|&v| desc.family_at(v))
        .collect::<qss_core::Result<Vec<_>>>()
        .map_err(err)?;
    let labels: Vec<String> = families[0].labels().into_iter().map(String::from).collect();

    let opts = optimizer_options(cfg);
    let rows: Vec<SweepRow> = families
        .par_iter()
        .zip(&desc.values)
        .map(|(family, &param)| {
            let closed = closed_form_json(family)?.map(|c| c.value_bits);
            let r = capacity::maximize_min_coherent_info(family, &opts).map_err(err)?;
            Ok(SweepRow {
                param,
                gap: closed.map(|c| c - r.value_bits),
                closed_form: closed,
                min_bits: r.value_bits,
                converged: r.converged,
                per_member_bits: r.per_member_bits,
            })
        })
        .collect::<Result<_, String>>()?;
    let pass = rows.iter().all(|r| r.gap.is_none_or(|g| g.abs() <= tol));

    let mut columns = vec!["param".to_string()];
    columns.extend(labels.iter().cloned());
    columns.extend(["min_bits", "closed_form", "gap"].map(String::from));

    if cfg.format == Some(Format::Json) {
        let report = SweepReport {
            schema: SCHEMA_VERSION,
            command: "sweep",
            seed: cfg.seed,
            tolerance: tol,
            d: desc.d,
            kind: desc.kind.clone(),
            columns,
            rows,
            pass,
        };
        return render(&report, pass);
    }

    let mut body = columns.join(",");
    body.push('\n');
    for row in &rows {
        let mut cells = vec![csv_number(row.param)];
        cells.extend(labels.iter().map(|l| csv_number(row.per_member_bits[l])));
        cells.push(csv_number(row.min_bits));
        cells.push(csv_cell(row.closed_form));
        cells.push(csv_cell(row.gap));
        let _ = writeln!(body, "{}", cells.join(","));
    }
    Ok(Outcome { body, pass })
}

/// `{"d": 3, "count": 10, "kind": "random" | "plus" | "maximally_mixed"}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TeleportDescriptor {
    d: usize,
    #[serde(default = "default_count")]
    count: usize,
    #[serde(default = "default_kind")]
    kind: String,
}

fn default_count() -> usize {
    10
}

fn default_kind() -> String {
    "random".into()
}

#[derive(Serialize)]
struct TeleportReport {
    schema: &'static str,
    command: &'static str,
    seed: u64,
    tolerance: f64,
    d: usize,
    kind: String,
    count: usize,
    fidelities: Vec<f64>,
    min_fidelity: f64,
    pass: bool,
}

pub fn teleport_demo(cfg: &RunConfig) -> CmdResult {
    json_only(cfg, "teleport-demo")?;
    let tol = tolerance(cfg, 1e-10)?;
    let desc: TeleportDescriptor = serde_json::from_str(&cfg.input).map_err(err)?;
    if ![2, 3, 5].contains(&desc.d) {
        return Err(format!("teleport-demo supports d in {{2, 3, 5}}, got {}", desc.d));
    }
    if desc.count == 0 {
        return Err("count must be at least 1".into());
    }
    let d = desc.d;
    let shape = RegisterShape::single(d, "S").map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let inputs: Vec<DensityMatrix> = (0..desc.count)
        .map(|_| -> Result<DensityMatrix, String> {
            Ok(match desc.kind.as_str() {
                "random" => PureState::random(shape.clone(), &mut rng).to_density(),
                "plus" => {
                    let amps = CVector::from_element(d, C64::new(1.0, 0.0));
                    PureState::normalized(shape.clone(), amps).map_err(err)?.to_density()
                }
                "maximally_mixed" => DensityMatrix::maximally_mixed(shape.clone()),
                other => return Err(format!("unknown teleport input kind {other}")),
            })
        })
        .collect::<Result<_, _>>()?;

    let resource = qudit::maximally_entangled(d).map_err(err)?;
    let fidelities = inputs
        .iter()
        .map(|rho| {
            let out = qudit::teleport(rho, &resource)?;
            qudit::fidelity(rho, &out)
        })
        .collect::<qss_core::Result<Vec<f64>>>()
        .map_err(err)?;
    let min_fidelity = fidelities.iter().copied().fold(1.0, f64::min);
    let pass = 1.0 - min_fidelity <= tol;
    let report = TeleportReport {
        schema: SCHEMA_VERSION,
        command: "teleport-demo",
        seed: cfg.seed,
        tolerance: tol,
        d,
        kind: desc.kind,
        count: desc.count,
        fidelities,
        min_fidelity,
        pass,
    };
    render(&report, pass)
}
