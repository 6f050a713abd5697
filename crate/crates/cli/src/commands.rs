use std::io::Write;

use meanforce::eigenops::spectral_norm;
use meanforce::models::{build, closed_form_state, ModelSpec, Regime};
use meanforce::operator::{fidelity, gibbs_state, pauli, trace_distance, DensityMatrix};
use meanforce::oracle::{
    build_total_hamiltonian, convergence_sweep, default_fock_cutoff, discretize_bath,
    exact_reduced_gibbs,
};
use meanforce::spectral::SpectralDensityConfig;
use meanforce::system::SystemModel;
use meanforce::ultrastrong::{
    conjecture_state, conjecture_state_two_bath, projector_set, ultrastrong_mfg_state,
    ultrastrong_two_bath,
};
use meanforce::weak::{weak_mfg_state, WeakCorrection, WeakOptions};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{num, Resolved, Spacing, TemperatureGrid};
use crate::output::{emit, metadata_json, pretty, to_json, Cell, Table};
use crate::CliError;

/// Whether any validity margin reached the invalid threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub invalid_margin: bool,
}

/// Threshold on `beta ||H_S||` below which the ultrastrong caveat is printed.
pub const ORDER_OF_LIMITS_THRESHOLD: f64 = 1e-3;

pub const ORDER_OF_LIMITS_NOTE: &str =
    "ultrastrong states take lambda -> infinity before T -> infinity; \
they do not return to the bare Gibbs state at high temperature";

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::UltrastrongDerived => "ultrastrong_derived",
        Regime::UltrastrongConjectured => "ultrastrong_conjectured",
    }
}

fn single_bath(spec: &ModelSpec, model: &SystemModel, what: &str) -> Result<(), CliError> {
    if !model.is_single_bath() {
        return Err(CliError::Compute(meanforce::Error::UnsupportedCombination(
            format!("{what} needs a single bath; {} has two", spec.name()),
        )));
    }
    Ok(())
}

fn order_of_limits(
    model: &SystemModel,
    beta: f64,
    err: &mut dyn Write,
) -> Result<Option<String>, CliError> {
    let h = spectral_norm(model.h_s())?;
    if beta * h < ORDER_OF_LIMITS_THRESHOLD {
        let _ = writeln!(
            err,
            "warning: beta ||H_S|| = {:e}: {ORDER_OF_LIMITS_NOTE}",
            beta * h
        );
        return Ok(Some(ORDER_OF_LIMITS_NOTE.to_string()));
    }
    Ok(None)
}

fn note_regime(spec: &ModelSpec, err: &mut dyn Write) {
    if let Some(n) = spec.regime_note() {
        let _ = writeln!(err, "note: {n}");
    }
}

pub fn weak(r: &Resolved, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let spec = r.require_model()?;
    let beta = r.require_beta()?;
    let lambda = r.require_lambda()?;
    let model = build(&spec)?;
    single_bath(&spec, &model, "the weak-coupling state")?;
    note_regime(&spec, err);
    let res = weak_mfg_state(&model, &r.bath, beta, lambda, &r.weak)?;
    for w in &res.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let doc = json!({ "metadata": metadata_json(&r.metadata()), "result": to_json(&res)? });
    emit(r.output.as_deref(), &pretty(&doc), out)?;
    Ok(Outcome {
        invalid_margin: !(res.validity_margin < r.weak.thresholds.invalid),
    })
}

pub fn ultrastrong(
    r: &Resolved,
    two_bath: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let spec = r.require_model()?;
    let beta = r.require_beta()?;
    let model = build(&spec)?;
    note_regime(&spec, err);
    let (rho, spectra) = if two_bath {
        if model.is_single_bath() {
            return Err(CliError::Compute(meanforce::Error::UnsupportedCombination(
                format!(
                    "ultrastrong2 needs two baths; {} has one (use ultrastrong)",
                    spec.name()
                ),
            )));
        }
        let rho = match r.regime {
            Regime::UltrastrongDerived => ultrastrong_two_bath(&model, beta, None)?,
            Regime::UltrastrongConjectured => conjecture_state_two_bath(&model, beta, None)?,
        };
        (rho, Value::Null)
    } else {
        if !model.is_single_bath() {
            return Err(CliError::Compute(meanforce::Error::UnsupportedCombination(
                format!("{} has two baths (use ultrastrong2)", spec.name()),
            )));
        }
        let x = model.coupling()?;
        let rho = match r.regime {
            Regime::UltrastrongDerived => ultrastrong_mfg_state(model.h_s(), x, beta, None)?,
            Regime::UltrastrongConjectured => conjecture_state(model.h_s(), x, beta, None)?,
        };
        (rho, to_json(&projector_set(x, None)?)?)
    };
    let caveat = order_of_limits(&model, beta, err)?;
    let doc = json!({
        "metadata": metadata_json(&r.metadata()),
        "regime": regime_name(r.regime),
        "state": to_json(&rho)?,
        "coupling_spectrum": spectra,
        "caveat": caveat,
    });
    emit(r.output.as_deref(), &pretty(&doc), out)?;
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct ModelInfo {
    kind: &'static str,
    parameters: &'static [&'static str],
    baths: usize,
    regimes: &'static [&'static str],
    description: &'static str,
}

const MODELS: &[ModelInfo] = &[
    ModelInfo {
        kind: "spin_boson",
        parameters: &["omega_q", "theta"],
        baths: 1,
        regimes: &["ultrastrong_derived", "ultrastrong_conjectured"],
        description: "H_S = omega_q sigma_z / 2, X = cos(theta) sigma_z - sin(theta) sigma_x",
    },
    ModelInfo {
        kind: "v_system",
        parameters: &["omega_q", "delta"],
        baths: 1,
        regimes: &["ultrastrong_derived"],
        description: "levels 0, omega_q -+ delta/2; X couples the ground level to both excited levels",
    },
    ModelInfo {
        kind: "two_qubit",
        parameters: &["omega_q", "lambda_s"],
        baths: 2,
        regimes: &["ultrastrong_derived", "ultrastrong_conjectured"],
        description: "two qubits with flip-flop coupling lambda_s, each coupled to its own bath through sigma_x",
    },
];

pub fn models(r: &Resolved, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let Some(spec) = r.model else {
        let doc = json!({ "models": to_json(&MODELS)? });
        emit(r.output.as_deref(), &pretty(&doc), out)?;
        return Ok(Outcome::default());
    };
    let beta = r.require_beta()?;
    note_regime(&spec, err);
    let rho = closed_form_state(&spec, beta, r.regime)?;
    let doc = json!({
        "metadata": metadata_json(&r.metadata()),
        "regime": regime_name(r.regime),
        "state": to_json(&rho)?,
    });
    emit(r.output.as_deref(), &pretty(&doc), out)?;
    Ok(Outcome::default())
}

pub const ORACLE_COLUMNS: [&str; 7] = [
    "n_modes",
    "cutoff",
    "lambda",
    "beta",
    "trace_distance_to_weak",
    "trace_distance_to_ultrastrong",
    "truncation_diagnostic",
];

const ORACLE_NOTE: &str =
    "the bath is replaced by Gauss-Legendre modes with a truncated Fock space; \
mode count and cutoff are numerical choices, not physical parameters";

pub fn oracle(r: &Resolved, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let spec = r.require_model()?;
    let beta = r.require_beta()?;
    let lambda = r.require_lambda()?;
    let model = build(&spec)?;
    single_bath(&spec, &model, "the oracle")?;
    let mut meta = r.metadata();
    meta.push(("dimension_cap".into(), r.oracle.dimension_cap.to_string()));

    if let Some(grid) = &r.oracle.grid {
        let rows = convergence_sweep(&model, &r.bath, beta, lambda, grid, r.oracle.dimension_cap)?;
        let mut t = Table::new(meta, &ORACLE_COLUMNS);
        t.notes.push(ORACLE_NOTE.into());
        let mut unconverged = 0;
        for row in &rows {
            if !(row.truncation_diagnostic < meanforce::oracle::TRUNCATION_THRESHOLD) {
                unconverged += 1;
            }
            t.rows.push(vec![
                Cell::Int(row.n_modes),
                Cell::Int(row.cutoff),
                Cell::Real(row.lambda),
                Cell::Real(row.beta),
                Cell::Real(row.trace_distance_to_weak),
                Cell::Real(row.trace_distance_to_ultrastrong),
                Cell::Real(row.truncation_diagnostic),
            ]);
        }
        if unconverged > 0 {
            let _ = writeln!(
                err,
                "warning: {unconverged} grid point(s) have truncation_diagnostic >= 1e-4"
            );
        }
        emit(r.output.as_deref(), &t.render(), out)?;
        return Ok(Outcome::default());
    }

    let x = model.coupling()?;
    let probe = discretize_bath(&r.bath, r.oracle.n_modes, None, 2)?;
    let cutoff = r.oracle.cutoff.unwrap_or_else(|| {
        default_fock_cutoff(&probe, beta, lambda, spectral_norm(x).unwrap_or(1.0))
    });
    let bath = probe.with_cutoff(cutoff)?;
    let h = build_total_hamiltonian(&model, &bath, lambda, r.oracle.dimension_cap)?;
    let res = exact_reduced_gibbs(&h, beta)?;
    if !res.converged {
        let _ = writeln!(
            err,
            "warning: truncation_diagnostic = {:e}; raise the cutoff",
            res.truncation_diagnostic
        );
    }
    let surrogate = bath.as_spectral_density()?;
    let weak_disc = weak_mfg_state(&model, &surrogate, beta, lambda, &r.weak)?.rho;
    let weak_cont = weak_mfg_state(&model, &r.bath, beta, lambda, &r.weak)?.rho;
    let strong = ultrastrong_mfg_state(model.h_s(), x, beta, None)?;
    let doc = json!({
        "metadata": metadata_json(&meta),
        "note": ORACLE_NOTE,
        "n_modes": bath.n_modes(),
        "cutoff": cutoff,
        "mode_frequencies": bath.omegas,
        "mode_couplings": bath.couplings,
        "q_disc": bath.q_disc,
        "dimension": h.dim(),
        "memory_estimate_bytes": h.memory_estimate_bytes(),
        "result": to_json(&res)?,
        "trace_distance_to_weak_discrete": trace_distance(&res.rho, &weak_disc)?,
        "trace_distance_to_weak_continuum": trace_distance(&res.rho, &weak_cont)?,
        "trace_distance_to_ultrastrong": trace_distance(&res.rho, &strong)?,
    });
    emit(r.output.as_deref(), &pretty(&doc), out)?;
    Ok(Outcome::default())
}

pub const V_SYSTEM_COLUMNS: [&str; 10] = [
    "T",
    "lambda2_g",
    "lambda2_f0",
    "lambda2_f1",
    "lambda2_f2",
    "G",
    "F0",
    "F1",
    "F2",
    "validity_margin",
];

pub const SPIN_BOSON_COLUMNS: [&str; 9] = [
    "T",
    "sx_gibbs",
    "sz_gibbs",
    "sx_weak",
    "sz_weak",
    "sx_ultrastrong",
    "sz_ultrastrong",
    "coherence_norm",
    "validity_margin",
];

pub const TWO_QUBIT_COLUMNS: [&str; 5] = [
    "T",
    "trace_distance_derived_conjectured",
    "fidelity_derived_conjectured",
    "trace_distance_derived_gibbs",
    "trace_distance_conjectured_gibbs",
];

/// One V-system row: weak quantities from the generic second-order state,
/// ultrastrong ones from the generic partitioned state.
fn v_system_row(
    model: &SystemModel,
    j: &SpectralDensityConfig,
    t: f64,
    lambda: f64,
    opts: &WeakOptions,
) -> meanforce::Result<Vec<f64>> {
    let beta = 1.0 / t;
    let w = WeakCorrection::compute(model, j, beta, opts.gap_tol)?.state(lambda, opts)?;
    let tau = &w.tau_s;
    let s = ultrastrong_mfg_state(model.h_s(), model.coupling()?, beta, None)?;
    let d = |rho: &DensityMatrix, p: usize| rho.entry(p, p).re - tau.entry(p, p).re;
    Ok(vec![
        t,
        w.rho.entry(1, 2).re,
        d(&w.rho, 0),
        d(&w.rho, 1),
        d(&w.rho, 2),
        2.0 * s.entry(1, 2).re,
        d(&s, 0),
        d(&s, 1),
        d(&s, 2),
        w.validity_margin,
    ])
}

fn spin_boson_row(
    model: &SystemModel,
    j: &SpectralDensityConfig,
    t: f64,
    lambda: f64,
    opts: &WeakOptions,
) -> meanforce::Result<Vec<f64>> {
    let beta = 1.0 / t;
    let w = weak_mfg_state(model, j, beta, lambda, opts)?;
    let s = ultrastrong_mfg_state(model.h_s(), model.coupling()?, beta, None)?;
    let (sx, sz) = (pauli::sigma_x(), pauli::sigma_z());
    let b = |rho: &DensityMatrix| (rho.expectation(&sx).re, rho.expectation(&sz).re);
    let (gx, gz) = b(&w.tau_s);
    let (wx, wz) = b(&w.rho);
    let (ux, uz) = b(&s);
    Ok(vec![
        t,
        gx,
        gz,
        wx,
        wz,
        ux,
        uz,
        w.coherence_norm,
        w.validity_margin,
    ])
}

fn two_qubit_row(model: &SystemModel, t: f64) -> meanforce::Result<Vec<f64>> {
    let beta = 1.0 / t;
    let derived = ultrastrong_two_bath(model, beta, None)?;
    let conj = conjecture_state_two_bath(model, beta, None)?;
    let tau = gibbs_state(model.h_s(), beta)?;
    Ok(vec![
        t,
        trace_distance(&derived, &conj)?,
        fidelity(&derived, &conj)?,
        trace_distance(&derived, &tau)?,
        trace_distance(&conj, &tau)?,
    ])
}

/// Temperature sweep table for any of the three models. Rows are computed
/// in parallel and returned in grid order.
pub fn sweep_table(
    spec: &ModelSpec,
    j: &SpectralDensityConfig,
    lambda: f64,
    grid: &TemperatureGrid,
    opts: &WeakOptions,
    metadata: Vec<(String, String)>,
) -> Result<Table, CliError> {
    let model = build(spec)?;
    let temps = grid.temperatures();
    let (columns, rows): (&[&str], Vec<Vec<f64>>) = match spec {
        ModelSpec::VSystem { .. } => (
            &V_SYSTEM_COLUMNS,
            temps
                .par_iter()
                .map(|&t| v_system_row(&model, j, t, lambda, opts))
                .collect::<meanforce::Result<_>>()?,
        ),
        ModelSpec::SpinBoson { .. } => (
            &SPIN_BOSON_COLUMNS,
            temps
                .par_iter()
                .map(|&t| spin_boson_row(&model, j, t, lambda, opts))
                .collect::<meanforce::Result<_>>()?,
        ),
        ModelSpec::TwoQubit { .. } => (
            &TWO_QUBIT_COLUMNS,
            temps
                .par_iter()
                .map(|&t| two_qubit_row(&model, t))
                .collect::<meanforce::Result<_>>()?,
        ),
    };
    let mut meta = metadata;
    meta.push(("t_min".into(), num(grid.t_min)));
    meta.push(("t_max".into(), num(grid.t_max)));
    meta.push(("n_points".into(), grid.n_points.to_string()));
    meta.push((
        "spacing".into(),
        match grid.spacing {
            Spacing::Log => "log",
            Spacing::Linear => "linear",
        }
        .into(),
    ));
    let mut table = Table::new(meta, columns);
    table.notes.push(ORDER_OF_LIMITS_NOTE.into());
    if matches!(spec, ModelSpec::TwoQubit { .. }) {
        table
            .notes
            .push("two-bath model: no weak-coupling columns".into());
    }
    for row in &rows {
        table.push_real(row);
    }
    Ok(table)
}

fn margin_outcome(table: &Table, invalid: f64) -> Outcome {
    let invalid_margin = table
        .column("validity_margin")
        .map(|m| m.iter().any(|v| !(*v < invalid)))
        .unwrap_or(false);
    Outcome { invalid_margin }
}

fn warn_high_temperature(
    spec: &ModelSpec,
    grid: &TemperatureGrid,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let model = build(spec)?;
    order_of_limits(&model, 1.0 / grid.t_max, err)?;
    Ok(())
}

pub fn sweep(r: &Resolved, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let spec = r.require_model()?;
    let grid = r.require_grid()?;
    let lambda = match spec {
        ModelSpec::TwoQubit { .. } => r.lambda.unwrap_or(0.0),
        _ => r.require_lambda()?,
    };
    note_regime(&spec, err);
    warn_high_temperature(&spec, grid, err)?;
    let table = sweep_table(&spec, &r.bath, lambda, grid, &r.weak, r.metadata())?;
    emit(r.output.as_deref(), &table.render(), out)?;
    Ok(margin_outcome(&table, r.weak.thresholds.invalid))
}

/// Inputs of the V-system coherence sweep run by `fig1`.
#[derive(Clone, Debug)]
pub struct Fig1Config {
    pub omega_q: f64,
    pub delta: f64,
    pub lambda: f64,
    pub bath: SpectralDensityConfig,
    pub grid: TemperatureGrid,
    pub weak: WeakOptions,
}

pub const FIG1_OMEGA_Q: f64 = 3.0;
pub const FIG1_DELTA: f64 = 0.1;
pub const FIG1_LAMBDA: f64 = 0.1;

pub fn fig1_default_grid() -> TemperatureGrid {
    TemperatureGrid {
        t_min: 0.05,
        t_max: 20.0,
        n_points: 80,
        spacing: Spacing::Log,
    }
}

impl Default for Fig1Config {
    fn default() -> Self {
        Self {
            omega_q: FIG1_OMEGA_Q,
            delta: FIG1_DELTA,
            lambda: FIG1_LAMBDA,
            bath: SpectralDensityConfig::ohmic_exponential(
                crate::config::DEFAULT_Q,
                crate::config::DEFAULT_TAU_C,
            )
            .expect("default bath is valid"),
            grid: fig1_default_grid(),
            weak: WeakOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig1Summary {
    pub peak_temperature: f64,
    pub peak_lambda2_g: f64,
    /// The maximum of `lambda^2 g` is not at either end of the grid.
    pub peak_is_interior: bool,
    /// `|lambda^2 g|` at the hottest point over its peak value.
    pub high_temperature_ratio: f64,
    /// `|lambda^2 g|` decreases at every step above the peak.
    pub decreasing_above_peak: bool,
    /// Points with margin below the invalid threshold.
    pub valid_points: usize,
    /// `|G| >= |lambda^2 g|` at every valid point.
    pub ultrastrong_dominates: bool,
    /// Temperature where the margin crosses the invalid threshold, by
    /// log-linear interpolation; `None` if it never does.
    pub validity_boundary: Option<f64>,
    pub margin_at_t_min: f64,
    pub margin_at_t_max: f64,
}

#[derive(Clone, Debug)]
pub struct Fig1Output {
    pub table: Table,
    pub summary: Fig1Summary,
}

pub fn fig1_summary(table: &Table, invalid: f64) -> Fig1Summary {
    let t = table.column("T").expect("fig1 table has T");
    let g = table.column("lambda2_g").expect("fig1 table has lambda2_g");
    let big_g = table.column("G").expect("fig1 table has G");
    let m = table
        .column("validity_margin")
        .expect("fig1 table has validity_margin");
    let n = t.len();
    let peak = (0..n).fold(0, |best, i| if g[i] > g[best] { i } else { best });
    let decreasing_above_peak = (peak + 1..n).all(|i| g[i].abs() < g[i - 1].abs());
    let valid: Vec<usize> = (0..n).filter(|&i| m[i] < invalid).collect();
    let ultrastrong_dominates = valid.iter().all(|&i| big_g[i].abs() >= g[i].abs());
    let validity_boundary = (1..n).find_map(|i| {
        let (a, b) = (m[i - 1] - invalid, m[i] - invalid);
        if a.signum() != b.signum() {
            let s = a / (a - b);
            Some((t[i - 1].ln() + s * (t[i] / t[i - 1]).ln()).exp())
        } else {
            None
        }
    });
    Fig1Summary {
        peak_temperature: t[peak],
        peak_lambda2_g: g[peak],
        peak_is_interior: peak > 0 && peak + 1 < n,
        high_temperature_ratio: g[n - 1].abs() / g[peak].abs(),
        decreasing_above_peak,
        valid_points: valid.len(),
        ultrastrong_dominates,
        validity_boundary,
        margin_at_t_min: m[0],
        margin_at_t_max: m[n - 1],
    }
}

/// The V-system temperature sweep run by `fig1`, with a summary of its
/// qualitative features.
pub fn fig1_reproduction(
    config: &Fig1Config,
    metadata: Vec<(String, String)>,
) -> Result<Fig1Output, CliError> {
    let spec = ModelSpec::VSystem {
        omega_q: config.omega_q,
        delta: config.delta,
    };
    config.grid.validate()?;
    let mut table = sweep_table(
        &spec,
        &config.bath,
        config.lambda,
        &config.grid,
        &config.weak,
        metadata,
    )?;
    let summary = fig1_summary(&table, config.weak.thresholds.invalid);
    if let Some(tb) = summary.validity_boundary {
        table.notes.push(format!(
            "validity margin crosses {} at T = {}",
            num(config.weak.thresholds.invalid),
            num(tb)
        ));
    }
    Ok(Fig1Output { table, summary })
}

pub fn fig1(r: &Resolved, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let (omega_q, delta) = match r.require_model()? {
        ModelSpec::VSystem { omega_q, delta } => (omega_q, delta),
        other => {
            return Err(CliError::Config(format!(
                "fig1 is a V-system sweep, got model {}",
                other.name()
            )))
        }
    };
    let config = Fig1Config {
        omega_q,
        delta,
        lambda: r.require_lambda()?,
        bath: r.bath.clone(),
        grid: r.require_grid()?.clone(),
        weak: r.weak,
    };
    let res = fig1_reproduction(&config, r.metadata())?;
    emit(r.output.as_deref(), &res.table.render(), out)?;
    let _ = writeln!(
        err,
        "{}",
        serde_json::to_string(&res.summary).map_err(|e| CliError::Io(e.to_string()))?
    );
    Ok(margin_outcome(&res.table, r.weak.thresholds.invalid))
}
