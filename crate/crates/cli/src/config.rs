//! Run configuration: a TOML file, overridden field by field by flags, and
//! validated in full before anything is computed.

use std::path::{Path, PathBuf};

use meanforce::models::{ModelSpec, Regime};
use meanforce::oracle::DEFAULT_DIMENSION_CAP;
use meanforce::quadrature::Tolerance;
use meanforce::spectral::{SpectralDensityConfig, SpectralForm};
use meanforce::weak::{Normalization, ValidityThresholds, WeakOptions};
use serde::{Deserialize, Serialize};

use crate::args::{
    Common, ModelKind, NormalizationArg, OracleArgs, RegimeArg, SpacingArg, SweepArgs,
};
use crate::CliError;

pub const DEFAULT_Q: f64 = 10.0;
pub const DEFAULT_TAU_C: f64 = 1.0;
pub const DEFAULT_ORACLE_MODES: usize = 4;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub beta: Option<f64>,
    pub temperature: Option<f64>,
    pub lambda: Option<f64>,
    pub regime: Option<Regime>,
    pub model: Option<ModelSpec>,
    pub bath: Option<SpectralForm>,
    pub quadrature: Option<Tolerance>,
    #[serde(default)]
    pub weak: WeakSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakSection {
    pub normalization: Option<Normalization>,
    pub gap_tol: Option<f64>,
    pub marginal: Option<f64>,
    pub invalid: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub n_points: Option<usize>,
    pub spacing: Option<Spacing>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub n_modes: Option<usize>,
    pub cutoff: Option<usize>,
    pub dimension_cap: Option<usize>,
    pub grid: Option<Vec<[usize; 2]>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TemperatureGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    pub spacing: Spacing,
}

impl TemperatureGrid {
    pub fn validate(&self) -> Result<(), CliError> {
        let ok = self.t_min > 0.0
            && self.t_max.is_finite()
            && self.t_min <= self.t_max
            && self.n_points >= 1;
        if !ok {
            return Err(CliError::Config(format!(
                "temperature grid needs 0 < t_min <= t_max and n_points >= 1, got {} .. {} with {} points",
                self.t_min, self.t_max, self.n_points
            )));
        }
        if self.n_points == 1 && self.t_min != self.t_max {
            return Err(CliError::Config(
                "a single-point grid needs t_min == t_max".into(),
            ));
        }
        Ok(())
    }

    pub fn temperatures(&self) -> Vec<f64> {
        let n = self.n_points;
        if n == 1 {
            return vec![self.t_min];
        }
        (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.t_min + s * (self.t_max - self.t_min),
                    Spacing::Log => (self.t_min.ln() + s * (self.t_max / self.t_min).ln()).exp(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct OracleSettings {
    pub n_modes: usize,
    pub cutoff: Option<usize>,
    pub dimension_cap: usize,
    pub grid: Option<Vec<(usize, usize)>>,
}

/// Everything a subcommand may need, after merging and validation.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub model: Option<ModelSpec>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub regime: Regime,
    pub bath: SpectralDensityConfig,
    pub weak: WeakOptions,
    pub grid: Option<TemperatureGrid>,
    pub oracle: OracleSettings,
    pub output: Option<PathBuf>,
}

fn cfg<T>(r: meanforce::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Default)]
struct ModelFields {
    kind: Option<ModelKind>,
    omega_q: Option<f64>,
    theta: Option<f64>,
    delta: Option<f64>,
    lambda_s: Option<f64>,
}

impl ModelFields {
    fn from_spec(spec: &ModelSpec) -> Self {
        match *spec {
            ModelSpec::SpinBoson { omega_q, theta } => Self {
                kind: Some(ModelKind::SpinBoson),
                omega_q: Some(omega_q),
                theta: Some(theta),
                ..Self::default()
            },
            ModelSpec::VSystem { omega_q, delta } => Self {
                kind: Some(ModelKind::VSystem),
                omega_q: Some(omega_q),
                delta: Some(delta),
                ..Self::default()
            },
            ModelSpec::TwoQubit { omega_q, lambda_s } => Self {
                kind: Some(ModelKind::TwoQubit),
                omega_q: Some(omega_q),
                lambda_s: Some(lambda_s),
                ..Self::default()
            },
        }
    }

    fn to_spec(&self) -> Result<Option<ModelSpec>, CliError> {
        let Some(kind) = self.kind else {
            if self.omega_q.is_some()
                || self.theta.is_some()
                || self.delta.is_some()
                || self.lambda_s.is_some()
            {
                return Err(CliError::Config(
                    "model parameters given without a model kind".into(),
                ));
            }
            return Ok(None);
        };
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| CliError::Config(format!("model {} needs {name}", kind_name(kind))))
        };
        let reject = |name: &str, v: Option<f64>| match v {
            Some(_) => Err(CliError::Config(format!(
                "{name} does not apply to model {}",
                kind_name(kind)
            ))),
            None => Ok(()),
        };
        let spec = match kind {
            ModelKind::SpinBoson => {
                reject("delta", self.delta)?;
                reject("lambda_s", self.lambda_s)?;
                ModelSpec::SpinBoson {
                    omega_q: need("omega_q", self.omega_q)?,
                    theta: need("theta", self.theta)?,
                }
            }
            ModelKind::VSystem => {
                reject("theta", self.theta)?;
                reject("lambda_s", self.lambda_s)?;
                ModelSpec::VSystem {
                    omega_q: need("omega_q", self.omega_q)?,
                    delta: need("delta", self.delta)?,
                }
            }
            ModelKind::TwoQubit => {
                reject("theta", self.theta)?;
                reject("delta", self.delta)?;
                ModelSpec::TwoQubit {
                    omega_q: need("omega_q", self.omega_q)?,
                    lambda_s: need("lambda_s", self.lambda_s)?,
                }
            }
        };
        cfg(spec.validate())?;
        Ok(Some(spec))
    }
}

fn kind_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::SpinBoson => "spin_boson",
        ModelKind::VSystem => "v_system",
        ModelKind::TwoQubit => "two_qubit",
    }
}

fn override_with<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

/// Defaults applied when neither the file nor the flags give a value.
#[derive(Clone, Debug, Default)]
pub struct Defaults {
    pub model: Option<ModelSpec>,
    pub lambda: Option<f64>,
    pub grid: Option<TemperatureGrid>,
}

pub fn resolve(
    common: &Common,
    oracle: Option<&OracleArgs>,
    sweep: Option<&SweepArgs>,
    defaults: &Defaults,
) -> Result<Resolved, CliError> {
    let file = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };

    let mut fields = match file.model.as_ref().or(defaults.model.as_ref()) {
        Some(spec) => ModelFields::from_spec(spec),
        None => ModelFields::default(),
    };
    if let Some(kind) = common.model {
        if fields.kind != Some(kind) {
            fields = ModelFields {
                kind: Some(kind),
                ..ModelFields::default()
            };
        }
    }
    override_with(&mut fields.omega_q, common.omega_q);
    override_with(&mut fields.theta, common.theta);
    override_with(&mut fields.delta, common.delta);
    override_with(&mut fields.lambda_s, common.lambda_s);
    let model = fields.to_spec()?;

    if file.beta.is_some() && file.temperature.is_some() {
        return Err(CliError::Config(
            "give either beta or temperature, not both".into(),
        ));
    }
    let beta = match (common.beta, common.temperature) {
        (Some(b), _) => Some(b),
        (None, Some(t)) => Some(1.0 / t),
        (None, None) => file.beta.or(file.temperature.map(|t| 1.0 / t)),
    };
    if let Some(b) = beta {
        if !(b > 0.0) || !b.is_finite() {
            return Err(CliError::Config(format!(
                "beta must be positive and finite, got {b}"
            )));
        }
    }

    let lambda = common.lambda.or(file.lambda).or(defaults.lambda);
    if let Some(l) = lambda {
        if !l.is_finite() {
            return Err(CliError::Config(format!("lambda must be finite, got {l}")));
        }
    }

    let regime = match common.regime {
        Some(RegimeArg::UltrastrongDerived) => Regime::UltrastrongDerived,
        Some(RegimeArg::UltrastrongConjectured) => Regime::UltrastrongConjectured,
        None => file.regime.unwrap_or(Regime::UltrastrongDerived),
    };

    let mut form = file.bath.unwrap_or(SpectralForm::OhmicExponential {
        q: DEFAULT_Q,
        tau_c: DEFAULT_TAU_C,
    });
    if common.q.is_some() || common.tau_c.is_some() {
        match &mut form {
            SpectralForm::OhmicExponential { q, tau_c } => {
                if let Some(v) = common.q {
                    *q = v;
                }
                if let Some(v) = common.tau_c {
                    *tau_c = v;
                }
            }
            _ => {
                return Err(CliError::Config(
                    "--q and --tau-c only apply to the ohmic_exponential bath".into(),
                ))
            }
        }
    }
    let mut bath = cfg(SpectralDensityConfig::new(form))?;
    if let Some(tol) = file.quadrature {
        bath = cfg(bath.with_tolerance(tol))?;
    }

    let mut weak = WeakOptions::default();
    weak.normalization = match common.normalization {
        Some(NormalizationArg::Binomial) => Normalization::Binomial,
        Some(NormalizationArg::Exact) => Normalization::Exact,
        None => file.weak.normalization.unwrap_or_default(),
    };
    weak.gap_tol = common.gap_tol.or(file.weak.gap_tol);
    if let Some(g) = weak.gap_tol {
        if !(g > 0.0) || !g.is_finite() {
            return Err(CliError::Config(format!(
                "gap_tol must be positive, got {g}"
            )));
        }
    }
    let th = ValidityThresholds::default();
    weak.thresholds = ValidityThresholds {
        marginal: file.weak.marginal.unwrap_or(th.marginal),
        invalid: file.weak.invalid.unwrap_or(th.invalid),
    };
    if !(weak.thresholds.marginal > 0.0 && weak.thresholds.marginal <= weak.thresholds.invalid) {
        return Err(CliError::Config(format!(
            "validity thresholds need 0 < marginal <= invalid, got {} and {}",
            weak.thresholds.marginal, weak.thresholds.invalid
        )));
    }

    let grid = {
        let s = &file.sweep;
        let d = defaults.grid.as_ref();
        let (mut t_min, mut t_max, mut n_points, mut spacing) = (
            s.t_min.or(d.map(|g| g.t_min)),
            s.t_max.or(d.map(|g| g.t_max)),
            s.n_points.or(d.map(|g| g.n_points)),
            s.spacing.or(d.map(|g| g.spacing)),
        );
        if let Some(a) = sweep {
            override_with(&mut t_min, a.t_min);
            override_with(&mut t_max, a.t_max);
            override_with(&mut n_points, a.n_points);
            if let Some(sp) = a.spacing {
                spacing = Some(match sp {
                    SpacingArg::Log => Spacing::Log,
                    SpacingArg::Linear => Spacing::Linear,
                });
            }
        }
        match (t_min, t_max, n_points) {
            (Some(t_min), Some(t_max), Some(n_points)) => {
                let g = TemperatureGrid {
                    t_min,
                    t_max,
                    n_points,
                    spacing: spacing.unwrap_or(Spacing::Log),
                };
                g.validate()?;
                Some(g)
            }
            (None, None, None) => None,
            _ => {
                return Err(CliError::Config(
                    "a sweep needs t_min, t_max and n_points".into(),
                ))
            }
        }
    };

    let o = &file.oracle;
    let mut oracle_settings = OracleSettings {
        n_modes: o.n_modes.unwrap_or(DEFAULT_ORACLE_MODES),
        cutoff: o.cutoff,
        dimension_cap: o.dimension_cap.unwrap_or(DEFAULT_DIMENSION_CAP),
        grid: o
            .grid
            .as_ref()
            .map(|g| g.iter().map(|p| (p[0], p[1])).collect()),
    };
    if let Some(a) = oracle {
        override_with(&mut oracle_settings.cutoff, a.cutoff);
        if let Some(n) = a.n_modes {
            oracle_settings.n_modes = n;
        }
        if let Some(c) = a.dimension_cap {
            oracle_settings.dimension_cap = c;
        }
        if let Some(g) = &a.grid {
            oracle_settings.grid = Some(
                g.iter()
                    .map(|s| parse_grid_pair(s))
                    .collect::<Result<_, _>>()?,
            );
        }
    }
    if oracle_settings.n_modes == 0 {
        return Err(CliError::Config("oracle n_modes must be >= 1".into()));
    }
    if matches!(oracle_settings.cutoff, Some(c) if c < 2) {
        return Err(CliError::Config("oracle cutoff must be >= 2".into()));
    }
    if let Some(g) = &oracle_settings.grid {
        if g.is_empty() || g.iter().any(|&(n, c)| n == 0 || c < 2) {
            return Err(CliError::Config(
                "oracle grid needs n_modes >= 1 and cutoff >= 2 in every pair".into(),
            ));
        }
    }

    Ok(Resolved {
        model,
        beta,
        lambda,
        regime,
        bath,
        weak,
        grid,
        oracle: oracle_settings,
        output: common.output.clone().or(file.output.path),
    })
}

fn parse_grid_pair(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("grid entry {s:?} is not of the form MODESxCUTOFF"));
    let (a, b) = s.trim().split_once('x').ok_or_else(bad)?;
    Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
}

impl Resolved {
    pub fn require_model(&self) -> Result<ModelSpec, CliError> {
        self.model.ok_or_else(|| {
            CliError::Config("no model given (use --model or a [model] section)".into())
        })
    }

    pub fn require_beta(&self) -> Result<f64, CliError> {
        self.beta.ok_or_else(|| {
            CliError::Config("no temperature given (use --beta or --temperature)".into())
        })
    }

    pub fn require_lambda(&self) -> Result<f64, CliError> {
        self.lambda
            .ok_or_else(|| CliError::Config("no coupling strength given (use --lambda)".into()))
    }

    pub fn require_grid(&self) -> Result<&TemperatureGrid, CliError> {
        self.grid
            .as_ref()
            .ok_or_else(|| CliError::Config("no temperature grid given".into()))
    }

    /// Key-value pairs describing every input, for output headers.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut m = vec![(
            "meanforce_version".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        )];
        let mut push = |k: &str, v: String| m.push((k.to_string(), v));
        if let Some(spec) = &self.model {
            push("model", spec.name().to_string());
            match *spec {
                ModelSpec::SpinBoson { omega_q, theta } => {
                    push("omega_q", num(omega_q));
                    push("theta", num(theta));
                }
                ModelSpec::VSystem { omega_q, delta } => {
                    push("omega_q", num(omega_q));
                    push("delta", num(delta));
                }
                ModelSpec::TwoQubit { omega_q, lambda_s } => {
                    push("omega_q", num(omega_q));
                    push("lambda_s", num(lambda_s));
                }
            }
        }
        if let Some(b) = self.beta {
            push("beta", num(b));
        }
        if let Some(l) = self.lambda {
            push("lambda", num(l));
        }
        match self.bath.form() {
            SpectralForm::OhmicExponential { q, tau_c } => {
                push("bath", "ohmic_exponential".into());
                push("q", num(*q));
                push("tau_c", num(*tau_c));
            }
            SpectralForm::Tabulated {
                grid,
                low_frequency_exponent,
                ..
            } => {
                push("bath", "tabulated".into());
                push("bath_points", grid.len().to_string());
                push("low_frequency_exponent", num(*low_frequency_exponent));
            }
            SpectralForm::Discrete { omegas, .. } => {
                push("bath", "discrete".into());
                push("bath_modes", omegas.len().to_string());
            }
        }
        let tol = self.bath.tolerance();
        push("quadrature_abs", num(tol.abs));
        push("quadrature_rel", num(tol.rel));
        push("quadrature_max_intervals", tol.max_intervals.to_string());
        push(
            "normalization",
            match self.weak.normalization {
                Normalization::Binomial => "binomial",
                Normalization::Exact => "exact",
            }
            .into(),
        );
        push(
            "gap_tol",
            self.weak
                .gap_tol
                .map(num)
                .unwrap_or_else(|| "default (1e-9 ||H_S||)".into()),
        );
        push("validity_marginal", num(self.weak.thresholds.marginal));
        push("validity_invalid", num(self.weak.thresholds.invalid));
        m
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
