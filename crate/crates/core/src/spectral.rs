//! Spectral densities and the temperature-dependent bath coefficients derived
//! from them: the reorganization energy `Q`, Bose occupations, the
//! principal-value transform `A_beta(nu)` and its derivative, and the
//! imaginary-time correlation function `G(beta, -i beta_1)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, tail_cutoff, Estimate, Tolerance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralForm {
    /// `J(w) = q tau_c w exp(-tau_c w)`, normalized so that `int J/w = q`.
    OhmicExponential { q: f64, tau_c: f64 },
    /// Linear interpolation between grid points, `J ~ w^s` below the first
    /// point and zero beyond the last.
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
        low_frequency_exponent: f64,
    },
    /// A finite set of modes, `J(w) = sum_k g_k^2 delta(w - w_k)`. Every
    /// integral becomes a finite sum.
    Discrete {
        omegas: Vec<f64>,
        couplings: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralDensityConfig {
    #[serde(flatten)]
    form: SpectralForm,
    tolerance: Tolerance,
}

/// `1 / (exp(beta w) - 1)`.
pub fn bose_occupation(beta: f64, omega: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

/// The coefficient entering the second-order state: `A - Q` unless `X^2` is
/// proportional to the identity, in which case the reorganization term is a
/// constant offset and `A` is used as is.
pub fn d_coefficient(a_value: f64, q: f64, x_squared_identity: bool) -> f64 {
    if x_squared_identity {
        a_value
    } else {
        a_value - q
    }
}

/// `w coth(beta w / 2)`, finite at `w = 0`.
fn omega_coth(beta: f64, omega: f64) -> f64 {
    let x = beta * omega;
    if x.abs() < 1e-8 {
        2.0 / beta + beta * omega * omega / 6.0
    } else {
        omega / (0.5 * x).tanh()
    }
}

/// `w / (1 - exp(-beta w))`, finite at `w = 0`.
fn omega_over_one_minus_exp(beta: f64, omega: f64) -> f64 {
    let x = beta * omega;
    if x.abs() < 1e-8 {
        1.0 / beta + 0.5 * omega
    } else {
        -omega / (-x).exp_m1()
    }
}

fn check_positive_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be finite and > 0, got {beta}"
        )));
    }
    Ok(())
}

impl SpectralDensityConfig {
    pub fn new(form: SpectralForm) -> Result<Self> {
        validate_form(&form)?;
        Ok(Self {
            form,
            tolerance: Tolerance::default(),
        })
    }

    pub fn ohmic_exponential(q: f64, tau_c: f64) -> Result<Self> {
        Self::new(SpectralForm::OhmicExponential { q, tau_c })
    }

    pub fn tabulated(
        grid: Vec<f64>,
        values: Vec<f64>,
        low_frequency_exponent: f64,
    ) -> Result<Self> {
        Self::new(SpectralForm::Tabulated {
            grid,
            values,
            low_frequency_exponent,
        })
    }

    pub fn discrete(omegas: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        Self::new(SpectralForm::Discrete { omegas, couplings })
    }

    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Result<Self> {
        tolerance.validate()?;
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn form(&self) -> &SpectralForm {
        &self.form
    }

    pub fn tolerance(&self) -> &Tolerance {
        &self.tolerance
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.form, SpectralForm::Discrete { .. })
    }

    /// `J -> c J` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be > 0, got {c}"
            )));
        }
        let form = match &self.form {
            SpectralForm::OhmicExponential { q, tau_c } => SpectralForm::OhmicExponential {
                q: q * c,
                tau_c: *tau_c,
            },
            SpectralForm::Tabulated {
                grid,
                values,
                low_frequency_exponent,
            } => SpectralForm::Tabulated {
                grid: grid.clone(),
                values: values.iter().map(|v| v * c).collect(),
                low_frequency_exponent: *low_frequency_exponent,
            },
            SpectralForm::Discrete { omegas, couplings } => SpectralForm::Discrete {
                omegas: omegas.clone(),
                couplings: couplings.iter().map(|g| g * c.sqrt()).collect(),
            },
        };
        Ok(Self {
            form,
            tolerance: self.tolerance,
        })
    }

    /// `J(w)` for continuous forms; zero for discrete ones.
    pub fn density(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        match &self.form {
            SpectralForm::Discrete { .. } => 0.0,
            _ => omega * self.density_over_omega(omega),
        }
    }

    /// `J(w) / w`, which stays finite as `w -> 0` for exponents `s >= 1`.
    pub fn density_over_omega(&self, omega: f64) -> f64 {
        if omega < 0.0 {
            return 0.0;
        }
        match &self.form {
            SpectralForm::OhmicExponential { q, tau_c } => q * tau_c * (-tau_c * omega).exp(),
            SpectralForm::Tabulated {
                grid,
                values,
                low_frequency_exponent: s,
            } => {
                let g0 = grid[0];
                if omega < g0 {
                    return values[0] / g0 * (omega / g0).powf(s - 1.0);
                }
                let last = grid.len() - 1;
                if omega > grid[last] {
                    return 0.0;
                }
                let k = grid.partition_point(|&g| g <= omega);
                if k > last {
                    return values[last] / omega;
                }
                // linear in J/w, which keeps a smooth J/w accurate down to w = 0
                let (a, b) = (grid[k - 1], grid[k]);
                let t = (omega - a) / (b - a);
                let (fa, fb) = (values[k - 1] / a, values[k] / b);
                fa + t * (fb - fa)
            }
            SpectralForm::Discrete { .. } => 0.0,
        }
    }

    /// Characteristic start of the cutoff search.
    fn tail_start(&self) -> f64 {
        match &self.form {
            SpectralForm::OhmicExponential { tau_c, .. } => 10.0 / tau_c,
            SpectralForm::Tabulated { grid, .. } => *grid.last().expect("validated non-empty"),
            SpectralForm::Discrete { omegas, .. } => *omegas.last().expect("validated non-empty"),
        }
    }

    fn breakpoints(&self, lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
        let mut pts = vec![lo, hi];
        if let SpectralForm::Tabulated { grid, .. } = &self.form {
            pts.extend(grid.iter().copied().filter(|&g| g > lo && g < hi));
        }
        pts.extend(extra.iter().copied().filter(|&g| g > lo && g < hi));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn tail_target(&self) -> f64 {
        1e-3 * self.tolerance.abs
    }

    /// Upper frequency beyond which `J/w` carries negligible weight: the
    /// doubling search from `10/tau_c` (or the largest grid point).
    pub fn omega_max(&self) -> Result<f64> {
        match &self.form {
            SpectralForm::OhmicExponential { .. } => tail_cutoff(
                |w| self.density_over_omega(w),
                self.tail_start(),
                self.tail_target(),
            ),
            _ => Ok(self.tail_start()),
        }
    }

    /// `Q = int_0^inf J(w)/w dw`.
    pub fn reorganization_energy(&self) -> Result<f64> {
        match &self.form {
            SpectralForm::OhmicExponential { q, .. } => Ok(*q),
            SpectralForm::Tabulated { .. } => {
                let top = self.tail_start();
                let pts = self.breakpoints(0.0, top, &[]);
                Ok(integrate(|w| self.density_over_omega(w), &pts, &self.tolerance)?.value)
            }
            SpectralForm::Discrete { omegas, couplings } => {
                Ok(omegas.iter().zip(couplings).map(|(w, g)| g * g / w).sum())
            }
        }
    }

    /// `A_beta(nu) = PV int_0^inf J(w) (nu coth(beta w/2) + w) / (w^2 - nu^2) dw`
    /// with `A_beta(0) = Q` exactly.
    pub fn lamb_coefficient(&self, beta: f64, nu: f64) -> Result<Estimate> {
        self.lamb_coefficient_with(beta, nu, &self.tolerance)
    }

    /// As [`Self::lamb_coefficient`] with an explicit tolerance.
    pub fn lamb_coefficient_with(&self, beta: f64, nu: f64, tol: &Tolerance) -> Result<Estimate> {
        check_positive_beta(beta)?;
        if !nu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "frequency must be finite, got {nu}"
            )));
        }
        if nu == 0.0 {
            return Ok(Estimate {
                value: self.reorganization_energy()?,
                error: 0.0,
                evaluations: 0,
            });
        }
        if let SpectralForm::Discrete { omegas, couplings } = &self.form {
            let mut acc = 0.0;
            for (&w, &g) in omegas.iter().zip(couplings) {
                let den = w * w - nu * nu;
                if den == 0.0 {
                    return Err(Error::IntegralDiverges(format!(
                        "frequency {nu} coincides with a bath mode"
                    )));
                }
                acc += g * g * (nu * omega_coth(beta, w) / w + w) / den;
            }
            return Ok(Estimate {
                value: acc,
                error: 0.0,
                evaluations: omegas.len(),
            });
        }
        let p = nu.abs();
        // f is smooth; the integrand is f(w) / (w - p).
        let f = |w: f64| self.density_over_omega(w) * (nu * omega_coth(beta, w) + w * w) / (w + p);
        let full = |w: f64| (f(w) / (w - p)).abs();
        let start = self.tail_start().max(4.0 * p);
        let omega_tail = match &self.form {
            SpectralForm::Tabulated { .. } => start,
            _ => tail_cutoff(full, start, 1e-3 * tol.abs)?,
        };
        let upper = omega_tail + 2.0 * p;
        let fp = f(p);
        let pts = self.breakpoints(0.0, upper, &[p]);
        let reg = integrate(
            |w| {
                if w == p {
                    0.0
                } else {
                    (f(w) - fp) / (w - p)
                }
            },
            &pts,
            tol,
        )?;
        Ok(Estimate {
            value: reg.value + fp * ((upper - p) / p).ln(),
            ..reg
        })
    }

    /// Step used by [`Self::lamb_coefficient_derivative`].
    pub fn derivative_step(nu: f64) -> f64 {
        (1e-4f64).max(1e-4 * nu.abs())
    }

    /// `dA_beta/dnu` by central differences at steps `h` and `h/2`, combined
    /// by one Richardson step. The inner evaluations run at a tolerance
    /// tightened by three orders of magnitude (floored near machine
    /// precision) so that the difference quotients are not dominated by
    /// quadrature noise.
    pub fn lamb_coefficient_derivative(&self, beta: f64, nu: f64) -> Result<Estimate> {
        let h = Self::derivative_step(nu);
        let inner = Tolerance {
            abs: (self.tolerance.abs * 1e-3).max(1e-14),
            rel: (self.tolerance.rel * 1e-4).max(1e-13),
            max_intervals: self.tolerance.max_intervals,
        };
        let a = |x: f64| self.lamb_coefficient_with(beta, x, &inner);
        let (ap, am) = (a(nu + h)?, a(nu - h)?);
        let (bp, bm) = (a(nu + 0.5 * h)?, a(nu - 0.5 * h)?);
        let d1 = (ap.value - am.value) / (2.0 * h);
        let d2 = (bp.value - bm.value) / h;
        let value = (4.0 * d2 - d1) / 3.0;
        let error = (4.0 * (bp.error + bm.error) / h + (ap.error + am.error) / (2.0 * h)) / 3.0;
        Ok(Estimate {
            value,
            error,
            evaluations: ap.evaluations + am.evaluations + bp.evaluations + bm.evaluations,
        })
    }

    /// `int_0^inf J(w) / (w + a)^power dw` for `a > 0`: the bath transforms
    /// that survive at zero temperature.
    pub fn zero_temperature_transform(&self, a: f64, power: i32) -> Result<Estimate> {
        if !(a > 0.0) || !a.is_finite() || power < 1 {
            return Err(Error::InvalidParameter(format!(
                "zero-temperature transform needs a > 0 and power >= 1, got a = {a}, power = {power}"
            )));
        }
        if let SpectralForm::Discrete { omegas, couplings } = &self.form {
            let v = omegas
                .iter()
                .zip(couplings)
                .map(|(&w, &g)| g * g / (w + a).powi(power))
                .sum();
            return Ok(Estimate {
                value: v,
                error: 0.0,
                evaluations: omegas.len(),
            });
        }
        let integrand = |w: f64| self.density(w) / (w + a).powi(power);
        let upper = match &self.form {
            SpectralForm::Tabulated { .. } => self.tail_start(),
            _ => tail_cutoff(integrand, self.tail_start(), self.tail_target())?,
        };
        let pts = self.breakpoints(0.0, upper, &[]);
        integrate(integrand, &pts, &self.tolerance)
    }

    /// `G(beta, -i beta_1) = int J(w) [(n+1) e^{-beta_1 w} + n e^{beta_1 w}] dw`,
    /// written as `J(w) [e^{-beta_1 w} + e^{-(beta-beta_1) w}] / (1 - e^{-beta w})`
    /// so that no exponential grows.
    pub fn beta_correlation(&self, beta: f64, beta1: f64) -> Result<Estimate> {
        check_positive_beta(beta)?;
        if !(0.0..=beta).contains(&beta1) {
            return Err(Error::InvalidParameter(format!(
                "beta_1 must lie in [0, beta], got {beta1}"
            )));
        }
        let kernel = |w: f64| {
            ((-beta1 * w).exp() + (-(beta - beta1) * w).exp()) * omega_over_one_minus_exp(beta, w)
        };
        if let SpectralForm::Discrete { omegas, couplings } = &self.form {
            let v = omegas
                .iter()
                .zip(couplings)
                .map(|(&w, &g)| g * g * kernel(w) / w)
                .sum();
            return Ok(Estimate {
                value: v,
                error: 0.0,
                evaluations: omegas.len(),
            });
        }
        let integrand = |w: f64| self.density_over_omega(w) * kernel(w);
        let upper = match &self.form {
            SpectralForm::Tabulated { .. } => self.tail_start(),
            _ => tail_cutoff(integrand, self.tail_start(), self.tail_target())?,
        };
        let pts = self.breakpoints(0.0, upper, &[]);
        integrate(integrand, &pts, &self.tolerance)
    }
}

fn validate_form(form: &SpectralForm) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidParameter(m));
    match form {
        SpectralForm::OhmicExponential { q, tau_c } => {
            if !(q.is_finite() && *q > 0.0) {
                return bad(format!("q must be finite and > 0, got {q}"));
            }
            if !(tau_c.is_finite() && *tau_c > 0.0) {
                return bad(format!("tau_c must be finite and > 0, got {tau_c}"));
            }
        }
        SpectralForm::Tabulated {
            grid,
            values,
            low_frequency_exponent: s,
        } => {
            if grid.is_empty() || grid.len() != values.len() {
                return bad(format!(
                    "tabulated density needs equal, non-zero numbers of grid points and values ({} vs {})",
                    grid.len(),
                    values.len()
                ));
            }
            if grid.iter().any(|g| !(g.is_finite() && *g > 0.0))
                || grid.windows(2).any(|w| w[1] <= w[0])
            {
                return bad("grid must be positive, finite and strictly increasing".into());
            }
            if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return bad("tabulated values must be finite and >= 0".into());
            }
            if !(s.is_finite() && *s >= 1.0) {
                return bad(format!("low-frequency exponent must be >= 1, got {s}"));
            }
        }
        SpectralForm::Discrete { omegas, couplings } => {
            if omegas.is_empty() || omegas.len() != couplings.len() {
                return bad(
                    "discrete density needs equal, non-zero numbers of modes and couplings".into(),
                );
            }
            if omegas.iter().any(|w| !(w.is_finite() && *w > 0.0))
                || omegas.windows(2).any(|w| w[1] <= w[0])
            {
                return bad("mode frequencies must be positive and strictly increasing".into());
            }
            if couplings.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                return bad("mode couplings must be finite and >= 0".into());
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientEntry {
    pub omega: f64,
    pub a: f64,
    /// Not evaluated at `omega = 0`, where every consumer multiplies it by an
    /// operator that vanishes identically.
    pub da: Option<f64>,
}

/// Snapshot of `A` and `dA/dw` at a fixed `beta` for a set of Bohr
/// frequencies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BathCoefficients {
    pub beta: f64,
    pub q: f64,
    pub entries: Vec<CoefficientEntry>,
    pub quadrature_error_estimate: f64,
}

impl BathCoefficients {
    pub fn compute(j: &SpectralDensityConfig, beta: f64, frequencies: &[f64]) -> Result<Self> {
        check_positive_beta(beta)?;
        let q = j.reorganization_energy()?;
        let results: Vec<Result<(CoefficientEntry, f64)>> = frequencies
            .par_iter()
            .map(|&w| {
                let a = j.lamb_coefficient(beta, w)?;
                let (da, derr) = if w == 0.0 {
                    (None, 0.0)
                } else {
                    let d = j.lamb_coefficient_derivative(beta, w)?;
                    (Some(d.value), d.error)
                };
                Ok((
                    CoefficientEntry {
                        omega: w,
                        a: a.value,
                        da,
                    },
                    a.error.max(derr),
                ))
            })
            .collect();
        let mut entries = Vec::with_capacity(results.len());
        let mut err: f64 = 0.0;
        for r in results {
            let (e, x) = r?;
            err = err.max(x);
            entries.push(e);
        }
        Ok(Self {
            beta,
            q,
            entries,
            quadrature_error_estimate: err,
        })
    }

    fn find(&self, omega: f64) -> Option<&CoefficientEntry> {
        self.entries.iter().find(|e| e.omega == omega)
    }

    pub fn a(&self, omega: f64) -> Option<f64> {
        self.find(omega).map(|e| e.a)
    }

    pub fn da(&self, omega: f64) -> Option<f64> {
        self.find(omega).and_then(|e| e.da)
    }
}
