//! Second-order (weak-coupling) mean force Gibbs state.
//!
//! With eigenoperators `X_n` of the coupling and `tau = gibbs(H_S)`,
//!
//! ```text
//! rho = tau + l^2 [ sum_n [X_n^H, tau X_n] dD(w_n)
//!                 + beta sum_n tau (X_n X_n^H - Tr[tau X_n X_n^H]) D(w_n)
//!                 + sum_{m != n} (w_m - w_n)^{-1} ([X_m, X_n^H tau] + [tau X_n, X_m^H]) D(w_n) ]
//! ```
//!
//! where `D = A - Q` unless `X^2` is proportional to the identity (then
//! `D = A`). The derivative term at `w_n = 0` is skipped: its commutator
//! `[X_0^H, tau X_0]` vanishes identically because `X_0` commutes with `H_S`,
//! while `dA/dw` at zero diverges logarithmically for Ohmic baths.

use serde::{Deserialize, Serialize};

use crate::eigenops::{
    decompose, default_gap_tolerance, default_x_squared_tolerance, is_x_squared_identity,
    EigenOpDecomposition,
};
use crate::error::{Error, Result};
use crate::operator::{
    check_beta, commutator, eigh, gibbs_state, hermiticity_deviation, max_abs, trace, CMatrix,
    DensityMatrix, HermitianOperator,
};
use crate::spectral::{d_coefficient, BathCoefficients, SpectralDensityConfig};
use crate::system::SystemModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `1/Z = 1 - l^2 beta sum_n Tr[tau X_n X_n^H] D(w_n)`, which keeps the
    /// state exactly second order in `l`.
    #[default]
    Binomial,
    /// Divide the unnormalized second-order operator by its trace.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidityThresholds {
    pub marginal: f64,
    pub invalid: f64,
}

impl Default for ValidityThresholds {
    fn default() -> Self {
        Self {
            marginal: 0.1,
            invalid: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Valid,
    Marginal,
    Invalid,
}

impl ValidityThresholds {
    pub fn classify(&self, margin: f64) -> Validity {
        if !(margin < self.invalid) {
            Validity::Invalid
        } else if margin >= self.marginal {
            Validity::Marginal
        } else {
            Validity::Valid
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeakOptions {
    /// Bohr-frequency clustering tolerance; `None` uses `1e-9 ||H_S||`.
    pub gap_tol: Option<f64>,
    pub normalization: Normalization,
    pub thresholds: ValidityThresholds,
}

impl Default for WeakOptions {
    fn default() -> Self {
        Self {
            gap_tol: None,
            normalization: Normalization::Binomial,
            thresholds: ValidityThresholds::default(),
        }
    }
}

/// Everything in the second-order state that does not depend on `l`.
#[derive(Clone, Debug)]
pub struct WeakCorrection {
    pub tau_s: DensityMatrix,
    /// Traceless correction multiplying `l^2` in the binomially normalized state.
    pub correction: CMatrix,
    /// `beta sum_n Tr[tau X_n X_n^H] D(w_n)`: the `l^2` coefficient of `Z`.
    pub z_coefficient: f64,
    pub decomposition: EigenOpDecomposition,
    pub x_squared_identity: bool,
    pub coefficients: BathCoefficients,
    h_s: CMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakMfgResult {
    pub rho: DensityMatrix,
    pub tau_s: DensityMatrix,
    pub lambda: f64,
    pub beta: f64,
    pub validity_margin: f64,
    pub validity: Validity,
    pub coherence_norm: f64,
    pub normalization: Normalization,
    /// `max |rho - rho^H|` of the assembled operator, before any
    /// symmetrization.
    pub hermiticity_deviation: f64,
    /// Trace before the final floating-point renormalization.
    pub raw_trace: f64,
    pub x_squared_identity: bool,
    pub coefficients: BathCoefficients,
    pub warnings: Vec<String>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite, got {lambda}"
        )));
    }
    Ok(())
}

fn check_strict_beta(beta: f64) -> Result<()> {
    check_beta(beta)?;
    if beta == 0.0 {
        return Err(Error::InvalidParameter("beta must be > 0".into()));
    }
    Ok(())
}

fn decomposition_for(
    model: &SystemModel,
    gap_tol: Option<f64>,
) -> Result<(EigenOpDecomposition, bool)> {
    let x = model.coupling()?;
    let tol = match gap_tol {
        Some(t) => t,
        None => default_gap_tolerance(model.h_s())?,
    };
    let dec = decompose(model.h_s(), x, tol)?;
    let x2 = is_x_squared_identity(x, default_x_squared_tolerance(x)).0;
    Ok((dec, x2))
}

impl WeakCorrection {
    pub fn compute(
        model: &SystemModel,
        j: &SpectralDensityConfig,
        beta: f64,
        gap_tol: Option<f64>,
    ) -> Result<Self> {
        check_strict_beta(beta)?;
        let (dec, x2) = decomposition_for(model, gap_tol)?;
        let tau_s = gibbs_state(model.h_s(), beta)?;
        let coefficients = BathCoefficients::compute(j, beta, &dec.frequencies())?;
        let q = coefficients.q;
        let tau = tau_s.matrix();
        let n = tau.nrows();
        let identity = CMatrix::identity(n, n);

        let d: Vec<f64> = dec
            .pairs
            .iter()
            .map(|p| {
                d_coefficient(
                    coefficients
                        .a(p.omega)
                        .expect("computed for every frequency"),
                    q,
                    x2,
                )
            })
            .collect();

        let mut c = CMatrix::zeros(n, n);
        let mut z_coefficient = 0.0;
        for (k, p) in dec.pairs.iter().enumerate() {
            let xn = &p.op;
            let xnh = xn.adjoint();
            if p.omega != 0.0 {
                let da = coefficients
                    .da(p.omega)
                    .expect("computed for nonzero frequencies");
                c += commutator(&xnh, &(tau * xn)).scale(da);
            }
            let xxh = xn * &xnh;
            let t = trace(&(tau * &xxh)).re;
            c += (tau * (xxh - identity.scale(t))).scale(beta * d[k]);
            z_coefficient += beta * t * d[k];
        }
        for (im, pm) in dec.pairs.iter().enumerate() {
            let xm = &pm.op;
            let xmh = xm.adjoint();
            for (inn, pn) in dec.pairs.iter().enumerate() {
                if im == inn {
                    continue;
                }
                let xn = &pn.op;
                let w = pm.omega - pn.omega;
                let term = commutator(xm, &(xn.adjoint() * tau)) + commutator(&(tau * xn), &xmh);
                c += term.scale(d[inn] / w);
            }
        }
        Ok(Self {
            tau_s,
            correction: c,
            z_coefficient,
            decomposition: dec,
            x_squared_identity: x2,
            coefficients,
            h_s: model.h_s().matrix().clone(),
        })
    }

    pub fn validity_margin(&self, lambda: f64) -> f64 {
        (lambda * lambda * self.z_coefficient).abs()
    }

    pub fn state(&self, lambda: f64, options: &WeakOptions) -> Result<WeakMfgResult> {
        check_lambda(lambda)?;
        let l2 = lambda * lambda;
        let tau = self.tau_s.matrix();
        let raw = match options.normalization {
            Normalization::Binomial => tau + self.correction.scale(l2),
            Normalization::Exact => {
                let z = 1.0 + l2 * self.z_coefficient;
                if !(z > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "second-order partition function {z} is not positive"
                    )));
                }
                (tau + (&self.correction + tau.scale(self.z_coefficient)).scale(l2)).unscale(z)
            }
        };
        let dev = hermiticity_deviation(&raw);
        let raw_trace = trace(&raw).re;
        let op = HermitianOperator::from_hermitian_part(&raw).scaled(1.0 / raw_trace);
        let min_eigenvalue = eigh(op.matrix())?.eigenvalues[0];
        let rho = DensityMatrix::from_parts(op, min_eigenvalue);
        let margin = self.validity_margin(lambda);
        let validity = options.thresholds.classify(margin);
        let mut warnings = Vec::new();
        if min_eigenvalue < -1e-10 {
            warnings.push(format!(
                "state has a negative eigenvalue {min_eigenvalue:e}"
            ));
        }
        match validity {
            Validity::Valid => {}
            Validity::Marginal => {
                warnings.push(format!("validity margin {margin:.3e} is marginal"))
            }
            Validity::Invalid => warnings.push(format!(
                "validity margin {margin:.3e} exceeds {}; the expansion is not trustworthy",
                options.thresholds.invalid
            )),
        }
        let coherence_norm = max_abs(&commutator(rho.matrix(), &self.h_s));
        Ok(WeakMfgResult {
            rho,
            tau_s: self.tau_s.clone(),
            lambda,
            beta: self.coefficients.beta,
            validity_margin: margin,
            validity,
            coherence_norm,
            normalization: options.normalization,
            hermiticity_deviation: dev,
            raw_trace,
            x_squared_identity: self.x_squared_identity,
            coefficients: self.coefficients.clone(),
            warnings,
        })
    }
}

pub fn weak_mfg_state(
    model: &SystemModel,
    j: &SpectralDensityConfig,
    beta: f64,
    lambda: f64,
    options: &WeakOptions,
) -> Result<WeakMfgResult> {
    check_lambda(lambda)?;
    WeakCorrection::compute(model, j, beta, options.gap_tol)?.state(lambda, options)
}

/// `|beta l^2 sum_n Tr[tau X_n X_n^H] D(w_n)|`.
pub fn weak_validity_margin(
    model: &SystemModel,
    j: &SpectralDensityConfig,
    beta: f64,
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    check_strict_beta(beta)?;
    let (dec, x2) = decomposition_for(model, None)?;
    let tau = gibbs_state(model.h_s(), beta)?;
    let q = j.reorganization_energy()?;
    let mut s = 0.0;
    for p in &dec.pairs {
        let t = trace(&(tau.matrix() * &p.op * p.op.adjoint())).re;
        if t == 0.0 {
            continue;
        }
        let a = j.lamb_coefficient(beta, p.omega)?.value;
        s += t * d_coefficient(a, q, x2);
    }
    Ok((beta * lambda * lambda * s).abs())
}

/// `max |[rho, H_S]|`.
pub fn coherence_commutator_norm(rho: &DensityMatrix, h_s: &HermitianOperator) -> Result<f64> {
    if rho.dim() != h_s.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            rho.dim(),
            h_s.dim()
        )));
    }
    Ok(max_abs(&commutator(rho.matrix(), h_s.matrix())))
}

/// The `beta -> 0` reference state `tau_S(beta)`, the high-temperature limit
/// of the mean force state at any coupling strength.
pub fn high_temperature_reference(model: &SystemModel, beta: f64) -> Result<DensityMatrix> {
    gibbs_state(model.h_s(), beta)
}

/// Zero-temperature limit of the second-order state: `tau -> |0><0|` and
/// `n_beta -> 0` in every bath coefficient. The terms linear in `beta` cancel
/// identically for a non-degenerate ground state.
pub fn low_temperature_state(
    model: &SystemModel,
    j: &SpectralDensityConfig,
    lambda: f64,
    gap_tol: Option<f64>,
) -> Result<DensityMatrix> {
    check_lambda(lambda)?;
    let (dec, x2) = decomposition_for(model, gap_tol)?;
    let es = model.h_s().eigensystem()?;
    if es.eigenvalues.len() > 1 {
        let gap = es.eigenvalues[1] - es.eigenvalues[0];
        if gap <= 10.0 * dec.gap_tolerance {
            return Err(Error::DegenerateGroundState { gap });
        }
    }
    let g = es.eigenvectors.column(0).into_owned();
    let p0 = &g * g.adjoint();
    let n = p0.nrows();
    let q = j.reorganization_energy()?;

    // Only lowering operators (w_n <= 0) survive <0| X_n.
    let mut c = CMatrix::zeros(n, n);
    let mut transforms: Vec<Option<(f64, f64)>> = Vec::with_capacity(dec.len());
    for p in &dec.pairs {
        if p.omega > 0.0 {
            transforms.push(None);
            continue;
        }
        let a = if p.omega == 0.0 {
            q
        } else {
            j.zero_temperature_transform(-p.omega, 1)?.value
        };
        let da = if p.omega == 0.0 {
            0.0
        } else {
            j.zero_temperature_transform(-p.omega, 2)?.value
        };
        transforms.push(Some((a, da)));
    }
    for (inn, pn) in dec.pairs.iter().enumerate() {
        let Some((a, da)) = transforms[inn] else {
            continue;
        };
        let xn = &pn.op;
        let xnh = xn.adjoint();
        if pn.omega != 0.0 {
            c += commutator(&xnh, &(&p0 * xn)).scale(da);
        }
        let dn = d_coefficient(a, q, x2);
        for (im, pm) in dec.pairs.iter().enumerate() {
            if im == inn {
                continue;
            }
            let xm = &pm.op;
            let term = commutator(xm, &(&xnh * &p0)) + commutator(&(&p0 * xn), &xm.adjoint());
            c += term.scale(dn / (pm.omega - pn.omega));
        }
    }
    let raw = p0 + c.scale(lambda * lambda);
    let op = HermitianOperator::from_hermitian_part(&raw);
    let tr = op.trace();
    let op = op.scaled(1.0 / tr);
    let min = eigh(op.matrix())?.eigenvalues[0];
    Ok(DensityMatrix::from_parts(op, min))
}
