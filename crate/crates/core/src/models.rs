//! The three worked systems (single qubit, V-system, two coupled qubits) and
//! their closed-form states. Nothing here calls the generic weak or
//! ultrastrong pipelines; the closed forms serve as oracles for them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    check_beta, gibbs_state, kron, pauli, CMatrix, DensityMatrix, HermitianOperator,
};
use crate::quadrature::{integrate, principal_value_symmetric, Estimate};
use crate::spectral::SpectralDensityConfig;
use crate::system::SystemModel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `H_S = w_q sigma_z / 2`, `X = cos(theta) sigma_z - sin(theta) sigma_x`.
    SpinBoson { omega_q: f64, theta: f64 },
    /// Levels `0, w_q - delta/2, w_q + delta/2`, `X = |1><0| + |2><0| + h.c.`.
    VSystem { omega_q: f64, delta: f64 },
    /// Two qubits with flip-flop coupling `lambda_s`, each coupled to its own
    /// bath through `sigma_x`.
    TwoQubit { omega_q: f64, lambda_s: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    UltrastrongDerived,
    UltrastrongConjectured,
}

fn finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite, got {v}"
        )));
    }
    Ok(())
}

fn herm(m: CMatrix) -> HermitianOperator {
    HermitianOperator::new(m).expect("model matrices are Hermitian by construction")
}

/// `cos(theta) sigma_z - sin(theta) sigma_x`.
pub fn spin_boson_coupling(theta: f64) -> CMatrix {
    pauli::sigma_z().scale(theta.cos()) - pauli::sigma_x().scale(theta.sin())
}

pub fn v_system_coupling() -> HermitianOperator {
    HermitianOperator::from_real_rows(3, &[0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        .expect("symmetric")
}

pub fn two_qubit_hamiltonian(omega_q: f64, lambda_s: f64) -> HermitianOperator {
    let i2 = CMatrix::identity(2, 2);
    let sz = pauli::sigma_z();
    let (sp, sm) = (pauli::sigma_plus(), pauli::sigma_minus());
    let local = (kron(&sz, &i2) + kron(&i2, &sz)).scale(omega_q / 2.0);
    let hop = (kron(&sp, &sm) + kron(&sm, &sp)).scale(lambda_s);
    herm(local + hop)
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::SpinBoson { omega_q, theta } => {
                finite("omega_q", omega_q)?;
                finite("theta", theta)
            }
            ModelSpec::VSystem { omega_q, delta } => {
                finite("omega_q", omega_q)?;
                finite("delta", delta)?;
                if !(omega_q > 0.0) || !(delta >= 0.0) || !(delta < 2.0 * omega_q) {
                    return Err(Error::InvalidParameter(format!(
                        "V-system needs omega_q > 0 and 0 <= delta < 2 omega_q, got omega_q = {omega_q}, delta = {delta}"
                    )));
                }
                Ok(())
            }
            ModelSpec::TwoQubit { omega_q, lambda_s } => {
                finite("omega_q", omega_q)?;
                finite("lambda_s", lambda_s)
            }
        }
    }

    /// A note when the parameters are accepted but lie outside the regime
    /// the model is usually studied in.
    pub fn regime_note(&self) -> Option<String> {
        match *self {
            ModelSpec::VSystem { omega_q, delta } if delta > 0.2 * omega_q => Some(format!(
                "delta/2 = {} is not small compared with omega_q = {omega_q}",
                delta / 2.0
            )),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::SpinBoson { .. } => "spin_boson",
            ModelSpec::VSystem { .. } => "v_system",
            ModelSpec::TwoQubit { .. } => "two_qubit",
        }
    }
}

pub fn build(spec: &ModelSpec) -> Result<SystemModel> {
    spec.validate()?;
    match *spec {
        ModelSpec::SpinBoson { omega_q, theta } => SystemModel::single(
            herm(pauli::sigma_z().scale(omega_q / 2.0)),
            herm(spin_boson_coupling(theta)),
        ),
        ModelSpec::VSystem { omega_q, delta } => SystemModel::single(
            HermitianOperator::diagonal(&[0.0, omega_q - delta / 2.0, omega_q + delta / 2.0]),
            v_system_coupling(),
        ),
        ModelSpec::TwoQubit { omega_q, lambda_s } => SystemModel::two_bath(
            two_qubit_hamiltonian(omega_q, lambda_s),
            herm(pauli::sigma_x()),
            herm(pauli::sigma_x()),
        ),
    }
}

/// `(1 - c O) / d` for a traceless involution `O` (`O^2 = 1`).
fn involution_state(o: &CMatrix, c: f64) -> Result<DensityMatrix> {
    let d = o.nrows();
    DensityMatrix::from_matrix((CMatrix::identity(d, d) - o.scale(c)).unscale(d as f64))
}

/// The closed-form ultrastrong state, derived or conjectured.
pub fn closed_form_state(spec: &ModelSpec, beta: f64, regime: Regime) -> Result<DensityMatrix> {
    spec.validate()?;
    check_beta(beta)?;
    match (*spec, regime) {
        (ModelSpec::SpinBoson { omega_q, theta }, Regime::UltrastrongDerived) => {
            involution_state(&spin_boson_coupling(theta), (0.5 * beta * omega_q * theta.cos()).tanh())
        }
        (ModelSpec::SpinBoson { omega_q, theta }, Regime::UltrastrongConjectured) => involution_state(
            &spin_boson_coupling(theta),
            theta.cos() * (0.5 * beta * omega_q).tanh(),
        ),
        (ModelSpec::VSystem { omega_q, .. }, Regime::UltrastrongDerived) => {
            let e = (-0.5 * beta * omega_q).exp();
            let (pop, coh) = (0.5 * (1.0 + e), 0.5 * (1.0 - e));
            let m = HermitianOperator::from_real_rows(3, &[1.0, 0.0, 0.0, 0.0, pop, coh, 0.0, coh, pop])?;
            DensityMatrix::from_matrix(m.into_matrix().unscale(2.0 + e))
        }
        (ModelSpec::TwoQubit { lambda_s, .. }, Regime::UltrastrongDerived) => {
            let xx = kron(&pauli::sigma_x(), &pauli::sigma_x());
            involution_state(&xx, (0.5 * beta * lambda_s).tanh())
        }
        (ModelSpec::TwoQubit { omega_q, lambda_s }, Regime::UltrastrongConjectured) => {
            let xx = kron(&pauli::sigma_x(), &pauli::sigma_x());
            involution_state(&xx, two_qubit_conjectured_prefactor(beta, omega_q, lambda_s))
        }
        (ModelSpec::VSystem { .. }, Regime::UltrastrongConjectured) => Err(Error::UnsupportedCombination(
            "no closed form for the conjectured V-system state; use the generic dephased Gibbs state".into(),
        )),
    }
}

/// `sinh(b l) / (cosh(b w) + cosh(b l))`, evaluated without overflow.
pub fn two_qubit_conjectured_prefactor(beta: f64, omega_q: f64, lambda_s: f64) -> f64 {
    let (x, y) = (beta * omega_q.abs(), beta * lambda_s.abs());
    let m = x.max(y);
    // divide numerator and denominator by e^m / 2
    let num = (y - m).exp() - (-y - m).exp();
    let den = (x - m).exp() + (-x - m).exp() + (y - m).exp() + (-y - m).exp();
    lambda_s.signum() * num / den
}

/// `tanh(beta lambda_s / 2)`.
pub fn two_qubit_derived_prefactor(beta: f64, lambda_s: f64) -> f64 {
    (0.5 * beta * lambda_s).tanh()
}

fn continuous_only(j: &SpectralDensityConfig) -> Result<()> {
    if j.is_discrete() {
        return Err(Error::UnsupportedCombination(
            "closed-form bath integrals need a continuous spectral density".into(),
        ));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and > 0, got {v}"
        )));
    }
    Ok(())
}

/// `w / (1 - e^{-beta w})`.
fn w_over_one_minus_exp(beta: f64, w: f64) -> f64 {
    let x = beta * w;
    if x < 1e-8 {
        1.0 / beta + 0.5 * w
    } else {
        -w / (-x).exp_m1()
    }
}

/// `w coth(beta w / 2)`.
fn w_coth(beta: f64, w: f64) -> f64 {
    let x = beta * w;
    if x < 1e-8 {
        2.0 / beta + x * w / 6.0
    } else {
        w / (0.5 * x).tanh()
    }
}

/// `(e^{-beta w} - e^{-beta w_q}) / (w - w_q)`, continuous through `w = w_q`.
fn exp_difference_quotient(beta: f64, w: f64, wq: f64) -> f64 {
    let u = beta * (wq - w);
    if u.abs() < 1.0 {
        let ratio = if u == 0.0 { 1.0 } else { u.exp_m1() / u };
        -beta * (-beta * wq).exp() * ratio
    } else {
        ((-beta * w).exp() - (-beta * wq).exp()) / (w - wq)
    }
}

/// `<sigma_x>` and `<sigma_z> - <sigma_z>_0` of the second-order spin-boson
/// state, evaluated from their scalar bath integrals.
///
/// The integrals as usually written carry poles at `w = w_q`. In `<sigma_x>`
/// the two singular pieces cancel pointwise once combined, using
/// `tanh(a) coth(y) - 1 = 2 (e^{-2y} - e^{-2a}) / ((1 + e^{-2a})(1 - e^{-2y}))`.
/// In the `sigma_z` shift a simple pole remains whose residue also cancels;
/// it is taken as a principal value by symmetric folding.
pub fn spin_boson_weak_closed_form(
    omega_q: f64,
    theta: f64,
    j: &SpectralDensityConfig,
    beta: f64,
    lambda: f64,
) -> Result<(f64, f64)> {
    positive("omega_q", omega_q)?;
    positive("beta", beta)?;
    finite("theta", theta)?;
    finite("lambda", lambda)?;
    continuous_only(j)?;
    let l2 = lambda * lambda;
    let (s2, s1) = ((2.0 * theta).sin(), theta.sin());
    if l2 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let tol = j.tolerance();
    let wq = omega_q;
    let upper = j.omega_max()?.max(4.0 * wq);
    let pts = [0.0, wq, upper];
    let q = j.reorganization_energy()?;
    let t = (0.5 * beta * wq).tanh();
    let ebq = (-beta * wq).exp();
    let sech2 = 4.0 * ebq / ((1.0 + ebq) * (1.0 + ebq));

    // J(w) (tanh(a) coth(y) - 1) / (w - w_q)
    let jk = |w: f64| {
        2.0 * j.density_over_omega(w)
            * w_over_one_minus_exp(beta, w)
            * exp_difference_quotient(beta, w, wq)
            / (1.0 + ebq)
    };
    let j_coth = |w: f64| j.density_over_omega(w) * w_coth(beta, w);

    let sx = if s2 == 0.0 {
        0.0
    } else {
        let i1 = integrate(|w| jk(w) / (w + wq), &pts, tol)?;
        let i2 = integrate(|w| j.density(w) / (w + wq), &pts, tol)?;
        2.0 * l2 * s2 / wq * (wq * i1.value - i2.value + q)
    };

    let dz = if s1 == 0.0 {
        0.0
    } else {
        let pole = principal_value_symmetric(
            |w| 0.5 * (jk(w) + 0.5 * beta * sech2 * j_coth(w)) / (w - wq),
            0.0,
            wq,
            upper,
            tol,
        )?;
        let regular: Estimate = integrate(
            |w| {
                let jc = j_coth(w);
                0.5 * ((t * jc + j.density(w)) / ((w + wq) * (w + wq))
                    - 0.5 * beta * sech2 * jc / (w + wq))
            },
            &pts,
            tol,
        )?;
        2.0 * l2 * s1 * s1 * (pole.value + regular.value)
    };
    Ok((sx, dz))
}

/// Thermal populations of `H_S = diag(0, w1, w2)`.
fn v_populations(beta: f64, w1: f64, w2: f64) -> [f64; 3] {
    let (e1, e2) = ((-beta * w1).exp(), (-beta * w2).exp());
    let z = 1.0 + e1 + e2;
    [1.0 / z, e1 / z, e2 / z]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VSystemCoefficients {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub g: f64,
}

/// The population corrections `f_p` and the `|1><2|` coherence `g` of the
/// second-order V-system state, `rho = tau + l^2 (sum_p f_p |p><p| + g (|1><2| + h.c.))`.
///
/// The coherence carries `-(tau_1 - tau_2) Q`; the opposite sign is
/// sometimes quoted but does not follow from the general expansion and
/// disagrees with exact diagonalization.
pub fn v_system_weak_coefficients(
    omega_q: f64,
    delta: f64,
    j: &SpectralDensityConfig,
    beta: f64,
) -> Result<VSystemCoefficients> {
    ModelSpec::VSystem { omega_q, delta }.validate()?;
    positive("delta", delta)?;
    positive("beta", beta)?;
    let (w1, w2) = (omega_q - 0.5 * delta, omega_q + 0.5 * delta);
    let [t0, t1, t2] = v_populations(beta, w1, w2);
    let q = j.reorganization_energy()?;
    let a = |nu: f64| j.lamb_coefficient(beta, nu).map(|e| e.value);
    let da = |nu: f64| j.lamb_coefficient_derivative(beta, nu).map(|e| e.value);
    let (a1, am1, a2, am2) = (a(w1)?, a(-w1)?, a(w2)?, a(-w2)?);
    let (d1, dm1, d2, dm2) = (da(w1)?, da(-w1)?, da(w2)?, da(-w2)?);

    let f2 =
        t0 * dm2 - t2 * d2 + beta * t2 * (a2 - t2 * a2 - t0 * am2 - t1 * a1 - t0 * am1 + q * t0);
    let f1 =
        t0 * dm1 - t1 * d1 + beta * t1 * (a1 - t1 * a1 - t0 * am1 - t2 * a2 - t0 * am2 + q * t0);
    let g = (t1 * a1 + t0 * am1 - (t2 * a2 + t0 * am2) - (t1 - t2) * q) / delta;
    Ok(VSystemCoefficients {
        f0: -f1 - f2,
        f1,
        f2,
        g,
    })
}

/// `tau + l^2 (sum_p f_p |p><p| + g (|1><2| + h.c.))`, normalized.
pub fn v_system_weak_state(
    omega_q: f64,
    delta: f64,
    j: &SpectralDensityConfig,
    beta: f64,
    lambda: f64,
) -> Result<DensityMatrix> {
    let c = v_system_weak_coefficients(omega_q, delta, j, beta)?;
    let [t0, t1, t2] = v_populations(beta, omega_q - 0.5 * delta, omega_q + 0.5 * delta);
    let l2 = lambda * lambda;
    let m = HermitianOperator::from_real_rows(
        3,
        &[
            t0 + l2 * c.f0,
            0.0,
            0.0,
            0.0,
            t1 + l2 * c.f1,
            l2 * c.g,
            0.0,
            l2 * c.g,
            t2 + l2 * c.f2,
        ],
    )?;
    DensityMatrix::normalized(m)
}

/// The zero-temperature second-order V-system state:
/// populations `1 - l^2 (I_1 + I_2)`, `l^2 I_1`, `l^2 I_2` with
/// `I_k = int J/(w + w_k)^2`, and coherence `l^2 int J/((w + w_1)(w + w_2))`.
pub fn v_system_low_temperature_state(
    omega_q: f64,
    delta: f64,
    j: &SpectralDensityConfig,
    lambda: f64,
) -> Result<DensityMatrix> {
    ModelSpec::VSystem { omega_q, delta }.validate()?;
    finite("lambda", lambda)?;
    continuous_only(j)?;
    let (w1, w2) = (omega_q - 0.5 * delta, omega_q + 0.5 * delta);
    let tol = j.tolerance();
    let upper = j.omega_max()?;
    let pts = [0.0, upper];
    let i1 = integrate(|w| j.density(w) / ((w + w1) * (w + w1)), &pts, tol)?.value;
    let i2 = integrate(|w| j.density(w) / ((w + w2) * (w + w2)), &pts, tol)?.value;
    let c = integrate(|w| j.density(w) / ((w + w1) * (w + w2)), &pts, tol)?.value;
    let l2 = lambda * lambda;
    let m = HermitianOperator::from_real_rows(
        3,
        &[
            1.0 - l2 * (i1 + i2),
            0.0,
            0.0,
            0.0,
            l2 * i1,
            l2 * c,
            0.0,
            l2 * c,
            l2 * i2,
        ],
    )?;
    DensityMatrix::new(m)
}

/// Ultrastrong V-system quantities: the coherence `G = 2 Re <1|rho|2>` and
/// the population shifts `F_p = <p|rho|p> - <p|tau_S|p>`.
pub fn v_system_ultrastrong_observables(
    omega_q: f64,
    delta: f64,
    beta: f64,
) -> Result<(f64, [f64; 3])> {
    let rho = closed_form_state(
        &ModelSpec::VSystem { omega_q, delta },
        beta,
        Regime::UltrastrongDerived,
    )?;
    let tau = v_populations(beta, omega_q - 0.5 * delta, omega_q + 0.5 * delta);
    let g = 2.0 * rho.entry(1, 2).re;
    let f = [0, 1, 2].map(|p| rho.entry(p, p).re - tau[p]);
    Ok((g, f))
}

/// Bare Gibbs state of a model, for reference.
pub fn bare_gibbs(spec: &ModelSpec, beta: f64) -> Result<DensityMatrix> {
    gibbs_state(build(spec)?.h_s(), beta)
}
