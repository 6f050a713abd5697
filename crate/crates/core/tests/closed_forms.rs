use meanforce::models::{
    build, closed_form_state, spin_boson_weak_closed_form, v_system_low_temperature_state,
    v_system_weak_coefficients, ModelSpec, Regime,
};
use meanforce::operator::{pauli, trace_distance, DensityMatrix};
use meanforce::spectral::SpectralDensityConfig;
use meanforce::ultrastrong::{
    conjecture_state, conjecture_state_two_bath, ultrastrong_mfg_state, ultrastrong_two_bath,
};
use meanforce::weak::{low_temperature_state, weak_mfg_state, WeakOptions};

fn ohmic() -> SpectralDensityConfig {
    SpectralDensityConfig::ohmic_exponential(10.0, 1.0).unwrap()
}

fn bloch(rho: &DensityMatrix) -> (f64, f64) {
    (
        rho.expectation(&pauli::sigma_x()).re,
        rho.expectation(&pauli::sigma_z()).re,
    )
}

#[test]
fn spin_boson_weak_matches_closed_form() {
    let j = ohmic();
    let lambda = 0.05;
    for &(theta, beta) in &[(std::f64::consts::FRAC_PI_4, 1.0), (0.3, 0.5), (1.2, 2.5)] {
        let spec = ModelSpec::SpinBoson {
            omega_q: 1.0,
            theta,
        };
        let model = build(&spec).unwrap();
        let r = weak_mfg_state(&model, &j, beta, lambda, &WeakOptions::default()).unwrap();
        let (sx, sz) = bloch(&r.rho);
        let (cx, cz) = spin_boson_weak_closed_form(1.0, theta, &j, beta, lambda).unwrap();
        let sz0 = -(0.5 * beta).tanh();
        assert!(
            (sx - cx).abs() < 1e-8,
            "theta {theta} beta {beta}: sx {sx} vs {cx}"
        );
        assert!(
            (sz - sz0 - cz).abs() < 1e-8,
            "theta {theta} beta {beta}: dz {} vs {cz}",
            sz - sz0
        );
    }
}

#[test]
fn v_system_weak_matches_coefficients() {
    let j = ohmic();
    let model = build(&ModelSpec::VSystem {
        omega_q: 3.0,
        delta: 0.1,
    })
    .unwrap();
    let lambda = 0.1;
    for beta in [0.2, 0.5, 1.0] {
        let r = weak_mfg_state(&model, &j, beta, lambda, &WeakOptions::default()).unwrap();
        let tau = &r.tau_s;
        let c = v_system_weak_coefficients(3.0, 0.1, &j, beta).unwrap();
        let l2 = lambda * lambda;
        let f = [c.f0, c.f1, c.f2];
        for p in 0..3 {
            let got = r.rho.entry(p, p).re - tau.entry(p, p).re;
            assert!(
                (got - l2 * f[p]).abs() < 1e-7,
                "beta {beta} p {p}: {got} vs {}",
                l2 * f[p]
            );
        }
        let coh = r.rho.entry(1, 2);
        assert!(
            (coh.re - l2 * c.g).abs() < 1e-7,
            "beta {beta}: {} vs {}",
            coh.re,
            l2 * c.g
        );
        assert!(coh.im.abs() < 1e-12);
        assert!(r.rho.entry(0, 1).norm() < 1e-12);
    }
}

#[test]
fn v_system_low_temperature_matches_closed_form() {
    let j = ohmic();
    let model = build(&ModelSpec::VSystem {
        omega_q: 3.0,
        delta: 0.1,
    })
    .unwrap();
    let generic = low_temperature_state(&model, &j, 0.1, None).unwrap();
    let closed = v_system_low_temperature_state(3.0, 0.1, &j, 0.1).unwrap();
    let d = meanforce::operator::max_abs(&(generic.matrix() - closed.matrix()));
    assert!(d < 1e-8, "{d}");
}

#[test]
fn ultrastrong_pipelines_match_closed_forms() {
    for &(wq, theta, beta) in &[(1.0, 0.785, 1.0), (2.5, 2.9, 0.3), (0.7, 1.3, 7.0)] {
        let spec = ModelSpec::SpinBoson { omega_q: wq, theta };
        let m = build(&spec).unwrap();
        let x = m.coupling().unwrap();
        let generic = ultrastrong_mfg_state(m.h_s(), x, beta, None).unwrap();
        let closed = closed_form_state(&spec, beta, Regime::UltrastrongDerived).unwrap();
        assert!(trace_distance(&generic, &closed).unwrap() < 1e-12);
        let generic = conjecture_state(m.h_s(), x, beta, None).unwrap();
        let closed = closed_form_state(&spec, beta, Regime::UltrastrongConjectured).unwrap();
        assert!(trace_distance(&generic, &closed).unwrap() < 1e-12);
    }
    for &(wq, ls, beta) in &[(1.0, 1.55, 2.0 / 3.0), (0.4, 0.2, 5.0), (3.0, 2.0, 0.1)] {
        let spec = ModelSpec::TwoQubit {
            omega_q: wq,
            lambda_s: ls,
        };
        let m = build(&spec).unwrap();
        let generic = ultrastrong_two_bath(&m, beta, None).unwrap();
        let closed = closed_form_state(&spec, beta, Regime::UltrastrongDerived).unwrap();
        assert!(trace_distance(&generic, &closed).unwrap() < 1e-12);
        let generic = conjecture_state_two_bath(&m, beta, None).unwrap();
        let closed = closed_form_state(&spec, beta, Regime::UltrastrongConjectured).unwrap();
        assert!(trace_distance(&generic, &closed).unwrap() < 1e-12);
    }
    for &(wq, delta, beta) in &[(3.0, 0.1, 1.0), (1.0, 0.5, 4.0)] {
        let spec = ModelSpec::VSystem { omega_q: wq, delta };
        let m = build(&spec).unwrap();
        let generic = ultrastrong_mfg_state(m.h_s(), m.coupling().unwrap(), beta, None).unwrap();
        let closed = closed_form_state(&spec, beta, Regime::UltrastrongDerived).unwrap();
        assert!(trace_distance(&generic, &closed).unwrap() < 1e-12);
    }
}

#[test]
fn v_system_coherence_finite_as_splitting_closes() {
    let j = ohmic()
        .with_tolerance(meanforce::quadrature::Tolerance::new(1e-12, 1e-12))
        .unwrap();
    let g: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&d| v_system_weak_coefficients(3.0, d, &j, 1.0).unwrap().g)
        .collect();
    // g(delta) = g0 + O(delta^2): successive differences shrink
    assert!((g[1] - g[2]).abs() < (g[0] - g[1]).abs() + 1e-6);
    assert!((g[1] - g[2]).abs() < 1e-4 * g[2].abs().max(1.0));
    assert!(g.iter().all(|v| v.is_finite()));
}

#[test]
fn v_system_coherence_positive_at_fig1_point() {
    let c = v_system_weak_coefficients(3.0, 0.1, &ohmic(), 1.0 / 3.0).unwrap();
    assert!(c.g > 0.0);
}
