//! Acceptance criteria 1 to 12. Each test prints one PASS/FAIL line and
//! asserts the same condition.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;
use std::time::{Duration, Instant};

use meanforce::models::{
    build, closed_form_state, spin_boson_weak_closed_form, v_system_weak_state, ModelSpec, Regime,
};
use meanforce::operator::{
    fidelity, gibbs_state, hermiticity_deviation, max_abs, trace_distance, DensityMatrix,
};
use meanforce::oracle::{
    build_total_hamiltonian, discretize_bath, exact_reduced_gibbs, DiscretizedBath,
};
use meanforce::spectral::SpectralDensityConfig;
use meanforce::ultrastrong::{
    conjecture_state_two_bath, ultrastrong_mfg_state, ultrastrong_two_bath,
};
use meanforce::weak::{weak_mfg_state, WeakCorrection, WeakMfgResult, WeakOptions};
use meanforce_cli::commands::{fig1_reproduction, Fig1Config};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STATE_TOL: f64 = 1e-12;

fn ohmic() -> SpectralDensityConfig {
    SpectralDensityConfig::ohmic_exponential(10.0, 1.0).unwrap()
}

fn report(id: &str, what: &str, ok: bool, detail: String, elapsed: Duration) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    // written past the test harness capture so the line shows for passing tests too
    let line = format!(
        "criterion {id} [{what}]: {verdict} {detail} ({:.3} s)\n",
        elapsed.as_secs_f64()
    );
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
}

/// Hermitian and unit trace to 1e-12; the check behind criterion 6.
fn physical(rho: &DensityMatrix) -> bool {
    hermiticity_deviation(rho.matrix()) <= STATE_TOL && (rho.op().trace() - 1.0).abs() <= STATE_TOL
}

fn weak_physical(r: &WeakMfgResult) -> bool {
    physical(&r.rho) && r.hermiticity_deviation <= STATE_TOL
}

fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[test]
fn criterion_01_single_qubit_ultrastrong_closed_form() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut phys) = (0.0f64, true);
    for _ in 0..20 {
        let theta = rng.gen_range(0.0..=PI);
        let beta = rng.gen_range(0.1..=10.0);
        let omega_q = rng.gen_range(0.5..=5.0);
        let spec = ModelSpec::SpinBoson { omega_q, theta };
        let m = build(&spec).unwrap();
        let generic = ultrastrong_mfg_state(m.h_s(), m.coupling().unwrap(), beta, None).unwrap();
        let closed = closed_form_state(&spec, beta, Regime::UltrastrongDerived).unwrap();
        phys &= physical(&generic) && physical(&closed);
        worst = worst.max(trace_distance(&generic, &closed).unwrap());
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-12 && phys && elapsed < Duration::from_secs(1);
    report(
        "1",
        "single-qubit ultrastrong vs closed form",
        ok,
        format!("max trace distance {worst:.3e}"),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_02_two_qubit_ultrastrong_closed_form() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut phys) = (0.0f64, true);
    for _ in 0..20 {
        let omega_q = rng.gen_range(0.5..=5.0);
        let lambda_s = rng.gen_range(0.1..=3.0);
        let beta = rng.gen_range(0.1..=10.0);
        let spec = ModelSpec::TwoQubit { omega_q, lambda_s };
        let m = build(&spec).unwrap();
        let generic = ultrastrong_two_bath(&m, beta, None).unwrap();
        let closed = closed_form_state(&spec, beta, Regime::UltrastrongDerived).unwrap();
        phys &= physical(&generic) && physical(&closed);
        worst = worst.max(trace_distance(&generic, &closed).unwrap());
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-12 && phys && elapsed < Duration::from_secs(1);
    report(
        "2",
        "two-bath pipeline vs two-qubit closed form",
        ok,
        format!("max trace distance {worst:.3e}"),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_03_v_system_ultrastrong_closed_form() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut phys) = (0.0f64, true);
    for _ in 0..20 {
        let omega_q = rng.gen_range(0.5..=5.0);
        let delta = omega_q * rng.gen_range(0.01..=0.4);
        let beta = rng.gen_range(0.1..=10.0);
        let spec = ModelSpec::VSystem { omega_q, delta };
        let m = build(&spec).unwrap();
        let generic = ultrastrong_mfg_state(m.h_s(), m.coupling().unwrap(), beta, None).unwrap();
        let closed = closed_form_state(&spec, beta, Regime::UltrastrongDerived).unwrap();
        phys &= physical(&generic) && physical(&closed);
        worst = worst.max(trace_distance(&generic, &closed).unwrap());
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-12 && phys && elapsed < Duration::from_secs(1);
    report(
        "3",
        "V-system ultrastrong vs closed form",
        ok,
        format!("max trace distance {worst:.3e}"),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_04_spin_boson_weak_cross_validation() {
    let start = Instant::now();
    let j = ohmic();
    let (omega_q, lambda) = (3.0, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut phys) = (0.0f64, true);
    for _ in 0..10 {
        let theta = rng.gen_range(0.0..=PI);
        let beta = rng.gen_range(0.2..=5.0);
        let model = build(&ModelSpec::SpinBoson { omega_q, theta }).unwrap();
        let r = weak_mfg_state(&model, &j, beta, lambda, &WeakOptions::default()).unwrap();
        phys &= weak_physical(&r);
        let sx = r.rho.expectation(&meanforce::operator::pauli::sigma_x()).re;
        let sz = r.rho.expectation(&meanforce::operator::pauli::sigma_z()).re;
        let (cx, dz) = spin_boson_weak_closed_form(omega_q, theta, &j, beta, lambda).unwrap();
        let sz0 = -(0.5 * beta * omega_q).tanh();
        worst = worst.max((sx - cx).abs()).max((sz - sz0 - dz).abs());
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-7 && phys && elapsed < Duration::from_secs(30);
    report(
        "4",
        "spin-boson weak state vs Bloch closed forms",
        ok,
        format!("max deviation {worst:.3e}"),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_05_v_system_weak_cross_validation() {
    let start = Instant::now();
    let j = ohmic();
    let (omega_q, delta, lambda) = (3.0, 0.1, 0.1);
    let model = build(&ModelSpec::VSystem { omega_q, delta }).unwrap();
    let (mut worst, mut phys, mut in_window) = (0.0f64, true, true);
    for k in 0..20 {
        let t = 0.5 * (40.0f64).powf(k as f64 / 19.0);
        let beta = 1.0 / t;
        let r = weak_mfg_state(&model, &j, beta, lambda, &WeakOptions::default()).unwrap();
        in_window &= r.validity_margin < 1.0;
        phys &= weak_physical(&r);
        let closed = v_system_weak_state(omega_q, delta, &j, beta, lambda).unwrap();
        phys &= physical(&closed);
        worst = worst.max(max_abs(&(r.rho.matrix() - closed.matrix())));
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-7 && phys && in_window && elapsed < Duration::from_secs(60);
    report(
        "5",
        "V-system weak state vs coefficient formulas",
        ok,
        format!("max entry deviation {worst:.3e}, all points valid: {in_window}"),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_06_hermiticity_and_trace() {
    let start = Instant::now();
    let j = ohmic();
    let mut count = 0;
    let mut bad = 0;
    let mut check = |ok: bool| {
        count += 1;
        if !ok {
            bad += 1;
        }
    };
    for &beta in &[0.05, 0.7, 3.0, 20.0] {
        for spec in [
            ModelSpec::SpinBoson {
                omega_q: 1.0,
                theta: FRAC_PI_4,
            },
            ModelSpec::VSystem {
                omega_q: 3.0,
                delta: 0.1,
            },
        ] {
            let m = build(&spec).unwrap();
            for lambda in [0.0, 0.1, 1.0] {
                check(weak_physical(
                    &weak_mfg_state(&m, &j, beta, lambda, &WeakOptions::default()).unwrap(),
                ));
            }
            check(physical(
                &ultrastrong_mfg_state(m.h_s(), m.coupling().unwrap(), beta, None).unwrap(),
            ));
            check(physical(
                &closed_form_state(&spec, beta, Regime::UltrastrongDerived).unwrap(),
            ));
        }
        let tq = build(&ModelSpec::TwoQubit {
            omega_q: 1.0,
            lambda_s: 1.55,
        })
        .unwrap();
        check(physical(&ultrastrong_two_bath(&tq, beta, None).unwrap()));
        check(physical(
            &conjecture_state_two_bath(&tq, beta, None).unwrap(),
        ));
    }
    let m = build(&ModelSpec::SpinBoson {
        omega_q: 1.0,
        theta: FRAC_PI_4,
    })
    .unwrap();
    let bath = discretize_bath(&j, 2, None, 4).unwrap();
    let h = build_total_hamiltonian(&m, &bath, 0.5, 4096).unwrap();
    let r = exact_reduced_gibbs(&h, 1.0).unwrap();
    check(physical(&r.rho) && r.rho.min_eigenvalue() >= -1e-12);
    let elapsed = start.elapsed();
    let ok = bad == 0;
    report(
        "6",
        "every produced state Hermitian with unit trace",
        ok,
        format!("{bad} of {count} failed"),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_07_high_temperature_limit() {
    let start = Instant::now();
    let j = ohmic();
    let model = build(&ModelSpec::SpinBoson {
        omega_q: 1.0,
        theta: FRAC_PI_4,
    })
    .unwrap();
    let betas = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
    let bath = discretize_bath(&j, 2, None, 6).unwrap();
    let mut slopes = Vec::new();
    let mut phys = true;
    for lambda in [0.1, 1.0] {
        let mut dw = Vec::new();
        for &b in &betas {
            let r = weak_mfg_state(&model, &j, b, lambda, &WeakOptions::default()).unwrap();
            phys &= weak_physical(&r);
            dw.push(trace_distance(&r.rho, &r.tau_s).unwrap());
        }
        let spectrum = build_total_hamiltonian(&model, &bath, lambda, 4096)
            .unwrap()
            .diagonalize()
            .unwrap();
        let mut d_oracle = Vec::new();
        for &b in &betas {
            let r = spectrum.reduced_gibbs(b).unwrap();
            phys &= physical(&r.rho);
            d_oracle.push(trace_distance(&r.rho, &gibbs_state(model.h_s(), b).unwrap()).unwrap());
        }
        slopes.push(("weak", lambda, log_slope(&betas, &dw)));
        slopes.push(("oracle", lambda, log_slope(&betas, &d_oracle)));
    }
    let elapsed = start.elapsed();
    let ok = slopes.iter().all(|s| s.2 >= 1.9) && phys && elapsed < Duration::from_secs(120);
    let detail = slopes
        .iter()
        .map(|(w, l, s)| format!("{w} lambda={l}: {s:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    report(
        "7",
        "high-temperature log-log slopes >= 1.9",
        ok,
        detail,
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_08_oracle_quartic_residual() {
    let start = Instant::now();
    let model = build(&ModelSpec::SpinBoson {
        omega_q: 1.0,
        theta: FRAC_PI_4,
    })
    .unwrap();
    let bath = discretize_bath(&ohmic(), 4, None, 5).unwrap();
    let jd = bath.as_spectral_density().unwrap();
    let mut resid = Vec::new();
    let mut phys = true;
    for lambda in [0.1, 0.05] {
        let h = build_total_hamiltonian(&model, &bath, lambda, 4096).unwrap();
        let r = exact_reduced_gibbs(&h, 1.0).unwrap();
        let w = weak_mfg_state(&model, &jd, 1.0, lambda, &WeakOptions::default()).unwrap();
        phys &= physical(&r.rho) && weak_physical(&w);
        resid.push(trace_distance(&r.rho, &w.rho).unwrap());
    }
    let ratio = resid[0] / resid[1];
    let elapsed = start.elapsed();
    let ok = (8.0..=32.0).contains(&ratio) && phys && elapsed < Duration::from_secs(300);
    report(
        "8",
        "oracle residual ratio in [8, 32] when lambda halves",
        ok,
        format!(
            "ratio {ratio:.3} (residuals {:.3e}, {:.3e})",
            resid[0], resid[1]
        ),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_09_ultrastrong_approach() {
    let start = Instant::now();
    let spec = ModelSpec::SpinBoson {
        omega_q: 1.0,
        theta: FRAC_PI_4,
    };
    let model = build(&spec).unwrap();
    let beta = 2.0 / 3.0;
    let target = closed_form_state(&spec, beta, Regime::UltrastrongDerived).unwrap();
    let bath = DiscretizedBath::from_modes(vec![10.0], vec![2.5], 24).unwrap();
    let mut dists = Vec::new();
    let mut worst_diag = 0.0f64;
    let mut phys = true;
    for lambda in [1.0, 2.0, 4.0, 8.0] {
        let h = build_total_hamiltonian(&model, &bath, lambda, 4096).unwrap();
        let r = exact_reduced_gibbs(&h, beta).unwrap();
        phys &= physical(&r.rho);
        worst_diag = worst_diag.max(r.truncation_diagnostic);
        dists.push(trace_distance(&r.rho, &target).unwrap());
    }
    let decreasing = dists.windows(2).all(|w| w[1] < w[0]);
    let elapsed = start.elapsed();
    let ok = decreasing && worst_diag < 1e-4 && phys && elapsed < Duration::from_secs(600);
    report(
        "9",
        "oracle approaches the ultrastrong state as lambda grows",
        ok,
        format!(
            "distances {}, max truncation diagnostic {worst_diag:.1e}",
            dists
                .iter()
                .map(|d| format!("{d:.3e}"))
                .collect::<Vec<_>>()
                .join(" > ")
        ),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_10_derived_vs_conjectured_two_qubit() {
    let start = Instant::now();
    let m = build(&ModelSpec::TwoQubit {
        omega_q: 1.0,
        lambda_s: 1.55,
    })
    .unwrap();
    let hot = 1.0 / 1.5;
    let (d_hot, c_hot) = (
        ultrastrong_two_bath(&m, hot, None).unwrap(),
        conjecture_state_two_bath(&m, hot, None).unwrap(),
    );
    let f = fidelity(&d_hot, &c_hot).unwrap();
    let td_hot = trace_distance(&d_hot, &c_hot).unwrap();
    let cold = 1.0 / 0.2;
    let (d_cold, c_cold) = (
        ultrastrong_two_bath(&m, cold, None).unwrap(),
        conjecture_state_two_bath(&m, cold, None).unwrap(),
    );
    let td_cold = trace_distance(&d_cold, &c_cold).unwrap();
    let phys = [&d_hot, &c_hot, &d_cold, &c_cold]
        .iter()
        .all(|r| physical(r));
    let elapsed = start.elapsed();
    let ok_hot = f > 0.9995;
    let ok_cold = td_cold > 0.05;
    let ok = ok_hot && ok_cold && phys && elapsed < Duration::from_secs(1);
    report(
        "10",
        "derived vs conjectured two-qubit states",
        ok,
        format!(
            "T=3/2: fidelity {f:.6} (trace distance {td_hot:.4}) {}; T=0.2: trace distance {td_cold:.4} vs required > 0.05 {}",
            if ok_hot { "ok" } else { "not ok" },
            if ok_cold { "ok" } else { "not ok" }
        ),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_11_fig1_reproduction() {
    let start = Instant::now();
    let out = fig1_reproduction(&Fig1Config::default(), Vec::new()).unwrap();
    let s = &out.summary;
    let (a, b) = (
        s.peak_is_interior,
        s.decreasing_above_peak && s.high_temperature_ratio < 0.1,
    );
    let c = s.valid_points > 0 && s.ultrastrong_dominates;
    let d = s.margin_at_t_min >= 1.0 && s.margin_at_t_max < 1.0 && s.validity_boundary.is_some();
    let elapsed = start.elapsed();
    let ok = a && b && c && d && elapsed < Duration::from_secs(120);
    report(
        "11",
        "fig1 sweep features",
        ok,
        format!(
            "(a) interior peak {a} at T={:.3}; (b) decay {b}, tail ratio {:.3e}; (c) |G| >= |l^2 g| on {} valid points {c}; \
             (d) margin {:.3} -> {:.3e}, boundary T={:?} {d}",
            s.peak_temperature,
            s.high_temperature_ratio,
            s.valid_points,
            s.margin_at_t_min,
            s.margin_at_t_max,
            s.validity_boundary
        ),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_12_validity_margin_behavior() {
    let start = Instant::now();
    let j = ohmic();
    let model = build(&ModelSpec::SpinBoson {
        omega_q: 3.0,
        theta: FRAC_PI_4,
    })
    .unwrap();
    let betas: Vec<f64> = (0..25)
        .map(|k| 0.05 * (400.0f64).powf(k as f64 / 24.0))
        .collect();
    let lambdas = [0.01, 0.05, 0.1, 0.3, 1.0];
    let mut worst_scaling = 0.0f64;
    let mut base = Vec::new();
    for &beta in &betas {
        let w = WeakCorrection::compute(&model, &j, beta, None).unwrap();
        let m0 = w.validity_margin(1.0);
        for &l in &lambdas {
            let m = w.validity_margin(l);
            worst_scaling = worst_scaling.max((m / (l * l) - m0).abs() / m0);
        }
        base.push(m0);
    }
    let monotone = base.windows(2).all(|p| p[1] > p[0]);
    let elapsed = start.elapsed();
    let ok = worst_scaling < 1e-12 && monotone && elapsed < Duration::from_secs(60);
    report(
        "12",
        "validity margin scales as lambda^2 and grows with beta",
        ok,
        format!("max relative scaling error {worst_scaling:.1e}, monotone in beta {monotone}"),
        elapsed,
    );
    assert!(ok);
}
