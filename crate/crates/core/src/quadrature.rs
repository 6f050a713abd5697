//! Adaptive Gauss-Kronrod integration (21-point rule, bisection of the worst
//! interval), Gauss-Legendre rules, and a few helpers for the semi-infinite
//! and principal-value integrals the bath coefficients need.

// Kronrod nodes and weights are kept at their published digits.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-9,
            rel: 1e-8,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs > 0.0) || !(self.rel >= 0.0) || self.max_intervals == 0 {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerance must have abs > 0, rel >= 0, max_intervals >= 1: {self:?}"
            )));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
            evaluations: self.evaluations + o.evaluations,
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_703_476_931,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights, paired with XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One 21-point Kronrod panel with the QUADPACK error heuristic.
fn qk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Integrates `f` over `[points[0], points[last]]`, using interior points as
/// forced breakpoints (kinks, poles of removed singularities, grid nodes).
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: &Tolerance) -> Result<Estimate> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two integration limits".into(),
        ));
    }
    if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(format!(
            "integration breakpoints must be finite and ascending: {points:?}"
        )));
    }
    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, error) = qk21(&f, w[0], w[1]);
            evaluations += 21;
            heap.push(Panel {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    let mut panels = heap.len();
    loop {
        let value: f64 = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
        let error: f64 = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::IntegralDiverges(
                "integrand produced non-finite values".into(),
            ));
        }
        let target = tol.target(value);
        if error <= target || heap.is_empty() {
            if error <= target {
                return Ok(Estimate {
                    value,
                    error,
                    evaluations,
                });
            }
            return Err(Error::QuadratureNotConverged {
                estimate: error,
                requested: target,
            });
        }
        if panels >= tol.max_intervals {
            return Err(Error::QuadratureNotConverged {
                estimate: error,
                requested: target,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b)
            || (worst.b - worst.a) < 1e-14 * worst.a.abs().max(worst.b.abs())
        {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = qk21(&f, a, b);
            evaluations += 21;
            heap.push(Panel { a, b, value, error });
        }
        panels += 1;
    }
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    (
        x.iter().map(|t| c + h * t).collect(),
        w.iter().map(|v| v * h).collect(),
    )
}

/// Smallest `start * 2^k` beyond which the integral of `abs_f` over the next
/// doubling interval falls below `target`.
pub fn tail_cutoff<F: Fn(f64) -> f64>(abs_f: F, start: f64, target: f64) -> Result<f64> {
    const MAX_DOUBLINGS: usize = 40;
    let probe = Tolerance {
        abs: target * 0.1,
        rel: 1e-3,
        max_intervals: 200,
    };
    let mut omega = start;
    for _ in 0..MAX_DOUBLINGS {
        let piece = match integrate(&abs_f, &[omega, 2.0 * omega], &probe) {
            Ok(e) => e.value,
            Err(Error::QuadratureNotConverged { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if piece <= target {
            return Ok(omega);
        }
        omega *= 2.0;
    }
    Err(Error::IntegralDiverges(format!(
        "integrand tail still above {target:e} at omega = {omega:e}"
    )))
}

/// Principal value of `int_a^b g` for `g` with a simple pole at `c`, by
/// folding the symmetric neighbourhood `[c - d, c + d]` onto itself so the
/// odd part of the pole cancels pointwise.
pub fn principal_value_symmetric<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    c: f64,
    b: f64,
    tol: &Tolerance,
) -> Result<Estimate> {
    if !(a < c && c < b) {
        return Err(Error::InvalidParameter(format!(
            "pole {c} must lie strictly inside ({a}, {b})"
        )));
    }
    let d = (c - a).min(b - c);
    let folded = integrate(|u| g(c + u) + g(c - u), &[0.0, d], tol)?;
    let mut total = folded;
    if c - d > a {
        total = total + integrate(&g, &[a, c - d], tol)?;
    }
    if c + d < b {
        total = total + integrate(&g, &[c + d, b], tol)?;
    }
    Ok(total)
}
