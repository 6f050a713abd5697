//! Exact reduced Gibbs state of a finite surrogate: the continuum bath is
//! replaced by a few truncated harmonic modes on Gauss-Legendre nodes, the
//! system-plus-bath Hamiltonian is diagonalized exactly and the bath traced
//! out.
//!
//! ```text
//! H = H_S + l^2 Q_disc X^2 + sum_k w_k b_k^H b_k + l X sum_k g_k (b_k + b_k^H)
//! ```
//!
//! with `g_k = sqrt(J(w_k) v_k)` for quadrature weights `v_k` and
//! `Q_disc = sum_k g_k^2 / w_k`, so the counterterm makes the surrogate
//! exactly the positive form of the coupled Hamiltonian on the chosen modes.
//! Basis states are `|s> (x) |n_1 ... n_K>` with the system index most
//! significant.

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{check_beta, trace_distance, CMatrix, DensityMatrix, HermitianOperator};
use crate::quadrature::gauss_legendre_on;
use crate::spectral::{bose_occupation, SpectralDensityConfig, SpectralForm};
use crate::system::SystemModel;
use crate::ultrastrong::ultrastrong_mfg_state;
use crate::weak::{weak_mfg_state, WeakOptions};

pub const DEFAULT_DIMENSION_CAP: usize = 4096;
/// Largest top-Fock population for which a result counts as converged.
pub const TRUNCATION_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscretizedBath {
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
    pub fock_cutoff: usize,
    pub q_disc: f64,
}

impl DiscretizedBath {
    /// Explicit modes. Frequencies must be positive and strictly increasing.
    pub fn from_modes(omegas: Vec<f64>, couplings: Vec<f64>, fock_cutoff: usize) -> Result<Self> {
        if omegas.is_empty() || omegas.len() != couplings.len() {
            return Err(Error::InvalidParameter(format!(
                "need matching non-empty mode lists, got {} frequencies and {} couplings",
                omegas.len(),
                couplings.len()
            )));
        }
        if omegas.iter().any(|w| !(*w > 0.0) || !w.is_finite())
            || omegas.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::InvalidParameter(
                "mode frequencies must be positive, finite and strictly increasing".into(),
            ));
        }
        if couplings.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParameter(
                "mode couplings must be finite and >= 0".into(),
            ));
        }
        if fock_cutoff < 2 {
            return Err(Error::InvalidParameter(format!(
                "Fock cutoff must be >= 2, got {fock_cutoff}"
            )));
        }
        let q_disc = omegas.iter().zip(&couplings).map(|(w, g)| g * g / w).sum();
        Ok(Self {
            omegas,
            couplings,
            fock_cutoff,
            q_disc,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.omegas.len()
    }

    /// The same modes as a discrete spectral density, so the second-order
    /// state of exactly this surrogate can be formed.
    pub fn as_spectral_density(&self) -> Result<SpectralDensityConfig> {
        SpectralDensityConfig::discrete(self.omegas.clone(), self.couplings.clone())
    }

    pub fn with_cutoff(&self, fock_cutoff: usize) -> Result<Self> {
        Self::from_modes(self.omegas.clone(), self.couplings.clone(), fock_cutoff)
    }
}

/// Gauss-Legendre discretization of `J` on `(lo, omega_max]`.
///
/// `lo` is zero except for a tabulated density whose first value is zero,
/// where it is the first grid point. `omega_max = None` takes the spectral
/// density's own cutoff. A discrete density is passed through unchanged.
pub fn discretize_bath(
    j: &SpectralDensityConfig,
    n_modes: usize,
    omega_max: Option<f64>,
    fock_cutoff: usize,
) -> Result<DiscretizedBath> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter("n_modes must be >= 1".into()));
    }
    let lo = match j.form() {
        SpectralForm::Discrete { omegas, couplings } => {
            return DiscretizedBath::from_modes(omegas.clone(), couplings.clone(), fock_cutoff);
        }
        SpectralForm::Tabulated { grid, values, .. } if values[0] == 0.0 => grid[0],
        _ => 0.0,
    };
    let hi = match omega_max {
        Some(w) => w,
        None => j.omega_max()?,
    };
    if !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "omega_max must exceed {lo}, got {hi}"
        )));
    }
    let (nodes, weights) = gauss_legendre_on(n_modes, lo, hi);
    let couplings = nodes
        .iter()
        .zip(&weights)
        .map(|(&w, &v)| (j.density(w) * v).sqrt())
        .collect();
    DiscretizedBath::from_modes(nodes, couplings, fock_cutoff)
}

/// Smallest cutoff `c >= 2` with `4 n_beta(w_min) < c`, plus the squared
/// displacement `(l g_k ||X|| / w_k)^2` of the most displaced mode, doubled.
pub fn default_fock_cutoff(bath: &DiscretizedBath, beta: f64, lambda: f64, x_norm: f64) -> usize {
    let n = if beta > 0.0 {
        bose_occupation(beta, bath.omegas[0])
    } else {
        f64::INFINITY
    };
    let thermal = (4.0 * n).floor() as usize + 1;
    let shift = bath
        .omegas
        .iter()
        .zip(&bath.couplings)
        .map(|(w, g)| (lambda * g * x_norm / w).powi(2))
        .fold(0.0, f64::max);
    thermal.max(2).saturating_add((2.0 * shift).ceil() as usize)
}

/// The total Hamiltonian in coordinate form; dense only when diagonalized.
#[derive(Clone, Debug)]
pub struct TotalHamiltonian {
    pub system_dim: usize,
    pub fock_cutoff: usize,
    pub n_modes: usize,
    entries: Vec<(usize, usize, Complex64)>,
    real: bool,
}

impl TotalHamiltonian {
    pub fn dim(&self) -> usize {
        self.system_dim * self.fock_cutoff.pow(self.n_modes as u32)
    }

    /// Dense matrix, for small instances and tests.
    pub fn to_operator(&self) -> Result<HermitianOperator> {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for &(i, k, v) in &self.entries {
            m[(i, k)] += v;
        }
        HermitianOperator::new(m)
    }

    /// Bytes held by the dense matrix and its eigenvectors.
    pub fn memory_estimate_bytes(&self) -> usize {
        let scalar = if self.real { 8 } else { 16 };
        3 * self.dim() * self.dim() * scalar
    }

    pub fn diagonalize(&self) -> Result<OracleSpectrum> {
        let n = self.dim();
        let vectors = if self.real {
            let mut m = Mat::<f64>::zeros(n, n);
            for &(i, k, v) in &self.entries {
                m[(i, k)] += v.re;
            }
            let evd = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| Error::EigensolverFailed)?;
            let energies: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
            (energies, Vectors::Real(evd.U().to_owned()))
        } else {
            let mut m = Mat::<faer::c64>::zeros(n, n);
            for &(i, k, v) in &self.entries {
                m[(i, k)] += faer::c64::new(v.re, v.im);
            }
            let evd = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| Error::EigensolverFailed)?;
            let energies: Vec<f64> = (0..n).map(|i| evd.S()[i].re).collect();
            (energies, Vectors::Complex(evd.U().to_owned()))
        };
        let (energies, vectors) = vectors;
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::EigensolverFailed);
        }
        Ok(OracleSpectrum {
            energies,
            vectors,
            system_dim: self.system_dim,
            fock_cutoff: self.fock_cutoff,
            n_modes: self.n_modes,
        })
    }
}

/// `H_S + l^2 Q_disc X^2 + sum_k w_k n_k + l X sum_k g_k (b_k + b_k^H)`.
pub fn build_total_hamiltonian(
    model: &SystemModel,
    bath: &DiscretizedBath,
    lambda: f64,
    dimension_cap: usize,
) -> Result<TotalHamiltonian> {
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite, got {lambda}"
        )));
    }
    let x = model.coupling()?.matrix();
    let hs = model.h_s().matrix();
    let ds = hs.nrows();
    let c = bath.fock_cutoff;
    let k_modes = bath.n_modes();
    let dim = (c as u128)
        .checked_pow(k_modes as u32)
        .and_then(|b| b.checked_mul(ds as u128))
        .filter(|&d| d <= dimension_cap as u128)
        .ok_or(Error::DimensionCap {
            dim: usize::try_from(
                (c as u128)
                    .saturating_pow(k_modes as u32)
                    .saturating_mul(ds as u128),
            )
            .unwrap_or(usize::MAX),
            cap: dimension_cap,
        })? as usize;
    let nb = dim / ds;
    let strides: Vec<usize> = (0..k_modes)
        .map(|k| c.pow((k_modes - 1 - k) as u32))
        .collect();
    let occupation = |b: usize, k: usize| (b / strides[k]) % c;

    let l2q = lambda * lambda * bath.q_disc;
    let hs_eff = hs + (x * x).scale(l2q);
    let nonzero = |z: Complex64| z.re != 0.0 || z.im != 0.0;

    let mut entries = Vec::new();
    for b in 0..nb {
        let e_bath: f64 = (0..k_modes)
            .map(|k| bath.omegas[k] * occupation(b, k) as f64)
            .sum();
        for s in 0..ds {
            for t in 0..ds {
                let mut v = hs_eff[(s, t)];
                if s == t {
                    v += e_bath;
                }
                if nonzero(v) {
                    entries.push((s * nb + b, t * nb + b, v));
                }
            }
        }
        // b_k lowers |n_k> to |n_k - 1>
        for k in 0..k_modes {
            let n = occupation(b, k);
            if n == 0 {
                continue;
            }
            let amp = lambda * bath.couplings[k] * (n as f64).sqrt();
            if amp == 0.0 {
                continue;
            }
            let lower = b - strides[k];
            for s in 0..ds {
                for t in 0..ds {
                    let xv = x[(s, t)];
                    if nonzero(xv) {
                        entries.push((s * nb + b, t * nb + lower, xv * amp));
                        entries.push((t * nb + lower, s * nb + b, xv.conj() * amp));
                    }
                }
            }
        }
    }
    let real = entries.iter().all(|e| e.2.im == 0.0);
    Ok(TotalHamiltonian {
        system_dim: ds,
        fock_cutoff: c,
        n_modes: k_modes,
        entries,
        real,
    })
}

#[derive(Clone, Debug)]
enum Vectors {
    Real(Mat<f64>),
    Complex(Mat<faer::c64>),
}

/// Eigendecomposition of a total Hamiltonian, reusable across temperatures.
#[derive(Clone, Debug)]
pub struct OracleSpectrum {
    energies: Vec<f64>,
    vectors: Vectors,
    system_dim: usize,
    fock_cutoff: usize,
    n_modes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub rho: DensityMatrix,
    /// `(system dimension, Fock cutoff, number of modes)`.
    pub dims_used: (usize, usize, usize),
    /// Largest population of the top Fock level over all modes.
    pub truncation_diagnostic: f64,
    pub converged: bool,
}

impl OracleSpectrum {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Reduced state of `exp(-beta H)/Z`, read directly from the eigenvectors.
    pub fn reduced_gibbs(&self, beta: f64) -> Result<OracleResult> {
        check_beta(beta)?;
        let n = self.energies.len();
        let ds = self.system_dim;
        let nb = n / ds;
        let e0 = self.energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = self
            .energies
            .iter()
            .map(|&e| {
                if beta == 0.0 {
                    1.0
                } else {
                    (-beta * (e - e0)).exp()
                }
            })
            .collect();
        let z: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / z).collect();
        // states below this weight cannot move any entry at double precision
        let keep: Vec<usize> = (0..n).filter(|&i| p[i] > 1e-18).collect();

        let mut rho = CMatrix::zeros(ds, ds);
        let mut populations = vec![0.0; n];
        match &self.vectors {
            Vectors::Real(u) => {
                for &m in &keep {
                    let col = u.col(m);
                    for s in 0..ds {
                        for t in s..ds {
                            let mut acc = 0.0;
                            for b in 0..nb {
                                acc += col[s * nb + b] * col[t * nb + b];
                            }
                            rho[(s, t)] += Complex64::new(p[m] * acc, 0.0);
                        }
                    }
                    for (i, pop) in populations.iter_mut().enumerate() {
                        *pop += p[m] * col[i] * col[i];
                    }
                }
            }
            Vectors::Complex(u) => {
                for &m in &keep {
                    let col = u.col(m);
                    for s in 0..ds {
                        for t in s..ds {
                            let mut acc = Complex64::new(0.0, 0.0);
                            for b in 0..nb {
                                let (a, c) = (col[s * nb + b], col[t * nb + b]);
                                acc += Complex64::new(a.re, a.im) * Complex64::new(c.re, -c.im);
                            }
                            rho[(s, t)] += acc * p[m];
                        }
                    }
                    for (i, pop) in populations.iter_mut().enumerate() {
                        let a = col[i];
                        *pop += p[m] * (a.re * a.re + a.im * a.im);
                    }
                }
            }
        }
        for s in 0..ds {
            for t in 0..s {
                rho[(s, t)] = rho[(t, s)].conj();
            }
            rho[(s, s)].im = 0.0;
        }
        let c = self.fock_cutoff;
        let k_modes = self.n_modes;
        let mut top = vec![0.0; k_modes];
        for (i, pop) in populations.iter().enumerate() {
            let b = i % nb;
            for (k, tk) in top.iter_mut().enumerate() {
                let stride = c.pow((k_modes - 1 - k) as u32);
                if (b / stride) % c == c - 1 {
                    *tk += pop;
                }
            }
        }
        let diag = top.into_iter().fold(0.0, f64::max);
        let tr: f64 = (0..ds).map(|s| rho[(s, s)].re).sum();
        let rho = DensityMatrix::normalized(HermitianOperator::new(rho.unscale(tr))?)?;
        Ok(OracleResult {
            rho,
            dims_used: (ds, c, k_modes),
            truncation_diagnostic: diag,
            converged: diag < TRUNCATION_THRESHOLD,
        })
    }
}

/// Diagonalize and reduce in one step.
pub fn exact_reduced_gibbs(h: &TotalHamiltonian, beta: f64) -> Result<OracleResult> {
    h.diagonalize()?.reduced_gibbs(beta)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_modes: usize,
    pub cutoff: usize,
    pub lambda: f64,
    pub beta: f64,
    pub trace_distance_to_weak: f64,
    pub trace_distance_to_ultrastrong: f64,
    pub truncation_diagnostic: f64,
}

/// Oracle states over a grid of `(n_modes, cutoff)`, compared with the
/// second-order state for the continuum `J` and with the ultrastrong state.
/// Rows come back in grid order.
pub fn convergence_sweep(
    model: &SystemModel,
    j: &SpectralDensityConfig,
    beta: f64,
    lambda: f64,
    grid: &[(usize, usize)],
    dimension_cap: usize,
) -> Result<Vec<SweepRow>> {
    let weak = weak_mfg_state(model, j, beta, lambda, &WeakOptions::default())?.rho;
    let strong = ultrastrong_mfg_state(model.h_s(), model.coupling()?, beta, None)?;
    grid.par_iter()
        .map(|&(n_modes, cutoff)| {
            let bath = discretize_bath(j, n_modes, None, cutoff)?;
            let h = build_total_hamiltonian(model, &bath, lambda, dimension_cap)?;
            let r = exact_reduced_gibbs(&h, beta)?;
            Ok(SweepRow {
                n_modes,
                cutoff,
                lambda,
                beta,
                trace_distance_to_weak: trace_distance(&r.rho, &weak)?,
                trace_distance_to_ultrastrong: trace_distance(&r.rho, &strong)?,
                truncation_diagnostic: r.truncation_diagnostic,
            })
        })
        .collect()
}
