//! Ultrastrong-coupling limit: the system equilibrates with respect to the
//! partitioned Hamiltonian `sum_n P_n H_S P_n`, where `P_n` project onto the
//! eigenspaces of the coupling. With two baths the projectors are the
//! products `P_1m (x) P_2n` of local eigenspace projectors.
//!
//! The dephased Gibbs state `sum_n P_n tau_S P_n` is provided alongside for
//! comparison; it agrees with the partitioned Gibbs state at high
//! temperature but not in general.
//!
//! These states are the `lambda -> infinity` limit taken at fixed `beta`.
//! They do not reduce to `tau_S` as `beta -> 0` in the usual sense, because
//! the two limits do not commute.

use serde::Serialize;

use crate::eigenops::{eigenspaces, spectral_norm};
use crate::error::{Error, Result};
use crate::operator::{gibbs_state, kron, CMatrix, DensityMatrix, HermitianOperator};
use crate::system::SystemModel;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectorSet {
    #[serde(skip)]
    pub projectors: Vec<CMatrix>,
    pub eigenvalues: Vec<f64>,
    pub ranks: Vec<usize>,
    pub degenerate: bool,
}

/// `1e-9 * ||X||`.
pub fn default_cluster_tolerance(x: &HermitianOperator) -> Result<f64> {
    Ok(1e-9 * spectral_norm(x)?)
}

fn resolve_tol(x: &HermitianOperator, cluster_tol: Option<f64>) -> Result<f64> {
    let tol = match cluster_tol {
        Some(t) => t,
        None => default_cluster_tolerance(x)?,
    };
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cluster tolerance must be >= 0, got {tol}"
        )));
    }
    Ok(tol)
}

/// Eigenspace projectors of `x`, eigenvalues within `cluster_tol` merged.
pub fn projector_set(x: &HermitianOperator, cluster_tol: Option<f64>) -> Result<ProjectorSet> {
    let tol = resolve_tol(x, cluster_tol)?;
    let levels = eigenspaces(x.matrix(), tol)?;
    let ranks: Vec<usize> = levels
        .iter()
        .map(|l| {
            l.projector
                .diagonal()
                .iter()
                .map(|z| z.re)
                .sum::<f64>()
                .round() as usize
        })
        .collect();
    Ok(ProjectorSet {
        degenerate: ranks.iter().any(|&r| r > 1),
        eigenvalues: levels.iter().map(|l| l.energy).collect(),
        projectors: levels.into_iter().map(|l| l.projector).collect(),
        ranks,
    })
}

fn sandwich_sum(m: &CMatrix, projectors: &[CMatrix]) -> CMatrix {
    let n = m.nrows();
    projectors
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, p| acc + p * m * p)
}

fn product_projectors(model: &SystemModel, cluster_tol: Option<f64>) -> Result<Vec<CMatrix>> {
    let xs = model.couplings();
    if xs.len() != 2 {
        return Err(Error::UnsupportedCombination(
            "two-bath operations need a model with two local couplings".into(),
        ));
    }
    let p1 = projector_set(&xs[0], cluster_tol)?;
    let p2 = projector_set(&xs[1], cluster_tol)?;
    let mut out = Vec::with_capacity(p1.projectors.len() * p2.projectors.len());
    for a in &p1.projectors {
        for b in &p2.projectors {
            out.push(kron(a, b));
        }
    }
    Ok(out)
}

/// `sum_n P_n H_S P_n`.
pub fn partitioned_hamiltonian(
    h_s: &HermitianOperator,
    x: &HermitianOperator,
    cluster_tol: Option<f64>,
) -> Result<HermitianOperator> {
    if h_s.dim() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            h_s.dim(),
            x.dim()
        )));
    }
    let ps = projector_set(x, cluster_tol)?;
    Ok(HermitianOperator::from_hermitian_part(&sandwich_sum(
        h_s.matrix(),
        &ps.projectors,
    )))
}

/// Gibbs state of the partitioned Hamiltonian.
pub fn ultrastrong_mfg_state(
    h_s: &HermitianOperator,
    x: &HermitianOperator,
    beta: f64,
    cluster_tol: Option<f64>,
) -> Result<DensityMatrix> {
    gibbs_state(&partitioned_hamiltonian(h_s, x, cluster_tol)?, beta)
}

/// `sum_{mn} (P_1m (x) P_2n) H_S (P_1m (x) P_2n)` for a two-bath model.
///
/// Two coupled systems sharing one reservoir lead to the same expression.
pub fn partitioned_hamiltonian_two_bath(
    model: &SystemModel,
    cluster_tol: Option<f64>,
) -> Result<HermitianOperator> {
    let ps = product_projectors(model, cluster_tol)?;
    Ok(HermitianOperator::from_hermitian_part(&sandwich_sum(
        model.h_s().matrix(),
        &ps,
    )))
}

pub fn ultrastrong_two_bath(
    model: &SystemModel,
    beta: f64,
    cluster_tol: Option<f64>,
) -> Result<DensityMatrix> {
    gibbs_state(&partitioned_hamiltonian_two_bath(model, cluster_tol)?, beta)
}

/// `sum_n P_n tau_S P_n`.
pub fn conjecture_state(
    h_s: &HermitianOperator,
    x: &HermitianOperator,
    beta: f64,
    cluster_tol: Option<f64>,
) -> Result<DensityMatrix> {
    if h_s.dim() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            h_s.dim(),
            x.dim()
        )));
    }
    let ps = projector_set(x, cluster_tol)?;
    let tau = gibbs_state(h_s, beta)?;
    DensityMatrix::new(HermitianOperator::from_hermitian_part(&sandwich_sum(
        tau.matrix(),
        &ps.projectors,
    )))
}

/// `sum_{mn} (P_1m (x) P_2n) tau_S (P_1m (x) P_2n)`.
pub fn conjecture_state_two_bath(
    model: &SystemModel,
    beta: f64,
    cluster_tol: Option<f64>,
) -> Result<DensityMatrix> {
    let ps = product_projectors(model, cluster_tol)?;
    let tau = gibbs_state(model.h_s(), beta)?;
    DensityMatrix::new(HermitianOperator::from_hermitian_part(&sandwich_sum(
        tau.matrix(),
        &ps,
    )))
}
