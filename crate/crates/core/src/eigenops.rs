//! Energy eigenoperators: the split `X = sum_n X_n` with `[H_S, X_n] = w_n X_n`.
//!
//! Eigenvalues of `H_S` are first grouped into levels (so degenerate
//! eigenspaces are handled through projectors), then the level differences
//! that actually connect through `X` are grouped into Bohr-frequency classes.
//! Both groupings refuse to merge values that are closer than ten times the
//! tolerance but farther apart than the tolerance itself.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{eigh, max_abs, weighted_projector_sum, CMatrix, HermitianOperator};

/// Blocks `P_a X P_b` below this fraction of `max|X|` are treated as zero.
const BLOCK_ZERO_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenOperator {
    pub omega: f64,
    #[serde(skip)]
    pub op: CMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenOpDecomposition {
    /// Sorted by frequency; the `w = 0` entry is always present.
    pub pairs: Vec<EigenOperator>,
    pub gap_tolerance: f64,
}

impl EigenOpDecomposition {
    pub fn frequencies(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.omega).collect()
    }

    pub fn zero(&self) -> &EigenOperator {
        self.pairs
            .iter()
            .find(|p| p.omega == 0.0)
            .expect("the zero-frequency entry is always materialized")
    }

    /// `sum_n X_n`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.zero().op.nrows();
        self.pairs
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, p| acc + &p.op)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Largest eigenvalue modulus.
pub fn spectral_norm(a: &HermitianOperator) -> Result<f64> {
    let es = a.eigensystem()?;
    Ok(es.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// `1e-9 * ||H_S||`.
pub fn default_gap_tolerance(h_s: &HermitianOperator) -> Result<f64> {
    Ok(1e-9 * spectral_norm(h_s)?)
}

/// Groups sorted values whose neighbours differ by at most `tol`; returns the
/// index ranges of the groups.
pub(crate) fn cluster_sorted(values: &[f64], tol: f64) -> Result<Vec<std::ops::Range<usize>>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i < values.len() {
            let sep = values[i] - values[i - 1];
            if sep <= tol {
                continue;
            }
            if sep <= 10.0 * tol {
                return Err(Error::AmbiguousGapClustering {
                    a: values[i - 1],
                    b: values[i],
                    separation: sep,
                    tol,
                });
            }
        }
        groups.push(start..i);
        start = i;
    }
    Ok(groups)
}

pub(crate) struct Level {
    pub energy: f64,
    pub projector: CMatrix,
}

/// Eigenspaces of a Hermitian matrix, clustered with the guard-band rule.
pub(crate) fn eigenspaces(m: &CMatrix, tol: f64) -> Result<Vec<Level>> {
    let es = eigh(m)?;
    let groups = cluster_sorted(&es.eigenvalues, tol)?;
    let n = m.nrows();
    Ok(groups
        .into_iter()
        .map(|r| {
            let energy = es.eigenvalues[r.clone()].iter().sum::<f64>() / r.len() as f64;
            let v = es.eigenvectors.columns(r.start, r.len()).into_owned();
            let ones = vec![1.0; r.len()];
            let projector = if r.len() == n {
                CMatrix::identity(n, n)
            } else {
                weighted_projector_sum(&v, &ones)
            };
            Level { energy, projector }
        })
        .collect())
}

/// Splits `x` into eigenoperators of `h_s`. `gap_tol` must be finite and
/// non-negative.
pub fn decompose(
    h_s: &HermitianOperator,
    x: &HermitianOperator,
    gap_tol: f64,
) -> Result<EigenOpDecomposition> {
    if h_s.dim() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "H_S is {}-dimensional but X is {}-dimensional",
            h_s.dim(),
            x.dim()
        )));
    }
    if !(gap_tol >= 0.0) || !gap_tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gap tolerance must be >= 0, got {gap_tol}"
        )));
    }
    let n = x.dim();
    let xm = x.matrix();
    let levels = eigenspaces(h_s.matrix(), gap_tol)?;
    let zero_cut = BLOCK_ZERO_REL * max_abs(xm);

    let mut x0 = CMatrix::zeros(n, n);
    for l in &levels {
        x0 += &l.projector * xm * &l.projector;
    }

    // (gap, block) for level pairs a above b with a non-vanishing block.
    let mut blocks: Vec<(f64, CMatrix)> = Vec::new();
    for (ia, a) in levels.iter().enumerate() {
        for b in &levels[..ia] {
            let blk = &a.projector * xm * &b.projector;
            if max_abs(&blk) > zero_cut {
                blocks.push((a.energy - b.energy, blk));
            }
        }
    }
    blocks.sort_by(|p, q| p.0.total_cmp(&q.0));
    let gaps: Vec<f64> = blocks.iter().map(|b| b.0).collect();
    let classes = cluster_sorted(&gaps, gap_tol)?;

    let mut positive = Vec::with_capacity(classes.len());
    for r in classes {
        let omega = gaps[r.clone()].iter().sum::<f64>() / r.len() as f64;
        let op = blocks[r]
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, b| acc + &b.1);
        positive.push(EigenOperator { omega, op });
    }

    let mut pairs: Vec<EigenOperator> = positive
        .iter()
        .rev()
        .map(|p| EigenOperator {
            omega: -p.omega,
            op: p.op.adjoint(),
        })
        .collect();
    pairs.push(EigenOperator { omega: 0.0, op: x0 });
    pairs.extend(positive);
    Ok(EigenOpDecomposition {
        pairs,
        gap_tolerance: gap_tol,
    })
}

/// Whether `X^2 = c 1` within `tol` entrywise, with `c = Tr[X^2]/dim`.
pub fn is_x_squared_identity(x: &HermitianOperator, tol: f64) -> (bool, f64) {
    let x2 = x.matrix() * x.matrix();
    let n = x.dim();
    let c = x2.diagonal().iter().map(|z| z.re).sum::<f64>() / n as f64;
    let diff = max_abs(&(x2 - CMatrix::identity(n, n).scale(c)));
    (diff <= tol, c)
}

/// Default tolerance for [`is_x_squared_identity`], relative to `max|X|^2`.
pub fn default_x_squared_tolerance(x: &HermitianOperator) -> f64 {
    1e-10 * x.max_abs().powi(2).max(f64::MIN_POSITIVE)
}
