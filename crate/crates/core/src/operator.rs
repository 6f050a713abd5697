//! Dense Hermitian operators, density matrices and the handful of linear
//! algebra primitives the rest of the crate is built on.
//!
//! Storage is `nalgebra::DMatrix<Complex64>`. Hermitian eigendecompositions go
//! through `faer`, which is considerably faster than nalgebra's dense solver at
//! the sizes the exact-diagonalization oracle produces.

use faer::{Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Entrywise absolute tolerance on `A - A^H`.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Absolute tolerance on the trace of a density matrix.
pub const TRACE_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |m - m^H|` entrywise; infinity for non-square input.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Kronecker product with the first factor most significant.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorJson", into = "OperatorJson")]
pub struct HermitianOperator {
    m: CMatrix,
}

impl HermitianOperator {
    /// Validates squareness, finiteness and Hermiticity. Inputs are never
    /// symmetrized.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidParameter(
                "operator dimension must be >= 1".into(),
            ));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter(
                "operator has non-finite entries".into(),
            ));
        }
        let deviation = hermiticity_deviation(&m);
        if deviation > HERMITICITY_TOL {
            return Err(Error::NonHermitianInput { deviation });
        }
        Ok(Self { m })
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    /// Row-major real entries.
    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::from_real(&DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(*v, 0.0);
        }
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(dim, dim),
        }
    }

    /// For matrices that are Hermitian by construction (products such as
    /// `V D V^H`) but carry rounding asymmetry: keeps the Hermitian part.
    pub(crate) fn from_hermitian_part(m: &CMatrix) -> Self {
        Self {
            m: hermitian_part(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.m)
    }

    pub fn trace(&self) -> f64 {
        trace(&self.m).re
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { m: self.m.scale(c) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self {
            m: &self.m + &other.m,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self {
            m: &self.m - &other.m,
        })
    }

    pub fn square(&self) -> Self {
        Self::from_hermitian_part(&(&self.m * &self.m))
    }

    /// `U A U^H` for a unitary `U`.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(
                "unitary has the wrong shape".into(),
            ));
        }
        Ok(Self::from_hermitian_part(&(u * &self.m * u.adjoint())))
    }

    pub fn commutes_with(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && max_abs(&commutator(&self.m, &other.m)) <= tol
    }

    pub fn eigensystem(&self) -> Result<Eigensystem> {
        hermitian_eigensystem(self)
    }
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{a} vs {b}")));
    }
    Ok(())
}

/// Serialized form: flat row-major real and imaginary parts.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorJson {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<OperatorJson> for HermitianOperator {
    type Error = Error;

    fn try_from(j: OperatorJson) -> Result<Self> {
        let n = j.dim;
        if j.re.len() != n * n || j.im.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "dim {n} needs {} entries, got re={} im={}",
                n * n,
                j.re.len(),
                j.im.len()
            )));
        }
        let m = CMatrix::from_fn(n, n, |i, k| {
            Complex64::new(j.re[i * n + k], j.im[i * n + k])
        });
        HermitianOperator::new(m)
    }
}

impl From<HermitianOperator> for OperatorJson {
    fn from(op: HermitianOperator) -> Self {
        let n = op.dim();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                re.push(op.m[(i, k)].re);
                im.push(op.m[(i, k)].im);
            }
        }
        OperatorJson { dim: n, re, im }
    }
}

/// Unit-trace Hermitian operator. Positivity is not enforced: the smallest
/// eigenvalue is recorded so callers can inspect it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityMatrix {
    #[serde(flatten)]
    op: HermitianOperator,
    min_eigenvalue: f64,
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if !((tr - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::NotNormalized { trace: tr });
        }
        let min_eigenvalue = op.eigensystem()?.eigenvalues[0];
        Ok(Self { op, min_eigenvalue })
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(m)?)
    }

    /// Divides by the trace, which must be finite and nonzero.
    pub fn normalized(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if !tr.is_finite() || tr == 0.0 {
            return Err(Error::NotNormalized { trace: tr });
        }
        Self::new(op.scaled(1.0 / tr))
    }

    pub(crate) fn from_parts(op: HermitianOperator, min_eigenvalue: f64) -> Self {
        Self { op, min_eigenvalue }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: HermitianOperator::identity(dim).scaled(1.0 / dim as f64),
            min_eigenvalue: 1.0 / dim as f64,
        }
    }

    /// `|psi><psi|` for a normalized vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let n = psi.len();
        let m = CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Self::new(HermitianOperator::from_hermitian_part(&m))
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.op.m
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol
    }

    /// `Tr[rho O]`.
    pub fn expectation(&self, o: &CMatrix) -> Complex64 {
        let m = &self.op.m;
        let n = m.nrows();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += m[(i, k)] * o[(k, i)];
            }
        }
        acc
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.op.m[(i, j)]
    }
}

/// Eigenvalues ascending with orthonormal column eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Eigensystem {
    /// `V f(diag) V^H`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        weighted_projector_sum(&self.eigenvectors, &weights)
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|l| l)
    }
}

/// `sum_k w_k v_k v_k^H` over the columns of `v`, exactly Hermitian.
pub(crate) fn weighted_projector_sum(v: &CMatrix, weights: &[f64]) -> CMatrix {
    let scaled = CMatrix::from_fn(v.nrows(), v.ncols(), |i, k| v[(i, k)] * weights[k]);
    hermitian_part(&(scaled * v.adjoint()))
}

pub fn hermitian_eigensystem(a: &HermitianOperator) -> Result<Eigensystem> {
    eigh(a.matrix())
}

/// Eigendecomposition of a matrix already known to be Hermitian. Only the
/// lower triangle is read.
pub(crate) fn eigh(m: &CMatrix) -> Result<Eigensystem> {
    let n = m.nrows();
    let real = m.iter().all(|z| z.im == 0.0);
    let (mut values, vectors) = if real {
        let fm = Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        let evd = fm
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::EigensolverFailed)?;
        let s = evd.S();
        let u = evd.U();
        let values: Vec<f64> = (0..n).map(|i| s[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |i, j| Complex64::new(u[(i, j)], 0.0));
        (values, vectors)
    } else {
        let fm = Mat::<faer::c64>::from_fn(n, n, |i, j| {
            let z = m[(i, j)];
            faer::c64::new(z.re, z.im)
        });
        let evd = fm
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::EigensolverFailed)?;
        let s = evd.S();
        let u = evd.U();
        let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
        let vectors = CMatrix::from_fn(n, n, |i, j| {
            let z = u[(i, j)];
            Complex64::new(z.re, z.im)
        });
        (values, vectors)
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigensolverFailed);
    }
    if values.windows(2).all(|w| w[0] <= w[1]) {
        return Ok(Eigensystem {
            eigenvalues: values,
            eigenvectors: vectors,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted = CMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    values = order.iter().map(|&k| values[k]).collect();
    Ok(Eigensystem {
        eigenvalues: values,
        eigenvectors: sorted,
    })
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    Ok(())
}

/// `exp(-beta H) / Tr exp(-beta H)`, with the exponent shifted by the lowest
/// eigenvalue so large `beta` cannot overflow.
pub fn gibbs_state(h: &HermitianOperator, beta: f64) -> Result<DensityMatrix> {
    check_beta(beta)?;
    let es = h.eigensystem()?;
    Ok(gibbs_from_eigensystem(&es, beta))
}

pub(crate) fn gibbs_from_eigensystem(es: &Eigensystem, beta: f64) -> DensityMatrix {
    let e0 = es.eigenvalues[0];
    let w: Vec<f64> = es
        .eigenvalues
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
    let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
    let op = HermitianOperator::from_hermitian_part(&weighted_projector_sum(&es.eigenvectors, &p));
    DensityMatrix::from_parts(op, min)
}

/// Trace over the factors not listed in `keep`; the first factor is the most
/// significant index, matching [`tensor_product`].
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let m = partial_trace_matrix(rho.matrix(), dims, keep)?;
    DensityMatrix::new(HermitianOperator::from_hermitian_part(&m))
}

pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || total != m.nrows() || m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "factor dims {dims:?} do not match a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "keep set must be a non-empty subset of 0..{}",
            dims.len()
        )));
    }
    let mut strides = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|a| !keep.contains(a)).collect();
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let mut out = vec![0usize];
        for &a in factors {
            let mut next = Vec::with_capacity(out.len() * dims[a]);
            for &o in &out {
                for i in 0..dims[a] {
                    next.push(o + i * strides[a]);
                }
            }
            out = next;
        }
        out
    };
    let kept_off = offsets(&keep);
    let traced_off = offsets(&traced);
    let d = kept_off.len();
    let mut out = CMatrix::zeros(d, d);
    for (r, &ro) in kept_off.iter().enumerate() {
        for (c, &co) in kept_off.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced_off {
                acc += m[(ro + t, co + t)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

pub fn tensor_product(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator {
        m: kron(&a.m, &b.m),
    }
}

/// Half the trace norm of `a - b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_dim(a.dim(), b.dim())?;
    trace_norm(&(a.matrix() - b.matrix())).map(|t| 0.5 * t)
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub(crate) fn trace_norm(m: &CMatrix) -> Result<f64> {
    Ok(eigh(&hermitian_part(m))?
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .sum())
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`. Small negative
/// eigenvalues are clipped to zero for the square roots.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_dim(a.dim(), b.dim())?;
    let sa = eigh(a.matrix())?.map(|l| l.max(0.0).sqrt());
    let inner = hermitian_part(&(&sa * b.matrix() * &sa));
    let s: f64 = eigh(&inner)?
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    Ok(s * s)
}

/// Pauli matrices in the `(|e>, |g>)` basis: `sigma_z = diag(1, -1)` and
/// `sigma_plus = |e><g|`.
pub mod pauli {
    use super::CMatrix;
    use num_complex::Complex64;

    fn m2(a: [[Complex64; 2]; 2]) -> CMatrix {
        CMatrix::from_fn(2, 2, |i, j| a[i][j])
    }

    const O: Complex64 = Complex64 { re: 0.0, im: 0.0 };
    const I1: Complex64 = Complex64 { re: 1.0, im: 0.0 };
    const M1: Complex64 = Complex64 { re: -1.0, im: 0.0 };
    const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };
    const MJ: Complex64 = Complex64 { re: 0.0, im: -1.0 };

    pub fn identity() -> CMatrix {
        m2([[I1, O], [O, I1]])
    }
    pub fn sigma_x() -> CMatrix {
        m2([[O, I1], [I1, O]])
    }
    pub fn sigma_y() -> CMatrix {
        m2([[O, MJ], [J, O]])
    }
    pub fn sigma_z() -> CMatrix {
        m2([[I1, O], [O, M1]])
    }
    pub fn sigma_plus() -> CMatrix {
        m2([[O, I1], [O, O]])
    }
    pub fn sigma_minus() -> CMatrix {
        m2([[O, O], [I1, O]])
    }
}
