use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{kron, CMatrix, HermitianOperator};

/// A system Hamiltonian with its coupling operator(s).
///
/// Single-bath models carry one coupling on the full space. Two-bath models
/// live on a bipartite space `d1 x d2` and carry one local coupling per
/// subsystem, each acting on its own factor only.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemModel {
    h_s: HermitianOperator,
    couplings: Vec<HermitianOperator>,
    dims: Vec<usize>,
}

impl SystemModel {
    pub fn single(h_s: HermitianOperator, x: HermitianOperator) -> Result<Self> {
        if h_s.dim() != x.dim() {
            return Err(Error::DimensionMismatch(format!(
                "H_S is {}-dimensional but X is {}-dimensional",
                h_s.dim(),
                x.dim()
            )));
        }
        let d = h_s.dim();
        Ok(Self {
            h_s,
            couplings: vec![x],
            dims: vec![d],
        })
    }

    /// `x1` acts on the first factor, `x2` on the second.
    pub fn two_bath(
        h_s: HermitianOperator,
        x1: HermitianOperator,
        x2: HermitianOperator,
    ) -> Result<Self> {
        let dims = vec![x1.dim(), x2.dim()];
        if dims[0] * dims[1] != h_s.dim() {
            return Err(Error::DimensionMismatch(format!(
                "local couplings of dims {dims:?} do not match H_S of dim {}",
                h_s.dim()
            )));
        }
        Ok(Self {
            h_s,
            couplings: vec![x1, x2],
            dims,
        })
    }

    pub fn h_s(&self) -> &HermitianOperator {
        &self.h_s
    }

    pub fn dim(&self) -> usize {
        self.h_s.dim()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn is_single_bath(&self) -> bool {
        self.couplings.len() == 1
    }

    /// The coupling of a single-bath model.
    pub fn coupling(&self) -> Result<&HermitianOperator> {
        if !self.is_single_bath() {
            return Err(Error::UnsupportedCombination(
                "this operation needs a model with a single bath coupling".into(),
            ));
        }
        Ok(&self.couplings[0])
    }

    /// Local coupling operators, one per bath.
    pub fn couplings(&self) -> &[HermitianOperator] {
        &self.couplings
    }

    /// Coupling `k` embedded in the full space.
    pub fn embedded_coupling(&self, k: usize) -> Result<CMatrix> {
        if k >= self.couplings.len() {
            return Err(Error::InvalidParameter(format!(
                "no coupling with index {k}"
            )));
        }
        if self.is_single_bath() {
            return Ok(self.couplings[0].matrix().clone());
        }
        let (d1, d2) = (self.dims[0], self.dims[1]);
        Ok(if k == 0 {
            kron(self.couplings[0].matrix(), &CMatrix::identity(d2, d2))
        } else {
            kron(&CMatrix::identity(d1, d1), self.couplings[1].matrix())
        })
    }
}
