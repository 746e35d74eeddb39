//! Spectral calculus for `φ(W) = tr g(W)` on positive definite matrices.
//!
//! Derivatives use the Daleckii–Krein formulas: with `W = U diag(λ) Uᵀ` and
//! `X̃ = Uᵀ X U`,
//!
//! ```text
//! Dφ(W)[X]        = Σᵢ g'(λᵢ) X̃ᵢᵢ
//! D²φ(W)[X, X]    = Σᵢⱼ g'[λᵢ, λⱼ] X̃ᵢⱼ²
//! D³φ(W)[X, X, X] = 2 Σᵢⱼₖ g'[λᵢ, λⱼ, λₖ] X̃ᵢⱼ X̃ⱼₖ X̃ₖᵢ
//! ```
//!
//! where `g'[·,·]` and `g'[·,·,·]` are divided differences of `g'`.

mod divided_diff;
mod symmetric;

use std::sync::OnceLock;

use nalgebra::DMatrix;

pub use divided_diff::{divided_diffs, DividedDiffTables};
pub use symmetric::{packed_len, side_from_packed_len, sym_eig, EigDecomp, SymMatrix};

use crate::error::{Error, Result};
use crate::spectral::FunctionFamily;

/// A positive definite matrix together with its eigendecomposition and the
/// divided-difference tables of `g'` on its spectrum (built on first use).
#[derive(Debug)]
pub struct SpectralPoint {
    family: FunctionFamily,
    eig: EigDecomp,
    tables: OnceLock<DividedDiffTables>,
}

impl SpectralPoint {
    pub fn new(family: FunctionFamily, w: &SymMatrix) -> Result<Self> {
        Self::from_eig(family, sym_eig(w)?)
    }

    pub fn from_eig(family: FunctionFamily, eig: EigDecomp) -> Result<Self> {
        if !eig.is_positive_definite() {
            return Err(Error::Domain(format!(
                "matrix is not positive definite (λ_min = {:e})",
                eig.min_eigenvalue()
            )));
        }
        Ok(SpectralPoint { family, eig, tables: OnceLock::new() })
    }

    pub fn eig(&self) -> &EigDecomp {
        &self.eig
    }

    pub fn family(&self) -> FunctionFamily {
        self.family
    }

    fn tables(&self) -> &DividedDiffTables {
        self.tables.get_or_init(|| {
            DividedDiffTables::build(&self.family, self.eig.eigenvalues.as_slice(), 1)
                .expect("spectrum certified positive")
        })
    }

    /// `φ(W) = Σ g(λᵢ)`.
    pub fn value(&self) -> f64 {
        self.eig.eigenvalues.iter().map(|&x| self.family.eval(0, x)).sum()
    }

    /// `∇φ(W) = U diag(g'(λ)) Uᵀ`.
    pub fn grad(&self) -> SymMatrix {
        self.eig.map(|x| self.family.eval(1, x))
    }

    /// `⟨∇φ(W), W⟩ = Σ λᵢ g'(λᵢ)`, computed on the spectrum.
    pub fn grad_dot_point(&self) -> f64 {
        self.eig.eigenvalues.iter().map(|&x| x * self.family.eval(1, x)).sum()
    }

    pub fn hess_apply(&self, x: &SymMatrix) -> SymMatrix {
        let xt = self.eig.to_eigenbasis(x);
        let prod = xt.component_mul(&self.tables().dd1);
        self.eig.from_eigenbasis(&prod)
    }

    /// `D²φ(W)[X, X]` as a weighted sum of squares.
    pub fn hess_form(&self, x: &SymMatrix) -> f64 {
        let xt = self.eig.to_eigenbasis(x);
        xt.component_mul(&xt).dot(&self.tables().dd1)
    }

    /// `D³φ(W)[X, X, X]`.
    pub fn d3_form(&self, x: &SymMatrix) -> f64 {
        let xt = self.eig.to_eigenbasis(x);
        third_order_form(self.tables(), &xt)
    }
}

fn third_order_form(t: &DividedDiffTables, xt: &DMatrix<f64>) -> f64 {
    let d = t.side();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            let xij = xt[(i, j)];
            if xij == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for k in 0..d {
                inner += t.dd2(i, j, k) * xt[(j, k)] * xt[(k, i)];
            }
            acc += xij * inner;
        }
    }
    2.0 * acc
}

pub fn phi_value(f: &FunctionFamily, w: &SymMatrix) -> Result<f64> {
    Ok(SpectralPoint::new(*f, w)?.value())
}

pub fn phi_grad(f: &FunctionFamily, w: &SymMatrix) -> Result<SymMatrix> {
    Ok(SpectralPoint::new(*f, w)?.grad())
}

pub fn phi_hess_apply(f: &FunctionFamily, w: &SymMatrix, x: &SymMatrix) -> Result<SymMatrix> {
    check_side(w, x)?;
    Ok(SpectralPoint::new(*f, w)?.hess_apply(x))
}

pub fn phi_d3_form(f: &FunctionFamily, w: &SymMatrix, x: &SymMatrix) -> Result<f64> {
    check_side(w, x)?;
    Ok(SpectralPoint::new(*f, w)?.d3_form(x))
}

/// `h(W) = U diag(h(λ)) Uᵀ` for a scalar `h`, no domain checks.
pub fn matrix_function(w: &SymMatrix, h: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    Ok(sym_eig(w)?.map(h))
}

/// `W^{1/2}` for a positive semidefinite `W` (negative rounding noise clamped).
pub fn psd_sqrt(w: &SymMatrix) -> Result<SymMatrix> {
    matrix_function(w, |x| x.max(0.0).sqrt())
}

pub fn min_eigenvalue(w: &SymMatrix) -> Result<f64> {
    Ok(sym_eig(w)?.min_eigenvalue())
}

fn check_side(w: &SymMatrix, x: &SymMatrix) -> Result<()> {
    if w.side() == x.side() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: w.side(), got: x.side() })
    }
}
