//! The cone `K = cl{(u, v, W) : v > 0, W ≻ 0, u ≥ v φ(W/v)}` and its barrier
//!
//! ```text
//! Γ(u, v, W) = -log ζ - log v - logdet W,    ζ = u - v φ(W/v).
//! ```
//!
//! Vectors over the cone use the packed layout `[u, v, svec(W)]` of length
//! `2 + d(d+1)/2`, where `svec` scales off-diagonal entries by √2.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_calculus::{packed_len, sym_eig, EigDecomp, SpectralPoint, SymMatrix};
use crate::spectral::FunctionFamily;

/// A point `ũ = (u, v, W)` of the ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub u: f64,
    pub v: f64,
    #[serde(rename = "W_packed")]
    pub w: SymMatrix,
}

/// A direction `p̃ = (p, q, R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub p: f64,
    pub q: f64,
    #[serde(rename = "R_packed")]
    pub r: SymMatrix,
}

/// Packed dimension `2 + d(d+1)/2`.
pub fn cone_dim(d: usize) -> usize {
    2 + packed_len(d)
}

fn split_packed(d: usize, x: &[f64]) -> Result<(f64, f64, SymMatrix)> {
    if x.len() != cone_dim(d) {
        return Err(Error::DimensionMismatch { expected: cone_dim(d), got: x.len() });
    }
    Ok((x[0], x[1], SymMatrix::from_packed(d, &x[2..])?))
}

fn join_packed(a: f64, b: f64, m: &SymMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(cone_dim(m.side()));
    out.push(a);
    out.push(b);
    out.extend(m.to_packed());
    out
}

impl ConePoint {
    pub fn new(u: f64, v: f64, w: SymMatrix) -> Self {
        ConePoint { u, v, w }
    }

    pub fn side(&self) -> usize {
        self.w.side()
    }

    pub fn dim(&self) -> usize {
        cone_dim(self.side())
    }

    pub fn from_packed(d: usize, x: &[f64]) -> Result<Self> {
        let (u, v, w) = split_packed(d, x)?;
        Ok(ConePoint { u, v, w })
    }

    pub fn to_packed(&self) -> Vec<f64> {
        join_packed(self.u, self.v, &self.w)
    }

    pub fn scale(&self, theta: f64) -> ConePoint {
        ConePoint { u: theta * self.u, v: theta * self.v, w: self.w.scale(theta) }
    }

    /// `self + t·dir`.
    pub fn step(&self, dir: &Direction, t: f64) -> ConePoint {
        ConePoint { u: self.u + t * dir.p, v: self.v + t * dir.q, w: &self.w + &dir.r.scale(t) }
    }

    /// The radial direction `p̃ = ũ`.
    pub fn as_direction(&self) -> Direction {
        Direction { p: self.u, q: self.v, r: self.w.clone() }
    }

    pub fn norm(&self) -> f64 {
        dot(&self.to_packed(), &self.to_packed()).sqrt()
    }
}

impl Direction {
    pub fn new(p: f64, q: f64, r: SymMatrix) -> Self {
        Direction { p, q, r }
    }

    pub fn zeros(d: usize) -> Self {
        Direction { p: 0.0, q: 0.0, r: SymMatrix::zeros(d) }
    }

    pub fn side(&self) -> usize {
        self.r.side()
    }

    pub fn from_packed(d: usize, x: &[f64]) -> Result<Self> {
        let (p, q, r) = split_packed(d, x)?;
        Ok(Direction { p, q, r })
    }

    pub fn to_packed(&self) -> Vec<f64> {
        join_packed(self.p, self.q, &self.r)
    }

    pub fn scale(&self, c: f64) -> Direction {
        Direction { p: c * self.p, q: c * self.q, r: self.r.scale(c) }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Spectral data of `W̃ = W/v` taken from the eigendecomposition of `W`
/// itself, which avoids rounding `W/v` entrywise before factorizing.
fn perspective_spectrum(f: &FunctionFamily, eig: &EigDecomp, v: f64) -> Result<SpectralPoint> {
    let scaled = EigDecomp { eigenvalues: eig.eigenvalues.map(|l| l / v), eigenvectors: eig.eigenvectors.clone() };
    SpectralPoint::from_eig(*f, scaled)
}

/// `ζ(ũ) = u - v φ(W/v)`; defined on `v > 0, W ≻ 0`.
pub fn zeta(f: &FunctionFamily, x: &ConePoint) -> Result<f64> {
    if !(x.v > 0.0) {
        return Err(Error::Domain(format!("ζ requires v > 0, got {}", x.v)));
    }
    let sp = perspective_spectrum(f, &sym_eig(&x.w)?, x.v)?;
    Ok(x.u - x.v * sp.value())
}

/// Tolerance-gated interior test:
/// `v > tol(1+|v|)`, `λ_min(W) > tol(1+‖W‖)` and `ζ > tol(1+|u|+|vφ(W/v)|)`.
pub fn in_interior(f: &FunctionFamily, x: &ConePoint, tol: f64) -> bool {
    interior_status(f, x, tol).is_ok()
}

/// Like [`in_interior`], but says which gate failed.
pub fn interior_status(f: &FunctionFamily, x: &ConePoint, tol: f64) -> Result<f64> {
    let fail = |msg: String| Err(Error::NotInterior(msg));
    if !x.u.is_finite() || !x.v.is_finite() || !x.w.is_finite() {
        return fail("non-finite coordinates".into());
    }
    if !(x.v > tol * (1.0 + x.v.abs())) {
        return fail(format!("v = {} is not strictly positive", x.v));
    }
    let eig = match sym_eig(&x.w) {
        Ok(e) => e,
        Err(e) => return fail(e.to_string()),
    };
    if x.side() > 0 && !(eig.min_eigenvalue() > tol * (1.0 + eig.norm())) {
        return fail(format!("λ_min(W) = {:e} is not strictly positive", eig.min_eigenvalue()));
    }
    let sp = match perspective_spectrum(f, &eig, x.v) {
        Ok(sp) => sp,
        Err(e) => return fail(e.to_string()),
    };
    let persp = x.v * sp.value();
    let z = x.u - persp;
    if !(z > tol * (1.0 + x.u.abs() + persp.abs())) {
        return fail(format!("ζ = {z:e} is not strictly positive"));
    }
    Ok(z)
}

/// Value, gradient and optional dense Hessian of `Γ` at one point.
#[derive(Debug, Clone)]
pub struct BarrierEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Option<DMatrix<f64>>,
}

/// Per-point evaluation context: the eigendecomposition of `W/v` is computed
/// once and shared by every oracle.
#[derive(Debug)]
pub struct BarrierPoint {
    point: ConePoint,
    /// φ at `W̃ = W/v`.
    spectral: SpectralPoint,
    phi: f64,
    /// `∇φ(W̃)`.
    grad_phi: SymMatrix,
    /// `-φ(W̃) + ⟨∇φ(W̃), W̃⟩`, the v-partial of ζ.
    sigma: f64,
    zeta: f64,
    /// Eigenvalues of `W` itself, in the eigenbasis of `spectral`.
    w_eigs: DVector<f64>,
}

impl BarrierPoint {
    pub fn new(f: &FunctionFamily, x: &ConePoint) -> Result<Self> {
        if !(x.v > 0.0) || !x.u.is_finite() || !x.v.is_finite() {
            return Err(Error::NotInterior(format!("v = {} is not strictly positive", x.v)));
        }
        let eig = sym_eig(&x.w).map_err(|e| Error::NotInterior(e.to_string()))?;
        let spectral = perspective_spectrum(f, &eig, x.v).map_err(|e| Error::NotInterior(e.to_string()))?;
        let phi = spectral.value();
        let zeta = x.u - x.v * phi;
        if !(zeta > 0.0) {
            return Err(Error::NotInterior(format!("ζ = {zeta:e} is not strictly positive")));
        }
        let grad_phi = spectral.grad();
        let sigma = -phi + spectral.grad_dot_point();
        let w_eigs = eig.eigenvalues;
        Ok(BarrierPoint { point: x.clone(), spectral, phi, grad_phi, sigma, zeta, w_eigs })
    }

    pub fn point(&self) -> &ConePoint {
        &self.point
    }

    pub fn side(&self) -> usize {
        self.point.side()
    }

    /// Barrier parameter `2 + d`.
    pub fn parameter(&self) -> f64 {
        2.0 + self.side() as f64
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn phi_tilde(&self) -> f64 {
        self.phi
    }

    fn logdet_w(&self) -> f64 {
        self.w_eigs.iter().map(|x| x.ln()).sum()
    }

    pub fn value(&self) -> f64 {
        -self.zeta.ln() - self.point.v.ln() - self.logdet_w()
    }

    /// `W⁻¹` via the shared eigenbasis.
    pub fn w_inverse(&self) -> SymMatrix {
        self.spectral.eig().from_eigenbasis_diag(&self.w_eigs.map(|x| 1.0 / x))
    }

    /// Gradient blocks `(∂u, ∂v, ∂W)`.
    pub fn gradient_parts(&self) -> (f64, f64, SymMatrix) {
        let z = self.zeta;
        let gu = -1.0 / z;
        let gv = -self.sigma / z - 1.0 / self.point.v;
        let gw = &self.grad_phi.scale(1.0 / z) - &self.w_inverse();
        (gu, gv, gw)
    }

    pub fn gradient(&self) -> Vec<f64> {
        let (gu, gv, gw) = self.gradient_parts();
        join_packed(gu, gv, &gw)
    }

    /// `ξ = v⁻¹(R − q v⁻¹ W)`.
    pub fn xi(&self, dir: &Direction) -> SymMatrix {
        xi_unchecked(&self.point, dir)
    }

    /// `Dζ(ũ)[p̃]`.
    pub fn zeta_d1(&self, dir: &Direction) -> f64 {
        dir.p + dir.q * self.sigma - self.grad_phi.inner(&dir.r)
    }

    /// `D²ζ(ũ)[p̃, p̃] = -v D²φ(W̃)[ξ, ξ]`.
    pub fn zeta_d2(&self, dir: &Direction) -> f64 {
        -self.point.v * self.spectral.hess_form(&self.xi(dir))
    }

    /// `D³ζ(ũ)[p̃, p̃, p̃] = -v D³φ(W̃)[ξ, ξ, ξ] + 3q D²φ(W̃)[ξ, ξ]`.
    pub fn zeta_d3(&self, dir: &Direction) -> f64 {
        let xi = self.xi(dir);
        -self.point.v * self.spectral.d3_form(&xi) + 3.0 * dir.q * self.spectral.hess_form(&xi)
    }

    /// `W^{-1/2} R W^{-1/2}` expressed in the eigenbasis of `W`.
    fn scaled_direction(&self, r: &SymMatrix) -> DMatrix<f64> {
        let rt = self.spectral.eig().to_eigenbasis(r);
        let s = self.w_eigs.map(|x| 1.0 / x.sqrt());
        DMatrix::from_fn(rt.nrows(), rt.ncols(), |i, j| rt[(i, j)] * s[i] * s[j])
    }

    pub fn hess_apply(&self, dir: &Direction) -> Vec<f64> {
        let (hu, hv, hw) = self.hess_apply_parts(dir);
        join_packed(hu, hv, &hw)
    }

    pub fn hess_apply_parts(&self, dir: &Direction) -> (f64, f64, SymMatrix) {
        let v = self.point.v;
        let z = self.zeta;
        let dz = self.zeta_d1(dir);
        let m = self.spectral.hess_apply(&self.xi(dir));
        let wtilde = self.spectral.eig().reconstruct();

        // ∇ζ ∇ζᵀ p̃ / ζ²  −  ∇²ζ p̃ / ζ  +  Hessian of −log v − logdet W
        let c = dz / (z * z);
        let hu = c;
        let hv = c * self.sigma - wtilde.inner(&m) / z + dir.q / (v * v);
        let rt = self.spectral.eig().to_eigenbasis(&dir.r);
        let we = &self.w_eigs;
        let winv_r_winv = self
            .spectral
            .eig()
            .from_eigenbasis(&DMatrix::from_fn(rt.nrows(), rt.ncols(), |i, j| rt[(i, j)] / (we[i] * we[j])));
        let hw = &(&self.grad_phi.scale(-c) + &m.scale(1.0 / z)) + &winv_r_winv;
        (hu, hv, hw)
    }

    /// The Hessian as `a aᵀ + C` with `a = ∇ζ/ζ` and
    /// `C = −∇²ζ/ζ + ∇²(−log v − logdet W)`, both dense and packed.
    ///
    /// When `ζ` is small the rank-one term dominates `H`; keeping the parts
    /// apart lets solvers avoid forming it.
    pub fn hess_split(&self) -> (DMatrix<f64>, DVector<f64>) {
        let d = self.side();
        let n = cone_dim(d);
        let z = self.zeta;
        let v = self.point.v;
        let wtilde = self.spectral.eig().reconstruct();
        let winv = self.w_inverse();
        let mut c = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            let dir = Direction::from_packed(d, &e).expect("basis vector has packed length");
            let m = self.spectral.hess_apply(&self.xi(&dir));
            let cv = -wtilde.inner(&m) / z + dir.q / (v * v);
            let cw = &m.scale(1.0 / z) + &winv.sandwich(&dir.r);
            c.set_column(k, &DVector::from_vec(join_packed(0.0, cv, &cw)));
            e[k] = 0.0;
        }
        let a = join_packed(1.0 / z, self.sigma / z, &self.grad_phi.scale(-1.0 / z));
        (c, DVector::from_vec(a))
    }

    /// Dense Hessian in packed coordinates, assembled column by column.
    pub fn hess_dense(&self) -> DMatrix<f64> {
        let d = self.side();
        let n = cone_dim(d);
        let mut h = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            let dir = Direction::from_packed(d, &e).expect("basis vector has packed length");
            let col = self.hess_apply(&dir);
            h.set_column(k, &DVector::from_vec(col));
            e[k] = 0.0;
        }
        h
    }

    /// `D²Γ(ũ)[p̃, p̃]`.
    pub fn d2_dir(&self, dir: &Direction) -> f64 {
        let z = self.zeta;
        let z1 = self.zeta_d1(dir) / z;
        let z2 = self.zeta_d2(dir) / z;
        let qv = dir.q / self.point.v;
        let s = self.scaled_direction(&dir.r);
        -z2 + z1 * z1 + qv * qv + s.norm_squared()
    }

    /// `D³Γ(ũ)[p̃, p̃, p̃]`.
    pub fn d3_dir(&self, dir: &Direction) -> f64 {
        let z = self.zeta;
        let z1 = self.zeta_d1(dir) / z;
        let z2 = self.zeta_d2(dir) / z;
        let z3 = self.zeta_d3(dir) / z;
        let qv = dir.q / self.point.v;
        let s = self.scaled_direction(&dir.r);
        let tr_s3 = (&s * &s).component_mul(&s).sum();
        -z3 + 3.0 * z1 * z2 - 2.0 * z1 * z1 * z1 - 2.0 * qv * qv * qv - 2.0 * tr_s3
    }

    pub fn eval(&self, with_hessian: bool) -> BarrierEval {
        BarrierEval {
            value: self.value(),
            gradient: self.gradient(),
            hessian: with_hessian.then(|| self.hess_dense()),
        }
    }
}

fn xi_unchecked(x: &ConePoint, dir: &Direction) -> SymMatrix {
    let v = x.v;
    (&dir.r - &x.w.scale(dir.q / v)).scale(1.0 / v)
}

fn check_dir(x: &ConePoint, dir: &Direction) -> Result<()> {
    if x.side() == dir.side() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: x.side(), got: dir.side() })
    }
}

/// `ξ = v⁻¹(R − q v⁻¹ W)`.
pub fn xi_of(x: &ConePoint, dir: &Direction) -> Result<SymMatrix> {
    check_dir(x, dir)?;
    if !(x.v > 0.0) {
        return Err(Error::Domain(format!("ξ requires v > 0, got {}", x.v)));
    }
    Ok(xi_unchecked(x, dir))
}

pub fn barrier_value(f: &FunctionFamily, x: &ConePoint) -> Result<f64> {
    Ok(BarrierPoint::new(f, x)?.value())
}

pub fn barrier_grad(f: &FunctionFamily, x: &ConePoint) -> Result<Vec<f64>> {
    Ok(BarrierPoint::new(f, x)?.gradient())
}

pub fn barrier_hess_apply(f: &FunctionFamily, x: &ConePoint, dir: &Direction) -> Result<Vec<f64>> {
    check_dir(x, dir)?;
    Ok(BarrierPoint::new(f, x)?.hess_apply(dir))
}

pub fn barrier_hess_dense(f: &FunctionFamily, x: &ConePoint) -> Result<DMatrix<f64>> {
    Ok(BarrierPoint::new(f, x)?.hess_dense())
}

pub fn barrier_eval(f: &FunctionFamily, x: &ConePoint, with_hessian: bool) -> Result<BarrierEval> {
    Ok(BarrierPoint::new(f, x)?.eval(with_hessian))
}

pub fn zeta_d2(f: &FunctionFamily, x: &ConePoint, dir: &Direction) -> Result<f64> {
    check_dir(x, dir)?;
    Ok(BarrierPoint::new(f, x)?.zeta_d2(dir))
}

pub fn zeta_d3(f: &FunctionFamily, x: &ConePoint, dir: &Direction) -> Result<f64> {
    check_dir(x, dir)?;
    Ok(BarrierPoint::new(f, x)?.zeta_d3(dir))
}

pub fn barrier_d2_dir(f: &FunctionFamily, x: &ConePoint, dir: &Direction) -> Result<f64> {
    check_dir(x, dir)?;
    Ok(BarrierPoint::new(f, x)?.d2_dir(dir))
}

pub fn barrier_d3_dir(f: &FunctionFamily, x: &ConePoint, dir: &Direction) -> Result<f64> {
    check_dir(x, dir)?;
    Ok(BarrierPoint::new(f, x)?.d3_dir(dir))
}
