//! Individual numerical checks of the barrier's defining properties.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::cone::{dot, BarrierPoint, ConePoint, Direction};
use crate::error::{Error, Result};
use crate::linalg::{bordered, solve_equilibrated};
use crate::matrix_calculus::{sym_eig, SymMatrix};
use crate::spectral::FunctionFamily;

use super::sampling::sample_ordered_pair;

/// A signed margin of an inequality `rhs - lhs ≥ 0` together with the scale
/// `1 + |lhs| + |rhs|` used for relative slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    pub margin: f64,
    pub scale: f64,
}

impl Margin {
    fn of(lhs: f64, rhs: f64) -> Self {
        Margin { margin: rhs - lhs, scale: 1.0 + lhs.abs() + rhs.abs() }
    }

    /// Passes iff `margin ≥ -rel·scale`.
    pub fn passes(&self, rel: f64) -> bool {
        self.margin >= -rel * self.scale
    }

    pub fn normalized(&self) -> f64 {
        self.margin / self.scale
    }
}

/// `max_θ |Γ(θũ) − Γ(ũ) + (2+d) log θ|`.
pub fn check_log_homogeneity(f: &FunctionFamily, x: &ConePoint, thetas: &[f64]) -> Result<f64> {
    let base = BarrierPoint::new(f, x)?;
    let g0 = base.value();
    let nu = base.parameter();
    let mut worst: f64 = 0.0;
    for &theta in thetas {
        if !(theta > 0.0) {
            return Err(Error::Domain(format!("scaling factor must be positive, got {theta}")));
        }
        if theta == 1.0 {
            continue;
        }
        let g = BarrierPoint::new(f, &x.scale(theta))?.value();
        worst = worst.max((g - g0 + nu * theta.ln()).abs());
    }
    Ok(worst)
}

/// Verifies `v ± q ≥ 0` and `W ± R ⪰ 0` up to `10⁻¹⁰‖W‖`.
pub fn validate_compat_direction(x: &ConePoint, dir: &Direction) -> Result<()> {
    if x.side() != dir.side() {
        return Err(Error::DimensionMismatch { expected: x.side(), got: dir.side() });
    }
    let vtol = 1e-12 * x.v.abs();
    if x.v - dir.q < -vtol || x.v + dir.q < -vtol {
        return Err(Error::InvalidDirection(format!("|q| = {} exceeds v = {}", dir.q.abs(), x.v)));
    }
    let wnorm = sym_eig(&x.w)?.norm();
    for (sign, m) in [("+", &x.w + &dir.r), ("-", &x.w - &dir.r)] {
        let lmin = sym_eig(&m)?.min_eigenvalue();
        if lmin < -1e-10 * wnorm {
            return Err(Error::InvalidDirection(format!("λ_min(W {sign} R) = {lmin:e}")));
        }
    }
    Ok(())
}

/// `m = −3 D²ζ[p̃,p̃] − D³ζ[p̃,p̃,p̃]`, for directions with `v ± q ≥ 0`, `W ± R ⪰ 0`.
pub fn check_compatibility(f: &FunctionFamily, x: &ConePoint, dir: &Direction) -> Result<Margin> {
    validate_compat_direction(x, dir)?;
    let bp = BarrierPoint::new(f, x)?;
    Ok(compatibility_margin(&bp, dir))
}

pub(crate) fn compatibility_margin(bp: &BarrierPoint, dir: &Direction) -> Margin {
    let d2 = bp.zeta_d2(dir);
    let d3 = bp.zeta_d3(dir);
    Margin::of(d3, -3.0 * d2)
}

/// `D²ζ ≤ 0` as a margin `0 − D²ζ`.
pub(crate) fn concavity_margin(bp: &BarrierPoint, dir: &Direction) -> Margin {
    Margin::of(bp.zeta_d2(dir), 0.0)
}

/// `2(D²Γ[p̃,p̃])^{3/2} − |D³Γ[p̃,p̃,p̃]|`.
pub fn check_self_concordance_line(f: &FunctionFamily, x: &ConePoint, dir: &Direction) -> Result<Margin> {
    if x.side() != dir.side() {
        return Err(Error::DimensionMismatch { expected: x.side(), got: dir.side() });
    }
    let bp = BarrierPoint::new(f, x)?;
    self_concordance_margin(&bp, dir)
}

pub(crate) fn self_concordance_margin(bp: &BarrierPoint, dir: &Direction) -> Result<Margin> {
    let d2 = bp.d2_dir(dir);
    if !(d2 > 0.0) {
        return Err(Error::InvalidDirection(format!("D²Γ[p̃,p̃] = {d2:e} is not positive")));
    }
    let d3 = bp.d3_dir(dir);
    Ok(Margin::of(d3.abs(), 2.0 * d2.powf(1.5)))
}

/// `⟨∇Γ, H⁻¹∇Γ⟩`, which equals the barrier parameter for a logarithmically
/// homogeneous barrier.
pub fn check_barrier_parameter(f: &FunctionFamily, x: &ConePoint) -> Result<f64> {
    barrier_parameter_of(&BarrierPoint::new(f, x)?)
}

pub(crate) fn barrier_parameter_of(bp: &BarrierPoint) -> Result<f64> {
    let g = DVector::from_vec(bp.gradient());
    // bordered with a = ∇ζ/ζ so the dominant a aᵀ term is never formed
    let (c, a) = bp.hess_split();
    let n = g.len();
    let k = bordered(&c, &a, &DMatrix::zeros(0, n));
    let mut rhs = DVector::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from(&g);
    let sol = solve_equilibrated(&k, &rhs).ok_or(Error::SingularHessian)?;
    Ok(g.dot(&sol.rows(0, n)))
}

/// Residuals of `⟨∇Γ,ũ⟩ = −(2+d)` (absolute) and `Hũ = −∇Γ` (relative to `‖∇Γ‖`).
pub fn euler_residuals(bp: &BarrierPoint) -> (f64, f64) {
    let x = bp.point();
    let g = bp.gradient();
    let first = (dot(&g, &x.to_packed()) + bp.parameter()).abs();
    let hx = bp.hess_apply(&x.as_direction());
    let diff: f64 = hx.iter().zip(&g).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt();
    (first, diff / dot(&g, &g).sqrt())
}

/// `λ_min(g'(A) − g'(B))` for a single ordered pair, with the scale `1 + ‖g'(A)‖`.
pub fn monotonicity_gap(f: &FunctionFamily, a: &SymMatrix, b: &SymMatrix) -> Result<(f64, f64)> {
    let ea = sym_eig(a)?;
    let eb = sym_eig(b)?;
    if !(eb.min_eigenvalue() > 0.0) {
        return Err(Error::Domain("B must be positive definite".into()));
    }
    let ga = ea.map(|x| f.eval(1, x));
    let gb = eb.map(|x| f.eval(1, x));
    let gap = sym_eig(&(&ga - &gb))?.min_eigenvalue();
    let scale = 1.0 + sym_eig(&ga)?.norm();
    Ok((gap, scale))
}

/// Worst monotonicity witness over random ordered pairs of sides 2 and 3.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityResult {
    /// Smallest `λ_min(g'(A) − g'(B)) / (1 + ‖g'(A)‖)` seen.
    pub worst_normalized: f64,
    pub violations: usize,
    pub trials: usize,
    pub witness: Option<(SymMatrix, SymMatrix)>,
}

pub fn check_matrix_monotonicity(
    f: &FunctionFamily,
    rng: &mut impl Rng,
    trials: usize,
    slack: f64,
) -> Result<MonotonicityResult> {
    let mut out = MonotonicityResult { worst_normalized: f64::INFINITY, violations: 0, trials, witness: None };
    for t in 0..trials {
        let d = 2 + t % 2;
        let (a, b) = sample_ordered_pair(d, rng);
        let (gap, scale) = monotonicity_gap(f, &a, &b)?;
        if gap < -slack * scale {
            out.violations += 1;
        }
        if gap / scale < out.worst_normalized {
            out.worst_normalized = gap / scale;
            out.witness = Some((a, b));
        }
    }
    Ok(out)
}
