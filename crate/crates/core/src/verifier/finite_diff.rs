//! Finite-difference cross-checks of the barrier oracles.
//!
//! Each oracle is compared against differences of the level below it
//! (value → gradient → Hessian action → third directional derivative) along a
//! line `t ↦ ũ + t p̃`. The direction is first rescaled to unit local norm
//! `D²Γ(ũ)[p̃,p̃] = 1`, so the stencil stays well inside the Dikin ellipsoid and
//! the step is expressed in that intrinsic unit.
//!
//! The fourth-order central stencil is used throughout: evaluating `Γ` loses
//! digits to the cancellation in `ζ = u − vφ(W/v)`, and the second-order
//! stencil at `h = ε^{1/3}` amplifies that noise past `10⁻⁶`.

use crate::cone::{dot, BarrierPoint, Direction};
use crate::error::{Error, Result};
use crate::spectral::FunctionFamily;

/// Step for the fourth-order central stencil, `ε^{1/5}`.
pub fn fd_step() -> f64 {
    f64::EPSILON.powf(0.2)
}

/// `(f(−2h) − 8f(−h) + 8f(h) − f(2h)) / 12h`.
fn central5<T, F>(h: f64, mut eval: F) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<T>,
    T: AsRef<[f64]>,
{
    let m2 = eval(-2.0 * h)?;
    let m1 = eval(-h)?;
    let p1 = eval(h)?;
    let p2 = eval(2.0 * h)?;
    let (m2, m1, p1, p2) = (m2.as_ref(), m1.as_ref(), p1.as_ref(), p2.as_ref());
    Ok((0..p1.len()).map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h)).collect())
}

/// `|a − b| / max(|a|, |b|, 1)`: relative error, with unit floor since line
/// derivatives along a unit-local-norm direction are of order one.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Rescales `dir` to unit local norm at `bp`.
pub fn normalize_local(bp: &BarrierPoint, dir: &Direction) -> Result<Direction> {
    let d2 = bp.d2_dir(dir);
    if !(d2 > 0.0) || !d2.is_finite() {
        return Err(Error::InvalidDirection(format!("local norm² = {d2:e}")));
    }
    Ok(dir.scale(1.0 / d2.sqrt()))
}

fn shifted(f: &FunctionFamily, bp: &BarrierPoint, dir: &Direction, t: f64) -> Result<BarrierPoint> {
    BarrierPoint::new(f, &bp.point().step(dir, t))
}

/// `⟨∇Γ, p̃⟩` against differences of `Γ`.
pub fn gradient_fd_error(f: &FunctionFamily, bp: &BarrierPoint, dir: &Direction) -> Result<f64> {
    let dir = normalize_local(bp, dir)?;
    let fd = central5(fd_step(), |t| shifted(f, bp, &dir, t).map(|p| [p.value()]))?;
    Ok(relative_error(dot(&bp.gradient(), &dir.to_packed()), fd[0]))
}

/// `H p̃` against differences of `∇Γ`, as `‖Hp̃ − fd‖ / max(‖Hp̃‖, ‖fd‖, 1)`.
pub fn hessian_fd_error(f: &FunctionFamily, bp: &BarrierPoint, dir: &Direction) -> Result<f64> {
    let dir = normalize_local(bp, dir)?;
    let fd = central5(fd_step(), |t| shifted(f, bp, &dir, t).map(|p| p.gradient()))?;
    let hp = bp.hess_apply(&dir);
    let diff = hp.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(diff / norm(&hp).max(norm(&fd)).max(1.0))
}

/// `D³Γ[p̃,p̃,p̃]` against differences of `t ↦ D²Γ(ũ + t p̃)[p̃,p̃]`.
pub fn third_order_fd_error(f: &FunctionFamily, bp: &BarrierPoint, dir: &Direction) -> Result<f64> {
    let dir = normalize_local(bp, dir)?;
    let fd = central5(fd_step(), |t| shifted(f, bp, &dir, t).map(|p| [p.d2_dir(&dir)]))?;
    Ok(relative_error(bp.d3_dir(&dir), fd[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::sampling::{sample_interior_point, sample_line_direction, trial_rng};

    #[test]
    fn oracles_agree_with_differences() {
        let mut worst = [0.0f64; 3];
        for f in FunctionFamily::standard_set() {
            for d in 1..=6 {
                let mut rng = trial_rng(21, d as u64, 0);
                for _ in 0..30 {
                    let x = sample_interior_point(&f, d, &mut rng);
                    let bp = BarrierPoint::new(&f, &x).unwrap();
                    let dir = sample_line_direction(d, &mut rng);
                    worst[0] = worst[0].max(gradient_fd_error(&f, &bp, &dir).unwrap());
                    worst[1] = worst[1].max(hessian_fd_error(&f, &bp, &dir).unwrap());
                    worst[2] = worst[2].max(third_order_fd_error(&f, &bp, &dir).unwrap());
                }
            }
        }
        assert!(worst[0] <= 1e-6, "{worst:?}");
        assert!(worst[1] <= 1e-5, "{worst:?}");
        assert!(worst[2] <= 1e-4, "{worst:?}");
    }

    #[test]
    fn detects_a_wrong_gradient() {
        // perturbing the point but not the oracle must be visible
        let f = FunctionFamily::NegLog;
        let x = sample_interior_point(&f, 2, &mut trial_rng(22, 0, 0));
        let bp = BarrierPoint::new(&f, &x).unwrap();
        let other = BarrierPoint::new(&f, &x.scale(1.3)).unwrap();
        let dir = sample_line_direction(2, &mut trial_rng(22, 0, 1));
        let dir = normalize_local(&bp, &dir).unwrap();
        let h = fd_step();
        let fd = (shifted(&f, &bp, &dir, h).unwrap().value() - shifted(&f, &bp, &dir, -h).unwrap().value()) / (2.0 * h);
        assert!(relative_error(dot(&other.gradient(), &dir.to_packed()), fd) > 1e-3);
    }
}
