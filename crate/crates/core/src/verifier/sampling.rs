//! Random interior points, constrained directions and ordered matrix pairs.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cone::{ConePoint, Direction};
use crate::matrix_calculus::{phi_value, psd_sqrt, sym_eig, SymMatrix};
use crate::spectral::FunctionFamily;

/// Deterministic RNG for one trial: the stream is keyed by `(seed, key, trial)`.
pub fn trial_rng(seed: u64, key: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(key)));
    rng.set_stream(trial);
    rng
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit key for a (family, side) configuration.
pub fn config_key(f: &FunctionFamily, side: usize) -> u64 {
    // FNV-1a over the display form
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in format!("{f}/{side}").bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

pub fn random_symmetric(d: usize, rng: &mut impl Rng) -> SymMatrix {
    SymMatrix::new(random_matrix(d, d, rng))
}

/// `W = MᵀM + 10⁻²I`, `v ∈ [0.1, 10]` and `u = vφ(W/v) + s` with
/// `s ∈ [10⁻², 10²]`, both log-uniform.
pub fn sample_interior_point(f: &FunctionFamily, d: usize, rng: &mut impl Rng) -> ConePoint {
    assert!(d >= 1, "side must be positive");
    let m = random_matrix(d, d, rng);
    let w = SymMatrix::new(m.transpose() * m + DMatrix::identity(d, d) * 1e-2);
    let v = log_uniform(rng, 0.1, 10.0);
    let slack = log_uniform(rng, 1e-2, 1e2);
    let persp = v * phi_value(f, &w.scale(1.0 / v)).expect("W ⪰ 10⁻²I is positive definite");
    ConePoint::new(persp + slack, v, w)
}

/// Direction with `v ± q ≥ 0` and `W ± R ⪰ 0` built by congruence from a
/// symmetric `S` with `‖S‖₂ ≤ 1`.
pub fn compat_direction_from(x: &ConePoint, p: f64, q: f64, s: &SymMatrix) -> Direction {
    let root = psd_sqrt(&x.w).expect("eigensolver");
    let r = root.sandwich(s);
    Direction::new(p, q, r)
}

pub fn sample_compat_direction(x: &ConePoint, rng: &mut impl Rng) -> Direction {
    let d = x.side();
    let p = normal(rng);
    let q = rng.random_range(-x.v..=x.v);
    let s = random_symmetric(d, rng);
    let norm = sym_eig(&s).expect("eigensolver").norm();
    let c: f64 = rng.random_range(0.0..=1.0);
    let s = if norm > 0.0 { s.scale(c / norm) } else { s };
    compat_direction_from(x, p, q, &s)
}

/// Unconstrained direction with standard normal packed coordinates.
pub fn sample_line_direction(d: usize, rng: &mut impl Rng) -> Direction {
    let p = normal(rng);
    let q = normal(rng);
    Direction::new(p, q, random_symmetric(d, rng))
}

/// Ordered pair `A = B + CᵀC ⪰ B ≻ 0`, where `C` has a random number of rows.
pub fn sample_ordered_pair(d: usize, rng: &mut impl Rng) -> (SymMatrix, SymMatrix) {
    let n = random_matrix(d, d, rng);
    let b = SymMatrix::new(n.transpose() * n + DMatrix::identity(d, d) * 1e-2);
    let rows = rng.random_range(1..=d);
    let c = random_matrix(rows, d, rng);
    let a = &b + &SymMatrix::new(c.transpose() * c);
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::in_interior;
    use crate::matrix_calculus::min_eigenvalue;

    #[test]
    fn interior_points_are_interior_and_reproducible() {
        for f in FunctionFamily::standard_set() {
            for d in 1..=6 {
                let mut rng = trial_rng(1, config_key(&f, d), 0);
                for _ in 0..50 {
                    let x = sample_interior_point(&f, d, &mut rng);
                    assert!(in_interior(&f, &x, 1e-10), "{f} d={d}");
                    if d == 1 {
                        assert!(x.w.get(0, 0) > 1e-2);
                    }
                }
            }
        }
        let f = FunctionFamily::NegEntropy;
        let a = sample_interior_point(&f, 3, &mut trial_rng(9, 1, 4));
        let b = sample_interior_point(&f, 3, &mut trial_rng(9, 1, 4));
        assert_eq!(a, b);
        let c = sample_interior_point(&f, 3, &mut trial_rng(9, 1, 5));
        assert_ne!(a, c);
    }

    #[test]
    fn compat_directions_satisfy_constraints() {
        let f = FunctionFamily::NegLog;
        let mut rng = trial_rng(2, 0, 0);
        for d in 1..=6 {
            for _ in 0..50 {
                let x = sample_interior_point(&f, d, &mut rng);
                let dir = sample_compat_direction(&x, &mut rng);
                assert!(x.v + dir.q >= 0.0 && x.v - dir.q >= 0.0);
                let wn = sym_eig(&x.w).unwrap().norm();
                assert!(min_eigenvalue(&(&x.w + &dir.r)).unwrap() >= -1e-10 * wn);
                assert!(min_eigenvalue(&(&x.w - &dir.r)).unwrap() >= -1e-10 * wn);
            }
        }
    }

    #[test]
    fn congruence_edge_cases() {
        let f = FunctionFamily::NegLog;
        let x = sample_interior_point(&f, 3, &mut trial_rng(3, 0, 0));
        let zero = compat_direction_from(&x, 0.0, 0.0, &SymMatrix::zeros(3));
        assert_eq!(zero.r.max_abs(), 0.0);
        let full = compat_direction_from(&x, 0.0, 0.0, &SymMatrix::identity(3));
        assert!((&full.r - &x.w).max_abs() <= 1e-12 * (1.0 + x.w.max_abs()));
    }

    #[test]
    fn ordered_pairs_are_ordered() {
        let mut rng = trial_rng(4, 0, 0);
        for d in [2, 3] {
            for _ in 0..50 {
                let (a, b) = sample_ordered_pair(d, &mut rng);
                assert!(min_eigenvalue(&b).unwrap() > 0.0);
                assert!(min_eigenvalue(&(&a - &b)).unwrap() >= -1e-12 * (1.0 + a.max_abs()));
            }
        }
    }
}
