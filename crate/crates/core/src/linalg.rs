//! Dense solves shared by the verifier and the solver.

use nalgebra::{DMatrix, DVector};

/// Solves `K x = rhs` by LU with partial pivoting after symmetric diagonal
/// equilibration by row maxima, followed by one step of iterative refinement.
/// Returns `None` when the factorization is singular or the result is not
/// finite.
pub(crate) fn solve_equilibrated(k: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let n = k.nrows();
    let scale = DVector::from_fn(n, |i, _| {
        let m = k.row(i).amax();
        if m > 0.0 {
            1.0 / m.sqrt()
        } else {
            1.0
        }
    });
    let ks = DMatrix::from_fn(n, n, |i, j| scale[i] * k[(i, j)] * scale[j]);
    let rs = rhs.component_mul(&scale);
    let lu = ks.clone().lu();
    let mut sol = lu.solve(&rs)?;
    let resid = &rs - &ks * &sol;
    sol += lu.solve(&resid)?;
    let sol = sol.component_mul(&scale);
    sol.iter().all(|x| x.is_finite()).then_some(sol)
}

/// Embeds `C` (n×n), the border vector `a` and constraint rows `A` (m×n)
/// into the symmetric matrix
///
/// ```text
/// [ C  Aᵀ  a ]
/// [ A  0   0 ]
/// [ aᵀ 0  −1 ]
/// ```
///
/// whose leading block solve is equivalent to one with `C + a aᵀ`.
pub(crate) fn bordered(c: &DMatrix<f64>, a: &DVector<f64>, constraints: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    let m = constraints.nrows();
    let mut k = DMatrix::zeros(n + m + 1, n + m + 1);
    k.view_mut((0, 0), (n, n)).copy_from(&((c + c.transpose()) * 0.5));
    k.view_mut((n, 0), (m, n)).copy_from(constraints);
    k.view_mut((0, n), (n, m)).copy_from(&constraints.transpose());
    k.view_mut((0, n + m), (n, 1)).copy_from(a);
    k.view_mut((n + m, 0), (1, n)).copy_from(&a.transpose());
    k[(n + m, n + m)] = -1.0;
    k
}
