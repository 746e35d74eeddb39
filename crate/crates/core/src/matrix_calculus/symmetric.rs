use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real symmetric matrix. Every constructor symmetrizes its input.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

/// Length of the packed form of a side-`d` symmetric matrix.
pub fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Side `d` for a packed vector length, if the length is triangular.
pub fn side_from_packed_len(len: usize) -> Option<usize> {
    let d = (((8 * len + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    (d..=d + 1).find(|&s| packed_len(s) == len)
}

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "symmetric matrix must be square");
        let sym = (&m + m.transpose()) * 0.5;
        SymMatrix(sym)
    }

    pub fn zeros(d: usize) -> Self {
        SymMatrix(DMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        SymMatrix(DMatrix::identity(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Row-major rows; panics if the rows are ragged or not square.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let d = rows.len();
        let m = DMatrix::from_fn(d, d, |i, j| {
            assert_eq!(rows[i].len(), d, "row {i} has wrong length");
            rows[i][j]
        });
        SymMatrix::new(m)
    }

    /// Inverse of [`SymMatrix::to_packed`].
    pub fn from_packed(d: usize, packed: &[f64]) -> Result<Self> {
        if packed.len() != packed_len(d) {
            return Err(Error::DimensionMismatch { expected: packed_len(d), got: packed.len() });
        }
        let mut m = DMatrix::zeros(d, d);
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                let x = if i == j { packed[k] } else { packed[k] * std::f64::consts::FRAC_1_SQRT_2 };
                m[(i, j)] = x;
                m[(j, i)] = x;
                k += 1;
            }
        }
        Ok(SymMatrix(m))
    }

    /// Row-major upper triangle with off-diagonal entries scaled by √2, so that
    /// the Euclidean dot product of packed vectors is `tr(XY)`.
    pub fn to_packed(&self) -> Vec<f64> {
        let d = self.side();
        let mut out = Vec::with_capacity(packed_len(d));
        for i in 0..d {
            for j in i..d {
                let x = self.0[(i, j)];
                out.push(if i == j { x } else { x * std::f64::consts::SQRT_2 });
            }
        }
        out
    }

    pub fn side(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Trace inner product `tr(XY)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }

    /// `M · self · Mᵀ`.
    pub fn congruence(&self, m: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::new(m * &self.0 * m.transpose())
    }

    /// `self · other · self` (kept symmetric).
    pub fn sandwich(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix::new(&self.0 * &other.0 * &self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, s: f64) -> SymMatrix {
        self.scale(s)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_packed().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let packed = Vec::<f64>::deserialize(de)?;
        let d = side_from_packed_len(packed.len()).ok_or_else(|| {
            serde::de::Error::custom(format!("packed length {} is not d(d+1)/2", packed.len()))
        })?;
        SymMatrix::from_packed(d, &packed).map_err(serde::de::Error::custom)
    }
}

/// Spectral factorization `W = U diag(λ) Uᵀ`, eigenvalues sorted descending.
///
/// The eigensolver's eigenvalues carry absolute error of order `ε‖W‖`, which
/// is large relative to the small ones. They are replaced by the Rayleigh
/// quotients `uᵢᵀ W uᵢ` evaluated in doubled precision: the computed `U` is
/// orthogonal to working precision, so by Ostrowski's theorem the diagonal of
/// `UᵀWU` approximates each eigenvalue to small relative error.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

pub fn sym_eig(w: &SymMatrix) -> Result<EigDecomp> {
    let d = w.side();
    let eig = SymmetricEigen::try_new(w.0.clone(), f64::EPSILON, 1000 * (d + 1))
        .ok_or(Error::ConvergenceFailure)?;

    let refined: Vec<f64> = eig.eigenvectors.column_iter().map(|u| rayleigh_quotient(&w.0, u.as_slice())).collect();

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| refined[b].total_cmp(&refined[a]));

    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&k| refined[k]));
    let mut eigenvectors = DMatrix::zeros(d, d);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        // fix the sign: largest-magnitude component positive
        if v[v.iamax()] < 0.0 {
            v.neg_mut();
        }
        eigenvectors.set_column(col, &v);
    }
    Ok(EigDecomp { eigenvalues, eigenvectors })
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `Σ xᵢ yᵢ` as an unevaluated sum `hi + lo`, accurate as if computed in
/// twice the working precision.
fn dot2(terms: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let (mut hi, mut lo) = (0.0, 0.0);
    for (x, y) in terms {
        let p = x * y;
        let e = x.mul_add(y, -p);
        let (s, t) = two_sum(hi, p);
        hi = s;
        lo += t + e;
    }
    two_sum(hi, lo)
}

fn rayleigh_quotient(w: &DMatrix<f64>, u: &[f64]) -> f64 {
    let d = u.len();
    let wu: Vec<(f64, f64)> = (0..d).map(|j| dot2((0..d).map(|k| (w[(j, k)], u[k])))).collect();
    let (hi, lo) = dot2(u.iter().zip(&wu).flat_map(|(&uj, &(h, l))| [(uj, h), (uj, l)]));
    hi + lo
}

impl EigDecomp {
    pub fn side(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.side() - 1]
    }

    /// Spectral norm of the factored matrix.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.amax()
    }

    /// `U diag(h(λ)) Uᵀ`.
    pub fn map(&self, h: impl Fn(f64) -> f64) -> SymMatrix {
        let vals = self.eigenvalues.map(h);
        self.from_eigenbasis_diag(&vals)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map(|x| x)
    }

    pub fn from_eigenbasis_diag(&self, diag: &DVector<f64>) -> SymMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= diag[j];
        }
        SymMatrix::new(scaled * u.transpose())
    }

    /// `Uᵀ X U`.
    pub fn to_eigenbasis(&self, x: &SymMatrix) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        let m = u.transpose() * &x.0 * u;
        (&m + m.transpose()) * 0.5
    }

    /// `U M Uᵀ`.
    pub fn from_eigenbasis(&self, m: &DMatrix<f64>) -> SymMatrix {
        let u = &self.eigenvectors;
        SymMatrix::new(u * m * u.transpose())
    }

    /// Positive-definiteness gate: `λ_min > 1e-12·(1 + ‖W‖)`.
    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue() > 1e-12 * (1.0 + self.norm())
    }
}
