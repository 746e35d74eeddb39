use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::FunctionFamily;

/// First and second divided differences of a scalar kernel on a spectrum.
///
/// `dd1[(i, j)] = h[λᵢ, λⱼ]` and `dd2(i, j, k) = h[λᵢ, λⱼ, λₖ]`, where `h` is
/// `g` itself or one of its derivatives depending on how the table was built.
#[derive(Debug, Clone)]
pub struct DividedDiffTables {
    pub dd1: DMatrix<f64>,
    dd2: Vec<f64>,
    side: usize,
}

impl DividedDiffTables {
    /// Tables for `h = g^(level)` on `eigenvalues`, all of which must be positive.
    pub fn build(f: &FunctionFamily, eigenvalues: &[f64], level: usize) -> Result<Self> {
        if let Some(&bad) = eigenvalues.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Domain(format!("divided differences need positive eigenvalues, got {bad}")));
        }
        let d = eigenvalues.len();
        let lam = eigenvalues;

        let mut dd1 = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let x = f.divided_diff1(level, lam[i], lam[j]);
                dd1[(i, j)] = x;
                dd1[(j, i)] = x;
            }
        }

        let mut dd2 = vec![0.0; d * d * d];
        for i in 0..d {
            for j in i..d {
                for k in j..d {
                    let x = f.divided_diff2(level, lam[i], lam[j], lam[k]);
                    for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                        dd2[(a * d + b) * d + c] = x;
                    }
                }
            }
        }
        Ok(DividedDiffTables { dd1, dd2, side: d })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn dd1(&self, i: usize, j: usize) -> f64 {
        self.dd1[(i, j)]
    }

    pub fn dd2(&self, i: usize, j: usize, k: usize) -> f64 {
        self.dd2[(i * self.side + j) * self.side + k]
    }
}

/// Divided-difference tables of `g` itself.
pub fn divided_diffs(f: &FunctionFamily, eigenvalues: &[f64]) -> Result<DividedDiffTables> {
    DividedDiffTables::build(f, eigenvalues, 0)
}
