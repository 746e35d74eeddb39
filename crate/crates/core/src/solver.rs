//! Feasible-start path-following for `min ⟨c, x⟩ s.t. Ax = b, x ∈ K`.
//!
//! Each outer iteration centers `t⟨c, x⟩ + Γ(x)` on `{Ax = b}` with damped
//! Newton steps and then raises `t` by the short-step factor `1 + 0.2/√ν`,
//! where `ν = 2 + d` is the barrier parameter.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cone::{cone_dim, in_interior, BarrierPoint, ConePoint, Direction};
use crate::error::{Error, Result};
use crate::linalg::{bordered, solve_equilibrated};
use crate::matrix_calculus::{phi_value, SymMatrix};
use crate::spectral::FunctionFamily;

/// Interior gate applied to the start point and to every iterate. `ζ` is
/// computed with absolute error of a few `ε(|u| + |vφ(W/v)|)`, and the gate
/// sits just above that floor: near the optimum `ζ ≈ 1/t` must be able to get
/// small enough for the gap `ν/t` to reach its tolerance.
pub const INTERIOR_TOL: f64 = 64.0 * f64::EPSILON;
const FEASIBILITY_TOL: f64 = 1e-8;

/// `min ⟨c, x⟩` subject to `Ax = b` and `x ∈ K`, with a strictly feasible
/// start `x0`. Vectors use the packed `[u, v, svec(W)]` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemFile", into = "ProblemFile")]
pub struct ConicProblem {
    family: FunctionFamily,
    side: usize,
    c: Vec<f64>,
    a: DMatrix<f64>,
    b: Vec<f64>,
    x0: ConePoint,
}

/// JSON form of a problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProblemFile {
    family: FunctionFamily,
    d: usize,
    c: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    x0: ConePoint,
}

impl TryFrom<ProblemFile> for ConicProblem {
    type Error = Error;

    fn try_from(p: ProblemFile) -> Result<Self> {
        let n = cone_dim(p.d);
        if let Some(row) = p.a.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
        let a = DMatrix::from_fn(p.a.len(), n, |i, j| p.a[i][j]);
        ConicProblem::new(p.family, p.d, p.c, a, p.b, p.x0)
    }
}

impl From<ConicProblem> for ProblemFile {
    fn from(p: ConicProblem) -> Self {
        let a = p.a.row_iter().map(|r| r.iter().copied().collect()).collect();
        ProblemFile { family: p.family, d: p.side, c: p.c, a, b: p.b, x0: p.x0 }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl ConicProblem {
    /// Validates shapes, full row rank of `A`, `Ax0 = b` and interiority of `x0`.
    pub fn new(
        family: FunctionFamily,
        side: usize,
        c: Vec<f64>,
        a: DMatrix<f64>,
        b: Vec<f64>,
        x0: ConePoint,
    ) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidConfig("side must be at least 1".into()));
        }
        let n = cone_dim(side);
        if c.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: c.len() });
        }
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
        }
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
        }
        if x0.side() != side {
            return Err(Error::DimensionMismatch { expected: side, got: x0.side() });
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&c) || !finite(&b) || !finite(a.as_slice()) {
            return Err(Error::InvalidConfig("problem data must be finite".into()));
        }
        if !full_row_rank(&a) {
            return Err(Error::RankDeficient);
        }
        let problem = ConicProblem { family, side, c, a, b, x0 };
        let resid = problem.primal_residual(&problem.x0);
        if resid > FEASIBILITY_TOL * (1.0 + norm(&problem.b)) {
            return Err(Error::InfeasibleStart(format!("‖Ax0 − b‖ = {resid:e}")));
        }
        if !in_interior(&family, &problem.x0, INTERIOR_TOL) {
            return Err(Error::InfeasibleStart("x0 is not in the interior of the cone".into()));
        }
        Ok(problem)
    }

    /// `min u` subject to `v = 1` and `W = w0`; the optimum is `u = φ(w0)`.
    pub fn epigraph_pinning(family: FunctionFamily, w0: &SymMatrix) -> Result<Self> {
        let d = w0.side();
        let n = cone_dim(d);
        let mut a = DMatrix::zeros(n - 1, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
        }
        let mut b = vec![1.0];
        b.extend(w0.to_packed());
        let u0 = phi_value(&family, w0)? + 1.0;
        ConicProblem::new(family, d, unit(n, 0), a, b, ConePoint::new(u0, 1.0, w0.clone()))
    }

    /// `min u` subject to `v = 1` and `tr W = 1`. For the negative entropy the
    /// optimum is `−log d` at `W = I/d`.
    pub fn unit_trace(family: FunctionFamily, d: usize, w0: &SymMatrix) -> Result<Self> {
        let n = cone_dim(d);
        let mut a = DMatrix::zeros(2, n);
        a[(0, 1)] = 1.0;
        let trace_row: Vec<f64> = SymMatrix::identity(d).to_packed();
        for (j, t) in trace_row.into_iter().enumerate() {
            a[(1, j + 2)] = t;
        }
        let u0 = phi_value(&family, w0)? + 1.0;
        ConicProblem::new(family, d, unit(n, 0), a, vec![1.0, 1.0], ConePoint::new(u0, 1.0, w0.clone()))
    }

    pub fn family(&self) -> FunctionFamily {
        self.family
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn objective(&self) -> &[f64] {
        &self.c
    }

    pub fn constraints(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn start(&self) -> &ConePoint {
        &self.x0
    }

    /// Returns a copy with row `i` of `A` and `b[i]` multiplied by `s[i]`.
    pub fn with_scaled_rows(&self, s: &[f64]) -> Result<Self> {
        if s.len() != self.b.len() {
            return Err(Error::DimensionMismatch { expected: self.b.len(), got: s.len() });
        }
        let mut out = self.clone();
        for (i, &si) in s.iter().enumerate() {
            out.a.row_mut(i).scale_mut(si);
            out.b[i] *= si;
        }
        if !full_row_rank(&out.a) {
            return Err(Error::RankDeficient);
        }
        Ok(out)
    }

    pub fn objective_value(&self, x: &ConePoint) -> f64 {
        dot(&self.c, &x.to_packed())
    }

    pub fn primal_residual(&self, x: &ConePoint) -> f64 {
        let ax = &self.a * DVector::from_vec(x.to_packed());
        ax.iter().zip(&self.b).map(|(l, r)| (l - r) * (l - r)).sum::<f64>().sqrt()
    }

    pub fn parameter(&self) -> f64 {
        2.0 + self.side as f64
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn full_row_rank(a: &DMatrix<f64>) -> bool {
    let (m, n) = a.shape();
    if m == 0 {
        return true;
    }
    if m > n {
        return false;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    smax > 0.0 && smin > smax * (m.max(n) as f64) * f64::EPSILON * 1e3
}

/// Newton direction for `t⟨c,x⟩ + Γ(x)` on `{AΔ = 0}` and its decrement `√⟨Δ, HΔ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep {
    pub direction: Direction,
    pub decrement: f64,
    /// Multipliers of the equality constraints.
    pub multipliers: Vec<f64>,
}

/// Solves `[H Aᵀ; A 0][Δ; y] = [−(tc + ∇Γ); 0]` by dense LU with one step of
/// iterative refinement. The rank-one part of `H` enters as an extra border
/// row and column rather than being added in.
pub fn newton_step(problem: &ConicProblem, x: &ConePoint, t: f64) -> Result<NewtonStep> {
    let bp = BarrierPoint::new(&problem.family, x)?;
    newton_step_at(problem, &bp, t)
}

fn newton_step_at(problem: &ConicProblem, bp: &BarrierPoint, t: f64) -> Result<NewtonStep> {
    let n = cone_dim(problem.side);
    let m = problem.a.nrows();
    let g = bp.gradient();

    // H = C + a aᵀ with a = ∇ζ/ζ; the border keeps a aᵀ out of the factorization
    let (c, a) = bp.hess_split();
    let kkt = bordered(&c, &a, &problem.a);
    let mut rhs = DVector::zeros(n + m + 1);
    for i in 0..n {
        rhs[i] = -(t * problem.c[i] + g[i]);
    }
    let sol = solve_equilibrated(&kkt, &rhs).ok_or(Error::SingularKkt)?;

    let delta = sol.rows(0, n).into_owned();
    let multipliers = sol.rows(n, m).iter().copied().collect();
    let direction = Direction::from_packed(problem.side, delta.as_slice())?;
    let quad = delta.dot(&(&c * &delta)) + a.dot(&delta).powi(2);
    Ok(NewtonStep { direction, decrement: quad.max(0.0).sqrt(), multipliers })
}

/// Primal residual `‖Ax − b‖` and the gap bound `ν/t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub primal: f64,
    pub gap: f64,
}

pub fn residuals(problem: &ConicProblem, x: &ConePoint, t: f64) -> Residuals {
    Residuals { primal: problem.primal_residual(x), gap: problem.parameter() / t }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Cap on the total number of Newton steps.
    pub max_iters: usize,
    /// Stop once `ν/t` is at most this.
    pub gap_tol: f64,
    /// Initial barrier weight.
    pub t0: f64,
    /// Centering ends once the decrement is at most this.
    pub center_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { max_iters: 5000, gap_tol: 1e-9, t0: 1.0, center_tol: 1e-6 }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        for (name, v) in [("gap_tol", self.gap_tol), ("t0", self.t0), ("center_tol", self.center_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    IterationLimit,
    NumericalFailure,
}

/// One Newton step of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub t: f64,
    pub decrement: f64,
    pub step_length: f64,
    pub objective: f64,
    pub primal_residual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Last iterate, packed.
    pub x: Vec<f64>,
    pub objective: f64,
    pub t: f64,
    pub iterations: usize,
    /// Objective at the end of each centering phase.
    pub outer_objectives: Vec<f64>,
    pub history: Vec<IterationRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
}

impl SolveResult {
    pub fn point(&self, side: usize) -> Result<ConePoint> {
        ConePoint::from_packed(side, &self.x)
    }
}

const MAX_BACKTRACKS: usize = 60;

/// Below this decrement a full Newton step contracts `λ` quadratically, so a
/// step that fails to reduce it is rounding noise.
const QUADRATIC_REGION: f64 = 1e-3;

/// Runs the path-following method from `problem.start()`.
///
/// Invalid configurations are errors; iteration limits and numerical
/// breakdowns are reported through [`SolveResult::status`] with the last
/// iterate attached.
pub fn solve(problem: &ConicProblem, config: &SolveConfig) -> Result<SolveResult> {
    config.validate()?;
    let f = problem.family;
    let nu = problem.parameter();
    let growth = 1.0 + 0.2 / nu.sqrt();

    let mut bp = BarrierPoint::new(&f, &problem.x0)?;
    let mut t = config.t0;
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut outer_objectives = Vec::new();
    let mut prev_decrement = f64::INFINITY;

    let finish = |status, bp: &BarrierPoint, t, iterations, history, outer_objectives, message| SolveResult {
        status,
        x: bp.point().to_packed(),
        objective: problem.objective_value(bp.point()),
        t,
        iterations,
        outer_objectives,
        history,
        message,
    };

    loop {
        let step = match newton_step_at(problem, &bp, t) {
            Ok(s) => s,
            Err(e) => {
                let msg = Some(e.to_string());
                return Ok(finish(SolveStatus::NumericalFailure, &bp, t, iterations, history, outer_objectives, msg));
            }
        };
        // the gradient t·c + ∇Γ carries absolute error ~ε t|c|, which puts a
        // floor under the computed decrement as t grows
        let mut centered = step.decrement <= config.center_tol
            || (prev_decrement <= QUADRATIC_REGION && step.decrement >= prev_decrement);
        if !centered {
            if iterations >= config.max_iters {
                return Ok(finish(SolveStatus::IterationLimit, &bp, t, iterations, history, outer_objectives, None));
            }
            let mut alpha = if step.decrement > 0.25 { 1.0 / (1.0 + step.decrement) } else { 1.0 };
            let mut next = None;
            for _ in 0..MAX_BACKTRACKS {
                let trial = bp.point().step(&step.direction, alpha);
                if in_interior(&f, &trial, INTERIOR_TOL) {
                    if let Ok(p) = BarrierPoint::new(&f, &trial) {
                        next = Some(p);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some(next) = next else {
                let msg = Some("step length underflow: no interior point along the Newton direction".to_string());
                return Ok(finish(SolveStatus::NumericalFailure, &bp, t, iterations, history, outer_objectives, msg));
            };
            iterations += 1;
            if next.point() == bp.point() {
                // rounding absorbed the whole step
                centered = true;
            } else {
                prev_decrement = if alpha == 1.0 { step.decrement } else { f64::INFINITY };
                bp = next;
                let r = residuals(problem, bp.point(), t);
                history.push(IterationRecord {
                    iteration: iterations,
                    t,
                    decrement: step.decrement,
                    step_length: alpha,
                    objective: problem.objective_value(bp.point()),
                    primal_residual: r.primal,
                    gap: r.gap,
                });
            }
        }
        if centered {
            outer_objectives.push(problem.objective_value(bp.point()));
            if nu / t <= config.gap_tol {
                return Ok(finish(SolveStatus::Optimal, &bp, t, iterations, history, outer_objectives, None));
            }
            t *= growth;
            prev_decrement = f64::INFINITY;
        }
    }
}
