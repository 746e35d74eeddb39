//! Randomized numerical verification that `Γ` is a logarithmically homogeneous
//! self-concordant barrier with parameter `2 + d`.
//!
//! Each trial samples one interior point and runs every check at it. Trials
//! own independent RNG streams keyed by `(seed, family, side, trial)`, so a
//! parallel run produces the same report as a serial one, and any witness can
//! be regenerated with [`replay_trial_point`].

pub mod checks;
pub mod finite_diff;
pub mod sampling;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{in_interior, BarrierPoint, ConePoint, Direction};
use crate::error::{Error, Result};
use crate::matrix_calculus::SymMatrix;
use crate::spectral::FunctionFamily;

pub use checks::{
    check_barrier_parameter, check_compatibility, check_log_homogeneity, check_matrix_monotonicity,
    check_self_concordance_line, euler_residuals, monotonicity_gap, validate_compat_direction, Margin,
    MonotonicityResult,
};
pub use sampling::{
    compat_direction_from, config_key, sample_compat_direction, sample_interior_point, sample_line_direction,
    sample_ordered_pair, trial_rng,
};

pub const DEFAULT_SEED: u64 = 20_240_229;

/// Slacks and tolerances for each check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative slack for the compatibility inequality.
    pub inequality: f64,
    /// Relative slack for `D²ζ ≤ 0`.
    pub concavity: f64,
    /// Relative slack for `|D³Γ| ≤ 2(D²Γ)^{3/2}`.
    pub self_concordance: f64,
    /// Absolute tolerance on `Γ(θũ) − Γ(ũ) + (2+d) log θ`.
    pub homogeneity: f64,
    /// Relative tolerance on `⟨∇Γ, H⁻¹∇Γ⟩ = 2 + d`.
    pub parameter: f64,
    /// Tolerance on both Euler identities.
    pub euler: f64,
    pub gradient_fd: f64,
    pub hessian_fd: f64,
    pub third_order_fd: f64,
    /// Relative slack on `λ_min(g'(A) − g'(B)) ≥ 0`.
    pub monotonicity: f64,
    /// Tolerance handed to `in_interior` for sampled and replayed points.
    pub interior: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            inequality: 1e-8,
            concavity: 1e-10,
            self_concordance: 1e-6,
            homogeneity: 1e-10,
            parameter: 1e-6,
            euler: 1e-8,
            gradient_fd: 1e-6,
            hessian_fd: 1e-5,
            third_order_fd: 1e-4,
            monotonicity: 1e-10,
            interior: 1e-10,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let all = [
            self.inequality,
            self.concavity,
            self.self_concordance,
            self.homogeneity,
            self.parameter,
            self.euler,
            self.gradient_fd,
            self.hessian_fd,
            self.third_order_fd,
            self.monotonicity,
            self.interior,
        ];
        if all.iter().all(|&t| t > 0.0 && t.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("all tolerances must be positive".into()))
        }
    }
}

/// One (family, side) configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialConfig {
    pub family: FunctionFamily,
    pub side: usize,
    pub trials: usize,
    pub seed: u64,
    /// Constrained and unconstrained directions drawn per point.
    pub directions_per_point: usize,
    /// Number of leading trials that also run finite-difference checks.
    pub fd_points: usize,
    pub thetas: Vec<f64>,
    pub tolerances: Tolerances,
}

impl TrialConfig {
    pub fn new(family: FunctionFamily, side: usize) -> Self {
        TrialConfig {
            family,
            side,
            trials: 1000,
            seed: DEFAULT_SEED,
            directions_per_point: 10,
            fd_points: 100,
            thetas: vec![0.1, 0.5, 2.0, 10.0],
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.side == 0 {
            return Err(Error::InvalidConfig("side must be at least 1".into()));
        }
        if !self.family.is_admissible() {
            return Err(Error::InvalidConfig(format!("{} is not an admissible family", self.family)));
        }
        if self.thetas.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidConfig("scaling factors must be positive".into()));
        }
        self.tolerances.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Interior,
    LogHomogeneity,
    BarrierParameter,
    EulerGradient,
    EulerHessian,
    Compatibility,
    Concavity,
    SelfConcordance,
    GradientFd,
    HessianFd,
    ThirdOrderFd,
    MatrixMonotonicity,
}

impl CheckKind {
    pub const ALL: [CheckKind; 12] = [
        CheckKind::Interior,
        CheckKind::LogHomogeneity,
        CheckKind::BarrierParameter,
        CheckKind::EulerGradient,
        CheckKind::EulerHessian,
        CheckKind::Compatibility,
        CheckKind::Concavity,
        CheckKind::SelfConcordance,
        CheckKind::GradientFd,
        CheckKind::HessianFd,
        CheckKind::ThirdOrderFd,
        CheckKind::MatrixMonotonicity,
    ];
}

/// Data needed to reproduce a worst case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub trial: usize,
    pub point: ConePoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<(SymMatrix, SymMatrix)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Aggregate of one check over all trials of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub check: CheckKind,
    pub trials: usize,
    pub passes: usize,
    /// Slack-adjusted margin of the worst sample; the check passes iff `≥ 0`.
    pub worst_margin: f64,
    /// The underlying statistic at the worst sample (error, or normalized
    /// inequality margin).
    pub worst_value: f64,
    pub witness: Option<Witness>,
}

impl CheckSummary {
    fn new(check: CheckKind) -> Self {
        CheckSummary { check, trials: 0, passes: 0, worst_margin: f64::INFINITY, worst_value: f64::NAN, witness: None }
    }

    pub fn passed(&self) -> bool {
        self.trials > 0 && self.passes == self.trials
    }

    fn record(&mut self, s: Sample) {
        self.trials += 1;
        if s.margin >= 0.0 {
            self.passes += 1;
        }
        // NaN margins count as worst
        if !(s.margin >= self.worst_margin) {
            self.worst_margin = if s.margin.is_nan() { f64::NEG_INFINITY } else { s.margin };
            self.worst_value = s.value;
            self.witness = Some(s.witness);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub family: FunctionFamily,
    pub side: usize,
    pub seed: u64,
    /// Stream key used by [`trial_rng`] for this configuration.
    pub stream_key: u64,
    pub trials: usize,
    pub checks: Vec<CheckSummary>,
}

impl TrialReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }

    pub fn check(&self, kind: CheckKind) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.check == kind)
    }
}

struct Sample {
    check: CheckKind,
    margin: f64,
    value: f64,
    witness: Witness,
}

/// The point drawn for `trial` under `cfg`.
pub fn replay_trial_point(cfg: &TrialConfig, trial: usize) -> ConePoint {
    let mut rng = trial_rng(cfg.seed, config_key(&cfg.family, cfg.side), trial as u64);
    sample_interior_point(&cfg.family, cfg.side, &mut rng)
}

fn run_trial(cfg: &TrialConfig, trial: usize) -> Vec<Sample> {
    let f = &cfg.family;
    let tol = &cfg.tolerances;
    let mut rng = trial_rng(cfg.seed, config_key(f, cfg.side), trial as u64);
    let x = sample_interior_point(f, cfg.side, &mut rng);
    let mut out = Vec::new();

    let base = Witness { trial, point: x.clone(), direction: None, theta: None, pair: None, error: None };
    let with_dir = |d: &Direction| Witness { direction: Some(d.clone()), ..base.clone() };
    let failed = |check, e: Error, w: Witness| Sample {
        check,
        margin: f64::NEG_INFINITY,
        value: f64::NAN,
        witness: Witness { error: Some(e.to_string()), ..w },
    };

    let interior = in_interior(f, &x, tol.interior);
    out.push(Sample {
        check: CheckKind::Interior,
        margin: if interior { 0.0 } else { f64::NEG_INFINITY },
        value: if interior { 1.0 } else { 0.0 },
        witness: base.clone(),
    });
    let bp = match BarrierPoint::new(f, &x) {
        Ok(bp) => bp,
        Err(e) => {
            out.push(failed(CheckKind::Interior, e, base));
            return out;
        }
    };

    for &theta in &cfg.thetas {
        let s = match check_log_homogeneity(f, &x, &[theta]) {
            Ok(v) => Sample {
                check: CheckKind::LogHomogeneity,
                margin: tol.homogeneity - v,
                value: v,
                witness: Witness { theta: Some(theta), ..base.clone() },
            },
            Err(e) => failed(CheckKind::LogHomogeneity, e, Witness { theta: Some(theta), ..base.clone() }),
        };
        out.push(s);
    }

    let nu = bp.parameter();
    out.push(match checks::barrier_parameter_of(&bp) {
        Ok(p) => {
            let err = (p - nu).abs() / nu;
            Sample { check: CheckKind::BarrierParameter, margin: tol.parameter - err, value: err, witness: base.clone() }
        }
        Err(e) => failed(CheckKind::BarrierParameter, e, base.clone()),
    });

    let (e1, e2) = euler_residuals(&bp);
    out.push(Sample { check: CheckKind::EulerGradient, margin: tol.euler - e1, value: e1, witness: base.clone() });
    out.push(Sample { check: CheckKind::EulerHessian, margin: tol.euler - e2, value: e2, witness: base.clone() });

    for _ in 0..cfg.directions_per_point {
        let dir = sample_compat_direction(&x, &mut rng);
        let w = with_dir(&dir);
        match validate_compat_direction(&x, &dir) {
            Ok(()) => {
                let m = checks::compatibility_margin(&bp, &dir);
                out.push(Sample {
                    check: CheckKind::Compatibility,
                    margin: m.margin + tol.inequality * m.scale,
                    value: m.normalized(),
                    witness: w.clone(),
                });
                let c = checks::concavity_margin(&bp, &dir);
                out.push(Sample {
                    check: CheckKind::Concavity,
                    margin: c.margin + tol.concavity * c.scale,
                    value: c.normalized(),
                    witness: w,
                });
            }
            Err(e) => out.push(failed(CheckKind::Compatibility, e, w)),
        }

        let line = sample_line_direction(cfg.side, &mut rng);
        let w = with_dir(&line);
        // ζ is concave along every line, not just admissible directions
        let c = checks::concavity_margin(&bp, &line);
        out.push(Sample {
            check: CheckKind::Concavity,
            margin: c.margin + tol.concavity * c.scale,
            value: c.normalized(),
            witness: w.clone(),
        });
        out.push(match checks::self_concordance_margin(&bp, &line) {
            Ok(m) => Sample {
                check: CheckKind::SelfConcordance,
                margin: m.margin + tol.self_concordance * m.scale,
                value: m.normalized(),
                witness: w,
            },
            Err(e) => failed(CheckKind::SelfConcordance, e, w),
        });
    }

    if trial < cfg.fd_points {
        let line = sample_line_direction(cfg.side, &mut rng);
        let w = with_dir(&line);
        type FdCheck = fn(&FunctionFamily, &BarrierPoint, &Direction) -> Result<f64>;
        let fd_checks: [(CheckKind, FdCheck, f64); 3] = [
            (CheckKind::GradientFd, finite_diff::gradient_fd_error, tol.gradient_fd),
            (CheckKind::HessianFd, finite_diff::hessian_fd_error, tol.hessian_fd),
            (CheckKind::ThirdOrderFd, finite_diff::third_order_fd_error, tol.third_order_fd),
        ];
        for (kind, check, limit) in fd_checks {
            out.push(match check(f, &bp, &line) {
                Ok(err) => Sample { check: kind, margin: limit - err, value: err, witness: w.clone() },
                Err(e) => failed(kind, e, w.clone()),
            });
        }
    }

    let (a, b) = sample_ordered_pair(2 + trial % 2, &mut rng);
    let w = Witness { pair: Some((a.clone(), b.clone())), ..base.clone() };
    out.push(match monotonicity_gap(f, &a, &b) {
        Ok((gap, scale)) => Sample {
            check: CheckKind::MatrixMonotonicity,
            margin: gap / scale + tol.monotonicity,
            value: gap / scale,
            witness: w,
        },
        Err(e) => failed(CheckKind::MatrixMonotonicity, e, w),
    });
    out
}

/// Runs every check over `cfg.trials` sampled points.
pub fn run_trials(cfg: &TrialConfig) -> Result<TrialReport> {
    cfg.validate()?;
    let samples: Vec<Vec<Sample>> = (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect();

    let mut summaries: Vec<CheckSummary> = CheckKind::ALL.iter().map(|&k| CheckSummary::new(k)).collect();
    for s in samples.into_iter().flatten() {
        let idx = CheckKind::ALL.iter().position(|&k| k == s.check).expect("known check");
        summaries[idx].record(s);
    }
    summaries.retain(|s| s.trials > 0);

    Ok(TrialReport {
        family: cfg.family,
        side: cfg.side,
        seed: cfg.seed,
        stream_key: config_key(&cfg.family, cfg.side),
        trials: cfg.trials,
        checks: summaries,
    })
}

/// Configuration for a full run over several families and sides.
///
/// Negative controls are never read from input, since the family parser
/// rejects inadmissible kernels; use [`SuiteConfig::with_negative_control`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub families: Vec<FunctionFamily>,
    pub sides: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub directions_per_point: usize,
    pub fd_points: usize,
    pub tolerances: Tolerances,
    /// Inadmissible kernels run through the monotonicity check only; each is
    /// expected to produce a violation.
    #[serde(skip_deserializing)]
    pub negative_controls: Vec<FunctionFamily>,
    pub control_trials: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            families: FunctionFamily::standard_set(),
            sides: (1..=6).collect(),
            trials: 1000,
            seed: DEFAULT_SEED,
            directions_per_point: 10,
            fd_points: 100,
            tolerances: Tolerances::default(),
            negative_controls: Vec::new(),
            control_trials: 500,
        }
    }
}

impl SuiteConfig {
    pub fn with_negative_control(mut self) -> Self {
        self.negative_controls = vec![FunctionFamily::unchecked_power(3.0)];
        self
    }

    pub fn trial_configs(&self) -> Vec<TrialConfig> {
        let mut out = Vec::new();
        for &family in &self.families {
            for &side in &self.sides {
                out.push(TrialConfig {
                    family,
                    side,
                    trials: self.trials,
                    seed: self.seed,
                    directions_per_point: self.directions_per_point,
                    fd_points: self.fd_points,
                    thetas: vec![0.1, 0.5, 2.0, 10.0],
                    tolerances: self.tolerances,
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() || self.sides.is_empty() {
            return Err(Error::InvalidConfig("need at least one family and one side".into()));
        }
        if self.control_trials == 0 && !self.negative_controls.is_empty() {
            return Err(Error::InvalidConfig("control_trials must be at least 1".into()));
        }
        self.trial_configs().iter().try_for_each(TrialConfig::validate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlReport {
    pub family: FunctionFamily,
    pub check: CheckKind,
    pub trials: usize,
    pub violations: usize,
    pub worst_value: f64,
    /// True when the control produced at least one violation, i.e. the check
    /// is able to fail.
    pub flagged: bool,
    pub witness: Option<(SymMatrix, SymMatrix)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub passed: bool,
    pub configurations: Vec<TrialReport>,
    pub controls: Vec<ControlReport>,
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let configurations = cfg.trial_configs().iter().map(run_trials).collect::<Result<Vec<_>>>()?;

    let mut controls = Vec::new();
    for f in &cfg.negative_controls {
        let mut rng = trial_rng(cfg.seed, config_key(f, 0), 0);
        let r = check_matrix_monotonicity(f, &mut rng, cfg.control_trials, cfg.tolerances.monotonicity)?;
        controls.push(ControlReport {
            family: *f,
            check: CheckKind::MatrixMonotonicity,
            trials: r.trials,
            violations: r.violations,
            worst_value: r.worst_normalized,
            flagged: r.violations > 0,
            witness: r.witness,
        });
    }

    Ok(SuiteReport {
        seed: cfg.seed,
        passed: configurations.iter().all(TrialReport::passed),
        configurations,
        controls,
    })
}
