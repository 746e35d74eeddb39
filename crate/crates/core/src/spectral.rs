//! Scalar kernels `g` whose trace extension `tr g(W)` defines the cone.
//!
//! Every admissible family is convex and three times differentiable on the
//! open positive half-line, and its first derivative is matrix monotone:
//!
//! | family       | g(x)        | g'(x)             |
//! |--------------|-------------|-------------------|
//! | `NegLog`     | `-log x`    | `-1/x`            |
//! | `NegEntropy` | `x log x`   | `log x + 1`       |
//! | `Power(p)`   | `x^p`       | `p x^(p-1)`, p ∈ [1, 2] |
//! | `Power(p)`   | `-x^p`      | `-p x^(p-1)`, p ∈ (0, 1) |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative gap below which two eigenvalues are treated as coincident.
pub const TIE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyWire", into = "FamilyRecord")]
pub enum FunctionFamily {
    NegLog,
    NegEntropy,
    Power { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    NegLog,
    NegEntropy,
    Power,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::NegLog => "neglog",
            FamilyKind::NegEntropy => "negentropy",
            FamilyKind::Power => "power",
        }
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neglog" => Ok(FamilyKind::NegLog),
            "negentropy" => Ok(FamilyKind::NegEntropy),
            "power" => Ok(FamilyKind::Power),
            other => Err(Error::InvalidConfig(format!("unknown family kind `{other}`"))),
        }
    }
}

/// Wire form of a family: `{"kind": "power", "p": 1.5}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct FamilyRecord {
    kind: String,
    #[serde(default)]
    p: Option<f64>,
}

/// Accepted on input: the record form or the string form (`"power:1.5"`).
#[derive(Deserialize)]
#[serde(untagged)]
enum FamilyWire {
    Name(String),
    Record(FamilyRecord),
}

impl TryFrom<FamilyWire> for FunctionFamily {
    type Error = Error;

    fn try_from(wire: FamilyWire) -> Result<Self> {
        match wire {
            FamilyWire::Name(s) => s.parse(),
            FamilyWire::Record(rec) => FunctionFamily::validate(rec.kind.parse()?, rec.p),
        }
    }
}

impl From<FunctionFamily> for FamilyRecord {
    fn from(f: FunctionFamily) -> Self {
        FamilyRecord {
            kind: f.kind().as_str().to_owned(),
            p: match f {
                FunctionFamily::Power { exponent } => Some(exponent),
                _ => None,
            },
        }
    }
}

fn admissible_exponent(p: f64) -> bool {
    p.is_finite() && p > 0.0 && p <= 2.0
}

fn is_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * 1f64.max(a.abs()).max(b.abs())
}

impl FunctionFamily {
    /// Builds a family descriptor, rejecting exponents whose derivative is not
    /// matrix monotone.
    pub fn validate(kind: FamilyKind, exponent: Option<f64>) -> Result<Self> {
        match kind {
            FamilyKind::NegLog => Ok(FunctionFamily::NegLog),
            FamilyKind::NegEntropy => Ok(FunctionFamily::NegEntropy),
            FamilyKind::Power => {
                let p = exponent.ok_or_else(|| {
                    Error::InvalidConfig("power family requires an exponent".into())
                })?;
                if admissible_exponent(p) {
                    Ok(FunctionFamily::Power { exponent: p })
                } else {
                    Err(Error::InvalidExponent(p))
                }
            }
        }
    }

    pub fn power(exponent: f64) -> Result<Self> {
        Self::validate(FamilyKind::Power, Some(exponent))
    }

    /// `g(x) = x^p` without the admissibility check. Only meant for negative
    /// controls such as `p = 3`, whose derivative is not matrix monotone.
    pub fn unchecked_power(exponent: f64) -> Self {
        FunctionFamily::Power { exponent }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            FunctionFamily::NegLog => FamilyKind::NegLog,
            FunctionFamily::NegEntropy => FamilyKind::NegEntropy,
            FunctionFamily::Power { .. } => FamilyKind::Power,
        }
    }

    pub fn is_admissible(&self) -> bool {
        match *self {
            FunctionFamily::Power { exponent } => admissible_exponent(exponent),
            _ => true,
        }
    }

    /// The four families exercised by default: both logs and one exponent on
    /// each side of 1.
    pub fn standard_set() -> Vec<FunctionFamily> {
        vec![
            FunctionFamily::NegLog,
            FunctionFamily::NegEntropy,
            FunctionFamily::Power { exponent: 1.5 },
            FunctionFamily::Power { exponent: 0.5 },
        ]
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        Ok(self.eval(0, x))
    }

    pub fn deriv(&self, x: f64, order: u8) -> Result<f64> {
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidOrder(order));
        }
        check_positive(x)?;
        Ok(self.eval(order as usize, x))
    }

    fn sign(&self) -> f64 {
        match *self {
            FunctionFamily::Power { exponent } if exponent < 1.0 => -1.0,
            _ => 1.0,
        }
    }

    /// `g^(k)(x)` for `k ≤ 4`; callers guarantee `x > 0`.
    pub(crate) fn eval(&self, k: usize, x: f64) -> f64 {
        match *self {
            FunctionFamily::NegLog => match k {
                0 => -x.ln(),
                1 => -1.0 / x,
                2 => 1.0 / (x * x),
                3 => -2.0 / (x * x * x),
                _ => 6.0 / (x * x * x * x),
            },
            FunctionFamily::NegEntropy => match k {
                0 => x * x.ln(),
                1 => x.ln() + 1.0,
                2 => 1.0 / x,
                3 => -1.0 / (x * x),
                _ => 2.0 / (x * x * x),
            },
            FunctionFamily::Power { exponent: p } => {
                let mut coef = self.sign();
                for i in 0..k {
                    coef *= p - i as f64;
                }
                if coef == 0.0 {
                    0.0
                } else {
                    coef * x.powf(p - k as f64)
                }
            }
        }
    }

    /// `g^(k)(a) - g^(k)(b)` without cancellation for `k ∈ {0, 1}`.
    fn diff(&self, k: usize, a: f64, b: f64) -> f64 {
        let rel = (a - b) / b;
        match (*self, k) {
            (FunctionFamily::NegLog, 0) => -rel.ln_1p(),
            (FunctionFamily::NegLog, 1) => (a - b) / (a * b),
            (FunctionFamily::NegEntropy, 0) => (a - b) * a.ln() + b * rel.ln_1p(),
            (FunctionFamily::NegEntropy, 1) => rel.ln_1p(),
            (FunctionFamily::Power { exponent: p }, 0 | 1) => {
                let coef = if k == 0 { self.sign() } else { self.sign() * p };
                let e = p - k as f64;
                if e == 0.0 {
                    0.0
                } else {
                    coef * b.powf(e) * (e * rel.ln_1p()).exp_m1()
                }
            }
            _ => self.eval(k, a) - self.eval(k, b),
        }
    }

    /// First divided difference of `g^(k)`, with the derivative limit at ties.
    pub(crate) fn divided_diff1(&self, k: usize, a: f64, b: f64) -> f64 {
        if is_tie(a, b) {
            self.eval(k + 1, 0.5 * (a + b))
        } else {
            self.diff(k, a, b) / (a - b)
        }
    }

    /// Second divided difference of `g^(k)`, symmetric in its arguments.
    pub(crate) fn divided_diff2(&self, k: usize, a: f64, b: f64, c: f64) -> f64 {
        let mut s = [a, b, c];
        s.sort_by(f64::total_cmp);
        let [lo, mid, hi] = s;
        if is_tie(lo, hi) {
            0.5 * self.eval(k + 2, (lo + mid + hi) / 3.0)
        } else {
            (self.divided_diff1(k, hi, mid) - self.divided_diff1(k, mid, lo)) / (hi - lo)
        }
    }
}

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("g requires x > 0, got {x}")))
    }
}

impl fmt::Display for FunctionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionFamily::Power { exponent } => write!(f, "power:{exponent}"),
            other => f.write_str(other.kind().as_str()),
        }
    }
}

/// Parses `neglog`, `negentropy` or `power:<p>`.
impl FromStr for FunctionFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, p) = match s.split_once([':', '=']) {
            Some((k, p)) => {
                let p = p
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidConfig(format!("bad exponent `{p}`: {e}")))?;
                (k.trim(), Some(p))
            }
            None => (s.trim(), None),
        };
        FunctionFamily::validate(kind.parse()?, p)
    }
}
