//! Outcome of checking one inequality instance.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
    /// Reported quantity with no claim attached.
    Info,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Indeterminate => "indeterminate",
            Status::Info => "info",
        }
    }
}

/// What the slack is expected to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// `slack >= 0`.
    AtLeast,
    /// `slack = 0`.
    Equality,
    /// `slack > 0`, detectably.
    Strict,
    /// No claim; the verdict only records numbers.
    Report,
}

/// A scalar or a symmetric matrix (row-major rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl Quantity {
    pub fn matrix(dim: usize, row_major: &[f64]) -> Self {
        Quantity::Matrix(row_major.chunks(dim).map(<[f64]>::to_vec).collect())
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Quantity::Scalar(x) => Some(*x),
            Quantity::Matrix(_) => None,
        }
    }
}

impl From<f64> for Quantity {
    fn from(x: f64) -> Self {
        Quantity::Scalar(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityVerdict {
    pub name: String,
    pub instance: serde_json::Value,
    pub lhs: Quantity,
    pub rhs: Quantity,
    /// Oriented so that the claim reads `slack >= 0` (or `= 0`, `> 0`); the
    /// smallest eigenvalue for matrix claims.
    pub slack: f64,
    /// Standard error of the slack; 0 on exact paths.
    pub uncertainty: f64,
    pub tol: f64,
    pub claim: Claim,
    pub status: Status,
}

impl InequalityVerdict {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        instance: serde_json::Value,
        lhs: impl Into<Quantity>,
        rhs: impl Into<Quantity>,
        slack: f64,
        uncertainty: f64,
        tol: f64,
        claim: Claim,
    ) -> Self {
        Self {
            name: name.into(),
            instance,
            lhs: lhs.into(),
            rhs: rhs.into(),
            slack,
            uncertainty,
            tol,
            claim,
            status: decide(slack, uncertainty, tol, claim),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

/// Status rule. For one-sided and strict claims a Monte Carlo slack within
/// three standard errors of zero is indeterminate; an equality claim passes
/// whenever `|slack| <= max(tol, 3u)`.
pub fn decide(slack: f64, uncertainty: f64, tol: f64, claim: Claim) -> Status {
    if !slack.is_finite() {
        return if claim == Claim::Report { Status::Info } else { Status::Fail };
    }
    let band = tol.max(3.0 * uncertainty);
    let noisy = uncertainty > 0.0 && slack.abs() < 3.0 * uncertainty;
    match claim {
        Claim::Report => Status::Info,
        Claim::Equality => {
            if slack.abs() <= band {
                Status::Pass
            } else {
                Status::Fail
            }
        }
        Claim::AtLeast => {
            if noisy {
                Status::Indeterminate
            } else if slack >= -band {
                Status::Pass
            } else {
                Status::Fail
            }
        }
        Claim::Strict => {
            if noisy {
                Status::Indeterminate
            } else if slack > band {
                Status::Pass
            } else {
                Status::Fail
            }
        }
    }
}
