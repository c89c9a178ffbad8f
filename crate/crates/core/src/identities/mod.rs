//! Verification harness: each identity is evaluated as a left-hand side
//! (finite differences of a measure in θ) against a right-hand side
//! (Fisher-type integrals), and reported as a [`CheckResult`].

mod debruijn;
mod properties;
mod suites;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use debruijn::{
    check_guo, check_identity, check_multivariate_divergence, check_multivariate_entropy,
    check_scalar_divergence, check_scalar_entropy, pde_gate, IdentityKind, IdentitySpec, Subject,
    GATE_TOLERANCE,
};
pub use properties::{check_property, AffineQuantity, MatrixSource, PropertySpec};
pub use suites::{
    named_suite, pde_pairs, run_suite, Check, SuiteOutcome, Summary, Worst, SUITE_NAMES,
};

use crate::error::Error;
use crate::linalg::matrix_to_rows;

/// Acceptance thresholds for `LHS` vs `RHS`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub const FIRST_ORDER: Tolerance = Tolerance {
        rel: 1e-4,
        abs: 1e-8,
    };
    pub const SECOND_ORDER: Tolerance = Tolerance {
        rel: 1e-3,
        abs: 1e-8,
    };

    pub fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs }
    }
}

/// Scalar or matrix side of an identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl Value {
    pub fn matrix(m: &DMatrix<f64>) -> Self {
        if m.len() == 1 {
            Value::Scalar(m[(0, 0)])
        } else {
            Value::Matrix(matrix_to_rows(m))
        }
    }

    fn entries(&self) -> Vec<f64> {
        match self {
            Value::Scalar(v) => vec![*v],
            Value::Matrix(rows) => rows.iter().flatten().cloned().collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Scalar itself, or the Frobenius norm of a matrix.
    pub fn norm(&self) -> f64 {
        match self {
            Value::Scalar(v) => *v,
            Value::Matrix(_) => self.entries().iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Value::Scalar(v) => Some(*v),
            Value::Matrix(_) => None,
        }
    }
}

/// How the two sides are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `LHS = RHS` within tolerance.
    #[default]
    Eq,
    /// `LHS ≤ RHS` within tolerance.
    Le,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    Errored,
}

/// A labelled alternative reading of an identity, reported alongside the
/// implemented one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub label: String,
    pub message: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fd_steps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub richardson_agreement: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pde: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pde_residual_max: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<Note>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One verification outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: String,
    pub kind: String,
    pub family: String,
    pub functional: String,
    pub theta: Vec<f64>,
    pub relation: Relation,
    pub lhs: Option<Value>,
    pub rhs: Option<Value>,
    pub abs_err: Option<f64>,
    pub rel_err: Option<f64>,
    pub tolerance: Tolerance,
    pub pass: bool,
    pub status: Status,
    pub diagnostics: Diagnostics,
}

/// `(abs_err, rel_err, pass)`; entrywise max-norm for matrices.
pub fn compare(lhs: &Value, rhs: &Value, relation: Relation, tol: Tolerance) -> (f64, f64, bool) {
    let (l, r) = (lhs.entries(), rhs.entries());
    let abs = match relation {
        Relation::Eq => l
            .iter()
            .zip(&r)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs())),
        Relation::Le => l.iter().zip(&r).fold(0.0f64, |a, (x, y)| a.max(x - y)),
    };
    let abs = if l.len() != r.len() {
        f64::INFINITY
    } else {
        abs
    };
    let scale = match relation {
        Relation::Eq => lhs.max_abs().max(rhs.max_abs()).max(tol.abs),
        Relation::Le => rhs.max_abs().max(tol.abs),
    };
    let rel = if scale > 0.0 { abs / scale } else { abs };
    let pass = abs.is_finite() && (abs <= tol.abs || rel <= tol.rel);
    (abs, rel, pass)
}

/// Descriptor fields shared by result constructors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Header {
    pub kind: String,
    pub family: String,
    pub functional: String,
    pub theta: Vec<f64>,
}

impl CheckResult {
    pub fn evaluated(
        header: Header,
        lhs: Value,
        rhs: Value,
        relation: Relation,
        tolerance: Tolerance,
        diagnostics: Diagnostics,
    ) -> Self {
        let (abs_err, rel_err, pass) = compare(&lhs, &rhs, relation, tolerance);
        Self {
            check_id: String::new(),
            kind: header.kind,
            family: header.family,
            functional: header.functional,
            theta: header.theta,
            relation,
            lhs: Some(lhs),
            rhs: Some(rhs),
            abs_err: Some(abs_err),
            rel_err: Some(rel_err),
            tolerance,
            pass,
            status: if pass { Status::Passed } else { Status::Failed },
            diagnostics,
        }
    }

    pub fn errored(header: Header, tolerance: Tolerance, error: &Error) -> Self {
        let mut diagnostics = Diagnostics {
            error: Some(error.to_string()),
            ..Default::default()
        };
        if let Error::PdeGate { pde, max_residual } = error {
            diagnostics.pde = Some(pde.clone());
            diagnostics.pde_residual_max = Some(*max_residual);
        }
        Self {
            check_id: String::new(),
            kind: header.kind,
            family: header.family,
            functional: header.functional,
            theta: header.theta,
            relation: Relation::Eq,
            lhs: None,
            rhs: None,
            abs_err: None,
            rel_err: None,
            tolerance,
            pass: false,
            status: Status::Errored,
            diagnostics,
        }
    }

    pub fn lhs_scalar(&self) -> Option<f64> {
        self.lhs.as_ref().map(Value::norm)
    }

    pub fn rhs_scalar(&self) -> Option<f64> {
        self.rhs.as_ref().map(Value::norm)
    }

    pub fn note(&self, label: &str) -> Option<&Note> {
        self.diagnostics.notes.iter().find(|n| n.label == label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_rules() {
        let t = Tolerance::new(1e-4, 1e-8);
        let (a, r, p) = compare(
            &Value::Scalar(1.0),
            &Value::Scalar(1.00001),
            Relation::Eq,
            t,
        );
        assert!(p && (a - 1e-5).abs() < 1e-12 && r < 1e-4);
        let (_, _, p) = compare(&Value::Scalar(1.0), &Value::Scalar(1.1), Relation::Eq, t);
        assert!(!p);
        let (_, _, p) = compare(&Value::Scalar(0.0), &Value::Scalar(1e-9), Relation::Eq, t);
        assert!(p);
        let (a, _, p) = compare(&Value::Scalar(0.5), &Value::Scalar(1.0), Relation::Le, t);
        assert!(p && a == 0.0);
        let (_, _, p) = compare(&Value::Scalar(1.5), &Value::Scalar(1.0), Relation::Le, t);
        assert!(!p);
        let m = Value::Matrix(vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
        let n = Value::Matrix(vec![vec![1.0, 1e-3], vec![1e-3, 2.0]]);
        let (a, r, _) = compare(&m, &n, Relation::Eq, t);
        assert!((a - 1e-3).abs() < 1e-15 && (r - 5e-4).abs() < 1e-15);
        assert!((m.norm() - 5f64.sqrt()).abs() < 1e-15);
    }
}
