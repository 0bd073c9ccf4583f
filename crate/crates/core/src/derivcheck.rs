//! Exact derivatives against central finite differences.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::expr::{DiffExpr, Expr};
use crate::instance::{GnepInstance, InstanceError};

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Maximum admissible scaled error.
pub const FD_TOL: f64 = 1e-6;
/// Below this magnitude errors are measured absolutely (`1e-6 * 1e-2 = 1e-8`).
const ABS_FLOOR: f64 = 1e-2;

/// `|approx - exact| / max(|exact|, 1e-2)`.
pub fn scaled_error(exact: f64, approx: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(ABS_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionCheck {
    pub label: String,
    pub max_gradient_error: f64,
    pub max_hessian_error: f64,
    /// Point with the largest error.
    pub worst_point: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub samples: usize,
    pub expressions: Vec<ExpressionCheck>,
    pub max_error: f64,
    pub passed: bool,
}

/// Every expression of the instance with its label: `f1`, `g1_1`, `G1`, ...
pub fn labelled_expressions(inst: &GnepInstance) -> Vec<(String, &DiffExpr)> {
    let mut out = Vec::new();
    for (p, pl) in inst.players().iter().enumerate() {
        out.push((format!("f{}", p + 1), &pl.objective));
    }
    for c in inst.all_constraints() {
        out.push((c.to_string(), inst.constraint(c)));
    }
    out
}

fn fd_gradient(f: impl Fn(&[f64]) -> Result<f64, crate::expr::EvalError>, x: &[f64], i: usize) -> Result<f64> {
    let h = FD_STEP * x[i].abs().max(1.0);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    Ok((f(&xp)? - f(&xm)?) / (2.0 * h))
}

/// Gradient against central differences of the value, Hessian against
/// central differences of the exact gradient.
pub fn check_expression(label: &str, e: &DiffExpr, points: &[Vec<f64>]) -> Result<ExpressionCheck> {
    let mut gmax: f64 = 0.0;
    let mut hmax: f64 = 0.0;
    let mut worst = (0.0, points.first().cloned().unwrap_or_default());
    for x in points {
        let n = x.len();
        let g = e.gradient(x)?;
        let h = e.hessian(x)?;
        for i in 0..n {
            let err = scaled_error(g[i], fd_gradient(|y| e.value(y), x, i)?);
            gmax = gmax.max(err);
            if err > worst.0 {
                worst = (err, x.clone());
            }
            for j in 0..n {
                let approx = fd_gradient(|y| e.partial(i).evaluate(y), x, j)?;
                let err = scaled_error(h[(i, j)], approx);
                hmax = hmax.max(err);
                if err > worst.0 {
                    worst = (err, x.clone());
                }
            }
        }
    }
    Ok(ExpressionCheck {
        label: label.to_string(),
        max_gradient_error: gmax,
        max_hessian_error: hmax,
        worst_point: worst.1,
        passed: gmax <= FD_TOL && hmax <= FD_TOL,
    })
}

pub fn check_instance(inst: &GnepInstance, points: &[Vec<f64>]) -> Result<DerivativeReport> {
    let expressions = labelled_expressions(inst)
        .into_iter()
        .map(|(l, e)| check_expression(&l, e, points))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(points.len(), expressions))
}

fn summarize(samples: usize, expressions: Vec<ExpressionCheck>) -> DerivativeReport {
    let max_error = expressions
        .iter()
        .map(|c| c.max_gradient_error.max(c.max_hessian_error))
        .fold(0.0, f64::max);
    DerivativeReport {
        samples,
        passed: expressions.iter().all(|c| c.passed),
        expressions,
        max_error,
    }
}

/// Hand-written gradients, keyed by expression label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivativeReference {
    pub instance: String,
    pub gradients: BTreeMap<String, Vec<String>>,
}

/// Compares hand-written gradients with the exact ones at the points.
pub fn check_reference(
    inst: &GnepInstance,
    reference: &DerivativeReference,
    points: &[Vec<f64>],
) -> Result<DerivativeReport> {
    let exprs = labelled_expressions(inst);
    let mut checks = Vec::new();
    for (label, sources) in &reference.gradients {
        let Some((_, e)) = exprs.iter().find(|(l, _)| l == label) else {
            return Err(InstanceError::Schema(format!("reference names unknown expression {label}")).into());
        };
        if sources.len() != inst.dim() {
            return Err(InstanceError::DimensionMismatch {
                expected: inst.dim(),
                got: sources.len(),
            }
            .into());
        }
        let parsed = sources
            .iter()
            .map(|s| Expr::parse(s, inst.vars()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| InstanceError::Expression {
                location: format!("reference gradient of {label}"),
                source,
            })?;
        let mut gmax: f64 = 0.0;
        let mut worst = points.first().cloned().unwrap_or_default();
        for x in points {
            let g = e.gradient(x)?;
            for (i, p) in parsed.iter().enumerate() {
                let err = scaled_error(g[i], p.evaluate(x)?);
                if err > gmax {
                    gmax = err;
                    worst = x.clone();
                }
            }
        }
        checks.push(ExpressionCheck {
            label: label.clone(),
            max_gradient_error: gmax,
            max_hessian_error: 0.0,
            worst_point: worst,
            passed: gmax <= FD_TOL,
        });
    }
    Ok(summarize(points.len(), checks))
}
