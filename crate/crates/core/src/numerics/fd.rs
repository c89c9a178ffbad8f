//! Central finite differences in θ with Richardson extrapolation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Admissible range of the differentiated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[default]
    Positive,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdSpec {
    /// Multiplier on the base step `max(|θ|, 1)·η`.
    pub scale: f64,
    /// Overrides the default `η` (1e−4 first order, 1e−3 second order).
    pub eta: Option<f64>,
    pub richardson_levels: usize,
}

impl Default for FdSpec {
    fn default() -> Self {
        Self {
            scale: 1.0,
            eta: None,
            richardson_levels: 2,
        }
    }
}

impl FdSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::config("fd.scale", "must be > 0"));
        }
        if let Some(e) = self.eta {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::config("fd.eta", "must lie in (0, 1)"));
            }
        }
        if self.richardson_levels > 6 {
            return Err(Error::config("fd.richardson_levels", "at most 6"));
        }
        Ok(())
    }

    pub fn step(&self, theta: f64, order: u8) -> f64 {
        let eta = self.eta.unwrap_or(if order == 1 { 1e-4 } else { 1e-3 });
        self.scale * theta.abs().max(1.0) * eta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdResult {
    pub value: f64,
    /// Coarsest step of the tableau.
    pub step: f64,
    /// `|R[L][L] − R[L−1][L−1]|`, the agreement of the two finest levels.
    pub agreement: f64,
}

fn check_span(theta: f64, span: f64, domain: Domain) -> Result<()> {
    if domain == Domain::Positive && !(theta - span > 0.0) {
        return Err(Error::Stencil { theta, span });
    }
    Ok(())
}

/// Richardson tableau over steps `h, h/2, …` for an `O(h²)` base estimate.
fn richardson(base: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n_out = base[0].len();
    let levels = base.len();
    (0..n_out)
        .map(|c| {
            let mut prev: Vec<f64> = Vec::new();
            let mut diag = Vec::with_capacity(levels);
            for (i, b) in base.iter().enumerate() {
                let mut row = vec![b[c]];
                for j in 1..=i {
                    let f = 4f64.powi(j as i32);
                    let v = row[j - 1] + (row[j - 1] - prev[j - 1]) / (f - 1.0);
                    row.push(v);
                }
                diag.push(row[i]);
                prev = row;
            }
            let best = diag[levels - 1];
            let agree = if levels > 1 {
                (best - diag[levels - 2]).abs()
            } else {
                0.0
            };
            (best, agree)
        })
        .collect()
}

/// Vector-valued first or second derivative of `g` at `θ0`, sharing the
/// stencil evaluations among components.
pub fn fd_derivative_vec<G>(
    g: G,
    theta0: f64,
    order: u8,
    spec: &FdSpec,
    domain: Domain,
) -> Result<Vec<FdResult>>
where
    G: Fn(f64) -> Result<Vec<f64>>,
{
    if order != 1 && order != 2 {
        return Err(Error::Unsupported(format!("derivative order {order}")));
    }
    spec.validate()?;
    let h = spec.step(theta0, order);
    check_span(theta0, h, domain)?;
    let eval = |t: f64| -> Result<Vec<f64>> {
        let v = g(t)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("fd stencil value at theta = {t}")));
        }
        Ok(v)
    };
    let centre = if order == 2 {
        Some(eval(theta0)?)
    } else {
        None
    };
    let mut base = Vec::with_capacity(spec.richardson_levels + 1);
    for l in 0..=spec.richardson_levels {
        let hl = h / 2f64.powi(l as i32);
        let (p, m) = (eval(theta0 + hl)?, eval(theta0 - hl)?);
        let est: Vec<f64> = match &centre {
            None => p
                .iter()
                .zip(&m)
                .map(|(a, b)| (a - b) / (2.0 * hl))
                .collect(),
            Some(c) => p
                .iter()
                .zip(&m)
                .zip(c)
                .map(|((a, b), c)| (a - 2.0 * c + b) / (hl * hl))
                .collect(),
        };
        base.push(est);
    }
    Ok(richardson(&base)
        .into_iter()
        .map(|(value, agreement)| FdResult {
            value,
            step: h,
            agreement,
        })
        .collect())
}

pub fn fd_derivative<G>(
    g: G,
    theta0: f64,
    order: u8,
    spec: &FdSpec,
    domain: Domain,
) -> Result<FdResult>
where
    G: Fn(f64) -> Result<f64>,
{
    fd_derivative_vec(|t| g(t).map(|v| vec![v]), theta0, order, spec, domain)
        .map(|mut v| v.remove(0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdGradient {
    pub value: DVector<f64>,
    pub steps: Vec<f64>,
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdHessian {
    pub value: DMatrix<f64>,
    pub steps: Vec<f64>,
    pub agreement: f64,
}

fn shifted(theta: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut t = theta.to_vec();
    for &(i, d) in moves {
        t[i] += d;
    }
    t
}

/// Gradient of a vector-valued `g` (one gradient per output component).
pub fn fd_gradient_vec<G>(
    g: G,
    theta0: &[f64],
    spec: &FdSpec,
    domain: Domain,
) -> Result<Vec<FdGradient>>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = theta0.len();
    let mut cols: Vec<Vec<FdResult>> = Vec::with_capacity(n);
    for i in 0..n {
        cols.push(fd_derivative_vec(
            |t| g(&shifted(theta0, &[(i, t - theta0[i])])),
            theta0[i],
            1,
            spec,
            domain,
        )?);
    }
    let n_out = cols.first().map_or(0, |c| c.len());
    Ok((0..n_out)
        .map(|c| FdGradient {
            value: DVector::from_fn(n, |i, _| cols[i][c].value),
            steps: cols.iter().map(|col| col[c].step).collect(),
            agreement: cols.iter().map(|col| col[c].agreement).fold(0.0, f64::max),
        })
        .collect())
}

pub fn fd_gradient<G>(g: G, theta0: &[f64], spec: &FdSpec, domain: Domain) -> Result<FdGradient>
where
    G: Fn(&[f64]) -> Result<f64>,
{
    fd_gradient_vec(|t| g(t).map(|v| vec![v]), theta0, spec, domain).map(|mut v| v.remove(0))
}

/// Hessian of `g`: second differences on the diagonal, the four-point
/// cross stencil off it, each Richardson-extrapolated, then symmetrized.
pub fn fd_hessian<G>(g: G, theta0: &[f64], spec: &FdSpec, domain: Domain) -> Result<FdHessian>
where
    G: Fn(&[f64]) -> Result<f64>,
{
    spec.validate()?;
    let n = theta0.len();
    let steps: Vec<f64> = theta0.iter().map(|&t| spec.step(t, 2)).collect();
    for (t, h) in theta0.iter().zip(&steps) {
        check_span(*t, *h, domain)?;
    }
    let eval = |t: Vec<f64>| -> Result<f64> {
        let v = g(&t)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "fd stencil value at theta = {t:?}"
            )));
        }
        Ok(v)
    };
    let mut h = DMatrix::zeros(n, n);
    let mut agreement = 0.0f64;
    for i in 0..n {
        let r = fd_derivative(
            |t| eval(shifted(theta0, &[(i, t - theta0[i])])),
            theta0[i],
            2,
            spec,
            domain,
        )?;
        h[(i, i)] = r.value;
        agreement = agreement.max(r.agreement);
        for j in 0..i {
            let mut base = Vec::with_capacity(spec.richardson_levels + 1);
            for l in 0..=spec.richardson_levels {
                let s = 2f64.powi(l as i32);
                let (hi, hj) = (steps[i] / s, steps[j] / s);
                let v = eval(shifted(theta0, &[(i, hi), (j, hj)]))?
                    - eval(shifted(theta0, &[(i, hi), (j, -hj)]))?
                    - eval(shifted(theta0, &[(i, -hi), (j, hj)]))?
                    + eval(shifted(theta0, &[(i, -hi), (j, -hj)]))?;
                base.push(vec![v / (4.0 * hi * hj)]);
            }
            let (v, a) = richardson(&base)[0];
            h[(i, j)] = v;
            h[(j, i)] = v;
            agreement = agreement.max(a);
        }
    }
    let value = (&h + h.transpose()) * 0.5;
    Ok(FdHessian {
        value,
        steps,
        agreement,
    })
}
