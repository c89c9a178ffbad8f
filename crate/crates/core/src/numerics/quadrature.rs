//! Globally adaptive Gauss–Kronrod (7/15) quadrature, nested per axis for
//! `d ≥ 2`, over a [`Region`] of mapped axes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::region::Region;
use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod nodes (and the centre)
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Axis substitution strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Substitution {
    /// Chosen from the density's tail profile.
    #[default]
    Auto,
    /// Plain truncated box.
    None,
    /// `x = c + s·tan t`.
    Tangent,
    /// `x = a + 1/t²` on a half-line.
    SqrtInverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Tail mass allowed outside a truncated box.
    pub truncation_mass: f64,
    pub substitution: Substitution,
    /// Panel budget per axis integral.
    pub max_subdivisions: usize,
    pub initial_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            truncation_mass: 1e-12,
            substitution: Substitution::Auto,
            max_subdivisions: 2000,
            initial_panels: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::config("quadrature", "tolerances must be > 0"));
        }
        if !(self.truncation_mass > 0.0 && self.truncation_mass <= 1e-6) {
            return Err(Error::config(
                "quadrature.truncation_mass",
                "must lie in (0, 1e-6]",
            ));
        }
        if self.max_subdivisions < self.initial_panels.max(1) || self.initial_panels == 0 {
            return Err(Error::config(
                "quadrature.max_subdivisions",
                "must be >= initial_panels >= 1",
            ));
        }
        Ok(())
    }

    /// Looser tolerances for the inner axes of nested integrals.
    fn inner(&self, length: f64) -> Self {
        Self {
            abs_tol: self.abs_tol / length.max(1.0),
            ..*self
        }
    }
}

/// Componentwise estimate of a vector integral.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: Vec<f64>,
    pub error: Vec<f64>,
    /// `∫|f|`, used for the round-off floor.
    pub abs: Vec<f64>,
    pub evaluations: usize,
}

impl Estimate {
    pub fn max_error(&self) -> f64 {
        self.error.iter().cloned().fold(0.0, f64::max)
    }
}

/// Frozen nodes and weights (Jacobians included) of an adaptive integration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadratureRule {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `Σ w_i f(x_i)` for a vector integrand. Chunks are summed in a fixed
    /// order, so the result does not depend on the thread count.
    pub fn apply<F>(&self, n_out: usize, f: F) -> Vec<f64>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        const CHUNK: usize = 256;
        let partial: Vec<Vec<f64>> = (0..self.len())
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|idx| {
                let mut acc = vec![0.0; n_out];
                let mut buf = vec![0.0; n_out];
                for &i in idx {
                    buf.iter_mut().for_each(|b| *b = 0.0);
                    f(self.point(i), &mut buf);
                    let w = self.weights[i];
                    for (a, b) in acc.iter_mut().zip(&buf) {
                        *a += w * b;
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![0.0; n_out];
        for p in partial {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        total
    }

    pub fn apply_scalar<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.apply(1, |x, out| out[0] = f(x))[0]
    }
}

/// Inner rule attached to one outer node: points (flattened) and weights.
#[derive(Debug, Clone, Default)]
struct Fragment {
    points: Vec<f64>,
    weights: Vec<f64>,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    abs: Vec<f64>,
    frags: Vec<(f64, Fragment)>,
}

type NodeEval<'a> = dyn FnMut(f64, &mut [f64]) -> Result<Fragment> + 'a;

fn gk15(
    eval: &mut NodeEval<'_>,
    a: f64,
    b: f64,
    n_out: usize,
    keep: bool,
    evals: &mut usize,
) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = vec![vec![0.0; n_out]; 15];
    let mut frags = Vec::with_capacity(if keep { 15 } else { 0 });
    // node order: centre, then ± pairs for XGK[0..7]
    let mut nodes = [(c, WGK[7]); 15];
    for j in 0..7 {
        nodes[1 + 2 * j] = (c - h * XGK[j], WGK[j]);
        nodes[2 + 2 * j] = (c + h * XGK[j], WGK[j]);
    }
    for (k, &(t, w)) in nodes.iter().enumerate() {
        let fr = eval(t, &mut fv[k])?;
        if fv[k].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("integrand at t = {t}")));
        }
        if keep {
            frags.push((w * h, fr));
        }
    }
    *evals += 15;
    let mut value = vec![0.0; n_out];
    let mut error = vec![0.0; n_out];
    let mut abs = vec![0.0; n_out];
    for i in 0..n_out {
        let f = |k: usize| fv[k][i];
        let mut resk = WGK[7] * f(0);
        let mut resg = WG[3] * f(0);
        let mut resabs = WGK[7] * f(0).abs();
        for j in 0..7 {
            let s = f(1 + 2 * j) + f(2 + 2 * j);
            resk += WGK[j] * s;
            resabs += WGK[j] * (f(1 + 2 * j).abs() + f(2 + 2 * j).abs());
            if j % 2 == 1 {
                resg += WG[j / 2] * s;
            }
        }
        let mean = resk * 0.5;
        let mut resasc = WGK[7] * (f(0) - mean).abs();
        for j in 0..7 {
            resasc += WGK[j] * ((f(1 + 2 * j) - mean).abs() + (f(2 + 2 * j) - mean).abs());
        }
        let mut err = ((resk - resg) * h).abs();
        let resasc = resasc * h.abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        let resabs = resabs * h.abs();
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        value[i] = resk * h;
        error[i] = err;
        abs[i] = resabs;
    }
    Ok(Panel {
        a,
        b,
        value,
        error,
        abs,
        frags,
    })
}

fn sum_cols(panels: &[Panel], pick: impl Fn(&Panel) -> &Vec<f64>, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for p in panels {
        for (o, v) in out.iter_mut().zip(pick(p)) {
            *o += v;
        }
    }
    out
}

/// Adaptive integration of `eval` over `[lo, hi]`.
fn adapt_1d(
    eval: &mut NodeEval<'_>,
    lo: f64,
    hi: f64,
    n_out: usize,
    spec: &QuadratureSpec,
    keep: bool,
) -> Result<(Estimate, Fragment)> {
    let n0 = spec.initial_panels.max(1);
    let mut evals = 0;
    let mut panels = Vec::with_capacity(spec.max_subdivisions);
    for i in 0..n0 {
        let a = lo + (hi - lo) * i as f64 / n0 as f64;
        let b = if i + 1 == n0 {
            hi
        } else {
            lo + (hi - lo) * (i + 1) as f64 / n0 as f64
        };
        panels.push(gk15(eval, a, b, n_out, keep, &mut evals)?);
    }
    let min_width = (hi - lo).abs() * 1e-13;
    loop {
        let value = sum_cols(&panels, |p| &p.value, n_out);
        let error = sum_cols(&panels, |p| &p.error, n_out);
        let abs = sum_cols(&panels, |p| &p.abs, n_out);
        let tol: Vec<f64> = value
            .iter()
            .zip(&abs)
            .map(|(v, a)| {
                spec.abs_tol
                    .max(spec.rel_tol * v.abs())
                    .max(1e3 * f64::EPSILON * a)
            })
            .collect();
        if error.iter().zip(&tol).all(|(e, t)| e <= t) {
            let frag = if keep {
                merge(&panels)
            } else {
                Fragment::default()
            };
            return Ok((
                Estimate {
                    value,
                    error,
                    abs,
                    evaluations: evals,
                },
                frag,
            ));
        }
        let worst = (0..panels.len())
            .max_by(|&i, &j| {
                let key = |p: &Panel| {
                    p.error
                        .iter()
                        .zip(&tol)
                        .map(|(e, t)| e / t)
                        .fold(0.0, f64::max)
                };
                key(&panels[i]).total_cmp(&key(&panels[j]))
            })
            .expect("non-empty");
        let (idx, _) = error
            .iter()
            .zip(&tol)
            .enumerate()
            .max_by(|a, b| (a.1 .0 / a.1 .1).total_cmp(&(b.1 .0 / b.1 .1)))
            .expect("non-empty");
        let p = &panels[worst];
        if panels.len() >= spec.max_subdivisions || (p.b - p.a).abs() < min_width {
            return Err(Error::Quadrature {
                error: error[idx],
                tolerance: tol[idx],
                subdivisions: panels.len(),
            });
        }
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk15(eval, p.a, mid, n_out, keep, &mut evals)?);
        panels.push(gk15(eval, mid, p.b, n_out, keep, &mut evals)?);
    }
}

fn merge(panels: &[Panel]) -> Fragment {
    let mut sorted: Vec<&Panel> = panels.iter().collect();
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut out = Fragment::default();
    for p in sorted {
        for (w, fr) in &p.frags {
            out.points.extend_from_slice(&fr.points);
            out.weights.extend(fr.weights.iter().map(|v| v * w));
        }
    }
    out
}

fn nested<F>(
    f: &F,
    region: &Region,
    axis: usize,
    prefix: &mut Vec<f64>,
    n_out: usize,
    spec: &QuadratureSpec,
    keep: bool,
    evals: &mut usize,
) -> Result<(Estimate, Fragment)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let map = &region.axes()[axis];
    let (lo, hi) = map.t_range();
    let last = axis + 1 == region.dim();
    let inner_spec = spec.inner(hi - lo);
    let mut inner_evals = 0usize;
    let mut eval = |t: f64, out: &mut [f64]| -> Result<Fragment> {
        let (x, jac) = map.apply(t);
        prefix.push(x);
        let res = if jac == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            Ok(Fragment::default())
        } else if last {
            out.iter_mut().for_each(|o| *o = 0.0);
            f(prefix, out);
            out.iter_mut().for_each(|o| *o *= jac);
            Ok(if keep {
                Fragment {
                    points: prefix.clone(),
                    weights: vec![jac],
                }
            } else {
                Fragment::default()
            })
        } else {
            nested(
                f,
                region,
                axis + 1,
                prefix,
                n_out,
                &inner_spec,
                keep,
                &mut inner_evals,
            )
            .map(|(est, mut fr)| {
                for (o, v) in out.iter_mut().zip(&est.value) {
                    *o = v * jac;
                }
                fr.weights.iter_mut().for_each(|w| *w *= jac);
                fr
            })
        };
        prefix.pop();
        res
    };
    let (mut est, frag) = adapt_1d(&mut eval, lo, hi, n_out, spec, keep)?;
    *evals += if last { est.evaluations } else { inner_evals };
    est.evaluations = *evals;
    Ok((est, frag))
}

/// Integrates a vector-valued `f` over `region`.
pub fn integrate_vec<F>(
    f: F,
    n_out: usize,
    region: &Region,
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(&[f64], &mut [f64]),
{
    spec.validate()?;
    let mut evals = 0;
    let mut prefix = Vec::with_capacity(region.dim());
    nested(&f, region, 0, &mut prefix, n_out, spec, false, &mut evals).map(|r| r.0)
}

/// Integrates a scalar `f` over `region`; returns `(value, error_estimate)`.
pub fn integrate<F>(f: F, region: &Region, spec: &QuadratureSpec) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    let est = integrate_vec(|x, out| out[0] = f(x), 1, region, spec)?;
    Ok((est.value[0], est.error[0]))
}

/// Adapts to `f` and freezes the resulting nodes into a reusable rule.
pub fn build_rule<F>(
    f: F,
    n_out: usize,
    region: &Region,
    spec: &QuadratureSpec,
) -> Result<(QuadratureRule, Estimate)>
where
    F: Fn(&[f64], &mut [f64]),
{
    spec.validate()?;
    let mut evals = 0;
    let mut prefix = Vec::with_capacity(region.dim());
    let (est, frag) = nested(&f, region, 0, &mut prefix, n_out, spec, true, &mut evals)?;
    Ok((
        QuadratureRule {
            dim: region.dim(),
            points: frag.points,
            weights: frag.weights,
        },
        est,
    ))
}
