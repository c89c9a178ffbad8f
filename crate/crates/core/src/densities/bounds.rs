//! Domination bounds on a Gaussian noise density and its derivatives,
//! checked numerically on a grid.

use serde::Serialize;
use std::f64::consts::{E, PI};

use super::{Density, Kind};
use crate::error::{Error, Result};
use crate::linalg::sym_spectral_norm;

/// Relative slack allowed for bounds that are attained exactly (at `y = μ`).
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEntry {
    pub name: &'static str,
    pub bound: f64,
    pub max_value: f64,
    /// Grid point where `max_value` is attained.
    pub argmax: Vec<f64>,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub theta: f64,
    pub k: f64,
    pub constant_scale: f64,
    pub points: usize,
    pub entries: Vec<BoundEntry>,
    pub pass: bool,
}

/// Checks on `grid` that
///
/// * `|∂θp| ≤ αd / (2θ^{d/2+1})`
/// * `‖R^{½}∇p‖ ≤ α e^{−½} θ^{−(d+1)/2}`
/// * `‖R^{½}(Hp)R^{½}‖_F ≤ α √d θ^{−d/2−1}`
/// * `‖∇p‖ / p^k ≤ ‖R^{−½}‖ / (√((1−k)eθ) (2πθ)^{(1−k)d/2} |R|^{(1−k)/2})`
///
/// with `α = (2π)^{−d/2}|R|^{−½}`. Every bound is multiplied by
/// `constant_scale` (1 for the genuine check).
pub fn appendix_bounds_check(
    noise: &Density,
    theta: f64,
    grid: &[Vec<f64>],
    k: f64,
    constant_scale: f64,
) -> Result<BoundsReport> {
    let g = match noise.kind() {
        Kind::Gaussian(g) if g.offset == 0.0 => g,
        _ => {
            return Err(Error::Unsupported(
                "domination bounds are stated for the plain gaussian family".into(),
            ))
        }
    };
    noise.check_theta(&[theta])?;
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::range("k", k, "must lie in (0, 1)"));
    }
    let d = noise.dim() as f64;
    let r = &g.shape;
    let alpha = (2.0 * PI).powf(-d / 2.0) * (-0.5 * r.log_det()).exp();
    let bounds = [
        alpha * d / (2.0 * theta.powf(d / 2.0 + 1.0)),
        alpha * (-0.5f64).exp() * theta.powf(-(d + 1.0) / 2.0),
        alpha * d.sqrt() * theta.powf(-d / 2.0 - 1.0),
        sym_spectral_norm(r.inv_sqrt())
            / (((1.0 - k) * E * theta).sqrt()
                * (2.0 * PI * theta).powf((1.0 - k) * d / 2.0)
                * ((1.0 - k) * 0.5 * r.log_det()).exp()),
    ];
    let names = ["dtheta_p", "grad_p", "hess_p", "grad_ratio"];
    let mut maxima = [0.0f64; 4];
    let mut argmax = vec![Vec::new(); 4];
    for y in grid {
        let j = noise.jet(y, &[theta])?;
        let vals = [
            j.grad_theta()[0].abs(),
            (r.sqrt() * j.grad_x()).norm(),
            (r.sqrt() * j.hess_x() * r.sqrt()).norm(),
            // ‖s‖ p^{1−k} in log space so the far tails do not underflow to 0/0
            if j.score_x.norm() == 0.0 {
                0.0
            } else {
                (j.score_x.norm().ln() + (1.0 - k) * j.log_p).exp()
            },
        ];
        for i in 0..4 {
            if !vals[i].is_finite() {
                return Err(Error::NonFinite(format!("{} at {:?}", names[i], y)));
            }
            if vals[i] > maxima[i] || argmax[i].is_empty() {
                maxima[i] = vals[i];
                argmax[i] = y.clone();
            }
        }
    }
    let entries: Vec<BoundEntry> = (0..4)
        .map(|i| {
            let bound = bounds[i] * constant_scale;
            BoundEntry {
                name: names[i],
                bound,
                max_value: maxima[i],
                argmax: argmax[i].clone(),
                slack: bound - maxima[i],
                pass: maxima[i] <= bound * (1.0 + SLACK),
            }
        })
        .collect();
    Ok(BoundsReport {
        theta,
        k,
        constant_scale,
        points: grid.len(),
        pass: entries.iter().all(|e| e.pass),
        entries,
    })
}

/// Tensor grid with `n` points per axis on `[−half_width, half_width]^d`.
pub fn centered_grid(d: usize, half_width: f64, n: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..n)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (n.max(2) - 1) as f64)
        .collect();
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn bounds_hold_and_scaled_bounds_fail() {
        let g = Density::gaussian_1d();
        let grid = centered_grid(1, 10.0, 401);
        let rep = appendix_bounds_check(&g, 1.0, &grid, 0.5, 1.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        let bad = appendix_bounds_check(&g, 1.0, &grid, 0.5, 0.5).unwrap();
        assert!(!bad.pass);
        let g2 = Density::gaussian(
            &[0.0, 0.0],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]),
        )
        .unwrap();
        let rep2 = appendix_bounds_check(&g2, 0.5, &centered_grid(2, 8.0, 81), 0.3, 1.0).unwrap();
        assert!(rep2.pass, "{rep2:?}");
    }
}
