//! φ-entropies, φ-divergences, φ-Fisher information and divergence
//! matrices, mutual φ-information and the φ-MSE matrix.

mod channel;

use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use channel::{mse_phi, mutual_phi_information, Channel};

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::functionals::EntropicFunctional;
use crate::linalg::min_eigenvalue;
use crate::numerics::{integrate_vec, QuadratureSpec, Region};

/// Densities below `e^LOG_FLOOR` (≈ 1e−280) contribute nothing to entropies.
pub const LOG_FLOOR: f64 = -644.0;
/// Nodes where both members of a pair are below `e^LOG_BOTH_ZERO` contribute 0.
pub const LOG_BOTH_ZERO: f64 = -700.0;
const LOG_RATIO_CAP: f64 = 700.0;

/// A density frozen at a parameter value.
#[derive(Debug, Clone, Copy)]
pub struct At<'a> {
    pub density: &'a Density,
    pub theta: &'a [f64],
}

impl Density {
    pub fn at<'a>(&'a self, theta: &'a [f64]) -> At<'a> {
        At {
            density: self,
            theta,
        }
    }
}

impl At<'_> {
    fn check(&self) -> Result<()> {
        self.density.check_theta(self.theta)
    }
}

/// A scalar measure with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measure {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoKind {
    FisherInfo,
    FisherDiv,
    MsePhi,
}

impl InfoKind {
    fn name(self) -> &'static str {
        match self {
            InfoKind::FisherInfo => "fisher_info",
            InfoKind::FisherDiv => "fisher_div",
            InfoKind::MsePhi => "mse_phi",
        }
    }
}

/// A symmetric positive semidefinite information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix {
    pub kind: InfoKind,
    pub value: DMatrix<f64>,
    /// Quadrature error estimate per entry.
    pub error: DMatrix<f64>,
}

pub(crate) fn upper_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Writes `w·v vᵗ` (upper triangle, row-major) into `out`.
pub(crate) fn push_outer(v: &DVector<f64>, w: f64, out: &mut [f64]) {
    let n = v.len();
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            out[k] += w * v[i] * v[j];
            k += 1;
        }
    }
}

pub(crate) fn from_upper(n: usize, upper: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = upper[k];
            m[(j, i)] = upper[k];
            k += 1;
        }
    }
    m
}

impl InfoMatrix {
    /// Assembles a matrix from upper-triangle integrals and checks it is PSD.
    pub(crate) fn from_upper(
        kind: InfoKind,
        n: usize,
        value: &[f64],
        error: &[f64],
    ) -> Result<Self> {
        let value = from_upper(n, value);
        let error = from_upper(n, error);
        Self::new(kind, value, error)
    }

    pub fn new(kind: InfoKind, value: DMatrix<f64>, error: DMatrix<f64>) -> Result<Self> {
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} entries", kind.name())));
        }
        let value = (&value + value.transpose()) * 0.5;
        let min = min_eigenvalue(&value);
        let tr = value.trace().abs();
        let slack = 1e-9 * tr + error.amax();
        if min < -slack.max(1e-300) {
            return Err(Error::NotPsd {
                what: kind.name(),
                min_eigenvalue: min,
            });
        }
        Ok(Self { kind, value, error })
    }

    pub fn dim(&self) -> usize {
        self.value.nrows()
    }

    /// The `(0, 0)` entry, i.e. the value of a scalar information.
    pub fn scalar(&self) -> f64 {
        self.value[(0, 0)]
    }

    pub fn trace(&self) -> f64 {
        self.value.trace()
    }
}

/// First error raised inside an integrand; the integrand itself returns 0.
pub(crate) struct ErrorSlot(Mutex<Option<Error>>);

impl ErrorSlot {
    pub fn new() -> Self {
        Self(Mutex::new(None))
    }

    pub fn record(&self, e: Error) {
        let mut g = self.0.lock().expect("poisoned");
        if g.is_none() {
            *g = Some(e);
        }
    }

    pub fn take(self) -> Result<()> {
        match self.0.into_inner().expect("poisoned") {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// `−φ(p)` with the density floor applied.
#[inline]
pub(crate) fn entropy_term(f: &EntropicFunctional, log_p: f64) -> f64 {
    if log_p < LOG_FLOOR {
        0.0
    } else {
        -f.value(log_p.exp())
    }
}

/// `p²φ″(p)` with the density floor applied.
#[inline]
pub(crate) fn fisher_weight(f: &EntropicFunctional, log_p: f64) -> f64 {
    if log_p < LOG_FLOOR {
        0.0
    } else {
        f.curvature_weight(log_p.exp())
    }
}

/// Ratio `r = p1/p0` and `p0`, or `None` where the pair contributes 0.
#[inline]
pub(crate) fn pair_ratio(lp1: f64, lp0: f64, x: &[f64]) -> Result<Option<(f64, f64)>> {
    if lp1 < LOG_BOTH_ZERO && lp0 < LOG_BOTH_ZERO {
        return Ok(None);
    }
    if lp0 == f64::NEG_INFINITY {
        return Err(Error::Support(x.to_vec()));
    }
    // Beyond e^700 the ratio is clamped and p0 rescaled so that p0·r = p1;
    // terms p1·φ(r)/r keep their order of magnitude.
    let lr = lp1 - lp0;
    if lr > LOG_RATIO_CAP {
        return Ok(Some((LOG_RATIO_CAP.exp(), (lp1 - LOG_RATIO_CAP).exp())));
    }
    Ok(Some((lr.exp(), lp0.exp())))
}

/// `p0·φ(p1/p0)`.
#[inline]
pub(crate) fn divergence_term(
    f: &EntropicFunctional,
    lp1: f64,
    lp0: f64,
    x: &[f64],
) -> Result<f64> {
    Ok(match pair_ratio(lp1, lp0, x)? {
        None => 0.0,
        Some((r, p0)) => p0 * f.value(r),
    })
}

/// `p0·r²φ″(r)` with `r = p1/p0`.
#[inline]
pub(crate) fn ratio_weight(f: &EntropicFunctional, lp1: f64, lp0: f64, x: &[f64]) -> Result<f64> {
    Ok(match pair_ratio(lp1, lp0, x)? {
        None => 0.0,
        Some((r, p0)) => p0 * f.curvature_weight(r),
    })
}

fn require_phi0(f: &EntropicFunctional) -> Result<()> {
    if !f.phi0_zero() {
        return Err(Error::Unsupported(format!(
            "phi-entropy needs phi(0) = 0, which `{}` does not satisfy",
            f.label()
        )));
    }
    Ok(())
}

fn same_dim(a: &Density, b: &Density) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// `H_φ(p) = −∫ φ(p(x)) dx`.
pub fn phi_entropy(p: At<'_>, f: &EntropicFunctional, quad: &QuadratureSpec) -> Result<Measure> {
    require_phi0(f)?;
    p.check()?;
    let region = Region::for_density(p.density, p.theta, quad)?;
    let est = integrate_vec(
        |x, out| out[0] = entropy_term(f, p.density.log_pdf_unchecked(x, p.theta)),
        1,
        &region,
        quad,
    )?;
    Ok(Measure {
        value: est.value[0],
        error: est.error[0],
    })
}

/// `D_φ(p1‖p0) = ∫ φ(p1/p0) p0 dx`; requires `supp p1 ⊆ supp p0`.
pub fn phi_divergence(
    p1: At<'_>,
    p0: At<'_>,
    f: &EntropicFunctional,
    quad: &QuadratureSpec,
) -> Result<Measure> {
    p1.check()?;
    p0.check()?;
    same_dim(p1.density, p0.density)?;
    let region = Region::for_densities(&[(p1.density, p1.theta), (p0.density, p0.theta)], quad)?;
    let slot = ErrorSlot::new();
    let est = integrate_vec(
        |x, out| {
            let lp1 = p1.density.log_pdf_unchecked(x, p1.theta);
            let lp0 = p0.density.log_pdf_unchecked(x, p0.theta);
            out[0] = divergence_term(f, lp1, lp0, x).unwrap_or_else(|e| {
                slot.record(e);
                0.0
            });
        },
        1,
        &region,
        quad,
    );
    slot.take()?;
    let est = est?;
    Ok(Measure {
        value: est.value[0],
        error: est.error[0],
    })
}

/// Which gradient a Fisher-type matrix is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMode {
    /// `∇_θ` (n×n).
    Param,
    /// `∇_x` (d×d).
    Nonparam,
}

fn fisher_single(
    p: At<'_>,
    f: &EntropicFunctional,
    mode: FisherMode,
    quad: &QuadratureSpec,
) -> Result<InfoMatrix> {
    p.check()?;
    let n = match mode {
        FisherMode::Param => p.density.n_params(),
        FisherMode::Nonparam => p.density.dim(),
    };
    let region = Region::for_density(p.density, p.theta, quad)?;
    let est = integrate_vec(
        |x, out| {
            let j = p.density.jet_unchecked(x, p.theta);
            let w = fisher_weight(f, j.log_p);
            if w != 0.0 {
                let s = match mode {
                    FisherMode::Param => &j.score_theta,
                    FisherMode::Nonparam => &j.score_x,
                };
                push_outer(s, w, out);
            }
        },
        upper_len(n),
        &region,
        quad,
    )?;
    InfoMatrix::from_upper(InfoKind::FisherInfo, n, &est.value, &est.error)
}

/// `J_θ^φ(p) = ∫ (∇_θ log p)(∇_θ log p)ᵗ p² φ″(p) dx`.
pub fn phi_fisher_param(
    p: At<'_>,
    f: &EntropicFunctional,
    quad: &QuadratureSpec,
) -> Result<InfoMatrix> {
    fisher_single(p, f, FisherMode::Param, quad)
}

/// `J^φ(p) = ∫ (∇_x log p)(∇_x log p)ᵗ p² φ″(p) dx`.
pub fn phi_fisher_nonparam(
    p: At<'_>,
    f: &EntropicFunctional,
    quad: &QuadratureSpec,
) -> Result<InfoMatrix> {
    fisher_single(p, f, FisherMode::Nonparam, quad)
}

/// `∫ [∇ log(p1/p0)][∇ log(p1/p0)]ᵗ (p1/p0)² φ″(p1/p0) p0 dx`.
pub fn phi_fisher_div(
    p1: At<'_>,
    p0: At<'_>,
    f: &EntropicFunctional,
    mode: FisherMode,
    quad: &QuadratureSpec,
) -> Result<InfoMatrix> {
    p1.check()?;
    p0.check()?;
    same_dim(p1.density, p0.density)?;
    let n = match mode {
        FisherMode::Param => {
            if p1.density.n_params() != p0.density.n_params() {
                return Err(Error::Dimension {
                    expected: p1.density.n_params(),
                    got: p0.density.n_params(),
                });
            }
            p1.density.n_params()
        }
        FisherMode::Nonparam => p1.density.dim(),
    };
    let region = Region::for_densities(&[(p1.density, p1.theta), (p0.density, p0.theta)], quad)?;
    let slot = ErrorSlot::new();
    let est = integrate_vec(
        |x, out| {
            let j1 = p1.density.jet_unchecked(x, p1.theta);
            let j0 = p0.density.jet_unchecked(x, p0.theta);
            match ratio_weight(f, j1.log_p, j0.log_p, x) {
                Ok(w) if w != 0.0 => {
                    let v = match mode {
                        FisherMode::Param => &j1.score_theta - &j0.score_theta,
                        FisherMode::Nonparam => &j1.score_x - &j0.score_x,
                    };
                    push_outer(&v, w, out);
                }
                Ok(_) => {}
                Err(e) => slot.record(e),
            }
        },
        upper_len(n),
        &region,
        quad,
    );
    slot.take()?;
    let est = est?;
    InfoMatrix::from_upper(InfoKind::FisherDiv, n, &est.value, &est.error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::f64::consts::{E, PI};

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn hcdt2() -> EntropicFunctional {
        EntropicFunctional::with_param("hcdt", 2.0).unwrap()
    }

    #[test]
    fn entropies() {
        let g = Density::gaussian_1d();
        let sh = EntropicFunctional::shannon();
        let h = phi_entropy(g.at(&[1.0]), &sh, &q()).unwrap().value;
        assert!((h - 0.5 * (2.0 * PI * E).ln()).abs() < 1e-9);
        let h2 = phi_entropy(g.at(&[1.0]), &hcdt2(), &q()).unwrap().value;
        assert!((h2 - (1.0 - 0.5 / PI.sqrt())).abs() < 1e-9);
        let g2 = Density::gaussian(&[0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let h = phi_entropy(g2.at(&[1.0]), &sh, &q()).unwrap().value;
        assert!((h - (2.0 * PI * E).ln()).abs() < 1e-8);
    }

    #[test]
    fn divergences() {
        let g = Density::gaussian_1d();
        let sh = EntropicFunctional::shannon();
        let kl = phi_divergence(g.at(&[2.0]), g.at(&[1.0]), &sh, &q())
            .unwrap()
            .value;
        assert!((kl - 0.5 * (1.0 - 2f64.ln())).abs() < 1e-9);
        let pearson = EntropicFunctional::with_param("vajda", 2.0).unwrap();
        let v = phi_divergence(g.at(&[1.0]), g.at(&[2.0]), &pearson, &q())
            .unwrap()
            .value;
        assert!((v - (2.0 / 3f64.sqrt() - 1.0)).abs() < 1e-9);
        let same = phi_divergence(g.at(&[1.3]), g.at(&[1.3]), &sh, &q())
            .unwrap()
            .value;
        assert!(same.abs() < 1e-14);
        let l0 = Density::levy(1.0).unwrap();
        let l1 = Density::levy(0.0).unwrap();
        assert!(matches!(
            phi_divergence(l1.at(&[1.0]), l0.at(&[1.0]), &sh, &q()),
            Err(Error::Support(_))
        ));
    }

    #[test]
    fn fisher_informations() {
        let sh = EntropicFunctional::shannon();
        let g = Density::gaussian_1d();
        let c = Density::cauchy_1d();
        let l = Density::levy(0.0).unwrap();
        let jt = |p: &Density| phi_fisher_param(p.at(&[1.0]), &sh, &q()).unwrap().scalar();
        assert!((jt(&g) - 0.5).abs() < 1e-9);
        assert!((jt(&c) - 0.5).abs() < 1e-9);
        assert!((jt(&l) - 2.0).abs() < 1e-8);
        let jx = |p: &Density, f: &EntropicFunctional| {
            phi_fisher_nonparam(p.at(&[1.0]), f, &q()).unwrap().scalar()
        };
        assert!((jx(&g, &sh) - 1.0).abs() < 1e-9);
        assert!((jx(&g, &hcdt2()) - 0.5 / PI.sqrt()).abs() < 1e-9);
        assert!((jx(&c, &sh) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn fisher_divergences() {
        let sh = EntropicFunctional::shannon();
        let g = Density::gaussian_1d();
        let m =
            phi_fisher_div(g.at(&[2.0]), g.at(&[1.0]), &sh, FisherMode::Nonparam, &q()).unwrap();
        assert!((m.scalar() - 0.5).abs() < 1e-9);
        let z = phi_fisher_div(g.at(&[2.0]), g.at(&[2.0]), &sh, FisherMode::Param, &q()).unwrap();
        assert_eq!(z.scalar(), 0.0);
    }

    #[test]
    fn psd_guard() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let e = InfoMatrix::new(InfoKind::FisherInfo, bad, DMatrix::zeros(2, 2));
        assert!(matches!(e, Err(Error::NotPsd { .. })));
    }
}
