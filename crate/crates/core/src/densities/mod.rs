//! Analytic density families with exact derivatives in state and parameter.
//!
//! Every family is evaluated through a [`Jet`]: the log-density together
//! with the gradient and Hessian of the log-density in the state `x` and in
//! the parameter `θ`. Working with log-derivatives keeps the deep tails
//! finite; the plain derivatives of `p` are recovered on demand.
//!
//! Parameter laws are fixed per family:
//!
//! * Gaussian: covariance `(v + θ)·R`
//! * Cauchy: scale `v + θ`, characteristic matrix `R`
//! * Lévy (d = 1): scale `(v + θ)²`, support `(a, ∞)`
//!
//! where `v ≥ 0` is an optional offset modelling an input of the same
//! stable family (for instance a Gaussian input of variance `v`).

mod bounds;
mod config;
mod families;
mod mixture;
mod pde;

use nalgebra::{DMatrix, DVector};

pub use bounds::{appendix_bounds_check, centered_grid, BoundEntry, BoundsReport};
pub use config::DensityConfig;
pub use mixture::{channel_output, gain_channel, posterior_mean, ChannelInput, MixtureMode};
pub use pde::{pde_residual, Coefficient, PdeSpec};

use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use families::{Cauchy, Gaussian, Levy};
use mixture::Mixture;

/// Largest supported state dimension.
pub const MAX_DIM: usize = 3;

/// Log-density and its first two derivatives in `x` and `θ` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    /// `log p`, `-∞` outside the open support.
    pub log_p: f64,
    pub score_x: DVector<f64>,
    pub hess_log_x: DMatrix<f64>,
    pub score_theta: DVector<f64>,
    pub hess_log_theta: DMatrix<f64>,
}

impl Jet {
    pub(crate) fn outside(d: usize, n: usize) -> Self {
        Self {
            log_p: f64::NEG_INFINITY,
            score_x: DVector::zeros(d),
            hess_log_x: DMatrix::zeros(d, d),
            score_theta: DVector::zeros(n),
            hess_log_theta: DMatrix::zeros(n, n),
        }
    }

    pub fn in_support(&self) -> bool {
        self.log_p > f64::NEG_INFINITY
    }

    pub fn value(&self) -> f64 {
        self.log_p.exp()
    }

    pub fn grad_x(&self) -> DVector<f64> {
        &self.score_x * self.value()
    }

    pub fn hess_x(&self) -> DMatrix<f64> {
        (&self.score_x * self.score_x.transpose() + &self.hess_log_x) * self.value()
    }

    pub fn grad_theta(&self) -> DVector<f64> {
        &self.score_theta * self.value()
    }

    pub fn hess_theta(&self) -> DMatrix<f64> {
        (&self.score_theta * self.score_theta.transpose() + &self.hess_log_theta) * self.value()
    }
}

/// Quantity selector for [`Density::pdf_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Value,
    GradX,
    HessX,
    GradTheta,
    HessTheta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluated {
    Scalar(f64),
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
}

impl Evaluated {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Evaluated::Scalar(v) => Some(*v),
            _ => None,
        }
    }
}

/// How the tails of a density decay, used to pick an integration region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailKind {
    /// Gaussian-like; a truncated box is enough.
    Light,
    /// Power-law tails on the whole space.
    Heavy,
    /// Support `(lower, ∞)` with a `x^{-3/2}` tail and an essential zero at `lower`.
    HalfLine { lower: f64 },
}

/// Per-axis location span and spread of a density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisProfile {
    pub lo: f64,
    pub hi: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailProfile {
    pub kind: TailKind,
    pub axes: Vec<AxisProfile>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Kind {
    Gaussian(Gaussian),
    Cauchy(Cauchy),
    Levy(Levy),
    Mixture(Mixture),
    Affine(Affine),
}

/// Image of a density under the invertible affine map `y = A x + b`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Affine {
    base: Box<Density>,
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b: DVector<f64>,
    log_abs_det: f64,
}

/// An analytic parametric density family.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    kind: Kind,
    dim: usize,
    n_params: usize,
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::InvalidDensity(format!(
            "state dimension must be in 1..={MAX_DIM}, got {d}"
        )));
    }
    Ok(())
}

fn check_offset(offset: f64) -> Result<()> {
    if !(offset >= 0.0) || !offset.is_finite() {
        return Err(Error::InvalidDensity(format!(
            "offset must be finite and >= 0, got {offset}"
        )));
    }
    Ok(())
}

impl Density {
    /// Gaussian with mean `mean` and covariance `θ·R`.
    pub fn gaussian(mean: &[f64], shape: DMatrix<f64>) -> Result<Self> {
        check_dim(mean.len())?;
        let shape = SpdMatrix::new(shape)?;
        if shape.dim() != mean.len() {
            return Err(Error::Dimension {
                expected: mean.len(),
                got: shape.dim(),
            });
        }
        Ok(Self {
            dim: mean.len(),
            n_params: 1,
            kind: Kind::Gaussian(Gaussian::new(DVector::from_column_slice(mean), shape, 0.0)),
        })
    }

    /// Standard scalar Gaussian family `N(0, θ)`.
    pub fn gaussian_1d() -> Self {
        Self::gaussian(&[0.0], DMatrix::identity(1, 1)).expect("valid")
    }

    /// Cauchy with location `location`, characteristic matrix `R` and scale `θ`.
    pub fn cauchy(location: &[f64], shape: DMatrix<f64>) -> Result<Self> {
        check_dim(location.len())?;
        let shape = SpdMatrix::new(shape)?;
        if shape.dim() != location.len() {
            return Err(Error::Dimension {
                expected: location.len(),
                got: shape.dim(),
            });
        }
        Ok(Self {
            dim: location.len(),
            n_params: 1,
            kind: Kind::Cauchy(Cauchy::new(
                DVector::from_column_slice(location),
                shape,
                0.0,
            )),
        })
    }

    pub fn cauchy_1d() -> Self {
        Self::cauchy(&[0.0], DMatrix::identity(1, 1)).expect("valid")
    }

    /// Lévy with support `(shift, ∞)` and scale `θ²`.
    pub fn levy(shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(Error::InvalidDensity("levy shift must be finite".into()));
        }
        Ok(Self {
            dim: 1,
            n_params: 1,
            kind: Kind::Levy(Levy::new(shift, 0.0)),
        })
    }

    /// Adds a same-family input offset `v`: the parameter law becomes `v + θ`.
    pub fn with_offset(mut self, offset: f64) -> Result<Self> {
        check_offset(offset)?;
        match &mut self.kind {
            Kind::Gaussian(g) => g.offset = offset,
            Kind::Cauchy(c) => c.offset = offset,
            Kind::Levy(l) => l.offset = offset,
            _ => {
                return Err(Error::Unsupported(
                    "offsets apply to gaussian, cauchy and levy families only".into(),
                ))
            }
        }
        Ok(self)
    }

    /// The image of this density under `y = A x + b`.
    pub fn affine_image(&self, a: DMatrix<f64>, b: &[f64]) -> Result<Self> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: a.nrows(),
            });
        }
        if b.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: b.len(),
            });
        }
        let det = a.determinant();
        let a_inv = a
            .clone()
            .try_inverse()
            .filter(|_| det.abs() > 0.0 && det.is_finite())
            .ok_or_else(|| Error::InvalidDensity("affine map must be invertible".into()))?;
        Ok(Self {
            dim: self.dim,
            n_params: self.n_params,
            kind: Kind::Affine(Affine {
                base: Box::new(self.clone()),
                a,
                a_inv,
                b: DVector::from_column_slice(b),
                log_abs_det: det.abs().ln(),
            }),
        })
    }

    pub(crate) fn from_mixture(m: Mixture) -> Self {
        Self {
            dim: m.dim_out(),
            n_params: m.n_params(),
            kind: Kind::Mixture(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub(crate) fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn family(&self) -> &'static str {
        match &self.kind {
            Kind::Gaussian(_) => "gaussian",
            Kind::Cauchy(_) => "cauchy",
            Kind::Levy(_) => "levy",
            Kind::Mixture(_) => "mixture",
            Kind::Affine(a) => a.base.family(),
        }
    }

    /// The innermost non-mixture family (the noise of a channel output).
    pub fn base_family(&self) -> &'static str {
        match &self.kind {
            Kind::Mixture(m) => m.noise().base_family(),
            Kind::Affine(a) => a.base.base_family(),
            _ => self.family(),
        }
    }

    /// Short descriptor for reports.
    pub fn label(&self) -> String {
        match &self.kind {
            Kind::Gaussian(g) => g.label(),
            Kind::Cauchy(c) => c.label(),
            Kind::Levy(l) => l.label(),
            Kind::Mixture(m) => m.label(),
            Kind::Affine(a) => format!("affine({})", a.base.label()),
        }
    }

    /// Shape matrix `R` for the elliptical families and for mixtures over them.
    pub fn shape(&self) -> Option<&SpdMatrix> {
        match &self.kind {
            Kind::Gaussian(g) => Some(&g.shape),
            Kind::Cauchy(c) => Some(&c.shape),
            Kind::Mixture(m) => m.noise().shape(),
            _ => None,
        }
    }

    /// Atoms and weights of a channel-output mixture.
    pub fn mixture_atoms(&self) -> Option<(&[DVector<f64>], &[f64])> {
        match &self.kind {
            Kind::Mixture(m) => Some((m.atoms(), m.weights())),
            _ => None,
        }
    }

    /// Noise density of a channel-output mixture.
    pub fn mixture_noise(&self) -> Option<&Density> {
        match &self.kind {
            Kind::Mixture(m) => Some(m.noise()),
            _ => None,
        }
    }

    /// `log p_N(y − G x_i)` for every atom of a channel-output mixture.
    pub fn component_log_pdfs(&self, y: &[f64], theta: &[f64]) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::Mixture(m) => Some(m.component_logs(y, theta)),
            _ => None,
        }
    }

    /// Location offset `v` of a plain family (0 for composites).
    pub fn offset(&self) -> f64 {
        match &self.kind {
            Kind::Gaussian(g) => g.offset,
            Kind::Cauchy(c) => c.offset,
            Kind::Levy(l) => l.offset,
            _ => 0.0,
        }
    }

    /// Mean or location vector of an elliptical family.
    pub fn center(&self) -> Option<&DVector<f64>> {
        match &self.kind {
            Kind::Gaussian(g) => Some(&g.mean),
            Kind::Cauchy(c) => Some(&c.location),
            _ => None,
        }
    }

    /// Validates `θ` for this family.
    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::Dimension {
                expected: self.n_params,
                got: theta.len(),
            });
        }
        match &self.kind {
            Kind::Mixture(m) => m.check_theta(theta),
            Kind::Affine(a) => a.base.check_theta(theta),
            _ => {
                let t = theta[0];
                if !(t > 0.0) || !t.is_finite() {
                    return Err(Error::Theta(t));
                }
                Ok(())
            }
        }
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `log p(x; θ)` without validation; `-∞` outside the support.
    pub fn log_pdf_unchecked(&self, x: &[f64], theta: &[f64]) -> f64 {
        match &self.kind {
            Kind::Gaussian(g) => g.log_pdf(x, theta[0]),
            Kind::Cauchy(c) => c.log_pdf(x, theta[0]),
            Kind::Levy(l) => l.log_pdf(x[0], theta[0]),
            Kind::Mixture(m) => m.log_pdf(x, theta),
            Kind::Affine(a) => {
                let y = DVector::from_column_slice(x);
                let z = &a.a_inv * (y - &a.b);
                a.base.log_pdf_unchecked(z.as_slice(), theta) - a.log_abs_det
            }
        }
    }

    pub fn log_pdf(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        self.check_theta(theta)?;
        Ok(self.log_pdf_unchecked(x, theta))
    }

    pub fn pdf(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        Ok(self.log_pdf(x, theta)?.exp())
    }

    /// Full jet without validation.
    pub fn jet_unchecked(&self, x: &[f64], theta: &[f64]) -> Jet {
        match &self.kind {
            Kind::Gaussian(g) => g.jet(x, theta[0]),
            Kind::Cauchy(c) => c.jet(x, theta[0]),
            Kind::Levy(l) => l.jet(x[0], theta[0]),
            Kind::Mixture(m) => m.jet(x, theta),
            Kind::Affine(a) => {
                let y = DVector::from_column_slice(x);
                let z = &a.a_inv * (y - &a.b);
                let mut j = a.base.jet_unchecked(z.as_slice(), theta);
                if !j.in_support() {
                    return j;
                }
                let at = a.a_inv.transpose();
                j.log_p -= a.log_abs_det;
                j.score_x = &at * &j.score_x;
                j.hess_log_x = &at * &j.hess_log_x * &a.a_inv;
                j
            }
        }
    }

    pub fn jet(&self, x: &[f64], theta: &[f64]) -> Result<Jet> {
        self.check_x(x)?;
        self.check_theta(theta)?;
        Ok(self.jet_unchecked(x, theta))
    }

    /// Exact value or derivative of the density; zero outside the support.
    pub fn pdf_eval(&self, x: &[f64], theta: &[f64], what: Quantity) -> Result<Evaluated> {
        if what == Quantity::Value {
            return Ok(Evaluated::Scalar(self.pdf(x, theta)?));
        }
        let j = self.jet(x, theta)?;
        Ok(match what {
            Quantity::Value => unreachable!(),
            Quantity::GradX => Evaluated::Vector(j.grad_x()),
            Quantity::HessX => Evaluated::Matrix(j.hess_x()),
            Quantity::GradTheta => Evaluated::Vector(j.grad_theta()),
            Quantity::HessTheta => Evaluated::Matrix(j.hess_theta()),
        })
    }

    /// Location span and spread per axis, for integration-region selection.
    pub fn tail_profile(&self, theta: &[f64]) -> TailProfile {
        match &self.kind {
            Kind::Gaussian(g) => g.profile(theta[0]),
            Kind::Cauchy(c) => c.profile(theta[0]),
            Kind::Levy(l) => l.profile(theta[0]),
            Kind::Mixture(m) => m.profile(theta),
            Kind::Affine(a) => {
                let base = a.base.tail_profile(theta);
                let axes = (0..self.dim)
                    .map(|i| {
                        let (mut lo, mut hi, mut s2) = (a.b[i], a.b[i], 0.0);
                        for (j, ax) in base.axes.iter().enumerate() {
                            let c = a.a[(i, j)];
                            let (u, v) = (c * ax.lo, c * ax.hi);
                            lo += u.min(v);
                            hi += u.max(v);
                            s2 += (c * ax.scale).powi(2);
                        }
                        AxisProfile {
                            lo,
                            hi,
                            scale: s2.sqrt(),
                        }
                    })
                    .collect();
                let kind = match base.kind {
                    TailKind::HalfLine { lower } => {
                        let c = a.a[(0, 0)];
                        if c > 0.0 {
                            TailKind::HalfLine {
                                lower: c * lower + a.b[0],
                            }
                        } else {
                            // reflected half-line: fall back to tangent mapping
                            TailKind::Heavy
                        }
                    }
                    k => k,
                };
                TailProfile { kind, axes }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn peak_values() {
        let g = Density::gaussian_1d();
        let v = g.pdf_eval(&[0.0], &[1.0], Quantity::Value).unwrap();
        assert!((v.scalar().unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        let c = Density::cauchy_1d();
        assert!((c.pdf(&[0.0], &[1.0]).unwrap() - 1.0 / PI).abs() < 1e-15);
        let c2 = c.pdf(&[0.0], &[2.0]).unwrap();
        assert!((c2 - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let l = Density::levy(0.0).unwrap();
        assert_eq!(l.pdf(&[0.0], &[1.0]).unwrap(), 0.0);
        assert!(l.pdf(&[1e-4], &[1.0]).unwrap() < 1e-300);
        assert_eq!(l.pdf(&[-1.0], &[1.0]).unwrap(), 0.0);
        let j = l.jet(&[-1.0], &[1.0]).unwrap();
        assert_eq!(j.grad_x()[0], 0.0);
        assert_eq!(j.hess_theta()[(0, 0)], 0.0);
    }

    #[test]
    fn levy_displayed_pdf() {
        let l = Density::levy(0.0).unwrap();
        for &(x, t) in &[(0.3f64, 1.0f64), (2.0, 0.5), (5.0, 2.0)] {
            let expected = t * (-(t * t) / (2.0 * x)).exp() / ((2.0 * PI).sqrt() * x.powf(1.5));
            assert!((l.pdf(&[x], &[t]).unwrap() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn theta_and_dimension_errors() {
        let g = Density::gaussian_1d();
        assert!(matches!(g.pdf(&[0.0], &[0.0]), Err(Error::Theta(_))));
        assert!(matches!(g.pdf(&[0.0], &[-1.0]), Err(Error::Theta(_))));
        assert!(matches!(
            g.pdf(&[0.0, 1.0], &[1.0]),
            Err(Error::Dimension { .. })
        ));
        assert!(Density::gaussian(&[0.0; 4], DMatrix::identity(4, 4)).is_err());
        assert!(Density::gaussian(&[0.0], DMatrix::from_element(1, 1, -1.0)).is_err());
    }

    #[test]
    fn affine_image_of_gaussian_matches_closed_form() {
        let p = Density::gaussian(&[0.5], DMatrix::identity(1, 1)).unwrap();
        let img = p
            .affine_image(DMatrix::from_element(1, 1, 2.0), &[1.0])
            .unwrap();
        let direct = Density::gaussian(&[2.0], DMatrix::from_element(1, 1, 4.0)).unwrap();
        for &y in &[-3.0, 0.0, 1.7, 4.0] {
            let a = img.jet(&[y], &[1.3]).unwrap();
            let b = direct.jet(&[y], &[1.3]).unwrap();
            assert!((a.log_p - b.log_p).abs() < 1e-13);
            assert!((a.score_x[0] - b.score_x[0]).abs() < 1e-13);
            assert!((a.hess_log_x[(0, 0)] - b.hess_log_x[(0, 0)]).abs() < 1e-13);
            assert!((a.score_theta[0] - b.score_theta[0]).abs() < 1e-13);
        }
    }
}
