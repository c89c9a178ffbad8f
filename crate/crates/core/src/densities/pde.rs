//! Governing PDEs of the density families, evaluated with exact derivatives.

use nalgebra::DMatrix;

use super::{Density, Kind, MixtureMode};
use crate::error::{Error, Result};

/// A coefficient `c · θ^k` (a constant when `k = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub c: f64,
    pub k: f64,
}

impl Coefficient {
    pub const ZERO: Coefficient = Coefficient { c: 0.0, k: 0.0 };

    pub fn constant(c: f64) -> Self {
        Self { c, k: 0.0 }
    }

    pub fn power(c: f64, k: f64) -> Self {
        Self { c, k }
    }

    pub fn at(&self, theta: f64) -> f64 {
        if self.k == 0.0 {
            self.c
        } else {
            self.c * theta.powf(self.k)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0
    }
}

/// A PDE in `(x, θ)` satisfied by a density family.
#[derive(Debug, Clone, PartialEq)]
pub enum PdeSpec {
    /// `α₁ ∂θp + α₂ ∂²θp = β₁ ∂x p + β₂ ∂²x p` in one dimension, with
    /// state-independent coefficients.
    Scalar {
        alpha1: Coefficient,
        alpha2: Coefficient,
        beta1: Coefficient,
        beta2: Coefficient,
    },
    /// `∂θp = ½ Tr(R Hₓp)`.
    HeatTrace { r: DMatrix<f64> },
    /// `∂²θp = −Tr(R Hₓp)`.
    CauchyTrace { r: DMatrix<f64> },
    /// Conditional density of a gain channel, `θ = vec(G)`:
    /// `(∇_G p) Gᵗ + p I + (∇_y p) yᵗ + (H_y p) R = 0`.
    GuoConditional { r: DMatrix<f64> },
}

impl PdeSpec {
    pub fn scalar(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64) -> Result<Self> {
        Self::scalar_with(
            Coefficient::constant(alpha1),
            Coefficient::constant(alpha2),
            Coefficient::constant(beta1),
            Coefficient::constant(beta2),
        )
    }

    pub fn scalar_with(
        alpha1: Coefficient,
        alpha2: Coefficient,
        beta1: Coefficient,
        beta2: Coefficient,
    ) -> Result<Self> {
        if alpha1.is_zero() && alpha2.is_zero() {
            return Err(Error::InvalidDensity(
                "at least one of alpha1, alpha2 must be nonzero".into(),
            ));
        }
        Ok(PdeSpec::Scalar {
            alpha1,
            alpha2,
            beta1,
            beta2,
        })
    }

    /// Heat equation `∂θp = ½ ∂²x p`.
    pub fn heat() -> Self {
        Self::scalar(1.0, 0.0, 0.0, 0.5).expect("valid")
    }

    /// Laplace equation `∂²θp = −∂²x p`.
    pub fn laplace() -> Self {
        Self::scalar(0.0, 1.0, 0.0, -1.0).expect("valid")
    }

    /// Parabolic equation `∂²θp = 2 ∂x p`.
    pub fn parabolic() -> Self {
        Self::scalar(0.0, 1.0, 2.0, 0.0).expect("valid")
    }

    pub fn name(&self) -> String {
        match self {
            PdeSpec::Scalar {
                alpha1,
                alpha2,
                beta1,
                beta2,
            } => {
                let v = |c: &Coefficient| if c.k == 0.0 { Some(c.c) } else { None };
                match (v(alpha1), v(alpha2), v(beta1), v(beta2)) {
                    (Some(a1), Some(0.0), Some(0.0), Some(b2)) if a1 == 1.0 && b2 == 0.5 => {
                        "heat".into()
                    }
                    (Some(0.0), Some(1.0), Some(0.0), Some(-1.0)) => "laplace".into(),
                    (Some(0.0), Some(1.0), Some(2.0), Some(0.0)) => "parabolic".into(),
                    _ => format!(
                        "scalar(a1={},a2={},b1={},b2={})",
                        alpha1.c, alpha2.c, beta1.c, beta2.c
                    ),
                }
            }
            PdeSpec::HeatTrace { .. } => "heat_trace".into(),
            PdeSpec::CauchyTrace { .. } => "cauchy_trace".into(),
            PdeSpec::GuoConditional { .. } => "guo_conditional".into(),
        }
    }

    /// The PDE governing `density`, when one is known.
    pub fn for_density(density: &Density) -> Option<Self> {
        match density.kind() {
            Kind::Gaussian(g) => Some(Self::heat_for(g.shape.matrix())),
            Kind::Cauchy(c) => Some(Self::cauchy_for(c.shape.matrix())),
            Kind::Levy(_) => Some(Self::parabolic()),
            Kind::Mixture(m) => match m.mode() {
                MixtureMode::Noise { .. } => Self::for_density(m.noise()),
                MixtureMode::Gain { noise_theta } => match m.noise().kind() {
                    Kind::Gaussian(g) => Some(PdeSpec::GuoConditional {
                        r: g.shape.matrix() * (*noise_theta + g.offset),
                    }),
                    _ => None,
                },
            },
            Kind::Affine(a) => {
                let base = Self::for_density(&a.base)?;
                let map = |r: &DMatrix<f64>| &a.a * r * a.a.transpose();
                match base {
                    PdeSpec::HeatTrace { r } => Some(Self::heat_for(&map(&r))),
                    PdeSpec::CauchyTrace { r } => Some(Self::cauchy_for(&map(&r))),
                    PdeSpec::Scalar { .. } => match a.base.kind() {
                        Kind::Gaussian(g) => Some(Self::heat_for(&map(g.shape.matrix()))),
                        Kind::Cauchy(c) => Some(Self::cauchy_for(&map(c.shape.matrix()))),
                        _ => None,
                    },
                    PdeSpec::GuoConditional { .. } => None,
                }
            }
        }
    }

    fn heat_for(r: &DMatrix<f64>) -> Self {
        if r.len() == 1 {
            Self::scalar(1.0, 0.0, 0.0, 0.5 * r[(0, 0)]).expect("valid")
        } else {
            PdeSpec::HeatTrace { r: r.clone() }
        }
    }

    fn cauchy_for(r: &DMatrix<f64>) -> Self {
        if r.len() == 1 {
            Self::scalar(0.0, 1.0, 0.0, -r[(0, 0)]).expect("valid")
        } else {
            PdeSpec::CauchyTrace { r: r.clone() }
        }
    }

    /// Resolves a PDE by name, taking any matrix `R` from the density.
    pub fn named(name: &str, density: &Density) -> Result<Self> {
        let r = || {
            density
                .shape()
                .map(|s| s.matrix().clone())
                .unwrap_or_else(|| DMatrix::identity(density.dim(), density.dim()))
        };
        Ok(match name {
            "heat" => Self::heat(),
            "laplace" => Self::laplace(),
            "parabolic" => Self::parabolic(),
            "heat_trace" => PdeSpec::HeatTrace { r: r() },
            "cauchy_trace" => PdeSpec::CauchyTrace { r: r() },
            "guo_conditional" => match Self::for_density(density) {
                Some(s @ PdeSpec::GuoConditional { .. }) => s,
                _ => PdeSpec::GuoConditional { r: r() },
            },
            "auto" => Self::for_density(density).ok_or_else(|| {
                Error::Unsupported(format!("no known pde for {}", density.label()))
            })?,
            other => return Err(Error::config("pde", format!("unknown pde `{other}`"))),
        })
    }

    /// Is this a first-order-in-θ PDE (`α₂ = 0`)?
    pub fn is_first_order(&self) -> bool {
        match self {
            PdeSpec::Scalar { alpha2, .. } => alpha2.is_zero(),
            PdeSpec::HeatTrace { .. } | PdeSpec::GuoConditional { .. } => true,
            PdeSpec::CauchyTrace { .. } => false,
        }
    }
}

fn trace_mul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(&b.transpose()).sum()
}

/// Signed residual `LHS − RHS` of `spec` for `p` at `(x, θ)`. For the
/// matrix-valued conditional form the entry of largest magnitude is returned.
pub fn pde_residual(p: &Density, spec: &PdeSpec, x: &[f64], theta: &[f64]) -> Result<f64> {
    let j = p.jet(x, theta)?;
    let d = p.dim();
    let check_r = |r: &DMatrix<f64>| {
        if r.nrows() != d || r.ncols() != d {
            Err(Error::Dimension {
                expected: d,
                got: r.nrows(),
            })
        } else {
            Ok(())
        }
    };
    let scalar_theta = || {
        if p.n_params() != 1 {
            Err(Error::Dimension {
                expected: 1,
                got: p.n_params(),
            })
        } else {
            Ok(theta[0])
        }
    };
    match spec {
        PdeSpec::Scalar {
            alpha1,
            alpha2,
            beta1,
            beta2,
        } => {
            if d != 1 {
                return Err(Error::Dimension {
                    expected: 1,
                    got: d,
                });
            }
            let t = scalar_theta()?;
            let lhs = alpha1.at(t) * j.grad_theta()[0] + alpha2.at(t) * j.hess_theta()[(0, 0)];
            let rhs = beta1.at(t) * j.grad_x()[0] + beta2.at(t) * j.hess_x()[(0, 0)];
            Ok(lhs - rhs)
        }
        PdeSpec::HeatTrace { r } => {
            check_r(r)?;
            scalar_theta()?;
            Ok(j.grad_theta()[0] - 0.5 * trace_mul(r, &j.hess_x()))
        }
        PdeSpec::CauchyTrace { r } => {
            check_r(r)?;
            scalar_theta()?;
            Ok(j.hess_theta()[(0, 0)] + trace_mul(r, &j.hess_x()))
        }
        PdeSpec::GuoConditional { r } => {
            check_r(r)?;
            let din = p.n_params() / d;
            if din * d != p.n_params() || !matches!(p.kind(), Kind::Mixture(_)) {
                return Err(Error::Unsupported(
                    "guo_conditional applies to gain-parametrized channel outputs".into(),
                ));
            }
            let g = DMatrix::from_row_slice(d, din, theta);
            let grad_g = DMatrix::from_row_slice(d, din, j.grad_theta().as_slice());
            let y = nalgebra::DVector::from_column_slice(x);
            let res = grad_g * g.transpose()
                + DMatrix::identity(d, d) * j.value()
                + j.grad_x() * y.transpose()
                + j.hess_x() * r;
            Ok(res
                .iter()
                .cloned()
                .fold(0.0, |a: f64, v| if v.abs() > a.abs() { v } else { a }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{channel_output, gain_channel, ChannelInput};
    use super::*;

    fn max_res(p: &Density, spec: &PdeSpec, xs: &[Vec<f64>], thetas: &[Vec<f64>]) -> f64 {
        let mut m = 0.0f64;
        for x in xs {
            for t in thetas {
                m = m.max(pde_residual(p, spec, x, t).unwrap().abs());
            }
        }
        m
    }

    fn line(lo: f64, hi: f64) -> Vec<Vec<f64>> {
        (0..5)
            .map(|i| vec![lo + (hi - lo) * i as f64 / 4.0])
            .collect()
    }

    #[test]
    fn scalar_families() {
        let thetas: Vec<Vec<f64>> = [0.5, 0.8, 1.0, 1.5, 2.0].iter().map(|&t| vec![t]).collect();
        let g = Density::gaussian_1d();
        assert!(max_res(&g, &PdeSpec::heat(), &line(-3.0, 3.0), &thetas) < 1e-12);
        let c = Density::cauchy_1d();
        assert!(max_res(&c, &PdeSpec::laplace(), &line(-3.0, 3.0), &thetas) < 1e-12);
        let l = Density::levy(0.0).unwrap();
        assert!(max_res(&l, &PdeSpec::parabolic(), &line(0.1, 5.0), &thetas) < 1e-12);
        assert!(max_res(&g, &PdeSpec::laplace(), &line(-3.0, 3.0), &thetas) > 1e-3);
        assert_eq!(PdeSpec::heat().name(), "heat");
        assert_eq!(PdeSpec::parabolic().name(), "parabolic");
        assert!(PdeSpec::scalar(0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn trace_forms_and_mixtures() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 2.0]);
        let xs: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0, -0.5], vec![-2.0, 1.5]];
        let ts = vec![vec![0.5], vec![1.0], vec![2.0]];
        let g = Density::gaussian(&[0.0, 0.0], r.clone()).unwrap();
        assert!(max_res(&g, &PdeSpec::HeatTrace { r: r.clone() }, &xs, &ts) < 1e-12);
        let c = Density::cauchy(&[0.0, 0.0], r.clone()).unwrap();
        assert!(max_res(&c, &PdeSpec::CauchyTrace { r: r.clone() }, &xs, &ts) < 1e-12);
        let input =
            ChannelInput::discrete(vec![vec![1.0, 0.0], vec![-1.0, 0.5]], vec![0.4, 0.6]).unwrap();
        let mix = channel_output(&input, DMatrix::identity(2, 2), c.clone()).unwrap();
        let spec = PdeSpec::for_density(&mix).unwrap();
        assert!(max_res(&mix, &spec, &xs, &ts) < 1e-12);
        let levy_mix = channel_output(
            &ChannelInput::discrete(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5]).unwrap(),
            DMatrix::identity(1, 1),
            Density::levy(0.0).unwrap(),
        )
        .unwrap();
        assert!(max_res(&levy_mix, &PdeSpec::parabolic(), &line(1.2, 6.0), &ts) < 1e-12);
    }

    #[test]
    fn guo_conditional_form() {
        let input = ChannelInput::discrete(
            vec![vec![1.0, 0.0], vec![-0.5, 1.0], vec![0.2, -0.7]],
            vec![0.3, 0.3, 0.4],
        )
        .unwrap();
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let noise = Density::gaussian(&[0.0, 0.0], r).unwrap();
        let p = gain_channel(&input, noise, 0.8).unwrap();
        let spec = PdeSpec::for_density(&p).unwrap();
        assert_eq!(spec.name(), "guo_conditional");
        let xs = vec![vec![0.0, 0.0], vec![0.7, -0.3], vec![-1.0, 1.2]];
        let ts = vec![vec![1.0, 0.2, -0.1, 0.8], vec![0.5, 0.0, 0.0, 0.5]];
        assert!(max_res(&p, &spec, &xs, &ts) < 1e-12);
    }

    #[test]
    fn affine_images_keep_their_pde() {
        let g = Density::gaussian_1d();
        let img = g
            .affine_image(DMatrix::from_element(1, 1, 2.0), &[0.5])
            .unwrap();
        let spec = PdeSpec::for_density(&img).unwrap();
        let ts = vec![vec![0.7], vec![1.4]];
        assert!(max_res(&img, &spec, &line(-3.0, 3.0), &ts) < 1e-12);
    }
}
