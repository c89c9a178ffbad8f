//! Structural properties of the measures: PSD matrices, vanishing
//! self-divergence, the Jensen–Fisher decomposition, local KL curvature,
//! affine invariance, PDE residuals and the domination bounds.

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::debruijn::pde_gate;
use super::{CheckResult, Diagnostics, Header, Relation, Tolerance, Value};
use crate::densities::{
    appendix_bounds_check, centered_grid, channel_output, ChannelInput, Density, PdeSpec,
};
use crate::error::{Error, Result};
use crate::functionals::{log_grid, EntropicFunctional};
use crate::linalg::min_eigenvalue;
use crate::measures::{
    mse_phi, phi_divergence, phi_fisher_div, phi_fisher_nonparam, phi_fisher_param, Channel,
    FisherMode, InfoMatrix,
};
use crate::numerics::QuadratureSpec;

/// Which matrix a [`PropertySpec::Psd`] check assembles.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Fisher {
        density: Density,
        mode: FisherMode,
    },
    FisherDiv {
        p1: Density,
        p0: Density,
        mode: FisherMode,
    },
    Mse {
        channel: Channel,
    },
}

/// Quantity compared between a pair and its affine image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AffineQuantity {
    Divergence,
    FisherParam,
    /// Scalar case: the image's value is `1/A²` times the original.
    FisherNonparam,
}

#[derive(Debug, Clone)]
pub enum PropertySpec {
    /// `D_φ(p‖p) = 0`.
    SelfDivergence {
        density: Density,
        theta: Vec<f64>,
        functional: EntropicFunctional,
    },
    /// Smallest eigenvalue of an information matrix is nonnegative.
    Psd {
        source: MatrixSource,
        theta: Vec<f64>,
        functional: EntropicFunctional,
    },
    /// Jensen–Shannon Fisher divergence of `N(a,1)` vs `N(−a,1)` equals
    /// the average Shannon Fisher divergence of each against the midpoint.
    JensenFisher { shift: f64 },
    /// `D(p_{θ0+Δ}‖p_θ0) / (½ J_θ Δ²) → φ″(1)` on `N(0, θ)`; the two-sided
    /// form averages `±Δ`, cancelling the cubic term.
    KlCurvature {
        functional: EntropicFunctional,
        theta0: f64,
        delta: f64,
        two_sided: bool,
    },
    /// Scalar pair `N(0,1+θ)` vs `N(0,θ)` under `y = A x + b`.
    AffineInvariance {
        a: f64,
        b: f64,
        theta: f64,
        functional: EntropicFunctional,
        quantity: AffineQuantity,
    },
    /// Max PDE residual on the gate grid, compared to `threshold`.
    PdeResidual {
        density: Density,
        pde: PdeSpec,
        theta: Vec<f64>,
        threshold: f64,
    },
    /// One of the four domination bounds for Gaussian noise `N(0, θR)`,
    /// scanned on a tensor grid, optionally jittered from a seed.
    Bound {
        noise: Density,
        theta: f64,
        k: f64,
        index: usize,
        jitter: Option<u64>,
    },
    /// `u^k φ′(u) → 0` as `u → 0`, compared against the expected verdict.
    TailDecay {
        functional: EntropicFunctional,
        k: f64,
        expect: bool,
    },
}

const AFFINE_TOL: f64 = 1e-8;

fn tight() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        ..QuadratureSpec::default()
    }
}

fn header(kind: &str, family: String, functional: String, theta: Vec<f64>) -> Header {
    Header {
        kind: format!("property:{kind}"),
        family,
        functional,
        theta,
    }
}

impl PropertySpec {
    pub fn header(&self) -> Header {
        match self {
            PropertySpec::SelfDivergence {
                density,
                theta,
                functional,
            } => header(
                "self_divergence",
                density.label(),
                functional.label(),
                theta.clone(),
            ),
            PropertySpec::Psd {
                source,
                theta,
                functional,
            } => {
                let fam = match source {
                    MatrixSource::Fisher { density, mode } => {
                        format!("{} [{mode:?}]", density.label())
                    }
                    MatrixSource::FisherDiv { p1, p0, mode } => {
                        format!("{} vs {} [{mode:?}]", p1.label(), p0.label())
                    }
                    MatrixSource::Mse { channel } => channel.label(),
                };
                header("psd", fam, functional.label(), theta.clone())
            }
            PropertySpec::JensenFisher { shift } => header(
                "jensen_fisher",
                format!("gaussian(m={shift}) vs gaussian(m={})", -shift),
                "jensen_shannon".into(),
                vec![1.0],
            ),
            PropertySpec::KlCurvature {
                functional,
                theta0,
                delta,
                two_sided,
            } => header(
                if *two_sided {
                    "curvature_two_sided"
                } else {
                    "curvature_one_sided"
                },
                format!("gaussian, delta={delta}"),
                functional.label(),
                vec![*theta0],
            ),
            PropertySpec::AffineInvariance {
                a,
                b,
                theta,
                functional,
                quantity,
            } => header(
                &format!("affine_{}", quantity_name(*quantity)),
                format!("gaussian(v=1) vs gaussian, A={a}, b={b}"),
                functional.label(),
                vec![*theta],
            ),
            PropertySpec::PdeResidual {
                density,
                pde,
                theta,
                ..
            } => header(
                &format!("pde:{}", pde.name()),
                density.label(),
                String::new(),
                theta.clone(),
            ),
            PropertySpec::Bound {
                noise,
                theta,
                index,
                k,
                ..
            } => header(
                &format!("bound:{}", BOUND_NAMES[*index]),
                format!("{} d={} k={k}", noise.label(), noise.dim()),
                String::new(),
                vec![*theta],
            ),
            PropertySpec::TailDecay {
                functional,
                k,
                expect,
            } => header(
                "tail_decay",
                format!("k={k} expect={expect}"),
                functional.label(),
                Vec::new(),
            ),
        }
    }

    pub fn tolerance(&self) -> Tolerance {
        match self {
            PropertySpec::SelfDivergence { .. } => Tolerance::new(0.0, 1e-10),
            PropertySpec::Psd { .. } => Tolerance::new(0.0, 0.0),
            PropertySpec::JensenFisher { .. } => Tolerance::new(1e-6, 0.0),
            PropertySpec::KlCurvature { .. } => Tolerance::new(0.02, 0.0),
            PropertySpec::AffineInvariance { quantity, .. } => match quantity {
                AffineQuantity::FisherNonparam => Tolerance::new(0.0, AFFINE_TOL),
                _ => Tolerance::new(AFFINE_TOL, 0.0),
            },
            PropertySpec::PdeResidual { threshold, .. } => Tolerance::new(0.0, *threshold),
            PropertySpec::Bound { .. } => Tolerance::new(1e-12, 0.0),
            PropertySpec::TailDecay { .. } => Tolerance::new(0.0, 0.0),
        }
    }
}

const BOUND_NAMES: [&str; 4] = ["dtheta_p", "grad_p", "hess_p", "grad_ratio"];

fn quantity_name(q: AffineQuantity) -> &'static str {
    match q {
        AffineQuantity::Divergence => "divergence",
        AffineQuantity::FisherParam => "fisher_param",
        AffineQuantity::FisherNonparam => "fisher_nonparam",
    }
}

fn matrix(
    source: &MatrixSource,
    theta: &[f64],
    f: &EntropicFunctional,
    q: &QuadratureSpec,
) -> Result<InfoMatrix> {
    match source {
        MatrixSource::Fisher { density, mode } => match mode {
            FisherMode::Param => phi_fisher_param(density.at(theta), f, q),
            FisherMode::Nonparam => phi_fisher_nonparam(density.at(theta), f, q),
        },
        MatrixSource::FisherDiv { p1, p0, mode } => {
            phi_fisher_div(p1.at(theta), p0.at(theta), f, *mode, q)
        }
        MatrixSource::Mse { channel } => mse_phi(channel, f, theta, q),
    }
}

fn scalar_pair(a: f64, b: f64) -> Result<(Density, Density)> {
    let p1 = Density::gaussian_1d().with_offset(1.0)?;
    let p0 = Density::gaussian_1d();
    if a == 1.0 && b == 0.0 {
        return Ok((p1, p0));
    }
    let am = DMatrix::from_element(1, 1, a);
    Ok((
        p1.affine_image(am.clone(), &[b])?,
        p0.affine_image(am, &[b])?,
    ))
}

fn affine_value(
    theta: f64,
    a: f64,
    b: f64,
    f: &EntropicFunctional,
    quantity: AffineQuantity,
    q: &QuadratureSpec,
) -> Result<f64> {
    let (p1, p0) = scalar_pair(a, b)?;
    let t = [theta];
    Ok(match quantity {
        AffineQuantity::Divergence => phi_divergence(p1.at(&t), p0.at(&t), f, q)?.value,
        AffineQuantity::FisherParam => {
            phi_fisher_div(p1.at(&t), p0.at(&t), f, FisherMode::Param, q)?.scalar()
        }
        AffineQuantity::FisherNonparam => {
            phi_fisher_div(p1.at(&t), p0.at(&t), f, FisherMode::Nonparam, q)?.scalar()
        }
    })
}

fn evaluate(spec: &PropertySpec) -> Result<(Value, Value, Relation, Diagnostics)> {
    let mut diag = Diagnostics::default();
    let q = tight();
    let s = Value::Scalar;
    Ok(match spec {
        PropertySpec::SelfDivergence {
            density,
            theta,
            functional,
        } => {
            if !functional.phi1_zero() {
                return Err(Error::Unsupported(format!(
                    "`{}` has phi(1) != 0; its self-divergence is phi(1)",
                    functional.label()
                )));
            }
            let m = phi_divergence(density.at(theta), density.at(theta), functional, &q)?;
            diag.quadrature_error = Some(m.error);
            (s(m.value), s(0.0), Relation::Eq, diag)
        }
        PropertySpec::Psd {
            source,
            theta,
            functional,
        } => {
            // the verdict only needs the eigenvalue sign; slack absorbs the error
            let loose = QuadratureSpec {
                abs_tol: 1e-9,
                rel_tol: 1e-6,
                ..QuadratureSpec::default()
            };
            let m = matrix(source, theta, functional, &loose)?;
            let min = min_eigenvalue(&m.value);
            diag.values.insert("min_eigenvalue".into(), min);
            diag.values.insert("trace".into(), m.trace());
            diag.values
                .insert("asymmetry".into(), (&m.value - m.value.transpose()).amax());
            diag.quadrature_error = Some(m.error.amax());
            // −λ_min ≤ numerical slack
            let slack = 1e-9 * m.trace().abs() + m.error.amax();
            (s(-min), s(slack), Relation::Le, diag)
        }
        PropertySpec::JensenFisher { shift } => {
            let js = EntropicFunctional::builtin("jensen_shannon", &Default::default())?;
            let sh = EntropicFunctional::shannon();
            let r = DMatrix::identity(1, 1);
            let p1 = Density::gaussian(&[*shift], r.clone())?;
            let p0 = Density::gaussian(&[-*shift], r.clone())?;
            let mid = channel_output(&ChannelInput::binary(*shift), r, Density::gaussian_1d())?;
            let t = [1.0];
            let lhs = phi_fisher_div(p1.at(&t), p0.at(&t), &js, FisherMode::Nonparam, &q)?.scalar();
            let a = phi_fisher_div(p0.at(&t), mid.at(&t), &sh, FisherMode::Nonparam, &q)?.scalar();
            let b = phi_fisher_div(p1.at(&t), mid.at(&t), &sh, FisherMode::Nonparam, &q)?.scalar();
            diag.values.insert("J(p0|m)".into(), a);
            diag.values.insert("J(p1|m)".into(), b);
            (s(lhs), s(0.5 * (a + b)), Relation::Eq, diag)
        }
        PropertySpec::KlCurvature {
            functional,
            theta0,
            delta,
            two_sided,
        } => {
            let f = functional.normalize_divergence();
            let p = Density::gaussian_1d();
            let t0 = [*theta0];
            let j = phi_fisher_param(p.at(&t0), &EntropicFunctional::shannon(), &q)?.scalar();
            let div = |t: f64| -> Result<f64> {
                Ok(phi_divergence(p.at(&[t]), p.at(&t0), &f, &q)?.value)
            };
            let d_plus = div(theta0 + delta)?;
            let d = if *two_sided {
                0.5 * (d_plus + div(theta0 - delta)?)
            } else {
                d_plus
            };
            let ratio = d / (0.5 * j * delta * delta);
            diag.values.insert("divergence".into(), d);
            diag.values.insert("fisher".into(), j);
            (s(ratio), s(f.curvature_weight(1.0)), Relation::Eq, diag)
        }
        PropertySpec::AffineInvariance {
            a,
            b,
            theta,
            functional,
            quantity,
        } => {
            let base = affine_value(*theta, 1.0, 0.0, functional, *quantity, &q)?;
            let img = affine_value(*theta, *a, *b, functional, *quantity, &q)?;
            diag.values.insert("original".into(), base);
            diag.values.insert("image".into(), img);
            match quantity {
                AffineQuantity::FisherNonparam => {
                    (s(img / base), s(1.0 / (a * a)), Relation::Eq, diag)
                }
                _ => (s(img), s(base), Relation::Eq, diag),
            }
        }
        PropertySpec::PdeResidual {
            density,
            pde,
            theta,
            ..
        } => {
            let m = pde_gate(density, pde, theta)?;
            diag.pde = Some(pde.name());
            diag.pde_residual_max = Some(m);
            (s(m), s(0.0), Relation::Le, diag)
        }
        PropertySpec::Bound {
            noise,
            theta,
            k,
            index,
            jitter,
        } => {
            let d = noise.dim();
            let spread = noise
                .shape()
                .map(|r| r.matrix().diagonal().max())
                .unwrap_or(1.0);
            let half = 6.0 * (theta * spread).sqrt();
            let n = if d == 1 { 241 } else { 61 };
            let mut grid = centered_grid(d, half, n);
            if let Some(seed) = jitter {
                let h = 2.0 * half / (n - 1) as f64;
                let mut rng = StdRng::seed_from_u64(*seed);
                for y in grid.iter_mut() {
                    for v in y.iter_mut() {
                        *v += rng.gen_range(-0.5..0.5) * h;
                    }
                }
            }
            let rep = appendix_bounds_check(noise, *theta, &grid, *k, 1.0)?;
            let e = &rep.entries[*index];
            diag.values.insert("slack".into(), e.slack);
            diag.values.insert("points".into(), rep.points as f64);
            (s(e.max_value), s(e.bound), Relation::Le, diag)
        }
        PropertySpec::TailDecay {
            functional,
            k,
            expect,
        } => {
            let mut u = log_grid(-12.0, -1.0, 4);
            u.reverse();
            let rep = functional.tail_decay_check(*k, &u);
            diag.values.insert("loglog_slope".into(), rep.loglog_slope);
            let as_num = |b: bool| if b { 1.0 } else { 0.0 };
            (s(as_num(rep.pass)), s(as_num(*expect)), Relation::Eq, diag)
        }
    })
}

/// Runs one property check; errors become errored records.
pub fn check_property(spec: &PropertySpec) -> CheckResult {
    let tol = spec.tolerance();
    match evaluate(spec) {
        Ok((lhs, rhs, rel, diag)) => {
            CheckResult::evaluated(spec.header(), lhs, rhs, rel, tol, diag)
        }
        Err(e) => CheckResult::errored(spec.header(), tol, &e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identities::Status;

    #[test]
    fn jensen_fisher_decomposition() {
        let r = check_property(&PropertySpec::JensenFisher { shift: 1.0 });
        assert_eq!(r.status, Status::Passed, "{r:?}");
    }

    #[test]
    fn curvature_two_sided_is_tight() {
        for delta in [1e-1, 1e-2] {
            let r = check_property(&PropertySpec::KlCurvature {
                functional: EntropicFunctional::shannon(),
                theta0: 1.0,
                delta,
                two_sided: true,
            });
            assert_eq!(r.status, Status::Passed, "{r:?}");
        }
    }

    #[test]
    fn affine_nonparam_factor() {
        let r = check_property(&PropertySpec::AffineInvariance {
            a: 2.0,
            b: 1.0,
            theta: 1.0,
            functional: EntropicFunctional::shannon(),
            quantity: AffineQuantity::FisherNonparam,
        });
        assert_eq!(r.status, Status::Passed, "{r:?}");
        assert!((r.lhs_scalar().unwrap() - 0.25).abs() < 1e-8);
    }
}
