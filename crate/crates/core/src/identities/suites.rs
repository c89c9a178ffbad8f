//! Named verification suites and the parallel, order-preserving runner.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::properties::{AffineQuantity, MatrixSource, PropertySpec};
use super::{check_identity, check_property, CheckResult, IdentitySpec, Status, Tolerance};
use crate::densities::{channel_output, ChannelInput, Density, PdeSpec};
use crate::error::{Error, Result};
use crate::functionals::EntropicFunctional;
use crate::measures::{Channel, FisherMode};
use crate::numerics::{FdSpec, QuadratureSpec};

pub const SUITE_NAMES: [&str; 7] = [
    "gaussian_scalar",
    "gaussian_multivariate",
    "cauchy",
    "levy",
    "guo",
    "properties",
    "appendix_bounds",
];

/// One dispatched check.
#[derive(Debug, Clone)]
pub enum Check {
    Identity(IdentitySpec),
    Property(PropertySpec),
}

impl Check {
    pub fn run(&self) -> CheckResult {
        match self {
            Check::Identity(s) => check_identity(s),
            Check::Property(p) => check_property(p),
        }
    }

    /// Jitters the grids of grid-scanned property checks.
    pub fn seed(&mut self, seed: u64) {
        if let Check::Property(PropertySpec::Bound { jitter, .. }) = self {
            *jitter = Some(seed);
        }
    }

    /// Applies run-wide numerics; tolerances only touch identity checks.
    pub fn configure(
        &mut self,
        tol: Option<Tolerance>,
        fd: Option<FdSpec>,
        quad: Option<QuadratureSpec>,
    ) {
        if let Check::Identity(s) = self {
            if let Some(t) = tol {
                s.tolerance = Some(t);
            }
            if let Some(f) = fd {
                s.fd = f;
            }
            if let Some(q) = quad {
                s.quadrature = q;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worst {
    pub check_id: String,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errored: usize,
    pub worst: Option<Worst>,
}

impl Summary {
    pub fn of(results: &[CheckResult]) -> Self {
        let count = |s: Status| results.iter().filter(|r| r.status == s).count();
        let worst = results
            .iter()
            .filter_map(|r| r.rel_err.map(|e| (r, e)))
            .fold(None::<(&CheckResult, f64)>, |acc, (r, e)| match acc {
                Some((_, best)) if best >= e => acc,
                _ => Some((r, e)),
            })
            .map(|(r, e)| Worst {
                check_id: r.check_id.clone(),
                rel_err: e,
            });
        Self {
            total: results.len(),
            passed: count(Status::Passed),
            failed: count(Status::Failed),
            errored: count(Status::Errored),
            worst,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub results: Vec<CheckResult>,
    pub summary: Summary,
}

/// Runs `checks` in parallel; results keep dispatch order and are labelled
/// `<suite>/<index>`.
pub fn run_suite(name: &str, checks: &[Check]) -> SuiteOutcome {
    let results: Vec<CheckResult> = checks
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut r = c.run();
            r.check_id = format!("{name}/{i:03}");
            r
        })
        .collect();
    let summary = Summary::of(&results);
    SuiteOutcome {
        name: name.to_string(),
        results,
        summary,
    }
}

fn hcdt(alpha: f64) -> EntropicFunctional {
    EntropicFunctional::with_param("hcdt", alpha).expect("valid order")
}

fn kaniadakis(kappa: f64) -> EntropicFunctional {
    EntropicFunctional::with_param("kaniadakis", kappa).expect("valid kappa")
}

fn sh() -> EntropicFunctional {
    EntropicFunctional::shannon()
}

fn m2(v: [f64; 4]) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &v)
}

fn entropy(p: &Density, f: EntropicFunctional, t: f64) -> Check {
    Check::Identity(IdentitySpec::entropy(p.clone(), f, t))
}

fn divergence(p1: &Density, p0: &Density, f: EntropicFunctional, t: f64) -> Check {
    Check::Identity(IdentitySpec::divergence(p1.clone(), p0.clone(), f, t))
}

fn awgn(input: ChannelInput) -> Result<Channel> {
    Channel::new(input, Density::gaussian_1d(), 1.0)
}

/// The checks of a built-in suite over the given θ grid.
pub fn named_suite(name: &str, thetas: &[f64]) -> Result<Vec<Check>> {
    let one = DMatrix::identity(1, 1);
    let mut out = Vec::new();
    match name {
        "gaussian_scalar" => {
            let g = Density::gaussian_1d();
            // binary ±1 through N(0, θ) against N(0, 1 + θ): same variance, lighter tails
            let mix = channel_output(&ChannelInput::binary(1.0), one, g.clone())?;
            let wide = g.clone().with_offset(1.0)?;
            for f in [sh(), hcdt(2.0), kaniadakis(0.5)] {
                for &t in thetas {
                    out.push(entropy(&g, f.clone(), t));
                    out.push(divergence(&mix, &wide, f.clone(), t));
                }
            }
        }
        "gaussian_multivariate" => {
            let iso = Density::gaussian(&[0.0, 0.0], DMatrix::identity(2, 2))?;
            let diag = Density::gaussian(&[0.0, 0.0], m2([1.0, 0.0, 0.0, 4.0]))?;
            let corr = Density::gaussian(&[0.0, 0.0], m2([1.0, 0.5, 0.5, 2.0]))?;
            for &t in thetas {
                out.push(entropy(&iso, sh(), t));
                out.push(entropy(&diag, hcdt(2.0), t));
                out.push(divergence(&corr.clone().with_offset(1.0)?, &corr, sh(), t));
            }
            out.push(entropy(&corr, kaniadakis(0.5), 1.0));
            let input =
                ChannelInput::discrete(vec![vec![1.0, 0.5], vec![-1.0, -0.5]], vec![0.5, 0.5])?;
            let mix = channel_output(&input, DMatrix::identity(2, 2), iso.clone())?;
            out.push(divergence(
                &mix,
                &iso.clone().with_offset(1.0)?,
                hcdt(2.0),
                1.0,
            ));
        }
        "cauchy" => {
            let c = Density::cauchy_1d();
            let shifted = Density::cauchy(&[1.0], one.clone())?;
            for &t in thetas {
                out.push(entropy(&c, sh(), t));
                out.push(divergence(&shifted, &c, sh(), t));
            }
            out.push(entropy(&c, hcdt(2.0), 1.0));
            let mix = channel_output(&ChannelInput::binary(1.0), one, c.clone())?;
            out.push(entropy(&mix, sh(), 1.0));
            let c2 = Density::cauchy(&[0.0, 0.0], DMatrix::identity(2, 2))?;
            let corr = Density::cauchy(&[0.0, 0.0], m2([1.0, 0.3, 0.3, 0.5]))?;
            out.push(entropy(&c2, sh(), 1.0));
            out.push(entropy(&corr, hcdt(2.0), 1.0));
            out.push(divergence(
                &Density::cauchy(&[1.0, 0.0], DMatrix::identity(2, 2))?,
                &c2,
                sh(),
                1.0,
            ));
        }
        "levy" => {
            let l = Density::levy(0.0)?;
            let shifted = Density::levy(0.5)?;
            for &t in thetas {
                out.push(entropy(&l, sh(), t));
                out.push(divergence(&shifted, &l, sh(), t));
            }
            out.push(entropy(&l, hcdt(2.0), 1.0));
            let input = ChannelInput::discrete(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5])?;
            let mix = channel_output(&input, one, l)?;
            out.push(entropy(&mix, sh(), 1.0));
        }
        "guo" => {
            let gauss = awgn(ChannelInput::gaussian(0.0, 1.0)?)?;
            let binary = awgn(ChannelInput::binary(1.0))?;
            for &g in thetas {
                out.push(Check::Identity(IdentitySpec::guo(
                    gauss.clone(),
                    sh(),
                    vec![g],
                )));
                out.push(Check::Identity(IdentitySpec::guo(
                    binary.clone(),
                    sh(),
                    vec![g],
                )));
            }
            out.push(Check::Identity(IdentitySpec::guo(
                binary.clone(),
                hcdt(2.0),
                vec![1.0],
            )));
            let js = EntropicFunctional::builtin("jensen_shannon", &Default::default())?;
            out.push(Check::Identity(IdentitySpec::guo(binary, js, vec![1.0])));
            out.push(Check::Identity(IdentitySpec::guo(
                vector_channel()?,
                sh(),
                vec![1.0, 0.2, -0.1, 0.8],
            )));
        }
        "properties" => out = properties()?,
        "appendix_bounds" => {
            let noises = [
                Density::gaussian_1d(),
                Density::gaussian(&[0.0, 0.0], m2([1.0, 0.3, 0.3, 0.5]))?,
            ];
            for noise in &noises {
                for &t in thetas {
                    for index in 0..4 {
                        out.push(Check::Property(PropertySpec::Bound {
                            noise: noise.clone(),
                            theta: t,
                            k: 0.5,
                            index,
                            jitter: None,
                        }));
                    }
                }
            }
            for (f, k, expect) in [
                (sh(), 0.5, true),
                (hcdt(0.5), 0.6, true),
                (kaniadakis(0.3), 0.4, true),
                (hcdt(0.5), 0.3, false),
            ] {
                out.push(Check::Property(PropertySpec::TailDecay {
                    functional: f,
                    k,
                    expect,
                }));
            }
        }
        other => {
            return Err(Error::config(
                "suites",
                format!(
                    "unknown suite `{other}` (known: {})",
                    SUITE_NAMES.join(", ")
                ),
            ))
        }
    }
    Ok(out)
}

/// Three atoms in the plane through correlated noise `0.8·R`.
pub(crate) fn vector_channel() -> Result<Channel> {
    let input = ChannelInput::discrete(
        vec![vec![1.0, 0.0], vec![-0.5, 1.0], vec![0.2, -0.7]],
        vec![0.3, 0.3, 0.4],
    )?;
    let noise = Density::gaussian(&[0.0, 0.0], m2([1.0, 0.3, 0.3, 0.5]))?;
    Channel::new(input, noise, 0.8)
}

fn properties() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let p = |s: PropertySpec| Check::Property(s);
    let one = DMatrix::identity(1, 1);
    let r2 = m2([1.0, 0.4, 0.4, 2.0]);
    let g = Density::gaussian_1d();
    let c = Density::cauchy_1d();
    let l = Density::levy(0.0)?;
    let g2 = Density::gaussian(&[0.0, 0.0], r2.clone())?;
    let c2 = Density::cauchy(&[0.0, 0.0], r2.clone())?;
    let mix = channel_output(&ChannelInput::binary(1.0), one.clone(), g.clone())?;

    // vanishing self-divergence for every builtin with φ(1) = 0
    let normalized = [
        sh(),
        hcdt(2.0),
        hcdt(0.5),
        kaniadakis(0.5),
        EntropicFunctional::builtin("jensen_shannon", &Default::default())?,
        EntropicFunctional::with_param("vajda", 2.0)?,
    ];
    for f in &normalized {
        for d in [&g, &c, &l, &g2, &mix] {
            out.push(p(PropertySpec::SelfDivergence {
                density: d.clone(),
                theta: vec![1.0],
                functional: f.clone(),
            }));
        }
    }

    // positive semidefinite information matrices
    for f in [sh(), hcdt(2.0), kaniadakis(0.5)] {
        for d in [&g2, &c2] {
            for mode in [FisherMode::Param, FisherMode::Nonparam] {
                // u²φ″(u) ~ u^(1−κ) makes the θ-Fisher integral of a planar
                // Cauchy diverge (∫ r^(−3/2) r dr)
                if f.name() == "kaniadakis" && d.family() == "cauchy" && mode == FisherMode::Param {
                    continue;
                }
                out.push(p(PropertySpec::Psd {
                    source: MatrixSource::Fisher {
                        density: d.clone(),
                        mode,
                    },
                    theta: vec![1.0],
                    functional: f.clone(),
                }));
            }
        }
        out.push(p(PropertySpec::Psd {
            source: MatrixSource::FisherDiv {
                p1: Density::gaussian(&[1.0, -0.5], r2.clone())?,
                p0: g2.clone().with_offset(0.5)?,
                mode: FisherMode::Nonparam,
            },
            theta: vec![1.0],
            functional: f.clone(),
        }));
        out.push(p(PropertySpec::Psd {
            source: MatrixSource::Mse {
                channel: vector_channel()?,
            },
            theta: vec![1.0, 0.2, -0.1, 0.8],
            functional: f.clone(),
        }));
    }

    out.push(p(PropertySpec::JensenFisher { shift: 1.0 }));

    for delta in [1e-1, 1e-2, 1e-3] {
        out.push(p(PropertySpec::KlCurvature {
            functional: sh(),
            theta0: 1.0,
            delta,
            two_sided: true,
        }));
    }
    for delta in [1e-2, 1e-3] {
        out.push(p(PropertySpec::KlCurvature {
            functional: sh(),
            theta0: 1.0,
            delta,
            two_sided: false,
        }));
    }
    for f in [hcdt(2.0), kaniadakis(0.5)] {
        out.push(p(PropertySpec::KlCurvature {
            functional: f,
            theta0: 1.0,
            delta: 1e-2,
            two_sided: true,
        }));
    }

    for f in [sh(), hcdt(2.0)] {
        for quantity in [
            AffineQuantity::Divergence,
            AffineQuantity::FisherParam,
            AffineQuantity::FisherNonparam,
        ] {
            out.push(p(PropertySpec::AffineInvariance {
                a: 2.0,
                b: 1.0,
                theta: 1.0,
                functional: f.clone(),
                quantity,
            }));
        }
    }

    for (density, pde, theta) in pde_pairs()? {
        out.push(p(PropertySpec::PdeResidual {
            density,
            pde,
            theta,
            threshold: 1e-10,
        }));
    }
    Ok(out)
}

/// Every family and mixture paired with the PDE it satisfies.
pub fn pde_pairs() -> Result<Vec<(Density, PdeSpec, Vec<f64>)>> {
    let one = DMatrix::identity(1, 1);
    let id2 = DMatrix::identity(2, 2);
    let r2 = m2([1.0, 0.4, 0.4, 2.0]);
    let binary = ChannelInput::binary(1.0);
    let plane = ChannelInput::discrete(vec![vec![1.0, 0.0], vec![-1.0, 0.5]], vec![0.4, 0.6])?;
    let half = ChannelInput::discrete(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5])?;
    let mut out: Vec<(Density, PdeSpec)> = vec![
        (Density::gaussian_1d(), PdeSpec::heat()),
        (Density::cauchy_1d(), PdeSpec::laplace()),
        (Density::levy(0.0)?, PdeSpec::parabolic()),
        (
            Density::gaussian(&[0.0, 0.0], id2.clone())?,
            PdeSpec::HeatTrace { r: id2.clone() },
        ),
        (
            Density::gaussian(&[0.0, 0.0], r2.clone())?,
            PdeSpec::HeatTrace { r: r2.clone() },
        ),
        (
            Density::cauchy(&[0.0, 0.0], id2.clone())?,
            PdeSpec::CauchyTrace { r: id2.clone() },
        ),
        (
            Density::cauchy(&[0.0, 0.0], r2.clone())?,
            PdeSpec::CauchyTrace { r: r2.clone() },
        ),
    ];
    let mixtures = [
        channel_output(&binary, one.clone(), Density::gaussian_1d())?,
        channel_output(&binary, one.clone(), Density::cauchy_1d())?,
        channel_output(&half, one, Density::levy(0.0)?)?,
        channel_output(
            &plane,
            id2.clone(),
            Density::gaussian(&[0.0, 0.0], r2.clone())?,
        )?,
        channel_output(&plane, id2, Density::cauchy(&[0.0, 0.0], r2)?)?,
    ];
    for m in mixtures {
        let spec = PdeSpec::for_density(&m).expect("mixtures inherit their noise pde");
        out.push((m, spec));
    }
    let mut out: Vec<_> = out.into_iter().map(|(d, s)| (d, s, vec![1.0])).collect();
    let ch = vector_channel()?;
    let gain_out = ch.output_density().expect("discrete input").clone();
    let spec = PdeSpec::for_density(&gain_out).expect("gain channel");
    out.push((gain_out, spec, vec![1.0, 0.2, -0.1, 0.8]));
    Ok(out)
}
