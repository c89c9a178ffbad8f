//! Additive Gaussian-noise channels `Y = G X + N` parametrized by the gain.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{push_outer, upper_len, ErrorSlot, InfoKind, InfoMatrix, Measure, LOG_BOTH_ZERO};
use crate::densities::{gain_channel, ChannelInput, Density};
use crate::error::{Error, Result};
use crate::functionals::EntropicFunctional;
use crate::numerics::{box_half_width, integrate_vec, AxisMap, QuadratureSpec, Region};

/// A channel with fixed Gaussian noise `N(μ_N, s·R)` and gain `θ = vec(G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    input: ChannelInput,
    noise: Density,
    noise_theta: f64,
    /// Gain-parametrized output mixture (discrete inputs only).
    output: Option<Density>,
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - (x - mean) * (x - mean) / (2.0 * var)
}

impl Channel {
    pub fn new(input: ChannelInput, noise: Density, noise_theta: f64) -> Result<Self> {
        if noise.family() != "gaussian" || noise.offset() != 0.0 || noise.center().is_none() {
            return Err(Error::Unsupported(
                "channel measures need plain gaussian noise (closed-form posterior)".into(),
            ));
        }
        noise.check_theta(&[noise_theta])?;
        let output = match &input {
            ChannelInput::Discrete { .. } => {
                Some(gain_channel(&input, noise.clone(), noise_theta)?)
            }
            ChannelInput::Gaussian { .. } => {
                if noise.dim() != 1 {
                    return Err(Error::Unsupported(
                        "gaussian inputs are supported for scalar channels only".into(),
                    ));
                }
                None
            }
        };
        Ok(Self {
            input,
            noise,
            noise_theta,
            output,
        })
    }

    pub fn input(&self) -> &ChannelInput {
        &self.input
    }

    pub fn noise_density(&self) -> &Density {
        &self.noise
    }

    pub fn noise_theta(&self) -> f64 {
        self.noise_theta
    }

    pub fn d_in(&self) -> usize {
        self.input.dim()
    }

    pub fn d_out(&self) -> usize {
        self.noise.dim()
    }

    pub fn n_params(&self) -> usize {
        self.d_in() * self.d_out()
    }

    /// Noise covariance `s·R`.
    pub fn noise_covariance(&self) -> DMatrix<f64> {
        self.noise.shape().expect("gaussian").matrix() * self.noise_theta
    }

    /// Output density with `θ = vec(G)`, for discrete inputs.
    pub fn output_density(&self) -> Option<&Density> {
        self.output.as_ref()
    }

    pub fn label(&self) -> String {
        format!(
            "channel({} -> {}, s={})",
            self.input.label(),
            self.noise.label(),
            self.noise_theta
        )
    }

    pub(crate) fn check_gain(&self, gain: &[f64]) -> Result<()> {
        if gain.len() != self.n_params() {
            return Err(Error::Dimension {
                expected: self.n_params(),
                got: gain.len(),
            });
        }
        if let Some(&g) = gain.iter().find(|g| !g.is_finite()) {
            return Err(Error::Theta(g));
        }
        Ok(())
    }

    fn scalar_gaussian(&self) -> (f64, f64, f64, f64) {
        let (mu, v) = match self.input {
            ChannelInput::Gaussian { mean, variance } => (mean, variance),
            _ => unreachable!(),
        };
        let m_n = self.noise.center().expect("gaussian")[0];
        let s2 = self.noise_covariance()[(0, 0)];
        (mu, v, m_n, s2)
    }

    /// Integration region: output space for discrete inputs, `(x, n)` for a
    /// Gaussian input.
    pub(crate) fn region(&self, gain: &[f64], quad: &QuadratureSpec) -> Result<Region> {
        match &self.output {
            Some(p) => Region::for_density(p, gain, quad),
            None => {
                let (mu, v, m_n, s2) = self.scalar_gaussian();
                let g = gain[0];
                let b = box_half_width(quad.truncation_mass);
                let sx = v.sqrt();
                let w = b * (s2.sqrt() + (g * g * v + s2).sqrt() + g.abs() * sx);
                Ok(Region::new(vec![
                    AxisMap::Linear {
                        lo: mu - b * sx,
                        hi: mu + b * sx,
                    },
                    AxisMap::Linear {
                        lo: m_n - w,
                        hi: m_n + w,
                    },
                ]))
            }
        }
    }

    /// Accumulates, at one integration node, the mutual-information integrand
    /// into `out[0]` and (when `with_mse`) the upper triangle of the MSE_φ
    /// integrand into `out[1..]`.
    pub(crate) fn terms(
        &self,
        f: &EntropicFunctional,
        gain: &[f64],
        node: &[f64],
        with_mse: bool,
        out: &mut [f64],
    ) {
        match &self.output {
            Some(p) => {
                let comps = p.component_log_pdfs(node, gain).expect("mixture");
                let (atoms, weights) = p.mixture_atoms().expect("mixture");
                let lp_y = p.log_pdf_unchecked(node, gain);
                if lp_y < LOG_BOTH_ZERO {
                    return;
                }
                let p_y = lp_y.exp();
                let ratios: Vec<f64> = comps.iter().map(|c| (c - lp_y).exp()).collect();
                out[0] = weights
                    .iter()
                    .zip(&ratios)
                    .map(|(w, r)| w * f.value(*r))
                    .sum::<f64>()
                    * p_y;
                if with_mse {
                    let mut mean = DVector::zeros(self.d_in());
                    for ((a, w), r) in atoms.iter().zip(weights).zip(&ratios) {
                        mean += a * (w * r);
                    }
                    for ((a, w), r) in atoms.iter().zip(weights).zip(&ratios) {
                        let c = f.curvature_weight(*r);
                        if c != 0.0 {
                            push_outer(&(a - &mean), w * c * p_y, &mut out[1..]);
                        }
                    }
                }
            }
            None => {
                let (mu, v, m_n, s2) = self.scalar_gaussian();
                let g = gain[0];
                let (x, n) = (node[0], node[1]);
                let y = g * x + n;
                let vy = g * g * v + s2;
                let my = g * mu + m_n;
                let lp_x = log_normal(x, mu, v);
                let lp_n = log_normal(n, m_n, s2);
                let lp_y = log_normal(y, my, vy);
                let lw = lp_x + lp_y;
                if lw < LOG_BOTH_ZERO && lp_x + lp_n < LOG_BOTH_ZERO {
                    return;
                }
                let r = (lp_n - lp_y).exp();
                let w = lw.exp();
                out[0] = f.value(r) * w;
                if with_mse {
                    let post = mu + g * v * (y - my) / vy;
                    out[1] = f.curvature_weight(r) * w * (x - post) * (x - post);
                }
            }
        }
    }
}

fn require_phi1(f: &EntropicFunctional) -> Result<()> {
    if !f.phi1_zero() {
        return Err(Error::Unsupported(format!(
            "mutual phi-information needs phi(1) = 0; normalize `{}` first",
            f.label()
        )));
    }
    Ok(())
}

fn integrate_terms(
    channel: &Channel,
    f: &EntropicFunctional,
    gain: &[f64],
    with_mse: bool,
    quad: &QuadratureSpec,
) -> Result<crate::numerics::Estimate> {
    channel.check_gain(gain)?;
    let region = channel.region(gain, quad)?;
    let n_out = 1 + if with_mse {
        upper_len(channel.d_in())
    } else {
        0
    };
    let slot = ErrorSlot::new();
    let est = integrate_vec(
        |x, out| {
            channel.terms(f, gain, x, with_mse, out);
            if out.iter().any(|v| !v.is_finite()) {
                slot.record(Error::NonFinite(format!("channel integrand at {x:?}")));
                out.iter_mut().for_each(|v| *v = 0.0);
            }
        },
        n_out,
        &region,
        quad,
    );
    slot.take()?;
    est
}

/// `I_φ = Σ_i w_i ∫ φ(p_{Y|X=x_i}/p_Y) p_Y dy` (or its continuous analogue).
pub fn mutual_phi_information(
    channel: &Channel,
    f: &EntropicFunctional,
    gain: &[f64],
    quad: &QuadratureSpec,
) -> Result<Measure> {
    require_phi1(f)?;
    let est = integrate_terms(channel, f, gain, false, quad)?;
    Ok(Measure {
        value: est.value[0],
        error: est.error[0],
    })
}

/// `MSE_φ = Σ_i w_i ∫ (x_i − E[X|y])(x_i − E[X|y])ᵗ r_i² φ″(r_i) p_Y dy`,
/// `r_i = p_{Y|X=x_i}/p_Y`.
pub fn mse_phi(
    channel: &Channel,
    f: &EntropicFunctional,
    gain: &[f64],
    quad: &QuadratureSpec,
) -> Result<InfoMatrix> {
    let est = integrate_terms(channel, f, gain, true, quad)?;
    InfoMatrix::from_upper(
        InfoKind::MsePhi,
        channel.d_in(),
        &est.value[1..],
        &est.error[1..],
    )
}
