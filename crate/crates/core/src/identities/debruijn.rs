//! Generalized de Bruijn identities for φ-entropies and φ-divergences, and
//! the Guo-type identity for the mutual φ-information of a gain channel.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CheckResult, Diagnostics, Header, Note, Relation, Tolerance, Value};
use crate::densities::{gain_channel, pde_residual, ChannelInput, Density, PdeSpec};
use crate::error::{Error, Result};
use crate::functionals::EntropicFunctional;
use crate::measures::{
    divergence_term, entropy_term, fisher_weight, push_outer, ratio_weight, upper_len, Channel,
    ErrorSlot, InfoKind, InfoMatrix,
};
use crate::numerics::{
    build_rule, fd_derivative, fd_gradient, Domain, FdSpec, QuadratureSpec, Region,
};

/// Largest PDE residual tolerated by the gate in front of every identity.
pub const GATE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    ScalarEntropy,
    ScalarDivergence,
    MultivariateEntropy,
    MultivariateDivergence,
    Guo,
}

impl IdentityKind {
    pub fn name(self) -> &'static str {
        match self {
            IdentityKind::ScalarEntropy => "scalar_entropy",
            IdentityKind::ScalarDivergence => "scalar_divergence",
            IdentityKind::MultivariateEntropy => "multivariate_entropy",
            IdentityKind::MultivariateDivergence => "multivariate_divergence",
            IdentityKind::Guo => "guo",
        }
    }
}

/// What an identity is evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Single(Density),
    Pair { p1: Density, p0: Density },
    Channel(Channel),
}

impl Subject {
    pub fn label(&self) -> String {
        match self {
            Subject::Single(p) => p.label(),
            Subject::Pair { p1, p0 } => format!("{} vs {}", p1.label(), p0.label()),
            Subject::Channel(c) => c.label(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IdentitySpec {
    pub kind: IdentityKind,
    pub subject: Subject,
    pub functional: EntropicFunctional,
    /// `θ0`; the gain `vec(G)` (row-major) for the Guo identity.
    pub theta: Vec<f64>,
    /// Governing PDE; derived from the density when `None`.
    pub pde: Option<PdeSpec>,
    pub fd: FdSpec,
    pub quadrature: QuadratureSpec,
    /// Defaults to [`Tolerance::FIRST_ORDER`] or [`Tolerance::SECOND_ORDER`]
    /// according to the order in θ of the identity.
    pub tolerance: Option<Tolerance>,
}

impl IdentitySpec {
    fn new(
        kind: IdentityKind,
        subject: Subject,
        functional: EntropicFunctional,
        theta: Vec<f64>,
    ) -> Self {
        Self {
            kind,
            subject,
            functional,
            theta,
            pde: None,
            fd: FdSpec::default(),
            quadrature: QuadratureSpec::default(),
            tolerance: None,
        }
    }

    /// Entropy identity; scalar or multivariate according to the dimension.
    pub fn entropy(p: Density, f: EntropicFunctional, theta: f64) -> Self {
        let kind = if p.dim() == 1 {
            IdentityKind::ScalarEntropy
        } else {
            IdentityKind::MultivariateEntropy
        };
        Self::new(kind, Subject::Single(p), f, vec![theta])
    }

    /// Divergence identity for `D(p1_θ ‖ p0_θ)`.
    pub fn divergence(p1: Density, p0: Density, f: EntropicFunctional, theta: f64) -> Self {
        let kind = if p1.dim() == 1 {
            IdentityKind::ScalarDivergence
        } else {
            IdentityKind::MultivariateDivergence
        };
        Self::new(kind, Subject::Pair { p1, p0 }, f, vec![theta])
    }

    pub fn guo(channel: Channel, f: EntropicFunctional, gain: Vec<f64>) -> Self {
        Self::new(IdentityKind::Guo, Subject::Channel(channel), f, gain)
    }

    pub fn with_pde(mut self, pde: PdeSpec) -> Self {
        self.pde = Some(pde);
        self
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_fd(mut self, fd: FdSpec) -> Self {
        self.fd = fd;
        self
    }

    pub fn with_quadrature(mut self, quad: QuadratureSpec) -> Self {
        self.quadrature = quad;
        self
    }

    pub fn header(&self) -> Header {
        Header {
            kind: self.kind.name().into(),
            family: self.subject.label(),
            functional: self.functional.label(),
            theta: self.theta.clone(),
        }
    }

    fn resolved_pde(&self) -> Result<PdeSpec> {
        if let Some(p) = &self.pde {
            return Ok(p.clone());
        }
        let p = match &self.subject {
            Subject::Single(p) | Subject::Pair { p1: p, .. } => p,
            Subject::Channel(_) => {
                return Err(Error::Unsupported("channels carry no θ-pde".into()))
            }
        };
        PdeSpec::for_density(p)
            .ok_or_else(|| Error::Unsupported(format!("no known pde for {}", p.label())))
    }

    pub fn default_tolerance(&self) -> Tolerance {
        let first = match self.kind {
            IdentityKind::Guo => true,
            _ => self
                .resolved_pde()
                .map(|p| p.is_first_order())
                .unwrap_or(true),
        };
        if first {
            Tolerance::FIRST_ORDER
        } else {
            Tolerance::SECOND_ORDER
        }
    }

    pub fn effective_tolerance(&self) -> Tolerance {
        self.tolerance.unwrap_or_else(|| self.default_tolerance())
    }
}

/// Probe points for the gate: five per axis around the bulk of the density
/// (offsets from the lower end of a half-line support).
fn gate_axes(p: &Density, theta: &[f64]) -> Vec<Vec<f64>> {
    let prof = p.tail_profile(theta);
    prof.axes
        .iter()
        .map(|ax| match prof.kind {
            crate::densities::TailKind::HalfLine { lower } => [0.2, 0.5, 1.0, 2.0, 5.0]
                .iter()
                .map(|m| lower.max(ax.hi) + m * ax.scale * ax.scale)
                .collect(),
            _ => {
                let (c, half) = (
                    0.5 * (ax.lo + ax.hi),
                    0.5 * (ax.hi - ax.lo) + 2.0 * ax.scale,
                );
                [-1.0, -0.5, 0.0, 0.5, 1.0]
                    .iter()
                    .map(|m| c + m * half)
                    .collect()
            }
        })
        .collect()
}

fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, ax| {
        acc.iter()
            .flat_map(|pre| {
                ax.iter().map(move |&v| {
                    let mut p = pre.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

/// Largest `|residual|` of `pde` for `p` over `5^d` points and θ0·{½, 1, 2}.
pub fn pde_gate(p: &Density, pde: &PdeSpec, theta0: &[f64]) -> Result<f64> {
    let mut max = 0.0f64;
    for s in [0.5, 1.0, 2.0] {
        let theta: Vec<f64> = theta0.iter().map(|t| t * s).collect();
        for x in product(&gate_axes(p, &theta)) {
            let r = pde_residual(p, pde, &x, &theta)?;
            if !r.is_finite() {
                return Err(Error::NonFinite(format!("pde residual at x = {x:?}")));
            }
            max = max.max(r.abs());
        }
    }
    Ok(max)
}

fn gate(p: &Density, pde: &PdeSpec, theta0: &[f64], diag: &mut Diagnostics) -> Result<()> {
    let m = pde_gate(p, pde, theta0)?;
    let prev = diag.pde_residual_max.unwrap_or(0.0);
    diag.pde_residual_max = Some(prev.max(m));
    diag.pde = Some(pde.name());
    if m > GATE_TOLERANCE {
        return Err(Error::PdeGate {
            pde: pde.name(),
            max_residual: m,
        });
    }
    Ok(())
}

fn trace_mul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(&b.transpose()).sum()
}

/// `(α₁, α₂, K₂)` at θ, where `K₂(J)` is the state-Fisher term of the
/// identity: `β₂J` (scalar), `½Tr(RJ)` (heat) or `−Tr(RJ)` (Cauchy).
struct Coefficients {
    a1: f64,
    a2: f64,
    k2: Box<dyn Fn(&DMatrix<f64>) -> f64>,
}

fn coefficients(pde: &PdeSpec, theta: f64, d: usize) -> Result<Coefficients> {
    let check = |r: &DMatrix<f64>| {
        if r.nrows() != d {
            Err(Error::Dimension {
                expected: d,
                got: r.nrows(),
            })
        } else {
            Ok(r.clone())
        }
    };
    Ok(match pde {
        PdeSpec::Scalar {
            alpha1,
            alpha2,
            beta1: _,
            beta2,
        } => {
            if d != 1 {
                return Err(Error::Dimension {
                    expected: 1,
                    got: d,
                });
            }
            let b2 = beta2.at(theta);
            Coefficients {
                a1: alpha1.at(theta),
                a2: alpha2.at(theta),
                k2: Box::new(move |j| b2 * j[(0, 0)]),
            }
        }
        PdeSpec::HeatTrace { r } => {
            let r = check(r)?;
            Coefficients {
                a1: 1.0,
                a2: 0.0,
                k2: Box::new(move |j| 0.5 * trace_mul(&r, j)),
            }
        }
        PdeSpec::CauchyTrace { r } => {
            let r = check(r)?;
            Coefficients {
                a1: 0.0,
                a2: 1.0,
                k2: Box::new(move |j| -trace_mul(&r, j)),
            }
        }
        PdeSpec::GuoConditional { .. } => {
            return Err(Error::Unsupported(
                "guo_conditional governs the gain, not a de Bruijn parameter".into(),
            ))
        }
    })
}

fn scalar_theta(spec: &IdentitySpec) -> Result<f64> {
    match spec.theta.as_slice() {
        [t] => Ok(*t),
        other => Err(Error::Dimension {
            expected: 1,
            got: other.len(),
        }),
    }
}

fn expect_dim(spec: &IdentitySpec, d: usize) -> Result<()> {
    let scalar = matches!(
        spec.kind,
        IdentityKind::ScalarEntropy | IdentityKind::ScalarDivergence
    );
    if scalar != (d == 1) {
        return Err(Error::Unsupported(format!(
            "{} identity evaluated on a {d}-dimensional density",
            spec.kind.name()
        )));
    }
    Ok(())
}

/// `α₁ g′(θ0) + α₂ g″(θ0)` with `g` differentiated on frozen nodes.
fn lhs_derivatives<G>(
    g: G,
    theta0: f64,
    c: &Coefficients,
    fd: &FdSpec,
    diag: &mut Diagnostics,
    name: &str,
) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let mut lhs = 0.0;
    let mut agreement = 0.0;
    if c.a1 != 0.0 {
        let d1 = fd_derivative(&g, theta0, 1, fd, Domain::Positive)?;
        diag.fd_steps.push(d1.step);
        diag.values.insert(format!("d{name}"), d1.value);
        lhs += c.a1 * d1.value;
        agreement += c.a1.abs() * d1.agreement;
    }
    if c.a2 != 0.0 {
        let d2 = fd_derivative(&g, theta0, 2, fd, Domain::Positive)?;
        diag.fd_steps.push(d2.step);
        diag.values.insert(format!("d2{name}"), d2.value);
        lhs += c.a2 * d2.value;
        agreement += c.a2.abs() * d2.agreement;
    }
    diag.richardson_agreement = Some(agreement);
    Ok(lhs)
}

fn budgets(diag: &mut Diagnostics, lhs: f64, rhs: f64, rhs_err: f64) {
    let agr = diag.richardson_agreement.unwrap_or(0.0);
    diag.values
        .insert("budget_fd".into(), agr / lhs.abs().max(f64::MIN_POSITIVE));
    diag.values.insert(
        "budget_quadrature".into(),
        rhs_err / rhs.abs().max(f64::MIN_POSITIVE),
    );
}

/// Alternative sign/trace readings of the second-order identities.
fn displayed_notes(
    pde: &PdeSpec,
    divergence: bool,
    lhs: f64,
    rhs: f64,
    j: &DMatrix<f64>,
    j_theta: f64,
) -> Vec<Note> {
    let mut notes = Vec::new();
    match pde {
        PdeSpec::Scalar { alpha2, .. } if !alpha2.is_zero() && !divergence => {
            notes.push(Note {
                label: "displayed_convention".into(),
                message: "right-hand side with the opposite overall sign".into(),
                lhs,
                rhs: -rhs,
                residual: -rhs - lhs,
            });
        }
        PdeSpec::CauchyTrace { r } => {
            let displayed = trace_mul(r, j) + r.trace() * j_theta;
            notes.push(Note {
                label: "displayed_convention".into(),
                message: "Tr(R J) + Tr(R) J_theta".into(),
                lhs,
                rhs: displayed,
                residual: displayed - lhs,
            });
        }
        _ => {}
    }
    notes
}

/// `α₁ ∂θH + α₂ ∂²θH = K₂(J) − α₂ J_θ`, one-dimensional.
pub fn check_scalar_entropy(spec: &IdentitySpec) -> Result<CheckResult> {
    entropy_identity(spec)
}

/// `∂θH = ½ Tr(R J)` (heat) or `∂²θH = −Tr(R J) − J_θ` (Cauchy), `d ≥ 2`.
pub fn check_multivariate_entropy(spec: &IdentitySpec) -> Result<CheckResult> {
    entropy_identity(spec)
}

/// `α₁ ∂θD + α₂ ∂²θD = α₂ J_θ(p1‖p0) − K₂(J(p1‖p0))`, one-dimensional.
pub fn check_scalar_divergence(spec: &IdentitySpec) -> Result<CheckResult> {
    divergence_identity(spec)
}

/// Trace forms of the divergence identity, `d ≥ 2`.
pub fn check_multivariate_divergence(spec: &IdentitySpec) -> Result<CheckResult> {
    divergence_identity(spec)
}

fn entropy_identity(spec: &IdentitySpec) -> Result<CheckResult> {
    let p = match &spec.subject {
        Subject::Single(p) => p,
        _ => {
            return Err(Error::Unsupported(
                "entropy identities need a single density".into(),
            ))
        }
    };
    let f = &spec.functional;
    if !f.phi0_zero() {
        return Err(Error::Unsupported(format!(
            "phi-entropy needs phi(0) = 0, which `{}` does not satisfy",
            f.label()
        )));
    }
    let t0 = scalar_theta(spec)?;
    p.check_theta(&spec.theta)?;
    if p.n_params() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: p.n_params(),
        });
    }
    let d = p.dim();
    expect_dim(spec, d)?;
    let pde = spec.resolved_pde()?;
    let c = coefficients(&pde, t0, d)?;
    let mut diag = Diagnostics::default();
    gate(p, &pde, &spec.theta, &mut diag)?;

    let nj = upper_len(d);
    let region = Region::for_density(p, &spec.theta, &spec.quadrature)?;
    let (rule, est) = build_rule(
        |x, out| {
            let j = p.jet_unchecked(x, &[t0]);
            out[0] = entropy_term(f, j.log_p);
            let w = fisher_weight(f, j.log_p);
            if w != 0.0 {
                push_outer(&j.score_x, w, &mut out[1..1 + nj]);
                out[1 + nj] = w * j.score_theta[0] * j.score_theta[0];
            }
        },
        2 + nj,
        &region,
        &spec.quadrature,
    )?;
    let jm = InfoMatrix::from_upper(
        InfoKind::FisherInfo,
        d,
        &est.value[1..1 + nj],
        &est.error[1..1 + nj],
    )?;
    let j_theta = est.value[1 + nj];
    let entropy = |t: f64| -> Result<f64> {
        p.check_theta(&[t])?;
        Ok(rule.apply_scalar(|x| entropy_term(f, p.log_pdf_unchecked(x, &[t]))))
    };
    let lhs = lhs_derivatives(entropy, t0, &c, &spec.fd, &mut diag, "H")?;
    let rhs = (c.k2)(&jm.value) - c.a2 * j_theta;

    let rhs_err = (c.k2)(&jm.error).abs() + c.a2.abs() * est.error[1 + nj];
    diag.quadrature_error = Some(est.max_error());
    diag.quadrature_nodes = Some(rule.len());
    diag.values.insert("H".into(), est.value[0]);
    diag.values.insert("J".into(), jm.trace());
    diag.values.insert("J_theta".into(), j_theta);
    diag.values.insert("alpha1".into(), c.a1);
    diag.values.insert("alpha2".into(), c.a2);
    budgets(&mut diag, lhs, rhs, rhs_err);
    diag.notes = displayed_notes(&pde, false, lhs, rhs, &jm.value, j_theta);
    Ok(CheckResult::evaluated(
        spec.header(),
        Value::Scalar(lhs),
        Value::Scalar(rhs),
        Relation::Eq,
        spec.effective_tolerance(),
        diag,
    ))
}

fn divergence_identity(spec: &IdentitySpec) -> Result<CheckResult> {
    let (p1, p0) = match &spec.subject {
        Subject::Pair { p1, p0 } => (p1, p0),
        _ => {
            return Err(Error::Unsupported(
                "divergence identities need a pair".into(),
            ))
        }
    };
    let f = &spec.functional;
    let t0 = scalar_theta(spec)?;
    p1.check_theta(&spec.theta)?;
    p0.check_theta(&spec.theta)?;
    if p1.dim() != p0.dim() {
        return Err(Error::Dimension {
            expected: p1.dim(),
            got: p0.dim(),
        });
    }
    for p in [p1, p0] {
        if p.n_params() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: p.n_params(),
            });
        }
    }
    let d = p1.dim();
    expect_dim(spec, d)?;
    let pde = spec.resolved_pde()?;
    let c = coefficients(&pde, t0, d)?;
    let mut diag = Diagnostics::default();
    gate(p1, &pde, &spec.theta, &mut diag)?;
    gate(p0, &pde, &spec.theta, &mut diag)?;

    let nj = upper_len(d);
    let region = Region::for_densities(&[(p1, &spec.theta), (p0, &spec.theta)], &spec.quadrature)?;
    let slot = ErrorSlot::new();
    let built = build_rule(
        |x, out| {
            let j1 = p1.jet_unchecked(x, &[t0]);
            let j0 = p0.jet_unchecked(x, &[t0]);
            let r = divergence_term(f, j1.log_p, j0.log_p, x)
                .and_then(|v| ratio_weight(f, j1.log_p, j0.log_p, x).map(|w| (v, w)));
            match r {
                Ok((v, w)) => {
                    out[0] = v;
                    if w != 0.0 {
                        push_outer(&(&j1.score_x - &j0.score_x), w, &mut out[1..1 + nj]);
                        let st = j1.score_theta[0] - j0.score_theta[0];
                        out[1 + nj] = w * st * st;
                    }
                }
                Err(e) => slot.record(e),
            }
        },
        2 + nj,
        &region,
        &spec.quadrature,
    );
    slot.take()?;
    let (rule, est) = built?;
    let jm = InfoMatrix::from_upper(
        InfoKind::FisherDiv,
        d,
        &est.value[1..1 + nj],
        &est.error[1..1 + nj],
    )?;
    let j_theta = est.value[1 + nj];
    let divergence = |t: f64| -> Result<f64> {
        p1.check_theta(&[t])?;
        p0.check_theta(&[t])?;
        let slot = ErrorSlot::new();
        let v = rule.apply_scalar(|x| {
            let lp1 = p1.log_pdf_unchecked(x, &[t]);
            let lp0 = p0.log_pdf_unchecked(x, &[t]);
            divergence_term(f, lp1, lp0, x).unwrap_or_else(|e| {
                slot.record(e);
                0.0
            })
        });
        slot.take()?;
        Ok(v)
    };
    let lhs = lhs_derivatives(divergence, t0, &c, &spec.fd, &mut diag, "D")?;
    let rhs = c.a2 * j_theta - (c.k2)(&jm.value);

    let rhs_err = (c.k2)(&jm.error).abs() + c.a2.abs() * est.error[1 + nj];
    diag.quadrature_error = Some(est.max_error());
    diag.quadrature_nodes = Some(rule.len());
    diag.values.insert("D".into(), est.value[0]);
    diag.values.insert("J".into(), jm.trace());
    diag.values.insert("J_theta".into(), j_theta);
    diag.values.insert("alpha1".into(), c.a1);
    diag.values.insert("alpha2".into(), c.a2);
    budgets(&mut diag, lhs, rhs, rhs_err);
    diag.notes = displayed_notes(&pde, true, lhs, rhs, &jm.value, j_theta);
    Ok(CheckResult::evaluated(
        spec.header(),
        Value::Scalar(lhs),
        Value::Scalar(rhs),
        Relation::Eq,
        spec.effective_tolerance(),
        diag,
    ))
}

/// `(∇_G I_φ) Gᵗ = R⁻¹ G MSE_φ Gᵗ` with `R` the noise covariance.
pub fn check_guo(spec: &IdentitySpec) -> Result<CheckResult> {
    let ch = match &spec.subject {
        Subject::Channel(c) => c,
        _ => {
            return Err(Error::Unsupported(
                "the guo identity needs a channel".into(),
            ))
        }
    };
    let f = &spec.functional;
    let gain = spec.theta.as_slice();
    ch.check_gain(gain)?;
    let (d_in, d_out) = (ch.d_in(), ch.d_out());
    let r = ch.noise_covariance();
    let mut diag = Diagnostics::default();

    // Gate: the conditional density of Y given X = x.
    let conditional = PdeSpec::GuoConditional { r: r.clone() };
    match ch.input() {
        ChannelInput::Discrete { atoms, .. } => {
            for a in atoms {
                let single = ChannelInput::discrete(vec![a.clone()], vec![1.0])?;
                let pc = gain_channel(&single, ch.noise_density().clone(), ch.noise_theta())?;
                gate(&pc, &conditional, gain, &mut diag)?;
            }
        }
        ChannelInput::Gaussian { mean, variance } => {
            for z in [-1.5, 0.0, 1.0] {
                let single =
                    ChannelInput::discrete(vec![vec![mean + z * variance.sqrt()]], vec![1.0])?;
                let pc = gain_channel(&single, ch.noise_density().clone(), ch.noise_theta())?;
                gate(&pc, &conditional, gain, &mut diag)?;
            }
        }
    }

    let nm = upper_len(d_in);
    let region = ch.region(gain, &spec.quadrature)?;
    let (rule, est) = build_rule(
        |x, out| ch.terms(f, gain, x, true, out),
        1 + nm,
        &region,
        &spec.quadrature,
    )?;
    if est.value.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("channel integrand".into()));
    }
    let mse = InfoMatrix::from_upper(InfoKind::MsePhi, d_in, &est.value[1..], &est.error[1..])?;
    let info = |g: &[f64]| -> Result<f64> {
        let v = rule.apply(1, |x, out| ch.terms(f, g, x, false, out))[0];
        Ok(v)
    };
    let grad = fd_gradient(info, gain, &spec.fd, Domain::Real)?;
    let gm = DMatrix::from_row_slice(d_out, d_in, gain);
    let grad_g = DMatrix::from_row_slice(d_out, d_in, grad.value.as_slice());
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidDensity("singular noise covariance".into()))?;
    let lhs = &grad_g * gm.transpose();
    let rhs = &r_inv * &gm * &mse.value * gm.transpose();

    diag.fd_steps = grad.steps.clone();
    diag.richardson_agreement = Some(grad.agreement);
    diag.quadrature_error = Some(est.max_error());
    diag.quadrature_nodes = Some(rule.len());
    diag.values.insert("I".into(), est.value[0]);
    diag.values.insert("mse_trace".into(), mse.trace());
    let rhs_err = (&r_inv * &gm * &mse.error * gm.transpose()).amax();
    let scale = lhs.amax();
    diag.values.insert(
        "budget_fd".into(),
        grad.agreement * gm.amax() / scale.max(f64::MIN_POSITIVE),
    );
    diag.values.insert(
        "budget_quadrature".into(),
        rhs_err / rhs.amax().max(f64::MIN_POSITIVE),
    );
    Ok(CheckResult::evaluated(
        spec.header(),
        Value::matrix(&lhs),
        Value::matrix(&rhs),
        Relation::Eq,
        spec.effective_tolerance(),
        diag,
    ))
}

/// Runs `spec`, turning any error into an errored record.
pub fn check_identity(spec: &IdentitySpec) -> CheckResult {
    let r = match spec.kind {
        IdentityKind::ScalarEntropy => check_scalar_entropy(spec),
        IdentityKind::MultivariateEntropy => check_multivariate_entropy(spec),
        IdentityKind::ScalarDivergence => check_scalar_divergence(spec),
        IdentityKind::MultivariateDivergence => check_multivariate_divergence(spec),
        IdentityKind::Guo => check_guo(spec),
    };
    r.unwrap_or_else(|e| CheckResult::errored(spec.header(), spec.effective_tolerance(), &e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identities::Status;
    use std::f64::consts::PI;

    fn sh() -> EntropicFunctional {
        EntropicFunctional::shannon()
    }

    #[test]
    fn gaussian_heat_entropy() {
        let r = check_identity(&IdentitySpec::entropy(Density::gaussian_1d(), sh(), 1.0));
        assert_eq!(r.status, Status::Passed, "{r:?}");
        assert!((r.lhs_scalar().unwrap() - 0.5).abs() < 1e-6);
        assert!((r.rhs_scalar().unwrap() - 0.5).abs() < 1e-6);
        assert!(r.diagnostics.pde_residual_max.unwrap() < 1e-12);
        let h2 = EntropicFunctional::with_param("hcdt", 2.0).unwrap();
        let r = check_identity(&IdentitySpec::entropy(Density::gaussian_1d(), h2, 1.0));
        let want = 0.25 / PI.sqrt();
        assert!((r.lhs_scalar().unwrap() - want).abs() < 1e-5);
        assert!((r.rhs_scalar().unwrap() - want).abs() < 1e-5);
    }

    #[test]
    fn cauchy_and_levy_entropy_signs() {
        let r = check_identity(&IdentitySpec::entropy(Density::cauchy_1d(), sh(), 1.0));
        assert_eq!(r.status, Status::Passed, "{r:?}");
        assert!((r.lhs_scalar().unwrap() + 1.0).abs() < 1e-3);
        let n = r.note("displayed_convention").unwrap();
        assert!((n.residual - 2.0).abs() < 1e-3);
        let r = check_identity(&IdentitySpec::entropy(
            Density::levy(0.0).unwrap(),
            sh(),
            1.0,
        ));
        assert_eq!(r.status, Status::Passed, "{r:?}");
        assert!((r.rhs_scalar().unwrap() + 2.0).abs() < 1e-3);
        assert!((r.note("displayed_convention").unwrap().residual - 4.0).abs() < 1e-2);
    }

    #[test]
    fn wrong_pde_is_gated() {
        let spec =
            IdentitySpec::entropy(Density::gaussian_1d(), sh(), 1.0).with_pde(PdeSpec::laplace());
        let r = check_identity(&spec);
        assert_eq!(r.status, Status::Errored);
        assert!(r.diagnostics.pde_residual_max.unwrap() > GATE_TOLERANCE);
        assert!(r.lhs.is_none());
    }

    #[test]
    fn kl_pair_divergence() {
        let p1 = Density::gaussian_1d().with_offset(1.0).unwrap();
        let r = check_identity(&IdentitySpec::divergence(
            p1,
            Density::gaussian_1d(),
            sh(),
            1.0,
        ));
        assert_eq!(r.status, Status::Passed, "{r:?}");
        assert!((r.lhs_scalar().unwrap() + 0.25).abs() < 1e-5);
        assert!((r.rhs_scalar().unwrap() + 0.25).abs() < 1e-5);
    }

    #[test]
    fn guo_gaussian_input() {
        let ch = Channel::new(
            ChannelInput::gaussian(0.0, 1.0).unwrap(),
            Density::gaussian_1d(),
            1.0,
        )
        .unwrap();
        let r = check_identity(&IdentitySpec::guo(ch, sh(), vec![1.0]));
        assert_eq!(r.status, Status::Passed, "{r:?}");
        assert!((r.lhs_scalar().unwrap() - 0.5).abs() < 1e-6);
        assert!((r.rhs_scalar().unwrap() - 0.5).abs() < 1e-6);
    }
}
