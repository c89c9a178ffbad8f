//! Finite mixtures `p_Y(y) = Σ w_i p_N(y − G x_i)` arising as outputs of
//! additive-noise channels with a discrete input.

use nalgebra::{DMatrix, DVector};

use super::{AxisProfile, Density, Jet, Kind, TailKind, TailProfile};
use crate::error::{Error, Result};

/// Input law of an additive-noise channel `Y = G X + N`.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelInput {
    /// Finitely many atoms `x_i` with probabilities `w_i`.
    Discrete {
        atoms: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    /// Scalar Gaussian input `N(mean, variance)`.
    Gaussian { mean: f64, variance: f64 },
}

impl ChannelInput {
    pub fn discrete(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidDensity(
                "need one weight per atom and at least one atom".into(),
            ));
        }
        let d = atoms[0].len();
        if d == 0
            || atoms
                .iter()
                .any(|a| a.len() != d || a.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidDensity(
                "atoms must be finite and of equal dimension".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidDensity("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDensity(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(ChannelInput::Discrete { atoms, weights })
    }

    /// Equiprobable `±a` in one dimension.
    pub fn binary(a: f64) -> Self {
        Self::discrete(vec![vec![-a], vec![a]], vec![0.5, 0.5]).expect("valid binary input")
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidDensity(
                "gaussian input needs a finite mean and positive variance".into(),
            ));
        }
        Ok(ChannelInput::Gaussian { mean, variance })
    }

    pub fn dim(&self) -> usize {
        match self {
            ChannelInput::Discrete { atoms, .. } => atoms[0].len(),
            ChannelInput::Gaussian { .. } => 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ChannelInput::Discrete { atoms, .. } => format!("discrete({} atoms)", atoms.len()),
            ChannelInput::Gaussian { mean, variance } => format!("N({mean},{variance})"),
        }
    }
}

/// What `θ` controls in a channel-output mixture.
#[derive(Debug, Clone, PartialEq)]
pub enum MixtureMode {
    /// `θ` is the noise parameter; the gain is fixed.
    Noise { gain: DMatrix<f64> },
    /// `θ = vec(G)` (row-major); the noise parameter is fixed.
    Gain { noise_theta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mixture {
    noise: Box<Density>,
    atoms: Vec<DVector<f64>>,
    weights: Vec<f64>,
    log_w: Vec<f64>,
    mode: MixtureMode,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Mixture {
    fn new(input: &ChannelInput, noise: Density, mode: MixtureMode) -> Result<Self> {
        let (atoms, weights) = match input {
            ChannelInput::Discrete { atoms, weights } => (atoms, weights),
            ChannelInput::Gaussian { .. } => {
                return Err(Error::Unsupported("mixtures need a discrete input".into()))
            }
        };
        if matches!(noise.kind, Kind::Mixture(_)) || noise.n_params() != 1 {
            return Err(Error::InvalidDensity(
                "channel noise must be a one-parameter non-mixture family".into(),
            ));
        }
        let d_in = input.dim();
        if let MixtureMode::Noise { gain } = &mode {
            if gain.nrows() != noise.dim() || gain.ncols() != d_in {
                return Err(Error::Dimension {
                    expected: noise.dim() * d_in,
                    got: gain.nrows() * gain.ncols(),
                });
            }
        }
        if let MixtureMode::Gain { noise_theta } = &mode {
            noise.check_theta(&[*noise_theta])?;
        }
        Ok(Self {
            atoms: atoms
                .iter()
                .map(|a| DVector::from_column_slice(a))
                .collect(),
            log_w: weights.iter().map(|w| w.ln()).collect(),
            weights: weights.clone(),
            noise: Box::new(noise),
            mode,
        })
    }

    pub fn dim_out(&self) -> usize {
        self.noise.dim()
    }

    pub fn dim_in(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn n_params(&self) -> usize {
        match self.mode {
            MixtureMode::Noise { .. } => 1,
            MixtureMode::Gain { .. } => self.dim_out() * self.dim_in(),
        }
    }

    pub fn noise(&self) -> &Density {
        &self.noise
    }

    pub fn atoms(&self) -> &[DVector<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode(&self) -> &MixtureMode {
        &self.mode
    }

    pub fn label(&self) -> String {
        let m = match self.mode {
            MixtureMode::Noise { .. } => "noise",
            MixtureMode::Gain { .. } => "gain",
        };
        format!("mixture[{}x{}]({m})", self.atoms.len(), self.noise.label())
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        match self.mode {
            MixtureMode::Noise { .. } => self.noise.check_theta(theta),
            MixtureMode::Gain { .. } => match theta.iter().find(|t| !t.is_finite()) {
                Some(&t) => Err(Error::Theta(t)),
                None => Ok(()),
            },
        }
    }

    /// Gain matrix and noise parameter at `θ`.
    pub fn resolve(&self, theta: &[f64]) -> (DMatrix<f64>, f64) {
        match &self.mode {
            MixtureMode::Noise { gain } => (gain.clone(), theta[0]),
            MixtureMode::Gain { noise_theta } => (
                DMatrix::from_row_slice(self.dim_out(), self.dim_in(), theta),
                *noise_theta,
            ),
        }
    }

    fn residual(&self, y: &[f64], gain: &DMatrix<f64>, i: usize) -> Vec<f64> {
        let z = DVector::from_column_slice(y) - gain * &self.atoms[i];
        z.as_slice().to_vec()
    }

    /// `log p_N(y − G x_i)` for every atom.
    pub fn component_logs(&self, y: &[f64], theta: &[f64]) -> Vec<f64> {
        let (gain, nt) = self.resolve(theta);
        (0..self.atoms.len())
            .map(|i| {
                self.noise
                    .log_pdf_unchecked(&self.residual(y, &gain, i), &[nt])
            })
            .collect()
    }

    pub fn log_pdf(&self, y: &[f64], theta: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .component_logs(y, theta)
            .iter()
            .zip(&self.log_w)
            .map(|(l, w)| l + w)
            .collect();
        log_sum_exp(&terms)
    }

    fn component_jet(&self, y: &[f64], gain: &DMatrix<f64>, nt: f64, i: usize) -> Jet {
        let mut j = self.noise.jet_unchecked(&self.residual(y, gain, i), &[nt]);
        if let MixtureMode::Gain { .. } = self.mode {
            let (dout, din) = (self.dim_out(), self.dim_in());
            let n = dout * din;
            if !j.in_support() {
                return Jet::outside(dout, n);
            }
            let x = &self.atoms[i];
            let mut s = DVector::zeros(n);
            let mut h = DMatrix::zeros(n, n);
            for a in 0..dout {
                for b in 0..din {
                    s[a * din + b] = -x[b] * j.score_x[a];
                    for c in 0..dout {
                        for d in 0..din {
                            h[(a * din + b, c * din + d)] = x[b] * x[d] * j.hess_log_x[(a, c)];
                        }
                    }
                }
            }
            j.score_theta = s;
            j.hess_log_theta = h;
        }
        j
    }

    pub fn jet(&self, y: &[f64], theta: &[f64]) -> Jet {
        let (gain, nt) = self.resolve(theta);
        let d = self.dim_out();
        let n = self.n_params();
        let jets: Vec<Jet> = (0..self.atoms.len())
            .map(|i| self.component_jet(y, &gain, nt, i))
            .collect();
        let terms: Vec<f64> = jets
            .iter()
            .zip(&self.log_w)
            .map(|(j, w)| j.log_p + w)
            .collect();
        let log_p = log_sum_exp(&terms);
        if log_p == f64::NEG_INFINITY {
            return Jet::outside(d, n);
        }
        let mut sx = DVector::zeros(d);
        let mut st = DVector::zeros(n);
        let mut hx = DMatrix::zeros(d, d);
        let mut ht = DMatrix::zeros(n, n);
        for (j, t) in jets.iter().zip(&terms) {
            let r = (t - log_p).exp();
            if r == 0.0 {
                continue;
            }
            sx += &j.score_x * r;
            st += &j.score_theta * r;
            hx += (&j.hess_log_x + &j.score_x * j.score_x.transpose()) * r;
            ht += (&j.hess_log_theta + &j.score_theta * j.score_theta.transpose()) * r;
        }
        hx -= &sx * sx.transpose();
        ht -= &st * st.transpose();
        Jet {
            log_p,
            score_x: sx,
            hess_log_x: hx,
            score_theta: st,
            hess_log_theta: ht,
        }
    }

    /// Posterior probabilities of the atoms given `y`.
    pub fn responsibilities(&self, y: &[f64], theta: &[f64]) -> Vec<f64> {
        let terms: Vec<f64> = self
            .component_logs(y, theta)
            .iter()
            .zip(&self.log_w)
            .map(|(l, w)| l + w)
            .collect();
        let lp = log_sum_exp(&terms);
        if lp == f64::NEG_INFINITY {
            return vec![0.0; terms.len()];
        }
        terms.iter().map(|t| (t - lp).exp()).collect()
    }

    pub fn profile(&self, theta: &[f64]) -> TailProfile {
        let (gain, nt) = self.resolve(theta);
        let base = self.noise.tail_profile(&[nt]);
        let locs: Vec<DVector<f64>> = self.atoms.iter().map(|a| &gain * a).collect();
        let axes = base
            .axes
            .iter()
            .enumerate()
            .map(|(k, ax)| {
                let lo = locs.iter().map(|l| l[k]).fold(f64::INFINITY, f64::min);
                let hi = locs.iter().map(|l| l[k]).fold(f64::NEG_INFINITY, f64::max);
                AxisProfile {
                    lo: ax.lo + lo,
                    hi: ax.hi + hi,
                    scale: ax.scale,
                }
            })
            .collect::<Vec<_>>();
        let kind = match base.kind {
            TailKind::HalfLine { lower } => TailKind::HalfLine {
                lower: lower + locs.iter().map(|l| l[0]).fold(f64::INFINITY, f64::min),
            },
            k => k,
        };
        TailProfile { kind, axes }
    }
}

/// Output density of `Y = G X + N(θ)` with `θ` the noise parameter.
///
/// A scalar Gaussian input through Gaussian noise collapses to a Gaussian
/// with offset `g² v / σ²`.
pub fn channel_output(input: &ChannelInput, gain: DMatrix<f64>, noise: Density) -> Result<Density> {
    match input {
        ChannelInput::Discrete { .. } => Ok(Density::from_mixture(Mixture::new(
            input,
            noise,
            MixtureMode::Noise { gain },
        )?)),
        ChannelInput::Gaussian { mean, variance } => {
            let g = match &noise.kind {
                Kind::Gaussian(g) if g.mean.len() == 1 && gain.len() == 1 => g,
                _ => {
                    return Err(Error::Unsupported(
                        "gaussian inputs are supported through scalar gaussian noise only".into(),
                    ))
                }
            };
            let gain = gain[(0, 0)];
            let s2 = g.shape.matrix()[(0, 0)];
            let out =
                Density::gaussian(&[g.mean[0] + gain * mean], DMatrix::from_element(1, 1, s2))?;
            out.with_offset(g.offset + gain * gain * variance / s2)
        }
    }
}

/// Output density of `Y = G X + N` with `θ = vec(G)` and the noise parameter fixed.
pub fn gain_channel(input: &ChannelInput, noise: Density, noise_theta: f64) -> Result<Density> {
    Ok(Density::from_mixture(Mixture::new(
        input,
        noise,
        MixtureMode::Gain { noise_theta },
    )?))
}

/// Conditional mean `E[X | Y = y]` for a discrete-input channel output.
pub fn posterior_mean(density: &Density, y: &[f64], theta: &[f64]) -> Result<DVector<f64>> {
    let m = match &density.kind {
        Kind::Mixture(m) => m,
        _ => {
            return Err(Error::Unsupported(
                "posterior mean requires a channel-output mixture".into(),
            ))
        }
    };
    density.check_theta(theta)?;
    if y.len() != density.dim() {
        return Err(Error::Dimension {
            expected: density.dim(),
            got: y.len(),
        });
    }
    let r = m.responsibilities(y, theta);
    let mut mean = DVector::zeros(m.dim_in());
    for (ri, a) in r.iter().zip(m.atoms()) {
        mean += a * *ri;
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_awgn_density_and_posterior() {
        let p = channel_output(
            &ChannelInput::binary(1.0),
            DMatrix::identity(1, 1),
            Density::gaussian_1d(),
        )
        .unwrap();
        let phi = |x: f64| (-(x * x) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let y = 0.4;
        let expected = 0.5 * (phi(y - 1.0) + phi(y + 1.0));
        assert!((p.pdf(&[y], &[1.0]).unwrap() - expected).abs() < 1e-15);
        let m = posterior_mean(&p, &[y], &[1.0]).unwrap();
        assert!((m[0] - y.tanh()).abs() < 1e-14);
    }

    #[test]
    fn mixture_jet_matches_finite_differences() {
        let input = ChannelInput::discrete(
            vec![vec![-1.0, 0.5], vec![0.8, 0.2], vec![0.0, -1.0]],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let noise = Density::gaussian(
            &[0.0, 0.0],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.6]),
        )
        .unwrap();
        let p = gain_channel(&input, noise, 0.7).unwrap();
        let theta = [1.0, 0.3, -0.2, 0.9];
        let y = [0.3, -0.4];
        let j = p.jet(&y, &theta).unwrap();
        let h = 1e-5;
        for a in 0..4 {
            let mut tp = theta;
            let mut tm = theta;
            tp[a] += h;
            tm[a] -= h;
            let fd = (p.log_pdf(&y, &tp).unwrap() - p.log_pdf(&y, &tm).unwrap()) / (2.0 * h);
            assert!((fd - j.score_theta[a]).abs() < 1e-8);
            let jp = p.jet(&y, &tp).unwrap();
            let jm = p.jet(&y, &tm).unwrap();
            for b in 0..4 {
                let fd2 = (jp.score_theta[b] - jm.score_theta[b]) / (2.0 * h);
                assert!((fd2 - j.hess_log_theta[(a, b)]).abs() < 1e-7);
            }
        }
        for k in 0..2 {
            let mut yp = y;
            let mut ym = y;
            yp[k] += h;
            ym[k] -= h;
            let jp = p.jet(&yp, &theta).unwrap();
            let jm = p.jet(&ym, &theta).unwrap();
            for l in 0..2 {
                let fd2 = (jp.score_x[l] - jm.score_x[l]) / (2.0 * h);
                assert!((fd2 - j.hess_log_x[(l, k)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn gaussian_input_collapses() {
        let p = channel_output(
            &ChannelInput::gaussian(0.0, 2.0).unwrap(),
            DMatrix::from_element(1, 1, 1.5),
            Density::gaussian_1d(),
        )
        .unwrap();
        // variance 1.5² · 2 + θ
        let direct = Density::gaussian(&[0.0], DMatrix::from_element(1, 1, 4.5 + 0.8)).unwrap();
        assert!(
            (p.pdf(&[0.3], &[0.8]).unwrap() - direct.pdf(&[0.3], &[1.0]).unwrap()).abs() < 1e-15
        );
        assert!(ChannelInput::discrete(vec![vec![0.0]], vec![0.5]).is_err());
    }
}
