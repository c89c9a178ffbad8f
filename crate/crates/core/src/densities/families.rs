use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{AxisProfile, Jet, TailKind, TailProfile};
use crate::linalg::SpdMatrix;

fn one(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

fn one_m(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

fn axes(center: &DVector<f64>, shape: &SpdMatrix, scale: f64) -> Vec<AxisProfile> {
    (0..center.len())
        .map(|i| AxisProfile {
            lo: center[i],
            hi: center[i],
            scale: scale * shape.matrix()[(i, i)].sqrt(),
        })
        .collect()
}

/// `N(μ, (v + θ) R)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Gaussian {
    pub mean: DVector<f64>,
    pub shape: SpdMatrix,
    pub offset: f64,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, shape: SpdMatrix, offset: f64) -> Self {
        Self {
            mean,
            shape,
            offset,
        }
    }

    pub fn label(&self) -> String {
        if self.offset > 0.0 {
            format!("gaussian(d={},v={})", self.mean.len(), self.offset)
        } else {
            format!("gaussian(d={})", self.mean.len())
        }
    }

    fn parts(&self, x: &[f64], theta: f64) -> (f64, DVector<f64>, f64) {
        let tau = self.offset + theta;
        let z = DVector::from_column_slice(x) - &self.mean;
        let q = self.shape.quad_form(&z);
        (tau, z, q)
    }

    fn log_norm(&self, tau: f64) -> f64 {
        let d = self.mean.len() as f64;
        -0.5 * d * (2.0 * PI * tau).ln() - 0.5 * self.shape.log_det()
    }

    pub fn log_pdf(&self, x: &[f64], theta: f64) -> f64 {
        let (tau, _, q) = self.parts(x, theta);
        self.log_norm(tau) - q / (2.0 * tau)
    }

    pub fn jet(&self, x: &[f64], theta: f64) -> Jet {
        let (tau, z, q) = self.parts(x, theta);
        let d = self.mean.len() as f64;
        let g = self.shape.inverse() * &z;
        Jet {
            log_p: self.log_norm(tau) - q / (2.0 * tau),
            score_x: -g / tau,
            hess_log_x: -self.shape.inverse() / tau,
            score_theta: one(-d / (2.0 * tau) + q / (2.0 * tau * tau)),
            hess_log_theta: one_m(d / (2.0 * tau * tau) - q / (tau * tau * tau)),
        }
    }

    pub fn profile(&self, theta: f64) -> TailProfile {
        TailProfile {
            kind: TailKind::Light,
            axes: axes(&self.mean, &self.shape, (self.offset + theta).sqrt()),
        }
    }
}

/// Multivariate Cauchy with scale `v + θ`:
/// `c_d |R|^{-1/2} τ (τ² + zᵗR⁻¹z)^{-(d+1)/2}`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Cauchy {
    pub location: DVector<f64>,
    pub shape: SpdMatrix,
    pub offset: f64,
}

impl Cauchy {
    pub fn new(location: DVector<f64>, shape: SpdMatrix, offset: f64) -> Self {
        Self {
            location,
            shape,
            offset,
        }
    }

    pub fn label(&self) -> String {
        if self.offset > 0.0 {
            format!("cauchy(d={},v={})", self.location.len(), self.offset)
        } else {
            format!("cauchy(d={})", self.location.len())
        }
    }

    /// ln Γ((d+1)/2) − (d+1)/2 · ln π
    fn log_c(d: usize) -> f64 {
        let lgamma = match d {
            1 => 0.0,
            2 => (PI.sqrt() / 2.0).ln(),
            3 => 0.0,
            _ => unreachable!("dimension checked at construction"),
        };
        lgamma - 0.5 * (d as f64 + 1.0) * PI.ln()
    }

    fn parts(&self, x: &[f64], theta: f64) -> (f64, DVector<f64>, f64) {
        let tau = self.offset + theta;
        let z = DVector::from_column_slice(x) - &self.location;
        let q = self.shape.quad_form(&z);
        (tau, z, q)
    }

    fn log_at(&self, tau: f64, q: f64) -> f64 {
        let d = self.location.len();
        let m = d as f64 + 1.0;
        // ln(τ² + q) computed as 2 ln τ + ln1p(q/τ²) to keep precision near the peak
        let ln_s = 2.0 * tau.ln() + (q / (tau * tau)).ln_1p();
        Self::log_c(d) - 0.5 * self.shape.log_det() + tau.ln() - 0.5 * m * ln_s
    }

    pub fn log_pdf(&self, x: &[f64], theta: f64) -> f64 {
        let (tau, _, q) = self.parts(x, theta);
        self.log_at(tau, q)
    }

    pub fn jet(&self, x: &[f64], theta: f64) -> Jet {
        let (tau, z, q) = self.parts(x, theta);
        let m = self.location.len() as f64 + 1.0;
        let s = tau * tau + q;
        let g = self.shape.inverse() * &z;
        let hess = -self.shape.inverse() * (m / s) + (&g * g.transpose()) * (2.0 * m / (s * s));
        Jet {
            log_p: self.log_at(tau, q),
            score_x: &g * (-m / s),
            hess_log_x: hess,
            score_theta: one(1.0 / tau - m * tau / s),
            hess_log_theta: one_m(-1.0 / (tau * tau) - m / s + 2.0 * m * tau * tau / (s * s)),
        }
    }

    pub fn profile(&self, theta: f64) -> TailProfile {
        TailProfile {
            kind: TailKind::Heavy,
            axes: axes(&self.location, &self.shape, self.offset + theta),
        }
    }
}

/// Lévy on `(a, ∞)`: `τ exp(−τ²/(2z)) / (√(2π) z^{3/2})`, `z = x − a`, `τ = v + θ`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Levy {
    pub shift: f64,
    pub offset: f64,
}

impl Levy {
    pub fn new(shift: f64, offset: f64) -> Self {
        Self { shift, offset }
    }

    pub fn label(&self) -> String {
        match (self.shift != 0.0, self.offset > 0.0) {
            (false, false) => "levy".into(),
            (true, false) => format!("levy(a={})", self.shift),
            (false, true) => format!("levy(v={})", self.offset),
            (true, true) => format!("levy(a={},v={})", self.shift, self.offset),
        }
    }

    pub fn log_pdf(&self, x: f64, theta: f64) -> f64 {
        let z = x - self.shift;
        if !(z > 0.0) {
            return f64::NEG_INFINITY;
        }
        let tau = self.offset + theta;
        tau.ln() - tau * tau / (2.0 * z) - 0.5 * (2.0 * PI).ln() - 1.5 * z.ln()
    }

    pub fn jet(&self, x: f64, theta: f64) -> Jet {
        let z = x - self.shift;
        if !(z > 0.0) {
            return Jet::outside(1, 1);
        }
        let tau = self.offset + theta;
        let t2 = tau * tau;
        Jet {
            log_p: self.log_pdf(x, theta),
            score_x: one(t2 / (2.0 * z * z) - 1.5 / z),
            hess_log_x: one_m(-t2 / (z * z * z) + 1.5 / (z * z)),
            score_theta: one(1.0 / tau - tau / z),
            hess_log_theta: one_m(-1.0 / t2 - 1.0 / z),
        }
    }

    pub fn profile(&self, theta: f64) -> TailProfile {
        TailProfile {
            kind: TailKind::HalfLine { lower: self.shift },
            axes: vec![AxisProfile {
                lo: self.shift,
                hi: self.shift,
                scale: self.offset + theta,
            }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::Density;
    use nalgebra::DMatrix;

    /// Central differences of the log-density against the analytic jet.
    fn check_jet(p: &Density, x: &[f64], theta: f64) {
        let j = p.jet(x, &[theta]).unwrap();
        let h = 1e-5;
        let lp = |x: &[f64], t: f64| p.log_pdf(x, &[t]).unwrap();
        let st = (lp(x, theta + h) - lp(x, theta - h)) / (2.0 * h);
        assert!(
            (st - j.score_theta[0]).abs() < 1e-6 * (1.0 + st.abs()),
            "{st} vs {}",
            j.score_theta[0]
        );
        let ht = (lp(x, theta + h) - 2.0 * lp(x, theta) + lp(x, theta - h)) / (h * h);
        assert!((ht - j.hess_log_theta[(0, 0)]).abs() < 1e-3 * (1.0 + ht.abs()));
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let sx = (lp(&xp, theta) - lp(&xm, theta)) / (2.0 * h);
            assert!((sx - j.score_x[i]).abs() < 1e-6 * (1.0 + sx.abs()));
            let jp = p.jet(&xp, &[theta]).unwrap();
            let jm = p.jet(&xm, &[theta]).unwrap();
            for k in 0..x.len() {
                let hx = (jp.score_x[k] - jm.score_x[k]) / (2.0 * h);
                assert!((hx - j.hess_log_x[(k, i)]).abs() < 1e-5 * (1.0 + hx.abs()));
            }
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let r = DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 0.8]);
        check_jet(&Density::gaussian_1d(), &[0.7], 1.3);
        check_jet(
            &Density::gaussian(&[0.2, -0.1], r.clone()).unwrap(),
            &[0.4, 0.9],
            0.7,
        );
        check_jet(&Density::cauchy_1d(), &[-1.2], 0.6);
        check_jet(&Density::cauchy(&[0.0, 0.5], r).unwrap(), &[1.1, -0.3], 1.4);
        check_jet(&Density::levy(0.5).unwrap(), &[1.7], 0.9);
        check_jet(
            &Density::gaussian_1d().with_offset(0.5).unwrap(),
            &[0.3],
            1.0,
        );
    }

    #[test]
    fn cauchy_normalization_constant() {
        use std::f64::consts::PI;
        let r = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let p = Density::cauchy(&[0.0, 0.0], r).unwrap();
        // Γ(3/2)/π^{3/2} |R|^{-1/2} / τ² at the origin
        let expected = (PI.sqrt() / 2.0) / PI.powf(1.5) / 2.0;
        assert!((p.pdf(&[0.0, 0.0], &[1.0]).unwrap() - expected).abs() < 1e-15);
        let p3 = Density::cauchy(&[0.0; 3], DMatrix::identity(3, 3)).unwrap();
        assert!((p3.pdf(&[0.0; 3], &[1.0]).unwrap() - 1.0 / PI.powi(2)).abs() < 1e-15);
    }
}
