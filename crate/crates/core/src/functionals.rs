//! Entropic functionals φ and their first two derivatives.
//!
//! A functional is a convex C² map on `[0, ∞)`. The φ-entropy of a density
//! needs `φ(0) = 0`; a φ-divergence is normalized when `φ(1) = 0`. Both
//! facts are carried as flags so that callers can check preconditions
//! without evaluating anything.
//!
//! All logarithms are natural.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names accepted by [`EntropicFunctional::builtin`].
pub const BUILTIN_NAMES: [&str; 6] = [
    "shannon",
    "hcdt",
    "kaniadakis",
    "power",
    "jensen_shannon",
    "vajda",
];

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Shannon,
    Hcdt { alpha: f64 },
    Kaniadakis { kappa: f64 },
    Power { alpha: f64 },
    JensenShannon,
    Vajda { alpha: f64 },
    Custom { phi: [ScalarFn; 3] },
}

/// Derivative order accepted by [`EntropicFunctional::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    First,
    Second,
}

impl Order {
    pub fn from_index(order: u8) -> Result<Self> {
        match order {
            0 => Ok(Order::Value),
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(Error::range("order", order as f64, "must be 0, 1 or 2")),
        }
    }
}

/// A convex C² entropic functional with its normalization flags.
#[derive(Clone)]
pub struct EntropicFunctional {
    name: String,
    params: BTreeMap<String, f64>,
    kind: Kind,
    phi0_zero: bool,
    phi1_zero: bool,
    /// Coefficient `c` of the affine correction `φ(u) - c·u`.
    shift: f64,
    /// Open interval on which φ is C².
    smooth_domain: (f64, f64),
}

impl fmt::Debug for EntropicFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntropicFunctional")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("phi0_zero", &self.phi0_zero)
            .field("phi1_zero", &self.phi1_zero)
            .field("shift", &self.shift)
            .finish()
    }
}

fn param(params: &BTreeMap<String, f64>, keys: &[&str]) -> Option<f64> {
    keys.iter().find_map(|k| params.get(*k).copied())
}

fn required(params: &BTreeMap<String, f64>, name: &str, keys: &[&str]) -> Result<f64> {
    param(params, keys).ok_or_else(|| Error::ParameterRange {
        name: keys[0].to_string(),
        value: f64::NAN,
        reason: format!("`{name}` requires parameter `{}`", keys[0]),
    })
}

impl EntropicFunctional {
    /// Builds one of the named functionals.
    ///
    /// | name | φ(l) | admissible parameters |
    /// |------|------|-----------------------|
    /// | shannon | l log l | none |
    /// | hcdt | (l^α − l)/(α − 1) | α > 0, α ≠ 1 |
    /// | kaniadakis | (l^{1+κ} − l^{1−κ})/(2κ) | κ ∈ (−1, 1), κ ≠ 0 |
    /// | power | l^α | α > 1 |
    /// | jensen_shannon | (l/2) log l − ((l+1)/2) log((l+1)/2) | none |
    /// | vajda | \|l − 1\|^α | α ≥ 2 |
    pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let positive = (0.0, f64::INFINITY);
        let (kind, phi0_zero, phi1_zero, stored) = match name {
            "shannon" => (Kind::Shannon, true, true, BTreeMap::new()),
            "hcdt" => {
                let alpha = required(params, name, &["alpha"])?;
                if !(alpha > 0.0) {
                    // Non-positive orders only make sense on bounded supports.
                    return Err(Error::range("alpha", alpha, "hcdt requires alpha > 0"));
                }
                if alpha == 1.0 {
                    return Err(Error::range(
                        "alpha",
                        alpha,
                        "hcdt is undefined at alpha = 1 (use shannon)",
                    ));
                }
                (Kind::Hcdt { alpha }, true, true, single("alpha", alpha))
            }
            "kaniadakis" => {
                let kappa = required(params, name, &["kappa", "alpha"])?;
                if !(kappa > -1.0 && kappa < 1.0) || kappa == 0.0 {
                    return Err(Error::range(
                        "kappa",
                        kappa,
                        "kaniadakis requires kappa in (-1, 1), kappa != 0",
                    ));
                }
                (
                    Kind::Kaniadakis { kappa },
                    true,
                    true,
                    single("kappa", kappa),
                )
            }
            "power" => {
                let alpha = required(params, name, &["alpha"])?;
                if !(alpha > 1.0) {
                    return Err(Error::range("alpha", alpha, "power requires alpha > 1"));
                }
                (Kind::Power { alpha }, true, false, single("alpha", alpha))
            }
            "jensen_shannon" => (Kind::JensenShannon, false, true, BTreeMap::new()),
            "vajda" => {
                let alpha = required(params, name, &["alpha"])?;
                if !(alpha >= 2.0) || !alpha.is_finite() {
                    return Err(Error::range(
                        "alpha",
                        alpha,
                        "vajda requires alpha >= 2 (second derivative singular at 1 otherwise)",
                    ));
                }
                (Kind::Vajda { alpha }, false, true, single("alpha", alpha))
            }
            other => return Err(Error::UnknownFunctional(other.to_string())),
        };
        let smooth_domain = match kind {
            Kind::Vajda { .. } => (0.0, f64::INFINITY),
            _ => positive,
        };
        Ok(Self {
            name: name.to_string(),
            params: stored,
            kind,
            phi0_zero,
            phi1_zero,
            shift: 0.0,
            smooth_domain,
        })
    }

    /// Convenience constructor for a builtin without parameters.
    pub fn shannon() -> Self {
        Self::builtin("shannon", &BTreeMap::new()).expect("shannon is always valid")
    }

    /// Shorthand for a builtin taking one parameter named `alpha` or `kappa`.
    pub fn with_param(name: &str, value: f64) -> Result<Self> {
        let key = if name == "kaniadakis" {
            "kappa"
        } else {
            "alpha"
        };
        Self::builtin(name, &single(key, value))
    }

    /// Registers a user-supplied functional from its value and first two
    /// derivatives. The functional is rejected unless φ'' ≥ 0 on `grid`
    /// and the claimed normalization flags hold.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        name: &str,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dphi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi0_zero: bool,
        phi1_zero: bool,
        grid: &[f64],
    ) -> Result<Self> {
        let f = Self {
            name: name.to_string(),
            params: BTreeMap::new(),
            kind: Kind::Custom {
                phi: [Arc::new(phi), Arc::new(dphi), Arc::new(d2phi)],
            },
            phi0_zero,
            phi1_zero,
            shift: 0.0,
            smooth_domain: (0.0, f64::INFINITY),
        };
        if let Some(&(at, _)) = f.convexity_scan(grid).violations.first() {
            return Err(Error::NotConvex {
                name: name.to_string(),
                at,
            });
        }
        for (flag, at) in [(phi0_zero, 0.0), (phi1_zero, 1.0)] {
            if flag {
                let v = f.raw(Order::Value, at);
                if !(v.abs() <= 1e-14) {
                    return Err(Error::range(
                        "phi",
                        v,
                        format!("flag claims phi({at}) = 0 but it evaluates to {v}"),
                    ));
                }
            }
        }
        Ok(f)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn phi0_zero(&self) -> bool {
        self.phi0_zero
    }

    pub fn phi1_zero(&self) -> bool {
        self.phi1_zero
    }

    pub fn smooth_domain(&self) -> (f64, f64) {
        self.smooth_domain
    }

    /// Short human-readable descriptor such as `hcdt(alpha=2)`.
    pub fn label(&self) -> String {
        let mut s = self.name.clone();
        if !self.params.is_empty() {
            let inner: Vec<String> = self
                .params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            s = format!("{s}({})", inner.join(","));
        }
        if self.shift != 0.0 {
            s.push_str("~normalized");
        }
        s
    }

    /// Evaluates φ, φ' or φ'' at `u ≥ 0`.
    pub fn evaluate(&self, order: Order, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::range("u", u, "functional argument must be >= 0"));
        }
        if u == 0.0 && order == Order::Value && self.phi0_zero && self.shift == 0.0 {
            return Ok(0.0);
        }
        let v = self.raw(order, u);
        if v.is_nan() || v.is_infinite() {
            return Err(Error::Singular {
                name: self.name.clone(),
                what: match order {
                    Order::Value => "phi",
                    Order::First => "phi'",
                    Order::Second => "phi''",
                },
                at: u,
            });
        }
        Ok(v)
    }

    /// φ(u) without the error path; `u = 0` honours the `phi0_zero` flag.
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        if u == 0.0 && self.phi0_zero && self.shift == 0.0 {
            return 0.0;
        }
        self.raw(Order::Value, u)
    }

    /// u²·φ''(u), evaluated in a form that stays finite for tiny `u`.
    ///
    /// This is the weight appearing in every φ-Fisher integrand.
    #[inline]
    pub fn curvature_weight(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let lu = u.ln();
        match &self.kind {
            Kind::Shannon => u,
            Kind::Hcdt { alpha } => alpha * (alpha * lu).exp(),
            Kind::Kaniadakis { kappa } => {
                let k = *kappa;
                0.5 * ((1.0 + k) * ((1.0 + k) * lu).exp() + (1.0 - k) * ((1.0 - k) * lu).exp())
            }
            Kind::Power { alpha } => alpha * (alpha - 1.0) * (alpha * lu).exp(),
            Kind::JensenShannon => u / (2.0 * (u + 1.0)),
            _ => u * u * self.raw(Order::Second, u),
        }
    }

    fn raw(&self, order: Order, u: f64) -> f64 {
        let base = match &self.kind {
            Kind::Shannon => match order {
                Order::Value => u * u.ln(),
                Order::First => u.ln() + 1.0,
                Order::Second => 1.0 / u,
            },
            Kind::Hcdt { alpha } => {
                let a = *alpha;
                match order {
                    Order::Value => (pow(u, a) - u) / (a - 1.0),
                    Order::First => (a * pow(u, a - 1.0) - 1.0) / (a - 1.0),
                    Order::Second => a * pow(u, a - 2.0),
                }
            }
            Kind::Kaniadakis { kappa } => {
                let k = *kappa;
                match order {
                    Order::Value => (pow(u, 1.0 + k) - pow(u, 1.0 - k)) / (2.0 * k),
                    Order::First => ((1.0 + k) * pow(u, k) - (1.0 - k) * pow(u, -k)) / (2.0 * k),
                    Order::Second => {
                        0.5 * ((1.0 + k) * pow(u, k - 1.0) + (1.0 - k) * pow(u, -k - 1.0))
                    }
                }
            }
            Kind::Power { alpha } => {
                let a = *alpha;
                match order {
                    Order::Value => pow(u, a),
                    Order::First => a * pow(u, a - 1.0),
                    Order::Second => a * (a - 1.0) * pow(u, a - 2.0),
                }
            }
            Kind::JensenShannon => match order {
                Order::Value => {
                    let h = 0.5 * (u + 1.0);
                    let left = if u == 0.0 { 0.0 } else { 0.5 * u * u.ln() };
                    left - h * h.ln()
                }
                Order::First => 0.5 * (2.0 * u / (u + 1.0)).ln(),
                Order::Second => 1.0 / (2.0 * u * (u + 1.0)),
            },
            Kind::Vajda { alpha } => {
                let a = *alpha;
                let d = u - 1.0;
                match order {
                    Order::Value => d.abs().powf(a),
                    Order::First => a * d.signum() * d.abs().powf(a - 1.0),
                    Order::Second => a * (a - 1.0) * d.abs().powf(a - 2.0),
                }
            }
            Kind::Custom { phi } => match order {
                Order::Value => phi[0](u),
                Order::First => phi[1](u),
                Order::Second => phi[2](u),
            },
        };
        match order {
            Order::Value => base - self.shift * u,
            Order::First => base - self.shift,
            Order::Second => base,
        }
    }

    /// Returns φ̃(u) = φ(u) − φ(1)·u, which is convex with φ̃(1) = 0 and
    /// shifts every divergence by the constant −φ(1).
    pub fn normalize_divergence(&self) -> Self {
        let at_one = self.raw(Order::Value, 1.0);
        if at_one == 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.shift += at_one;
        out.phi1_zero = true;
        // φ(0) is unchanged by the linear term, but the exact-zero shortcut
        // must now go through the shifted evaluation.
        out
    }

    /// Checks φ'' ≥ −ε at every grid point.
    pub fn convexity_scan(&self, grid: &[f64]) -> ConvexityReport {
        let violations: Vec<(f64, f64)> = grid
            .iter()
            .map(|&u| (u, self.raw(Order::Second, u)))
            .filter(|&(_, v)| v.is_nan() || v < -4.0 * f64::EPSILON)
            .collect();
        ConvexityReport {
            pass: violations.is_empty(),
            points: grid.len(),
            violations,
        }
    }

    /// Numeric surrogate for `u^k φ'(u) → 0` as `u → 0`: along a strictly
    /// decreasing sequence, the magnitudes over the second half must be
    /// strictly decreasing.
    pub fn tail_decay_check(&self, k: f64, u_sequence: &[f64]) -> TailDecayReport {
        let values: Vec<f64> = u_sequence
            .iter()
            .map(|&u| (pow(u, k) * self.raw(Order::First, u)).abs())
            .collect();
        let n = values.len();
        let tail_start = n / 2;
        let ordered = u_sequence.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0);
        let monotone = n >= 2
            && values[tail_start.min(n - 1)..]
                .windows(2)
                .all(|w| w[1] < w[0] && w[1].is_finite());
        // log-log slope on the tail; positive means decay to zero
        let slope = if n - tail_start >= 2 {
            let (u0, v0) = (u_sequence[tail_start], values[tail_start]);
            let (u1, v1) = (u_sequence[n - 1], values[n - 1]);
            (v1.ln() - v0.ln()) / (u1.ln() - u0.ln())
        } else {
            f64::NAN
        };
        TailDecayReport {
            k,
            pass: ordered && monotone,
            values,
            tail_start,
            loglog_slope: slope,
        }
    }
}

#[inline]
fn pow(u: f64, a: f64) -> f64 {
    if u == 0.0 {
        return if a > 0.0 {
            0.0
        } else if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
    }
    (a * u.ln()).exp()
}

fn single(key: &str, value: f64) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    m.insert(key.to_string(), value);
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub pass: bool,
    pub points: usize,
    /// `(u, φ''(u))` at every failing point.
    pub violations: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailDecayReport {
    pub k: f64,
    pub pass: bool,
    pub values: Vec<f64>,
    pub tail_start: usize,
    pub loglog_slope: f64,
}

/// Log-spaced grid `10^lo ..= 10^hi` with `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi - lo) * per_decade as f64).round() as usize;
    (0..=n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / n as f64))
        .collect()
}

/// Config form: `{"functional": "hcdt", "alpha": 2.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalConfig {
    pub functional: String,
    #[serde(default)]
    pub normalize: bool,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl FunctionalConfig {
    pub fn build(&self) -> Result<EntropicFunctional> {
        let f =
            EntropicFunctional::builtin(&self.functional, &self.params).map_err(|e| match e {
                Error::UnknownFunctional(n) => {
                    Error::config("functional", format!("unknown functional `{n}`"))
                }
                Error::ParameterRange { name, reason, .. } => {
                    Error::config("functional", format!("{name}: {reason}"))
                }
                other => other,
            })?;
        Ok(if self.normalize {
            f.normalize_divergence()
        } else {
            f
        })
    }
}

impl From<&EntropicFunctional> for FunctionalConfig {
    fn from(f: &EntropicFunctional) -> Self {
        Self {
            functional: f.name.clone(),
            normalize: f.shift != 0.0,
            params: f.params.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hcdt(a: f64) -> EntropicFunctional {
        EntropicFunctional::with_param("hcdt", a).unwrap()
    }

    #[test]
    fn builtin_values() {
        let s = EntropicFunctional::shannon();
        assert_eq!(s.evaluate(Order::Value, 1.0).unwrap(), 0.0);
        assert_eq!(hcdt(2.0).evaluate(Order::Value, 2.0).unwrap(), 2.0);
        let k = EntropicFunctional::with_param("kaniadakis", 0.5).unwrap();
        assert_eq!(k.evaluate(Order::Value, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn builtin_second_derivatives() {
        let s = EntropicFunctional::shannon();
        assert_eq!(s.evaluate(Order::Second, 2.0).unwrap(), 0.5);
        assert!((hcdt(2.0).evaluate(Order::Second, 7.0).unwrap() - 2.0).abs() < 1e-14);
        let js = EntropicFunctional::builtin("jensen_shannon", &BTreeMap::new()).unwrap();
        assert!((js.evaluate(Order::Second, 1.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            EntropicFunctional::builtin("nope", &BTreeMap::new()),
            Err(Error::UnknownFunctional(_))
        ));
        for (name, v) in [
            ("hcdt", 1.0),
            ("hcdt", 0.0),
            ("hcdt", -0.5),
            ("kaniadakis", 0.0),
            ("kaniadakis", 1.0),
            ("power", 1.0),
            ("vajda", 1.5),
        ] {
            assert!(
                matches!(
                    EntropicFunctional::with_param(name, v),
                    Err(Error::ParameterRange { .. })
                ),
                "{name} {v}"
            );
        }
        assert!(EntropicFunctional::builtin("hcdt", &BTreeMap::new()).is_err());
    }

    #[test]
    fn flags_match_values() {
        let mut all = vec![
            EntropicFunctional::shannon(),
            hcdt(0.5),
            EntropicFunctional::with_param("kaniadakis", -0.3).unwrap(),
            EntropicFunctional::with_param("power", 2.5).unwrap(),
            EntropicFunctional::builtin("jensen_shannon", &BTreeMap::new()).unwrap(),
            EntropicFunctional::with_param("vajda", 3.0).unwrap(),
        ];
        all.push(all[3].normalize_divergence());
        for f in &all {
            if f.phi0_zero() {
                assert_eq!(f.evaluate(Order::Value, 0.0).unwrap(), 0.0, "{f:?}");
            } else {
                assert!(f.evaluate(Order::Value, 0.0).unwrap() != 0.0, "{f:?}");
            }
            if f.phi1_zero() {
                assert!(
                    f.evaluate(Order::Value, 1.0).unwrap().abs() < 1e-15,
                    "{f:?}"
                );
            }
        }
        assert!(!all[3].phi1_zero());
    }

    #[test]
    fn singular_points_are_errors() {
        let s = EntropicFunctional::shannon();
        assert!(matches!(
            s.evaluate(Order::First, 0.0),
            Err(Error::Singular { .. })
        ));
        assert!(s.evaluate(Order::Value, -1.0).is_err());
    }

    #[test]
    fn normalization() {
        let p = EntropicFunctional::with_param("power", 2.0).unwrap();
        let n = p.normalize_divergence();
        assert!(n.phi1_zero());
        for &u in &[0.0, 0.3, 1.0, 2.0, 5.0] {
            assert!((n.value(u) - (u * u - u)).abs() < 1e-14);
        }
        let s = EntropicFunctional::shannon();
        let ns = s.normalize_divergence();
        for u in log_grid(-3.0, 3.0, 4) {
            assert_eq!(ns.value(u), s.value(u));
        }
    }

    #[test]
    fn convexity_scans() {
        let grid = log_grid(-6.0, 3.0, 5);
        assert!(EntropicFunctional::shannon().convexity_scan(&grid).pass);
        assert!(hcdt(0.5).convexity_scan(&grid).pass);
        let concave = EntropicFunctional::custom(
            "neg_square",
            |u| -u * u,
            |u| -2.0 * u,
            |_| -2.0,
            true,
            false,
            &grid,
        );
        assert!(matches!(concave, Err(Error::NotConvex { .. })));
        let ok = EntropicFunctional::custom(
            "square_minus",
            |u| u * u - u,
            |u| 2.0 * u - 1.0,
            |_| 2.0,
            true,
            true,
            &grid,
        )
        .unwrap();
        assert_eq!(ok.curvature_weight(3.0), 18.0);
        // raw report for the concave case
        let f = EntropicFunctional {
            kind: Kind::Custom {
                phi: [
                    Arc::new(|u| -u * u),
                    Arc::new(|u| -2.0 * u),
                    Arc::new(|_| -2.0),
                ],
            },
            ..EntropicFunctional::shannon()
        };
        let report = f.convexity_scan(&grid);
        assert!(!report.pass);
        assert_eq!(report.violations.len(), grid.len());
    }

    #[test]
    fn tail_decay() {
        let u: Vec<f64> = (1..=12).map(|e| 10f64.powi(-e)).collect();
        assert!(EntropicFunctional::shannon().tail_decay_check(0.5, &u).pass);
        assert!(hcdt(0.5).tail_decay_check(0.6, &u).pass);
        let bad = hcdt(0.5).tail_decay_check(0.3, &u);
        assert!(!bad.pass);
        assert!(bad.loglog_slope < 0.0);
        let kan = EntropicFunctional::with_param("kaniadakis", 0.3).unwrap();
        assert!(kan.tail_decay_check(0.4, &u).pass);
    }

    #[test]
    fn config_roundtrip() {
        let cfg: FunctionalConfig =
            serde_json::from_str(r#"{"functional":"hcdt","alpha":2.0}"#).unwrap();
        let f = cfg.build().unwrap();
        assert_eq!(f.label(), "hcdt(alpha=2)");
        let back = FunctionalConfig::from(&f);
        assert_eq!(back, cfg);
        let bad: FunctionalConfig = serde_json::from_str(r#"{"functional":"renyi"}"#).unwrap();
        assert!(matches!(bad.build(), Err(Error::Config { field, .. }) if field == "functional"));
    }
}
