//! Integration regions: one mapped axis per state coordinate.

use std::f64::consts::FRAC_PI_2;

use super::quadrature::{QuadratureSpec, Substitution};
use crate::densities::{AxisProfile, Density, TailKind, TailProfile};
use crate::error::{Error, Result};

/// Map from a finite parameter interval onto one state axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisMap {
    /// `x = t` on `[lo, hi]`.
    Linear { lo: f64, hi: f64 },
    /// `x = center + scale·tan t` on `(−π/2, π/2)`.
    Tangent { center: f64, scale: f64 },
    /// `x = lower + 1/t²` on `(0, t_max]`.
    InverseSquare { lower: f64, t_max: f64 },
}

impl AxisMap {
    pub fn t_range(&self) -> (f64, f64) {
        match *self {
            AxisMap::Linear { lo, hi } => (lo, hi),
            AxisMap::Tangent { .. } => (-FRAC_PI_2, FRAC_PI_2),
            AxisMap::InverseSquare { t_max, .. } => (0.0, t_max),
        }
    }

    /// `(x(t), |dx/dt|)`; the Jacobian is 0 at a degenerate endpoint.
    pub fn apply(&self, t: f64) -> (f64, f64) {
        match *self {
            AxisMap::Linear { .. } => (t, 1.0),
            AxisMap::Tangent { center, scale } => {
                let c = t.cos();
                if c <= 0.0 {
                    return (center, 0.0);
                }
                (center + scale * t.tan(), scale / (c * c))
            }
            AxisMap::InverseSquare { lower, .. } => {
                if t <= 0.0 {
                    return (lower, 0.0);
                }
                (lower + 1.0 / (t * t), 2.0 / (t * t * t))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    axes: Vec<AxisMap>,
}

/// Half-width, in spreads, of a box holding all but `mass` of a Gaussian.
pub fn box_half_width(mass: f64) -> f64 {
    8.0 + (2.0 * (1.0 / mass).ln()).sqrt()
}

impl Region {
    pub fn new(axes: Vec<AxisMap>) -> Self {
        Self { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[AxisMap] {
        &self.axes
    }

    /// Region suited to one density at `θ`.
    pub fn for_density(p: &Density, theta: &[f64], spec: &QuadratureSpec) -> Result<Self> {
        Self::for_densities(&[(p, theta)], spec)
    }

    /// Region covering several densities (e.g. both members of a divergence).
    pub fn for_densities(items: &[(&Density, &[f64])], spec: &QuadratureSpec) -> Result<Self> {
        let profiles: Vec<TailProfile> = items.iter().map(|(p, t)| p.tail_profile(t)).collect();
        Self::from_profiles(&profiles, spec)
    }

    pub fn from_profiles(profiles: &[TailProfile], spec: &QuadratureSpec) -> Result<Self> {
        let first = profiles
            .first()
            .ok_or_else(|| Error::InvalidDensity("no density for region".into()))?;
        let d = first.axes.len();
        if profiles.iter().any(|p| p.axes.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: profiles
                    .iter()
                    .map(|p| p.axes.len())
                    .find(|&n| n != d)
                    .unwrap_or(d),
            });
        }
        let axes: Vec<AxisProfile> = (0..d)
            .map(|i| {
                profiles
                    .iter()
                    .skip(1)
                    .fold(first.axes[i], |acc, p| AxisProfile {
                        lo: acc.lo.min(p.axes[i].lo),
                        hi: acc.hi.max(p.axes[i].hi),
                        scale: acc.scale.max(p.axes[i].scale),
                    })
            })
            .collect();
        // the heaviest tail wins; a half-line survives only if every member is one
        let half_lines: Vec<f64> = profiles
            .iter()
            .filter_map(|p| match p.kind {
                TailKind::HalfLine { lower } => Some(lower),
                _ => None,
            })
            .collect();
        let kind = if half_lines.len() == profiles.len() {
            TailKind::HalfLine {
                lower: half_lines.iter().cloned().fold(f64::INFINITY, f64::min),
            }
        } else if profiles.iter().any(|p| p.kind != TailKind::Light) {
            TailKind::Heavy
        } else {
            TailKind::Light
        };
        let b = box_half_width(spec.truncation_mass);
        let linear = |ax: &AxisProfile| AxisMap::Linear {
            lo: ax.lo - b * ax.scale,
            hi: ax.hi + b * ax.scale,
        };
        let tangent = |ax: &AxisProfile| AxisMap::Tangent {
            center: 0.5 * (ax.lo + ax.hi),
            scale: ax.scale.max(0.5 * (ax.hi - ax.lo)),
        };
        let maps = match (spec.substitution, kind) {
            (Substitution::Auto, TailKind::Light) | (Substitution::None, _) => {
                if !matches!(kind, TailKind::Light) && spec.substitution == Substitution::None {
                    // power tails: widen the box to the truncation budget
                    let w = 2.0 / (std::f64::consts::PI * spec.truncation_mass);
                    axes.iter()
                        .map(|ax| AxisMap::Linear {
                            lo: match kind {
                                TailKind::HalfLine { lower } => lower,
                                _ => ax.lo - w * ax.scale,
                            },
                            hi: ax.hi + w * ax.scale,
                        })
                        .collect()
                } else {
                    axes.iter().map(linear).collect()
                }
            }
            (Substitution::Auto, TailKind::Heavy) | (Substitution::Tangent, _) => {
                axes.iter().map(tangent).collect()
            }
            (Substitution::Auto, TailKind::HalfLine { lower })
            | (Substitution::SqrtInverse, TailKind::HalfLine { lower }) => {
                let ax = axes[0];
                // mass beyond the last atom sits at x − lower ≳ scale², i.e. t ≲ 1/scale
                vec![AxisMap::InverseSquare {
                    lower,
                    t_max: b / ax.scale.max(f64::MIN_POSITIVE),
                }]
            }
            (Substitution::SqrtInverse, _) => {
                return Err(Error::config(
                    "quadrature.substitution",
                    "sqrt_inverse needs a half-line support",
                ))
            }
        };
        Ok(Self { axes: maps })
    }
}

#[cfg(test)]
mod tests {
    use super::super::quadrature::integrate;
    use super::*;

    #[test]
    fn masses_of_the_families() {
        let spec = QuadratureSpec::default();
        let cases = [
            (Density::gaussian_1d(), 0.7),
            (Density::cauchy_1d(), 1.3),
            (Density::levy(0.5).unwrap(), 0.8),
        ];
        for (p, t) in &cases {
            let r = Region::for_density(p, &[*t], &spec).unwrap();
            let (m, _) = integrate(|x| p.pdf(x, &[*t]).unwrap(), &r, &spec).unwrap();
            assert!((m - 1.0).abs() < 1e-10, "{} {m}", p.label());
        }
        let (v, _) = integrate(
            |x| x[0] * x[0] * Density::gaussian_1d().pdf(x, &[1.0]).unwrap(),
            &Region::for_density(&Density::gaussian_1d(), &[1.0], &spec).unwrap(),
            &spec,
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tangent_and_box_agree_on_gaussian_tails() {
        let p = Density::gaussian_1d();
        let f = |x: &[f64]| {
            let v = p.pdf(x, &[1.0]).unwrap();
            v * (1.0 + x[0].powi(2))
        };
        let boxed = QuadratureSpec::default();
        let tan = QuadratureSpec {
            substitution: Substitution::Tangent,
            ..Default::default()
        };
        let a = integrate(f, &Region::for_density(&p, &[1.0], &boxed).unwrap(), &boxed)
            .unwrap()
            .0;
        let b = integrate(f, &Region::for_density(&p, &[1.0], &tan).unwrap(), &tan)
            .unwrap()
            .0;
        assert!((a - b).abs() < 1e-8);
    }
}
