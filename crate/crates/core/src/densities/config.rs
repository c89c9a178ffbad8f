use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{channel_output, gain_channel, ChannelInput, Density};
use crate::error::{Error, Result};
use crate::linalg::matrix_from_rows;

/// A matrix given either as a scalar multiple of the identity or as rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixConfig {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl MatrixConfig {
    fn dim(&self) -> Option<usize> {
        match self {
            MatrixConfig::Scalar(_) => None,
            MatrixConfig::Rows(r) => Some(r.len()),
        }
    }

    fn build(&self, rows: usize, cols: usize, field: &str) -> Result<DMatrix<f64>> {
        let m = match self {
            MatrixConfig::Scalar(s) => DMatrix::identity(rows, cols) * *s,
            MatrixConfig::Rows(r) => {
                matrix_from_rows(r).map_err(|e| Error::config(field, e.to_string()))?
            }
        };
        if m.nrows() != rows || m.ncols() != cols {
            return Err(Error::config(
                field,
                format!(
                    "expected a {rows}x{cols} matrix, got {}x{}",
                    m.nrows(),
                    m.ncols()
                ),
            ));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureModeConfig {
    #[default]
    Noise,
    Gain,
}

/// Serializable description of a [`Density`], tagged by `family`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shape: Option<MatrixConfig>,
        #[serde(default)]
        offset: f64,
    },
    Cauchy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        location: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shape: Option<MatrixConfig>,
        #[serde(default)]
        offset: f64,
    },
    Levy {
        #[serde(default)]
        shift: f64,
        #[serde(default)]
        offset: f64,
    },
    Mixture {
        noise: Box<DensityConfig>,
        atoms: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gain: Option<MatrixConfig>,
        #[serde(default)]
        mode: MixtureModeConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_theta: Option<f64>,
    },
    Affine {
        base: Box<DensityConfig>,
        a: MatrixConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
    },
}

fn elliptic_dim(
    center: &Option<Vec<f64>>,
    dim: Option<usize>,
    shape: &Option<MatrixConfig>,
) -> usize {
    center
        .as_ref()
        .map(|m| m.len())
        .or_else(|| shape.as_ref().and_then(|s| s.dim()))
        .or(dim)
        .unwrap_or(1)
}

impl DensityConfig {
    pub fn build(&self) -> Result<Density> {
        let wrap = |e: Error| match e {
            Error::Config { .. } => e,
            other => Error::config("density", other.to_string()),
        };
        match self {
            DensityConfig::Gaussian {
                mean,
                dim,
                shape,
                offset,
            } => {
                let d = elliptic_dim(mean, *dim, shape);
                let mu = mean.clone().unwrap_or_else(|| vec![0.0; d]);
                let r = shape.clone().unwrap_or(MatrixConfig::Scalar(1.0)).build(
                    d,
                    d,
                    "density.shape",
                )?;
                Density::gaussian(&mu, r)
                    .and_then(|p| p.with_offset(*offset))
                    .map_err(wrap)
            }
            DensityConfig::Cauchy {
                location,
                dim,
                shape,
                offset,
            } => {
                let d = elliptic_dim(location, *dim, shape);
                let mu = location.clone().unwrap_or_else(|| vec![0.0; d]);
                let r = shape.clone().unwrap_or(MatrixConfig::Scalar(1.0)).build(
                    d,
                    d,
                    "density.shape",
                )?;
                Density::cauchy(&mu, r)
                    .and_then(|p| p.with_offset(*offset))
                    .map_err(wrap)
            }
            DensityConfig::Levy { shift, offset } => Density::levy(*shift)
                .and_then(|p| p.with_offset(*offset))
                .map_err(wrap),
            DensityConfig::Mixture {
                noise,
                atoms,
                weights,
                gain,
                mode,
                noise_theta,
            } => {
                let noise = noise.build()?;
                if atoms.is_empty() {
                    return Err(Error::config("density.atoms", "empty atom list"));
                }
                let w = weights
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / atoms.len() as f64; atoms.len()]);
                let input = ChannelInput::discrete(atoms.clone(), w).map_err(wrap)?;
                match mode {
                    MixtureModeConfig::Noise => {
                        let (rows, cols) = (noise.dim(), input.dim());
                        let g = gain.clone().unwrap_or(MatrixConfig::Scalar(1.0)).build(
                            rows,
                            cols,
                            "density.gain",
                        )?;
                        if noise_theta.is_some() {
                            return Err(Error::config(
                                "density.noise_theta",
                                "only meaningful in gain mode",
                            ));
                        }
                        channel_output(&input, g, noise).map_err(wrap)
                    }
                    MixtureModeConfig::Gain => {
                        if gain.is_some() {
                            return Err(Error::config(
                                "density.gain",
                                "in gain mode the gain is the parameter theta",
                            ));
                        }
                        gain_channel(&input, noise, noise_theta.unwrap_or(1.0)).map_err(wrap)
                    }
                }
            }
            DensityConfig::Affine { base, a, b } => {
                let base = base.build()?;
                let d = base.dim();
                let a = a.build(d, d, "density.a")?;
                let b = b.clone().unwrap_or_else(|| vec![0.0; d]);
                base.affine_image(a, &b).map_err(wrap)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds() {
        let c: DensityConfig = serde_json::from_str(r#"{"family":"gaussian"}"#).unwrap();
        assert_eq!(c.build().unwrap().label(), "gaussian(d=1)");
        let c: DensityConfig =
            serde_json::from_str(r#"{"family":"cauchy","shape":[[1,0.2],[0.2,2]]}"#).unwrap();
        assert_eq!(c.build().unwrap().dim(), 2);
        let c: DensityConfig = serde_json::from_str(
            r#"{"family":"mixture","noise":{"family":"gaussian"},"atoms":[[-1],[1]]}"#,
        )
        .unwrap();
        let p = c.build().unwrap();
        assert!((p.pdf(&[0.0], &[1.0]).unwrap() - 0.241_970_724_519_143_37).abs() < 1e-15);
        let c: DensityConfig = serde_json::from_str(
            r#"{"family":"mixture","noise":{"family":"gaussian","dim":2},"atoms":[[1,0]],"mode":"gain"}"#,
        )
        .unwrap();
        assert_eq!(c.build().unwrap().n_params(), 4);
        assert!(
            serde_json::from_str::<DensityConfig>(r#"{"family":"gaussian","sigma":1}"#).is_err()
        );
        let c: DensityConfig = serde_json::from_str(
            r#"{"family":"mixture","noise":{"family":"gaussian"},"atoms":[]}"#,
        )
        .unwrap();
        assert!(matches!(c.build(), Err(Error::Config { .. })));
        let back = serde_json::to_string(&DensityConfig::Levy {
            shift: 0.0,
            offset: 0.0,
        })
        .unwrap();
        assert_eq!(back, r#"{"family":"levy","shift":0.0,"offset":0.0}"#);
    }
}
