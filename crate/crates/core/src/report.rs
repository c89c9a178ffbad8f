//! Run configuration, suite dispatch and report emission.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::densities::{ChannelInput, DensityConfig, PdeSpec};
use crate::error::{Error, Result};
use crate::functionals::FunctionalConfig;
use crate::identities::{
    named_suite, run_suite, Check, CheckResult, IdentityKind, IdentitySpec, Subject, Summary,
    Tolerance, Value, SUITE_NAMES,
};
use crate::measures::{
    mse_phi, mutual_phi_information, phi_divergence, phi_entropy, phi_fisher_div,
    phi_fisher_nonparam, phi_fisher_param, Channel, FisherMode,
};
use crate::numerics::{FdSpec, QuadratureSpec};

pub const TOOL: &str = "phi-debruijn";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CSV_HEADER: &str = "check_id,kind,family,functional,theta,lhs,rhs,abs_err,rel_err,pass";
pub const DEFAULT_THETA_GRID: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::config(
                "format",
                format!("expected json or csv, got `{other}`"),
            )),
        }
    }
}

/// Channel input in config form, tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputConfig {
    Discrete {
        atoms: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    /// Equiprobable `±amplitude`.
    Binary {
        #[serde(default = "one")]
        amplitude: f64,
    },
    Gaussian {
        #[serde(default)]
        mean: f64,
        variance: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl InputConfig {
    pub fn build(&self) -> Result<ChannelInput> {
        let wrap = |e: Error| Error::config("input", e.to_string());
        match self {
            InputConfig::Discrete { atoms, weights } => {
                if atoms.is_empty() {
                    return Err(Error::config("input.atoms", "empty atom list"));
                }
                let w = weights
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / atoms.len() as f64; atoms.len()]);
                ChannelInput::discrete(atoms.clone(), w).map_err(wrap)
            }
            InputConfig::Binary { amplitude } => {
                if !amplitude.is_finite() {
                    return Err(Error::config("input.amplitude", "must be finite"));
                }
                Ok(ChannelInput::binary(*amplitude))
            }
            InputConfig::Gaussian { mean, variance } => {
                ChannelInput::gaussian(*mean, *variance).map_err(wrap)
            }
        }
    }
}

/// A scalar θ or a list (several scalar checks, or one gain vector for `guo`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaConfig {
    Scalar(f64),
    List(Vec<f64>),
}

/// One inline identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub kind: IdentityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<DensityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<DensityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<DensityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_theta: Option<f64>,
    pub functional: FunctionalConfig,
    /// PDE name, or `auto` (the default) to derive it from the density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pde: Option<String>,
    /// Defaults to the run's θ grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Tolerance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd: Option<FdSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSpec>,
}

fn required<'a, T>(v: &'a Option<T>, field: &str, kind: IdentityKind) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::config(field, format!("required for kind `{}`", kind.name())))
}

fn forbid<T>(v: &Option<T>, field: &str, kind: IdentityKind) -> Result<()> {
    if v.is_some() {
        return Err(Error::config(
            field,
            format!("not used by kind `{}`", kind.name()),
        ));
    }
    Ok(())
}

fn validate_tolerance(t: &Tolerance, field: &str) -> Result<()> {
    if !(t.rel > 0.0 && t.rel.is_finite()) {
        return Err(Error::config(
            &format!("{field}.rel"),
            "must be finite and > 0",
        ));
    }
    if !(t.abs >= 0.0 && t.abs.is_finite()) {
        return Err(Error::config(
            &format!("{field}.abs"),
            "must be finite and >= 0",
        ));
    }
    Ok(())
}

impl CheckConfig {
    /// Expands into identity specs; run-wide numerics are applied first so
    /// that per-check settings take precedence.
    pub fn build(&self, run: &RunConfig) -> Result<Vec<IdentitySpec>> {
        let kind = self.kind;
        let f = self.functional.build()?;
        let thetas: Vec<f64> = match &self.theta {
            Some(ThetaConfig::Scalar(t)) => vec![*t],
            Some(ThetaConfig::List(v)) => v.clone(),
            None => run.theta_grid.clone(),
        };
        let base: Vec<IdentitySpec> = match kind {
            IdentityKind::ScalarEntropy | IdentityKind::MultivariateEntropy => {
                let p = required(&self.density, "density", kind)?.build()?;
                for (v, name) in [(&self.p1, "p1"), (&self.p0, "p0"), (&self.noise, "noise")] {
                    forbid(v, name, kind)?;
                }
                thetas
                    .iter()
                    .map(|&t| IdentitySpec::entropy(p.clone(), f.clone(), t))
                    .collect()
            }
            IdentityKind::ScalarDivergence | IdentityKind::MultivariateDivergence => {
                let p1 = required(&self.p1, "p1", kind)?.build()?;
                let p0 = required(&self.p0, "p0", kind)?.build()?;
                forbid(&self.density, "density", kind)?;
                thetas
                    .iter()
                    .map(|&t| IdentitySpec::divergence(p1.clone(), p0.clone(), f.clone(), t))
                    .collect()
            }
            IdentityKind::Guo => {
                let input = required(&self.input, "input", kind)?.build()?;
                let noise = required(&self.noise, "noise", kind)?.build()?;
                forbid(&self.pde, "pde", kind)?;
                let ch = Channel::new(input, noise, self.noise_theta.unwrap_or(1.0))
                    .map_err(|e| Error::config("noise", e.to_string()))?;
                let gains: Vec<Vec<f64>> = match (&self.theta, ch.n_params()) {
                    (Some(ThetaConfig::List(v)), n) if n > 1 => vec![v.clone()],
                    (_, 1) => thetas.iter().map(|&g| vec![g]).collect(),
                    (_, n) => {
                        return Err(Error::config(
                            "theta",
                            format!("a gain vector of length {n} (row-major) is required"),
                        ))
                    }
                };
                gains
                    .into_iter()
                    .map(|g| IdentitySpec::guo(ch.clone(), f.clone(), g))
                    .collect()
            }
        };
        let scalar = matches!(
            kind,
            IdentityKind::ScalarEntropy | IdentityKind::ScalarDivergence
        );
        let mut out = Vec::with_capacity(base.len());
        for mut spec in base {
            let dim = match &spec.subject {
                Subject::Single(p) | Subject::Pair { p1: p, .. } => p.dim(),
                Subject::Channel(c) => c.d_out(),
            };
            if kind != IdentityKind::Guo && scalar != (dim == 1) {
                return Err(Error::config(
                    "kind",
                    format!(
                        "`{}` does not match a {dim}-dimensional density",
                        kind.name()
                    ),
                ));
            }
            if let Some(name) = self.pde.as_deref().filter(|n| *n != "auto") {
                let p = match &spec.subject {
                    Subject::Single(p) | Subject::Pair { p1: p, .. } => p,
                    Subject::Channel(_) => unreachable!(),
                };
                spec.pde = Some(PdeSpec::named(name, p)?);
            }
            if let Some(t) = run.tolerance {
                spec.tolerance = Some(t);
            }
            if let Some(fd) = run.fd {
                spec.fd = fd;
            }
            if let Some(q) = run.quadrature {
                spec.quadrature = q;
            }
            if let Some(t) = self.tolerance {
                validate_tolerance(&t, "tolerance")?;
                spec.tolerance = Some(t);
            }
            if let Some(fd) = self.fd {
                fd.validate()?;
                spec.fd = fd;
            }
            if let Some(q) = self.quadrature {
                q.validate()?;
                spec.quadrature = q;
            }
            out.push(spec);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSuite {
    pub name: String,
    #[serde(default)]
    pub checks: Vec<CheckConfig>,
}

/// A built-in suite by name, or an inline list of checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SuiteRef {
    Named(String),
    Inline(InlineSuite),
}

impl SuiteRef {
    pub fn name(&self) -> &str {
        match self {
            SuiteRef::Named(n) => n,
            SuiteRef::Inline(s) => &s.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub suites: Vec<SuiteRef>,
    #[serde(default = "default_grid")]
    pub theta_grid: Vec<f64>,
    /// Overrides every identity check's tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Tolerance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd: Option<FdSpec>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Jitters the grids of grid-scanned property checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_grid() -> Vec<f64> {
    DEFAULT_THETA_GRID.to_vec()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            suites: Vec::new(),
            theta_grid: default_grid(),
            tolerance: None,
            quadrature: None,
            fd: None,
            output: OutputConfig::default(),
            seed: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta_grid.is_empty() {
            return Err(Error::config("theta_grid", "must not be empty"));
        }
        if let Some(t) = self
            .theta_grid
            .iter()
            .find(|t| !(**t > 0.0 && t.is_finite()))
        {
            return Err(Error::config(
                "theta_grid",
                format!("values must be finite and > 0, got {t}"),
            ));
        }
        if let Some(t) = &self.tolerance {
            validate_tolerance(t, "tolerance")?;
        }
        if let Some(q) = &self.quadrature {
            q.validate()?;
        }
        if let Some(fd) = &self.fd {
            fd.validate()?;
        }
        for s in &self.suites {
            match s {
                SuiteRef::Named(n) if !SUITE_NAMES.contains(&n.as_str()) => {
                    return Err(Error::config(
                        "suites",
                        format!("unknown suite `{n}` (known: {})", SUITE_NAMES.join(", ")),
                    ))
                }
                SuiteRef::Named(_) => {}
                SuiteRef::Inline(inline) => {
                    for c in &inline.checks {
                        c.build(self)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Builds every suite's checks, in order.
    pub fn dispatch(&self) -> Result<Vec<(String, Vec<Check>)>> {
        self.suites
            .iter()
            .map(|s| {
                let checks = match s {
                    SuiteRef::Named(n) => {
                        let mut checks = named_suite(n, &self.theta_grid)?;
                        for c in checks.iter_mut() {
                            c.configure(self.tolerance, self.fd, self.quadrature);
                            if let Some(seed) = self.seed {
                                c.seed(seed);
                            }
                        }
                        checks
                    }
                    SuiteRef::Inline(inline) => {
                        let mut out = Vec::new();
                        for c in &inline.checks {
                            out.extend(c.build(self)?.into_iter().map(Check::Identity));
                        }
                        out
                    }
                };
                Ok((s.name().to_string(), checks))
            })
            .collect()
    }
}

/// Leads with the position; serde's own trailing one is dropped.
pub fn describe_json_error(e: &serde_json::Error) -> String {
    let text = e.to_string();
    let msg = text
        .rsplit_once(" at line ")
        .map_or(text.as_str(), |(m, _)| m);
    format!("line {} column {}: {msg}", e.line(), e.column())
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::config("config", describe_json_error(&e))
}

/// Parses and validates a JSON run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(parse_error)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub name: String,
    pub summary: Summary,
}

/// Wall-clock data, the only non-deterministic part of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamp {
    pub started_unix: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    #[serde(default)]
    pub suites: Vec<SuiteSummary>,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<Timestamp>,
}

impl Report {
    pub fn empty() -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            config: None,
            suites: Vec::new(),
            checks: Vec::new(),
            summary: Summary::of(&[]),
            timestamp: None,
        }
    }

    /// 0 when everything passed, 2 when any check errored, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.errored > 0 {
            2
        } else if self.summary.failed > 0 {
            1
        } else {
            0
        }
    }
}

/// Runs every configured suite and assembles the report.
pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut suites = Vec::new();
    let mut checks = Vec::new();
    for (name, members) in config.dispatch()? {
        let outcome = run_suite(&name, &members);
        suites.push(SuiteSummary {
            name,
            summary: outcome.summary,
        });
        checks.extend(outcome.results);
    }
    let summary = Summary::of(&checks);
    Ok(Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        config: Some(config.clone()),
        suites,
        checks,
        summary,
        timestamp: Some(Timestamp {
            started_unix,
            wall_seconds: started.elapsed().as_secs_f64(),
        }),
    })
}

pub fn to_json(report: &Report) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))
}

/// Shortest round-trip form, switching to exponents for tiny or huge values.
fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| x.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One row per check; matrices as Frobenius norms, vector θ joined by `;`.
pub fn to_csv(report: &Report) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER.split(',')).map_err(io)?;
    for c in &report.checks {
        let theta = c
            .theta
            .iter()
            .map(|t| num(*t))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            c.check_id.clone(),
            c.kind.clone(),
            c.family.clone(),
            c.functional.clone(),
            theta,
            opt(c.lhs.as_ref().map(Value::norm)),
            opt(c.rhs.as_ref().map(Value::norm)),
            opt(c.abs_err),
            opt(c.rel_err),
            c.pass.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
    }
}

pub fn emit_report(report: &Report, format: Format, path: &Path) -> Result<()> {
    let text = render(report, format)?;
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// A one-off measure computation, tagged by `measure`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "measure", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureRequest {
    Entropy {
        density: DensityConfig,
        functional: FunctionalConfig,
        theta: ThetaConfig,
    },
    Divergence {
        p1: DensityConfig,
        p0: DensityConfig,
        functional: FunctionalConfig,
        theta: ThetaConfig,
    },
    FisherParam {
        density: DensityConfig,
        functional: FunctionalConfig,
        theta: ThetaConfig,
    },
    FisherNonparam {
        density: DensityConfig,
        functional: FunctionalConfig,
        theta: ThetaConfig,
    },
    FisherDiv {
        p1: DensityConfig,
        p0: DensityConfig,
        functional: FunctionalConfig,
        theta: ThetaConfig,
        #[serde(default = "nonparam")]
        mode: FisherMode,
    },
    MutualInformation {
        input: InputConfig,
        noise: DensityConfig,
        #[serde(default = "one")]
        noise_theta: f64,
        functional: FunctionalConfig,
        gain: ThetaConfig,
    },
    Mse {
        input: InputConfig,
        noise: DensityConfig,
        #[serde(default = "one")]
        noise_theta: f64,
        functional: FunctionalConfig,
        gain: ThetaConfig,
    },
}

fn nonparam() -> FisherMode {
    FisherMode::Nonparam
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureOutput {
    pub measure: String,
    pub value: Value,
    /// Largest quadrature error estimate.
    pub error: f64,
}

fn theta_vec(t: &ThetaConfig) -> Vec<f64> {
    match t {
        ThetaConfig::Scalar(v) => vec![*v],
        ThetaConfig::List(v) => v.clone(),
    }
}

/// Evaluates a [`MeasureRequest`] with the given quadrature settings.
pub fn compute_measure(req: &MeasureRequest, quad: &QuadratureSpec) -> Result<MeasureOutput> {
    let scalar = |name: &str, m: crate::measures::Measure| MeasureOutput {
        measure: name.into(),
        value: Value::Scalar(m.value),
        error: m.error,
    };
    let matrix = |name: &str, m: crate::measures::InfoMatrix| MeasureOutput {
        measure: name.into(),
        value: Value::matrix(&m.value),
        error: m.error.amax(),
    };
    let channel = |input: &InputConfig, noise: &DensityConfig, s: f64| -> Result<Channel> {
        Channel::new(input.build()?, noise.build()?, s)
    };
    Ok(match req {
        MeasureRequest::Entropy {
            density,
            functional,
            theta,
        } => {
            let (p, t) = (density.build()?, theta_vec(theta));
            scalar(
                "entropy",
                phi_entropy(p.at(&t), &functional.build()?, quad)?,
            )
        }
        MeasureRequest::Divergence {
            p1,
            p0,
            functional,
            theta,
        } => {
            let (a, b, t) = (p1.build()?, p0.build()?, theta_vec(theta));
            scalar(
                "divergence",
                phi_divergence(a.at(&t), b.at(&t), &functional.build()?, quad)?,
            )
        }
        MeasureRequest::FisherParam {
            density,
            functional,
            theta,
        } => {
            let (p, t) = (density.build()?, theta_vec(theta));
            matrix(
                "fisher_param",
                phi_fisher_param(p.at(&t), &functional.build()?, quad)?,
            )
        }
        MeasureRequest::FisherNonparam {
            density,
            functional,
            theta,
        } => {
            let (p, t) = (density.build()?, theta_vec(theta));
            matrix(
                "fisher_nonparam",
                phi_fisher_nonparam(p.at(&t), &functional.build()?, quad)?,
            )
        }
        MeasureRequest::FisherDiv {
            p1,
            p0,
            functional,
            theta,
            mode,
        } => {
            let (a, b, t) = (p1.build()?, p0.build()?, theta_vec(theta));
            matrix(
                "fisher_div",
                phi_fisher_div(a.at(&t), b.at(&t), &functional.build()?, *mode, quad)?,
            )
        }
        MeasureRequest::MutualInformation {
            input,
            noise,
            noise_theta,
            functional,
            gain,
        } => {
            let ch = channel(input, noise, *noise_theta)?;
            scalar(
                "mutual_information",
                mutual_phi_information(&ch, &functional.build()?, &theta_vec(gain), quad)?,
            )
        }
        MeasureRequest::Mse {
            input,
            noise,
            noise_theta,
            functional,
            gain,
        } => {
            let ch = channel(input, noise, *noise_theta)?;
            matrix(
                "mse",
                mse_phi(&ch, &functional.build()?, &theta_vec(gain), quad)?,
            )
        }
    })
}

pub fn parse_measure(text: &str) -> Result<MeasureRequest> {
    serde_json::from_str(text).map_err(parse_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(r#"{"suites":["gaussian_scalar"]}"#).unwrap();
        assert_eq!(c.theta_grid, DEFAULT_THETA_GRID.to_vec());
        assert_eq!(c.output.format, Format::Json);
        assert!(c.tolerance.is_none());
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let bad = r#"{"suites":[{"name":"x","checks":[{"kind":"scalar_entropy",
            "density":{"family":"gaussian"},"functional":{"functional":"renyi"}}]}]}"#;
        match parse_config(bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "functional"),
            other => panic!("{other:?}"),
        }
        match parse_config(r#"{"suites":["cauchy"],"tolerance":{"rel":-1e-4,"abs":1e-8}}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "tolerance.rel"),
            other => panic!("{other:?}"),
        }
        match parse_config("{\n  \"suites\": [\n") {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "config");
                assert!(message.starts_with("line "), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_config(r#"{"suites":["nope"]}"#).is_err());
        assert!(parse_config(r#"{"suites":[],"bogus":1}"#).is_err());
    }

    #[test]
    fn config_echo_round_trips() {
        let text = r#"{"suites":["levy",{"name":"mine","checks":[{"kind":"guo",
            "input":{"type":"binary"},"noise":{"family":"gaussian"},
            "functional":{"functional":"hcdt","alpha":2.0},"theta":1.0}]}],
            "tolerance":{"rel":1e-3,"abs":1e-9},"seed":7,
            "output":{"format":"csv"}}"#;
        let c = parse_config(text).unwrap();
        let echo = serde_json::to_string(&c).unwrap();
        assert_eq!(parse_config(&echo).unwrap(), c);
    }

    #[test]
    fn empty_report_shape() {
        let r = run(&parse_config(r#"{"suites":[]}"#).unwrap()).unwrap();
        assert_eq!(r.exit_code(), 0);
        let v: serde_json::Value = serde_json::from_str(&to_json(&r).unwrap()).unwrap();
        assert_eq!(v["checks"], serde_json::json!([]));
        assert_eq!(v["summary"]["total"], 0);
        assert_eq!(v["summary"]["passed"], 0);
        assert_eq!(to_csv(&r).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn measure_requests() {
        let q = QuadratureSpec::default();
        let req = parse_measure(
            r#"{"measure":"fisher_nonparam","density":{"family":"gaussian"},
                "functional":{"functional":"shannon"},"theta":2.0}"#,
        )
        .unwrap();
        let out = compute_measure(&req, &q).unwrap();
        assert!((out.value.norm() - 0.5).abs() < 1e-9);
        let req = parse_measure(
            r#"{"measure":"mutual_information","input":{"type":"gaussian","variance":1.0},
                "noise":{"family":"gaussian"},"functional":{"functional":"shannon"},"gain":1.0}"#,
        )
        .unwrap();
        let out = compute_measure(&req, &q).unwrap();
        assert!((out.value.norm() - 0.5 * 2f64.ln()).abs() < 1e-9);
    }
}
