//! JSON run configuration.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fields::Profile;
use crate::grid::{Domain, DomainKind, Grid};
use crate::optimal::{DescentOptions, DEFAULT_EPS_SCHEDULE};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted location of the offending value, or `line:column` for syntax errors.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: &str, message: impl Into<String>) -> Self {
        ConfigError { path: path.to_string(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Resolution {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Per-axis `[lo, hi]`; defaults to the unit interval or square or cube.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extents: Option<Vec<[f64; 2]>>,
    pub resolution: Resolution,
    /// Radius of the ball standing in for the whole space (radial3d only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Max,
    Min,
    Both,
}

impl Side {
    pub fn includes_max(self) -> bool {
        matches!(self, Side::Max | Side::Both)
    }

    pub fn includes_min(self) -> bool {
        matches!(self, Side::Min | Side::Both)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_source")]
    pub source: Profile,
    /// Potential used by the `energy` command.
    #[serde(default = "default_potential")]
    pub potential: Profile,
    #[serde(default = "default_side")]
    pub side: Side,
}

fn default_p() -> f64 {
    2.0
}

fn default_source() -> Profile {
    Profile::Constant { value: 1.0 }
}

fn default_potential() -> Profile {
    Profile::Zero
}

fn default_side() -> Side {
    Side::Both
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec { p: default_p(), source: default_source(), potential: default_potential(), side: default_side() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_state_tol")]
    pub state_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_eps")]
    pub eps_schedule: Vec<f64>,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_state_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    100_000
}

fn default_eps() -> Vec<f64> {
    DEFAULT_EPS_SCHEDULE.to_vec()
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            tol: default_tol(),
            state_tol: default_state_tol(),
            max_iter: default_max_iter(),
            eps_schedule: default_eps(),
        }
    }
}

impl SolverSpec {
    pub fn descent(&self) -> DescentOptions {
        DescentOptions { tol: self.tol, max_iter: self.max_iter, ..DescentOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Random potentials per exponent and side.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_p_values")]
    pub p_values: Vec<f64>,
    /// Random pairs per auxiliary inequality and exponent; ten times `samples` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequality_samples: Option<usize>,
}

fn default_samples() -> usize {
    100
}

fn default_p_values() -> Vec<f64> {
    vec![1.5, 2.0, 3.0]
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            samples: default_samples(),
            seed: 0,
            p_values: default_p_values(),
            inequality_samples: None,
        }
    }
}

impl SweepSpec {
    pub fn pairs(&self) -> usize {
        self.inequality_samples.unwrap_or(10 * self.samples)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySpec {
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(rename = "R", default = "one")]
    pub r: f64,
    #[serde(rename = "C", default = "one")]
    pub c: f64,
    /// Truncation radius of the manufactured-solution check.
    #[serde(default = "default_manufactured_truncation")]
    pub manufactured_truncation: f64,
}

fn default_q() -> f64 {
    1.5
}

fn one() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    3.0
}

fn default_manufactured_truncation() -> f64 {
    20.0
}

impl Default for DecaySpec {
    fn default() -> Self {
        DecaySpec {
            q: default_q(),
            a: one(),
            alpha: default_alpha(),
            r: one(),
            c: one(),
            manufactured_truncation: default_manufactured_truncation(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    #[serde(default)]
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub decay: DecaySpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            let path = if e.line() > 0 { format!("line {} column {}", e.line(), e.column()) } else { "config".into() };
            ConfigError::at(&path, e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::at(&path.display().to_string(), format!("cannot read config: {e}")))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.domain;
        let axes = d.kind.axes();
        let res: Vec<usize> = match &d.resolution {
            Resolution::Uniform(n) => vec![*n; axes],
            Resolution::PerAxis(v) => v.clone(),
        };
        if res.len() != axes {
            return Err(ConfigError::at("domain.resolution", format!("{} needs {axes} entries", d.kind.name())));
        }
        if let Some(i) = res.iter().position(|&n| n < crate::grid::MIN_POINTS) {
            return Err(ConfigError::at(
                &format!("domain.resolution[{i}]"),
                format!("at least {} points per axis are required", crate::grid::MIN_POINTS),
            ));
        }
        match d.kind {
            DomainKind::Radial3d => {
                if d.extents.is_some() {
                    return Err(ConfigError::at("domain.extents", "radial3d takes a truncation radius instead"));
                }
                if let Some(t) = d.truncation {
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(ConfigError::at("domain.truncation", "must be positive"));
                    }
                }
            }
            _ => {
                if d.truncation.is_some() {
                    return Err(ConfigError::at("domain.truncation", "only radial3d has a truncation radius"));
                }
                if let Some(ext) = &d.extents {
                    if ext.len() != axes {
                        return Err(ConfigError::at("domain.extents", format!("{} needs {axes} extents", d.kind.name())));
                    }
                    for (i, e) in ext.iter().enumerate() {
                        if !(e[0].is_finite() && e[1].is_finite() && e[1] > e[0]) {
                            return Err(ConfigError::at(&format!("domain.extents[{i}]"), "needs lo < hi"));
                        }
                    }
                }
            }
        }
        let p = self.problem.p;
        if !(p > 1.0 && p.is_finite()) {
            return Err(ConfigError::at("problem.p", format!("must exceed 1, got {p}")));
        }
        self.problem.source.validate().map_err(|e| ConfigError::at("problem.source", e.to_string()))?;
        self.problem.potential.validate().map_err(|e| ConfigError::at("problem.potential", e.to_string()))?;
        let s = &self.solver;
        if !(s.tol > 0.0) {
            return Err(ConfigError::at("solver.tol", "must be positive"));
        }
        if !(s.state_tol > 0.0 && s.state_tol < 1e-3) {
            return Err(ConfigError::at("solver.state_tol", "must lie in (0, 1e-3)"));
        }
        if s.max_iter == 0 {
            return Err(ConfigError::at("solver.max_iter", "must be positive"));
        }
        if s.eps_schedule.is_empty() {
            return Err(ConfigError::at("solver.eps_schedule", "must not be empty"));
        }
        for (i, e) in s.eps_schedule.iter().enumerate() {
            if !(*e > 0.0) {
                return Err(ConfigError::at(&format!("solver.eps_schedule[{i}]"), "must be positive"));
            }
            if i > 0 && *e >= s.eps_schedule[i - 1] {
                return Err(ConfigError::at(&format!("solver.eps_schedule[{i}]"), "must decrease"));
            }
        }
        for (i, p) in self.sweep.p_values.iter().enumerate() {
            if !(*p > 1.0 && p.is_finite()) {
                return Err(ConfigError::at(&format!("sweep.p_values[{i}]"), format!("must exceed 1, got {p}")));
            }
        }
        let dc = &self.decay;
        if !(dc.q > 1.0 && dc.q < 2.0) {
            return Err(ConfigError::at("decay.q", format!("must lie in (1, 2), got {}", dc.q)));
        }
        if !(dc.a > 0.0) {
            return Err(ConfigError::at("decay.a", "must be positive"));
        }
        if !(dc.alpha > 2.5) {
            return Err(ConfigError::at("decay.alpha", format!("must exceed (N+2)/2 = 2.5, got {}", dc.alpha)));
        }
        if !(dc.r > 0.0) {
            return Err(ConfigError::at("decay.R", "must be positive"));
        }
        if !(dc.c >= 0.0) {
            return Err(ConfigError::at("decay.C", "must be nonnegative"));
        }
        if !(dc.manufactured_truncation > 0.0) {
            return Err(ConfigError::at("decay.manufactured_truncation", "must be positive"));
        }
        Ok(())
    }

    pub fn resolution(&self) -> Vec<usize> {
        match &self.domain.resolution {
            Resolution::Uniform(n) => vec![*n; self.domain.kind.axes()],
            Resolution::PerAxis(v) => v.clone(),
        }
    }

    pub fn truncation(&self) -> f64 {
        self.domain.truncation.unwrap_or(20.0)
    }

    pub fn build_domain(&self) -> Result<Domain, ConfigError> {
        let kind = self.domain.kind;
        let domain = if kind == DomainKind::Radial3d {
            Domain::radial3d(self.truncation())
        } else {
            let bounds = match &self.domain.extents {
                Some(ext) => ext.iter().map(|e| (e[0], e[1])).collect(),
                None => vec![(0.0, 1.0); kind.axes()],
            };
            Domain::new(kind, bounds)
        };
        domain.map_err(|e| ConfigError::at("domain", e.to_string()))
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>, ConfigError> {
        Grid::new(self.build_domain()?, &self.resolution()).map_err(|e| ConfigError::at("domain", e.to_string()))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_json(r#"{"domain": {"kind": "interval", "resolution": 64}}"#).unwrap();
        assert_eq!(c.problem.p, 2.0);
        assert_eq!(c.sweep.p_values, vec![1.5, 2.0, 3.0]);
        assert_eq!(c.build_grid().unwrap().len(), 64);
    }

    #[test]
    fn errors_carry_paths() {
        let e = RunConfig::from_json(r#"{"domain": {"kind": "interval", "resolution": 4}}"#).unwrap_err();
        assert_eq!(e.path, "domain.resolution[0]");
        let e = RunConfig::from_json(r#"{"domain": {"kind": "interval", "resolution": 64}, "decay": {"alpha": 2}}"#)
            .unwrap_err();
        assert_eq!(e.path, "decay.alpha");
        let e = RunConfig::from_json(r#"{"domain": {"kind": "interval", "resolution": 64}, "bogus": 1}"#).unwrap_err();
        assert!(e.path.starts_with("line"));
        let e = RunConfig::from_json("{\n  \"domain\": {\"kind\": \"interval\", \"resolution\": 64},\n  \"problem\": {\"p\": 0.5}\n}")
            .unwrap_err();
        assert_eq!(e.path, "problem.p");
    }

    #[test]
    fn hash_is_stable() {
        let text = r#"{"domain": {"kind": "box2d", "resolution": [16, 16]}}"#;
        let a = RunConfig::from_json(text).unwrap();
        let b = RunConfig::from_json(text).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
