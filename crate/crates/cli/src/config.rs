//! Experiment configuration: per-experiment defaults, a JSON document layered
//! on top, then command-line overrides of the same field names.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SolitonStatic,
    SolitonMoving,
    VortexSingle,
    VortexPair,
    VortexRing,
    StabilityCheck,
    AppendixDemo,
}

impl Experiment {
    pub fn tag(self) -> &'static str {
        match self {
            Experiment::SolitonStatic => "soliton-static",
            Experiment::SolitonMoving => "soliton-moving",
            Experiment::VortexSingle => "vortex-single",
            Experiment::VortexPair => "vortex-pair",
            Experiment::VortexRing => "vortex-ring",
            Experiment::StabilityCheck => "stability-check",
            Experiment::AppendixDemo => "appendix-demo",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Experiment::SolitonStatic | Experiment::SolitonMoving | Experiment::AppendixDemo => 1,
            Experiment::StabilityCheck => 1,
            Experiment::VortexSingle | Experiment::VortexPair => 2,
            Experiment::VortexRing => 3,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BcKind {
    #[serde(rename = "msd")]
    Msd,
    #[serde(rename = "l0")]
    L0,
    #[serde(rename = "1sd")]
    OneSided,
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "exact-overwrite")]
    ExactOverwrite,
    #[serde(rename = "dirichlet0")]
    Dirichlet0,
}

impl BcKind {
    pub fn tag(self) -> &'static str {
        match self {
            BcKind::Msd => "msd",
            BcKind::L0 => "l0",
            BcKind::OneSided => "1sd",
            BcKind::Exact => "exact",
            BcKind::ExactOverwrite => "exact-overwrite",
            BcKind::Dirichlet0 => "dirichlet0",
        }
    }

    pub fn needs_exact_solution(self) -> bool {
        matches!(self, BcKind::Exact | BcKind::ExactOverwrite)
    }
}

impl fmt::Display for BcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for BcKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(Value::String(s.to_ascii_lowercase())).map_err(|_| format!("unknown boundary condition '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

/// A fixed time step, or `"auto"` for the recommended fraction of the full
/// stability bound of each run's initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeStep {
    Fixed(f64),
    Auto(Auto),
}

impl FromStr for TimeStep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(TimeStep::Auto(Auto::Auto));
        }
        s.parse::<f64>().map(TimeStep::Fixed).map_err(|_| format!("time step '{s}' is neither a number nor 'auto'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackflowMode {
    None,
    Auto,
}

/// Ring back-flow: none, calibrated from a pre-run, or a fixed axial speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Backflow {
    Velocity(f64),
    Mode(BackflowMode),
}

impl FromStr for Backflow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Backflow::Mode(BackflowMode::None)),
            "auto" => Ok(Backflow::Mode(BackflowMode::Auto)),
            other => other
                .parse::<f64>()
                .map(Backflow::Velocity)
                .map_err(|_| format!("back-flow '{s}' is not 'none', 'auto' or a number")),
        }
    }
}

/// Fully resolved configuration. Also the schema of the JSON config file,
/// where every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Boundary conditions to compare.
    pub bc: Vec<BcKind>,
    /// Domain radii: distance from the structure to the edge.
    pub r: Vec<f64>,
    /// Half-widths of the square domain for the vortex pair.
    pub d: Vec<f64>,
    /// Points per axis; when set it replaces the `r`/`d` sweep with one
    /// centered grid of this many points.
    pub points: Option<usize>,
    pub h: f64,
    pub k: TimeStep,
    pub tend: f64,
    pub a: f64,
    pub s: f64,
    pub omega: f64,
    /// Soliton velocity.
    pub c: f64,
    /// Vortex charge.
    pub m: i32,
    /// Distance of each vortex of the pair from the grid center.
    pub separation: f64,
    pub ring_radius: f64,
    pub backflow: Backflow,
    /// Duration of each ring calibration pre-run.
    pub calibration_time: f64,
    /// Radial step of the vortex profile table.
    pub profile_dr: f64,
    /// Steps between error and tracking samples.
    pub sample_every: usize,
    /// Time between image snapshots; initial and final states are always
    /// written.
    pub snapshot_every: Option<f64>,
    /// Fixed step count (appendix demo, stability trials).
    pub steps: usize,
    /// Step count of the stability survival run.
    pub survive_steps: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            bc: vec![BcKind::Msd],
            r: Vec::new(),
            d: Vec::new(),
            points: None,
            h: 0.1,
            k: TimeStep::Fixed(0.006),
            tend: 50.0,
            a: 1.0,
            s: -1.0,
            omega: -1.0,
            c: 0.0,
            m: 1,
            separation: 7.0,
            ring_radius: 5.0,
            backflow: Backflow::Mode(BackflowMode::Auto),
            calibration_time: 15.0,
            profile_dr: 0.01,
            sample_every: 1,
            snapshot_every: None,
            steps: 100,
            survive_steps: 100_000,
            seed: 0,
            out: PathBuf::from("out").join(experiment.tag()),
        };
        let sweep = vec![5.0, 10.0, 15.0, 20.0, 25.0];
        match experiment {
            Experiment::SolitonStatic => Self {
                bc: vec![BcKind::Msd, BcKind::L0, BcKind::OneSided, BcKind::Exact],
                r: sweep,
                ..base
            },
            Experiment::SolitonMoving => Self {
                bc: vec![BcKind::Msd, BcKind::Exact],
                r: sweep,
                c: 0.5,
                ..base
            },
            Experiment::VortexSingle => Self {
                bc: vec![BcKind::Msd, BcKind::L0],
                r: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0],
                h: 0.25,
                k: TimeStep::Fixed(0.01),
                tend: 300.0,
                sample_every: 100,
                ..base
            },
            Experiment::VortexPair => Self {
                bc: vec![BcKind::Msd, BcKind::L0],
                d: vec![12.0, 15.0, 18.0, 21.0, 24.0, 27.0, 30.0, 35.0],
                h: 0.25,
                k: TimeStep::Fixed(0.01),
                tend: 480.0,
                sample_every: 50,
                ..base
            },
            Experiment::VortexRing => Self {
                points: Some(64),
                h: 0.5,
                k: TimeStep::Fixed(0.035),
                tend: 150.0,
                sample_every: 20,
                ..base
            },
            Experiment::StabilityCheck => Self {
                points: Some(101),
                k: TimeStep::Auto(Auto::Auto),
                steps: 20_000,
                ..base
            },
            Experiment::AppendixDemo => Self {
                r: vec![10.0],
                k: TimeStep::Fixed(0.0005),
                c: 0.5,
                tend: 0.05,
                steps: 100,
                ..base
            },
        }
    }

    /// Defaults for `experiment`, then the fields of `file`, then `overrides`.
    /// The experiment named in the file must agree with the requested one.
    pub fn resolve(experiment: Experiment, file: Option<Value>, overrides: Map<String, Value>) -> Result<Self, ConfigError> {
        let mut doc = serde_json::to_value(Self::defaults(experiment))?;
        let target = doc.as_object_mut().expect("config serializes to an object");
        if let Some(file) = file {
            let Value::Object(fields) = file else {
                return Err(ConfigError::Invalid("config file must hold a JSON object".into()));
            };
            if let Some(tag) = fields.get("experiment") {
                if tag != &Value::String(experiment.tag().into()) {
                    return Err(ConfigError::Invalid(format!(
                        "config file is for experiment {tag}, not '{experiment}'"
                    )));
                }
            }
            target.extend(fields);
        }
        target.extend(overrides);
        let cfg: Self = serde_json::from_value(doc)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h = {} must be positive", self.h));
        }
        if let TimeStep::Fixed(k) = self.k {
            if !(k > 0.0 && k.is_finite()) {
                return bad(format!("k = {k} must be positive"));
            }
        }
        if !(self.tend >= 0.0 && self.tend.is_finite()) {
            return bad(format!("tend = {} must be nonnegative", self.tend));
        }
        if self.a == 0.0 || !self.a.is_finite() || !self.s.is_finite() || !self.omega.is_finite() {
            return bad("a must be nonzero and a, s, omega finite".into());
        }
        if self.bc.is_empty() {
            return bad("at least one boundary condition is required".into());
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1".into());
        }
        if let Some(dt) = self.snapshot_every {
            if !(dt > 0.0) {
                return bad(format!("snapshot_every = {dt} must be positive"));
            }
        }
        if !(self.profile_dr > 0.0) {
            return bad(format!("profile_dr = {} must be positive", self.profile_dr));
        }
        let sizes = match self.experiment {
            Experiment::VortexPair => &self.d,
            _ => &self.r,
        };
        if self.points.is_none() && sizes.is_empty() && self.experiment != Experiment::StabilityCheck {
            return bad("no domain sizes given (r, d or points)".into());
        }
        if let Some(&x) = sizes.iter().find(|x| !(**x > 0.0)) {
            return bad(format!("domain size {x} must be positive"));
        }
        if let Some(n) = self.points {
            if n < msd_nlse::field::MIN_POINTS {
                return bad(format!("points = {n} is below the minimum of {}", msd_nlse::field::MIN_POINTS));
            }
        }
        let dim = self.experiment.dim();
        for bc in &self.bc {
            if *bc == BcKind::OneSided && dim != 1 {
                return bad("1sd is only defined in one dimension".into());
            }
            let has_exact = matches!(self.experiment, Experiment::SolitonStatic | Experiment::SolitonMoving);
            if bc.needs_exact_solution() && !has_exact {
                return bad(format!("{bc} needs a closed-form solution, which {} does not have", self.experiment));
            }
        }
        match self.experiment {
            Experiment::SolitonStatic | Experiment::SolitonMoving | Experiment::AppendixDemo => {
                msd_nlse::solutions::SolitonParams::new(self.c, self.omega, self.a, self.s)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
            Experiment::VortexSingle | Experiment::VortexPair | Experiment::VortexRing => {
                if self.m < 1 {
                    return bad(format!("vortex charge m = {} must be at least 1", self.m));
                }
                if !(self.omega / self.s > 0.0) {
                    return bad("background density omega/s must be positive".into());
                }
            }
            Experiment::StabilityCheck => {}
        }
        if self.experiment == Experiment::SolitonMoving && self.c == 0.0 {
            return bad("soliton-moving needs a nonzero velocity c".into());
        }
        if self.experiment == Experiment::VortexRing && !(self.ring_radius > 0.0) {
            return bad("ring_radius must be positive".into());
        }
        Ok(())
    }

    /// Background density `Ω/s`.
    pub fn rho(&self) -> f64 {
        self.omega / self.s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_validate() {
        for e in [
            Experiment::SolitonStatic,
            Experiment::SolitonMoving,
            Experiment::VortexSingle,
            Experiment::VortexPair,
            Experiment::VortexRing,
            Experiment::StabilityCheck,
            Experiment::AppendixDemo,
        ] {
            ExperimentConfig::defaults(e).validate().unwrap();
        }
    }

    #[test]
    fn layering_order() {
        let file = json!({"h": 0.2, "tend": 10.0, "bc": ["msd"]});
        let mut over = Map::new();
        over.insert("tend".into(), json!(5.0));
        let cfg = ExperimentConfig::resolve(Experiment::SolitonStatic, Some(file), over).unwrap();
        assert_eq!(cfg.h, 0.2);
        assert_eq!(cfg.tend, 5.0);
        assert_eq!(cfg.bc, vec![BcKind::Msd]);
        assert_eq!(cfg.k, TimeStep::Fixed(0.006));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        let r = ExperimentConfig::resolve(Experiment::SolitonStatic, Some(json!({"hh": 1.0})), Map::new());
        assert!(matches!(r, Err(ConfigError::Parse(_))));
        let r = ExperimentConfig::resolve(Experiment::SolitonStatic, Some(json!({"h": -1.0})), Map::new());
        assert!(matches!(r, Err(ConfigError::Invalid(_))));
        let r = ExperimentConfig::resolve(Experiment::VortexSingle, Some(json!({"bc": ["1sd"]})), Map::new());
        assert!(matches!(r, Err(ConfigError::Invalid(_))));
        let r = ExperimentConfig::resolve(Experiment::VortexSingle, Some(json!({"experiment": "vortex-pair"})), Map::new());
        assert!(matches!(r, Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn time_step_and_backflow_forms() {
        assert_eq!("auto".parse::<TimeStep>().unwrap(), TimeStep::Auto(Auto::Auto));
        assert_eq!("0.01".parse::<TimeStep>().unwrap(), TimeStep::Fixed(0.01));
        assert!("fast".parse::<TimeStep>().is_err());
        let v: TimeStep = serde_json::from_value(json!("auto")).unwrap();
        assert_eq!(v, TimeStep::Auto(Auto::Auto));
        assert_eq!("none".parse::<Backflow>().unwrap(), Backflow::Mode(BackflowMode::None));
        assert_eq!("-0.5".parse::<Backflow>().unwrap(), Backflow::Velocity(-0.5));
        assert_eq!("1SD".parse::<BcKind>().unwrap(), BcKind::OneSided);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ExperimentConfig::defaults(Experiment::VortexRing);
        let back: ExperimentConfig = serde_json::from_value(serde_json::to_value(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, back);
    }
}
