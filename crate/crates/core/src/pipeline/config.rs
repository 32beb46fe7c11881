use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::expand::{AnchorAlias, NameTable};
use crate::forge::RobotConfig;
use crate::grounding::{GrounderSpec, RemoteSpec, RetrieverSpec};
use crate::planner::{ExternalPlanner, SearchLimits};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Engine {
    Internal,
    External(ExternalPlanner),
}

/// Everything a pipeline run needs besides the instruction.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub map: PathBuf,
    pub domain: PathBuf,
    pub names: NameTable,
    pub doors: bool,
    pub costs: bool,
    pub aliases: Vec<AnchorAlias>,
    pub robot: RobotConfig,
    pub retriever: Option<RetrieverSpec>,
    pub grounder: Option<GrounderSpec>,
    pub remote: RemoteSpec,
    pub keep_all_doors: bool,
    pub engine: Engine,
    pub limits: SearchLimits,
    pub max_ground_actions: usize,
    pub out_dir: PathBuf,
    pub parallelism: usize,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RawExpansion {
    names: Option<String>,
    doors: Option<bool>,
    costs: Option<bool>,
    anchor_aliases: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobot {
    #[serde(default = "default_robot")]
    name: String,
    #[serde(default = "default_hands")]
    hands: Vec<String>,
    start: String,
}

fn default_robot() -> String {
    "robot".into()
}

fn default_hands() -> Vec<String> {
    vec!["hand".into()]
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RawEngine {
    kind: Option<String>,
    command: Option<String>,
    timeout_secs: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RawLimits {
    max_expansions: Option<u64>,
    max_seconds: Option<f64>,
    max_open_size: Option<usize>,
    max_ground_actions: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RawRemote {
    endpoint: Option<String>,
    model: Option<String>,
    timeout_secs: Option<f64>,
    max_retries: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    map: PathBuf,
    domain: PathBuf,
    robot: RawRobot,
    #[serde(default)]
    expansion: RawExpansion,
    retriever: Option<String>,
    grounder: Option<String>,
    #[serde(default)]
    keep_all_doors: bool,
    #[serde(default)]
    engine: RawEngine,
    #[serde(default)]
    limits: RawLimits,
    #[serde(default)]
    remote: RawRemote,
    out_dir: Option<PathBuf>,
    parallelism: Option<usize>,
}

fn secs(x: f64, what: &str) -> Result<Duration, ConfigError> {
    Duration::try_from_secs_f64(x).map_err(|_| ConfigError::Invalid(format!("{what} must be a non-negative number of seconds")))
}

impl PipelineConfig {
    /// Defaults around the three required paths.
    pub fn new(map: impl Into<PathBuf>, domain: impl Into<PathBuf>, robot: RobotConfig) -> Self {
        PipelineConfig {
            map: map.into(),
            domain: domain.into(),
            names: NameTable::default(),
            doors: true,
            costs: true,
            aliases: vec![],
            robot,
            retriever: None,
            grounder: None,
            remote: RemoteSpec::default(),
            keep_all_doors: false,
            engine: Engine::Internal,
            limits: SearchLimits::default(),
            max_ground_actions: crate::planner::GroundOptions::default().max_actions,
            out_dir: PathBuf::from("out"),
            parallelism: 1,
        }
    }

    /// Parses TOML; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let robot = RobotConfig {
            name: raw.robot.name,
            hands: raw.robot.hands,
            start: raw.robot.start,
            holding: Default::default(),
        };
        let mut c = PipelineConfig::new(base.join(raw.map), base.join(raw.domain), robot);
        let x = raw.expansion;
        if let Some(n) = x.names {
            c.names = NameTable::by_label(&n).ok_or_else(|| ConfigError::Invalid(format!("unknown name table {n:?}")))?;
        }
        c.doors = x.doors.unwrap_or(true);
        c.costs = x.costs.unwrap_or(true);
        for a in &x.anchor_aliases {
            c.aliases.push(AnchorAlias::parse(a).ok_or_else(|| ConfigError::Invalid(format!("bad anchor alias {a:?}")))?);
        }
        let r = raw.remote;
        if let Some(e) = r.endpoint {
            c.remote.endpoint = e;
        }
        if let Some(m) = r.model {
            c.remote.model = m;
        }
        if let Some(t) = r.timeout_secs {
            c.remote.timeout = secs(t, "remote.timeout_secs")?;
        }
        if let Some(n) = r.max_retries {
            c.remote.max_retries = n;
        }
        if let Some(s) = raw.retriever {
            c.retriever = Some(RetrieverSpec::parse(&s, base, &c.remote).map_err(ConfigError::Invalid)?);
        }
        if let Some(s) = raw.grounder {
            c.grounder = Some(GrounderSpec::parse(&s, base, &c.remote).map_err(ConfigError::Invalid)?);
        }
        c.keep_all_doors = raw.keep_all_doors;
        c.engine = match (raw.engine.kind.as_deref(), raw.engine.command) {
            (None | Some("internal"), None) => Engine::Internal,
            (None | Some("external"), Some(cmd)) => {
                let mut e = ExternalPlanner::new(cmd);
                if let Some(t) = raw.engine.timeout_secs {
                    e.timeout = secs(t, "engine.timeout_secs")?;
                }
                Engine::External(e)
            }
            (Some("external"), None) => return Err(ConfigError::Invalid("external engine needs a command".into())),
            (Some(k), _) => return Err(ConfigError::Invalid(format!("engine {k:?} with these settings"))),
        };
        let l = raw.limits;
        c.limits.max_expansions = l.max_expansions.unwrap_or(c.limits.max_expansions);
        c.limits.max_seconds = l.max_seconds.unwrap_or(c.limits.max_seconds);
        c.limits.max_open_size = l.max_open_size.unwrap_or(c.limits.max_open_size);
        c.max_ground_actions = l.max_ground_actions.unwrap_or(c.max_ground_actions);
        if let Some(d) = raw.out_dir {
            c.out_dir = base.join(d);
        }
        c.parallelism = raw.parallelism.unwrap_or(1);
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.into(), msg: e.to_string() })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (what, p) in [("map", &self.map), ("domain", &self.domain)] {
            if !p.exists() {
                return Err(ConfigError::Invalid(format!("{what} file {} does not exist", p.display())));
            }
        }
        if self.parallelism == 0 {
            return Err(ConfigError::Invalid("parallelism must be at least 1".into()));
        }
        let h = &self.robot.hands;
        if h.is_empty() || h.len() > 2 || (h.len() == 2 && h[0] == h[1]) {
            return Err(ConfigError::Invalid("robot needs one or two distinct hands".into()));
        }
        if self.limits.max_seconds.is_nan() || self.limits.max_seconds <= 0.0 {
            return Err(ConfigError::Invalid("limits.max_seconds must be positive".into()));
        }
        Ok(())
    }
}
