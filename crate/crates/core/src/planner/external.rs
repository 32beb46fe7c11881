use std::fs::File;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::pddl::{parse_plan, Plan, PlanParseError};

/// Shell command template run with `sh -c`; `{domain}`, `{problem}` and
/// `{plan}` are replaced by file paths in a fresh temporary directory.
#[derive(Clone, Debug, PartialEq)]
pub struct ExternalPlanner {
    pub command: String,
    pub timeout: Duration,
    /// Exit codes meaning "no plan exists".
    pub unsolvable_codes: Vec<i32>,
}

impl ExternalPlanner {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalPlanner { command: command.into(), timeout: Duration::from_secs(300), unsolvable_codes: vec![11, 12] }
    }
}

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("command template lacks {0}")]
    MissingPlaceholder(&'static str),
    #[error("could not run planner: {0}")]
    Spawn(String),
    #[error("planner exited with code {code}: {stderr}")]
    NonZeroExit { code: i32, stderr: String },
    #[error("planner reports no plan (exit code {0})")]
    Unsolvable(i32),
    #[error("planner output: {0}")]
    Parse(#[from] PlanParseError),
    #[error("planner wrote no plan file")]
    NoPlanFile,
    #[error("planner timed out after {0:?}")]
    Timeout(Duration),
}

fn excerpt(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap_or_default();
    let tail: Vec<&str> = text.lines().rev().take(10).collect();
    tail.into_iter().rev().collect::<Vec<_>>().join("\n")
}

pub fn solve_external(domain_text: &str, problem_text: &str, cfg: &ExternalPlanner) -> Result<Plan, ExternalError> {
    for p in ["{domain}", "{problem}", "{plan}"] {
        if !cfg.command.contains(p) {
            return Err(ExternalError::MissingPlaceholder(p));
        }
    }
    let dir = tempfile::tempdir().map_err(|e| ExternalError::Spawn(e.to_string()))?;
    let domain = dir.path().join("domain.pddl");
    let problem = dir.path().join("problem.pddl");
    let plan = dir.path().join("plan.txt");
    let stderr = dir.path().join("stderr.txt");
    let io = |e: std::io::Error| ExternalError::Spawn(e.to_string());
    std::fs::write(&domain, domain_text).map_err(io)?;
    std::fs::write(&problem, problem_text).map_err(io)?;
    let cmd = cfg
        .command
        .replace("{domain}", &domain.to_string_lossy())
        .replace("{problem}", &problem.to_string_lossy())
        .replace("{plan}", &plan.to_string_lossy());
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .current_dir(dir.path())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(File::create(&stderr).map_err(io)?)
        .spawn()
        .map_err(io)?;
    let start = Instant::now();
    let status = loop {
        if let Some(s) = child.try_wait().map_err(io)? {
            break s;
        }
        if start.elapsed() > cfg.timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ExternalError::Timeout(cfg.timeout));
        }
        std::thread::sleep(Duration::from_millis(10));
    };
    let code = status.code().unwrap_or(-1);
    if cfg.unsolvable_codes.contains(&code) {
        return Err(ExternalError::Unsolvable(code));
    }
    if !status.success() {
        return Err(ExternalError::NonZeroExit { code, stderr: excerpt(&stderr) });
    }
    // Some planners number their plan files.
    let numbered = dir.path().join("plan.txt.1");
    let path = if plan.exists() { plan } else if numbered.exists() { numbered } else { return Err(ExternalError::NoPlanFile) };
    let text = std::fs::read_to_string(&path).map_err(io)?;
    Ok(parse_plan(&text)?)
}
