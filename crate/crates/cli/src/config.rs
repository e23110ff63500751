//! Experiment configuration: a TOML file with one section per concern.
//!
//! ```toml
//! [problem]
//! case = "spike"        # builtin case, or give all six field files instead
//! nodes = 63
//!
//! [bounds]              # optional; overrides the case's structural constants
//! lambda = 0.5
//!
//! [solver]
//! tolerance = 1e-8
//! truncation = "barrier" # barrier | auto | none
//!
//! [ladder]
//! schedule = [1, 2, 4, 8, 16, 32, 64]
//! start = "warm"         # warm | cold
//!
//! [audit]
//! delta = 0.01
//!
//! [mms]
//! case = "coupled-2d"
//! resolutions = [16, 32, 64]
//! min_order = 1.5        # optional order audit
//!
//! [output]
//! dir = "out"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use degen_core::builtin::{builtin, DEFAULT_NODES};
use degen_core::coupled::FixedPointConfig;
use degen_core::field::ScalarField;
use degen_core::ladder::{LadderSchedule, StartMode};
use degen_core::problem::{Equation, ProblemSpec, StructuralBounds};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub ladder: LadderSection,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default)]
    pub mms: MmsSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory the config was read from; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub case: Option<String>,
    pub nodes: Option<usize>,
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
    pub f: Option<PathBuf>,
    #[serde(rename = "A")]
    pub big_a: Option<PathBuf>,
    #[serde(rename = "B")]
    pub big_b: Option<PathBuf>,
    #[serde(rename = "F")]
    pub big_f: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    /// Levels the maximum principle makes inactive.
    #[default]
    Barrier,
    /// `ρ = ‖f‖∞`, `σ = ‖F‖∞`.
    Auto,
    None,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub damping: Option<f64>,
    pub linear_tolerance: Option<f64>,
    #[serde(default)]
    pub truncation: Truncation,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    #[default]
    Warm,
    Cold,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSection {
    pub schedule: Option<Vec<u32>>,
    #[serde(default)]
    pub start: Start,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    /// Relative size of the worst-case sets.
    pub delta: Option<f64>,
    /// Thresholds `k`; quartiles of `|u_n|` when absent.
    pub k_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmsSection {
    pub case: Option<String>,
    pub resolutions: Option<Vec<usize>>,
    /// Audit the observed orders on the finest pair of grids against this.
    pub min_order: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_MMS_CASE: &str = "coupled-2d";
pub const DEFAULT_RESOLUTIONS: [usize; 3] = [16, 32, 64];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self, cli_override: Option<&Path>) -> PathBuf {
        match (cli_override, &self.output.dir) {
            (Some(dir), _) => dir.to_path_buf(),
            (None, Some(dir)) => self.resolve(dir),
            (None, None) => PathBuf::from("out"),
        }
    }

    pub fn fixed_point(&self) -> Result<FixedPointConfig> {
        let d = FixedPointConfig::default();
        let s = &self.solver;
        let cfg = FixedPointConfig {
            tolerance: s.tolerance.unwrap_or(d.tolerance),
            max_iterations: s.max_iterations.unwrap_or(d.max_iterations),
            damping: s.damping.unwrap_or(d.damping),
            linear_tolerance: s.linear_tolerance.unwrap_or(d.linear_tolerance),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn schedule(&self) -> Result<LadderSchedule> {
        Ok(match &self.ladder.schedule {
            Some(ns) => LadderSchedule::new(ns.clone())?,
            None => LadderSchedule::default(),
        })
    }

    pub fn start_mode(&self) -> StartMode {
        match self.ladder.start {
            Start::Warm => StartMode::Warm,
            Start::Cold => StartMode::Cold,
        }
    }

    pub fn delta(&self) -> Result<f64> {
        let delta = self.audit.delta.unwrap_or(DEFAULT_DELTA);
        if !(delta > 0.0 && delta <= 1.0) {
            bail!("audit.delta must lie in (0, 1], got {delta}");
        }
        Ok(delta)
    }

    /// The problem from a builtin case or from field files, with any
    /// `[bounds]` overrides applied and validated.
    pub fn problem(&self) -> Result<ProblemSpec> {
        let p = &self.problem;
        let files = [&p.a, &p.b, &p.f, &p.big_a, &p.big_b, &p.big_f];
        let mut spec = match (&p.case, files.iter().any(|f| f.is_some())) {
            (Some(_), true) => bail!("problem.case and field files are mutually exclusive"),
            (None, false) => bail!("problem.case or the six field files a, b, f, A, B, F must be given"),
            (Some(name), false) => builtin(name, p.nodes.unwrap_or(DEFAULT_NODES))?,
            (None, true) => {
                if p.nodes.is_some() {
                    bail!("problem.nodes applies to builtin cases only; field files carry their own grid");
                }
                let [a, b, f, big_a, big_b, big_f] = files.map(|f| self.read_field(f.as_deref()));
                let (a, b, f, big_a, big_b, big_f) = (a?, b?, f?, big_a?, big_b?, big_f?);
                let grid = *a.grid();
                let range = |x: &ScalarField, y: &ScalarField| {
                    x.values().iter().chain(y.values()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
                };
                let (alpha, beta) = range(&a, &big_a);
                let (lambda, gamma) = range(&b, &big_b);
                ProblemSpec::new(
                    grid,
                    Equation { diffusion: a, offset: b, source: f },
                    Equation { diffusion: big_a, offset: big_b, source: big_f },
                    StructuralBounds { alpha, beta, lambda, gamma },
                )
            }
        };
        let o = &self.bounds;
        let cur = spec.bounds;
        spec.bounds = StructuralBounds::new(
            o.alpha.unwrap_or(cur.alpha),
            o.beta.unwrap_or(cur.beta),
            o.lambda.unwrap_or(cur.lambda),
            o.gamma.unwrap_or(cur.gamma),
        )?;
        spec.validate()?;
        Ok(spec)
    }

    fn read_field(&self, path: Option<&Path>) -> Result<ScalarField> {
        let Some(path) = path else { bail!("field files a, b, f, A, B, F must all be given") };
        let path = self.resolve(path);
        let file = fs::File::open(&path).with_context(|| format!("cannot open field file {}", path.display()))?;
        ScalarField::read_from(std::io::BufReader::new(file)).with_context(|| format!("in field file {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg.fixed_point().unwrap(), FixedPointConfig::default());
        assert_eq!(cfg.schedule().unwrap(), LadderSchedule::default());
        assert_eq!(cfg.delta().unwrap(), DEFAULT_DELTA);
        assert!(cfg.problem().is_err());
    }

    #[test]
    fn unknown_key_names_line_and_key() {
        let err = ExperimentConfig::parse("[problem]\ncase = \"zero\"\nnodez = 7\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("line 3") && msg.contains("nodez"), "{msg}");
    }

    #[test]
    fn zero_lambda_is_rejected() {
        let cfg = ExperimentConfig::parse("[problem]\ncase = \"zero\"\nnodes = 5\n[bounds]\nlambda = 0\n").unwrap();
        let msg = format!("{:#}", cfg.problem().unwrap_err());
        assert!(msg.contains("lambda must be positive"), "{msg}");
    }

    #[test]
    fn case_and_files_are_exclusive() {
        let cfg = ExperimentConfig::parse("[problem]\ncase = \"zero\"\na = \"a.field\"\n").unwrap();
        assert!(cfg.problem().is_err());
    }

    #[test]
    fn missing_field_file_names_path() {
        let text = "[problem]\na = \"nowhere/a.field\"\nb = \"b\"\nf = \"f\"\nA = \"A\"\nB = \"B\"\nF = \"F\"\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let msg = format!("{:#}", cfg.problem().unwrap_err());
        assert!(msg.contains("nowhere/a.field"), "{msg}");
    }

    #[test]
    fn bounds_override_is_checked_against_fields() {
        let cfg = ExperimentConfig::parse("[problem]\ncase = \"unit-square-constant\"\nnodes = 5\n[bounds]\nalpha = 2\nbeta = 3\n").unwrap();
        assert!(cfg.problem().is_err());
    }
}
