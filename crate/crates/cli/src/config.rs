//! Plain-text run configuration: `[section]` headers, `key = value` lines
//! and `#` comments.
//!
//! ```text
//! [generator]
//! preset = gaussian        # gaussian | uniform | custom
//! noise_scale = 0.01
//!
//! [experiment]
//! n_grid = 100, 300, 1000
//! trials = 10
//! solver = am
//! p = 1
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use ini::{Ini, ParseOption, Properties};
use mlrmip::synth::{Covariates, NoiseKind};
use mlrmip::{ClusterReg, CoefficientSet, GeneratorSpec, LossConfig, RegConstraint, RegKind};

use crate::CliError;

const GENERATOR_KEYS: &[&str] = &["preset", "n", "weights", "covariates", "noise", "noise_scale", "seed"];
const EXPERIMENT_KEYS: &[&str] = &[
    "n_grid",
    "trials",
    "solver",
    "p",
    "q",
    "bound",
    "seed",
    "output_dir",
    "restarts",
    "time_limit",
    "tolerance",
];
const DIAGNOSE_KEYS: &[&str] = &["checkpoints", "p", "q", "bound", "delta_slack", "output_dir"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Bnb,
    Brute,
    Am,
}

impl FromStr for Solver {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "bnb" => Ok(Self::Bnb),
            "brute" => Ok(Self::Brute),
            "am" => Ok(Self::Am),
            other => Err(CliError::Usage(format!(
                "unknown solver `{other}` (expected bnb, brute or am)"
            ))),
        }
    }
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bnb => "bnb",
            Self::Brute => "brute",
            Self::Am => "am",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub solver: Solver,
    pub loss: LossConfig,
    pub reg: RegConstraint,
    /// Trial `t` draws its dataset and solver randomness from `seed + t`.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub restarts: usize,
    pub time_limit: Duration,
    /// A cluster counts as recovered when its matched error is at most this.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseConfig {
    /// Generated at the largest checkpoint; must have a single cluster.
    pub generator: GeneratorSpec,
    pub checkpoints: Vec<usize>,
    pub loss: LossConfig,
    pub reg: ClusterReg,
    pub delta_slack: f64,
    pub output_dir: PathBuf,
}

pub struct Config {
    ini: Ini,
    origin: String,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let opt = ParseOption {
            enabled_quote: false,
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| CliError::Usage(format!("{origin}: {e}")))?;
        if let Some(keys) = ini.general_section().iter().next() {
            return Err(CliError::Usage(format!(
                "{origin}: key `{}` outside any section",
                keys.0
            )));
        }
        Ok(Self {
            ini,
            origin: origin.to_string(),
        })
    }

    fn usage(&self, msg: impl std::fmt::Display) -> CliError {
        CliError::Usage(format!("{}: {msg}", self.origin))
    }

    fn section(&self, name: &str, allowed: &[&str]) -> Result<Option<&Properties>, CliError> {
        let Some(props) = self.ini.section(Some(name)) else {
            return Ok(None);
        };
        for (key, _) in props.iter() {
            if !allowed.contains(&key) && !(name == "generator" && is_beta_key(key)) {
                return Err(self.usage(format!("unknown key `{key}` in [{name}]")));
            }
        }
        Ok(Some(props))
    }

    fn check_sections(&self, allowed: &[&str]) -> Result<(), CliError> {
        for name in self.ini.sections().flatten() {
            if !allowed.contains(&name) {
                return Err(self.usage(format!("unexpected section [{name}]")));
            }
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, props: Option<&Properties>, section: &str, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match props.and_then(|p| p.get(key)).map(strip_comment) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| self.usage(format!("[{section}] {key} = `{raw}`: {e}"))),
        }
    }

    fn list<T: FromStr>(&self, props: Option<&Properties>, section: &str, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match props.and_then(|p| p.get(key)).map(strip_comment) {
            None => Ok(None),
            Some(raw) => parse_list(raw)
                .map(Some)
                .map_err(|e| self.usage(format!("[{section}] {key}: {e}"))),
        }
    }

    /// The `[generator]` section on top of its preset.
    pub fn generator(&self) -> Result<GeneratorSpec, CliError> {
        let s = "generator";
        let props = self.section(s, GENERATOR_KEYS)?;
        let preset: String = self.get(props, s, "preset")?.unwrap_or_else(|| "custom".into());
        let mut spec = match preset.as_str() {
            "gaussian" => GeneratorSpec::gaussian_experiment(1000, 0.01, 0),
            "uniform" => GeneratorSpec::uniform_experiment(1000, 0.01, 0),
            "custom" => GeneratorSpec {
                n: 1000,
                weights: Vec::new(),
                coefficients: CoefficientSet::zeros(0, 0),
                covariates: Covariates::Uniform01WithIntercept,
                noise: NoiseKind::Gaussian,
                noise_scale: 0.01,
                seed: 0,
            },
            other => return Err(self.usage(format!("unknown preset `{other}`"))),
        };

        let mut betas: Vec<(usize, Vec<f64>)> = Vec::new();
        if let Some(p) = props {
            for (key, raw) in p.iter() {
                if let Some(k) = key.strip_prefix("beta_").and_then(|k| k.parse::<usize>().ok()) {
                    let v = parse_list(strip_comment(raw)).map_err(|e| self.usage(format!("[{s}] {key}: {e}")))?;
                    betas.push((k, v));
                }
            }
        }
        if !betas.is_empty() {
            betas.sort_by_key(|b| b.0);
            if betas.iter().enumerate().any(|(i, b)| b.0 != i) {
                return Err(self.usage("coefficients must be numbered beta_0, beta_1, ... without gaps"));
            }
            spec.coefficients =
                CoefficientSet::new(betas.into_iter().map(|b| b.1).collect()).map_err(|e| self.usage(e))?;
            if spec.weights.len() != spec.coefficients.k() {
                spec.weights = vec![1.0 / spec.coefficients.k() as f64; spec.coefficients.k()];
            }
        } else if preset == "custom" {
            return Err(self.usage("custom generator needs beta_0, beta_1, ..."));
        }
        if let Some(w) = self.list(props, s, "weights")? {
            spec.weights = w;
        }
        if let Some(n) = self.get(props, s, "n")? {
            spec.n = n;
        }
        if let Some(c) = self.get::<String>(props, s, "covariates")? {
            spec.covariates = match c.as_str() {
                "uniform_intercept" => Covariates::Uniform01WithIntercept,
                "gaussian" => Covariates::IidGaussian,
                other => return Err(self.usage(format!("unknown covariates `{other}`"))),
            };
        }
        if let Some(noise) = self.get::<String>(props, s, "noise")? {
            spec.noise = NoiseKind::parse(&noise).map_err(|e| self.usage(e))?;
        }
        if let Some(v) = self.get(props, s, "noise_scale")? {
            spec.noise_scale = v;
        }
        if let Some(v) = self.get(props, s, "seed")? {
            spec.seed = v;
        }
        spec.validate().map_err(|e| self.usage(e))?;
        Ok(spec)
    }

    pub fn generate_config(&self) -> Result<GeneratorSpec, CliError> {
        self.check_sections(&["generator"])?;
        self.generator()
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        self.check_sections(&["generator", "experiment"])?;
        let generator = self.generator()?;
        let s = "experiment";
        let props = self.section(s, EXPERIMENT_KEYS)?;
        let n_grid: Vec<usize> = self
            .list(props, s, "n_grid")?
            .ok_or_else(|| self.usage("[experiment] n_grid is required"))?;
        if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(self.usage("n_grid must be nonempty and strictly increasing"));
        }
        let trials = self.get(props, s, "trials")?.unwrap_or(1);
        if trials == 0 {
            return Err(self.usage("trials must be at least 1"));
        }
        let k = generator.k();
        let loss = self.loss(props, s)?;
        let reg = self.reg(props, s, k)?;
        let time_limit: f64 = self.get(props, s, "time_limit")?.unwrap_or(600.0);
        let time_limit = Duration::try_from_secs_f64(time_limit)
            .map_err(|_| self.usage("time_limit must be a positive number of seconds"))?;
        let tolerance: f64 = self.get(props, s, "tolerance")?.unwrap_or(1e-8);
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(self.usage("tolerance must be finite and >= 0"));
        }
        Ok(ExperimentConfig {
            generator,
            n_grid,
            trials,
            solver: self.get(props, s, "solver")?.unwrap_or(Solver::Am),
            loss,
            reg,
            seed: self.get(props, s, "seed")?.unwrap_or(0),
            output_dir: self.get(props, s, "output_dir")?.unwrap_or_else(|| PathBuf::from(".")),
            restarts: self.get(props, s, "restarts")?.unwrap_or(32),
            time_limit,
            tolerance,
        })
    }

    pub fn diagnose(&self) -> Result<DiagnoseConfig, CliError> {
        self.check_sections(&["generator", "diagnose"])?;
        let mut generator = self.generator()?;
        if generator.k() != 1 {
            return Err(self.usage("rate diagnostics need a single-cluster generator"));
        }
        let s = "diagnose";
        let props = self.section(s, DIAGNOSE_KEYS)?;
        let checkpoints: Vec<usize> = self
            .list(props, s, "checkpoints")?
            .unwrap_or_else(|| vec![100, 1_000, 10_000, 100_000]);
        generator.n = *checkpoints
            .last()
            .ok_or_else(|| self.usage("checkpoints must be nonempty"))?;
        let reg = self.reg(props, s, 1)?.cluster(0);
        Ok(DiagnoseConfig {
            generator,
            checkpoints,
            loss: self.loss(props, s)?,
            reg,
            delta_slack: self.get(props, s, "delta_slack")?.unwrap_or(0.1),
            output_dir: self.get(props, s, "output_dir")?.unwrap_or_else(|| PathBuf::from(".")),
        })
    }

    fn loss(&self, props: Option<&Properties>, s: &str) -> Result<LossConfig, CliError> {
        let p: u8 = self.get(props, s, "p")?.unwrap_or(2);
        LossConfig::from_p(p).map_err(|e| self.usage(e))
    }

    fn reg(&self, props: Option<&Properties>, s: &str, k: usize) -> Result<RegConstraint, CliError> {
        let q: Option<String> = self.get(props, s, "q")?;
        let bound = props.and_then(|p| p.get("bound")).map(strip_comment);
        reg_from_strings(q.as_deref(), bound, k).map_err(|e| self.usage(e))
    }
}

fn is_beta_key(key: &str) -> bool {
    key.strip_prefix("beta_").is_some_and(|k| k.parse::<usize>().is_ok())
}

/// Drops a trailing `# ...` that follows whitespace.
fn strip_comment(raw: &str) -> &str {
    let cut = raw
        .char_indices()
        .find(|&(i, c)| c == '#' && raw[..i].ends_with(char::is_whitespace))
        .map_or(raw.len(), |(i, _)| i);
    raw[..cut].trim()
}

pub(crate) fn parse_list<T: FromStr>(raw: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

/// `q` is none, l0/l1/l2 or 0/1/2; `bound` is one value for every cluster or
/// a comma list with one per cluster.
pub fn reg_from_strings(q: Option<&str>, bound: Option<&str>, k: usize) -> Result<RegConstraint, String> {
    let kind = RegKind::parse(q.unwrap_or("none")).map_err(|e| e.to_string())?;
    if kind == RegKind::None {
        if bound.is_some() {
            return Err("a norm bound was given without a norm (set q)".into());
        }
        return Ok(RegConstraint::none());
    }
    let bounds: Vec<f64> = parse_list(bound.ok_or(format!("q = {kind} needs a bound"))?)?;
    let bounds = match bounds.len() {
        1 => vec![bounds[0]; k],
        n if n == k => bounds,
        n => return Err(format!("{n} bounds given for K = {k} clusters")),
    };
    RegConstraint::new(kind, bounds).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_config_with_comments_and_defaults() {
        let text = "\
# sweep
[generator]
preset = uniform   # two clusters
noise_scale = 0.05

[experiment]
n_grid = 10, 20,40 # small
trials = 3
solver = bnb
p = 1
q = l1
bound = 2
";
        let cfg = Config::parse(text, "t").unwrap().experiment().unwrap();
        assert_eq!(cfg.n_grid, vec![10, 20, 40]);
        assert_eq!(cfg.solver, Solver::Bnb);
        assert_eq!(cfg.loss, LossConfig::Abs);
        assert_eq!(cfg.reg, RegConstraint::uniform(RegKind::L1, 2, 2.0).unwrap());
        assert_eq!(cfg.generator.noise_scale, 0.05);
        assert_eq!(cfg.generator.coefficients.beta(0), &[-1.61, 1.25]);
        assert_eq!(cfg.tolerance, 1e-8);
    }

    #[test]
    fn custom_generator() {
        let text = "[generator]\nbeta_1 = 1, 2\nbeta_0 = 0, 0\nweights = 0.25, 0.75\ncovariates = gaussian\nn = 12\nseed = 4\n";
        let g = Config::parse(text, "t").unwrap().generate_config().unwrap();
        assert_eq!(g.coefficients.betas(), &[vec![0.0, 0.0], vec![1.0, 2.0]]);
        assert_eq!(g.weights, vec![0.25, 0.75]);
        assert_eq!(g.covariates, Covariates::IidGaussian);
        assert_eq!((g.n, g.seed), (12, 4));
    }

    #[test]
    fn errors_name_the_problem() {
        let cases = [
            ("[generator]\npreset = gaussian\nnoies = 1\n", "noies"),
            ("[generatr]\npreset = gaussian\n", "generatr"),
            ("[generator]\npreset = gaussian\n[experiment]\ntrials = 2\n", "n_grid"),
            (
                "[generator]\npreset = gaussian\n[experiment]\nn_grid = 5, 3\n",
                "increasing",
            ),
            (
                "[generator]\npreset = gaussian\n[experiment]\nn_grid = 5\ntrials = x\n",
                "trials",
            ),
            ("[generator]\nbeta_0 = 1\nbeta_2 = 1\n", "gaps"),
            (
                "[generator]\npreset = gaussian\n[experiment]\nn_grid = 5\nq = l1\n",
                "bound",
            ),
            ("n = 3\n[generator]\npreset = gaussian\n", "outside"),
        ];
        for (text, needle) in cases {
            let err = Config::parse(text, "t")
                .and_then(|c| c.experiment())
                .unwrap_err()
                .to_string();
            assert!(err.contains(needle), "{err} lacks {needle}");
        }
    }

    #[test]
    fn reg_strings() {
        assert_eq!(reg_from_strings(None, None, 2).unwrap(), RegConstraint::none());
        assert_eq!(
            reg_from_strings(Some("2"), Some("1,3"), 2).unwrap().bounds(),
            &[1.0, 3.0]
        );
        assert!(reg_from_strings(Some("l0"), Some("1.5"), 2).is_err());
        assert!(reg_from_strings(Some("l1"), Some("1,2,3"), 2).is_err());
        assert!(reg_from_strings(None, Some("1"), 2).is_err());
    }
}
