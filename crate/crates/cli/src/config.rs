//! Flat `key = value` experiment configuration.
//!
//! Sources are layered: parameter defaults, then the config file, then each
//! `--set` override in order, then `SHAPEGEO_SEED`. Later layers win.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "SHAPEGEO_SEED";

/// The experiments exposed as subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    Grossman,
    VanishingL2,
    SphereBvp,
    ExpCircle,
    Blowup,
    LandmarkGeodesic,
    LddmmFlow,
    SobolevProps,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Grossman,
        Experiment::VanishingL2,
        Experiment::SphereBvp,
        Experiment::ExpCircle,
        Experiment::Blowup,
        Experiment::LandmarkGeodesic,
        Experiment::LddmmFlow,
        Experiment::SobolevProps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Grossman => "grossman",
            Experiment::VanishingL2 => "vanishing-l2",
            Experiment::SphereBvp => "sphere-bvp",
            Experiment::ExpCircle => "exp-circle",
            Experiment::Blowup => "blowup",
            Experiment::LandmarkGeodesic => "landmark-geodesic",
            Experiment::LddmmFlow => "lddmm-flow",
            Experiment::SobolevProps => "sobolev-props",
        }
    }

    /// Randomized experiments refuse to run without a seed.
    pub fn randomized(self) -> bool {
        matches!(
            self,
            Experiment::SphereBvp
                | Experiment::LandmarkGeodesic
                | Experiment::LddmmFlow
                | Experiment::SobolevProps
        )
    }

    pub fn params(self) -> &'static [ParamSpec] {
        use Kind::*;
        match self {
            Experiment::Grossman => {
                const {
                    &[
                        ParamSpec::new("m", "24", Int { min: 2, max: 4096 }),
                        ParamSpec::new("n_list", "1..20", IntList { min: 1, max: 4095 }),
                        ParamSpec::new("log_scale", "false", Bool),
                    ]
                }
            }
            Experiment::VanishingL2 => {
                const {
                    &[
                        ParamSpec::new("levels", "3", Int { min: 1, max: 3 }),
                        ParamSpec::new(
                            "max_iter",
                            "400",
                            Int {
                                min: 1,
                                max: 100_000,
                            },
                        ),
                    ]
                }
            }
            Experiment::SphereBvp => {
                const {
                    &[
                        ParamSpec::new("m", "10", Int { min: 2, max: 256 }),
                        ParamSpec::new(
                            "pairs",
                            "20",
                            Int {
                                min: 1,
                                max: 10_000,
                            },
                        ),
                        ParamSpec::new("n_steps", "64", Int { min: 2, max: 4096 }),
                        ParamSpec::new(
                            "max_iter",
                            "20000",
                            Int {
                                min: 1,
                                max: 1_000_000,
                            },
                        ),
                    ]
                }
            }
            Experiment::ExpCircle => {
                const {
                    &[
                        ParamSpec::new("n", "256", PowerOfTwo { min: 16, max: 8192 }),
                        ParamSpec::new(
                            "amp",
                            "0.5",
                            Real {
                                min: 0.0,
                                max: 0.95,
                            },
                        ),
                        ParamSpec::new(
                            "t_max",
                            "3",
                            Real {
                                min: 0.0,
                                max: 100.0,
                            },
                        ),
                        ParamSpec::new(
                            "samples",
                            "13",
                            Int {
                                min: 2,
                                max: 10_000,
                            },
                        ),
                        ParamSpec::new("order", "3", Int { min: 1, max: 64 }),
                        ParamSpec::new("psi_amp", "0.2", Real { min: 0.0, max: 0.3 }),
                    ]
                }
            }
            Experiment::Blowup => {
                const {
                    &[
                        ParamSpec::new(
                            "x0",
                            "2",
                            Real {
                                min: 1e-3,
                                max: 1e6,
                            },
                        ),
                        ParamSpec::new(
                            "t_end",
                            "1",
                            Real {
                                min: 1e-6,
                                max: 1e6,
                            },
                        ),
                        ParamSpec::new(
                            "samples",
                            "50",
                            Int {
                                min: 2,
                                max: 100_000,
                            },
                        ),
                    ]
                }
            }
            Experiment::LandmarkGeodesic => {
                const {
                    &[
                        ParamSpec::new("landmarks", "3", Int { min: 1, max: 32 }),
                        ParamSpec::new("dim", "2", Int { min: 1, max: 3 }),
                        ParamSpec::new(
                            "kernel",
                            "gaussian",
                            Choice(&["gaussian", "sobolev1", "sobolev2"]),
                        ),
                        ParamSpec::new(
                            "sigma",
                            "1",
                            Real {
                                min: 0.05,
                                max: 100.0,
                            },
                        ),
                        ParamSpec::new("pairs", "5", Int { min: 1, max: 1000 }),
                        ParamSpec::new("n_steps", "16", Int { min: 2, max: 1024 }),
                        ParamSpec::new(
                            "spread",
                            "1",
                            Real {
                                min: 0.1,
                                max: 100.0,
                            },
                        ),
                        ParamSpec::new(
                            "perturb",
                            "0.3",
                            Real {
                                min: 0.0,
                                max: 10.0,
                            },
                        ),
                    ]
                }
            }
            Experiment::LddmmFlow => {
                const {
                    &[
                        ParamSpec::new(
                            "lo",
                            "-10",
                            Real {
                                min: -1e3,
                                max: 1e3,
                            },
                        ),
                        ParamSpec::new(
                            "hi",
                            "10",
                            Real {
                                min: -1e3,
                                max: 1e3,
                            },
                        ),
                        ParamSpec::new(
                            "n",
                            "512",
                            Int {
                                min: 4,
                                max: 1 << 16,
                            },
                        ),
                        ParamSpec::new("knots", "10", Int { min: 1, max: 1000 }),
                        ParamSpec::new("bumps", "3", Int { min: 1, max: 64 }),
                        ParamSpec::new(
                            "amp",
                            "0.5",
                            Real {
                                min: 0.0,
                                max: 10.0,
                            },
                        ),
                        ParamSpec::new(
                            "width",
                            "1",
                            Real {
                                min: 0.05,
                                max: 100.0,
                            },
                        ),
                        ParamSpec::new("interpolation", "linear", Choice(&["linear", "constant"])),
                    ]
                }
            }
            Experiment::SobolevProps => {
                const {
                    &[
                        ParamSpec::new("n", "64", PowerOfTwo { min: 8, max: 4096 }),
                        ParamSpec::new(
                            "samples",
                            "500",
                            Int {
                                min: 1,
                                max: 100_000,
                            },
                        ),
                        ParamSpec::new("q", "1", Real { min: 0.0, max: 8.0 }),
                        ParamSpec::new("kmax", "31", Int { min: 1, max: 2047 }),
                    ]
                }
            }
        }
    }

    fn param(self, key: &str) -> Option<&'static ParamSpec> {
        self.params().iter().find(|p| p.key == key)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment '{s}'")))
    }
}

/// Admissible values of a parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Int {
        min: i64,
        max: i64,
    },
    PowerOfTwo {
        min: usize,
        max: usize,
    },
    Real {
        min: f64,
        max: f64,
    },
    Bool,
    Choice(&'static [&'static str]),
    /// Comma-separated integers and inclusive `a..b` ranges.
    IntList {
        min: i64,
        max: i64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub key: &'static str,
    pub default: &'static str,
    pub kind: Kind,
}

impl ParamSpec {
    const fn new(key: &'static str, default: &'static str, kind: Kind) -> Self {
        Self { key, default, kind }
    }

    fn validate(&self, raw: &str) -> Result<(), CliError> {
        let bad = |why: String| CliError::Config(format!("{} = '{raw}': {why}", self.key));
        match self.kind {
            Kind::Int { min, max } => {
                let v: i64 = raw.parse().map_err(|_| bad("expected an integer".into()))?;
                if !(min..=max).contains(&v) {
                    return Err(bad(format!("must lie in {min}..={max}")));
                }
            }
            Kind::PowerOfTwo { min, max } => {
                let v: usize = raw.parse().map_err(|_| bad("expected an integer".into()))?;
                if !v.is_power_of_two() || !(min..=max).contains(&v) {
                    return Err(bad(format!("must be a power of two in {min}..={max}")));
                }
            }
            Kind::Real { min, max } => {
                let v: f64 = raw.parse().map_err(|_| bad("expected a number".into()))?;
                if !v.is_finite() || v < min || v > max {
                    return Err(bad(format!("must lie in [{min}, {max}]")));
                }
            }
            Kind::Bool => {
                parse_bool(raw).ok_or_else(|| bad("expected true or false".into()))?;
            }
            Kind::Choice(options) => {
                if !options.contains(&raw) {
                    return Err(bad(format!("expected one of {}", options.join(", "))));
                }
            }
            Kind::IntList { min, max } => {
                let list = parse_int_list(raw).map_err(bad)?;
                if list.is_empty() {
                    return Err(bad("list is empty".into()));
                }
                if let Some(v) = list.iter().find(|v| !(min..=max).contains(*v)) {
                    return Err(bad(format!("entry {v} outside {min}..={max}")));
                }
            }
        }
        Ok(())
    }
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn parse_int_list(raw: &str) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| format!("bad integer '{s}'"))
        };
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if b < a {
                    return Err(format!("empty range {part}"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    Ok(out)
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// ignored; repeated keys keep the last value.
pub fn parse_kv_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
        .map(|(i, line)| {
            parse_assignment(line).map_err(|e| CliError::Config(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Parses a single `key=value` assignment.
pub fn parse_assignment(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected key = value, found '{s}'")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(CliError::Config(format!("missing key in '{s}'")));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Fully resolved and validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Every parameter of the experiment, defaults filled in.
    values: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

/// Unresolved configuration sources for one invocation.
#[derive(Debug, Clone, Default)]
pub struct ConfigSources {
    pub file: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub out: Option<PathBuf>,
    /// Value of [`SEED_ENV`], if set.
    pub seed_env: Option<String>,
}

impl ConfigSources {
    /// Reads [`SEED_ENV`] from the process environment.
    pub fn with_env_seed(mut self) -> Self {
        self.seed_env = std::env::var(SEED_ENV).ok();
        self
    }
}

impl ExperimentConfig {
    pub fn resolve(experiment: Experiment, sources: &ConfigSources) -> Result<Self, CliError> {
        let mut assignments = match &sources.file {
            Some(path) => parse_kv_text(&read_config(path)?)?,
            None => Vec::new(),
        };
        for o in &sources.overrides {
            assignments.push(parse_assignment(o)?);
        }
        if let Some(seed) = &sources.seed_env {
            assignments.push(("seed".into(), seed.trim().to_string()));
        }
        Self::from_assignments(experiment, assignments, sources.out.clone())
    }

    /// Applies assignments in order on top of the defaults.
    pub fn from_assignments(
        experiment: Experiment,
        assignments: impl IntoIterator<Item = (String, String)>,
        out: Option<PathBuf>,
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> = experiment
            .params()
            .iter()
            .map(|p| (p.key.to_string(), p.default.to_string()))
            .collect();
        let mut seed = None;
        let mut out_key = None;
        for (k, v) in assignments {
            match k.as_str() {
                "experiment" => {
                    if v != experiment.name() {
                        return Err(CliError::Config(format!(
                            "config is for '{v}', not '{experiment}'"
                        )));
                    }
                }
                "seed" => {
                    seed =
                        Some(v.parse::<u64>().map_err(|_| {
                            CliError::Config(format!("seed = '{v}': expected a u64"))
                        })?)
                }
                "out" => out_key = Some(PathBuf::from(v)),
                _ => {
                    let spec = experiment.param(&k).ok_or_else(|| {
                        CliError::Config(format!("unknown parameter '{k}' for {experiment}"))
                    })?;
                    spec.validate(&v)?;
                    values.insert(k, v);
                }
            }
        }
        if experiment.randomized() && seed.is_none() {
            return Err(CliError::Config(format!(
                "{experiment} is randomized: a seed is required (seed = N or {SEED_ENV})"
            )));
        }
        let out = out
            .or(out_key)
            .unwrap_or_else(|| Path::new("out").join(experiment.name()));
        let cfg = Self {
            experiment,
            values,
            seed,
            out,
        };
        cfg.cross_check()?;
        Ok(cfg)
    }

    /// Constraints spanning several parameters.
    fn cross_check(&self) -> Result<(), CliError> {
        match self.experiment {
            Experiment::Grossman => {
                let m = self.int("m")?;
                if let Some(n) = self.int_list("n_list")?.into_iter().find(|&n| n >= m) {
                    return Err(CliError::Config(format!(
                        "n_list entry {n} must be below m = {m}"
                    )));
                }
            }
            Experiment::LddmmFlow => {
                if self.real("hi")? <= self.real("lo")? {
                    return Err(CliError::Config("lddmm-flow needs lo < hi".into()));
                }
            }
            Experiment::SobolevProps => {
                if 2 * self.int("kmax")? >= self.int("n")? {
                    return Err(CliError::Config("sobolev-props needs 2 kmax < n".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Result<&str, CliError> {
        self.values.get(key).map(String::as_str).ok_or_else(|| {
            CliError::Config(format!(
                "parameter '{key}' is not defined for {}",
                self.experiment
            ))
        })
    }

    pub fn int(&self, key: &str) -> Result<i64, CliError> {
        self.raw(key)?
            .parse()
            .map_err(|_| CliError::Config(format!("{key} is not an integer")))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        usize::try_from(self.int(key)?)
            .map_err(|_| CliError::Config(format!("{key} must be non-negative")))
    }

    pub fn real(&self, key: &str) -> Result<f64, CliError> {
        self.raw(key)?
            .parse()
            .map_err(|_| CliError::Config(format!("{key} is not a number")))
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        parse_bool(self.raw(key)?)
            .ok_or_else(|| CliError::Config(format!("{key} is not a boolean")))
    }

    pub fn text(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key)
    }

    pub fn int_list(&self, key: &str) -> Result<Vec<i64>, CliError> {
        parse_int_list(self.raw(key)?).map_err(CliError::Config)
    }

    /// The seed of a randomized experiment.
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config(format!("{} requires a seed", self.experiment)))
    }

    /// Canonical `key = value` lines: experiment, seed, then parameters sorted by key.
    pub fn to_kv_lines(&self) -> Vec<String> {
        let mut lines = vec![format!("experiment = {}", self.experiment)];
        if let Some(s) = self.seed {
            lines.push(format!("seed = {s}"));
        }
        lines.extend(self.values.iter().map(|(k, v)| format!("{k} = {v}")));
        lines
    }
}

fn read_config(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn defaults_fill_every_parameter() {
        for e in Experiment::ALL {
            let seed = e.randomized().then_some(("seed", "1"));
            let cfg = ExperimentConfig::from_assignments(
                e,
                kv(&seed.into_iter().collect::<Vec<_>>()),
                None,
            )
            .unwrap();
            assert_eq!(cfg.values.len(), e.params().len(), "{e}");
            assert_eq!(cfg.out, Path::new("out").join(e.name()));
        }
    }

    #[test]
    fn later_assignments_win() {
        let cfg = ExperimentConfig::from_assignments(
            Experiment::Grossman,
            kv(&[("m", "30"), ("m", "22")]),
            None,
        )
        .unwrap();
        assert_eq!(cfg.int("m").unwrap(), 22);
    }

    #[test]
    fn file_then_overrides_then_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# comment\nexperiment = sphere-bvp\nseed = 1\npairs = 3\nm = 5\n",
        )
        .unwrap();
        let sources = ConfigSources {
            file: Some(path),
            overrides: vec!["pairs=7".into()],
            out: None,
            seed_env: Some("99".into()),
        };
        let cfg = ExperimentConfig::resolve(Experiment::SphereBvp, &sources).unwrap();
        assert_eq!(
            (cfg.int("pairs").unwrap(), cfg.int("m").unwrap(), cfg.seed),
            (7, 5, Some(99))
        );
    }

    #[test]
    fn rejects_bad_input() {
        let cases: &[(Experiment, &[(&str, &str)])] = &[
            (Experiment::Grossman, &[("m", "1")]),
            (Experiment::Grossman, &[("bogus", "1")]),
            (Experiment::Grossman, &[("m", "10"), ("n_list", "1..12")]),
            (Experiment::Grossman, &[("n_list", "5..2")]),
            (Experiment::Grossman, &[("experiment", "blowup")]),
            (Experiment::SphereBvp, &[]),
            (Experiment::SphereBvp, &[("seed", "-1")]),
            (Experiment::ExpCircle, &[("n", "100")]),
            (Experiment::ExpCircle, &[("amp", "nan")]),
            (
                Experiment::LandmarkGeodesic,
                &[("seed", "1"), ("kernel", "cauchy")],
            ),
            (
                Experiment::LddmmFlow,
                &[("seed", "1"), ("lo", "3"), ("hi", "1")],
            ),
        ];
        for (e, a) in cases {
            let err = ExperimentConfig::from_assignments(*e, kv(a), None).unwrap_err();
            assert!(matches!(err, CliError::Config(_)), "{e} {a:?}");
        }
    }

    #[test]
    fn int_lists() {
        assert_eq!(parse_int_list("1..3, 7,9..9").unwrap(), vec![1, 2, 3, 7, 9]);
        assert!(parse_int_list("1..x").is_err());
    }

    #[test]
    fn kv_round_trip() {
        let cfg = ExperimentConfig::from_assignments(
            Experiment::SphereBvp,
            kv(&[("seed", "42"), ("m", "7")]),
            None,
        )
        .unwrap();
        let again = ExperimentConfig::from_assignments(
            Experiment::SphereBvp,
            parse_kv_text(&cfg.to_kv_lines().join("\n")).unwrap(),
            None,
        )
        .unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn malformed_lines_report_position() {
        let err = parse_kv_text("m = 3\nnot an assignment\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
