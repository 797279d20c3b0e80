//! Experiment configuration read from an INI file with sections
//! `[algorithm]`, `[environment]`, `[confidence]` and `[output]`.
//!
//! ```ini
//! [algorithm]
//! name = lc_lucb
//! horizon = 100000
//! seeds = 0,1,2,3,4,5,6,7,8,9
//!
//! [environment]
//! kind = star
//! d = 10
//! tau = 0.5
//!
//! [confidence]
//! delta = 0.05
//! ```
//!
//! Lists use commas; matrices separate rows with `|`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;

use crate::confidence::{ConfidenceSpec, DeltaAllocation};
use crate::environments::LowerBoundVariant;
use crate::error::{Error, Result};
use crate::estimation::{CostModel, UnpulledArmPolicy};
use crate::nonlinear::DEFAULT_MAX_TRIPLES;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgorithmKind {
    LcLucb,
    Oplb,
    Opb,
    Opnlb,
    SafeTsBaseline,
}

impl AlgorithmKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::LcLucb => "lc_lucb",
            AlgorithmKind::Oplb => "oplb",
            AlgorithmKind::Opb => "opb",
            AlgorithmKind::Opnlb => "opnlb",
            AlgorithmKind::SafeTsBaseline => "safe_ts_baseline",
        }
    }

    /// Whether the constraint is enforced on the policy's expectation.
    pub fn in_expectation(&self) -> bool {
        matches!(self, AlgorithmKind::Oplb | AlgorithmKind::Opb | AlgorithmKind::Opnlb)
    }
}

/// A scaling parameter: derived from the safe action or given explicitly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alpha {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub alpha_r: Alpha,
    pub alpha_c: Alpha,
    pub unpulled_arm_policy: UnpulledArmPolicy,
    pub warm_start: bool,
    pub delta_allocation: DeltaAllocation,
    pub cost_model: CostModel,
    pub max_triples: usize,
    /// Posterior spread multiplier for the sampling baseline.
    pub ts_scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseKind {
    Gaussian,
    Bernoulli,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnvironmentConfig {
    Star {
        d: usize,
        tau: f64,
    },
    Sphere {
        d: usize,
        n_rays: usize,
        seed: Option<u64>,
    },
    Mab {
        preset: MabPreset,
        tau: Vec<f64>,
    },
    LowerBound {
        arms: usize,
        tau: f64,
        c0: f64,
        r0: f64,
        variant: LowerBoundVariant,
    },
    FiniteClass {
        source: ClassSource,
        tau: f64,
        safe_action: usize,
    },
    Discrete {
        theta: Vec<f64>,
        mu: Vec<Vec<f64>>,
        actions: Vec<Vec<f64>>,
        safe_index: usize,
        tau: Vec<f64>,
    },
}

impl EnvironmentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            EnvironmentConfig::Star { .. } => "star",
            EnvironmentConfig::Sphere { .. } => "sphere",
            EnvironmentConfig::Mab { .. } => "mab",
            EnvironmentConfig::LowerBound { .. } => "lower_bound",
            EnvironmentConfig::FiniteClass { .. } => "finite_class",
            EnvironmentConfig::Discrete { .. } => "discrete",
        }
    }

    /// Number of cost constraints the environment produces.
    pub fn constraints(&self) -> usize {
        match self {
            EnvironmentConfig::Mab { tau, .. } | EnvironmentConfig::Discrete { tau, .. } => tau.len(),
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MabPreset {
    FourArm,
    /// Safe arm with zero means plus `arms − 1` uniform arms.
    Random {
        arms: usize,
        seed: Option<u64>,
    },
    Explicit {
        rewards: Vec<f64>,
        costs: Vec<Vec<f64>>,
        safe_arm: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClassSource {
    Files {
        reward: PathBuf,
        cost: PathBuf,
        true_reward: usize,
        true_cost: usize,
    },
    Toy {
        functions: usize,
        actions: usize,
        c0: f64,
        seed: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: AlgorithmConfig,
    pub environment: EnvironmentConfig,
    pub noise: NoiseConfig,
    pub confidence: ConfidenceSpec,
    pub radius_scale: f64,
    pub output_dir: Option<PathBuf>,
    /// Also write the per-round mean/std curve across seeds.
    pub write_curve: bool,
}

type Section = BTreeMap<String, String>;

/// Key-value access that records which keys were read so leftovers can be
/// reported as unknown.
struct Reader {
    section: &'static str,
    values: Section,
}

impl Reader {
    fn path(&self, key: &str) -> String {
        format!("{}.{}", self.section, key)
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| Error::config(self.path(key), "missing required key"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, raw: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        raw.trim()
            .parse::<T>()
            .map_err(|e| Error::config(self.path(key), format!("cannot parse `{raw}`: {e}")))
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => self.parse(key, &raw).map(Some),
        }
    }

    fn get_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn need<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.required(key)?;
        self.parse(key, &raw)
    }

    fn list<T: std::str::FromStr>(&self, key: &str, raw: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| self.parse(key, s))
            .collect()
    }

    fn need_list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.required(key)?;
        let v = self.list(key, &raw)?;
        if v.is_empty() {
            return Err(Error::config(self.path(key), "empty list"));
        }
        Ok(v)
    }

    fn need_matrix(&mut self, key: &str) -> Result<Vec<Vec<f64>>> {
        let raw = self.required(key)?;
        raw.split('|').map(|row| self.list(key, row)).collect()
    }

    fn finish(self) -> Result<()> {
        match self.values.keys().next() {
            Some(k) => Err(Error::config(self.path(k), "unknown key")),
            None => Ok(()),
        }
    }
}

fn parse_enum<T>(path: String, raw: &str, options: &[(&str, T)]) -> Result<T>
where
    T: Clone,
{
    options
        .iter()
        .find(|(name, _)| *name == raw.trim())
        .map(|(_, v)| v.clone())
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            Error::config(
                path,
                format!("unknown value `{raw}`, expected one of {}", names.join(", ")),
            )
        })
}

fn parse_alpha(r: &mut Reader, key: &str) -> Result<Alpha> {
    match r.take(key) {
        None => Ok(Alpha::Auto),
        Some(raw) if raw.trim() == "auto" => Ok(Alpha::Auto),
        Some(raw) => Ok(Alpha::Fixed(r.parse(key, &raw)?)),
    }
}

pub fn parse_seeds(raw: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let a: u64 = a
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("seed range `{part}`: {e}")))?;
                let b: u64 = b
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("seed range `{part}`: {e}")))?;
                seeds.extend(a..b);
            }
            None => seeds.push(part.parse().map_err(|e| Error::Parse(format!("seed `{part}`: {e}")))?),
        }
    }
    if seeds.is_empty() {
        return Err(Error::Parse("no seeds given".into()));
    }
    Ok(seeds)
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        // Relative class files resolve against the config's directory.
        if let EnvironmentConfig::FiniteClass {
            source: ClassSource::Files { reward, cost, .. },
            ..
        } = &mut cfg.environment
        {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in [reward, cost] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str_noescape(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::config(k, "key outside of any section"));
                }
                continue;
            };
            if !["algorithm", "environment", "confidence", "output"].contains(&name) {
                return Err(Error::config(name, "unknown section"));
            }
            let entry = sections.entry(name.to_string()).or_default();
            for (k, v) in props.iter() {
                entry.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let mut reader = |name: &'static str| Reader {
            section: name,
            values: sections.remove(name).unwrap_or_default(),
        };

        let mut a = reader("algorithm");
        let kind = parse_enum(
            a.path("name"),
            &a.required("name")?,
            &[
                ("lc_lucb", AlgorithmKind::LcLucb),
                ("oplb", AlgorithmKind::Oplb),
                ("opb", AlgorithmKind::Opb),
                ("opnlb", AlgorithmKind::Opnlb),
                ("safe_ts_baseline", AlgorithmKind::SafeTsBaseline),
            ],
        )?;
        let horizon: usize = a.need("horizon")?;
        if horizon == 0 {
            return Err(Error::config("algorithm.horizon", "must be at least 1"));
        }
        let seeds = match a.take("seeds") {
            Some(raw) => parse_seeds(&raw).map_err(|e| Error::config("algorithm.seeds", e.to_string()))?,
            None => vec![0],
        };
        let alpha_r = parse_alpha(&mut a, "alpha_r")?;
        let alpha_c = parse_alpha(&mut a, "alpha_c")?;
        let unpulled_arm_policy = match a.take("unpulled_arm_policy") {
            None => UnpulledArmPolicy::default(),
            Some(raw) => parse_enum(
                a.path("unpulled_arm_policy"),
                &raw,
                &[
                    ("clamped_count", UnpulledArmPolicy::ClampedCount),
                    ("sentinel", UnpulledArmPolicy::Sentinel),
                    ("zero_mean_zero_radius", UnpulledArmPolicy::ZeroMeanZeroRadius),
                ],
            )?,
        };
        let warm_start = a.get_or("warm_start", false)?;
        let delta_allocation = match a.take("delta_allocation") {
            None => DeltaAllocation::default(),
            Some(raw) => parse_enum(
                a.path("delta_allocation"),
                &raw,
                &[
                    ("pass_through", DeltaAllocation::PassThrough),
                    ("joint_split", DeltaAllocation::JointSplit),
                ],
            )?,
        };
        let cost_model = match a.take("cost_model") {
            None if warm_start => CostModel::Full,
            None => CostModel::Projected,
            Some(raw) => parse_enum(
                a.path("cost_model"),
                &raw,
                &[("projected", CostModel::Projected), ("full", CostModel::Full)],
            )?,
        };
        let max_triples = a.get_or("max_triples", DEFAULT_MAX_TRIPLES)?;
        let ts_scale = a.get_or("ts_scale", 1.0)?;
        a.finish()?;

        let mut e = reader("environment");
        let env_kind = e.required("kind")?;
        let noise_default = match env_kind.as_str() {
            "mab" | "finite_class" => NoiseKind::Bernoulli,
            _ => NoiseKind::Gaussian,
        };
        let noise_kind = match e.take("noise") {
            None => noise_default,
            Some(raw) => parse_enum(
                e.path("noise"),
                &raw,
                &[("gaussian", NoiseKind::Gaussian), ("bernoulli", NoiseKind::Bernoulli)],
            )?,
        };
        let sigma_default = if env_kind == "lower_bound" { 1.0 } else { 0.1 };
        let sigma: f64 = e.get_or("sigma", sigma_default)?;
        let environment = match env_kind.as_str() {
            "star" => EnvironmentConfig::Star {
                d: e.get_or("d", 10)?,
                tau: e.need("tau")?,
            },
            "sphere" => EnvironmentConfig::Sphere {
                d: e.get_or("d", 5)?,
                n_rays: e.get_or("n_rays", 100)?,
                seed: e.get("seed")?,
            },
            "mab" => {
                let tau_raw = e.required("tau")?;
                let tau = e.list("tau", &tau_raw)?;
                let preset = match e.take("preset").as_deref().map(str::trim) {
                    Some("four_arm") => MabPreset::FourArm,
                    Some("random") => MabPreset::Random {
                        arms: e.need("arms")?,
                        seed: e.get("seed")?,
                    },
                    None | Some("explicit") => MabPreset::Explicit {
                        rewards: e.need_list("rewards")?,
                        costs: e.need_matrix("costs")?,
                        safe_arm: e.get_or("safe_arm", 0)?,
                    },
                    Some(other) => {
                        return Err(Error::config(
                            "environment.preset",
                            format!("unknown value `{other}`, expected one of four_arm, random, explicit"),
                        ))
                    }
                };
                EnvironmentConfig::Mab { preset, tau }
            }
            "lower_bound" => EnvironmentConfig::LowerBound {
                arms: e.get_or("arms", 6)?,
                tau: e.need("tau")?,
                c0: e.need("c0")?,
                r0: e.need("r0")?,
                variant: match e.take("variant") {
                    None => LowerBoundVariant::Nu,
                    Some(raw) => parse_enum(
                        e.path("variant"),
                        &raw,
                        &[("nu", LowerBoundVariant::Nu), ("nu_prime", LowerBoundVariant::NuPrime)],
                    )?,
                },
            },
            "finite_class" => {
                let source = match e.take("reward_class") {
                    Some(reward) => ClassSource::Files {
                        reward: PathBuf::from(reward),
                        cost: PathBuf::from(e.required("cost_class")?),
                        true_reward: e.need("true_reward")?,
                        true_cost: e.need("true_cost")?,
                    },
                    None => ClassSource::Toy {
                        functions: e.get_or("functions", 16)?,
                        actions: e.get_or("actions", 8)?,
                        c0: e.get_or("c0", 0.2)?,
                        seed: e.get("seed")?,
                    },
                };
                EnvironmentConfig::FiniteClass {
                    source,
                    tau: e.need("tau")?,
                    safe_action: e.get_or("safe_action", 0)?,
                }
            }
            "discrete" => {
                let tau_raw = e.required("tau")?;
                EnvironmentConfig::Discrete {
                    theta: e.need_list("theta")?,
                    mu: e.need_matrix("mu")?,
                    actions: e.need_matrix("actions")?,
                    safe_index: e.get_or("safe_index", 0)?,
                    tau: e.list("tau", &tau_raw)?,
                }
            }
            other => return Err(Error::config(
                "environment.kind",
                format!(
                    "unknown value `{other}`, expected one of star, sphere, mab, lower_bound, finite_class, discrete"
                ),
            )),
        };
        e.finish()?;

        let mut c = reader("confidence");
        let defaults = ConfidenceSpec::default();
        let confidence = ConfidenceSpec {
            delta: c.get_or("delta", defaults.delta)?,
            ridge: c.get_or("lambda", defaults.ridge)?,
            noise: c.get_or("R", sigma)?,
            param_bound: c.get_or("S", defaults.param_bound)?,
            action_bound: c.get_or("L", defaults.action_bound)?,
            alpha_r: 1.0,
            alpha_c: 1.0,
        };
        let radius_scale = c.get_or("radius_scale", 1.0)?;
        c.finish()?;

        let mut o = reader("output");
        let output_dir = o.take("dir").map(PathBuf::from);
        let write_curve = o.get_or("curve", true)?;
        o.finish()?;

        let cfg = Self {
            algorithm: AlgorithmConfig {
                kind,
                horizon,
                seeds,
                alpha_r,
                alpha_c,
                unpulled_arm_policy,
                warm_start,
                delta_allocation,
                cost_model,
                max_triples,
                ts_scale,
            },
            environment,
            noise: NoiseConfig {
                kind: noise_kind,
                sigma,
            },
            confidence,
            radius_scale,
            output_dir,
            write_curve,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.confidence;
        if !(c.delta > 0.0 && c.delta < 1.0) {
            return Err(Error::config("confidence.delta", "must lie in (0, 1)"));
        }
        if !(c.ridge > 0.0) {
            return Err(Error::config("confidence.lambda", "must be positive"));
        }
        if self.noise.sigma < 0.0 {
            return Err(Error::config("environment.sigma", "must be non-negative"));
        }
        if self.algorithm.seeds.is_empty() {
            return Err(Error::config("algorithm.seeds", "at least one seed required"));
        }
        for (key, alpha) in [("alpha_r", self.algorithm.alpha_r), ("alpha_c", self.algorithm.alpha_c)] {
            if let Alpha::Fixed(v) = alpha {
                if !(v > 0.0) {
                    return Err(Error::config(format!("algorithm.{key}"), "must be positive"));
                }
            }
        }
        let compatible = match (&self.algorithm.kind, &self.environment) {
            (AlgorithmKind::LcLucb | AlgorithmKind::SafeTsBaseline, EnvironmentConfig::Star { .. })
            | (AlgorithmKind::LcLucb | AlgorithmKind::SafeTsBaseline, EnvironmentConfig::Sphere { .. })
            | (AlgorithmKind::Oplb, EnvironmentConfig::Discrete { .. })
            | (AlgorithmKind::Opb, EnvironmentConfig::Mab { .. })
            | (AlgorithmKind::Opb, EnvironmentConfig::LowerBound { .. })
            | (AlgorithmKind::Opnlb, EnvironmentConfig::FiniteClass { .. }) => true,
            _ => false,
        };
        if !compatible {
            return Err(Error::config(
                "environment.kind",
                format!(
                    "`{}` is not supported by algorithm `{}`",
                    self.environment.kind(),
                    self.algorithm.kind.name()
                ),
            ));
        }
        if self.algorithm.warm_start && !matches!(self.algorithm.kind, AlgorithmKind::LcLucb) {
            return Err(Error::config("algorithm.warm_start", "only supported for lc_lucb"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STAR: &str = "[algorithm]\nname = lc_lucb\nhorizon = 100\nseeds = 0,1,2\n\n[environment]\nkind = star\nd = 4\ntau = 0.5\n\n[confidence]\ndelta = 0.05\nlambda = 1\nR = 0.1\n\n[output]\ndir = out\n";

    #[test]
    fn parses_star_config() {
        let c = ExperimentConfig::parse(STAR).unwrap();
        assert_eq!(c.algorithm.kind, AlgorithmKind::LcLucb);
        assert_eq!(c.algorithm.seeds, vec![0, 1, 2]);
        assert_eq!(c.environment, EnvironmentConfig::Star { d: 4, tau: 0.5 });
        assert_eq!(c.confidence.noise, 0.1);
        assert_eq!(c.output_dir, Some(PathBuf::from("out")));
        assert_eq!(c.algorithm.alpha_r, Alpha::Auto);
    }

    #[test]
    fn unknown_keys_are_errors_with_paths() {
        let bad = STAR.replace("d = 4", "d = 4\ndimension = 3");
        let err = ExperimentConfig::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("environment.dimension"), "{err}");
        let bad = format!("{STAR}\n[plots]\nx = 1\n");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn bad_values_report_field() {
        let bad = STAR.replace("horizon = 100", "horizon = many");
        let err = ExperimentConfig::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("algorithm.horizon"), "{err}");
        let bad = STAR.replace("name = lc_lucb", "name = opb");
        assert!(ExperimentConfig::parse(&bad)
            .unwrap_err()
            .to_string()
            .contains("environment.kind"));
    }

    #[test]
    fn parses_mab_and_matrices() {
        let text = "[algorithm]\nname = opb\nhorizon = 10\nalpha_r = 2.5\nunpulled_arm_policy = sentinel\n[environment]\nkind = mab\ntau = 0.5, 0.6\nrewards = 0.1, 0.5\ncosts = 0.0, 0.9 | 0.1, 0.2\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.algorithm.alpha_r, Alpha::Fixed(2.5));
        assert_eq!(c.algorithm.unpulled_arm_policy, UnpulledArmPolicy::Sentinel);
        let EnvironmentConfig::Mab {
            preset: MabPreset::Explicit { costs, .. },
            tau,
        } = c.environment
        else {
            panic!()
        };
        assert_eq!(costs, vec![vec![0.0, 0.9], vec![0.1, 0.2]]);
        assert_eq!(tau, vec![0.5, 0.6]);
        assert_eq!(c.noise.kind, NoiseKind::Bernoulli);
    }

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("0..3, 7").unwrap(), vec![0, 1, 2, 7]);
        assert!(parse_seeds("").is_err());
    }
}
