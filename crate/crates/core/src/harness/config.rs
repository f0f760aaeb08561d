//! Experiment configuration files.
//!
//! Flat INI with three sections; `#` starts a comment:
//!
//! ```ini
//! [environment]
//! type = cascade        # or dbn
//! L = 16
//! K = 2
//! p = 0.2
//! delta = 0.15
//! # dbn only: common satisfaction probability and persistence
//! # nu = 0.7
//! # gamma = 0.7
//!
//! [policy]
//! name = cascade-klucb  # cascade-ucb1 | cascade-klucb | ranked-klucb | oracle
//! ordering = decreasing # or increasing
//! epsilon = 0.1         # only used by the KL-UCB bound
//!
//! [experiment]
//! n_steps = 100000
//! n_runs = 20
//! master_seed = 42
//! log_every = 1000
//! output = results/cascade_klucb.csv
//! ```

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::env::{make_blb, DbnEnv};
use crate::error::{Error, Result};
use crate::policy::ListOrder;

pub const SEED_ENV_VAR: &str = "CASCADE_BANDITS_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EnvironmentSpec {
    Cascade {
        num_items: usize,
        k: usize,
        p: f64,
        delta: f64,
    },
    Dbn {
        num_items: usize,
        k: usize,
        p: f64,
        delta: f64,
        nu: f64,
        gamma: f64,
    },
}

impl EnvironmentSpec {
    pub fn num_items(&self) -> usize {
        match *self {
            EnvironmentSpec::Cascade { num_items, .. } | EnvironmentSpec::Dbn { num_items, .. } => num_items,
        }
    }

    pub fn list_size(&self) -> usize {
        match *self {
            EnvironmentSpec::Cascade { k, .. } | EnvironmentSpec::Dbn { k, .. } => k,
        }
    }

    /// `(p, Δ)` of the underlying `B_LB` instance.
    pub fn blb_params(&self) -> (f64, f64) {
        match *self {
            EnvironmentSpec::Cascade { p, delta, .. } | EnvironmentSpec::Dbn { p, delta, .. } => (p, delta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PolicyName {
    #[serde(rename = "cascade-ucb1")]
    CascadeUcb1,
    #[serde(rename = "cascade-klucb")]
    CascadeKlUcb,
    #[serde(rename = "ranked-klucb")]
    RankedKlUcb,
    #[serde(rename = "oracle")]
    Oracle,
}

impl PolicyName {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyName::CascadeUcb1 => "cascade-ucb1",
            PolicyName::CascadeKlUcb => "cascade-klucb",
            PolicyName::RankedKlUcb => "ranked-klucb",
            PolicyName::Oracle => "oracle",
        }
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cascade-ucb1" => Ok(PolicyName::CascadeUcb1),
            "cascade-klucb" => Ok(PolicyName::CascadeKlUcb),
            "ranked-klucb" => Ok(PolicyName::RankedKlUcb),
            "oracle" => Ok(PolicyName::Oracle),
            other => Err(Error::config(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicySpec {
    pub name: PolicyName,
    #[serde(serialize_with = "ser_order")]
    pub ordering: ListOrder,
    pub epsilon: f64,
}

fn ser_order<S: serde::Serializer>(order: &ListOrder, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(order.as_str())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub environment: EnvironmentSpec,
    pub policy: PolicySpec,
    pub n_steps: u64,
    pub n_runs: u64,
    pub master_seed: u64,
    pub log_every: u64,
    pub output: Option<PathBuf>,
}

fn parse_value<T: FromStr>(section: &str, key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::config(format!("[{section}] {key} = '{raw}' is not a valid value")))
}

struct Section<'a> {
    name: &'static str,
    props: Option<&'a ini::Properties>,
}

impl Section<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.props.and_then(|p| p.get(key)).map(strip_comment)
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::config(format!("[{}] is missing '{key}'", self.name)))?;
        parse_value(self.name, key, raw)
    }

    fn optional<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        self.get(key)
            .map_or(Ok(default), |raw| parse_value(self.name, key, raw))
    }

    fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        if let Some(props) = self.props {
            if let Some((key, _)) = props.iter().find(|(k, _)| !known.contains(k)) {
                return Err(Error::config(format!("[{}] has unknown key '{key}'", self.name)));
            }
        }
        Ok(())
    }
}

/// Trailing `# comment` after a value.
fn strip_comment(raw: &str) -> &str {
    raw.split_once('#').map_or(raw, |(v, _)| v).trim()
}

impl ExperimentConfig {
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::config(e.to_string()))?;
        for (name, _) in ini.iter() {
            match name {
                None | Some("environment") | Some("policy") | Some("experiment") => {}
                Some(other) => return Err(Error::config(format!("unknown section [{other}]"))),
            }
        }
        if ini.general_section().iter().next().is_some() {
            return Err(Error::config("keys must appear inside a section"));
        }
        let env = Section { name: "environment", props: ini.section(Some("environment")) };
        let pol = Section { name: "policy", props: ini.section(Some("policy")) };
        let exp = Section { name: "experiment", props: ini.section(Some("experiment")) };

        let kind: String = env.required("type")?;
        let (num_items, k, p, delta) = (
            env.required("L")?,
            env.required("K")?,
            env.required("p")?,
            env.required("delta")?,
        );
        let environment = match kind.as_str() {
            "cascade" => {
                env.reject_unknown(&["type", "L", "K", "p", "delta"])?;
                EnvironmentSpec::Cascade { num_items, k, p, delta }
            }
            "dbn" => {
                env.reject_unknown(&["type", "L", "K", "p", "delta", "nu", "gamma"])?;
                EnvironmentSpec::Dbn {
                    num_items,
                    k,
                    p,
                    delta,
                    nu: env.required("nu")?,
                    gamma: env.required("gamma")?,
                }
            }
            other => return Err(Error::config(format!("unknown environment type '{other}'"))),
        };
        pol.reject_unknown(&["name", "ordering", "epsilon"])?;
        let ordering: String = pol.optional("ordering", "decreasing".to_string())?;
        let policy = PolicySpec {
            name: pol.required::<String>("name")?.parse()?,
            ordering: ordering.parse()?,
            epsilon: pol.optional("epsilon", 0.1)?,
        };
        exp.reject_unknown(&["n_steps", "n_runs", "master_seed", "log_every", "output"])?;
        let config = Self {
            environment,
            policy,
            n_steps: exp.required("n_steps")?,
            n_runs: exp.optional("n_runs", 20)?,
            master_seed: exp.optional("master_seed", 0)?,
            log_every: exp.optional("log_every", 1000)?,
            output: exp.get("output").filter(|s| !s.is_empty()).map(PathBuf::from),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_ini_str(&text)
    }

    /// Checks everything a run needs before any run starts.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::InvalidInput(msg) => Error::Config(msg),
            other => other,
        };
        match self.environment {
            EnvironmentSpec::Cascade { num_items, k, p, delta } => {
                make_blb(num_items, k, p, delta).map_err(as_config)?;
            }
            EnvironmentSpec::Dbn { num_items, k, p, delta, nu, gamma } => {
                DbnEnv::blb(num_items, k, p, delta, nu, gamma).map_err(as_config)?;
            }
        }
        if self.n_steps == 0 {
            return Err(Error::config("n_steps must be at least 1"));
        }
        if self.n_runs == 0 {
            return Err(Error::config("n_runs must be at least 1"));
        }
        if self.log_every == 0 {
            return Err(Error::config("log_every must be at least 1"));
        }
        if !(self.policy.epsilon > 0.0 && self.policy.epsilon.is_finite()) {
            return Err(Error::config("epsilon must be positive"));
        }
        Ok(())
    }

    /// Applies `CASCADE_BANDITS_SEED` if set.
    pub fn apply_env_overrides(&mut self) -> Result<()> {
        if let Ok(raw) = std::env::var(SEED_ENV_VAR) {
            self.master_seed = raw
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("{SEED_ENV_VAR} = '{raw}' is not a u64")))?;
        }
        Ok(())
    }

    /// Checkpoint steps: 0, every `log_every`, and always `n_steps`.
    pub fn checkpoints(&self) -> Vec<u64> {
        let mut steps: Vec<u64> = (0..=self.n_steps).step_by(self.log_every as usize).collect();
        if *steps.last().expect("contains 0") != self.n_steps {
            steps.push(self.n_steps);
        }
        steps
    }

    fn write_experiment_body(&self, out: &mut String) {
        let _ = writeln!(out, "n_steps = {}", self.n_steps);
        let _ = writeln!(out, "n_runs = {}", self.n_runs);
        let _ = writeln!(out, "master_seed = {}", self.master_seed);
        let _ = writeln!(out, "log_every = {}", self.log_every);
    }

    /// Canonical text: fixed section and key order, shortest round-trip floats.
    /// Parsing it back yields an equal config.
    pub fn to_ini_string(&self) -> String {
        let mut out = self.canonical_without_output();
        if let Some(path) = &self.output {
            let _ = writeln!(out, "output = {}", path.display());
        }
        out
    }

    fn canonical_without_output(&self) -> String {
        let mut out = String::from("[environment]\n");
        match self.environment {
            EnvironmentSpec::Cascade { num_items, k, p, delta } => {
                let _ = write!(out, "type = cascade\nL = {num_items}\nK = {k}\np = {p:?}\ndelta = {delta:?}\n");
            }
            EnvironmentSpec::Dbn { num_items, k, p, delta, nu, gamma } => {
                let _ = write!(
                    out,
                    "type = dbn\nL = {num_items}\nK = {k}\np = {p:?}\ndelta = {delta:?}\nnu = {nu:?}\ngamma = {gamma:?}\n"
                );
            }
        }
        let _ = write!(
            out,
            "\n[policy]\nname = {}\nordering = {}\nepsilon = {:?}\n\n[experiment]\n",
            self.policy.name,
            self.policy.ordering.as_str(),
            self.policy.epsilon
        );
        self.write_experiment_body(&mut out);
        out
    }

    /// First 16 hex digits of SHA-256 over the canonical text. The output
    /// path is not part of the experiment and is left out.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical_without_output().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "\
# Table 1, first row
[environment]
type = cascade
L = 16
K = 2
p = 0.2
delta = 0.15   # gap

[policy]
name = cascade-klucb
ordering = increasing

[experiment]
n_steps = 100000
n_runs = 20
master_seed = 7
output = out/klucb.csv
";

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::from_ini_str(SAMPLE).unwrap();
        assert_eq!(
            c.environment,
            EnvironmentSpec::Cascade { num_items: 16, k: 2, p: 0.2, delta: 0.15 }
        );
        assert_eq!(c.policy.name, PolicyName::CascadeKlUcb);
        assert_eq!(c.policy.ordering, ListOrder::IncreasingUcb);
        assert_eq!(c.policy.epsilon, 0.1);
        assert_eq!((c.n_steps, c.n_runs, c.master_seed, c.log_every), (100_000, 20, 7, 1000));
        assert_eq!(c.output.as_deref(), Some(Path::new("out/klucb.csv")));
        assert_eq!(c.checkpoints().len(), 101);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let bad_k = SAMPLE.replace("K = 2", "K = 17");
        let bad_gap = SAMPLE.replace("delta = 0.15", "delta = 0.2");
        let unknown = SAMPLE.replace("ordering = increasing", "ordering = sideways");
        let typo = SAMPLE.replace("n_runs", "runs");
        let missing = SAMPLE.replace("p = 0.2\n", "");
        let zero = SAMPLE.replace("n_steps = 100000", "n_steps = 0");
        let dbn_missing = SAMPLE.replace("type = cascade", "type = dbn");
        for text in [bad_k, bad_gap, unknown, typo, missing, zero, dbn_missing] {
            assert!(matches!(ExperimentConfig::from_ini_str(&text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn checkpoints_include_final_step() {
        let mut c = ExperimentConfig::from_ini_str(SAMPLE).unwrap();
        c.n_steps = 2500;
        assert_eq!(c.checkpoints(), vec![0, 1000, 2000, 2500]);
        c.log_every = 5000;
        assert_eq!(c.checkpoints(), vec![0, 2500]);
    }

    #[test]
    fn output_path_does_not_change_fingerprint() {
        let a = ExperimentConfig::from_ini_str(SAMPLE).unwrap();
        let mut b = a.clone();
        b.output = Some(PathBuf::from("elsewhere.csv"));
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            2usize..40,
            0.05f64..1.0,
            0.01f64..0.99,
            prop::option::of((0.0f64..=1.0, 0.01f64..=1.0)),
            0usize..4,
            any::<bool>(),
            (1u64..1_000_000, 1u64..50, any::<u64>(), 1u64..5000),
        )
            .prop_map(|(l, p, frac, dbn, policy, inc, (n, runs, seed, every))| {
                let k = 1 + l / 3;
                let delta = p * frac;
                let environment = match dbn {
                    Some((nu, gamma)) => EnvironmentSpec::Dbn { num_items: l, k, p, delta, nu, gamma },
                    None => EnvironmentSpec::Cascade { num_items: l, k, p, delta },
                };
                let name = [PolicyName::CascadeUcb1, PolicyName::CascadeKlUcb, PolicyName::RankedKlUcb, PolicyName::Oracle][policy];
                ExperimentConfig {
                    environment,
                    policy: PolicySpec {
                        name,
                        ordering: if inc { ListOrder::IncreasingUcb } else { ListOrder::DecreasingUcb },
                        epsilon: 0.1,
                    },
                    n_steps: n,
                    n_runs: runs,
                    master_seed: seed,
                    log_every: every,
                    output: None,
                }
            })
    }

    proptest! {
        #[test]
        fn round_trips_losslessly(c in arb_config()) {
            let text = c.to_ini_string();
            let back = ExperimentConfig::from_ini_str(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.fingerprint(), c.fingerprint());
        }

        #[test]
        fn fingerprint_tracks_every_field(c in arb_config(), field in 0usize..8) {
            let mut d = c.clone();
            match field {
                0 => d.n_steps += 1,
                1 => d.n_runs += 1,
                2 => d.master_seed = d.master_seed.wrapping_add(1),
                3 => d.log_every += 1,
                4 => d.policy.epsilon *= 2.0,
                5 => d.policy.ordering = match d.policy.ordering {
                    ListOrder::DecreasingUcb => ListOrder::IncreasingUcb,
                    ListOrder::IncreasingUcb => ListOrder::DecreasingUcb,
                },
                6 => d.policy.name = if d.policy.name == PolicyName::Oracle { PolicyName::CascadeUcb1 } else { PolicyName::Oracle },
                _ => match &mut d.environment {
                    EnvironmentSpec::Cascade { delta, .. } | EnvironmentSpec::Dbn { delta, .. } => *delta *= 0.5,
                },
            }
            prop_assert_ne!(d.fingerprint(), c.fingerprint());
        }
    }
}
