//! JSON run configuration.
//!
//! ```json
//! {"group": {"kind": "free", "rank": 2},
//!  "mu": [{"elem": "a", "prob": 0.5}, {"elem": "B", "prob": 0.5}],
//!  "seed": 7,
//!  "params": {"n_max": 10}}
//! ```
//!
//! `elem` is an integer for `Z`, an integer array for `Zd` and `cyclic`, and
//! a word over `a-z` (uppercase for inverses) for `free`.

use std::path::Path;

use crate::groups::{letters_to_word, GroupDescriptor, GroupElement, StepDistribution};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use thiserror::Error;

/// Malformed or invalid run configuration, with a field or line diagnostic.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum GroupSpec {
    Z {},
    Zd { d: usize },
    #[serde(rename = "free")]
    Free { rank: usize },
    #[serde(rename = "cyclic")]
    Cyclic { moduli: Vec<u64> },
}

impl GroupSpec {
    pub fn descriptor(&self) -> GroupDescriptor {
        match self {
            GroupSpec::Z {} => GroupDescriptor::IntegerLine,
            GroupSpec::Zd { d } => GroupDescriptor::IntegerLattice { dim: *d },
            GroupSpec::Free { rank } => GroupDescriptor::FreeGroup { rank: *rank },
            GroupSpec::Cyclic { moduli } => GroupDescriptor::FiniteCyclicProduct { moduli: moduli.clone() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub elem: Value,
    pub prob: f64,
}

/// Optional defaults for command parameters; command-line flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub n: Option<usize>,
    pub n_max: Option<usize>,
    pub samples: Option<u64>,
    pub horizons: Option<Vec<u64>>,
    pub targets: Option<Vec<String>>,
    pub arithmetic: Option<String>,
    pub max_states: Option<usize>,
    pub max_paths: Option<usize>,
    pub streams: Option<u32>,
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub group: GroupSpec,
    pub mu: Vec<Atom>,
    pub seed: u64,
    #[serde(default)]
    pub params: Params,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.measure()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|ConfigError(m)| ConfigError(format!("{}: {m}", path.display())))
    }

    /// Builds and validates the step distribution.
    pub fn measure(&self) -> Result<StepDistribution, ConfigError> {
        let group = self.group.descriptor();
        group.validate().map_err(|e| ConfigError(format!("group: {e}")))?;
        let atoms = self
            .mu
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let x = self.element(&a.elem).map_err(|m| ConfigError(format!("mu[{i}].elem: {m}")))?;
                Ok((x, a.prob))
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        StepDistribution::new(group, atoms).map_err(|e| ConfigError(format!("mu: {e}")))
    }

    fn element(&self, v: &Value) -> Result<GroupElement, String> {
        let ints = |v: &Value, len: usize| -> Result<Vec<i64>, String> {
            let arr = v.as_array().ok_or("expected an integer array")?;
            if arr.len() != len {
                return Err(format!("expected {len} coordinates, got {}", arr.len()));
            }
            arr.iter().map(|c| c.as_i64().ok_or_else(|| format!("{c} is not an integer"))).collect()
        };
        match &self.group {
            GroupSpec::Z {} => v.as_i64().map(GroupElement::Integer).ok_or_else(|| format!("{v} is not an integer")),
            GroupSpec::Zd { d } => Ok(GroupElement::Vector(ints(v, *d)?.into_iter().collect())),
            GroupSpec::Cyclic { moduli } => {
                let r = ints(v, moduli.len())?;
                Ok(GroupElement::Residues(
                    r.iter().zip(moduli).map(|(&x, &m)| x.rem_euclid(m.max(1) as i64) as u64).collect(),
                ))
            }
            GroupSpec::Free { rank } => {
                let s = v.as_str().ok_or_else(|| format!("{v} is not a word string"))?;
                if let Some(c) = s.chars().find(|c| !c.is_ascii_alphabetic()) {
                    return Err(format!("'{c}' is not a letter a-z or A-Z"));
                }
                if let Some(c) = s.chars().find(|c| (c.to_ascii_lowercase() as usize) >= 'a' as usize + rank) {
                    return Err(format!("letter '{c}' exceeds rank {rank}"));
                }
                letters_to_word(s).map(GroupElement::Word).ok_or_else(|| format!("cannot parse word {s:?}"))
            }
        }
    }
}
