//! JSON experiment configs: one file fully determines a run.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use dssl_core::logicc::{compile_relaxation, enumerate_valid, parse_rule_file, CompiledRelaxation, RuleSet, ValidSet};
use dssl_core::relaxations::RelaxationKind;
use dssl_core::sslnet::{Activation, Head, Objective, TrainConfig};
use dssl_core::synthdata::{
    gen_attribute_task_from_valid, gen_blobs, gen_gauss1d, gen_two_moons, AttributeTaskSpec, BlobSpec, Dataset,
    Gauss1dSpec, MoonsSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum DatasetSpec {
    Blobs(BlobSpec),
    TwoMoons(MoonsSpec),
    /// Attribute clusters for the valid vectors of the config's rule file.
    Attributes(AttributeTaskSpec),
    Gauss1d(Gauss1dSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub head: Head,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            activation: Activation::Relu,
            head: Head::Softmax,
        }
    }
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    /// Rule file (`attrs:` header plus rules), relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules_file: Option<PathBuf>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|source| HarnessError::ConfigSyntax {
            path: path.to_path_buf(),
            source,
        })?;
        if let (Some(rules), Some(dir)) = (&cfg.rules_file, path.parent()) {
            if rules.is_relative() {
                cfg.rules_file = Some(dir.join(rules));
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Label used in comparison tables: `Supervised` or the relaxation tag.
    pub fn method(&self) -> String {
        match &self.train.relaxation {
            Some(r) if self.train.lambda_u > 0.0 => r.kind.tag().to_string(),
            _ => "Supervised".to_string(),
        }
    }

    /// Validate everything and load the rule file, before any training.
    pub fn prepare(&self) -> Result<Prepared> {
        if self.seeds.is_empty() {
            return Err(HarnessError::config("seeds", "must list at least one seed"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(HarnessError::config("seeds", "contains duplicates"));
        }
        if self.model.hidden.contains(&0) {
            return Err(HarnessError::config("model.hidden", "layer widths must be positive"));
        }
        self.train
            .validate()
            .map_err(|e| HarnessError::config(field_of(&e.to_string(), "train"), e.to_string()))?;

        let rules = match &self.rules_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| HarnessError::config("rules_file", format!("cannot read {}: {e}", path.display())))?;
                let set = parse_rule_file(&text)
                    .map_err(|e| HarnessError::config("rules_file", format!("{}: {e}", path.display())))?;
                let valid = enumerate_valid(&set.formula(), set.num_attrs())
                    .map_err(|e| HarnessError::config("rules_file", e.to_string()))?;
                if valid.is_empty() {
                    return Err(HarnessError::config(
                        "rules_file",
                        "rules admit no label: empty valid set",
                    ));
                }
                Some((set, valid))
            }
            None => None,
        };

        let (inputs, outputs, expected_head) = match &self.dataset {
            DatasetSpec::Blobs(s) => (s.dims, s.classes, Head::Softmax),
            DatasetSpec::TwoMoons(_) => (2, 2, Head::Softmax),
            DatasetSpec::Gauss1d(_) => (1, 2, Head::Softmax),
            DatasetSpec::Attributes(s) => {
                let Some((set, _)) = &rules else {
                    return Err(HarnessError::config(
                        "rules_file",
                        "the attributes generator needs a rule file",
                    ));
                };
                (s.dims, set.num_attrs(), Head::Sigmoid)
            }
        };
        if self.model.head != expected_head {
            return Err(HarnessError::config(
                "model.head",
                format!(
                    "{:?} head does not fit the {} dataset",
                    self.model.head,
                    self.dataset_name()
                ),
            ));
        }

        let compiled = match (&self.train.relaxation, &rules) {
            (Some(r), Some((_, valid))) if r.kind == RelaxationKind::CompiledRules => {
                let g =
                    r.g.ok_or_else(|| HarnessError::config("train.relaxation.g", "required for compiled_rules"))?;
                Some(Arc::new(compile_relaxation(valid, g, None)?))
            }
            (Some(r), None) if r.kind == RelaxationKind::CompiledRules => {
                return Err(HarnessError::config(
                    "rules_file",
                    "compiled_rules relaxation needs a rule file",
                ));
            }
            _ => None,
        };
        let objective = Objective::new(self.model.head, outputs, &self.train, compiled.clone())
            .map_err(|e| HarnessError::config("train.relaxation", e.to_string()))?;

        let mut sizes = vec![inputs];
        sizes.extend(&self.model.hidden);
        sizes.push(outputs);
        let (rule_set, valid) = match rules {
            Some((s, v)) => (Some(s), Some(v)),
            None => (None, None),
        };
        let prepared = Prepared {
            sizes,
            objective,
            rules: compiled,
            rule_set,
            valid,
        };
        // Surface bad generator parameters now rather than mid-sweep.
        self.dataset(&prepared, self.seeds[0])
            .map_err(|e| HarnessError::config("dataset", e.to_string()))?;
        Ok(prepared)
    }

    fn dataset_name(&self) -> &'static str {
        match self.dataset {
            DatasetSpec::Blobs(_) => "blobs",
            DatasetSpec::TwoMoons(_) => "two_moons",
            DatasetSpec::Attributes(_) => "attributes",
            DatasetSpec::Gauss1d(_) => "gauss1d",
        }
    }

    pub fn dataset(&self, prepared: &Prepared, seed: u64) -> dssl_core::Result<Dataset> {
        match &self.dataset {
            DatasetSpec::Blobs(s) => gen_blobs(s, seed),
            DatasetSpec::TwoMoons(s) => gen_two_moons(s, seed),
            DatasetSpec::Gauss1d(s) => gen_gauss1d(s, seed),
            DatasetSpec::Attributes(s) => {
                let valid = prepared.valid.as_ref().expect("checked in prepare");
                gen_attribute_task_from_valid(valid, s, seed)
            }
        }
    }
}

/// `train.<name>` when a core message starts with `train.<name>:`.
fn field_of(message: &str, section: &str) -> String {
    let prefix = format!("{section}.");
    message
        .find(&prefix)
        .and_then(|at| {
            let rest = &message[at..];
            rest.find(':').map(|end| rest[..end].to_string())
        })
        .unwrap_or_else(|| section.to_string())
}

/// Validated pieces derived from a config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sizes: Vec<usize>,
    pub objective: Objective,
    /// Compiled rules before the config's epsilon is applied.
    pub rules: Option<Arc<CompiledRelaxation>>,
    pub rule_set: Option<RuleSet>,
    pub valid: Option<ValidSet>,
}

impl Prepared {
    /// The same objective with a different training config (e.g. seed).
    pub fn objective_for(&self, train: &TrainConfig, head: Head) -> dssl_core::Result<Objective> {
        let outputs = *self.sizes.last().expect("at least input and output layers");
        Objective::new(head, outputs, train, self.rules.clone())
    }
}
