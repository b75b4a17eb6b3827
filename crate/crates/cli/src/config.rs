//! Flat `key=value` run configuration.
//!
//! Values come from built-in defaults, then an optional `--config` file,
//! then command-line overrides (`key=value`, `--key value`, `--key=value`).
//! Keys are case-insensitive and `-` is read as `_`. Unknown keys are
//! rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gravrank::models::{FixedMassSource, Precision};
use gravrank::{ModelKind, TrainConfig};
use sha2::{Digest, Sha256};

use crate::CliError;

/// `(key, default, description)`. An empty default means "unset".
pub const KEYS: &[(&str, &str, &str)] = &[
    ("data", "data/sample", "directory holding nodes.tsv, edges.tsv, features.tsv, split.tsv"),
    ("nodes", "", "node file (default: <data>/nodes.tsv)"),
    ("edges", "", "edge file (default: <data>/edges.tsv)"),
    ("features", "", "feature file (default: <data>/features.tsv)"),
    ("split", "", "split file (default: <data>/split.tsv)"),
    ("out", "out", "output directory"),
    ("checkpoint", "", "checkpoint file (default: <out>/model.ckpt)"),
    ("model", "gravity_ae", "gravity_ae | gravity_vae | standard_ae | standard_vae | source_target_ae | source_target_vae"),
    ("baseline", "", "evaluate a baseline instead of a model"),
    ("dim", "32", "embedding width d (gravity models add one mass column)"),
    ("hidden", "64", "hidden GCN layer width"),
    ("epochs", "300", "full-batch training epochs"),
    ("lr", "0.05", "Adam learning rate"),
    ("lambda", "5", "gravity distance weight"),
    ("eps_dist", "1e-10", "lower clamp on squared distances"),
    ("lambda_in_training", "true", "use lambda in the training decoder (otherwise train with 1)"),
    ("seed", "0", "base seed; run r uses seed + r"),
    ("precision", "f64", "f64 | f32"),
    ("fixed_mass", "none", "none | popularity | in_degree | pagerank"),
    ("max_nodes", "30000", "refuse to train on larger graphs"),
    ("candidates", "all", "all | warm-only"),
    ("ks", "20,100,200", "comma-separated cutoffs"),
    ("runs", "1", "number of seeded runs"),
    ("part", "test", "queries to rank: test | valid"),
    ("path_length", "inverse_weight", "betweenness edge lengths: inverse_weight | uniform"),
    ("profile_top", "20", "list prefix scanned by the popularity-bias profile"),
    ("lambdas", "1,5,20", "lambda values for sweep-lambda"),
    ("ratios", "0.8,0.1,0.1", "train,valid,test fractions for split"),
    ("svd_dim", "32", "SVD baseline width"),
    ("svd_hidden", "64,32", "SVD baseline MLP hidden widths"),
    ("svd_epochs", "300", "SVD baseline MLP epochs"),
    ("svd_lr", "0.01", "SVD baseline MLP learning rate"),
    ("sample_nodes", "200", "make-sample: node count"),
    ("sample_k", "5", "make-sample: out-edges per node"),
];

/// Keys whose values are part of a trained model.
pub const TRAINING_KEYS: &[&str] = &[
    "model", "dim", "hidden", "epochs", "lr", "lambda", "eps_dist", "lambda_in_training", "seed", "precision",
    "fixed_mass", "max_nodes",
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
    explicit: BTreeSet<&'static str>,
    pub force: bool,
}

fn canonical_key(raw: &str) -> Result<&'static str, CliError> {
    let k = raw.trim().to_ascii_lowercase().replace('-', "_");
    KEYS.iter()
        .find(|(name, _, _)| *name == k)
        .map(|(name, _, _)| *name)
        .ok_or_else(|| CliError::Input(format!("unknown config key `{}`", raw.trim())))
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, v, _)| (*k, v.to_string())).collect(),
            explicit: BTreeSet::new(),
            force: false,
        }
    }
}

impl RunConfig {
    /// Builds the configuration from command-line tokens following the
    /// subcommand. `--config` files are applied before any override,
    /// wherever they appear.
    pub fn from_args(tokens: &[String]) -> Result<Self, CliError> {
        let mut config_files = Vec::new();
        let mut pairs = Vec::new();
        let mut force = false;
        let mut it = tokens.iter();
        while let Some(tok) = it.next() {
            if tok == "--force" {
                force = true;
            } else if let Some(path) = tok.strip_prefix("--config=") {
                config_files.push(PathBuf::from(path));
            } else if tok == "--config" {
                let path = it.next().ok_or_else(|| CliError::Input("--config needs a file".into()))?;
                config_files.push(PathBuf::from(path));
            } else if let Some(flag) = tok.strip_prefix("--") {
                match flag.split_once('=') {
                    Some((k, v)) => pairs.push((k.to_string(), v.to_string())),
                    None => {
                        let v = it
                            .next()
                            .ok_or_else(|| CliError::Input(format!("--{flag} needs a value")))?;
                        pairs.push((flag.to_string(), v.clone()));
                    }
                }
            } else if let Some((k, v)) = tok.split_once('=') {
                pairs.push((k.to_string(), v.to_string()));
            } else {
                return Err(CliError::Input(format!("cannot parse argument `{tok}`; expected key=value")));
            }
        }
        let mut cfg = RunConfig { force, ..RunConfig::default() };
        for path in config_files {
            cfg.apply_file(&path)?;
        }
        for (k, v) in pairs {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Input(format!("{}:{}: expected key=value", path.display(), ln + 1))
            })?;
            self.set(k, v.trim())
                .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), ln + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = canonical_key(key)?;
        self.values.insert(key, value.trim().to_string());
        self.explicit.insert(key);
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("undeclared key `{key}`"))
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.get(key);
        v.parse().map_err(|e| CliError::Input(format!("bad value `{v}` for `{key}`: {e}")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| CliError::Input(format!("bad entry `{s}` in `{key}`: {e}"))))
            .collect()
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key).to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(CliError::Input(format!("bad value `{v}` for `{key}`: expected true or false"))),
        }
    }

    /// A data file: the explicit value, or `<data>/<key>.tsv`.
    pub fn data_path(&self, key: &str) -> PathBuf {
        match self.get(key) {
            "" => Path::new(self.get("data")).join(format!("{key}.tsv")),
            p => PathBuf::from(p),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("out"))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        match self.get("checkpoint") {
            "" => self.out_dir().join("model.ckpt"),
            p => PathBuf::from(p),
        }
    }

    pub fn model(&self) -> Result<ModelKind, CliError> {
        self.parse("model")
    }

    /// Training settings for run `run` (seed offset by the run index).
    pub fn train_config(&self, run: usize) -> Result<TrainConfig, CliError> {
        let model = self.model()?;
        let precision = match self.get("precision") {
            "f64" => Precision::F64,
            "f32" => Precision::F32,
            v => return Err(CliError::Input(format!("bad value `{v}` for `precision`: expected f64 or f32"))),
        };
        let fixed_mass = match self.get("fixed_mass") {
            "" | "none" => None,
            v => Some(v.parse::<FixedMassSource>().map_err(|e| CliError::Input(e.to_string()))?),
        };
        Ok(TrainConfig {
            dim: self.parse("dim")?,
            hidden: self.parse("hidden")?,
            epochs: self.parse("epochs")?,
            lr: self.parse("lr")?,
            lambda: self.parse("lambda")?,
            eps_dist: self.parse("eps_dist")?,
            lambda_in_training: self.bool("lambda_in_training")?,
            variational: model.variational(),
            seed: self.parse::<u64>("seed")? + run as u64,
            precision,
            fixed_mass,
            max_nodes: self.parse("max_nodes")?,
        })
    }

    /// `key=value` lines in key order.
    pub fn canonical(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        hex_digest(self.canonical().as_bytes())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.values
                .iter()
                .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
