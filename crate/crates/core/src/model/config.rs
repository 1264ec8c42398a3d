use std::fmt::Write as _;

use crate::corpus::Target;
use crate::fingerprint::fingerprint;

use super::ModelError;

/// Longest supported sequence; the positional table always has this many
/// rows so models trained at different lengths share one layout.
pub const POSITION_CAPACITY: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub max_len: usize,
    pub embed_dim: usize,
    pub num_heads: usize,
    pub num_attention_layers: usize,
    pub ffnn_hidden_dims: Vec<usize>,
    pub num_classes: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub micro_batch: usize,
    pub accumulation_steps: usize,
    pub seed: u64,
    pub target: Target,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::desk(Target::Time)
    }
}

impl ClassifierConfig {
    /// Small from-scratch model that trains on a laptop CPU.
    pub fn desk(target: Target) -> Self {
        ClassifierConfig {
            max_len: 512,
            embed_dim: 64,
            num_heads: 4,
            num_attention_layers: 2,
            ffnn_hidden_dims: vec![128, 64],
            num_classes: target.num_classes(),
            learning_rate: 1e-3,
            epochs: 15,
            micro_batch: 8,
            accumulation_steps: 4,
            seed: 0,
            target,
        }
    }

    /// Desk architecture with the fine-tuning schedule of large pretrained
    /// encoders (lr 1e-5); kept for protocol comparisons.
    pub fn paper(target: Target) -> Self {
        ClassifierConfig {
            learning_rate: 1e-5,
            ..ClassifierConfig::desk(target)
        }
    }

    pub fn effective_batch(&self) -> usize {
        self.micro_batch * self.accumulation_steps
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.num_heads
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.max_len < crate::normalize::MIN_MAX_LEN || self.max_len > POSITION_CAPACITY {
            return bad(format!(
                "max_len {} outside [{}, {POSITION_CAPACITY}]",
                self.max_len,
                crate::normalize::MIN_MAX_LEN
            ));
        }
        if self.embed_dim == 0
            || self.num_heads == 0
            || !self.embed_dim.is_multiple_of(self.num_heads)
        {
            return bad(format!(
                "embed_dim {} must be a positive multiple of num_heads {}",
                self.embed_dim, self.num_heads
            ));
        }
        if self.num_classes != self.target.num_classes() {
            return bad(format!(
                "num_classes {} does not match the {} target ({} classes)",
                self.num_classes,
                self.target,
                self.target.num_classes()
            ));
        }
        if self.ffnn_hidden_dims.is_empty() || self.ffnn_hidden_dims.contains(&0) {
            return bad("ffnn_hidden_dims needs at least one positive width".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            ));
        }
        if self.micro_batch == 0 || self.accumulation_steps == 0 {
            return bad("micro_batch and accumulation_steps must be at least 1".into());
        }
        Ok(())
    }

    /// Canonical `key=value` pairs, sorted by key.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let dims: Vec<String> = self
            .ffnn_hidden_dims
            .iter()
            .map(|d| d.to_string())
            .collect();
        let mut pairs = vec![
            ("accumulation_steps", self.accumulation_steps.to_string()),
            ("embed_dim", self.embed_dim.to_string()),
            ("epochs", self.epochs.to_string()),
            ("ffnn_hidden_dims", dims.join(",")),
            ("learning_rate", format!("{:e}", self.learning_rate)),
            ("max_len", self.max_len.to_string()),
            ("micro_batch", self.micro_batch.to_string()),
            (
                "num_attention_layers",
                self.num_attention_layers.to_string(),
            ),
            ("num_classes", self.num_classes.to_string()),
            ("num_heads", self.num_heads.to_string()),
            ("seed", self.seed.to_string()),
            ("target", self.target.name().to_string()),
        ];
        pairs.sort();
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_pairs() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(self.to_pairs())
    }

    /// Sets one field from its textual form. Changing `target` also resets
    /// `num_classes` to the target's class count.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ModelError> {
            value
                .trim()
                .parse()
                .map_err(|_| ModelError::InvalidConfig(format!("{key}: cannot parse {value:?}")))
        }
        match key.trim() {
            "max_len" => self.max_len = num(key, value)?,
            "embed_dim" => self.embed_dim = num(key, value)?,
            "num_heads" => self.num_heads = num(key, value)?,
            "num_attention_layers" => self.num_attention_layers = num(key, value)?,
            "ffnn_hidden_dims" => {
                self.ffnn_hidden_dims = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(key, s))
                    .collect::<Result<_, _>>()?
            }
            "num_classes" => self.num_classes = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "micro_batch" => self.micro_batch = num(key, value)?,
            "accumulation_steps" => self.accumulation_steps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "target" => {
                self.target = value.parse().map_err(ModelError::InvalidConfig)?;
                self.num_classes = self.target.num_classes();
            }
            other => {
                return Err(ModelError::InvalidConfig(format!(
                    "unknown config key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Parses `key=value` lines on top of the desk defaults. Blank lines and
    /// `#` comments are ignored; `target` is applied before the other keys.
    pub fn from_kv_str(text: &str) -> Result<Self, ModelError> {
        let mut cfg = ClassifierConfig::default();
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ModelError::InvalidConfig(format!("line {}: expected key=value", n + 1))
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        pairs.sort_by_key(|(k, _)| k != "target");
        for (k, v) in pairs {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }
}
