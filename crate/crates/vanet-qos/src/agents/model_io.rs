//! Versioned plain-text model files: a self-describing header (kind,
//! dimensions, seed) followed by whitespace-separated decimal values.
//! Values print as shortest round-trip decimals, so save -> load -> save
//! is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

/// First line of every model file.
pub const MODEL_MAGIC: &str = "vanetqos-model v1";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot access model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error("model kind mismatch: file holds {found}, expected {expected}")]
    WrongKind { expected: String, found: String },
    #[error("model dimension mismatch: file has {found}, expected {expected}")]
    DimensionMismatch { expected: String, found: String },
}

/// Parsed contents of a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    QTable {
        states: usize,
        actions: usize,
        seed: u64,
        values: Vec<f64>,
    },
    Dqn {
        input: usize,
        hidden: usize,
        actions: usize,
        seed: u64,
        main: Vec<f64>,
        target: Vec<f64>,
    },
    ActorCritic {
        input: usize,
        hidden: usize,
        actions: usize,
        seed: u64,
        actor: Vec<f64>,
        critic: Vec<f64>,
    },
}

impl SavedModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            SavedModel::QTable { .. } => "qtable",
            SavedModel::Dqn { .. } => "dqn",
            SavedModel::ActorCritic { .. } => "actor-critic",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            SavedModel::QTable { seed, .. }
            | SavedModel::Dqn { seed, .. }
            | SavedModel::ActorCritic { seed, .. } => *seed,
        }
    }
}

fn mlp_param_count(input: usize, hidden: usize, output: usize) -> Option<usize> {
    let w1 = hidden.checked_mul(input)?;
    let w2 = output.checked_mul(hidden)?;
    w1.checked_add(hidden)?.checked_add(w2)?.checked_add(output)
}

/// Serializes a model in the canonical text format.
pub fn serialize_model(model: &SavedModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC}");
    let _ = writeln!(out, "kind {}", model.kind_name());
    match model {
        SavedModel::QTable {
            states,
            actions,
            seed,
            values,
        } => {
            let _ = writeln!(out, "dims {states} {actions}");
            let _ = writeln!(out, "seed {seed}");
            write_values(&mut out, values);
        }
        SavedModel::Dqn {
            input,
            hidden,
            actions,
            seed,
            main,
            target,
        } => {
            let _ = writeln!(out, "dims {input} {hidden} {actions}");
            let _ = writeln!(out, "seed {seed}");
            write_values(&mut out, main);
            write_values(&mut out, target);
        }
        SavedModel::ActorCritic {
            input,
            hidden,
            actions,
            seed,
            actor,
            critic,
        } => {
            let _ = writeln!(out, "dims {input} {hidden} {actions}");
            let _ = writeln!(out, "seed {seed}");
            write_values(&mut out, actor);
            write_values(&mut out, critic);
        }
    }
    out
}

fn write_values(out: &mut String, values: &[f64]) {
    for chunk in values.chunks(8) {
        let mut first = true;
        for v in chunk {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
}

/// Parses model text. Never panics on malformed input.
pub fn parse_model(text: &str) -> Result<SavedModel, ModelError> {
    let mut lines = text.lines();
    let magic = lines
        .next()
        .ok_or_else(|| ModelError::Malformed("empty file".into()))?;
    if magic.trim_end() != MODEL_MAGIC {
        return Err(ModelError::Malformed(format!(
            "bad magic line `{magic}` (expected `{MODEL_MAGIC}`)"
        )));
    }
    let kind_line = lines
        .next()
        .ok_or_else(|| ModelError::Malformed("missing kind line".into()))?;
    let kind = kind_line
        .strip_prefix("kind ")
        .ok_or_else(|| ModelError::Malformed(format!("bad kind line `{kind_line}`")))?
        .trim();

    let dims_line = lines
        .next()
        .ok_or_else(|| ModelError::Malformed("missing dims line".into()))?;
    let dims: Vec<usize> = dims_line
        .strip_prefix("dims ")
        .ok_or_else(|| ModelError::Malformed(format!("bad dims line `{dims_line}`")))?
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| ModelError::Malformed(format!("bad dimension `{t}`")))
        })
        .collect::<Result<_, _>>()?;

    let seed_line = lines
        .next()
        .ok_or_else(|| ModelError::Malformed("missing seed line".into()))?;
    let seed: u64 = seed_line
        .strip_prefix("seed ")
        .ok_or_else(|| ModelError::Malformed(format!("bad seed line `{seed_line}`")))?
        .trim()
        .parse()
        .map_err(|_| ModelError::Malformed(format!("bad seed in `{seed_line}`")))?;

    let mut values = Vec::new();
    for line in lines {
        for token in line.split_whitespace() {
            let v: f64 = token
                .parse()
                .map_err(|_| ModelError::Malformed(format!("bad value `{token}`")))?;
            if !v.is_finite() {
                return Err(ModelError::Malformed(format!("non-finite value `{token}`")));
            }
            values.push(v);
        }
    }

    match kind {
        "qtable" => {
            let [states, actions] = dims[..] else {
                return Err(ModelError::Malformed(
                    "qtable dims must be `states actions`".into(),
                ));
            };
            let expected = states
                .checked_mul(actions)
                .ok_or_else(|| ModelError::Malformed("qtable dimensions overflow".into()))?;
            if values.len() != expected {
                return Err(ModelError::Malformed(format!(
                    "expected {expected} values, found {}",
                    values.len()
                )));
            }
            Ok(SavedModel::QTable {
                states,
                actions,
                seed,
                values,
            })
        }
        "dqn" | "actor-critic" => {
            let [input, hidden, actions] = dims[..] else {
                return Err(ModelError::Malformed(
                    "network dims must be `input hidden actions`".into(),
                ));
            };
            let first_len = mlp_param_count(input, hidden, actions)
                .ok_or_else(|| ModelError::Malformed("network dimensions overflow".into()))?;
            let second_len = if kind == "dqn" {
                first_len
            } else {
                mlp_param_count(input, hidden, 1)
                    .ok_or_else(|| ModelError::Malformed("network dimensions overflow".into()))?
            };
            let expected = first_len
                .checked_add(second_len)
                .ok_or_else(|| ModelError::Malformed("network dimensions overflow".into()))?;
            if values.len() != expected {
                return Err(ModelError::Malformed(format!(
                    "expected {expected} values, found {}",
                    values.len()
                )));
            }
            let second = values.split_off(first_len);
            if kind == "dqn" {
                Ok(SavedModel::Dqn {
                    input,
                    hidden,
                    actions,
                    seed,
                    main: values,
                    target: second,
                })
            } else {
                Ok(SavedModel::ActorCritic {
                    input,
                    hidden,
                    actions,
                    seed,
                    actor: values,
                    critic: second,
                })
            }
        }
        other => Err(ModelError::Malformed(format!("unknown kind `{other}`"))),
    }
}

pub fn save_model(model: &SavedModel, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, serialize_model(model)).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<SavedModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}
