//! JSON model files.
//!
//! ```json
//! { "variables": [{"name": "x", "domain": ["1", "2", "3"]}],
//!   "atoms": ["A", "B"],
//!   "weights": [{"outcome": {"x": "2", "A": true, "B": false}, "w": "1/4"}],
//!   "grid": {"a": 0.0, "b": 1.0, "n": 1000, "densities": [1.0, ...]} }
//! ```
//!
//! Rationals are strings (`"p/q"`, integers, or decimals). Unlisted
//! outcomes weigh zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::grid::{GridError, GridModel};
use super::{Model, ModelError, Outcome};
use crate::ast::{Rational, Symbol};

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("invalid model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid rational `{0}`")]
    Rational(String),
    #[error("outcome does not mention `{0}`")]
    MissingEntry(String),
    #[error("outcome mentions undeclared symbol `{0}`")]
    UndeclaredEntry(String),
    #[error("value for `{0}` has the wrong type")]
    EntryType(String),
    #[error("file declares neither a discrete model nor a grid")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    #[serde(default)]
    variables: Vec<VariableSpec>,
    #[serde(default)]
    atoms: Vec<String>,
    #[serde(default)]
    weights: Vec<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<GridSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VariableSpec {
    name: String,
    domain: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WeightSpec {
    outcome: BTreeMap<String, serde_json::Value>,
    w: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridSpec {
    a: f64,
    b: f64,
    n: usize,
    densities: Vec<f64>,
}

/// Contents of a model file: a discrete table, a grid, or both.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub discrete: Option<Model>,
    pub grid: Option<GridModel>,
}

/// Parses `"3/4"`, `"-2"` or `"0.25"` exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    if body.is_empty() || !body.starts_with(|c: char| c.is_ascii_digit()) {
        return None;
    }
    match crate::parser::parse(body).ok()?.expr {
        crate::ast::Expr::Const(v) => Some(if neg { -v } else { v }),
        _ => None,
    }
}

fn rational(text: &str) -> Result<Rational, ModelFileError> {
    parse_rational(text).ok_or_else(|| ModelFileError::Rational(text.to_string()))
}

pub fn load_model_json(text: &str) -> Result<LoadedModel, ModelFileError> {
    let file: ModelFile = serde_json::from_str(text)?;

    let grid = match &file.grid {
        Some(g) => Some(GridModel::new(g.a, g.b, g.densities.clone()).and_then(|grid| {
            if grid.bins() == g.n {
                Ok(grid)
            } else {
                Err(GridError::BinCount {
                    declared: g.n,
                    found: grid.bins(),
                })
            }
        })?),
        None => None,
    };

    let has_discrete =
        !file.variables.is_empty() || !file.atoms.is_empty() || !file.weights.is_empty();
    if !has_discrete {
        return match grid {
            Some(g) => Ok(LoadedModel {
                discrete: None,
                grid: Some(g),
            }),
            None => Err(ModelFileError::Empty),
        };
    }

    let mut variables = Vec::new();
    for v in &file.variables {
        let domain = v
            .domain
            .iter()
            .map(|d| rational(d))
            .collect::<Result<Vec<_>, _>>()?;
        variables.push((Symbol::new(&v.name), domain));
    }
    let atoms: Vec<Symbol> = file.atoms.iter().map(|a| Symbol::new(a)).collect();

    let mut weights = Vec::new();
    for spec in &file.weights {
        for key in spec.outcome.keys() {
            let s = Symbol::new(key);
            if !variables.iter().any(|(n, _)| *n == s) && !atoms.contains(&s) {
                return Err(ModelFileError::UndeclaredEntry(key.clone()));
            }
        }
        let mut values = Vec::new();
        for (name, _) in &variables {
            let raw = spec
                .outcome
                .get(name.as_str())
                .ok_or_else(|| ModelFileError::MissingEntry(name.to_string()))?;
            values.push(match raw {
                serde_json::Value::String(s) => rational(s)?,
                serde_json::Value::Number(n) => rational(&n.to_string())?,
                _ => return Err(ModelFileError::EntryType(name.to_string())),
            });
        }
        let mut truths = Vec::new();
        for a in &atoms {
            let raw = spec
                .outcome
                .get(a.as_str())
                .ok_or_else(|| ModelFileError::MissingEntry(a.to_string()))?;
            truths.push(
                raw.as_bool()
                    .ok_or_else(|| ModelFileError::EntryType(a.to_string()))?,
            );
        }
        weights.push((Outcome { values, truths }, rational(&spec.w)?));
    }

    Ok(LoadedModel {
        discrete: Some(Model::new(variables, atoms, weights)?),
        grid,
    })
}

/// Serializes a discrete model (positive-weight outcomes only).
pub fn model_to_json(m: &Model) -> String {
    let file = ModelFile {
        variables: m
            .variables()
            .iter()
            .map(|(n, d)| VariableSpec {
                name: n.to_string(),
                domain: d.iter().map(|v| v.to_string()).collect(),
            })
            .collect(),
        atoms: m.atoms().iter().map(|a| a.to_string()).collect(),
        weights: m
            .support()
            .map(|(o, w)| {
                let mut outcome = BTreeMap::new();
                for ((n, _), v) in m.variables().iter().zip(&o.values) {
                    outcome.insert(n.to_string(), serde_json::Value::String(v.to_string()));
                }
                for (a, b) in m.atoms().iter().zip(&o.truths) {
                    outcome.insert(a.to_string(), serde_json::Value::Bool(*b));
                }
                WeightSpec {
                    outcome,
                    w: w.to_string(),
                }
            })
            .collect(),
        grid: None,
    };
    serde_json::to_string(&file).expect("model serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{int, rat};

    const UNIFORM: &str = r#"{
        "variables": [{"name": "x", "domain": ["1", "2", "3"]}],
        "weights": [
            {"outcome": {"x": "1"}, "w": "1/3"},
            {"outcome": {"x": "2"}, "w": "1/3"},
            {"outcome": {"x": "3"}, "w": "1/3"}
        ]
    }"#;

    #[test]
    fn loads_discrete_model() {
        let m = load_model_json(UNIFORM).unwrap().discrete.unwrap();
        assert_eq!(m.domain(&Symbol::new("x")).unwrap(), &[int(1), int(2), int(3)]);
        assert_eq!(m.support().count(), 3);
    }

    #[test]
    fn round_trips_through_json() {
        let m = load_model_json(UNIFORM).unwrap().discrete.unwrap();
        let again = load_model_json(&model_to_json(&m)).unwrap().discrete.unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn rejects_bad_weights() {
        let neg = r#"{"atoms": ["A"], "weights": [
            {"outcome": {"A": true}, "w": "3/2"}, {"outcome": {"A": false}, "w": "-1/2"}]}"#;
        assert!(matches!(
            load_model_json(neg),
            Err(ModelFileError::Model(ModelError::NegativeWeight(_)))
        ));
        let short = r#"{"atoms": ["A"], "weights": [{"outcome": {"A": true}, "w": "1/2"}]}"#;
        assert!(matches!(
            load_model_json(short),
            Err(ModelFileError::Model(ModelError::NotNormalized(_)))
        ));
        let missing = r#"{"atoms": ["A", "B"], "weights": [{"outcome": {"A": true}, "w": "1"}]}"#;
        assert!(matches!(
            load_model_json(missing),
            Err(ModelFileError::MissingEntry(_))
        ));
        let stray = r#"{"atoms": ["A"], "weights": [{"outcome": {"A": true, "Z": true}, "w": "1"}]}"#;
        assert!(matches!(
            load_model_json(stray),
            Err(ModelFileError::UndeclaredEntry(_))
        ));
    }

    #[test]
    fn grid_only_file() {
        let text = r#"{"grid": {"a": 0.0, "b": 1.0, "n": 2, "densities": [1.0, 1.0]}}"#;
        let loaded = load_model_json(text).unwrap();
        assert!(loaded.discrete.is_none());
        assert_eq!(loaded.grid.unwrap().bins(), 2);
        assert!(matches!(load_model_json("{}"), Err(ModelFileError::Empty)));
    }

    #[test]
    fn rational_strings() {
        assert_eq!(parse_rational("3/4"), Some(rat(3, 4)));
        assert_eq!(parse_rational("-2"), Some(int(-2)));
        assert_eq!(parse_rational("0.25"), Some(rat(1, 4)));
        assert_eq!(parse_rational("x"), None);
        assert_eq!(parse_rational("1 + 1"), None);
        assert_eq!(parse_rational("--1"), None);
    }
}
