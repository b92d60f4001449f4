//! Problem file schema and validation.

use std::fmt;

use kantorovich_core::{CostMatrix, ExtReal, Potential, ProbVector, StochasticMatrix};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const KINDS: [&str; 6] = ["cost", "transport", "entropic", "markov", "sft", "operator"];

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub kind: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Vec<Vec<ExtReal>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<ExtReal>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential_table: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sense: Option<kantorovich_core::ergopt::Sense>,
    #[serde(default)]
    pub options: Options,
}

/// An input problem that does not fit the schema; the message names the field.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for SchemaError {}

pub fn schema_error(field: &str, message: impl Into<String>) -> SchemaError {
    SchemaError { field: field.to_string(), message: message.into() }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let p: ProblemFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            // Unknown and missing fields are named in the message, not the path.
            let named = inner.to_string().split('`').nth(1).map(str::to_string);
            let field = match (path.as_str(), named) {
                (".", Some(name)) => name,
                (".", None) => "document".to_string(),
                (p, _) => p.to_string(),
            };
            SchemaError { field, message: inner.to_string() }
        })?;
        de.end().map_err(|e| schema_error("document", e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), SchemaError> {
        if !KINDS.contains(&self.kind.as_str()) {
            return Err(schema_error("kind", format!("unknown kind {:?}, expected one of {KINDS:?}", self.kind)));
        }
        if self.n == 0 {
            return Err(schema_error("n", "must be positive"));
        }
        if let Some(cost) = &self.cost {
            square("cost", cost, self.n)?;
            for (i, row) in cost.iter().enumerate() {
                if let Some(j) = row.iter().position(|v| v.is_neg_inf()) {
                    return Err(schema_error("cost", format!("entry ({i}, {j}) is -inf")));
                }
            }
        }
        if let Some(g) = &self.potential {
            length("potential", g.len(), self.n)?;
        }
        for (name, v) in [("mu", &self.mu), ("nu", &self.nu)] {
            if let Some(v) = v {
                length(name, v.len(), self.n)?;
                finite(name, v)?;
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(schema_error("epsilon", "must be a positive number"));
            }
        }
        if let Some(t) = &self.transition_matrix {
            if t.is_empty() || t.iter().any(|row| row.len() != t.len()) {
                return Err(schema_error("transition_matrix", "must be a nonempty square matrix"));
            }
            for row in t {
                finite("transition_matrix", row)?;
            }
        }
        if let Some(tol) = self.options.tol {
            if !(tol > 0.0) {
                return Err(schema_error("options.tol", "must be positive"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical re-serialization.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("problem files serialize");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn cost_matrix(&self) -> Result<CostMatrix, SchemaError> {
        let rows = self.cost.as_ref().ok_or_else(|| schema_error("cost", "required by this command"))?;
        let entries: Vec<ExtReal> = rows.iter().flatten().copied().collect();
        CostMatrix::new(self.n, entries).map_err(|e| schema_error("cost", e.to_string()))
    }

    pub fn potential_or_zero(&self) -> Result<Potential, SchemaError> {
        Ok(match &self.potential {
            Some(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(schema_error("potential", "entries must be finite"));
                }
                Potential::new(v.clone())
            }
            None => Potential::zeros(self.n),
        })
    }

    pub fn measure(&self, field: &str) -> Result<ProbVector, SchemaError> {
        let v = match field {
            "mu" => &self.mu,
            _ => &self.nu,
        };
        let v = v.as_ref().ok_or_else(|| schema_error(field, "required by this command"))?;
        ProbVector::new(v.clone()).map_err(|e| schema_error(field, e.to_string()))
    }

    pub fn epsilon(&self) -> Result<f64, SchemaError> {
        self.epsilon.ok_or_else(|| schema_error("epsilon", "required by this command"))
    }

    pub fn stochastic(&self) -> Result<StochasticMatrix, SchemaError> {
        let t = self
            .transition_matrix
            .as_ref()
            .ok_or_else(|| schema_error("transition_matrix", "required by this command"))?;
        length("transition_matrix", t.len(), self.n)?;
        StochasticMatrix::new(t.clone()).map_err(|e| schema_error("transition_matrix", e.to_string()))
    }

    pub fn transitions(&self) -> Result<Vec<Vec<bool>>, SchemaError> {
        let t = self
            .transition_matrix
            .as_ref()
            .ok_or_else(|| schema_error("transition_matrix", "required by this command"))?;
        t.iter()
            .map(|row| {
                row.iter()
                    .map(|&v| match v {
                        0.0 => Ok(false),
                        1.0 => Ok(true),
                        _ => Err(schema_error("transition_matrix", format!("entries must be 0 or 1, found {v}"))),
                    })
                    .collect()
            })
            .collect()
    }
}

fn square<T>(field: &str, m: &[Vec<T>], n: usize) -> Result<(), SchemaError> {
    length(field, m.len(), n)?;
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(schema_error(field, format!("row {i} has {} entries, expected {n}", row.len())));
        }
    }
    Ok(())
}

fn length(field: &str, found: usize, n: usize) -> Result<(), SchemaError> {
    if found != n {
        return Err(schema_error(field, format!("has {found} entries, expected n = {n}")));
    }
    Ok(())
}

fn finite(field: &str, v: &[f64]) -> Result<(), SchemaError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(schema_error(field, format!("entry {i} is not finite"))),
        None => Ok(()),
    }
}
