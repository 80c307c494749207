//! Named ground-truth equations with per-variable sampling bounds.
//!
//! The on-disk form is a CSV with columns
//! `name, expression, p0, a_1, b_1, ..., a_p0, b_p0`; variable names are
//! discovered from the expression in order of first appearance and bound
//! pairs apply in that order.

use super::{discover_variables, parse_expression, Expr, ParseError};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EquationError {
    #[error("equation `{name}`: {source}")]
    Parse {
        name: String,
        #[source]
        source: ParseError,
    },
    #[error("equation `{name}`: bound {index} has a_j >= b_j ({a} >= {b})")]
    BadBounds {
        name: String,
        index: usize,
        a: f64,
        b: f64,
    },
    #[error("equation `{name}`: {declared} bounds declared but expression uses {used} variables")]
    VariableCount {
        name: String,
        declared: usize,
        used: usize,
    },
    #[error("equation file: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A ground-truth equation: expression text, its variables, and the uniform
/// sampling bounds `(a_j, b_j)` for each variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawEquationSpec", into = "RawEquationSpec")]
pub struct EquationSpec {
    name: String,
    text: String,
    variables: Vec<String>,
    bounds: Vec<(f64, f64)>,
    expr: Expr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawEquationSpec {
    name: String,
    expression: String,
    bounds: Vec<(f64, f64)>,
}

impl TryFrom<RawEquationSpec> for EquationSpec {
    type Error = EquationError;
    fn try_from(raw: RawEquationSpec) -> Result<Self, Self::Error> {
        EquationSpec::from_text(&raw.name, &raw.expression, raw.bounds)
    }
}

impl From<EquationSpec> for RawEquationSpec {
    fn from(spec: EquationSpec) -> Self {
        RawEquationSpec {
            name: spec.name,
            expression: spec.text,
            bounds: spec.bounds,
        }
    }
}

impl EquationSpec {
    /// Builds a spec with explicit variable names; `variables[j]` is sampled
    /// from `bounds[j]`. The expression must use every declared variable.
    pub fn new(
        name: &str,
        text: &str,
        variables: Vec<String>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<EquationSpec, EquationError> {
        if variables.len() != bounds.len() {
            return Err(EquationError::VariableCount {
                name: name.to_string(),
                declared: bounds.len(),
                used: variables.len(),
            });
        }
        for (j, &(a, b)) in bounds.iter().enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(EquationError::BadBounds {
                    name: name.to_string(),
                    index: j,
                    a,
                    b,
                });
            }
        }
        let expr = parse_expression(text, &variables).map_err(|source| EquationError::Parse {
            name: name.to_string(),
            source,
        })?;
        let used = expr.variables_raw();
        if used.len() != variables.len() {
            return Err(EquationError::VariableCount {
                name: name.to_string(),
                declared: variables.len(),
                used: used.len(),
            });
        }
        Ok(EquationSpec {
            name: name.to_string(),
            text: text.to_string(),
            variables,
            bounds,
            expr,
        })
    }

    /// Builds a spec discovering variable names from the expression text in
    /// order of first appearance.
    pub fn from_text(
        name: &str,
        text: &str,
        bounds: Vec<(f64, f64)>,
    ) -> Result<EquationSpec, EquationError> {
        let variables = discover_variables(text).map_err(|source| EquationError::Parse {
            name: name.to_string(),
            source,
        })?;
        EquationSpec::new(name, text, variables, bounds)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Number of relevant variables.
    pub fn p0(&self) -> usize {
        self.bounds.len()
    }

    /// Reads every equation from a CSV file with columns
    /// `name, expression, p0, a_1, b_1, ..., a_p0, b_p0`. A header row whose
    /// first field is `name` is skipped.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<EquationSpec>, EquationError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_path(path.as_ref())
            .map_err(|e| EquationError::Csv(e.to_string()))?;
        let mut specs = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| EquationError::Csv(e.to_string()))?;
            if line == 0 && record.get(0) == Some("name") {
                continue;
            }
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            specs.push(Self::from_csv_record(&record, line + 1)?);
        }
        Ok(specs)
    }

    fn from_csv_record(record: &csv::StringRecord, line: usize) -> Result<EquationSpec, EquationError> {
        let field = |i: usize| -> Result<&str, EquationError> {
            record
                .get(i)
                .ok_or_else(|| EquationError::Csv(format!("line {line}: missing field {i}")))
        };
        let name = field(0)?.to_string();
        let text = field(1)?.to_string();
        let p0: usize = field(2)?
            .parse()
            .map_err(|_| EquationError::Csv(format!("line {line}: bad p0 `{}`", field(2).unwrap())))?;
        let mut bounds = Vec::with_capacity(p0);
        for j in 0..p0 {
            let a: f64 = field(3 + 2 * j)?.parse().map_err(|_| {
                EquationError::Csv(format!("line {line}: bad bound a_{}", j + 1))
            })?;
            let b: f64 = field(4 + 2 * j)?.parse().map_err(|_| {
                EquationError::Csv(format!("line {line}: bad bound b_{}", j + 1))
            })?;
            bounds.push((a, b));
        }
        EquationSpec::from_text(&name, &text, bounds)
    }

    /// Writes specs in the same CSV layout `read_csv` accepts.
    pub fn write_csv(specs: &[EquationSpec], path: impl AsRef<Path>) -> Result<(), EquationError> {
        let mut writer = csv::WriterBuilder::new()
            .flexible(true)
            .from_path(path.as_ref())
            .map_err(|e| EquationError::Csv(e.to_string()))?;
        let max_p0 = specs.iter().map(|s| s.p0()).max().unwrap_or(0);
        let mut header = vec!["name".to_string(), "expression".to_string(), "p0".to_string()];
        for j in 1..=max_p0 {
            header.push(format!("a_{j}"));
            header.push(format!("b_{j}"));
        }
        writer
            .write_record(&header)
            .map_err(|e| EquationError::Csv(e.to_string()))?;
        for spec in specs {
            let mut row = vec![spec.name.clone(), spec.text.clone(), spec.p0().to_string()];
            for &(a, b) in &spec.bounds {
                row.push(a.to_string());
                row.push(b.to_string());
            }
            writer
                .write_record(&row)
                .map_err(|e| EquationError::Csv(e.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }
}
