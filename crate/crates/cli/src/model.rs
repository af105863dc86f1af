//! Model JSON loading.
//!
//! Format: `{"A": [[...]], "B": [[...]], "C": [[...]], "D": [[...]]}`
//! with row-major nested arrays; `B`, `C`, `D` are optional and default
//! to zero blocks of consistent dimensions.

use lticert::linalg::Matrix;
use lticert::trajectory::LtiModel;
use serde::Deserialize;
use std::path::Path;

use crate::CliError;

#[derive(Deserialize)]
struct ModelFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C")]
    c: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D")]
    d: Option<Vec<Vec<f64>>>,
}

fn to_matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix, CliError> {
    Matrix::from_rows(rows).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LtiModel, CliError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
        CliError::Input(format!("cannot read model file {}: {e}", path.as_ref().display()))
    })?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("model JSON parse error at line {}: {e}", e.line())))?;

    let a = to_matrix(&file.a, "A")?;
    let n = a.rows();
    let b = match &file.b {
        Some(rows) => to_matrix(rows, "B")?,
        None => Matrix::zeros(n, 0),
    };
    let c = match &file.c {
        Some(rows) => to_matrix(rows, "C")?,
        None => Matrix::zeros(0, n),
    };
    let d = match &file.d {
        Some(rows) => to_matrix(rows, "D")?,
        None => Matrix::zeros(c.rows(), b.cols()),
    };
    LtiModel::new(a, b, c, d).map_err(|e| CliError::Input(e.to_string()))
}

/// Load a square weight matrix: the literal "identity" (sized later by
/// the caller) or a JSON file holding a nested array.
pub enum WeightSpec {
    Identity,
    Explicit(Matrix),
}

pub fn load_weight(spec: &str) -> Result<WeightSpec, CliError> {
    if spec == "identity" {
        return Ok(WeightSpec::Identity);
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| CliError::Input(format!("cannot read weight file {spec}: {e}")))?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("weight JSON parse error: {e}")))?;
    Ok(WeightSpec::Explicit(to_matrix(&rows, "Q")?))
}

pub fn parse_vector(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("{what}: '{tok}' is not a number")))
        })
        .collect()
}
