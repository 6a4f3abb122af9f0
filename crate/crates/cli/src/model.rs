//! JSON model files.

use std::path::Path;

use dist25::frame::Distribution;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub coordinates: Vec<String>,
    #[serde(rename = "X1")]
    pub x1: Vec<String>,
    #[serde(rename = "X2")]
    pub x2: Vec<String>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub expect: Expect,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    /// Whether the Cartan quartic must vanish at every point.
    pub flat: Option<bool>,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<ModelFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Parses the fields, naming the offending component on failure.
    pub fn distribution(&self) -> Result<Distribution, CliError> {
        if self.coordinates.len() != 5 {
            return Err(CliError::Input(format!("model {}: expected 5 coordinates, got {}", self.name, self.coordinates.len())));
        }
        let names: Vec<&str> = self.coordinates.iter().map(String::as_str).collect();
        for (label, field) in [("X1", &self.x1), ("X2", &self.x2)] {
            if field.len() != 5 {
                return Err(CliError::Input(format!("model {}: {label} has {} components, expected 5", self.name, field.len())));
            }
            for (i, src) in field.iter().enumerate() {
                dist25::expr::parse_expression(src, &names)
                    .map_err(|e| CliError::Input(format!("model {}: {label}[{i}] `{src}`: {e}", self.name)))?;
            }
        }
        let x1: Vec<&str> = self.x1.iter().map(String::as_str).collect();
        let x2: Vec<&str> = self.x2.iter().map(String::as_str).collect();
        Distribution::parse(&names, &x1, &x2).map_err(|e| CliError::Input(format!("model {}: {e}", self.name)))
    }

    pub fn sample_points(&self) -> Result<Vec<[f64; 5]>, CliError> {
        self.points.iter().map(|p| to_point(p)).collect()
    }
}

pub fn to_point(p: &[f64]) -> Result<[f64; 5], CliError> {
    <[f64; 5]>::try_from(p).map_err(|_| CliError::Input(format!("a point needs 5 coordinates, got {}", p.len())))
}
