use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::{FittedModel, ModelSpec};
use crate::timeseries::Window;

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk form of a [`FittedModel`]. Floats are written in shortest
/// round-trip form, so a load reproduces every bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub ticker: String,
    pub cpi1: String,
    pub tau1: i64,
    pub cpi2: String,
    pub tau2: i64,
    pub b1: f64,
    pub b2: f64,
    pub c: f64,
    pub d: f64,
    pub sigma: f64,
    pub window: Window,
    pub residuals: Vec<f64>,
}

impl From<&FittedModel> for ModelDocument {
    fn from(m: &FittedModel) -> Self {
        ModelDocument {
            schema_version: SCHEMA_VERSION,
            ticker: m.spec.ticker.clone(),
            cpi1: m.spec.cpi1.clone(),
            tau1: m.spec.tau1,
            cpi2: m.spec.cpi2.clone(),
            tau2: m.spec.tau2,
            b1: m.b1,
            b2: m.b2,
            c: m.c,
            d: m.d,
            sigma: m.sigma,
            window: m.window,
            residuals: m.residuals.clone(),
        }
    }
}

impl TryFrom<ModelDocument> for FittedModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        if doc.residuals.len() != doc.window.len() {
            return Err(Error::Schema(format!(
                "{} residuals for a {}-month window",
                doc.residuals.len(),
                doc.window.len()
            )));
        }
        // Stored order is kept as is; a swapped pair is still a valid model.
        if doc.cpi1 == doc.cpi2 {
            return Err(Error::Schema("cpi1 and cpi2 are the same component".into()));
        }
        Ok(FittedModel {
            spec: ModelSpec {
                ticker: doc.ticker,
                cpi1: doc.cpi1,
                tau1: doc.tau1,
                cpi2: doc.cpi2,
                tau2: doc.tau2,
            },
            b1: doc.b1,
            b2: doc.b2,
            c: doc.c,
            d: doc.d,
            sigma: doc.sigma,
            window: doc.window,
            residuals: doc.residuals,
        })
    }
}

pub fn model_to_json(model: &FittedModel) -> String {
    serde_json::to_string_pretty(&ModelDocument::from(model)).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<FittedModel> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    doc.try_into()
}

pub fn save_model(model: &FittedModel, path: impl AsRef<Path>) -> Result<()> {
    let mut text = model_to_json(model);
    text.push('\n');
    crate::write_atomic(path.as_ref(), text.as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FittedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

/// Reads either a single model document or a search result file
/// (`{"models": [...]}`), returning models in file order.
pub fn load_models(path: impl AsRef<Path>) -> Result<Vec<FittedModel>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
    match value.get("models") {
        Some(serde_json::Value::Array(items)) => items
            .iter()
            .map(|v| {
                let doc: ModelDocument = serde_json::from_value(v.clone())
                    .map_err(|e| Error::Schema(e.to_string()))?;
                doc.try_into()
            })
            .collect(),
        Some(_) => Err(Error::Schema("`models` must be an array".into())),
        None => {
            let doc: ModelDocument =
                serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
            Ok(vec![doc.try_into()?])
        }
    }
}
