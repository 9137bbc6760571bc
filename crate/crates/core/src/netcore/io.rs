//! Network file format.
//!
//! A JSON document with top-level fields `input_dim`, `output_dim`,
//! `layers` (each `{ "W": [[...]], "b": [...], "activation": {...} }`, weights
//! row-major) and `final` (`{ "W", "b" }`). Values are read verbatim: a file
//! holding four-decimal weights yields exactly those decimals.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::net::{AffineMap, Layer, NeuralNet};
use crate::activations::Activation;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct AffineFile {
    #[serde(rename = "W")]
    weight: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    #[serde(rename = "W")]
    weight: Vec<Vec<f64>>,
    b: Vec<f64>,
    activation: Activation,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetFile {
    input_dim: usize,
    output_dim: usize,
    layers: Vec<LayerFile>,
    #[serde(rename = "final")]
    output: AffineFile,
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

fn affine_from(weight: &[Vec<f64>], b: Vec<f64>, in_dim: usize, location: &str) -> Result<AffineMap> {
    let w = Matrix::from_rows(weight).map_err(|e| parse_err(format!("{location}.W"), e.to_string()))?;
    if w.rows() == 0 {
        return Err(parse_err(format!("{location}.W"), "weight matrix has no rows"));
    }
    if w.cols() != in_dim {
        return Err(parse_err(
            format!("{location}.W"),
            format!("expected {in_dim} columns, found {}", w.cols()),
        ));
    }
    if b.len() != w.rows() {
        return Err(parse_err(
            format!("{location}.b"),
            format!("expected {} entries, found {}", w.rows(), b.len()),
        ));
    }
    AffineMap::new(w, b).map_err(|e| parse_err(location, e.to_string()))
}

impl NeuralNet {
    pub fn to_json(&self) -> String {
        let file = NetFile {
            input_dim: self.input_dim(),
            output_dim: self.output_dim(),
            layers: self
                .layers()
                .iter()
                .map(|l| LayerFile {
                    weight: l.affine.weight().to_rows(),
                    b: l.affine.bias().to_vec(),
                    activation: l.activation,
                })
                .collect(),
            output: AffineFile {
                weight: self.output().weight().to_rows(),
                b: self.output().bias().to_vec(),
            },
        };
        serde_json::to_string_pretty(&file).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<NeuralNet> {
        let file: NetFile = serde_json::from_str(text).map_err(|e| {
            parse_err(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        let mut dim = file.input_dim;
        let mut layers = Vec::with_capacity(file.layers.len());
        for (k, layer) in file.layers.into_iter().enumerate() {
            let affine = affine_from(&layer.weight, layer.b, dim, &format!("layers[{k}]"))?;
            dim = affine.out_dim();
            layers.push(Layer {
                affine,
                activation: layer.activation,
            });
        }
        let output = affine_from(&file.output.weight, file.output.b, dim, "final")?;
        if output.out_dim() != file.output_dim {
            return Err(parse_err(
                "final.W",
                format!(
                    "declared output_dim {} but final map produces {}",
                    file.output_dim,
                    output.out_dim()
                ),
            ));
        }
        NeuralNet::new(layers, output).map_err(|e| parse_err("layers", e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<NeuralNet> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        NeuralNet::from_json(&text).map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }
}

/// The width-4, depth-4 `ELU_1` network whose weights are printed to four
/// decimals for the rot_2 experiment.
pub const APPENDIX_C_NET: &str = include_str!("../../../../assets/appendix_c.net");

pub fn appendix_c_net() -> NeuralNet {
    NeuralNet::from_json(APPENDIX_C_NET).expect("shipped network file is valid")
}
