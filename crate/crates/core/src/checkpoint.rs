//! Versioned JSON container for trained models.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! written checkpoint reads back bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ModelParams;
use crate::pipeline::TrainConfig;

pub const FORMAT: &str = "esd-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: TrainConfig,
    pub class_names: Vec<String>,
    pub positive_class: usize,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(config: TrainConfig, class_names: Vec<String>, positive_class: usize, params: ModelParams) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            config,
            class_names,
            positive_class,
            params,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|source| Error::Json {
            what: "checkpoint".into(),
            source,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|source| Error::Json {
            what: "checkpoint".into(),
            source,
        })?;
        if c.format != FORMAT || c.version != VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{} (expected {FORMAT} v{VERSION})",
                c.format, c.version
            )));
        }
        c.params.validate()?;
        let dims = c.params.dims();
        if dims.classes != c.class_names.len() || c.positive_class >= dims.classes {
            return Err(Error::Consistency(format!(
                "checkpoint has {} output classes but {} class names",
                dims.classes,
                c.class_names.len()
            )));
        }
        if dims.input_size != c.config.segment_length {
            return Err(Error::Consistency(format!(
                "checkpoint input size {} differs from its segment length {}",
                dims.input_size, c.config.segment_length
            )));
        }
        Ok(c)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::pipeline::write_text(path, &self.to_json()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
