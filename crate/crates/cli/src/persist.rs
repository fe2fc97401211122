//! Model files: a JSON envelope with a format tag, a version, the feature
//! schema and the model itself.

use std::path::Path;

use maternal_core::data::FeatureSchema;
use maternal_core::model::TrainedModel;
use serde::{Deserialize, Serialize};

use crate::csv_io::write_file;
use crate::error::{AppError, AppResult};

pub const FORMAT: &str = "maternal-model";
pub const VERSION: u32 = 1;

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format: &'a str,
    version: u32,
    schema: &'a FeatureSchema,
    model: &'a TrainedModel,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    schema: FeatureSchema,
    model: TrainedModel,
}

pub fn to_json(model: &TrainedModel, schema: &FeatureSchema) -> String {
    let env = EnvelopeOut {
        format: FORMAT,
        version: VERSION,
        schema,
        model,
    };
    serde_json::to_string(&env).expect("models serialise")
}

/// Parses and validates a model file's contents.
pub fn from_json(text: &str) -> Result<(TrainedModel, FeatureSchema), String> {
    let header: Header = serde_json::from_str(text).map_err(|e| format!("not a model file: {e}"))?;
    if header.format != FORMAT {
        return Err(format!("format `{}`, expected `{FORMAT}`", header.format));
    }
    if header.version != VERSION {
        return Err(format!("unsupported version {} (this build reads {VERSION})", header.version));
    }
    let env: EnvelopeIn = serde_json::from_str(text).map_err(|e| format!("corrupt payload: {e}"))?;
    let schema = FeatureSchema::new(env.schema.feature_names().to_vec(), env.schema.label_name())
        .map_err(|e| e.to_string())?;
    env.model.validate(schema.len()).map_err(|e| e.to_string())?;
    Ok((env.model, schema))
}

pub fn save_model(path: &Path, model: &TrainedModel, schema: &FeatureSchema) -> AppResult<()> {
    write_file(path, to_json(model, schema).as_bytes())
}

pub fn load_model(path: &Path) -> AppResult<(TrainedModel, FeatureSchema)> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    from_json(&text).map_err(|reason| AppError::ModelFile {
        path: path.to_path_buf(),
        reason,
    })
}
