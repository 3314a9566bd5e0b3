use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use super::expansion::expansion_dim;
use super::preprocess::{PreprocessMode, Preprocessor};
use super::train::{Method, SfaModel};
use crate::error::{Result, SfaError};

pub const MODEL_VERSION: &str = "sfa-model/1";

fn raw_number(x: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{x:.16e}")).expect("finite float renders as a JSON number")
}

fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    raw_number(*x).serialize(s)
}

fn ser_vec<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    xs.iter().map(|&x| raw_number(x)).collect::<Vec<_>>().serialize(s)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    version: String,
    method: String,
    #[serde(serialize_with = "ser_f64")]
    epsilon: f64,
    m: usize,
    n: usize,
    #[serde(rename = "M")]
    big_m: usize,
    #[serde(rename = "P")]
    p: usize,
    rank_of_b: usize,
    #[serde(default)]
    machine_rank: Option<usize>,
    #[serde(default)]
    unstable: bool,
    mode: String,
    #[serde(serialize_with = "ser_vec")]
    s0: Vec<f64>,
    #[serde(serialize_with = "ser_vec")]
    w0: Vec<f64>,
    #[serde(serialize_with = "ser_vec")]
    v0: Vec<f64>,
    #[serde(serialize_with = "ser_vec")]
    eigenvalues: Vec<f64>,
    #[serde(serialize_with = "ser_vec")]
    weights: Vec<f64>,
}

fn row_major(a: &DMatrix<f64>) -> Vec<f64> {
    a.transpose().as_slice().to_vec()
}

fn check_finite(model: &SfaModel) -> Result<()> {
    let fields: [(&str, &[f64]); 5] = [
        ("s0", model.preprocessor.s0.as_slice()),
        ("w0", model.preprocessor.w0.as_slice()),
        ("v0", model.v0.as_slice()),
        ("eigenvalues", model.eigenvalues.as_slice()),
        ("weights", model.weights.as_slice()),
    ];
    for (name, xs) in fields {
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(SfaError::Schema(format!("field {name} contains non-finite values")));
        }
    }
    if !model.epsilon.is_finite() {
        return Err(SfaError::Schema("field epsilon is non-finite".into()));
    }
    Ok(())
}

pub fn model_to_json(model: &SfaModel) -> Result<String> {
    check_finite(model)?;
    let doc = ModelDocument {
        version: MODEL_VERSION.into(),
        method: model.method.to_string(),
        epsilon: model.epsilon,
        m: model.preprocessor.input_dim(),
        n: model.preprocessor.output_dim(),
        big_m: model.expanded_dim(),
        p: model.components(),
        rank_of_b: model.rank_of_b,
        machine_rank: Some(model.machine_rank),
        unstable: model.unstable,
        mode: model.preprocessor.mode.to_string(),
        s0: model.preprocessor.s0.as_slice().to_vec(),
        w0: row_major(&model.preprocessor.w0),
        v0: model.v0.as_slice().to_vec(),
        eigenvalues: model.eigenvalues.as_slice().to_vec(),
        weights: row_major(&model.weights),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| SfaError::Schema(e.to_string()))
}

fn expect_len(name: &str, xs: &[f64], len: usize) -> Result<()> {
    if xs.len() != len {
        return Err(SfaError::Schema(format!(
            "field {name} has {} entries, expected {len}",
            xs.len()
        )));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(SfaError::Schema(format!("field {name} contains non-finite values")));
    }
    Ok(())
}

pub fn model_from_json(text: &str) -> Result<SfaModel> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| SfaError::Schema(format!("malformed or truncated document: {e}")))?;
    match value.get("version").and_then(|v| v.as_str()) {
        None => return Err(SfaError::Schema("missing field `version`".into())),
        Some(v) if v != MODEL_VERSION => {
            return Err(SfaError::UnsupportedVersion {
                found: v.into(),
                expected: MODEL_VERSION,
            })
        }
        Some(_) => {}
    }
    let doc: ModelDocument =
        serde_json::from_value(value).map_err(|e| SfaError::Schema(e.to_string()))?;

    let method: Method = doc.method.parse().map_err(|_| {
        SfaError::Schema(format!("unknown method {:?}", doc.method))
    })?;
    let mode: PreprocessMode = doc
        .mode
        .parse()
        .map_err(|_| SfaError::Schema(format!("unknown mode {:?}", doc.mode)))?;
    if doc.big_m != expansion_dim(doc.n) {
        return Err(SfaError::Schema(format!(
            "M = {} does not match the expansion of n = {}",
            doc.big_m, doc.n
        )));
    }
    if doc.n > doc.m || doc.p > doc.big_m || doc.rank_of_b > doc.big_m {
        return Err(SfaError::Schema("inconsistent dimensions".into()));
    }
    if !(doc.epsilon.is_finite() && doc.epsilon > 0.0 && doc.epsilon < 1.0) {
        return Err(SfaError::Schema(format!("epsilon {} outside (0, 1)", doc.epsilon)));
    }
    expect_len("s0", &doc.s0, doc.m)?;
    expect_len("w0", &doc.w0, doc.n * doc.m)?;
    expect_len("v0", &doc.v0, doc.big_m)?;
    expect_len("eigenvalues", &doc.eigenvalues, doc.p)?;
    expect_len("weights", &doc.weights, doc.big_m * doc.p)?;

    Ok(SfaModel {
        preprocessor: Preprocessor {
            w0: DMatrix::from_row_slice(doc.n, doc.m, &doc.w0),
            s0: DVector::from_vec(doc.s0),
            mode,
        },
        v0: DVector::from_vec(doc.v0),
        eigenvalues: DVector::from_vec(doc.eigenvalues),
        weights: DMatrix::from_row_slice(doc.big_m, doc.p, &doc.weights),
        method,
        epsilon: doc.epsilon,
        rank_of_b: doc.rank_of_b,
        machine_rank: doc.machine_rank.unwrap_or(doc.rank_of_b),
        unstable: doc.unstable,
    })
}

pub fn save_model(model: &SfaModel, path: impl AsRef<Path>) -> Result<()> {
    let text = model_to_json(model)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SfaModel> {
    model_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sfa::train::{train, TrainOptions};

    fn model() -> SfaModel {
        let series = DMatrix::from_fn(300, 2, |t, j| {
            let t = t as f64;
            (0.9 * t + j as f64).sin() * (0.03 * t).cos() + 0.1 * (2.1 * t).sin()
        });
        train(&series, &TrainOptions::default()).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let back = model_from_json(&model_to_json(&m).unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(raw_number(0.1).get(), "1.0000000000000001e-1");
        assert_eq!(raw_number(-2.0).get(), "-2.0000000000000000e0");
        for x in [1.0 / 3.0, 1e-300, 6.02e23, -0.0] {
            let s = raw_number(x).get().to_string();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn missing_eigenvalues() {
        let text = model_to_json(&model()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().remove("eigenvalues");
        let err = model_from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, SfaError::Schema(_)));
        assert!(err.to_string().contains("eigenvalues"));
    }

    #[test]
    fn future_version() {
        let text = model_to_json(&model())
            .unwrap()
            .replace(MODEL_VERSION, "sfa-model/2");
        let err = model_from_json(&text).unwrap_err();
        assert!(err.to_string().contains("unsupported version"));
    }

    #[test]
    fn truncated_document() {
        let text = model_to_json(&model()).unwrap();
        let err = model_from_json(&text[..text.len() / 2]).unwrap_err();
        assert!(matches!(err, SfaError::Schema(_)));
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = model();
        m.v0[0] = f64::NAN;
        assert!(model_to_json(&m).is_err());
    }

    #[test]
    fn wrong_length_rejected() {
        let text = model_to_json(&model()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["v0"].as_array_mut().unwrap().pop();
        assert!(model_from_json(&v.to_string()).is_err());
    }
}
