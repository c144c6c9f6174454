//! The JSON problem document: a family, its sizes, named log-potential
//! tensors as nested arrays and, for `logprob`, a structure indicator.
//!
//! Non-finite numbers travel as the strings `"-inf"`, `"inf"` and `"nan"`.

use serde_json::{json, Map, Value};
use structdist_core::{Family, FamilyConfig, NamedTensors, StructureIndicator, StructuredDistribution, Tensor};

/// Malformed input; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct FormatError(pub String);

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for FormatError {}

fn bad(msg: impl Into<String>) -> FormatError {
    FormatError(msg.into())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemFile {
    pub config: FamilyConfig,
    pub potentials: NamedTensors,
    pub structure: Option<NamedTensors>,
}

impl ProblemFile {
    pub fn from_distribution(d: &StructuredDistribution) -> Self {
        ProblemFile {
            config: d.config(),
            potentials: d.log_potentials(),
            structure: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| bad(format!("invalid JSON: {e}")))?;
        Self::from_value(&doc)
    }

    pub fn from_value(doc: &Value) -> Result<Self, FormatError> {
        let obj = doc.as_object().ok_or_else(|| bad("problem must be a JSON object"))?;
        let family: Family = obj
            .get("family")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing string field \"family\""))?
            .parse()
            .map_err(|e: structdist_core::Error| bad(e.to_string()))?;
        let config = config_from_value(
            family,
            obj.get("config").ok_or_else(|| bad("missing field \"config\""))?,
        )?;
        let potentials = tensors_from_value(
            obj.get("potentials")
                .ok_or_else(|| bad("missing field \"potentials\""))?,
        )?;
        let structure = match obj.get("structure") {
            None | Some(Value::Null) => None,
            Some(v) => Some(tensors_from_value(v)?),
        };
        Ok(ProblemFile {
            config,
            potentials,
            structure,
        })
    }

    pub fn to_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("family".into(), json!(self.config.family().name()));
        obj.insert("config".into(), config_to_value(&self.config));
        obj.insert("potentials".into(), tensors_to_value(&self.potentials));
        if let Some(s) = &self.structure {
            obj.insert("structure".into(), tensors_to_value(s));
        }
        Value::Object(obj)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("values are serializable")
    }

    pub fn distribution(&self) -> structdist_core::Result<StructuredDistribution> {
        StructuredDistribution::from_config(&self.config, &self.potentials)
    }

    pub fn structure_indicator(&self) -> Option<StructureIndicator> {
        self.structure.clone().map(StructureIndicator::new)
    }
}

fn get_usize(obj: &Map<String, Value>, key: &str) -> Result<usize, FormatError> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| bad(format!("config needs a non-negative integer {key:?}")))
}

fn get_bool(obj: &Map<String, Value>, key: &str) -> Result<bool, FormatError> {
    obj.get(key)
        .and_then(Value::as_bool)
        .ok_or_else(|| bad(format!("config needs a boolean {key:?}")))
}

pub fn config_from_value(family: Family, v: &Value) -> Result<FamilyConfig, FormatError> {
    let c = v.as_object().ok_or_else(|| bad("config must be an object"))?;
    let u = |k| get_usize(c, k);
    Ok(match family {
        Family::LinearChain => FamilyConfig::LinearChain { n: u("n")?, m: u("m")? },
        Family::SemiMarkov => FamilyConfig::SemiMarkov {
            n: u("n")?,
            s: u("s")?,
            m: u("m")?,
        },
        Family::MonotoneAlignment => FamilyConfig::MonotoneAlignment { n: u("n")?, m: u("m")? },
        Family::Ctc => FamilyConfig::Ctc {
            frames: u("frames")?,
            vocab: u("vocab")?,
            target: c
                .get("target")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("config needs an integer array \"target\""))?
                .iter()
                .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| bad("target entries must be integers")))
                .collect::<Result<_, _>>()?,
        },
        Family::OneToOne => FamilyConfig::OneToOne { n: u("n")? },
        Family::TreeCrf => FamilyConfig::TreeCrf { n: u("n")?, m: u("m")? },
        Family::Pcfg => FamilyConfig::Pcfg {
            n: u("n")?,
            nt: u("nt")?,
            pt: u("pt")?,
        },
        Family::SpanningTree => FamilyConfig::SpanningTree {
            n: u("n")?,
            directed: get_bool(c, "directed")?,
            projective: get_bool(c, "projective")?,
            single_root_edge: get_bool(c, "single_root_edge")?,
        },
    })
}

pub fn config_to_value(config: &FamilyConfig) -> Value {
    match config {
        FamilyConfig::LinearChain { n, m } => json!({ "n": n, "m": m }),
        FamilyConfig::SemiMarkov { n, s, m } => json!({ "n": n, "s": s, "m": m }),
        FamilyConfig::MonotoneAlignment { n, m } => json!({ "n": n, "m": m }),
        FamilyConfig::Ctc {
            frames,
            vocab,
            target,
        } => json!({ "frames": frames, "vocab": vocab, "target": target }),
        FamilyConfig::OneToOne { n } => json!({ "n": n }),
        FamilyConfig::TreeCrf { n, m } => json!({ "n": n, "m": m }),
        FamilyConfig::Pcfg { n, nt, pt } => json!({ "n": n, "nt": nt, "pt": pt }),
        FamilyConfig::SpanningTree {
            n,
            directed,
            projective,
            single_root_edge,
        } => json!({
            "n": n,
            "directed": directed,
            "projective": projective,
            "single_root_edge": single_root_edge,
        }),
    }
}

pub fn number_to_value(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn number_from_value(v: &Value) -> Result<f64, FormatError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| bad("number out of range")),
        Value::String(s) => match s.as_str() {
            "-inf" => Ok(f64::NEG_INFINITY),
            "inf" => Ok(f64::INFINITY),
            "nan" => Ok(f64::NAN),
            _ => Err(bad(format!("unexpected string {s:?} in a tensor"))),
        },
        _ => Err(bad("tensor entries must be numbers or \"-inf\"")),
    }
}

pub fn tensor_to_value(t: &Tensor) -> Value {
    fn go(shape: &[usize], data: &[f64]) -> Value {
        match shape {
            [] => number_to_value(data[0]),
            [d, rest @ ..] => {
                let stride: usize = rest.iter().product();
                Value::Array(
                    (0..*d)
                        .map(|i| go(rest, &data[i * stride..(i + 1) * stride]))
                        .collect(),
                )
            }
        }
    }
    go(t.shape(), t.data())
}

/// Reads a rectangular nested array. Empty arrays give a zero-length axis.
pub fn tensor_from_value(v: &Value) -> Result<Tensor, FormatError> {
    let mut shape = Vec::new();
    let mut cur = v;
    while let Value::Array(items) = cur {
        shape.push(items.len());
        match items.first() {
            Some(first) => cur = first,
            None => break,
        }
    }
    let mut data = Vec::with_capacity(shape.iter().product());
    fn go(v: &Value, shape: &[usize], data: &mut Vec<f64>) -> Result<(), FormatError> {
        match shape {
            [] => {
                data.push(number_from_value(v)?);
                Ok(())
            }
            [d, rest @ ..] => {
                let items = v.as_array().ok_or_else(|| bad("ragged tensor"))?;
                if items.len() != *d {
                    return Err(bad("ragged tensor"));
                }
                items.iter().try_for_each(|x| go(x, rest, data))
            }
        }
    }
    go(v, &shape, &mut data)?;
    Tensor::new(shape, data).map_err(|e| bad(e.to_string()))
}

pub fn tensors_to_value(t: &NamedTensors) -> Value {
    Value::Object(
        t.iter()
            .map(|(name, x)| (name.to_string(), tensor_to_value(x)))
            .collect(),
    )
}

pub fn tensors_from_value(v: &Value) -> Result<NamedTensors, FormatError> {
    let obj = v.as_object().ok_or_else(|| bad("tensors must be an object of nested arrays"))?;
    let mut out = NamedTensors::new();
    for (name, x) in obj {
        out.insert(name.clone(), tensor_from_value(x)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_arrays_round_trip() {
        let t = Tensor::new(vec![2, 1, 3], vec![1.0, f64::NEG_INFINITY, 0.5, -2.0, 3.25, 0.0]).unwrap();
        let v = tensor_to_value(&t);
        assert_eq!(v, json!([[[1.0, "-inf", 0.5]], [[-2.0, 3.25, 0.0]]]));
        assert_eq!(tensor_from_value(&v).unwrap(), t);
    }

    #[test]
    fn empty_and_ragged_arrays() {
        assert_eq!(tensor_from_value(&json!([])).unwrap().shape(), &[0]);
        assert!(tensor_from_value(&json!([[1.0], [2.0, 3.0]])).is_err());
        assert!(tensor_from_value(&json!([1.0, "x"])).is_err());
    }

    #[test]
    fn problem_round_trip() {
        let text = r#"{
            "family": "spanning_tree",
            "config": {"n": 2, "directed": true, "projective": false, "single_root_edge": true},
            "potentials": {"adjacency": [["-inf", 1.0, 2.0], ["-inf", "-inf", 0.5], ["-inf", 0.25, "-inf"]]}
        }"#;
        let p = ProblemFile::parse(text).unwrap();
        let again = ProblemFile::parse(&p.to_json_pretty()).unwrap();
        assert_eq!(p, again);
        assert!(p.distribution().is_ok());
    }

    #[test]
    fn missing_fields_are_reported() {
        assert!(ProblemFile::parse(r#"{"family": "linear_chain"}"#).is_err());
        assert!(ProblemFile::parse(r#"{"family": "nope", "config": {}, "potentials": {}}"#).is_err());
        assert!(ProblemFile::parse("not json").is_err());
    }
}
