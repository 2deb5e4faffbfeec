use std::fs;
use std::path::Path;

use serde_json::Value;

use hyperorbit::spaces::{RationalVector, SeqVector, SpaceTag, WeightGen, WeightSeq};

/// Anything the user supplied that cannot be used; exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn read_json(path: &Path) -> Result<Value, InputError> {
    let text = fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// A vector file holds one vector object, an array of them, or
/// `{"vectors": [...]}`.
fn vector_values(path: &Path) -> Result<Vec<Value>, InputError> {
    let v = read_json(path)?;
    let list = match v {
        Value::Array(items) => items,
        Value::Object(ref o) if o.contains_key("vectors") => match &o["vectors"] {
            Value::Array(items) => items.clone(),
            _ => return Err(InputError("\"vectors\" must be an array".into())),
        },
        Value::Object(_) => vec![v],
        _ => return Err(InputError("expected a vector object or an array of them".into())),
    };
    if list.is_empty() {
        return Err(InputError(format!("{}: no vectors", path.display())));
    }
    Ok(list)
}

pub fn read_vectors(path: &Path) -> Result<Vec<SeqVector>, InputError> {
    vector_values(path)?.iter().map(|v| SeqVector::from_json(v).map_err(InputError::from)).collect()
}

pub fn read_vector(path: &Path) -> Result<SeqVector, InputError> {
    let mut vs = read_vectors(path)?;
    if vs.len() != 1 {
        return Err(InputError(format!("{}: expected one vector, found {}", path.display(), vs.len())));
    }
    Ok(vs.remove(0))
}

pub fn read_rational_vectors(path: &Path) -> Result<(Vec<RationalVector>, SpaceTag), InputError> {
    let mut space = None;
    let mut out = Vec::new();
    for v in vector_values(path)? {
        let (r, s) = RationalVector::from_json(&v)?;
        space.get_or_insert(s);
        out.push(r);
    }
    Ok((out, space.unwrap_or(SpaceTag::Cn(1))))
}

/// `inverse_square`, `unit`, `linear` or `constant:<c>`.
pub fn parse_weights(s: &str) -> Result<WeightSeq, InputError> {
    match s {
        "inverse_square" => Ok(WeightSeq::inverse_square()),
        "unit" => Ok(WeightSeq::unit()),
        "linear" => Ok(WeightSeq::linear()),
        other => {
            let c = other
                .strip_prefix("constant:")
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| InputError(format!("unknown weights {other:?}")))?;
            Ok(WeightSeq::new(WeightGen::Constant(c))?)
        }
    }
}

/// `a,b` as two floats.
pub fn parse_pair(s: &str, what: &str) -> Result<(f64, f64), InputError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| InputError(format!("{what}: {p:?} is not a number")));
    match parts.as_slice() {
        [a] => Ok((num(a)?, 0.0)),
        [a, b] => Ok((num(a)?, num(b)?)),
        _ => Err(InputError(format!("{what}: expected \"a,b\""))),
    }
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), InputError> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| InputError(format!("{}: {e}", path.display())))
}
