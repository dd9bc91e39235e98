//! JSON net files.
//!
//! ```json
//! {"kind":"plain","input_dim":2,"widths":[2,2],
//!  "W":[[[..],[..]],[[..],[..]]],"b":[[..],[..]],
//!  "skip":[{"to":2,"from":0,"M":[[..]]}],
//!  "heads":[{"c":0.5,"a0":[..],"a":[[..],[..]]}]}
//! ```
//!
//! Matrices are row-major nested arrays. Unknown fields are rejected. Floats
//! are written in shortest round-trip form, so write → read → write is
//! byte-identical.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::net::{LayerStack, MaxRectifierNet, NetKind, OutputHead, RectifierNet};
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct NetDocument<T> {
    kind: NetKind,
    input_dim: usize,
    widths: Vec<usize>,
    #[serde(rename = "W")]
    w: Vec<Vec<Vec<T>>>,
    b: Vec<Vec<T>>,
    #[serde(default)]
    skip: Vec<SkipEntry<T>>,
    heads: Vec<HeadEntry<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct SkipEntry<T> {
    to: usize,
    from: usize,
    #[serde(rename = "M")]
    m: Vec<Vec<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct HeadEntry<T> {
    c: T,
    a0: Vec<T>,
    a: Vec<Vec<T>>,
}

fn matrix<T: Scalar>(rows: &[Vec<T>], field: &str) -> Result<Matrix<T>> {
    Matrix::from_rows(rows).ok_or_else(|| Error::Format(format!("{field}: rows have unequal lengths")))
}

impl<T: Scalar> MaxRectifierNet<T> {
    pub fn to_json(&self) -> String {
        let doc = NetDocument {
            kind: self.stack.kind,
            input_dim: self.stack.input_dim,
            widths: self.stack.widths.clone(),
            w: self.stack.adjacent.iter().map(Matrix::to_rows).collect(),
            b: self.stack.biases.clone(),
            skip: self
                .stack
                .skips
                .iter()
                .map(|(&(to, from), m)| SkipEntry { to, from, m: m.to_rows() })
                .collect(),
            heads: self
                .heads
                .iter()
                .map(|h| HeadEntry { c: h.c, a0: h.a0.clone(), a: h.a.clone() })
                .collect(),
        };
        let mut s = serde_json::to_string(&doc).expect("net documents always serialize");
        s.push('\n');
        s
    }

    /// Parses and validates a net file.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetDocument<T> = serde_json::from_str(text)?;
        let adjacent = doc
            .w
            .iter()
            .enumerate()
            .map(|(i, rows)| matrix(rows, &format!("W[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let mut skips = BTreeMap::new();
        for (i, entry) in doc.skip.iter().enumerate() {
            let m = matrix(&entry.m, &format!("skip[{i}].M"))?;
            if skips.insert((entry.to, entry.from), m).is_some() {
                return Err(Error::Format(format!(
                    "skip[{i}]: duplicate block ({}, {})",
                    entry.to, entry.from
                )));
            }
        }
        let net = MaxRectifierNet {
            stack: LayerStack {
                kind: doc.kind,
                input_dim: doc.input_dim,
                widths: doc.widths,
                adjacent,
                biases: doc.b,
                skips,
            },
            heads: doc
                .heads
                .into_iter()
                .map(|h| OutputHead { c: h.c, a0: h.a0, a: h.a })
                .collect(),
        };
        let violations = net.validate();
        if violations.is_empty() {
            Ok(net)
        } else {
            Err(Error::InvalidNet(violations))
        }
    }
}

impl<T: Scalar> RectifierNet<T> {
    pub fn to_json(&self) -> String {
        MaxRectifierNet { stack: self.stack.clone(), heads: vec![self.head.clone()] }.to_json()
    }

    /// Parses a net file that must carry exactly one head.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut net = MaxRectifierNet::from_json(text)?;
        if net.heads.len() != 1 {
            return Err(Error::Format(format!(
                "expected a single-head net, found {} heads",
                net.heads.len()
            )));
        }
        let head = net.heads.pop().expect("one head");
        Ok(RectifierNet { stack: net.stack, head })
    }
}
