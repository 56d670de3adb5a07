//! JSON encoding of elements: `{"blocks": [B1, …, Bk]}` with each block a
//! row-major array of rows of `[re, im]` pairs.
//!
//! Floats are written with the shortest representation that parses back to
//! the same `f64`, so reading a written element reproduces it bit for bit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::Element;
use crate::error::{Error, Result};

type RawBlock = Vec<Vec<[f64; 2]>>;

#[derive(Serialize, Deserialize)]
struct RawElement {
    blocks: Vec<RawBlock>,
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks = self
            .blocks()
            .iter()
            .map(|b| {
                (0..b.nrows())
                    .map(|i| (0..b.ncols()).map(|j| [b[(i, j)].re, b[(i, j)].im]).collect())
                    .collect()
            })
            .collect();
        RawElement { blocks }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawElement::deserialize(d)?;
        element_from_raw(raw).map_err(D::Error::custom)
    }
}

fn element_from_raw(raw: RawElement) -> Result<Element> {
    let mut blocks = Vec::with_capacity(raw.blocks.len());
    for (k, rows) in raw.blocks.into_iter().enumerate() {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidElement(format!("block {k} is not square")));
        }
        blocks.push(DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])));
    }
    Element::from_blocks(blocks)
}

pub fn element_to_json(x: &Element) -> String {
    serde_json::to_string(x).expect("elements always serialize")
}

pub fn element_from_json(text: &str) -> std::result::Result<Element, serde_json::Error> {
    serde_json::from_str(text)
}
