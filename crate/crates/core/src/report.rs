//! Serialization helpers shared by the report types.

use serde::ser::{SerializeSeq, Serializer};

use crate::linalg::{Mat, Vector};

/// Serialize a matrix as a list of rows.
pub fn ser_mat<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

pub fn ser_opt_mat<S: Serializer>(m: &Option<Mat>, s: S) -> Result<S::Ok, S::Error> {
    match m {
        Some(m) => ser_mat(m, s),
        None => s.serialize_none(),
    }
}

pub fn ser_vec<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v.iter() {
        seq.serialize_element(x)?;
    }
    seq.end()
}
