//! JSON encoding of complex data: a number is `[re, im]`, a vector is an
//! array of numbers and a matrix is an array of rows.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{C64, CMatrix, CVector};

pub type Pair = [f64; 2];

pub fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

pub fn unpair(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn encode_vector(v: &CVector) -> Vec<Pair> {
    v.iter().map(|&z| pair(z)).collect()
}

pub fn decode_vector(raw: &[Pair]) -> CVector {
    CVector::from_iterator(raw.len(), raw.iter().map(|&p| unpair(p)))
}

pub fn encode_matrix(m: &CMatrix) -> Vec<Vec<Pair>> {
    m.row_iter()
        .map(|row| row.iter().map(|&z| pair(z)).collect())
        .collect()
}

pub fn decode_matrix(rows: &[Vec<Pair>]) -> Result<CMatrix, String> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err("ragged matrix rows".into());
    }
    Ok(CMatrix::from_fn(r, c, |i, j| unpair(rows[i][j])))
}

pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        pair(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        Ok(unpair(Pair::deserialize(d)?))
    }
}

pub mod complex_list {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&z| pair(z)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Ok(Vec::<Pair>::deserialize(d)?.into_iter().map(unpair).collect())
    }
}

pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
        encode_vector(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVector, D::Error> {
        Ok(decode_vector(&Vec::<Pair>::deserialize(d)?))
    }
}

pub mod vectors {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[CVector], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(encode_vector).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CVector>, D::Error> {
        let raw = Vec::<Vec<Pair>>::deserialize(d)?;
        Ok(raw.iter().map(|v| decode_vector(v)).collect())
    }
}

pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        encode_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<Pair>>::deserialize(d)?;
        decode_matrix(&rows).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Holder {
        #[serde(with = "matrix")]
        m: CMatrix,
        #[serde(with = "vector")]
        v: CVector,
    }

    #[test]
    fn layout_is_rows_of_pairs() {
        let h = Holder {
            m: CMatrix::from_row_slice(1, 2, &[C64::new(1.0, 2.0), C64::new(3.0, -1.0)]),
            v: CVector::from_column_slice(&[C64::new(0.5, 0.0)]),
        };
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, r#"{"m":[[[1.0,2.0],[3.0,-1.0]]],"v":[[0.5,0.0]]}"#);
        let back: Holder = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
        assert!(serde_json::from_str::<Holder>(r#"{"m":[[[1,2]],[]],"v":[]}"#).is_err());
    }
}
