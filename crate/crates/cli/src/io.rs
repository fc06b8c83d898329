//! Input and output files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use upblab::gupb::ProductVector;
use upblab::json;
use upblab::linalg::CMatrix;

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct VectorFile {
    pub dims: Vec<usize>,
    pub vectors: Vec<ProductVector>,
}

impl VectorFile {
    pub fn bipartite_dims(&self) -> Result<(usize, usize), CliError> {
        match self.dims[..] {
            [n, m] => Ok((n, m)),
            _ => Err(CliError::input(format!("expected two parties, got dims {:?}", self.dims))),
        }
    }

    fn check(&self) -> Result<(), CliError> {
        if self.dims.len() < 2 || self.dims.contains(&0) {
            return Err(CliError::input(format!("bad dims {:?}", self.dims)));
        }
        for (k, v) in self.vectors.iter().enumerate() {
            if v.dims() != self.dims {
                return Err(CliError::input(format!("vector {k} has dims {:?}, expected {:?}", v.dims(), self.dims)));
            }
            if v.factors.iter().any(|f| f.norm() == 0.0 || f.iter().any(|z| !z.is_finite())) {
                return Err(CliError::input(format!("vector {k} has a zero or non-finite factor")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: (usize, usize),
    #[serde(with = "json::matrix")]
    pub matrix: CMatrix,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn read_vectors(path: &Path) -> Result<VectorFile, CliError> {
    let file: VectorFile = read_json(path)?;
    file.check()?;
    Ok(file)
}

pub fn read_state(path: &Path) -> Result<StateFile, CliError> {
    let file: StateFile = read_json(path)?;
    let d = file.dims.0 * file.dims.1;
    if file.matrix.nrows() != d || file.matrix.ncols() != d {
        return Err(CliError::input(format!(
            "matrix is {}x{}, dims {:?} need {d}x{d}",
            file.matrix.nrows(),
            file.matrix.ncols(),
            file.dims
        )));
    }
    if file.matrix.iter().any(|z| !z.is_finite()) {
        return Err(CliError::input("matrix has non-finite entries"));
    }
    Ok(file)
}
