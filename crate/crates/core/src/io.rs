// Copyright 2026 The dfs-metrology Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! JSON file formats for networks, strategies and weight matrices.
//!
//! ```text
//! network.json   {"signal": [[...]], "noise": [[...]], "time": 1.0}
//! strategy.json  {"type": "pure", "terms": [{"k": [...], "re": 0.707, "im": 0.0}]}
//!                {"type": "sequential", "terms": [{"k": [...], "rate": 0.5}]}
//! weights.json   {"w": [[...]]}
//! ```
//!
//! Matrices are row-major lists of rows. Unknown keys are ignored, so data
//! files may carry notes. A strategy may also be read from any object holding
//! it under a `"strategy"` key, which lets command reports feed back in as
//! input.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::model::{network_from_samples, PureStrategy, SensorNetwork, SequentialStrategy, SpinVector, WeightMatrix};

/// Failure to load an input file.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Invalid { path: PathBuf, source: Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub signal: Vec<Vec<f64>>,
    #[serde(default)]
    pub noise: Vec<Vec<f64>>,
    pub time: f64,
}

impl NetworkFile {
    pub fn to_network(&self) -> Result<SensorNetwork, Error> {
        network_from_samples(&self.signal, &self.noise, self.time)
    }

    pub fn from_network(network: &SensorNetwork) -> Self {
        NetworkFile { signal: rows(network.signal()), noise: rows(network.noise()), time: network.time() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureTerm {
    pub k: Vec<f64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialTerm {
    pub k: Vec<f64>,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StrategyFile {
    Pure { terms: Vec<PureTerm> },
    Sequential { terms: Vec<SequentialTerm> },
}

/// A parsed and validated strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Pure(PureStrategy),
    Sequential(SequentialStrategy),
}

impl StrategyFile {
    pub fn to_strategy(&self, tol: f64) -> Result<Strategy, Error> {
        match self {
            StrategyFile::Pure { terms } => {
                let terms = terms
                    .iter()
                    .map(|t| Ok((SpinVector::with_tol(t.k.clone(), tol)?, Complex::new(t.re, t.im))))
                    .collect::<Result<Vec<_>, Error>>()?;
                Ok(Strategy::Pure(PureStrategy::with_tol(terms, tol)?))
            }
            StrategyFile::Sequential { terms } => {
                let terms = terms
                    .iter()
                    .map(|t| Ok((SpinVector::with_tol(t.k.clone(), tol)?, t.rate)))
                    .collect::<Result<Vec<_>, Error>>()?;
                Ok(Strategy::Sequential(SequentialStrategy::with_tol(terms, tol)?))
            }
        }
    }

    pub fn from_pure(strategy: &PureStrategy) -> Self {
        StrategyFile::Pure {
            terms: strategy.terms().iter().map(|(k, c)| PureTerm { k: k.to_vec(), re: c.re, im: c.im }).collect(),
        }
    }

    pub fn from_sequential(strategy: &SequentialStrategy) -> Self {
        StrategyFile::Sequential {
            terms: strategy.terms().iter().map(|(k, r)| SequentialTerm { k: k.to_vec(), rate: *r }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub w: Vec<Vec<f64>>,
}

impl WeightsFile {
    pub fn to_weight(&self) -> Result<WeightMatrix, Error> {
        WeightMatrix::new(matrix_from_rows(&self.w)?)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StrategyOrReport {
    Strategy(StrategyFile),
    Report { strategy: StrategyFile },
}

/// Row-major nested list to matrix; ragged input is a dimension mismatch.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, Error> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Read { path: path.to_owned(), source })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, LoadError> {
    serde_json::from_str(text).map_err(|source| LoadError::Parse { path: path.to_owned(), source })
}

fn invalid(path: &Path) -> impl FnOnce(Error) -> LoadError + '_ {
    move |source| LoadError::Invalid { path: path.to_owned(), source }
}

pub fn load_network(path: &Path) -> Result<SensorNetwork, LoadError> {
    let file: NetworkFile = parse(path, &read(path)?)?;
    file.to_network().map_err(invalid(path))
}

pub fn load_strategy(path: &Path, tol: f64) -> Result<Strategy, LoadError> {
    let file = match parse::<StrategyOrReport>(path, &read(path)?)? {
        StrategyOrReport::Strategy(s) | StrategyOrReport::Report { strategy: s } => s,
    };
    file.to_strategy(tol).map_err(invalid(path))
}

pub fn load_weights(path: &Path) -> Result<WeightMatrix, LoadError> {
    let file: WeightsFile = parse(path, &read(path)?)?;
    file.to_weight().map_err(invalid(path))
}
