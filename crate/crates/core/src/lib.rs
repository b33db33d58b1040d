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

//! Noise-insensitive multiparameter estimation for distributed quantum sensor
//! networks.
//!
//! A [`SensorNetwork`] couples `n` qubit sensors to `s` signal fields and `m`
//! noise fields. GHZ states whose label vector `k` satisfies `N̂k = 0` are blind
//! to the noise; the set of such labels with `‖k‖_∞ ≤ 1` is a polytope whose
//! vertices carry every extremal Fisher information matrix.
//!
//! ```
//! use dfs_metrology::{dfs, model::validate_network, optimize, WeightMatrix};
//! use nalgebra::DMatrix;
//!
//! let signal = DMatrix::from_row_slice(2, 4, &[1.2, 1.2, 1.2, 1.2, 0.6, 1.2, 1.2, 0.6]);
//! let noise = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, -1.0, -1.0, -1.0, 1.0, -1.0, 1.0]);
//! let net = validate_network(signal, noise, 1.0).unwrap();
//! let poly = dfs::enumerate_vertices(&net, dfs::DEFAULT_RANK_TOL).unwrap();
//! assert_eq!(poly.vertices().len(), 4);
//!
//! let w = WeightMatrix::identity(2);
//! let sol = optimize::optimize_auto(&poly, &net, &w, Default::default()).unwrap();
//! assert!((sol.rates[0].1 - 1.0 / 6.0).abs() < 1e-6);
//! ```

pub mod cli;
pub mod dfs;
pub mod error;
pub mod improve;
pub mod io;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod qfim;
pub mod simulate;

/// Absolute tolerance used by constructors when none is given.
pub const DEFAULT_TOL: f64 = 1e-9;

pub use dfs::{ConvexDecomposition, DfsPolytope};
pub use error::{Error, Result};
pub use improve::ImprovementTrace;
pub use model::{MixedKState, PureStrategy, SensorNetwork, SequentialStrategy, SpinVector, WeightMatrix};
pub use optimize::RateSolution;
pub use qfim::{KMatrix, PsdOrder, Qfim};
pub use simulate::{EstimationReport, NoiseModel, ShotRecord};
