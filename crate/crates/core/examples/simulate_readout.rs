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

//! Monte Carlo readout of the optimal vertex strategy. Noise is switched on
//! with a large amplitude and the estimates still reach the Cramér–Rao bound.
//!
//! ```text
//! cargo run --release --example simulate_readout -- [shots] [repetitions]
//! ```

use std::path::Path;

use dfs_metrology::optimize::{self, SolverOptions};
use dfs_metrology::simulate::{self, EstimationOptions};
use dfs_metrology::{dfs, io, NoiseModel, WeightMatrix};
use nalgebra::DVector;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let shots: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10_000);
    let repetitions: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500);

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let net = io::load_network(&data.join("example1.json"))?;
    let poly = dfs::enumerate_vertices(&net, dfs::DEFAULT_RANK_TOL)?;
    let sol = optimize::optimize_auto(&poly, &net, &WeightMatrix::identity(net.signals()), SolverOptions::default())?;
    let strategy = sol.to_strategy(&poly)?;

    let alpha = DVector::from_vec(vec![0.05, -0.12]);
    let noise = NoiseModel::gaussian(vec![10.0; net.noise_sources()])?;
    let options = EstimationOptions { shots_per_direction: shots, repetitions, seed: 7 };
    let report = simulate::estimate_parameters(&net, &strategy, &alpha, &noise, options)?;

    println!("true α      {:?}", alpha.as_slice());
    println!("mean α̂      {:?}", report.estimates.as_slice());
    println!("allocation  {:?} of {} shots", report.allocation, report.shots_per_repetition);
    println!("covariance ={}", report.covariance);
    println!("CRB ={}", report.crb);
    println!("tr cov / tr CRB = {:.3}", report.covariance.trace() / report.crb.trace());
    Ok(())
}
