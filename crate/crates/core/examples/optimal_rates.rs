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

//! Optimal vertex rates under a weighted trace objective, by closed form
//! where it applies and by the convex solver everywhere.
//!
//! ```text
//! cargo run --example optimal_rates -- [network.json [weights.json]]
//! ```

use std::path::{Path, PathBuf};

use dfs_metrology::optimize::{self, SolverOptions};
use dfs_metrology::{dfs, io, WeightMatrix};

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let net_path = args.next().unwrap_or_else(|| data.join("example1.json"));
    let net = io::load_network(&net_path)?;
    let w = match args.next() {
        Some(p) => io::load_weights(&p)?,
        None => WeightMatrix::identity(net.signals()),
    };
    let poly = dfs::enumerate_vertices(&net, dfs::DEFAULT_RANK_TOL)?;

    let orthogonal = optimize::vertices_orthogonal(&poly, 1e-9);
    println!("{} representatives, orthogonal: {orthogonal}", poly.representatives().len());

    if orthogonal {
        let sol = optimize::optimal_rates_orthogonal(&poly, &net, &w)?;
        report("closed form", &poly, &sol);
    }
    let sol = optimize::optimize_rates(&poly, &net, &w, SolverOptions::default())?;
    report("mirror descent", &poly, &sol);
    println!("    {} iterations, converged: {}", sol.iterations, sol.converged);

    // Scaling the weight scales the objective and leaves the rates alone.
    let doubled = optimize::optimize_rates(&poly, &net, &w.scaled(2.0)?, SolverOptions::default())?;
    println!("W → 2W: objective ratio {:.12}", doubled.objective / sol.objective);
    Ok(())
}

fn report(name: &str, poly: &dfs_metrology::DfsPolytope, sol: &dfs_metrology::RateSolution) {
    println!("{name}:");
    for (i, r) in &sol.rates {
        println!("    {r:.6}  {:?}", poly.vertices()[*i].as_slice());
    }
    println!("    tr(W F⁻¹) = {:.8}", sol.objective);
    println!("    tr(W (ŜK̂Ŝᵀ)⁻¹) = {:.8}", sol.trace_objective);
}
