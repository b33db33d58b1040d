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

//! Enumerates the noise-insensitive label polytope of a network and writes a
//! point inside it as a mixture of vertices.
//!
//! ```text
//! cargo run --example dfs_vertices -- [network.json]
//! ```

use std::path::PathBuf;

use dfs_metrology::{dfs, io, qfim, SpinVector};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/example1.json"));
    let net = io::load_network(&path)?;
    let poly = dfs::enumerate_vertices(&net, dfs::DEFAULT_RANK_TOL)?;

    println!("{} sensors, {} signals, {} noise fields", net.sensors(), net.signals(), net.noise_sources());
    println!("DFS dimension {}, {} vertices", poly.dimension(), poly.vertices().len());
    for v in poly.representatives() {
        let energy = qfim::effective_energy(&net, &v)?;
        println!("  ±{:?}  Ŝk = {:?}", v.as_slice(), energy.as_slice());
    }

    // Average of the representatives, then back out its vertex weights.
    let reps = poly.representatives();
    let mean: Vec<f64> =
        (0..net.sensors()).map(|i| reps.iter().map(|v| v.as_slice()[i]).sum::<f64>() / reps.len() as f64).collect();
    let k = SpinVector::new(mean)?;
    let split = dfs::caratheodory_decompose(&poly, &k, 1e-9)?;
    println!("k = {:?}", k.as_slice());
    for (i, p) in &split.weights {
        println!("  {p:.6} × {:?}", poly.vertices()[*i].as_slice());
    }
    let err = (split.reconstruct(&poly) - k.as_vector()).amax();
    println!("reconstruction error {err:.1e}");
    Ok(())
}
