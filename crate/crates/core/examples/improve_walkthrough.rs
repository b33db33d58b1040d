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

//! Walks a superposition strategy through symmetrization, sequentialization
//! and the lift onto DFS vertices, printing each stage.

use std::path::Path;

use dfs_metrology::improve::{self, StageStrategy};
use dfs_metrology::io::{self, Strategy};
use dfs_metrology::DEFAULT_TOL;

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let net = io::load_network(&data.join("example1.json"))?;
    let Strategy::Pure(psi) = io::load_strategy(&data.join("example1_psi.json"), DEFAULT_TOL)? else {
        anyhow::bail!("expected a pure strategy");
    };

    let trace = improve::improve_pipeline(&psi, &net, DEFAULT_TOL)?;
    for (i, stage) in trace.stages.iter().enumerate() {
        println!("[{}] {}", i, stage.label.as_str());
        match &stage.strategy {
            StageStrategy::Pure(p) => {
                for (k, c) in p.terms() {
                    println!("    {:?}  amplitude {:.4}{:+.4}i", k.as_slice(), c.re, c.im);
                }
            }
            StageStrategy::Sequential(s) => {
                for (k, r) in s.terms() {
                    println!("    {:?}  rate {r:.4}", k.as_slice());
                }
            }
        }
        println!("    tr K = {:.6}", stage.k_matrix.matrix().trace());
        if i > 0 {
            println!("    K vs previous: {:?}", trace.verdicts[i - 1]);
        }
    }

    let poly = dfs_metrology::dfs::enumerate_vertices(&net, dfs_metrology::dfs::DEFAULT_RANK_TOL)?;
    let ok = improve::certify_vertex_sequential(trace.final_strategy(), &poly, DEFAULT_TOL);
    println!("final strategy uses vertices only: {ok}");
    Ok(())
}
