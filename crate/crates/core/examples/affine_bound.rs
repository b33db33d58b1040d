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

//! Constant noise on every sensor admits labels with `N̂k = const` instead of
//! zero. Centring such a strategy gives a DFS strategy with a quarter of its
//! K̂, and a single DFS vertex still recovers at least that quarter.

use std::path::Path;

use dfs_metrology::io::{self, Strategy};
use dfs_metrology::optimize;
use dfs_metrology::DEFAULT_TOL;

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let net = io::load_network(&data.join("affine3.json"))?;

    for file in ["w_state_affine.json", "w_state_dfs.json"] {
        let Strategy::Pure(psi) = io::load_strategy(&data.join(file), DEFAULT_TOL)? else {
            anyhow::bail!("{file}: expected a pure strategy");
        };
        let cmp = optimize::compare_affine(&net, &psi, DEFAULT_TOL)?;
        println!("{file}");
        println!("    K(affine) ={}", cmp.k_affine.matrix());
        println!("    K(centred) ={}", cmp.k_centered.matrix());
        println!("    4·K(centred) = K(affine): {}", cmp.quarter_law_ok);
        println!("    QFI affine {:?}, best vertex {:?}", cmp.affine_qfi, cmp.best_vertex_qfi);
        println!("    vertex ≥ affine / 4: {}", cmp.ratio_bound_ok);
    }
    Ok(())
}
