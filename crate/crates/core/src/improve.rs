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

//! Turning an arbitrary noise-insensitive strategy into a vertex-sequential
//! GHZ strategy with a K matrix at least as large.
//!
//! The pipeline runs three stages, each PSD-nondecreasing in K̂:
//!
//! 1. [`symmetrize`]: balance the weights of `k` and `−k`, giving a
//!    superposition of GHZ states (gain exactly `k̄ k̄ᵀ`).
//! 2. [`sequentialize`]: prepare those GHZ states in separate rounds with
//!    rates `|c_k|²` (K̂ unchanged).
//! 3. [`lift_to_vertices`]: split every label into a convex combination of
//!    polytope vertices (gain `Σ p_i (v_i − k)(v_i − k)ᵀ`).

use nalgebra::Complex;
use serde::Serialize;

use crate::dfs::{caratheodory_decompose, contains, enumerate_vertices, DfsPolytope, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::model::{PureStrategy, SensorNetwork, SequentialStrategy, SpinVector};
use crate::qfim::{k_matrix_pure, k_matrix_sequential, psd_compare, KMatrix, PsdOrder};
use crate::DEFAULT_TOL;

/// Labels closer than this (up to sign) are merged into one GHZ state.
pub const MERGE_TOL: f64 = 1e-8;
/// Tolerance of the PSD-monotonicity check between pipeline stages.
pub const CHAIN_TOL: f64 = 1e-10;

/// Superposition of GHZ states `Σ c_k |GHZ_k⟩` with `c_k = √(|c′_k|² + |c′_{−k}|²)`.
///
/// The output keeps one representative per `±k` pair (the lexicographically
/// larger), drops the zero label and renormalizes.
pub fn symmetrize(strategy: &PureStrategy) -> Result<PureStrategy> {
    let mut groups: Vec<(SpinVector, f64)> = Vec::new();
    for (k, c) in strategy.terms() {
        if k.is_zero(DEFAULT_TOL) {
            continue;
        }
        match groups.iter_mut().find(|(g, _)| g.inf_distance_up_to_sign(k) <= MERGE_TOL) {
            Some(entry) => entry.1 += c.norm_sqr(),
            None => groups.push((k.canonical(), c.norm_sqr())),
        }
    }
    let total: f64 = groups.iter().map(|(_, w)| w).sum();
    if groups.is_empty() || total <= 0.0 {
        return Err(Error::DegenerateStrategy);
    }
    let mut terms = Vec::with_capacity(2 * groups.len());
    for (k, w) in groups {
        let amp = Complex::new((w / total / 2.0).sqrt(), 0.0);
        let neg = k.neg();
        terms.push((k, amp));
        terms.push((neg, amp));
    }
    PureStrategy::new(terms)
}

/// Replaces a superposition of GHZ states by the sequential protocol with
/// rates `|c_k|²`.
pub fn sequentialize(strategy: &PureStrategy, tol: f64) -> Result<SequentialStrategy> {
    let terms = strategy.terms();
    let mut used = vec![false; terms.len()];
    let mut out = Vec::new();
    for i in 0..terms.len() {
        if used[i] {
            continue;
        }
        let (k, c) = &terms[i];
        if k.is_zero(DEFAULT_TOL) {
            return Err(Error::NotGhzForm);
        }
        let partner = (i + 1..terms.len())
            .find(|&j| !used[j] && terms[j].0.inf_distance(&k.neg()) <= MERGE_TOL)
            .ok_or(Error::NotGhzForm)?;
        let c_neg = terms[partner].1;
        if (c.norm_sqr() - c_neg.norm_sqr()).abs() > tol {
            return Err(Error::NotGhzForm);
        }
        used[i] = true;
        used[partner] = true;
        out.push((k.canonical(), c.norm_sqr() + c_neg.norm_sqr()));
    }
    SequentialStrategy::new(out)
}

/// Spreads every label over polytope vertices by Carathéodory decomposition;
/// the new rates are `r_k p_i^k`, merged across source labels and across `±v`.
pub fn lift_to_vertices(strategy: &SequentialStrategy, polytope: &DfsPolytope, tol: f64) -> Result<SequentialStrategy> {
    let mut rates: Vec<(SpinVector, f64)> = Vec::new();
    for (k, r) in strategy.terms() {
        let decomposition = caratheodory_decompose(polytope, k, tol)?;
        for (idx, p) in decomposition.weights {
            let v = polytope.vertices()[idx].canonical();
            match rates.iter_mut().find(|(u, _)| u.inf_distance(&v) <= MERGE_TOL) {
                Some(entry) => entry.1 += r * p,
                None => rates.push((v, r * p)),
            }
        }
    }
    rates.retain(|(_, r)| *r > 0.0);
    SequentialStrategy::new(rates)
}

/// Tolerance for the lift step of the PSD chain: `CHAIN_TOL`, widened to
/// `2n·δ` where `δ` is the largest `‖Σ p_i v_i − k‖_∞` over the labels. The
/// widening only matters for labels that sit in the DFS up to a loose `tol`.
pub fn lift_chain_tolerance(strategy: &SequentialStrategy, polytope: &DfsPolytope, tol: f64) -> Result<f64> {
    let mut residual = 0.0f64;
    for (k, _) in strategy.terms() {
        let rebuilt = caratheodory_decompose(polytope, k, tol)?.reconstruct(polytope);
        residual = residual.max((rebuilt - k.as_vector()).amax());
    }
    Ok(CHAIN_TOL.max(2.0 * polytope.sensors() as f64 * residual))
}

/// Name of a pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageLabel {
    Input,
    Symmetrized,
    Sequentialized,
    VertexLifted,
}

impl StageLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            StageLabel::Input => "input",
            StageLabel::Symmetrized => "symmetrized",
            StageLabel::Sequentialized => "sequentialized",
            StageLabel::VertexLifted => "vertex_lifted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageStrategy {
    Pure(PureStrategy),
    Sequential(SequentialStrategy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub label: StageLabel,
    pub strategy: StageStrategy,
    pub k_matrix: KMatrix,
}

/// Audit trail of the improvement pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementTrace {
    pub stages: Vec<Stage>,
    /// Order of each stage's K̂ relative to its predecessor.
    pub verdicts: Vec<PsdOrder>,
}

impl ImprovementTrace {
    pub fn final_strategy(&self) -> &SequentialStrategy {
        match &self.stages.last().expect("trace has four stages").strategy {
            StageStrategy::Sequential(s) => s,
            StageStrategy::Pure(_) => unreachable!("last stage is sequential"),
        }
    }

    pub fn final_k(&self) -> &KMatrix {
        &self.stages.last().expect("trace has four stages").k_matrix
    }
}

/// Runs the three improvement stages on `strategy`, computing the polytope
/// of `network` first.
pub fn improve_pipeline(strategy: &PureStrategy, network: &SensorNetwork, tol: f64) -> Result<ImprovementTrace> {
    let polytope = enumerate_vertices(network, DEFAULT_RANK_TOL)?;
    improve_pipeline_with(strategy, &polytope, tol)
}

/// Runs the improvement stages against a precomputed polytope. `tol` is the
/// membership tolerance for labels.
pub fn improve_pipeline_with(strategy: &PureStrategy, polytope: &DfsPolytope, tol: f64) -> Result<ImprovementTrace> {
    for k in strategy.labels() {
        if !contains(polytope, k, tol)? {
            return Err(Error::NotInDfs(k.to_vec()));
        }
    }
    let symmetrized = symmetrize(strategy)?;
    let sequential = sequentialize(&symmetrized, DEFAULT_TOL)?;
    let lifted = lift_to_vertices(&sequential, polytope, tol)?;

    let stages = vec![
        Stage {
            label: StageLabel::Input,
            k_matrix: k_matrix_pure(strategy),
            strategy: StageStrategy::Pure(strategy.clone()),
        },
        Stage {
            label: StageLabel::Symmetrized,
            k_matrix: k_matrix_pure(&symmetrized),
            strategy: StageStrategy::Pure(symmetrized),
        },
        Stage {
            label: StageLabel::Sequentialized,
            k_matrix: k_matrix_sequential(&sequential),
            strategy: StageStrategy::Sequential(sequential),
        },
        Stage {
            label: StageLabel::VertexLifted,
            k_matrix: k_matrix_sequential(&lifted),
            strategy: StageStrategy::Sequential(lifted),
        },
    ];
    let lift_tol = lift_chain_tolerance(&sequential_of(&stages[2]), polytope, tol)?;
    let mut verdicts = Vec::with_capacity(3);
    for pair in stages.windows(2) {
        let chain_tol = if pair[1].label == StageLabel::VertexLifted { lift_tol } else { CHAIN_TOL };
        let order = psd_compare(pair[1].k_matrix.matrix(), pair[0].k_matrix.matrix(), chain_tol)?;
        if !matches!(order, PsdOrder::Greater | PsdOrder::Equal) {
            return Err(Error::NotMonotone { stage: pair[1].label.as_str() });
        }
        verdicts.push(order);
    }
    Ok(ImprovementTrace { stages, verdicts })
}

fn sequential_of(stage: &Stage) -> SequentialStrategy {
    match &stage.strategy {
        StageStrategy::Sequential(s) => s.clone(),
        StageStrategy::Pure(_) => unreachable!("sequentialized stage holds a sequential strategy"),
    }
}

/// Sufficient extremality criterion for the unconstrained hypercube:
/// `trace(K̂) ≥ n − tol`.
pub fn is_extremal_trace(k_matrix: &KMatrix, n: usize, tol: f64) -> bool {
    k_matrix.trace() >= n as f64 - tol
}

/// Trace criterion against the maximal trace attainable in `polytope`, which
/// is `max_i ‖v_i‖²` over its vertices (equal to `n` when all vertices are
/// sign vectors).
pub fn is_extremal_trace_in(k_matrix: &KMatrix, polytope: &DfsPolytope, tol: f64) -> bool {
    k_matrix.trace() >= polytope.max_vertex_norm2() - tol
}

/// True iff every label of `strategy` is a polytope vertex up to sign, which
/// certifies the strategy as extremal.
pub fn certify_vertex_sequential(strategy: &SequentialStrategy, polytope: &DfsPolytope, tol: f64) -> bool {
    strategy.terms().iter().all(|(k, _)| k.len() == polytope.sensors() && polytope.is_vertex_up_to_sign(k, tol))
}
