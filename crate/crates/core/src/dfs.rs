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

//! The decoherence-free subspace `{k : N̂k = 0, ‖k‖_∞ ≤ 1}` as an explicit polytope.
//!
//! The polytope is the intersection of `kernel(N̂)` with the unit hypercube. In
//! kernel coordinates `k = B y` it reads `−1 ≤ (B y)_j ≤ 1`; a vertex is a
//! feasible point with `d` linearly independent active facets, so the vertices
//! are found by solving every `d`-subset of rows of `B` against every sign
//! pattern. This is `C(n, d)·2^d` small solves, fine for desk-scale networks.

use itertools::Itertools;
use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{lex_cmp, PureStrategy, SensorNetwork, SpinVector};

/// Default relative tolerance for the numerical rank of the noise matrix.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Two vertices closer than this in the infinity norm are the same vertex.
pub const VERTEX_DEDUP_TOL: f64 = 1e-8;
/// Feasibility slack used when testing candidate vertices against the hypercube.
const FEASIBILITY_TOL: f64 = 1e-9;
/// Coordinates this close to ±1 count as saturated during decomposition.
const SATURATION_TOL: f64 = 1e-12;
/// Vertex coordinates this close to a fixed bound lie on the face.
const FACE_TOL: f64 = 1e-9;

/// Orthonormal basis of `kernel(noise)` as the columns of an `n × d` matrix.
///
/// Singular values below `tol · σ_max · max(m, n)` count as zero. An empty
/// noise matrix yields the identity.
pub fn kernel_basis(noise: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    linalg::null_space(noise, tol)
}

/// The decoherence-free subspace together with its complete vertex list.
#[derive(Debug, Clone, PartialEq)]
pub struct DfsPolytope {
    kernel_basis: DMatrix<f64>,
    vertices: Vec<SpinVector>,
    noise: DMatrix<f64>,
}

impl DfsPolytope {
    pub fn kernel_basis(&self) -> &DMatrix<f64> {
        &self.kernel_basis
    }

    /// All vertices, closed under negation, sorted lexicographically descending.
    pub fn vertices(&self) -> &[SpinVector] {
        &self.vertices
    }

    /// One vertex of every `±v` pair (the lexicographically larger one), in
    /// the same order as [`vertices`](Self::vertices).
    pub fn representatives(&self) -> Vec<SpinVector> {
        self.vertices.iter().filter(|v| lex_cmp(v.as_slice(), v.neg().as_slice()).is_ge()).cloned().collect()
    }

    /// `d = n − rank(N̂)`.
    pub fn dimension(&self) -> usize {
        self.kernel_basis.ncols()
    }

    pub fn sensors(&self) -> usize {
        self.kernel_basis.nrows()
    }

    pub fn noise(&self) -> &DMatrix<f64> {
        &self.noise
    }

    /// Index of the vertex matching `k` within `tol`.
    pub fn vertex_index(&self, k: &SpinVector, tol: f64) -> Option<usize> {
        self.vertices.iter().position(|v| v.inf_distance(k) <= tol)
    }

    /// Whether `k` matches some vertex up to a global sign.
    pub fn is_vertex_up_to_sign(&self, k: &SpinVector, tol: f64) -> bool {
        self.vertices.iter().any(|v| v.inf_distance_up_to_sign(k) <= tol)
    }

    /// Largest squared Euclidean norm among the vertices: the maximal trace a
    /// K matrix can reach inside this polytope.
    pub fn max_vertex_norm2(&self) -> f64 {
        self.vertices.iter().map(|v| v.as_vector().norm_squared()).fold(0.0, f64::max)
    }
}

/// Enumerates every vertex of the decoherence-free subspace of `network`.
///
/// `rank_tol` is the relative tolerance used to decide the rank of the noise
/// matrix; loosen it when the noise samples are rounded.
pub fn enumerate_vertices(network: &SensorNetwork, rank_tol: f64) -> Result<DfsPolytope> {
    let basis = kernel_basis(network.noise(), rank_tol);
    let n = basis.nrows();
    let d = basis.ncols();
    if d == 0 {
        return Err(Error::EmptyDfs);
    }

    let subsets: Vec<Vec<usize>> = (0..n).combinations(d).collect();
    let mut candidates: Vec<SpinVector> =
        subsets.par_iter().flat_map_iter(|rows| vertex_candidates(&basis, rows)).collect();
    candidates.sort_by(|a, b| lex_cmp(b.as_slice(), a.as_slice()));

    let mut vertices = dedup(candidates, VERTEX_DEDUP_TOL);
    vertices.sort_by(|a, b| lex_cmp(b.as_slice(), a.as_slice()));
    Ok(DfsPolytope { kernel_basis: basis, vertices, noise: network.noise().clone() })
}

/// Greedy dedup keeping the first of every cluster of points within `tol`.
///
/// Points are split into single-linkage chains one coordinate at a time, so
/// any two points within `tol` share a final group and only group members are
/// compared pairwise.
fn dedup(points: Vec<SpinVector>, tol: f64) -> Vec<SpinVector> {
    let n = points.first().map_or(0, SpinVector::len);
    let mut indexed: Vec<(usize, SpinVector)> = points.into_iter().enumerate().collect();
    let mut groups = vec![(0usize, indexed.len())];
    for axis in 0..n {
        let mut next = Vec::with_capacity(groups.len());
        for (lo, hi) in groups {
            let slice = &mut indexed[lo..hi];
            slice.sort_by(|a, b| a.1.as_slice()[axis].total_cmp(&b.1.as_slice()[axis]));
            let mut start = lo;
            for i in lo + 1..hi {
                if indexed[i].1.as_slice()[axis] - indexed[i - 1].1.as_slice()[axis] > tol {
                    next.push((start, i));
                    start = i;
                }
            }
            next.push((start, hi));
        }
        groups = next;
    }
    let mut kept = Vec::new();
    for (lo, hi) in groups {
        let group = &mut indexed[lo..hi];
        group.sort_by_key(|(i, _)| *i);
        let mut chosen: Vec<&SpinVector> = Vec::new();
        for (_, c) in group.iter() {
            if !chosen.iter().any(|v| v.inf_distance(c) <= tol) {
                chosen.push(c);
            }
        }
        kept.extend(chosen.into_iter().cloned());
    }
    kept
}

fn vertex_candidates(basis: &DMatrix<f64>, rows: &[usize]) -> Vec<SpinVector> {
    let d = rows.len();
    let sub = basis.select_rows(rows.iter());
    let sv = sub.clone().singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
    if hi == 0.0 || lo < 1e-10 * hi {
        return Vec::new();
    }
    let Some(inverse) = sub.try_inverse() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for mask in 0..(1u64 << d) {
        let signs = DVector::from_fn(d, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 });
        let mut k = basis * (&inverse * &signs);
        if k.amax() > 1.0 + FEASIBILITY_TOL {
            continue;
        }
        for (i, &r) in rows.iter().enumerate() {
            k[r] = signs[i];
        }
        // Coordinates saturated by another subset land a few ulps off ±1.
        k.apply(|x| *x = if x.abs() >= 1.0 - SATURATION_TOL { x.signum() } else { *x });
        out.push(SpinVector::from_vector_unchecked(k));
    }
    out
}

/// True iff `‖N̂k‖_∞ ≤ tol` and `‖k‖_∞ ≤ 1 + tol`.
pub fn contains(polytope: &DfsPolytope, k: &SpinVector, tol: f64) -> Result<bool> {
    if k.len() != polytope.sensors() {
        return Err(Error::DimensionMismatch(format!(
            "label has {} entries, polytope lives in dimension {}",
            k.len(),
            polytope.sensors()
        )));
    }
    let offset = if polytope.noise.nrows() == 0 { 0.0 } else { (&polytope.noise * k.as_vector()).amax() };
    Ok(offset <= tol && k.inf_norm() <= 1.0 + tol)
}

/// `κ = N̂k`, the affine block containing `k`.
pub fn affine_offset(network: &SensorNetwork, k: &SpinVector) -> Result<DVector<f64>> {
    network.check_label(k)?;
    Ok(network.noise() * k.as_vector())
}

/// Convex weights `p_i` over polytope vertices with `Σ p_i v_i = k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDecomposition {
    /// `(vertex index, weight)` pairs, sorted by index, all weights positive.
    pub weights: Vec<(usize, f64)>,
}

impl ConvexDecomposition {
    /// `Σ p_i v_i`.
    pub fn reconstruct(&self, polytope: &DfsPolytope) -> DVector<f64> {
        self.weights
            .iter()
            .fold(DVector::zeros(polytope.sensors()), |acc, (i, p)| acc + polytope.vertices()[*i].as_vector() * *p)
    }
}

/// Writes `k` as a convex combination of at most `d + 1` vertices.
///
/// Shoots a ray from a vertex of the current face through the point to the
/// face boundary, splits the point between the two ends and recurses on the
/// smaller face. Every step fixes another coordinate at ±1, so the face
/// dimension drops each time. `k` is first projected onto the subspace.
pub fn caratheodory_decompose(polytope: &DfsPolytope, k: &SpinVector, tol: f64) -> Result<ConvexDecomposition> {
    if !contains(polytope, k, tol)? {
        return Err(Error::NotInDfs(k.to_vec()));
    }
    let n = polytope.sensors();
    let basis = &polytope.kernel_basis;
    // Labels accepted within `tol` may sit slightly off the subspace.
    let mut point = basis * (basis.transpose() * k.as_vector());
    let norm = point.amax();
    if norm > 1.0 {
        point /= norm;
    }
    let verts = polytope.vertices();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let mut weights: Vec<(usize, f64)> = Vec::new();
    let mut remaining = 1.0;

    for _ in 0..=n + 1 {
        for j in 0..n {
            if fixed[j].is_none() && point[j].abs() >= 1.0 - SATURATION_TOL {
                let s = point[j].signum();
                fixed[j] = Some(s);
                point[j] = s;
            }
        }
        let face: Vec<usize> = (0..verts.len())
            .filter(|&i| {
                fixed.iter().zip(verts[i].as_slice()).all(|(f, x)| f.is_none_or(|s| (x - s).abs() <= FACE_TOL))
            })
            .collect();
        let distance = |i: usize| (verts[i].as_vector() - &point).amax();
        let Some(&far) = face.iter().max_by(|&&a, &&b| distance(a).total_cmp(&distance(b))) else {
            return Err(Error::NotInDfs(k.to_vec()));
        };
        if distance(far) <= SATURATION_TOL {
            weights.push((far, remaining));
            break;
        }
        // Shoot from the farthest face vertex through the point to the face boundary.
        let v = verts[far].as_vector();
        let dir = &point - v;
        let mut t = f64::INFINITY;
        for j in (0..n).filter(|&j| fixed[j].is_none()) {
            if dir[j] > 0.0 {
                t = t.min((1.0 - v[j]) / dir[j]);
            } else if dir[j] < 0.0 {
                t = t.min((-1.0 - v[j]) / dir[j]);
            }
        }
        if !t.is_finite() {
            // The point differs from the vertex only on fixed coordinates.
            weights.push((far, remaining));
            break;
        }
        let t = t.max(1.0);
        weights.push((far, remaining * (1.0 - 1.0 / t)));
        remaining /= t;
        point = v + dir * t;
    }
    weights.retain(|(_, w)| *w > 0.0);
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(weights.len());
    for (i, w) in weights {
        match merged.iter_mut().find(|(j, _)| *j == i) {
            Some(entry) => entry.1 += w / total,
            None => merged.push((i, w / total)),
        }
    }
    merged.sort_by_key(|(i, _)| *i);
    Ok(ConvexDecomposition { weights: merged })
}

/// Maps a strategy living in one affine block `DFS_κ` into the DFS by
/// replacing every label `k` with `(k − k̄)/2`, `k̄ = Σ |c_k|² k`. The K
/// matrix of the result is exactly a quarter of the input's.
pub fn center_affine(strategy: &PureStrategy, network: &SensorNetwork, tol: f64) -> Result<PureStrategy> {
    let mut offsets = strategy.labels().map(|k| affine_offset(network, k)).collect::<Result<Vec<_>>>()?.into_iter();
    let first = offsets.next().expect("strategies are non-empty");
    if offsets.any(|o| (&o - &first).amax() > tol) {
        return Err(Error::MixedAffineBlocks);
    }
    let mean = strategy.mean_label();
    let terms: Vec<(SpinVector, Complex<f64>)> = strategy
        .terms()
        .iter()
        .map(|(k, c)| Ok((SpinVector::with_tol(((k.as_vector() - &mean) * 0.5).iter().copied().collect(), tol)?, *c)))
        .collect::<Result<_>>()?;
    PureStrategy::with_tol(terms, tol)
}
