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

//! Rate optimization for vertex-sequential GHZ strategies.
//!
//! With vertex representatives `v_i`, `a_i = Ŝ v_i` and `c = 4T²`, a rate
//! vector `r` yields `𝓕(r) = c Σ r_i a_i a_iᵀ` and the figure of merit
//! `M(r) = tr(W 𝓕(r)⁻¹)`, which is convex on the simplex.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dfs::{center_affine, enumerate_vertices, DfsPolytope, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{PureStrategy, SensorNetwork, SequentialStrategy, SpinVector, WeightMatrix};
use crate::qfim::{k_matrix_pure, qfim_from_k, KMatrix, Qfim};

/// `tr(W 𝓕⁻¹)`.
///
/// A singular 𝓕 is accepted when `W` annihilates its null space, in which case
/// the pseudoinverse is used.
pub fn figure_of_merit(weight: &WeightMatrix, qfim: &Qfim) -> Result<f64> {
    let f = qfim.matrix();
    if weight.dim() != qfim.dim() {
        return Err(Error::DimensionMismatch(format!(
            "weight is {0}x{0}, Fisher information is {1}x{1}",
            weight.dim(),
            qfim.dim()
        )));
    }
    if let Some(inv) = linalg::spd_inverse(f) {
        return Ok((weight.matrix() * inv).trace());
    }
    let (vals, vecs) = linalg::sym_eigen_sorted(f);
    let max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = max * 1e-12;
    let w = weight.matrix();
    let w_scale = linalg::sym_norm2(w).max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for (i, lambda) in vals.iter().enumerate() {
        let u = vecs.column(i);
        if *lambda <= cutoff {
            if (w * u).amax() > 1e-9 * w_scale {
                return Err(Error::SingularQfim);
            }
        } else {
            total += (u.transpose() * w * u)[(0, 0)] / lambda;
        }
    }
    Ok(total)
}

/// Which route produced a [`RateSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    ClosedForm,
    MirrorDescent,
}

/// Optimal preparation rates over the vertex representatives of a polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSolution {
    /// `(index into DfsPolytope::vertices, rate)` for every representative.
    pub rates: Vec<(usize, f64)>,
    /// `M = tr(W 𝓕⁻¹)` at these rates, with `𝓕 = 4T² Ŝ K̂ Ŝᵀ`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub path: SolverPath,
    /// `4T² · objective`, the evolution-time free value `tr(W (Ŝ K̂ Ŝᵀ)⁻¹)`.
    pub trace_objective: f64,
}

impl RateSolution {
    /// The sequential strategy with these rates (zero rates dropped).
    pub fn to_strategy(&self, polytope: &DfsPolytope) -> Result<SequentialStrategy> {
        let terms =
            self.rates.iter().filter(|(_, r)| *r > 0.0).map(|(i, r)| (polytope.vertices()[*i].clone(), *r)).collect();
        SequentialStrategy::new(terms)
    }

    pub fn rate_vector(&self) -> Vec<f64> {
        self.rates.iter().map(|(_, r)| *r).collect()
    }
}

/// Objective, gradient and Hessian of `M(r)` over fixed directions.
pub struct RateObjective {
    directions: Vec<DVector<f64>>,
    weight: DMatrix<f64>,
    scale: f64,
}

impl RateObjective {
    pub fn new(polytope: &DfsPolytope, network: &SensorNetwork, weight: &WeightMatrix) -> Result<Self> {
        if polytope.sensors() != network.sensors() {
            return Err(Error::DimensionMismatch("polytope and network differ in sensor count".into()));
        }
        if weight.dim() != network.signals() {
            return Err(Error::DimensionMismatch(format!(
                "weight is {}x{}, network has {} signals",
                weight.dim(),
                weight.dim(),
                network.signals()
            )));
        }
        let directions = polytope.representatives().iter().map(|v| network.signal() * v.as_vector()).collect();
        let t = network.time();
        Ok(RateObjective { directions, weight: weight.matrix().clone(), scale: 4.0 * t * t })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn fisher(&self, rates: &[f64]) -> DMatrix<f64> {
        let s = self.weight.nrows();
        self.directions
            .iter()
            .zip(rates)
            .fold(DMatrix::zeros(s, s), |acc, (a, r)| acc + linalg::outer(a) * (r.max(1e-15) * self.scale))
    }

    /// Whitened directions `U = R⁻ᵀA` and `P = R⁻ᵀWR⁻¹`, where `RᵀR = 𝓕(r)`
    /// comes from a QR factorization of `(√(c r_i) a_i)ᵢ`. Working with `R`
    /// instead of `𝓕⁻¹` keeps the error at `ε·cond(R)` rather than its square.
    fn factor(&self, rates: &[f64]) -> Option<Whitened> {
        let s = self.weight.nrows();
        let k = self.len();
        if k < s {
            return None;
        }
        let bt = DMatrix::from_fn(k, s, |i, j| (rates[i].max(1e-15) * self.scale).sqrt() * self.directions[i][j]);
        let r = bt.qr().r();
        let sv = r.singular_values();
        let (hi, lo) = (sv.max(), sv.min());
        if hi == 0.0 || lo * lo <= hi * hi * 1e-13 {
            return None;
        }
        let a = DMatrix::from_fn(s, k, |i, j| self.directions[j][i]);
        let rt = r.transpose();
        let u = rt.solve_lower_triangular(&a)?;
        let y = rt.solve_lower_triangular(&DMatrix::identity(s, s))?;
        let p = linalg::symmetrize(&(&y * &self.weight * y.transpose()));
        Some(Whitened { u, p, cond: hi / lo })
    }

    /// Relative rounding level of `M(r)`.
    fn value_noise(&self, rates: &[f64]) -> f64 {
        self.factor(rates).map_or(1e-6, |f| (1e-14 * f.cond).clamp(1e-12, 1e-6))
    }

    /// `M(r)`, or `None` when 𝓕(r) is singular.
    pub fn value(&self, rates: &[f64]) -> Option<f64> {
        self.factor(rates).map(|f| f.p.trace())
    }

    /// `∂M/∂r_i = −c a_iᵀ 𝓕⁻¹ W 𝓕⁻¹ a_i`.
    pub fn gradient(&self, rates: &[f64]) -> Option<DVector<f64>> {
        let f = self.factor(rates)?;
        let pu = &f.p * &f.u;
        Some(DVector::from_fn(self.len(), |i, _| -self.scale * f.u.column(i).dot(&pu.column(i))))
    }

    /// `∂²M/∂r_i∂r_j = 2c² (a_iᵀ𝓕⁻¹a_j)(a_iᵀ𝓕⁻¹W𝓕⁻¹a_j)`.
    pub fn hessian(&self, rates: &[f64]) -> Option<DMatrix<f64>> {
        let f = self.factor(rates)?;
        let gram = f.u.transpose() * &f.u;
        let inner = f.u.transpose() * &f.p * &f.u;
        let c2 = self.scale * self.scale;
        Some(linalg::symmetrize(&gram.component_mul(&inner)) * (2.0 * c2))
    }
}

struct Whitened {
    u: DMatrix<f64>,
    p: DMatrix<f64>,
    cond: f64,
}

/// Mirror-descent settings.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop when the relative decrease over `window` iterations drops below this.
    pub rel_tol: f64,
    pub window: usize,
    /// Refine the mirror-descent point with Newton steps on its support.
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iterations: 100_000, rel_tol: 1e-12, window: 20, polish: true }
    }
}

/// Minimizes `M(r)` over the simplex of vertex rates by entropic mirror
/// descent with Armijo backtracking, starting from uniform rates.
pub fn optimize_rates(
    polytope: &DfsPolytope,
    network: &SensorNetwork,
    weight: &WeightMatrix,
    options: SolverOptions,
) -> Result<RateSolution> {
    let objective = RateObjective::new(polytope, network, weight)?;
    let m = objective.len();
    let mut rates = vec![1.0 / m as f64; m];
    let mut value = objective.value(&rates).ok_or(Error::UnidentifiableSignals)?;
    let mut history = vec![value];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let grad = objective.gradient(&rates).ok_or(Error::UnidentifiableSignals)?;
        let gmin = grad.min();
        let gscale = (grad.max() - gmin).max(f64::MIN_POSITIVE);
        let mut accepted = None;
        for _ in 0..60 {
            let eta = step / gscale;
            let mut cand: Vec<f64> =
                rates.iter().zip(grad.iter()).map(|(r, g)| r * (-(eta * (g - gmin))).exp()).collect();
            let total: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|r| *r /= total);
            let decrease: f64 = grad.iter().zip(cand.iter().zip(&rates)).map(|(g, (c, r))| g * (c - r)).sum();
            if let Some(v) = objective.value(&cand) {
                if v <= value + 1e-4 * decrease {
                    accepted = Some((cand, v));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            converged = true;
            break;
        };
        rates = cand;
        value = v;
        step = (step * 2.0).min(1e6);
        history.push(value);
        if history.len() > options.window {
            let old = history[history.len() - 1 - options.window];
            if (old - value) <= options.rel_tol * value.abs() {
                converged = true;
                break;
            }
        }
    }

    if options.polish {
        if let Some(polished) = newton_polish(&objective, &rates) {
            // Objective values agree to rounding once both points are near the
            // optimum, so the polished point wins unless clearly worse.
            let noise = objective.value_noise(&polished).max(1e-10);
            if objective.value(&polished).is_some_and(|v| v <= value * (1.0 + noise)) {
                rates = polished;
            }
        }
    }
    finish(polytope, network, weight, rates, iterations, converged, SolverPath::MirrorDescent)
}

/// Newton iterations on the face of the simplex spanned by the support of
/// `start`, solving the stationarity system `∇M = λ 1`. A step that would make
/// a rate negative stops at the boundary and drops that vertex from the face.
fn newton_polish(objective: &RateObjective, start: &[f64]) -> Option<Vec<f64>> {
    let max = start.iter().copied().fold(0.0, f64::max);
    let mut support: Vec<usize> = (0..start.len()).filter(|&i| start[i] > 1e-9 * max).collect();
    let mut rates: Vec<f64> = start.iter().map(|&r| if r > 1e-9 * max { r } else { 0.0 }).collect();
    let total: f64 = rates.iter().sum();
    rates.iter_mut().for_each(|r| *r /= total);
    let spread = |g: &DVector<f64>, support: &[usize]| -> f64 {
        let vals = support.iter().map(|&i| g[i]);
        let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.fold(f64::INFINITY, f64::min);
        hi - lo
    };
    let mut value = objective.value(&rates)?;
    for _ in 0..100 {
        let grad = objective.gradient(&rates)?;
        let res = spread(&grad, &support);
        if res <= 1e-13 * grad.amax() {
            break;
        }
        let hess = objective.hessian(&rates)?;
        let k = support.len();
        // Balance the curvature block against the unit constraint row.
        let hs = support.iter().map(|&i| hess[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut kkt = DMatrix::zeros(k + 1, k + 1);
        let mut rhs = DVector::zeros(k + 1);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                kkt[(a, b)] = hess[(i, j)] / hs;
            }
            kkt[(a, k)] = 1.0;
            kkt[(k, a)] = 1.0;
            rhs[a] = -grad[i] / hs;
        }
        let mut delta = linalg::lstsq(&kkt, &rhs).rows(0, k).into_owned();
        let drift = delta.sum() / k as f64;
        delta.add_scalar_mut(-drift);
        // Ratio test against the boundary of the face.
        let mut blocking = None;
        let mut t = 1.0;
        for (a, &i) in support.iter().enumerate() {
            if delta[a] < 0.0 && -rates[i] / delta[a] < t {
                t = -rates[i] / delta[a];
                blocking = Some(a);
            }
        }
        let step = |t: f64| -> Vec<f64> {
            let mut cand = rates.clone();
            for (a, &i) in support.iter().enumerate() {
                cand[i] = (cand[i] + t * delta[a]).max(0.0);
            }
            let total: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|r| *r /= total);
            cand
        };
        if let Some(a) = blocking {
            let mut cand = step(t);
            cand[support[a]] = 0.0;
            let total: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|r| *r /= total);
            let v = objective.value(&cand)?;
            if v > value * (1.0 + objective.value_noise(&cand)) {
                break;
            }
            support.remove(a);
            rates = cand;
            value = v;
            continue;
        }
        // Near the optimum M stops resolving progress; the stationarity
        // residual still does.
        let mut accepted = None;
        while t > 1e-12 {
            let cand = step(t);
            if let (Some(v), Some(g)) = (objective.value(&cand), objective.gradient(&cand)) {
                if v < value || (v <= value * (1.0 + objective.value_noise(&cand)) && spread(&g, &support) < res) {
                    accepted = Some((cand, v));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, v)) = accepted else { break };
        rates = cand;
        value = v;
    }
    // Vertices off the face must not offer descent.
    let grad = objective.gradient(&rates)?;
    let floor = support.iter().map(|&i| grad[i]).fold(f64::INFINITY, f64::min);
    let slack = 1e-9 * grad.amax();
    if (0..rates.len()).any(|i| !support.contains(&i) && grad[i] < floor - slack) {
        return None;
    }
    Some(rates)
}

fn finish(
    polytope: &DfsPolytope,
    network: &SensorNetwork,
    weight: &WeightMatrix,
    rates: Vec<f64>,
    iterations: usize,
    converged: bool,
    path: SolverPath,
) -> Result<RateSolution> {
    let reps = polytope.representatives();
    let n = network.sensors();
    let k = reps.iter().zip(&rates).fold(DMatrix::zeros(n, n), |acc, (v, r)| acc + linalg::outer(v.as_vector()) * *r);
    let qfim = qfim_from_k(network, &KMatrix::from_symmetric(k))?;
    // The factored evaluation avoids forming 𝓕 and is accurate on nearly
    // unidentifiable instances.
    let objective = match RateObjective::new(polytope, network, weight)?.value(&rates) {
        Some(v) => v,
        None => figure_of_merit(weight, &qfim)?,
    };
    let t = network.time();
    let indices = reps.iter().map(|v| polytope.vertex_index(v, 0.0).expect("representative is a vertex"));
    Ok(RateSolution {
        rates: indices.zip(rates).collect(),
        objective,
        iterations,
        converged,
        path,
        trace_objective: 4.0 * t * t * objective,
    })
}

/// Whether the vertex representatives are pairwise orthogonal.
pub fn vertices_orthogonal(polytope: &DfsPolytope, tol: f64) -> bool {
    let reps = polytope.representatives();
    reps.iter().enumerate().all(|(i, a)| {
        reps[i + 1..].iter().all(|b| {
            let (va, vb) = (a.as_vector(), b.as_vector());
            va.dot(vb).abs() <= tol * va.norm() * vb.norm()
        })
    })
}

/// Closed-form optimum for mutually orthogonal vertex representatives.
///
/// With `A = [Ŝv_1 … Ŝv_d]` the objective is `(1/4T²) Σ w_i / r_i` where
/// `w_i = (A⁻¹ W A⁻ᵀ)_ii`, minimized by `r_i ∝ √w_i`. When the kernel has more
/// dimensions than there are signals, `A` is wide and its right pseudoinverse
/// is used; the rates then minimize an upper bound on the objective, and the
/// reported objective is the exact value at those rates.
pub fn optimal_rates_orthogonal(
    polytope: &DfsPolytope,
    network: &SensorNetwork,
    weight: &WeightMatrix,
) -> Result<RateSolution> {
    if weight.dim() != network.signals() {
        return Err(Error::DimensionMismatch("weight and signal counts differ".into()));
    }
    if !vertices_orthogonal(polytope, 1e-9) {
        return Err(Error::NonOrthogonalVertices);
    }
    let restricted = network.signal() * polytope.kernel_basis();
    let s = network.signals();
    let rank = restricted
        .clone()
        .svd(false, false)
        .rank(1e-10 * restricted.amax().max(1e-300) * s.max(restricted.ncols()) as f64);
    if restricted.ncols() < s || rank < s {
        return Err(Error::SingularRestrictedSignal);
    }
    let reps: Vec<SpinVector> = polytope.representatives();
    let a = DMatrix::from_columns(&reps.iter().map(|v| network.signal() * v.as_vector()).collect::<Vec<_>>());
    let a_inv = if a.is_square() {
        a.clone().try_inverse().ok_or(Error::SingularRestrictedSignal)?
    } else {
        a.clone().pseudo_inverse(1e-12).map_err(|_| Error::SingularRestrictedSignal)?
    };
    let w = &a_inv * weight.matrix() * a_inv.transpose();
    let roots: Vec<f64> = (0..reps.len()).map(|i| w[(i, i)].max(0.0).sqrt()).collect();
    let total: f64 = roots.iter().sum();
    if total <= 0.0 {
        return Err(Error::SingularRestrictedSignal);
    }
    let rates = roots.iter().map(|x| x / total).collect();
    finish(polytope, network, weight, rates, 0, true, SolverPath::ClosedForm)
}

/// Picks the closed form when it is exact (orthogonal representatives, one
/// per signal) and the convex solver otherwise.
pub fn optimize_auto(
    polytope: &DfsPolytope,
    network: &SensorNetwork,
    weight: &WeightMatrix,
    options: SolverOptions,
) -> Result<RateSolution> {
    if vertices_orthogonal(polytope, 1e-9) && polytope.representatives().len() == network.signals() {
        if let Ok(sol) = optimal_rates_orthogonal(polytope, network, weight) {
            return Ok(sol);
        }
    }
    optimize_rates(polytope, network, weight, options)
}

/// Comparison of an affine-block strategy with its centred DFS counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineComparison {
    pub k_affine: KMatrix,
    pub k_centered: KMatrix,
    /// `4 K̂(centered) = K̂(affine)` entrywise.
    pub quarter_law_ok: bool,
    /// Per signal: the best single-vertex GHZ information `max_v 4T²((Ŝv)_a)²`.
    pub best_vertex_qfi: Vec<f64>,
    /// Per signal: the diagonal of the affine strategy's QFIM.
    pub affine_qfi: Vec<f64>,
    /// Best vertex information is at least a quarter of the affine one along every signal.
    pub ratio_bound_ok: bool,
}

pub fn compare_affine(network: &SensorNetwork, strategy_affine: &PureStrategy, tol: f64) -> Result<AffineComparison> {
    let centered = center_affine(strategy_affine, network, tol)?;
    let k_affine = k_matrix_pure(strategy_affine);
    let k_centered = k_matrix_pure(&centered);
    let quarter_law_ok = linalg::max_abs_diff(&(k_centered.matrix() * 4.0), k_affine.matrix()) <= tol.max(1e-12);

    let qfim = qfim_from_k(network, &k_affine)?;
    let affine_qfi: Vec<f64> = (0..network.signals()).map(|a| qfim.matrix()[(a, a)]).collect();
    let t = network.time();
    let best_vertex_qfi: Vec<f64> = match enumerate_vertices(network, DEFAULT_RANK_TOL) {
        Ok(poly) => (0..network.signals())
            .map(|a| {
                poly.vertices()
                    .iter()
                    .map(|v| 4.0 * t * t * (network.signal().row(a) * v.as_vector())[(0, 0)].powi(2))
                    .fold(0.0, f64::max)
            })
            .collect(),
        Err(Error::EmptyDfs) => vec![0.0; network.signals()],
        Err(e) => return Err(e),
    };
    let ratio_bound_ok =
        best_vertex_qfi.iter().zip(&affine_qfi).all(|(best, aff)| *best >= aff / 4.0 - tol * (1.0 + aff.abs()));
    Ok(AffineComparison { k_affine, k_centered, quarter_law_ok, best_vertex_qfi, affine_qfi, ratio_bound_ok })
}
