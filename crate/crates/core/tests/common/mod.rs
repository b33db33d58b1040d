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

//! Shared fixtures and independent oracles for the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use dfs_metrology::io;
use dfs_metrology::model::{validate_network, PureStrategy, SensorNetwork, SpinVector};
use nalgebra::{Complex, DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn load(name: &str) -> SensorNetwork {
    io::load_network(&data(name)).expect("shipped network parses")
}

pub fn sv(v: &[f64]) -> SpinVector {
    SpinVector::new(v.to_vec()).expect("valid spin vector")
}

pub fn c(re: f64) -> Complex<f64> {
    Complex::new(re, 0.0)
}

/// Entrywise match of two vector sets up to ordering.
pub fn same_set(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| b.iter().any(|y| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol)))
        && b.iter().all(|y| a.iter().any(|x| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol)))
}

pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// Exact vertex oracle.
//
// A point of {k : Nk = 0, |k_j| <= 1} is a vertex iff fixing some coordinates
// to ±1 together with Nk = 0 pins k down uniquely. Every pattern in
// {-1, 0, +1}^n is tried with exact rational elimination.

type Q = BigRational;

fn q(x: i64) -> Q {
    Q::from_integer(BigInt::from(x))
}

/// Unique solution of the (possibly overdetermined) system, if any.
fn solve_unique(mut rows: Vec<Vec<Q>>, n: usize) -> Option<Vec<Q>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = Q::one() / rows[r][col].clone();
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * p;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if pivots.len() < n {
        return None;
    }
    if rows[r..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    Some((0..n).map(|i| rows[i][n].clone()).collect())
}

/// All vertices of the DFS of an integer noise matrix, exactly.
pub fn rational_vertices(noise: &[Vec<i64>], n: usize) -> Vec<Vec<f64>> {
    let mut found: Vec<Vec<Q>> = Vec::new();
    let patterns = 3usize.pow(n as u32);
    for code in 0..patterns {
        let mut pattern = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            pattern.push(c % 3);
            c /= 3;
        }
        let mut rows: Vec<Vec<Q>> =
            noise.iter().map(|row| row.iter().map(|x| q(*x)).chain(std::iter::once(Q::zero())).collect()).collect();
        for (j, &p) in pattern.iter().enumerate() {
            if p == 0 {
                continue;
            }
            let mut row = vec![Q::zero(); n + 1];
            row[j] = Q::one();
            row[n] = if p == 1 { q(1) } else { q(-1) };
            rows.push(row);
        }
        if let Some(k) = solve_unique(rows, n) {
            if k.iter().all(|x| x.abs() <= Q::one()) && !found.contains(&k) {
                found.push(k);
            }
        }
    }
    found.into_iter().map(|k| k.iter().map(|x| x.to_f64().expect("finite")).collect()).collect()
}

// ---------------------------------------------------------------------------
// Finite-difference Bures oracle.
//
// Labels are embedded as basis states of the 2^n-dimensional register; label
// `k` picks up the product phase Π_j exp(-i T θ_j k_j) with θ = Ŝᵀα. Noise
// enters through Gaussian amplitudes β averaged in closed form, which damps
// the coherence between labels k, k' by exp(-(σT)²‖N̂(k - k')‖²/2).

pub struct BuresOracle {
    /// Columns span ρ: ρ = A A†.
    factor: DMatrix<Complex<f64>>,
    labels: Vec<DVector<f64>>,
    signal: DMatrix<f64>,
    time: f64,
}

impl BuresOracle {
    /// `sigma = None` keeps the pure state.
    pub fn new(network: &SensorNetwork, labels: &[Vec<f64>], amps: &[Complex<f64>], sigma: Option<f64>) -> Self {
        let n = network.sensors();
        let dim = 1usize << n;
        assert!(labels.len() <= dim, "more labels than basis states");
        let t = network.time();
        let ks: Vec<DVector<f64>> = labels.iter().map(|k| DVector::from_vec(k.clone())).collect();
        let mut rho = DMatrix::<Complex<f64>>::zeros(dim, dim);
        for (a, ka) in ks.iter().enumerate() {
            for (b, kb) in ks.iter().enumerate() {
                let damp = match sigma {
                    None => 1.0,
                    Some(s) => {
                        let d = network.noise() * (ka - kb);
                        (-(s * t).powi(2) * d.norm_squared() / 2.0).exp()
                    }
                };
                rho[(a, b)] = amps[a] * amps[b].conj() * damp;
            }
        }
        let eig = rho.symmetric_eigen();
        let keep: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 1e-10).collect();
        let factor =
            DMatrix::from_fn(dim, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])] * eig.eigenvalues[keep[c]].sqrt());
        let mut padded = ks;
        padded.resize(dim, DVector::zeros(n));
        BuresOracle { factor, labels: padded, signal: network.signal().clone(), time: t }
    }

    /// Uhlmann fidelity between ρ(α) and ρ(α + δ).
    fn fidelity(&self, delta: &DVector<f64>) -> f64 {
        let theta = self.signal.transpose() * delta;
        let shifted = DMatrix::from_fn(self.factor.nrows(), self.factor.ncols(), |r, c| {
            let phase = -self.time * theta.dot(&self.labels[r]);
            self.factor[(r, c)] * Complex::from_polar(1.0, phase)
        });
        let overlap = self.factor.adjoint() * shifted;
        let nuclear: f64 = overlap.svd(false, false).singular_values.iter().sum();
        nuclear * nuclear
    }

    /// QFIM from `F ≈ 1 − δᵀ𝓕δ/4` by central differences with step `h`.
    pub fn qfim(&self, h: f64) -> DMatrix<f64> {
        let s = self.signal.nrows();
        let e = |i: usize| DVector::from_fn(s, |r, _| if r == i { 1.0 } else { 0.0 });
        let f0 = self.fidelity(&DVector::zeros(s));
        let mut out = DMatrix::zeros(s, s);
        for i in 0..s {
            let d2 = (self.fidelity(&(e(i) * h)) + self.fidelity(&(e(i) * -h)) - 2.0 * f0) / (h * h);
            out[(i, i)] = -2.0 * d2;
            for j in 0..i {
                let pp = self.fidelity(&((e(i) + e(j)) * h));
                let pm = self.fidelity(&((e(i) - e(j)) * h));
                let mp = self.fidelity(&((e(j) - e(i)) * h));
                let mm = self.fidelity(&((e(i) + e(j)) * -h));
                let d2 = (pp - pm - mp + mm) / (4.0 * h * h);
                out[(i, j)] = -2.0 * d2;
                out[(j, i)] = -2.0 * d2;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Random instances.

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| gaussian(rng))
}

pub fn random_network(rng: &mut ChaCha8Rng, s: usize, m: usize, n: usize) -> SensorNetwork {
    let t = 0.5 + rng.random::<f64>();
    validate_network(random_matrix(rng, s, n), random_matrix(rng, m, n), t).expect("finite random network")
}

/// Point of the hypercube, not necessarily in any DFS.
pub fn random_label(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Random point of the DFS spanned by the columns of `basis`.
pub fn random_dfs_label(rng: &mut ChaCha8Rng, basis: &DMatrix<f64>) -> Vec<f64> {
    let y = DVector::from_fn(basis.ncols(), |_, _| gaussian(rng));
    let k = basis * y;
    let scale = rng.random_range(0.05..=1.0) / k.amax().max(1e-12);
    (k * scale).iter().copied().collect()
}

pub fn random_amplitudes(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex<f64>> {
    let raw: Vec<Complex<f64>> = (0..len).map(|_| Complex::new(gaussian(rng), gaussian(rng))).collect();
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|a| a / norm).collect()
}

pub fn random_rates(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

/// Pure strategy over distinct labels with random amplitudes.
pub fn pure_from(labels: Vec<Vec<f64>>, amps: Vec<Complex<f64>>) -> PureStrategy {
    PureStrategy::new(labels.into_iter().map(|k| sv(&k)).zip(amps).collect()).expect("valid pure strategy")
}

/// Sylvester–Hadamard row `h_u(j) = (−1)^{popcount(u ∧ j)}`.
pub fn hadamard_row(u: usize, n: usize) -> Vec<f64> {
    (0..n).map(|j| if (u & j).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 }).collect()
}

/// Network whose DFS is the cross-polytope spanned by `d` Hadamard rows with
/// F₂-independent indices, so its representatives are exactly those rows:
/// mutually orthogonal, one per signal. Returns the network and the rows.
pub fn orthogonal_instance(rng: &mut ChaCha8Rng) -> (SensorNetwork, Vec<Vec<f64>>) {
    let p = rng.random_range(2..=3usize);
    let n = 1usize << p;
    let d = rng.random_range(1..=p);
    // F₂-independent nonzero indices via an xor basis.
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Vec<usize> = Vec::new();
    while chosen.len() < d {
        let u = rng.random_range(1..n);
        let mut r = u;
        for b in &basis {
            r = r.min(r ^ b);
        }
        if r != 0 {
            basis.push(r);
            basis.sort_unstable_by(|a, b| b.cmp(a));
            chosen.push(u);
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let permute = |row: Vec<f64>| -> Vec<f64> { perm.iter().map(|&j| row[j]).collect() };
    // Hadamard rows are mutually orthogonal, so the unchosen ones span the
    // complement of the kernel.
    let noise_rows: Vec<Vec<f64>> =
        (0..n).filter(|u| !chosen.contains(u)).map(|u| permute(hadamard_row(u, n))).collect();
    let kernel: Vec<Vec<f64>> = chosen.iter().map(|&u| permute(hadamard_row(u, n))).collect();
    let raw = DMatrix::from_fn(n - d, n, |r, c| noise_rows[r][c]);
    let noise = random_matrix(rng, n - d, n - d) * raw;
    let signal = random_matrix(rng, d, n);
    let net = validate_network(signal, noise, 0.5 + rng.random::<f64>()).expect("finite network");
    (net, kernel)
}

pub fn random_weight(rng: &mut ChaCha8Rng, s: usize) -> DMatrix<f64> {
    let b = random_matrix(rng, s, s);
    &b * b.transpose() + DMatrix::identity(s, s) * 0.1
}
