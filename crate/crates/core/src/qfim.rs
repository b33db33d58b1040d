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

//! Fisher-information calculus for label strategies.
//!
//! Every strategy is summarised by an `n × n` K matrix from which the quantum
//! Fisher information matrix follows as `𝓕 = 4T² Ŝ K̂ Ŝᵀ` for any signal matrix.
//! Comparing K matrices in the positive semidefinite order therefore compares
//! strategies independently of the signals.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{MixedKState, PureStrategy, SensorNetwork, SequentialStrategy, SpinVector};

/// Symmetric positive semidefinite summary of a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct KMatrix(DMatrix<f64>);

impl KMatrix {
    /// Validates symmetry and positive semidefiniteness within `tol`.
    pub fn new(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !linalg::is_symmetric(&entries, tol) {
            return Err(Error::ShapeMismatch("K matrix must be square and symmetric".into()));
        }
        let min = linalg::min_eigenvalue(&entries);
        if min < -tol {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(KMatrix(linalg::symmetrize(&entries)))
    }

    pub(crate) fn from_symmetric(entries: DMatrix<f64>) -> Self {
        KMatrix(linalg::symmetrize(&entries))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

/// Quantum Fisher information matrix of a strategy on a network.
#[derive(Debug, Clone, PartialEq)]
pub struct Qfim {
    entries: DMatrix<f64>,
    time: f64,
}

impl Qfim {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Wraps an externally computed information matrix.
    pub fn from_matrix(entries: DMatrix<f64>, time: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::ShapeMismatch("Fisher information must be square".into()));
        }
        Ok(Qfim { entries: linalg::symmetrize(&entries), time })
    }
}

/// Outcome of comparing two symmetric matrices in the Loewner order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdOrder {
    Greater,
    Less,
    Equal,
    Incomparable,
}

/// Effective energies `Ŝk`: the signal strength seen by the label `k`.
pub fn effective_energy(network: &SensorNetwork, k: &SpinVector) -> Result<DVector<f64>> {
    network.check_label(k)?;
    Ok(network.signal() * k.as_vector())
}

/// `K̂ = Σ r_i k_i k_iᵀ`.
pub fn k_matrix_sequential(strategy: &SequentialStrategy) -> KMatrix {
    let n = strategy.sensors();
    let k = strategy.terms().iter().fold(DMatrix::zeros(n, n), |acc, (k, r)| acc + linalg::outer(k.as_vector()) * *r);
    KMatrix::from_symmetric(k)
}

/// `K̂_ψ = Σ |c_k|² (k − k̄)(k − k̄)ᵀ`, which equals `Σ |c_k|² k kᵀ − k̄ k̄ᵀ`.
pub fn k_matrix_pure(strategy: &PureStrategy) -> KMatrix {
    let n = strategy.sensors();
    let mean = strategy.mean_label();
    let k = strategy
        .terms()
        .iter()
        .fold(DMatrix::zeros(n, n), |acc, (k, c)| acc + linalg::outer(&(k.as_vector() - &mean)) * c.norm_sqr());
    KMatrix::from_symmetric(k)
}

/// K matrix of a mixed state in the label basis.
///
/// With `ρ = U P U†`, let `X_ij = Σ_ν U*_{νi} U_{νj} k_ν`; then
/// `K̂ = ½ Σ_{ij} (p_i − p_j)²/(p_i + p_j) · Re(X_ij X_ij†)`. Eigenvalues below
/// `tol` are clamped to zero and pairs with `p_i + p_j ≤ tol` are skipped.
pub fn k_matrix_mixed(state: &MixedKState, tol: f64) -> Result<KMatrix> {
    let labels = state.labels();
    let n = labels[0].len();
    let dim = labels.len();
    let rho = state.coefficients();
    let skew = (rho - rho.adjoint()).iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if skew > tol {
        return Err(Error::NonHermitian);
    }
    let eig = rho.clone().symmetric_eigen();
    let mut p: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if let Some(min) = p.iter().copied().reduce(f64::min) {
        if min < -tol {
            return Err(Error::NegativeEigenvalue(min));
        }
    }
    for v in &mut p {
        if *v < tol {
            *v = 0.0;
        }
    }
    let u = &eig.eigenvectors;

    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..dim {
        for j in 0..dim {
            let denom = p[i] + p[j];
            if denom <= tol {
                continue;
            }
            let weight = (p[i] - p[j]).powi(2) / denom;
            if weight == 0.0 {
                continue;
            }
            let mut x = DVector::<Complex<f64>>::zeros(n);
            for (nu, label) in labels.iter().enumerate() {
                let f = u[(nu, i)].conj() * u[(nu, j)];
                for a in 0..n {
                    x[a] += f * label.as_vector()[a];
                }
            }
            for a in 0..n {
                for b in 0..n {
                    k[(a, b)] += 0.5 * weight * (x[a] * x[b].conj()).re;
                }
            }
        }
    }
    Ok(KMatrix::from_symmetric(k))
}

/// `𝓕 = 4T² Ŝ K̂ Ŝᵀ`.
pub fn qfim_from_k(network: &SensorNetwork, k_matrix: &KMatrix) -> Result<Qfim> {
    if k_matrix.dim() != network.sensors() {
        return Err(Error::DimensionMismatch(format!(
            "K matrix is {}x{}, network has {} sensors",
            k_matrix.dim(),
            k_matrix.dim(),
            network.sensors()
        )));
    }
    let t = network.time();
    let s = network.signal();
    let f = s * k_matrix.matrix() * s.transpose() * (4.0 * t * t);
    Ok(Qfim { entries: linalg::symmetrize(&f), time: t })
}

/// Quantum Fisher information of the GHZ state on `k` for the single parameter
/// combination `direction`: `4T² (vᵀ Ŝ k)²`.
pub fn single_direction_qfi(network: &SensorNetwork, direction: &DVector<f64>, k: &SpinVector) -> Result<f64> {
    if direction.len() != network.signals() {
        return Err(Error::DimensionMismatch(format!(
            "direction has {} entries, network has {} signals",
            direction.len(),
            network.signals()
        )));
    }
    let energy = effective_energy(network, k)?;
    let t = network.time();
    Ok(4.0 * t * t * direction.dot(&energy).powi(2))
}

/// State after infinitely strong, independent noise: coherences between
/// labels in different affine blocks (`N̂(k − k′) ≠ 0`) vanish.
pub fn dephase(strategy: &PureStrategy, network: &SensorNetwork, tol: f64) -> Result<MixedKState> {
    let labels: Vec<SpinVector> = strategy.labels().cloned().collect();
    for k in &labels {
        network.check_label(k)?;
    }
    let offsets: Vec<DVector<f64>> = labels.iter().map(|k| network.noise() * k.as_vector()).collect();
    let amps: Vec<Complex<f64>> = strategy.terms().iter().map(|(_, c)| *c).collect();
    let dim = labels.len();
    let coefficients = DMatrix::from_fn(dim, dim, |i, j| {
        let same_block = offsets[i].is_empty() || (&offsets[i] - &offsets[j]).amax() <= tol;
        if same_block {
            amps[i] * amps[j].conj()
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    Ok(MixedKState::from_parts_unchecked(labels, coefficients))
}

/// Compares `a` and `b` in the positive semidefinite order.
///
/// The tolerance is scaled as `tol · (1 + ‖a‖₂ + ‖b‖₂)`.
pub fn psd_compare(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<PsdOrder> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let scaled = tol * (1.0 + linalg::sym_norm2(a) + linalg::sym_norm2(b));
    let diff = a - b;
    let eig = linalg::sym_eigenvalues(&diff);
    let (min, max) = match (eig.first(), eig.last()) {
        (Some(lo), Some(hi)) => (*lo, *hi),
        _ => return Ok(PsdOrder::Equal),
    };
    Ok(if min.abs() <= scaled && max.abs() <= scaled {
        PsdOrder::Equal
    } else if min >= -scaled {
        PsdOrder::Greater
    } else if max <= scaled {
        PsdOrder::Less
    } else {
        PsdOrder::Incomparable
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_network;

    fn sv(v: &[f64]) -> SpinVector {
        SpinVector::new(v.to_vec()).unwrap()
    }

    fn example1() -> SensorNetwork {
        validate_network(
            DMatrix::from_row_slice(2, 4, &[1.2, 1.2, 1.2, 1.2, 0.6, 1.2, 1.2, 0.6]),
            DMatrix::from_row_slice(2, 4, &[1.0, 1.0, -1.0, -1.0, -1.0, 1.0, -1.0, 1.0]),
            1.0,
        )
        .unwrap()
    }

    fn vertex_k() -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 4, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0])
    }

    fn example_psi(gamma: f64, mu: f64, nu: f64) -> PureStrategy {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureStrategy::new(vec![
            (sv(&[gamma, 1.0, 1.0, gamma]), Complex::new(nu * h, 0.0)),
            (sv(&[gamma, -1.0, -1.0, gamma]), Complex::new(mu * h, 0.0)),
            (sv(&[-gamma, -1.0, -1.0, -gamma]), Complex::new(mu * h, 0.0)),
            (sv(&[-gamma, 1.0, 1.0, -gamma]), Complex::new(nu * h, 0.0)),
        ])
        .unwrap()
    }

    #[test]
    fn energies() {
        let net = example1();
        let e1 = effective_energy(&net, &sv(&[1.0; 4])).unwrap();
        assert!((e1[0] - 4.8).abs() < 1e-12 && (e1[1] - 3.6).abs() < 1e-12);
        let e2 = effective_energy(&net, &sv(&[-1.0, 1.0, 1.0, -1.0])).unwrap();
        assert!(e2[0].abs() < 1e-12 && (e2[1] - 1.2).abs() < 1e-12);
        assert_eq!(effective_energy(&net, &SpinVector::zeros(4)).unwrap().amax(), 0.0);
        assert!(effective_energy(&net, &SpinVector::zeros(3)).is_err());
    }

    #[test]
    fn sequential_vertex_strategy() {
        let s = SequentialStrategy::new(vec![(sv(&[1.0; 4]), 0.5), (sv(&[-1.0, 1.0, 1.0, -1.0]), 0.5)]).unwrap();
        assert!((k_matrix_sequential(&s).matrix() - vertex_k()).amax() < 1e-15);
    }

    #[test]
    fn pure_example_matches_symbolic_form() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let k = k_matrix_pure(&example_psi(1.0, h, h));
        assert!((k.matrix() - vertex_k()).amax() < 1e-12);
        // Symbolic entries: γ² on the (1,4) block, 4|μ|²|ν|² on the (2,3) block.
        let (gamma, mu) = (0.5, 0.6f64);
        let nu = (1.0 - mu * mu).sqrt();
        let k = k_matrix_pure(&example_psi(gamma, mu, nu));
        let c = 4.0 * mu * mu * nu * nu;
        let g = gamma * gamma;
        let expected = DMatrix::from_row_slice(4, 4, &[g, 0.0, 0.0, g, 0.0, c, c, 0.0, 0.0, c, c, 0.0, g, 0.0, 0.0, g]);
        assert!((k.matrix() - expected).amax() < 1e-12);
    }

    #[test]
    fn single_basis_state_has_zero_k() {
        let psi = PureStrategy::new(vec![(sv(&[0.3, -1.0]), Complex::new(0.0, 1.0))]).unwrap();
        assert_eq!(k_matrix_pure(&psi).matrix().amax(), 0.0);
    }

    #[test]
    fn w_state_k() {
        let third = Complex::new(1.0 / 3f64.sqrt(), 0.0);
        let psi = PureStrategy::new(vec![
            (sv(&[1.0, 0.0, -1.0]), third),
            (sv(&[-1.0, 1.0, 0.0]), third),
            (sv(&[0.0, -1.0, 1.0]), third),
        ])
        .unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]) / 3.0;
        assert!((k_matrix_pure(&psi).matrix() - expected).amax() < 1e-12);
    }

    #[test]
    fn mixed_rank_one_matches_pure() {
        let norm = 0.91f64.sqrt();
        let psi = PureStrategy::new(vec![
            (sv(&[0.2, -0.5, 1.0]), Complex::new(0.3, 0.4) / norm),
            (sv(&[-1.0, 0.5, 0.1]), Complex::new(-0.5, 0.1) / norm),
            (sv(&[0.9, 0.9, -0.9]), Complex::new(0.2, -0.6) / norm),
        ])
        .unwrap();
        let mixed = k_matrix_mixed(&MixedKState::from_pure(&psi), 1e-12).unwrap();
        assert!((mixed.matrix() - k_matrix_pure(&psi).matrix()).amax() < 1e-10);
    }

    #[test]
    fn dephased_ghz_has_zero_k() {
        let net = validate_network(DMatrix::from_element(1, 2, 1.0), DMatrix::from_element(1, 2, 1.0), 1.0).unwrap();
        let psi = PureStrategy::ghz(sv(&[1.0, 0.5])).unwrap();
        let rho = dephase(&psi, &net, 1e-9).unwrap();
        assert_eq!(rho.coefficients()[(0, 1)], Complex::new(0.0, 0.0));
        assert!(k_matrix_mixed(&rho, 1e-12).unwrap().matrix().amax() < 1e-15);
    }

    #[test]
    fn dephasing_inside_dfs_is_identity() {
        let net = example1();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = example_psi(0.5, h, h);
        let rho = dephase(&psi, &net, 1e-9).unwrap();
        assert_eq!(rho, MixedKState::from_pure(&psi));
    }

    #[test]
    fn dephasing_across_blocks_gives_classical_mixture() {
        let net = example1();
        let h = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = PureStrategy::new(vec![(sv(&[1.0; 4]), h), (sv(&[1.0, 0.0, 0.0, 0.0]), h)]).unwrap();
        let rho = dephase(&psi, &net, 1e-9).unwrap();
        let c = rho.coefficients();
        assert!((c[(0, 0)].re - 0.5).abs() < 1e-15 && (c[(1, 1)].re - 0.5).abs() < 1e-15);
        assert_eq!(c[(0, 1)].norm(), 0.0);
    }

    #[test]
    fn qfim_golden() {
        let net = example1();
        let s = SequentialStrategy::new(vec![(sv(&[1.0; 4]), 0.5), (sv(&[-1.0, 1.0, 1.0, -1.0]), 0.5)]).unwrap();
        let f = qfim_from_k(&net, &k_matrix_sequential(&s)).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 1.5, 1.5, 1.25]) * (24.0f64 * 24.0 / 25.0);
        assert!((f.matrix() - expected).amax() < 1e-9);
        let zero = qfim_from_k(&net, &KMatrix::new(DMatrix::zeros(4, 4), 1e-12).unwrap()).unwrap();
        assert_eq!(zero.matrix().amax(), 0.0);
    }

    #[test]
    fn single_direction_values() {
        let net = example1();
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert!((single_direction_qfi(&net, &e1, &sv(&[1.0; 4])).unwrap() - 92.16).abs() < 1e-10);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        let orth = sv(&[1.0, -1.0, 1.0, -1.0]);
        assert!(single_direction_qfi(&net, &DVector::from_vec(vec![1.0, 0.0]), &orth).unwrap().abs() < 1e-20);
        assert!(single_direction_qfi(&net, &e2, &SpinVector::zeros(4)).unwrap() == 0.0);
    }

    #[test]
    fn psd_order_cases() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]));
        assert_eq!(psd_compare(&a, &a, 1e-12).unwrap(), PsdOrder::Equal);
        assert_eq!(psd_compare(&a, &b, 1e-12).unwrap(), PsdOrder::Incomparable);
        assert_eq!(psd_compare(&(&a * 2.0), &a, 1e-12).unwrap(), PsdOrder::Greater);
        assert_eq!(psd_compare(&a, &(&a * 2.0), 1e-12).unwrap(), PsdOrder::Less);
        assert!(psd_compare(&a, &DMatrix::zeros(3, 3), 1e-12).is_err());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let interior = k_matrix_pure(&example_psi(0.5, h, h));
        assert_eq!(psd_compare(&vertex_k(), interior.matrix(), 1e-10).unwrap(), PsdOrder::Greater);
    }
}
