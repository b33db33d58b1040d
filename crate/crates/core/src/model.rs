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

//! Domain types describing a sensor network and the strategies run on it.
//!
//! A [`SensorNetwork`] holds the signal matrix (rows are signal fields, columns
//! are sensors), the noise matrix with the same column layout, and the
//! evolution time. Strategies are labelled by [`SpinVector`]s, the effective
//! local spin values realised by the flip schedule of each sensor.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::DEFAULT_TOL;

/// Field samples and evolution time of a distributed sensing scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorNetwork {
    signal: DMatrix<f64>,
    noise: DMatrix<f64>,
    time: f64,
}

impl SensorNetwork {
    pub fn signal(&self) -> &DMatrix<f64> {
        &self.signal
    }

    pub fn noise(&self) -> &DMatrix<f64> {
        &self.noise
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Number of sensors.
    pub fn sensors(&self) -> usize {
        self.signal.ncols()
    }

    /// Number of signal parameters.
    pub fn signals(&self) -> usize {
        self.signal.nrows()
    }

    /// Number of noise fields.
    pub fn noise_sources(&self) -> usize {
        self.noise.nrows()
    }

    /// Same scenario with a different evolution time.
    pub fn with_time(&self, time: f64) -> Result<Self> {
        validate_network(self.signal.clone(), self.noise.clone(), time)
    }

    pub(crate) fn check_label(&self, k: &SpinVector) -> Result<()> {
        if k.len() != self.sensors() {
            return Err(Error::DimensionMismatch(format!(
                "label has {} entries, network has {} sensors",
                k.len(),
                self.sensors()
            )));
        }
        Ok(())
    }
}

/// Validates raw matrices and builds a [`SensorNetwork`].
pub fn validate_network(signal: DMatrix<f64>, noise: DMatrix<f64>, time: f64) -> Result<SensorNetwork> {
    if signal.nrows() == 0 || signal.ncols() == 0 {
        return Err(Error::DimensionMismatch("signal matrix is empty".into()));
    }
    if noise.ncols() != signal.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} columns, noise has {}",
            signal.ncols(),
            noise.ncols()
        )));
    }
    if signal.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("signal"));
    }
    if noise.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("noise"));
    }
    if !time.is_finite() {
        return Err(Error::NonFinite("time"));
    }
    if time <= 0.0 {
        return Err(Error::NonPositiveTime(time));
    }
    Ok(SensorNetwork { signal, noise, time })
}

/// Builds a network from tables of field samples, one row per field and one
/// column per sensor. An empty noise table describes a noiseless scenario.
pub fn network_from_samples(
    signal_samples: &[Vec<f64>],
    noise_samples: &[Vec<f64>],
    time: f64,
) -> Result<SensorNetwork> {
    let n =
        signal_samples.first().map(Vec::len).ok_or_else(|| Error::DimensionMismatch("signal table is empty".into()))?;
    let signal = table_to_matrix(signal_samples, n, "signal")?;
    let noise = table_to_matrix(noise_samples, n, "noise")?;
    validate_network(signal, noise, time)
}

pub(crate) fn table_to_matrix(rows: &[Vec<f64>], cols: usize, what: &str) -> Result<DMatrix<f64>> {
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::DimensionMismatch(format!("{what} row {i} has {} entries, expected {cols}", row.len())));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

/// Effective local spin values of a product state, `‖k‖_∞ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinVector(DVector<f64>);

impl SpinVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        Self::with_tol(entries, DEFAULT_TOL)
    }

    pub fn with_tol(entries: Vec<f64>, tol: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidSpinVector("empty label".into()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("spin vector"));
        }
        let norm = entries.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if norm > 1.0 + tol {
            return Err(Error::InvalidSpinVector(format!("infinity norm {norm} exceeds 1")));
        }
        Ok(SpinVector(DVector::from_vec(entries)))
    }

    /// Wraps a vector without the norm check; used for affine-block labels and
    /// intermediate arithmetic where the caller guarantees the bound.
    pub(crate) fn from_vector_unchecked(v: DVector<f64>) -> Self {
        SpinVector(v)
    }

    pub fn zeros(n: usize) -> Self {
        SpinVector(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }

    pub fn neg(&self) -> Self {
        SpinVector(-&self.0)
    }

    pub fn inf_norm(&self) -> f64 {
        self.0.amax()
    }

    pub fn inf_distance(&self, other: &SpinVector) -> f64 {
        (&self.0 - &other.0).amax()
    }

    /// Distance to `other` modulo a global sign.
    pub fn inf_distance_up_to_sign(&self, other: &SpinVector) -> f64 {
        self.inf_distance(other).min((&self.0 + &other.0).amax())
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.inf_norm() <= tol
    }

    /// The lexicographically larger of `k` and `-k`; both label the same GHZ state.
    pub fn canonical(&self) -> SpinVector {
        if lex_cmp(self.as_slice(), self.neg().as_slice()) == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for SpinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

fn check_label_lengths<'a>(mut labels: impl Iterator<Item = &'a SpinVector>) -> Result<usize> {
    let first = labels.next().ok_or_else(|| Error::InvalidStrategy("strategy has no terms".into()))?;
    let n = first.len();
    if labels.any(|k| k.len() != n) {
        return Err(Error::DimensionMismatch("strategy labels differ in length".into()));
    }
    Ok(n)
}

/// A general pure strategy `Σ c_k |k⟩` over orthogonal label states.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStrategy {
    terms: Vec<(SpinVector, Complex<f64>)>,
}

impl PureStrategy {
    pub fn new(terms: Vec<(SpinVector, Complex<f64>)>) -> Result<Self> {
        Self::with_tol(terms, DEFAULT_TOL)
    }

    /// Validates normalization and label distinctness, then rescales the
    /// amplitudes to unit norm exactly.
    pub fn with_tol(terms: Vec<(SpinVector, Complex<f64>)>, tol: f64) -> Result<Self> {
        check_label_lengths(terms.iter().map(|(k, _)| k))?;
        if terms.iter().any(|(_, c)| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("amplitude"));
        }
        let norm2: f64 = terms.iter().map(|(_, c)| c.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > tol {
            return Err(Error::InvalidStrategy(format!("amplitudes have squared norm {norm2}")));
        }
        for (i, (a, _)) in terms.iter().enumerate() {
            if terms[i + 1..].iter().any(|(b, _)| a.inf_distance(b) <= DEFAULT_TOL) {
                return Err(Error::InvalidStrategy(format!("label {a} appears twice")));
            }
        }
        let scale = norm2.sqrt().recip();
        Ok(PureStrategy { terms: terms.into_iter().map(|(k, c)| (k, c * scale)).collect() })
    }

    /// The GHZ state `(|k⟩ + |−k⟩)/√2`, or `|0⟩` when `k` is the zero label.
    pub fn ghz(k: SpinVector) -> Result<Self> {
        if k.is_zero(DEFAULT_TOL) {
            return Self::new(vec![(k, Complex::new(1.0, 0.0))]);
        }
        let a = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(vec![(k.neg(), a), (k, a)])
    }

    pub fn terms(&self) -> &[(SpinVector, Complex<f64>)] {
        &self.terms
    }

    pub fn sensors(&self) -> usize {
        self.terms[0].0.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = &SpinVector> {
        self.terms.iter().map(|(k, _)| k)
    }

    /// `k̄ = Σ |c_k|² k`.
    pub fn mean_label(&self) -> DVector<f64> {
        self.terms.iter().fold(DVector::zeros(self.sensors()), |acc, (k, c)| acc + k.as_vector() * c.norm_sqr())
    }
}

/// Sequential GHZ protocol: prepare `GHZ_{k_i}` with relative frequency `r_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequentialStrategy {
    terms: Vec<(SpinVector, f64)>,
}

impl SequentialStrategy {
    pub fn new(terms: Vec<(SpinVector, f64)>) -> Result<Self> {
        Self::with_tol(terms, DEFAULT_TOL)
    }

    /// Merges labels equal up to sign by summing their rates, checks the rates
    /// form a probability vector within `tol`, and renormalizes them exactly.
    pub fn with_tol(terms: Vec<(SpinVector, f64)>, tol: f64) -> Result<Self> {
        check_label_lengths(terms.iter().map(|(k, _)| k))?;
        if let Some((_, r)) = terms.iter().find(|(_, r)| !r.is_finite() || *r <= 0.0) {
            return Err(Error::InvalidStrategy(format!("rate {r} is not positive")));
        }
        let total: f64 = terms.iter().map(|(_, r)| r).sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidStrategy(format!("rates sum to {total}")));
        }
        let mut merged: Vec<(SpinVector, f64)> = Vec::with_capacity(terms.len());
        for (k, r) in terms {
            match merged.iter_mut().find(|(m, _)| m.inf_distance_up_to_sign(&k) <= DEFAULT_TOL) {
                Some(entry) => entry.1 += r,
                None => merged.push((k, r)),
            }
        }
        for entry in &mut merged {
            entry.1 /= total;
        }
        Ok(SequentialStrategy { terms: merged })
    }

    pub fn terms(&self) -> &[(SpinVector, f64)] {
        &self.terms
    }

    pub fn sensors(&self) -> usize {
        self.terms[0].0.len()
    }

    /// Rate assigned to `k` (up to sign), zero if absent.
    pub fn rate_of(&self, k: &SpinVector, tol: f64) -> f64 {
        self.terms.iter().filter(|(m, _)| m.inf_distance_up_to_sign(k) <= tol).map(|(_, r)| r).sum()
    }
}

/// Symmetric positive semidefinite weight of the figure of merit `tr(W Cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(DMatrix<f64>);

impl WeightMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::with_tol(entries, DEFAULT_TOL)
    }

    pub fn with_tol(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("weight matrix"));
        }
        if !linalg::is_symmetric(&entries, tol) {
            return Err(Error::InvalidWeight("matrix is not symmetric".into()));
        }
        let min = linalg::min_eigenvalue(&entries);
        if min < -tol {
            return Err(Error::InvalidWeight(format!("eigenvalue {min} is negative")));
        }
        Ok(WeightMatrix(linalg::symmetrize(&entries)))
    }

    pub fn identity(s: usize) -> Self {
        WeightMatrix(DMatrix::identity(s, s))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.0 * c)
    }
}

/// Density matrix expressed in the (orthonormal) label basis `{|k_i⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedKState {
    labels: Vec<SpinVector>,
    coefficients: DMatrix<Complex<f64>>,
}

impl MixedKState {
    pub fn new(labels: Vec<SpinVector>, coefficients: DMatrix<Complex<f64>>) -> Result<Self> {
        Self::with_tol(labels, coefficients, DEFAULT_TOL)
    }

    pub fn with_tol(labels: Vec<SpinVector>, coefficients: DMatrix<Complex<f64>>, tol: f64) -> Result<Self> {
        check_label_lengths(labels.iter())?;
        let dim = labels.len();
        if coefficients.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "{dim} labels but coefficient matrix is {:?}",
                coefficients.shape()
            )));
        }
        if coefficients.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("coefficient matrix"));
        }
        let skew = (&coefficients - coefficients.adjoint()).iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if skew > tol {
            return Err(Error::NonHermitian);
        }
        let trace = coefficients.trace();
        if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace is {trace}")));
        }
        let herm = (&coefficients + coefficients.adjoint()) * Complex::new(0.5, 0.0);
        let min = herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(MixedKState { labels, coefficients: herm })
    }

    /// The rank-one state `|ψ⟩⟨ψ|`.
    pub fn from_pure(strategy: &PureStrategy) -> Self {
        let labels: Vec<SpinVector> = strategy.labels().cloned().collect();
        let c = DVector::from_iterator(labels.len(), strategy.terms().iter().map(|(_, c)| *c));
        MixedKState { labels, coefficients: &c * c.adjoint() }
    }

    pub fn labels(&self) -> &[SpinVector] {
        &self.labels
    }

    pub fn coefficients(&self) -> &DMatrix<Complex<f64>> {
        &self.coefficients
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<SpinVector>, coefficients: DMatrix<Complex<f64>>) -> Self {
        MixedKState { labels, coefficients }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> (DMatrix<f64>, DMatrix<f64>) {
        (
            DMatrix::from_row_slice(2, 4, &[1.2, 1.2, 1.2, 1.2, 0.6, 1.2, 1.2, 0.6]),
            DMatrix::from_row_slice(2, 4, &[1.0, 1.0, -1.0, -1.0, -1.0, 1.0, -1.0, 1.0]),
        )
    }

    #[test]
    fn example_network_validates() {
        let (s, n) = example1();
        let net = validate_network(s, n, 1.0).unwrap();
        assert_eq!((net.sensors(), net.signals(), net.noise_sources()), (4, 2, 2));
    }

    #[test]
    fn single_sensor_noiseless() {
        let net = validate_network(DMatrix::from_element(1, 1, 1.0), DMatrix::zeros(0, 1), 1.0).unwrap();
        assert_eq!(net.noise_sources(), 0);
    }

    #[test]
    fn rejects_bad_networks() {
        let r = validate_network(DMatrix::zeros(2, 3), DMatrix::zeros(1, 4), 1.0);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        let mut s = DMatrix::zeros(1, 2);
        s[(0, 1)] = f64::NAN;
        assert_eq!(validate_network(s, DMatrix::zeros(0, 2), 1.0), Err(Error::NonFinite("signal")));
        let r = validate_network(DMatrix::zeros(1, 2), DMatrix::zeros(0, 2), 0.0);
        assert_eq!(r, Err(Error::NonPositiveTime(0.0)));
        let r = validate_network(DMatrix::zeros(1, 2), DMatrix::zeros(0, 2), f64::INFINITY);
        assert_eq!(r, Err(Error::NonFinite("time")));
    }

    #[test]
    fn samples_build_rows() {
        let net = network_from_samples(&[vec![1.2; 4]], &[], 1.0).unwrap();
        assert_eq!(net.signal().row(0).iter().copied().collect::<Vec<_>>(), vec![1.2; 4]);
        assert_eq!(net.noise_sources(), 0);
        let ragged = network_from_samples(&[vec![1.0, 2.0], vec![1.0]], &[], 1.0);
        assert!(matches!(ragged, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn spin_vector_bounds() {
        assert!(SpinVector::new(vec![1.0, -1.0, 0.3]).is_ok());
        assert!(SpinVector::new(vec![1.0 + 1e-10]).is_ok());
        assert!(SpinVector::new(vec![1.1]).is_err());
        assert!(SpinVector::with_tol(vec![1.1], 0.2).is_ok());
    }

    #[test]
    fn canonical_picks_lexicographically_larger() {
        let k = SpinVector::new(vec![-1.0, 1.0, 1.0, -1.0]).unwrap();
        assert_eq!(k.canonical().to_vec(), vec![1.0, -1.0, -1.0, 1.0]);
        assert_eq!(k.neg().canonical(), k.canonical());
    }

    #[test]
    fn sequential_merges_sign_pairs() {
        let k = SpinVector::new(vec![0.5, 1.0]).unwrap();
        let s = SequentialStrategy::new(vec![(k.clone(), 0.25), (k.neg(), 0.25), (SpinVector::zeros(2), 0.5)]).unwrap();
        assert_eq!(s.terms().len(), 2);
        assert_eq!(s.rate_of(&k, 1e-9), 0.5);
        assert!(SequentialStrategy::new(vec![(k.clone(), 0.7)]).is_err());
        assert!(SequentialStrategy::new(vec![(k.clone(), 1.5), (k.clone(), -0.5)]).is_err());
    }

    #[test]
    fn pure_rejects_duplicates_and_bad_norm() {
        let k = SpinVector::new(vec![0.5, 1.0]).unwrap();
        let a = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!(PureStrategy::new(vec![(k.clone(), a), (k.clone(), a)]).is_err());
        assert!(PureStrategy::new(vec![(k.clone(), a)]).is_err());
        assert!(PureStrategy::new(vec![(k.clone(), a), (k.neg(), a)]).is_ok());
    }

    #[test]
    fn weight_matrix_checks() {
        assert!(WeightMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).is_ok());
        assert!(WeightMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err());
        assert!(WeightMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }

    #[test]
    fn mixed_state_checks() {
        let labels = vec![SpinVector::new(vec![1.0]).unwrap(), SpinVector::new(vec![-1.0]).unwrap()];
        let half = Complex::new(0.5, 0.0);
        let ok = DMatrix::from_row_slice(2, 2, &[half, Complex::new(0.0, 0.1), Complex::new(0.0, -0.1), half]);
        assert!(MixedKState::new(labels.clone(), ok).is_ok());
        let nonherm = DMatrix::from_row_slice(2, 2, &[half, Complex::new(0.0, 0.1), Complex::new(0.0, 0.1), half]);
        assert_eq!(MixedKState::new(labels.clone(), nonherm), Err(Error::NonHermitian));
        let neg = DMatrix::from_row_slice(2, 2, &[half, Complex::new(0.9, 0.0), Complex::new(0.9, 0.0), half]);
        assert!(matches!(MixedKState::new(labels, neg), Err(Error::NegativeEigenvalue(_))));
    }
}
