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

//! Shot-level Monte Carlo of sequential GHZ sensing with local parity readout.
//!
//! A GHZ state on label `k` picks up the relative phase
//! `φ = 2T(αᵀŜk + βᵀN̂k)`; reading out the product of local observables gives
//! parity `+1` with probability `(1 + sin(φ + offset))/2`. Every shot has
//! Fisher information 1 about `φ` at any offset, so a direction probed with
//! `N` shots carries `N · 4T² (Ŝk)(Ŝk)ᵀ` about `α`.
//!
//! Randomness is counter based: the uniform for shot `i` of direction `d` is
//! the `i`-th draw of a ChaCha stream keyed by `(seed, d)`, and noise
//! amplitudes come from a separate stream, so changing the noise strength never
//! shifts the uniforms.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{SensorNetwork, SequentialStrategy, SpinVector};

/// Labels with `‖N̂k‖_∞` below this are treated as exactly noise free.
pub const DFS_TOL: f64 = 1e-12;
const NOISE_STREAM_BIT: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    Off,
    Gaussian,
    Infinite,
}

/// Per-shot fluctuations of the noise amplitudes `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    sigmas: Vec<f64>,
    mode: NoiseMode,
}

impl NoiseModel {
    pub fn new(sigmas: Vec<f64>, mode: NoiseMode) -> Result<Self> {
        if let Some(s) = sigmas.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(Error::InvalidStrategy(format!("noise sigma {s} must be finite and non-negative")));
        }
        Ok(NoiseModel { sigmas, mode })
    }

    pub fn off() -> Self {
        NoiseModel { sigmas: Vec::new(), mode: NoiseMode::Off }
    }

    pub fn gaussian(sigmas: Vec<f64>) -> Result<Self> {
        Self::new(sigmas, NoiseMode::Gaussian)
    }

    pub fn infinite() -> Self {
        NoiseModel { sigmas: Vec::new(), mode: NoiseMode::Infinite }
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }
}

/// One parity measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShotRecord {
    pub direction: usize,
    pub parity: i8,
    pub offset: f64,
}

/// Flip time of every sensor, `t_j = (1 + k_j) T / 2`.
///
/// Flips at `t = 0` or `t = T` do nothing physically (a sign absorbed into the
/// initial state or the readout) and are reported as `None`.
pub fn flip_schedule(k: &SpinVector, time: f64) -> Vec<Option<f64>> {
    k.as_slice()
        .iter()
        .map(|&kj| if (kj.abs() - 1.0).abs() <= 1e-12 { None } else { Some((1.0 + kj) * time / 2.0) })
        .collect()
}

/// Relative phase `2T(αᵀŜk + βᵀN̂k)` between `|k⟩` and `|−k⟩`.
pub fn ghz_phase(network: &SensorNetwork, k: &SpinVector, alpha: &DVector<f64>, beta: &DVector<f64>) -> Result<f64> {
    network.check_label(k)?;
    check_len(alpha.len(), network.signals(), "alpha")?;
    check_len(beta.len(), network.noise_sources(), "beta")?;
    let signal = alpha.dot(&(network.signal() * k.as_vector()));
    let noise = if network.noise_sources() == 0 { 0.0 } else { beta.dot(&(network.noise() * k.as_vector())) };
    Ok(2.0 * network.time() * (signal + noise))
}

fn check_len(got: usize, want: usize, what: &str) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("{what} has {got} entries, expected {want}")));
    }
    Ok(())
}

/// Everything needed to draw parities for one direction.
struct ParitySource {
    phase: f64,
    offset: f64,
    /// `2T N̂k` when noise must be sampled, otherwise `None`.
    noise_coupling: Option<DVector<f64>>,
    noise: Vec<Normal<f64>>,
    fully_dephased: bool,
}

impl ParitySource {
    fn new(
        network: &SensorNetwork,
        k: &SpinVector,
        alpha: &DVector<f64>,
        noise: &NoiseModel,
        offset: f64,
    ) -> Result<Self> {
        network.check_label(k)?;
        check_len(alpha.len(), network.signals(), "alpha")?;
        let zero_beta = DVector::zeros(network.noise_sources());
        let phase = ghz_phase(network, k, alpha, &zero_beta)?;
        let coupling = network.noise() * k.as_vector() * (2.0 * network.time());
        let in_dfs = coupling.is_empty() || coupling.amax() <= DFS_TOL * 2.0 * network.time();
        let mut source = ParitySource { phase, offset, noise_coupling: None, noise: Vec::new(), fully_dephased: false };
        match noise.mode {
            NoiseMode::Off => {}
            NoiseMode::Infinite => source.fully_dephased = !in_dfs,
            NoiseMode::Gaussian => {
                check_len(noise.sigmas.len(), network.noise_sources(), "noise sigmas")?;
                if !in_dfs {
                    source.noise =
                        noise.sigmas.iter().map(|s| Normal::new(0.0, *s).expect("sigma validated")).collect();
                    source.noise_coupling = Some(coupling);
                }
            }
        }
        Ok(source)
    }

    /// Calls `emit` with the parity of each of `shots` consecutive shots.
    fn draw(&self, shots: usize, seed: u64, stream: u64, mut emit: impl FnMut(i8)) {
        let mut uniforms = ChaCha8Rng::seed_from_u64(seed);
        uniforms.set_stream(stream);
        let fixed_p = if self.fully_dephased {
            Some(0.5)
        } else if self.noise_coupling.is_none() {
            Some(0.5 * (1.0 + (self.phase + self.offset).sin()))
        } else {
            None
        };
        match (fixed_p, &self.noise_coupling) {
            (Some(p), _) => {
                for _ in 0..shots {
                    let u: f64 = uniforms.random();
                    emit(if u < p { 1 } else { -1 });
                }
            }
            (None, Some(coupling)) => {
                let mut betas = ChaCha8Rng::seed_from_u64(seed);
                betas.set_stream(stream | NOISE_STREAM_BIT);
                for _ in 0..shots {
                    let jitter: f64 =
                        self.noise.iter().zip(coupling.iter()).map(|(dist, c)| dist.sample(&mut betas) * c).sum();
                    let p = 0.5 * (1.0 + (self.phase + jitter + self.offset).sin());
                    let u: f64 = uniforms.random();
                    emit(if u < p { 1 } else { -1 });
                }
            }
            (None, None) => unreachable!("fixed probability covers the noiseless case"),
        }
    }
}

/// Draws `shots` parity outcomes for the GHZ state on `k` read out at
/// `offset`. The stream is fully determined by `(seed, direction)`.
#[allow(clippy::too_many_arguments)]
pub fn sample_shots(
    network: &SensorNetwork,
    k: &SpinVector,
    alpha: &DVector<f64>,
    noise: &NoiseModel,
    offset: f64,
    shots: usize,
    seed: u64,
    direction: usize,
) -> Result<Vec<ShotRecord>> {
    if shots == 0 {
        return Err(Error::InvalidStrategy("at least one shot is required".into()));
    }
    let source = ParitySource::new(network, k, alpha, noise, offset)?;
    let mut out = Vec::with_capacity(shots);
    source.draw(shots, seed, direction as u64, |parity| out.push(ShotRecord { direction, parity, offset }));
    Ok(out)
}

/// Number of `+1` outcomes among `shots` draws, identical to counting the
/// records of [`sample_shots`] with the same arguments.
#[allow(clippy::too_many_arguments)]
pub fn count_positive(
    network: &SensorNetwork,
    k: &SpinVector,
    alpha: &DVector<f64>,
    noise: &NoiseModel,
    offset: f64,
    shots: usize,
    seed: u64,
    direction: usize,
) -> Result<usize> {
    let source = ParitySource::new(network, k, alpha, noise, offset)?;
    let mut plus = 0;
    source.draw(shots, seed, direction as u64, |parity| plus += usize::from(parity > 0));
    Ok(plus)
}

/// Maximum-likelihood phase from parity counts at offsets 0 and π/2.
///
/// Starts at the two-quadrature arctangent and refines with Fisher scoring;
/// each shot carries unit information about the phase.
pub fn estimate_phase(sin_plus: usize, sin_shots: usize, cos_plus: usize, cos_shots: usize) -> f64 {
    let mean = |plus: usize, total: usize| if total == 0 { 0.0 } else { 2.0 * plus as f64 / total as f64 - 1.0 };
    let (sp, sm) = (sin_plus as f64, (sin_shots - sin_plus) as f64);
    let (cp, cm) = (cos_plus as f64, (cos_shots - cos_plus) as f64);
    let info = (sin_shots + cos_shots) as f64;
    let mut phi = mean(sin_plus, sin_shots).atan2(mean(cos_plus, cos_shots));
    let term = |count: f64, num: f64, den: f64| if count == 0.0 { 0.0 } else { count * num / den.max(1e-300) };
    for _ in 0..100 {
        let (s, c) = phi.sin_cos();
        let score = term(sp, c, 1.0 + s) - term(sm, c, 1.0 - s) - term(cp, s, 1.0 + c) + term(cm, s, 1.0 - c);
        let step = (score / info).clamp(-0.1, 0.1);
        phi += step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    phi
}

/// Shot budget and seeding of [`estimate_parameters`].
#[derive(Debug, Clone, Copy)]
pub struct EstimationOptions {
    /// Shots per repetition are `shots_per_direction × directions`, allocated ∝ rates.
    pub shots_per_direction: usize,
    /// Independent repetitions used for the empirical covariance.
    pub repetitions: usize,
    pub seed: u64,
}

/// Estimates, their spread over repetitions and the Cramér–Rao prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    /// Mean of the per-repetition estimates.
    pub estimates: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// `(Σ_i N_i 4T² (Ŝk_i)(Ŝk_i)ᵀ)⁻¹ ≈ 𝓕⁻¹ / shots_per_repetition`.
    pub crb: DMatrix<f64>,
    pub shots_per_repetition: usize,
    pub repetitions: usize,
    /// Shots given to each strategy term per repetition.
    pub allocation: Vec<usize>,
    /// Per-repetition estimates.
    pub samples: Vec<DVector<f64>>,
}

/// Largest-remainder rounding of `rates × total`.
pub fn allocate_shots(rates: &[f64], total: usize) -> Vec<usize> {
    let exact: Vec<f64> = rates.iter().map(|r| r * total as f64).collect();
    let mut alloc: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..rates.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        alloc[i] += 1;
    }
    alloc
}

fn repetition_seed(seed: u64, repetition: usize, quadrature: u64) -> u64 {
    seed ^ (repetition as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ quadrature.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Runs the sequential protocol `repetitions` times and estimates `α` from
/// the parity data by weighted least squares over the per-direction phases.
pub fn estimate_parameters(
    network: &SensorNetwork,
    strategy: &SequentialStrategy,
    alpha_true: &DVector<f64>,
    noise: &NoiseModel,
    options: EstimationOptions,
) -> Result<EstimationReport> {
    check_len(alpha_true.len(), network.signals(), "alpha")?;
    if options.repetitions == 0 || options.shots_per_direction == 0 {
        return Err(Error::InvalidStrategy("shots and repetitions must be positive".into()));
    }
    let terms = strategy.terms();
    for (k, _) in terms {
        network.check_label(k)?;
    }
    let rates: Vec<f64> = terms.iter().map(|(_, r)| *r).collect();
    let allocation = allocate_shots(&rates, options.shots_per_direction * terms.len());
    let two_t = 2.0 * network.time();
    let s = network.signals();

    // Directions that carry information: enough shots and, under infinite
    // noise, inside the DFS.
    let mut usable = Vec::new();
    for (i, (k, _)) in terms.iter().enumerate() {
        let coupling = network.noise() * k.as_vector();
        let dephased = noise.mode == NoiseMode::Infinite && !coupling.is_empty() && coupling.amax() > DFS_TOL;
        if allocation[i] >= 2 && !dephased {
            usable.push(i);
        }
    }
    let gradients: Vec<DVector<f64>> = terms.iter().map(|(k, _)| network.signal() * k.as_vector() * two_t).collect();
    let information =
        usable.iter().fold(DMatrix::zeros(s, s), |acc, &i| acc + linalg::outer(&gradients[i]) * allocation[i] as f64);
    let crb = linalg::spd_inverse(&information).ok_or(Error::UnidentifiableSignals)?;
    for &i in &usable {
        let phase = gradients[i].dot(alpha_true);
        if phase.abs() >= FRAC_PI_2 {
            return Err(Error::PhaseWrap { direction: i, phase });
        }
    }

    let sources = usable
        .iter()
        .map(|&i| {
            Ok((
                ParitySource::new(network, &terms[i].0, alpha_true, noise, 0.0)?,
                ParitySource::new(network, &terms[i].0, alpha_true, noise, FRAC_PI_2)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let samples: Vec<DVector<f64>> = (0..options.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rhs = DVector::zeros(s);
            for (&i, (sin_src, cos_src)) in usable.iter().zip(&sources) {
                let n_sin = allocation[i] / 2;
                let n_cos = allocation[i] - n_sin;
                let mut sin_plus = 0;
                sin_src
                    .draw(n_sin, repetition_seed(options.seed, rep, 0), i as u64, |p| sin_plus += usize::from(p > 0));
                let mut cos_plus = 0;
                cos_src
                    .draw(n_cos, repetition_seed(options.seed, rep, 1), i as u64, |p| cos_plus += usize::from(p > 0));
                let phase = estimate_phase(sin_plus, n_sin, cos_plus, n_cos);
                rhs += &gradients[i] * (allocation[i] as f64 * phase);
            }
            &crb * rhs
        })
        .collect();

    let reps = samples.len() as f64;
    let mean = samples.iter().fold(DVector::zeros(s), |acc, x| acc + x) / reps;
    let covariance = if samples.len() > 1 {
        samples.iter().fold(DMatrix::zeros(s, s), |acc, x| acc + linalg::outer(&(x - &mean))) / (reps - 1.0)
    } else {
        DMatrix::zeros(s, s)
    };
    Ok(EstimationReport {
        estimates: mean,
        covariance,
        crb,
        shots_per_repetition: allocation.iter().sum(),
        repetitions: options.repetitions,
        allocation,
        samples,
    })
}
