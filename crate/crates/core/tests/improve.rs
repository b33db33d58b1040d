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

mod common;

use common::*;
use dfs_metrology::dfs::{enumerate_vertices, DEFAULT_RANK_TOL};
use dfs_metrology::improve::{
    certify_vertex_sequential, improve_pipeline_with, is_extremal_trace_in, lift_chain_tolerance, lift_to_vertices,
    sequentialize, symmetrize, StageLabel,
};
use dfs_metrology::model::{PureStrategy, SequentialStrategy};
use dfs_metrology::qfim::{k_matrix_pure, k_matrix_sequential, psd_compare, qfim_from_k, PsdOrder};
use dfs_metrology::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_only_strategy_is_degenerate() {
    let psi = PureStrategy::new(vec![(sv(&[0.0, 0.0]), c(1.0))]).unwrap();
    assert_eq!(symmetrize(&psi).unwrap_err(), Error::DegenerateStrategy);
}

#[test]
fn zero_label_is_dropped() {
    let a = c(1.0 / 3f64.sqrt());
    let psi = PureStrategy::new(vec![(sv(&[0.0, 0.0]), a), (sv(&[1.0, 1.0]), a), (sv(&[-1.0, -1.0]), a)]).unwrap();
    let sym = symmetrize(&psi).unwrap();
    assert!(sym.labels().all(|k| !k.is_zero(1e-12)));
    assert_eq!(sequentialize(&sym, 1e-9).unwrap().terms().len(), 1);
}

#[test]
fn off_dfs_input_is_rejected() {
    let net = load("example1.json");
    let poly = enumerate_vertices(&net, DEFAULT_RANK_TOL).unwrap();
    let psi = PureStrategy::ghz(sv(&[1.0, 0.0, 0.0, 0.0])).unwrap();
    assert!(matches!(improve_pipeline_with(&psi, &poly, 1e-9), Err(Error::NotInDfs(_))));
}

#[test]
fn non_ghz_input_to_sequentialize() {
    let psi = pure_from(vec![vec![1.0, 0.5], vec![-0.5, 1.0]], vec![c(0.6), c(0.8)]);
    assert_eq!(sequentialize(&psi, 1e-9).unwrap_err(), Error::NotGhzForm);
}

#[test]
fn rounded_labels_widen_lift_tolerance() {
    let net = load("example2.json");
    let poly = enumerate_vertices(&net, DEFAULT_RANK_TOL).unwrap();
    let seq = SequentialStrategy::new(vec![
        (dfs_metrology::SpinVector::new(vec![0.25, 1.0, 0.53, 0.36]).unwrap(), 0.46),
        (dfs_metrology::SpinVector::new(vec![-1.0, -0.10, 0.82, -0.23]).unwrap(), 0.54),
    ])
    .unwrap();
    let widened = lift_chain_tolerance(&seq, &poly, 0.01).unwrap();
    assert!(widened > 1e-9 && widened < 0.1, "{widened}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(80))]

    #[test]
    fn pipeline_is_monotone_for_every_signal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=6);
        let m = rng.random_range(0..n);
        let s = rng.random_range(1..=3);
        let net = random_network(&mut rng, s, m, n);
        let poly = enumerate_vertices(&net, DEFAULT_RANK_TOL).unwrap();
        let len = rng.random_range(1..=5);
        let labels: Vec<Vec<f64>> = (0..len).map(|_| random_dfs_label(&mut rng, poly.kernel_basis())).collect();
        let psi = pure_from(labels, random_amplitudes(&mut rng, len));
        let trace = improve_pipeline_with(&psi, &poly, 1e-9).unwrap();
        prop_assert_eq!(trace.stages.len(), 4);
        prop_assert_eq!(trace.stages[3].label, StageLabel::VertexLifted);
        for pair in trace.stages.windows(2) {
            let f0 = qfim_from_k(&net, &pair[0].k_matrix).unwrap();
            let f1 = qfim_from_k(&net, &pair[1].k_matrix).unwrap();
            let order = psd_compare(f1.matrix(), f0.matrix(), 1e-10).unwrap();
            prop_assert!(matches!(order, PsdOrder::Greater | PsdOrder::Equal), "{:?}", order);
        }
        let fin = trace.final_strategy();
        prop_assert!(certify_vertex_sequential(fin, &poly, 1e-9));
        // Idempotent on vertex strategies.
        let again = lift_to_vertices(fin, &poly, 1e-9).unwrap();
        prop_assert!((k_matrix_sequential(&again).matrix() - k_matrix_sequential(fin).matrix()).amax() <= 1e-10);
    }

    #[test]
    fn symmetrize_gain_is_mean_outer_product(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=6);
        let len = rng.random_range(1..=6);
        let labels: Vec<Vec<f64>> = (0..len).map(|_| random_label(&mut rng, n)).collect();
        let psi = pure_from(labels, random_amplitudes(&mut rng, len));
        let mean = psi.mean_label();
        let gain = k_matrix_pure(&symmetrize(&psi).unwrap()).matrix() - k_matrix_pure(&psi).matrix();
        prop_assert!((gain - &mean * mean.transpose()).amax() <= 1e-12);
    }

    #[test]
    fn sequentialize_preserves_k(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=6);
        let len = rng.random_range(1..=5);
        let labels: Vec<Vec<f64>> = (0..len).map(|_| random_label(&mut rng, n)).collect();
        let sym = symmetrize(&pure_from(labels, random_amplitudes(&mut rng, len))).unwrap();
        let seq = sequentialize(&sym, 1e-9).unwrap();
        prop_assert!((k_matrix_sequential(&seq).matrix() - k_matrix_pure(&sym).matrix()).amax() <= 1e-12);
    }

    #[test]
    fn vertex_strategies_reach_maximal_trace_on_the_cube(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=5);
        let net = random_network(&mut rng, 1, 0, n);
        let poly = enumerate_vertices(&net, DEFAULT_RANK_TOL).unwrap();
        let reps = poly.representatives();
        let seq = SequentialStrategy::new(reps.iter().cloned().zip(random_rates(&mut rng, reps.len())).collect()).unwrap();
        let k = k_matrix_sequential(&seq);
        prop_assert!(is_extremal_trace_in(&k, &poly, 1e-9));
        prop_assert!((k.trace() - n as f64).abs() < 1e-12);
        let half = k.matrix() * 0.5;
        prop_assert_eq!(psd_compare(&half, k.matrix(), 1e-10).unwrap(), PsdOrder::Less);
    }
}
