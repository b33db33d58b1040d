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

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("evolution time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("invalid spin vector: {0}")]
    InvalidSpinVector(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("invalid weight matrix: {0}")]
    InvalidWeight(String),
    #[error("coefficient matrix is not Hermitian")]
    NonHermitian,
    #[error("coefficient matrix has eigenvalue {0} below tolerance")]
    NegativeEigenvalue(f64),
    #[error("invalid mixed state: {0}")]
    InvalidState(String),
    #[error("decoherence-free subspace is trivial: noise matrix has full column rank")]
    EmptyDfs,
    #[error("label {0:?} is not in the decoherence-free subspace")]
    NotInDfs(Vec<f64>),
    #[error("strategy labels span several affine blocks")]
    MixedAffineBlocks,
    #[error("strategy is not a superposition of GHZ states")]
    NotGhzForm,
    #[error("strategy is supported on the zero label only")]
    DegenerateStrategy,
    #[error("matrix shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("Fisher information is singular along a weighted direction")]
    SingularQfim,
    #[error("vertex representatives are not mutually orthogonal")]
    NonOrthogonalVertices,
    #[error("signal map restricted to the kernel does not have full row rank")]
    SingularRestrictedSignal,
    #[error("signal directions do not span the parameter space")]
    UnidentifiableSignals,
    #[error("phase {phase} of direction {direction} is outside (-pi/2, pi/2)")]
    PhaseWrap { direction: usize, phase: f64 },
    #[error("improvement step {stage} decreased the K matrix")]
    NotMonotone { stage: &'static str },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
