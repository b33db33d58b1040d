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

//! Command-line front end: argument parsing, command drivers and report
//! rendering. The `dfs-metrology` binary is a thin wrapper around [`run`].
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | any other failure |
//! | 2 | unreadable or malformed input, bad arguments |
//! | 3 | the decoherence-free subspace is trivial |
//! | 4 | dimension mismatch between inputs |
//! | 5 | a strategy label lies outside the decoherence-free subspace |
//! | 6 | the signals are not identifiable from the chosen directions |
//! | 7 | a true phase leaves (−π/2, π/2) during simulation |
//!
//! CSV columns:
//!
//! * `dfs`: `index,k_1..k_n`, one row per vertex.
//! * `qfim`: `quantity,row,col,value` with quantities `k`, `qfim`,
//!   `k_dephased`, `qfim_dephased`.
//! * `improve`: `stage,term,weight,k_1..k_n`; the weight is `|c|²` for pure
//!   stages and the rate for sequential ones.
//! * `optimize`: `vertex,rate,k_1..k_n`.
//! * `simulate`: `param,truth,estimate,variance,crb,ratio`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::dfs::{enumerate_vertices, DfsPolytope, DEFAULT_RANK_TOL};
use crate::error::Error;
use crate::improve::{self, ImprovementTrace, StageStrategy};
use crate::io::{self, rows, LoadError, Strategy, StrategyFile};
use crate::model::{PureStrategy, SensorNetwork, SequentialStrategy, WeightMatrix};
use crate::optimize::{optimize_auto, SolverOptions, SolverPath};
use crate::qfim::{self, k_matrix_mixed, k_matrix_pure, k_matrix_sequential, qfim_from_k, KMatrix, PsdOrder};
use crate::simulate::{estimate_parameters, EstimationOptions, NoiseMode, NoiseModel};
use crate::DEFAULT_TOL;

/// Vertex enumeration above this many sensors prints a warning.
pub const WARN_SENSORS: usize = 14;

#[derive(Debug, Parser)]
#[command(name = "dfs-metrology", version, about = "Noise-insensitive multiparameter sensing strategies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel basis and vertices of the decoherence-free subspace.
    Dfs(RunConfig),
    /// K matrix, QFIM and extremality certificates of a strategy.
    Qfim(RunConfig),
    /// Symmetrize, sequentialize and lift a strategy to polytope vertices.
    Improve(RunConfig),
    /// Optimal vertex preparation rates for tr(W F⁻¹).
    Optimize(RunConfig),
    /// Monte Carlo parity readout and parameter estimation.
    Simulate(SimulateConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseModeArg {
    Off,
    Gaussian,
    Infinite,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    #[arg(long, value_name = "PATH")]
    pub network: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub strategy: Option<PathBuf>,
    /// Weight matrix of the figure of merit; identity when omitted.
    #[arg(long, value_name = "PATH")]
    pub weights: Option<PathBuf>,
    /// Tolerance for strategy validation and DFS membership.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Relative singular-value cutoff for the rank of the noise matrix.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub output: OutputFormat,
}

impl RunConfig {
    pub fn new(network: impl Into<PathBuf>) -> Self {
        RunConfig {
            network: network.into(),
            strategy: None,
            weights: None,
            tol: DEFAULT_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            output: OutputFormat::Text,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateConfig {
    #[command(flatten)]
    pub run: RunConfig,
    /// True signal amplitudes, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub alpha: Vec<f64>,
    /// Shots per strategy direction and repetition.
    #[arg(long, default_value_t = 10_000)]
    pub shots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub repetitions: usize,
    /// Per-source noise standard deviations; a single value applies to all.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<f64>,
    #[arg(long, value_enum, default_value_t = NoiseModeArg::Off)]
    pub noise_mode: NoiseModeArg,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Domain(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Load(LoadError::Invalid { source, .. }) => match source {
                Error::DimensionMismatch(_) => 4,
                _ => 2,
            },
            CliError::Load(_) | CliError::Usage(_) => 2,
            CliError::Domain(e) => match e {
                Error::EmptyDfs => 3,
                Error::DimensionMismatch(_) | Error::ShapeMismatch(_) => 4,
                Error::NotInDfs(_) => 5,
                Error::UnidentifiableSignals => 6,
                Error::PhaseWrap { .. } => 7,
                _ => 1,
            },
        }
    }
}

type CmdResult<T> = Result<T, CliError>;

/// Parses `args` (including the program name), runs the command and writes the
/// rendered report to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 2;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    let rendered = match &cli.command {
        Command::Dfs(c) => cmd_dfs(c, err).map(|r| render(&r, c.output)),
        Command::Qfim(c) => cmd_qfim(c, err).map(|r| render(&r, c.output)),
        Command::Improve(c) => cmd_improve(c, err).map(|r| render(&r, c.output)),
        Command::Optimize(c) => cmd_optimize(c, err).map(|r| render(&r, c.output)),
        Command::Simulate(c) => cmd_simulate(c, err).map(|r| render(&r, c.run.output)),
    };
    match rendered {
        Ok(text) => {
            if out.write_all(text.as_bytes()).is_err() {
                return 1;
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// A command result that can be rendered in every output format.
pub trait Report: Serialize {
    fn csv(&self) -> String;
    fn text(&self) -> String;
}

pub fn render<R: Report>(report: &R, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        OutputFormat::Csv => report.csv(),
        OutputFormat::Text => report.text(),
    }
}

fn load_polytope(network: &SensorNetwork, config: &RunConfig, err: &mut dyn Write) -> CmdResult<DfsPolytope> {
    if network.sensors() > WARN_SENSORS {
        let _ = writeln!(
            err,
            "warning: {} sensors; vertex enumeration grows combinatorially beyond {WARN_SENSORS}",
            network.sensors()
        );
    }
    Ok(enumerate_vertices(network, config.rank_tol)?)
}

fn load_strategy(config: &RunConfig, command: &str) -> CmdResult<Strategy> {
    let path = config.strategy.as_ref().ok_or_else(|| CliError::Usage(format!("{command} requires --strategy")))?;
    Ok(io::load_strategy(path, config.tol)?)
}

fn check_sensors(network: &SensorNetwork, n: usize) -> CmdResult<()> {
    if n != network.sensors() {
        return Err(Error::DimensionMismatch(format!(
            "strategy labels have {n} entries, network has {} sensors",
            network.sensors()
        ))
        .into());
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct DfsReport {
    pub sensors: usize,
    pub dimension: usize,
    pub kernel_basis: Vec<Vec<f64>>,
    pub vertices: Vec<Vec<f64>>,
    /// One vertex of each `±v` pair.
    pub representatives: Vec<Vec<f64>>,
}

pub fn cmd_dfs(config: &RunConfig, err: &mut dyn Write) -> CmdResult<DfsReport> {
    let network = io::load_network(&config.network)?;
    let poly = load_polytope(&network, config, err)?;
    Ok(DfsReport {
        sensors: network.sensors(),
        dimension: poly.dimension(),
        kernel_basis: rows(poly.kernel_basis()),
        vertices: poly.vertices().iter().map(|v| v.to_vec()).collect(),
        representatives: poly.representatives().iter().map(|v| v.to_vec()).collect(),
    })
}

impl Report for DfsReport {
    fn csv(&self) -> String {
        let mut s = header("index", self.sensors, &[]);
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "{i},{}", join(v));
        }
        s
    }

    fn text(&self) -> String {
        let mut s = format!(
            "sensors: {}\nDFS dimension: {}\nvertices ({}):\n",
            self.sensors,
            self.dimension,
            self.vertices.len()
        );
        for v in &self.vertices {
            let _ = writeln!(s, "  {}", vector_text(v));
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QfimReport {
    pub strategy_type: &'static str,
    pub time: f64,
    pub k_matrix: Vec<Vec<f64>>,
    pub qfim: Vec<Vec<f64>>,
    pub trace: f64,
    /// Largest trace attainable in the polytope, if it is non-trivial.
    pub max_trace: Option<f64>,
    pub extremal_by_trace: bool,
    /// Every label is a polytope vertex (sequential strategies only).
    pub vertex_certificate: bool,
    /// K matrix after infinitely strong noise removes coherences between
    /// different noise blocks.
    pub k_matrix_dephased: Vec<Vec<f64>>,
    pub qfim_dephased: Vec<Vec<f64>>,
}

/// K matrix of `strategy` after full dephasing; sequential strategies dephase
/// each GHZ state separately.
fn dephased_k(strategy: &Strategy, network: &SensorNetwork, tol: f64) -> CmdResult<KMatrix> {
    match strategy {
        Strategy::Pure(p) => Ok(k_matrix_mixed(&qfim::dephase(p, network, tol)?, tol)?),
        Strategy::Sequential(s) => {
            let n = network.sensors();
            let mut total = DMatrix::zeros(n, n);
            for (k, r) in s.terms() {
                let ghz = PureStrategy::ghz(k.clone())?;
                total += k_matrix_mixed(&qfim::dephase(&ghz, network, tol)?, tol)?.matrix() * *r;
            }
            Ok(KMatrix::new(total, tol.max(1e-9))?)
        }
    }
}

pub fn cmd_qfim(config: &RunConfig, err: &mut dyn Write) -> CmdResult<QfimReport> {
    let network = io::load_network(&config.network)?;
    let strategy = load_strategy(config, "qfim")?;
    let (k, n, kind) = match &strategy {
        Strategy::Pure(p) => (k_matrix_pure(p), p.sensors(), "pure"),
        Strategy::Sequential(s) => (k_matrix_sequential(s), s.sensors(), "sequential"),
    };
    check_sensors(&network, n)?;
    let f = qfim_from_k(&network, &k)?;
    let k_deph = dephased_k(&strategy, &network, config.tol)?;
    let f_deph = qfim_from_k(&network, &k_deph)?;
    let poly = match load_polytope(&network, config, err) {
        Ok(p) => Some(p),
        Err(CliError::Domain(Error::EmptyDfs)) => None,
        Err(e) => return Err(e),
    };
    let max_trace = poly.as_ref().map(DfsPolytope::max_vertex_norm2);
    let extremal_by_trace = poly.as_ref().is_some_and(|p| improve::is_extremal_trace_in(&k, p, config.tol.max(1e-9)));
    let vertex_certificate = match (&strategy, &poly) {
        (Strategy::Sequential(s), Some(p)) => improve::certify_vertex_sequential(s, p, config.tol.max(1e-8)),
        _ => false,
    };
    Ok(QfimReport {
        strategy_type: kind,
        time: network.time(),
        trace: k.trace(),
        k_matrix: rows(k.matrix()),
        qfim: rows(f.matrix()),
        max_trace,
        extremal_by_trace,
        vertex_certificate,
        k_matrix_dephased: rows(k_deph.matrix()),
        qfim_dephased: rows(f_deph.matrix()),
    })
}

impl Report for QfimReport {
    fn csv(&self) -> String {
        let mut s = String::from("quantity,row,col,value\n");
        for (name, m) in [
            ("k", &self.k_matrix),
            ("qfim", &self.qfim),
            ("k_dephased", &self.k_matrix_dephased),
            ("qfim_dephased", &self.qfim_dephased),
        ] {
            for (i, row) in m.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    let _ = writeln!(s, "{name},{i},{j},{x}");
                }
            }
        }
        s
    }

    fn text(&self) -> String {
        let mut s = format!("{} strategy, T = {}\nK:\n{}", self.strategy_type, self.time, matrix_text(&self.k_matrix));
        let _ = write!(s, "QFIM:\n{}", matrix_text(&self.qfim));
        let _ = write!(s, "QFIM after dephasing:\n{}", matrix_text(&self.qfim_dephased));
        let _ = writeln!(s, "trace(K) = {:.6}", self.trace);
        if let Some(max) = self.max_trace {
            let _ = writeln!(s, "maximal trace in DFS = {max:.6}");
        }
        let _ = writeln!(s, "extremal by trace: {}", self.extremal_by_trace);
        let _ = writeln!(s, "vertex-sequential: {}", self.vertex_certificate);
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub label: &'static str,
    pub strategy: StrategyFile,
    pub k_matrix: Vec<Vec<f64>>,
    pub trace: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImproveReport {
    pub sensors: usize,
    pub stages: Vec<StageReport>,
    /// Order of each stage's K relative to the previous one.
    pub verdicts: Vec<PsdOrder>,
    pub extremal_by_trace: bool,
    /// The final vertex strategy, readable by `optimize` and `simulate`.
    pub strategy: StrategyFile,
}

fn stage_file(strategy: &StageStrategy) -> StrategyFile {
    match strategy {
        StageStrategy::Pure(p) => StrategyFile::from_pure(p),
        StageStrategy::Sequential(s) => StrategyFile::from_sequential(s),
    }
}

pub fn cmd_improve(config: &RunConfig, err: &mut dyn Write) -> CmdResult<ImproveReport> {
    let network = io::load_network(&config.network)?;
    let strategy = load_strategy(config, "improve")?;
    let n = match &strategy {
        Strategy::Pure(p) => p.sensors(),
        Strategy::Sequential(s) => s.sensors(),
    };
    check_sensors(&network, n)?;
    let poly = load_polytope(&network, config, err)?;
    let trace = match &strategy {
        Strategy::Pure(p) => improve::improve_pipeline_with(p, &poly, config.tol)?,
        Strategy::Sequential(s) => lift_only(s, &poly, config.tol)?,
    };
    Ok(ImproveReport {
        sensors: n,
        stages: trace
            .stages
            .iter()
            .map(|st| StageReport {
                label: st.label.as_str(),
                strategy: stage_file(&st.strategy),
                k_matrix: rows(st.k_matrix.matrix()),
                trace: st.k_matrix.trace(),
            })
            .collect(),
        verdicts: trace.verdicts.clone(),
        extremal_by_trace: improve::is_extremal_trace_in(trace.final_k(), &poly, config.tol.max(1e-9)),
        strategy: StrategyFile::from_sequential(trace.final_strategy()),
    })
}

/// A sequential input only needs the vertex lift.
fn lift_only(strategy: &SequentialStrategy, poly: &DfsPolytope, tol: f64) -> CmdResult<ImprovementTrace> {
    for (k, _) in strategy.terms() {
        if !crate::dfs::contains(poly, k, tol)? {
            return Err(Error::NotInDfs(k.to_vec()).into());
        }
    }
    let lifted = improve::lift_to_vertices(strategy, poly, tol)?;
    let (k_in, k_out) = (k_matrix_sequential(strategy), k_matrix_sequential(&lifted));
    let chain_tol = improve::lift_chain_tolerance(strategy, poly, tol)?;
    let verdict = qfim::psd_compare(k_out.matrix(), k_in.matrix(), chain_tol)?;
    if !matches!(verdict, PsdOrder::Greater | PsdOrder::Equal) {
        return Err(Error::NotMonotone { stage: "vertex_lifted" }.into());
    }
    Ok(ImprovementTrace {
        stages: vec![
            improve::Stage {
                label: improve::StageLabel::Input,
                strategy: StageStrategy::Sequential(strategy.clone()),
                k_matrix: k_in,
            },
            improve::Stage {
                label: improve::StageLabel::VertexLifted,
                strategy: StageStrategy::Sequential(lifted),
                k_matrix: k_out,
            },
        ],
        verdicts: vec![verdict],
    })
}

impl Report for ImproveReport {
    fn csv(&self) -> String {
        let mut s = header("stage,term,weight", self.sensors, &[]);
        for st in &self.stages {
            for (i, (k, w)) in file_terms(&st.strategy).into_iter().enumerate() {
                let _ = writeln!(s, "{},{i},{w},{}", st.label, join(&k));
            }
        }
        s
    }

    fn text(&self) -> String {
        let mut s = String::new();
        for (i, st) in self.stages.iter().enumerate() {
            let verdict = if i == 0 { String::new() } else { format!("  [{:?}]", self.verdicts[i - 1]) };
            let _ = writeln!(s, "{} (trace {:.6}){verdict}", st.label, st.trace);
            for (k, w) in file_terms(&st.strategy) {
                let _ = writeln!(s, "  {w:.6}  {}", vector_text(&k));
            }
        }
        let _ = writeln!(s, "extremal by trace: {}", self.extremal_by_trace);
        s
    }
}

fn file_terms(file: &StrategyFile) -> Vec<(Vec<f64>, f64)> {
    match file {
        StrategyFile::Pure { terms } => terms.iter().map(|t| (t.k.clone(), t.re * t.re + t.im * t.im)).collect(),
        StrategyFile::Sequential { terms } => terms.iter().map(|t| (t.k.clone(), t.rate)).collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateEntry {
    pub vertex: usize,
    pub k: Vec<f64>,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub path: SolverPath,
    pub rates: Vec<RateEntry>,
    /// `tr(W F⁻¹)` with `F = 4T² Ŝ K Ŝᵀ`.
    pub objective: f64,
    /// `tr(W (Ŝ K Ŝᵀ)⁻¹)`, independent of the evolution time.
    pub trace_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub qfim: Vec<Vec<f64>>,
    /// The optimal vertex strategy, readable by `qfim` and `simulate`.
    pub strategy: StrategyFile,
}

fn load_weight(config: &RunConfig, network: &SensorNetwork) -> CmdResult<WeightMatrix> {
    let w = match &config.weights {
        Some(path) => io::load_weights(path)?,
        None => WeightMatrix::identity(network.signals()),
    };
    if w.dim() != network.signals() {
        return Err(Error::DimensionMismatch(format!(
            "weight matrix is {0}x{0}, network has {1} signals",
            w.dim(),
            network.signals()
        ))
        .into());
    }
    Ok(w)
}

fn optimal_strategy(
    network: &SensorNetwork,
    config: &RunConfig,
    err: &mut dyn Write,
) -> CmdResult<(DfsPolytope, crate::optimize::RateSolution)> {
    let poly = load_polytope(network, config, err)?;
    let weight = load_weight(config, network)?;
    let sol = optimize_auto(&poly, network, &weight, SolverOptions::default())?;
    if !sol.converged {
        let _ = writeln!(err, "warning: rate optimization stopped after {} iterations", sol.iterations);
    }
    Ok((poly, sol))
}

pub fn cmd_optimize(config: &RunConfig, err: &mut dyn Write) -> CmdResult<OptimizeReport> {
    let network = io::load_network(&config.network)?;
    let (poly, sol) = optimal_strategy(&network, config, err)?;
    let strategy = sol.to_strategy(&poly)?;
    let f = qfim_from_k(&network, &k_matrix_sequential(&strategy))?;
    Ok(OptimizeReport {
        path: sol.path,
        rates: sol
            .rates
            .iter()
            .map(|(i, r)| RateEntry { vertex: *i, k: poly.vertices()[*i].to_vec(), rate: *r })
            .collect(),
        objective: sol.objective,
        trace_objective: sol.trace_objective,
        iterations: sol.iterations,
        converged: sol.converged,
        qfim: rows(f.matrix()),
        strategy: StrategyFile::from_sequential(&strategy),
    })
}

impl Report for OptimizeReport {
    fn csv(&self) -> String {
        let n = self.rates.first().map_or(0, |r| r.k.len());
        let mut s = header("vertex,rate", n, &[]);
        for r in &self.rates {
            let _ = writeln!(s, "{},{},{}", r.vertex, r.rate, join(&r.k));
        }
        s
    }

    fn text(&self) -> String {
        let mut s = format!("solver: {:?}\n", self.path);
        for r in &self.rates {
            let _ = writeln!(s, "  {:.6}  {}", r.rate, vector_text(&r.k));
        }
        let _ = writeln!(s, "tr(W F^-1) = {:.9}", self.objective);
        let _ = writeln!(s, "tr(W (S K S^T)^-1) = {:.9}", self.trace_objective);
        let _ = writeln!(s, "iterations: {}, converged: {}", self.iterations, self.converged);
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub alpha_true: Vec<f64>,
    pub estimates: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub crb: Vec<Vec<f64>>,
    /// `covariance_ii / crb_ii`.
    pub variance_ratio: Vec<f64>,
    pub shots_per_repetition: usize,
    pub repetitions: usize,
    /// Shots per strategy term and repetition.
    pub allocation: Vec<usize>,
    pub seed: u64,
    pub noise_mode: NoiseMode,
    pub strategy: StrategyFile,
}

fn noise_model(config: &SimulateConfig, m: usize) -> CmdResult<NoiseModel> {
    match config.noise_mode {
        NoiseModeArg::Off => Ok(NoiseModel::off()),
        NoiseModeArg::Infinite => Ok(NoiseModel::infinite()),
        NoiseModeArg::Gaussian => {
            let sigmas = match config.sigma.as_slice() {
                [] => return Err(CliError::Usage("--noise-mode gaussian requires --sigma".into())),
                [s] => vec![*s; m],
                many => many.to_vec(),
            };
            Ok(NoiseModel::gaussian(sigmas)?)
        }
    }
}

pub fn cmd_simulate(config: &SimulateConfig, err: &mut dyn Write) -> CmdResult<SimulateReport> {
    let run = &config.run;
    let network = io::load_network(&run.network)?;
    let strategy = match &run.strategy {
        Some(_) => match load_strategy(run, "simulate")? {
            Strategy::Sequential(s) => s,
            Strategy::Pure(p) => improve::sequentialize(&p, run.tol)?,
        },
        None => {
            let (poly, sol) = optimal_strategy(&network, run, err)?;
            sol.to_strategy(&poly)?
        }
    };
    check_sensors(&network, strategy.sensors())?;
    let alpha = DVector::from_vec(config.alpha.clone());
    let noise = noise_model(config, network.noise_sources())?;
    let options =
        EstimationOptions { shots_per_direction: config.shots, repetitions: config.repetitions, seed: config.seed };
    let report = estimate_parameters(&network, &strategy, &alpha, &noise, options)?;
    let variance_ratio = (0..network.signals()).map(|i| report.covariance[(i, i)] / report.crb[(i, i)]).collect();
    Ok(SimulateReport {
        alpha_true: config.alpha.clone(),
        estimates: report.estimates.iter().copied().collect(),
        covariance: rows(&report.covariance),
        crb: rows(&report.crb),
        variance_ratio,
        shots_per_repetition: report.shots_per_repetition,
        repetitions: report.repetitions,
        allocation: report.allocation,
        seed: config.seed,
        noise_mode: noise.mode(),
        strategy: StrategyFile::from_sequential(&strategy),
    })
}

impl Report for SimulateReport {
    fn csv(&self) -> String {
        let mut s = String::from("param,truth,estimate,variance,crb,ratio\n");
        for i in 0..self.estimates.len() {
            let _ = writeln!(
                s,
                "{i},{},{},{},{},{}",
                self.alpha_true[i], self.estimates[i], self.covariance[i][i], self.crb[i][i], self.variance_ratio[i]
            );
        }
        s
    }

    fn text(&self) -> String {
        let mut s = format!(
            "{} repetitions of {} shots, noise {:?}, seed {}\n",
            self.repetitions, self.shots_per_repetition, self.noise_mode, self.seed
        );
        let _ = writeln!(
            s,
            "{:>5} {:>12} {:>12} {:>12} {:>12} {:>7}",
            "param", "truth", "estimate", "variance", "crb", "ratio"
        );
        for i in 0..self.estimates.len() {
            let _ = writeln!(
                s,
                "{i:>5} {:>12.6} {:>12.6} {:>12.4e} {:>12.4e} {:>7.3}",
                self.alpha_true[i], self.estimates[i], self.covariance[i][i], self.crb[i][i], self.variance_ratio[i]
            );
        }
        s
    }
}

fn header(lead: &str, n: usize, tail: &[&str]) -> String {
    let mut cols = vec![lead.to_string()];
    cols.extend((1..=n).map(|j| format!("k_{j}")));
    cols.extend(tail.iter().map(|t| t.to_string()));
    cols.join(",") + "\n"
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn vector_text(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{:>9.6}", clean(*x))).collect();
    format!("({})", parts.join(", "))
}

fn matrix_text(m: &[Vec<f64>]) -> String {
    m.iter()
        .map(|r| format!("  [{}]\n", r.iter().map(|x| format!("{:>12.6}", clean(*x))).collect::<Vec<_>>().join(" ")))
        .collect()
}

/// Avoids printing `-0.000000`.
fn clean(x: f64) -> f64 {
    if x.abs() < 5e-7 {
        0.0
    } else {
        x
    }
}
