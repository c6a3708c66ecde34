//! Drivers that assemble, integrate and measure: single runs, temporal
//! convergence sweeps and spatial quotient chains.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::analysis::{
    error_on_grid, rate_table, solution_distance, AnalysisError, ConvergenceRecord, EvalGrid, NodalSolution, NormSpec,
    RatioRow,
};
use crate::jacobi::{JacobiBasis, JacobiError, WeightExponent};
use crate::model::{
    compatibility_mismatch, BoundaryData, ExactSolution, InitialData, IntervalMap, ModelError, SystemParams,
    COMPATIBILITY_TOL,
};
use crate::semidiscrete::{assemble, initial_state, AssembledSystem, SemidiscreteError, SemidiscreteProblem};
use crate::time::{integrate, IntegrationPlan, SdirkScheme, TimeError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Semidiscrete(#[from] SemidiscreteError),
    #[error(transparent)]
    Time(#[from] TimeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Invalid(String),
}

/// Time step given outright or as a multiple of `h = (right - left)/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Absolute(f64),
    MeshMultiple(f64),
}

impl StepRule {
    pub fn step(&self, map: &IntervalMap, n: usize) -> f64 {
        match *self {
            Self::Absolute(k) => k,
            Self::MeshMultiple(f) => f * map.length() / n as f64,
        }
    }
}

/// Everything that defines a solve apart from `N`, `k` and the scheme.
#[derive(Debug, Clone)]
pub struct Problem {
    pub params: SystemParams,
    pub map: IntervalMap,
    pub mu: WeightExponent,
    pub initial: InitialData,
    pub boundary: BoundaryData,
    pub t_end: f64,
}

impl Problem {
    /// Boundary/initial mismatch at `t = 0`; `Some` when it exceeds the tolerance.
    pub fn compatibility_warning(&self) -> Option<f64> {
        let m = compatibility_mismatch(&self.initial, &self.boundary, &self.map);
        (m > COMPATIBILITY_TOL).then_some(m)
    }
}

/// Final and intermediate solutions of one integration.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub n: usize,
    pub k: f64,
    pub gamma: f64,
    pub solution: NodalSolution,
    /// `(requested time, solution)` pairs.
    pub snapshots: Vec<(f64, NodalSolution)>,
    pub steps: usize,
    pub max_stage_iters: usize,
    pub evaluations: usize,
}

/// A problem assembled at one degree, reusable across time steps and schemes.
pub struct Solver {
    problem: Problem,
    sys: Arc<AssembledSystem>,
}

impl Solver {
    pub fn new(problem: &Problem, n: usize) -> Result<Self, ExperimentError> {
        let basis = Arc::new(JacobiBasis::new(problem.mu, n)?);
        Self::with_basis(problem, basis)
    }

    pub fn with_basis(problem: &Problem, basis: Arc<JacobiBasis>) -> Result<Self, ExperimentError> {
        let sys = Arc::new(assemble(basis, problem.params, problem.map)?);
        Ok(Self {
            problem: problem.clone(),
            sys,
        })
    }

    pub fn system(&self) -> &Arc<AssembledSystem> {
        &self.sys
    }

    pub fn degree(&self) -> usize {
        self.sys.basis().degree()
    }

    pub fn run(&self, scheme: &SdirkScheme, k: f64, snapshot_times: &[f64]) -> Result<RunOutput, ExperimentError> {
        let p = &self.problem;
        let start = initial_state(self.sys.basis(), &p.map, &p.initial, &p.boundary);
        let mut ode = SemidiscreteProblem::new(self.sys.clone(), p.boundary.clone());
        let plan = IntegrationPlan::with_snapshots(k, p.t_end, snapshot_times.to_vec())?;
        let result = integrate(&mut ode, scheme, &start.packed(), 0.0, &plan)?;
        let to_solution = |y: &[f64], t: f64| NodalSolution::from_state(&self.sys, &ode.state_at(y, t));
        let solution = to_solution(&result.y, result.t);
        if !solution.eta().iter().chain(solution.u()).all(|v| v.is_finite()) {
            return Err(SemidiscreteError::NonFinite {
                what: "solution",
                t: result.t,
            }
            .into());
        }
        let snapshots = result
            .snapshots
            .iter()
            .map(|s| (s.requested, to_solution(&s.y, s.t)))
            .collect();
        Ok(RunOutput {
            n: self.degree(),
            k,
            gamma: scheme.gamma,
            solution,
            snapshots,
            steps: result.steps,
            max_stage_iters: result.max_stage_iters,
            evaluations: ode.evaluations(),
        })
    }
}

/// One assembly, one run.
pub fn run_single(
    problem: &Problem,
    n: usize,
    scheme: &SdirkScheme,
    k: f64,
    snapshot_times: &[f64],
) -> Result<RunOutput, ExperimentError> {
    Solver::new(problem, n)?.run(scheme, k, snapshot_times)
}

/// Errors against `exact` at `t_end` for each `k`, with rates.
pub fn time_convergence(
    solver: &Solver,
    scheme: &SdirkScheme,
    ks: &[f64],
    exact: &ExactSolution,
    spec: &NormSpec,
) -> Result<ConvergenceRecord, ExperimentError> {
    let grid = EvalGrid::for_spec(solver.problem.map, spec, solver.degree())?;
    let mut errors = Vec::with_capacity(ks.len());
    for &k in ks {
        let out = solver.run(scheme, k, &[])?;
        errors.push(error_on_grid(&out.solution, exact, solver.problem.t_end, spec, &grid)?);
    }
    Ok(rate_table(&format!("gamma={}", scheme.gamma), ks.to_vec(), errors)?)
}

/// Checks that `ns` is a doubling chain of at least three degrees.
pub fn validate_doubling(ns: &[usize]) -> Result<(), ExperimentError> {
    if ns.len() < 3 {
        return Err(ExperimentError::Invalid(format!(
            "a quotient chain needs at least three degrees N, 2N, 4N; got {ns:?}"
        )));
    }
    if let Some(w) = ns.windows(2).find(|w| w[1] != 2 * w[0]) {
        return Err(ExperimentError::Invalid(format!(
            "degrees must double: {} is followed by {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Quotient rows and pairwise differences for each norm, plus the runs they came from.
#[derive(Debug, Clone)]
pub struct SpatialStudy {
    /// `differences[j][i] = ||S_{N_i} - S_{N_{i+1}}||` in norm `j`.
    pub differences: Vec<Vec<f64>>,
    /// One table per norm, rows for every `N` with `2N` and `4N` present.
    pub rows: Vec<Vec<RatioRow>>,
    pub runs: Vec<RunOutput>,
}

/// Runs every degree in the doubling chain `ns` and forms `E_N` for each norm.
pub fn spatial_ratios(
    problem: &Problem,
    ns: &[usize],
    scheme: &SdirkScheme,
    step: StepRule,
    norms: &[NormSpec],
    snapshot_times: &[f64],
) -> Result<SpatialStudy, ExperimentError> {
    validate_doubling(ns)?;
    let runs = ns
        .iter()
        .map(|&n| run_single(problem, n, scheme, step.step(&problem.map, n), snapshot_times))
        .collect::<Result<Vec<_>, _>>()?;
    let n_max = *ns.last().unwrap();
    let mut grids: HashMap<(u64, usize), EvalGrid> = HashMap::new();
    let mut differences = Vec::with_capacity(norms.len());
    let mut rows = Vec::with_capacity(norms.len());
    for spec in norms {
        let key = (spec.mu.value().to_bits(), spec.resolve_m(n_max));
        let grid = match grids.entry(key) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(EvalGrid::for_spec(problem.map, spec, n_max)?),
        };
        let grid = &*grid;
        let diffs = runs
            .windows(2)
            .map(|w| solution_distance(&w[0].solution, &w[1].solution, spec, grid))
            .collect::<Result<Vec<_>, _>>()?;
        let table = diffs
            .windows(2)
            .zip(&runs)
            .map(|(d, run)| {
                if d[1] == 0.0 {
                    return Err(AnalysisError::ZeroDenominator { n: run.n });
                }
                Ok(RatioRow::new(run.n, d[0] / d[1]))
            })
            .collect::<Result<Vec<_>, _>>()?;
        differences.push(diffs);
        rows.push(table);
    }
    Ok(SpatialStudy {
        differences,
        rows,
        runs,
    })
}
