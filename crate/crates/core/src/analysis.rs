//! Sobolev norms on a refined Gauss-Lobatto grid, errors against exact
//! solutions and convergence quotients.

use std::sync::Arc;

use thiserror::Error;

use crate::jacobi::{barycentric_interpolate, JacobiBasis, JacobiError, QuadratureRule, WeightExponent};
use crate::model::{ExactSolution, IntervalMap};
use crate::semidiscrete::{AssembledSystem, State};

const DOMAIN_SLACK: f64 = 1e-12;
/// Smallest evaluation-grid degree.
pub const MIN_EVAL_DEGREE: usize = 64;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("point {x} outside [{left}, {right}]")]
    OutOfDomain { x: f64, left: f64, right: f64 },
    #[error("derivative order {0} not supported (0, 1 or 2)")]
    InvalidOrder(u8),
    #[error("zero denominator in convergence quotient at N = {n}: error floor reached")]
    ZeroDenominator { n: usize },
    #[error("need at least {needed} entries, got {got}")]
    TooFewEntries { needed: usize, got: usize },
    #[error("solutions live on different intervals")]
    IntervalMismatch,
    #[error("{0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
}

/// Per-component Sobolev orders with the quadrature weight and evaluation degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub orders: [u8; 2],
    pub mu: WeightExponent,
    /// Requested evaluation-grid degree; never below `max(2 N_max, 64)`.
    pub m: Option<usize>,
}

impl NormSpec {
    pub fn new(eta_order: u8, u_order: u8) -> Result<Self, AnalysisError> {
        for k in [eta_order, u_order] {
            if k > 2 {
                return Err(AnalysisError::InvalidOrder(k));
            }
        }
        Ok(Self {
            orders: [eta_order, u_order],
            mu: WeightExponent::LEGENDRE,
            m: None,
        })
    }

    pub fn with_mu(mut self, mu: WeightExponent) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    /// Evaluation degree for comparisons involving degrees up to `n_max`.
    pub fn resolve_m(&self, n_max: usize) -> usize {
        self.m.unwrap_or(0).max(2 * n_max).max(MIN_EVAL_DEGREE)
    }

    /// Short label such as `H2xH1`.
    pub fn label(&self) -> String {
        let name = |k: u8| if k == 0 { "L2".to_string() } else { format!("H{k}") };
        format!("{}x{}", name(self.orders[0]), name(self.orders[1]))
    }
}

/// Quadrature rule of degree `M` mapped onto a physical interval.
#[derive(Debug, Clone)]
pub struct EvalGrid {
    map: IntervalMap,
    rule: QuadratureRule,
    points: Vec<f64>,
}

impl EvalGrid {
    pub fn new(map: IntervalMap, mu: WeightExponent, m: usize) -> Result<Self, AnalysisError> {
        let rule = QuadratureRule::gauss_lobatto_jacobi(mu, m)?;
        let points = rule.nodes().iter().map(|&x| map.to_physical(x)).collect();
        Ok(Self { map, rule, points })
    }

    /// The grid `spec` asks for when comparing degrees up to `n_max`.
    pub fn for_spec(map: IntervalMap, spec: &NormSpec, n_max: usize) -> Result<Self, AnalysisError> {
        Self::new(map, spec.mu, spec.resolve_m(n_max))
    }

    pub fn map(&self) -> &IntervalMap {
        &self.map
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn degree(&self) -> usize {
        self.rule.degree()
    }

    /// Physical evaluation points.
    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// `sqrt(s * sum_l sum_j w_j |f^(l)(x_j)|^2)` with `samples[l]` holding `f^(l)` on the grid.
pub fn sobolev_norm(grid: &EvalGrid, samples: &[Vec<f64>]) -> f64 {
    sobolev_norm_squared(grid, samples).sqrt()
}

fn sobolev_norm_squared(grid: &EvalGrid, samples: &[Vec<f64>]) -> f64 {
    let w = grid.rule.weights();
    let sum: f64 = samples
        .iter()
        .map(|f| f.iter().zip(w).map(|(v, wj)| wj * v * v).sum::<f64>())
        .sum();
    grid.map.scale() * sum
}

/// Values of the nodal expansion with coefficients `values` (all `N + 1`), or of
/// its first or second derivative, at physical `points`.
pub fn eval_solution(
    basis: &JacobiBasis,
    map: &IntervalMap,
    values: &[f64],
    points: &[f64],
    deriv: u8,
) -> Result<Vec<f64>, AnalysisError> {
    let nodal = nodal_derivative(basis, map, values, deriv)?;
    interpolate_at(basis, map, &nodal, points)
}

fn nodal_derivative(
    basis: &JacobiBasis,
    map: &IntervalMap,
    values: &[f64],
    deriv: u8,
) -> Result<Vec<f64>, AnalysisError> {
    let s = map.scale();
    Ok(match deriv {
        0 => values.to_vec(),
        1 => basis
            .d1()
            .matvec(values)
            .map_err(JacobiError::from)?
            .iter()
            .map(|v| v / s)
            .collect(),
        2 => basis
            .d2()
            .matvec(values)
            .map_err(JacobiError::from)?
            .iter()
            .map(|v| v / (s * s))
            .collect(),
        k => return Err(AnalysisError::InvalidOrder(k)),
    })
}

fn interpolate_at(
    basis: &JacobiBasis,
    map: &IntervalMap,
    nodal: &[f64],
    points: &[f64],
) -> Result<Vec<f64>, AnalysisError> {
    points
        .iter()
        .map(|&x| {
            let xi = map.to_reference(x);
            if !(xi.abs() <= 1.0 + DOMAIN_SLACK) {
                return Err(AnalysisError::OutOfDomain {
                    x,
                    left: map.left(),
                    right: map.right(),
                });
            }
            Ok(barycentric_interpolate(
                basis.nodes(),
                basis.barycentric(),
                nodal,
                xi.clamp(-1.0, 1.0),
            ))
        })
        .collect()
}

/// A numerical solution: full nodal values of both components on one basis.
#[derive(Debug, Clone)]
pub struct NodalSolution {
    basis: Arc<JacobiBasis>,
    map: IntervalMap,
    eta: Vec<f64>,
    u: Vec<f64>,
    t: f64,
}

impl NodalSolution {
    pub fn new(basis: Arc<JacobiBasis>, map: IntervalMap, eta: Vec<f64>, u: Vec<f64>, t: f64) -> Self {
        assert_eq!(eta.len(), basis.degree() + 1, "eta needs N + 1 values");
        assert_eq!(u.len(), basis.degree() + 1, "u needs N + 1 values");
        Self { basis, map, eta, u, t }
    }

    pub fn from_state(sys: &AssembledSystem, state: &State) -> Self {
        Self::new(
            sys.basis().clone(),
            *sys.map(),
            state.full_eta(),
            state.full_u(),
            state.t,
        )
    }

    /// Nodal interpolant of an exact solution at time `t`.
    pub fn interpolate_exact(basis: Arc<JacobiBasis>, map: IntervalMap, exact: &ExactSolution, t: f64) -> Self {
        let (eta, u) = basis
            .nodes()
            .iter()
            .map(|&xi| {
                let x = map.to_physical(xi);
                (exact.eta(x, t), exact.u(x, t))
            })
            .unzip();
        Self::new(basis, map, eta, u, t)
    }

    pub fn basis(&self) -> &Arc<JacobiBasis> {
        &self.basis
    }

    pub fn map(&self) -> &IntervalMap {
        &self.map
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Returns a copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mul = |v: &[f64]| v.iter().map(|x| x * factor).collect();
        Self::new(self.basis.clone(), self.map, mul(&self.eta), mul(&self.u), self.t)
    }

    fn component(&self, index: usize) -> &[f64] {
        if index == 0 {
            &self.eta
        } else {
            &self.u
        }
    }

    /// `f, f', ..., f^(order)` of component `index` (0 = eta, 1 = u) at `points`.
    pub fn samples(&self, index: usize, points: &[f64], order: u8) -> Result<Vec<Vec<f64>>, AnalysisError> {
        (0..=order)
            .map(|l| eval_solution(&self.basis, &self.map, self.component(index), points, l))
            .collect()
    }
}

fn exact_samples(exact: &ExactSolution, index: usize, points: &[f64], t: f64, order: u8) -> Vec<Vec<f64>> {
    (0..=order as usize)
        .map(|l| {
            points
                .iter()
                .map(|&x| {
                    if index == 0 {
                        exact.eta_dx(x, t, l)
                    } else {
                        exact.u_dx(x, t, l)
                    }
                })
                .collect()
        })
        .collect()
}

fn difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

/// `||eta_N - eta(T)|| + ||u_N - u(T)||` in the orders of `spec`.
pub fn error_vs_exact(
    sol: &NodalSolution,
    exact: &ExactSolution,
    t: f64,
    spec: &NormSpec,
) -> Result<f64, AnalysisError> {
    let grid = EvalGrid::for_spec(sol.map, spec, sol.degree())?;
    error_on_grid(sol, exact, t, spec, &grid)
}

/// [`error_vs_exact`] on a prebuilt grid.
pub fn error_on_grid(
    sol: &NodalSolution,
    exact: &ExactSolution,
    t: f64,
    spec: &NormSpec,
    grid: &EvalGrid,
) -> Result<f64, AnalysisError> {
    let mut total = 0.0;
    for (index, &order) in spec.orders.iter().enumerate() {
        let num = sol.samples(index, grid.points(), order)?;
        let ex = exact_samples(exact, index, grid.points(), t, order);
        total += sobolev_norm(grid, &difference(&num, &ex));
    }
    Ok(total)
}

/// Product-norm distance between two sampled exact solutions.
pub fn exact_distance(a: &ExactSolution, b: &ExactSolution, t: f64, spec: &NormSpec, grid: &EvalGrid) -> f64 {
    spec.orders
        .iter()
        .enumerate()
        .map(|(index, &order)| {
            let pa = exact_samples(a, index, grid.points(), t, order);
            let pb = exact_samples(b, index, grid.points(), t, order);
            sobolev_norm(grid, &difference(&pa, &pb))
        })
        .sum()
}

/// Product-norm distance between two numerical solutions on `grid`.
pub fn solution_distance(
    a: &NodalSolution,
    b: &NodalSolution,
    spec: &NormSpec,
    grid: &EvalGrid,
) -> Result<f64, AnalysisError> {
    if a.map != b.map || a.map != grid.map {
        return Err(AnalysisError::IntervalMismatch);
    }
    let mut total = 0.0;
    for (index, &order) in spec.orders.iter().enumerate() {
        let pa = a.samples(index, grid.points(), order)?;
        let pb = b.samples(index, grid.points(), order)?;
        total += sobolev_norm(grid, &difference(&pa, &pb));
    }
    Ok(total)
}

/// `E_N = ||S_N - S_2N|| / ||S_2N - S_4N||` for solutions at `N`, `2N`, `4N`.
pub fn convergence_ratio(sols: [&NodalSolution; 3], spec: &NormSpec) -> Result<f64, AnalysisError> {
    let n_max = sols.iter().map(|s| s.degree()).max().unwrap_or(0);
    let grid = EvalGrid::for_spec(sols[0].map, spec, n_max)?;
    ratio_on_grid(sols, spec, &grid)
}

/// [`convergence_ratio`] on a prebuilt grid.
pub fn ratio_on_grid(sols: [&NodalSolution; 3], spec: &NormSpec, grid: &EvalGrid) -> Result<f64, AnalysisError> {
    let num = solution_distance(sols[0], sols[1], spec, grid)?;
    let den = solution_distance(sols[1], sols[2], spec, grid)?;
    if den == 0.0 {
        return Err(AnalysisError::ZeroDenominator { n: sols[0].degree() });
    }
    Ok(num / den)
}

/// One row of a quotient table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub n: usize,
    pub e: f64,
    pub log2: f64,
    pub ln: f64,
}

impl RatioRow {
    pub fn new(n: usize, e: f64) -> Self {
        Self {
            n,
            e,
            log2: e.log2(),
            ln: e.ln(),
        }
    }
}

/// Errors against a refinement parameter with consecutive ratios and rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub label: String,
    pub params: Vec<f64>,
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
    pub rates: Vec<f64>,
}

/// `ratios[i] = e_i / e_{i+1}` and `rates[i] = log2(ratios[i])`.
pub fn rate_table(label: &str, params: Vec<f64>, errors: Vec<f64>) -> Result<ConvergenceRecord, AnalysisError> {
    if errors.len() < 2 {
        return Err(AnalysisError::TooFewEntries {
            needed: 2,
            got: errors.len(),
        });
    }
    if params.len() != errors.len() {
        return Err(AnalysisError::InvalidSpec(format!(
            "{} parameters for {} errors",
            params.len(),
            errors.len()
        )));
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let rates = ratios.iter().map(|r| r.log2()).collect();
    Ok(ConvergenceRecord {
        label: label.to_string(),
        params,
        errors,
        ratios,
        rates,
    })
}
