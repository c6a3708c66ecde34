//! Symmetric Jacobi polynomials, Gauss-Lobatto-Jacobi quadrature and the
//! nodal (Lagrange) basis with its differentiation matrices.
//!
//! The weight is `w(x) = (1 - x^2)^mu` on `(-1, 1)` with `-1 < mu < 1`.
//! Polynomials use the standard normalisation `P_n(1) = binom(n + mu, n)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::linalg::{lu_factor, DenseMatrix, LinalgError};

const DOMAIN_SLACK: f64 = 1e-12;
const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;
const WEIGHT_CHECK_TOL: f64 = 1e-9;
const NODE_RESIDUAL_TOL: f64 = 1e-13;
/// Distance below which an evaluation point is treated as a node.
pub const NODE_HIT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JacobiError {
    #[error("weight exponent must satisfy -1 < mu < 1, got {0}")]
    InvalidExponent(f64),
    #[error("point {0} lies outside [-1, 1]")]
    OutOfDomain(f64),
    #[error("basis degree must be at least 2, got {0}")]
    DegreeTooSmall(usize),
    #[error("node search failed for N = {n}, mu = {mu}: {reason}")]
    NodeSearch { n: usize, mu: f64, reason: String },
    #[error("quadrature weights fail exactness on x^{degree}: relative error {error:.3e}")]
    WeightVerification { degree: usize, error: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Exponent of the Jacobi weight `(1 - x^2)^mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightExponent(f64);

impl WeightExponent {
    pub fn new(mu: f64) -> Result<Self, JacobiError> {
        if mu > -1.0 && mu < 1.0 {
            Ok(Self(mu))
        } else {
            Err(JacobiError::InvalidExponent(mu))
        }
    }

    pub const LEGENDRE: WeightExponent = WeightExponent(0.0);
    pub const CHEBYSHEV: WeightExponent = WeightExponent(-0.5);

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn weight(self, x: f64) -> f64 {
        (1.0 - x * x).powf(self.0)
    }

    /// `w'(x) = -2 x mu w(x) / (1 - x^2)` on the open interval.
    pub fn weight_derivative(self, x: f64) -> f64 {
        -2.0 * x * self.0 * (1.0 - x * x).powf(self.0 - 1.0)
    }
}

fn check_domain(x: f64) -> Result<(), JacobiError> {
    if x.is_finite() && x.abs() <= 1.0 + DOMAIN_SLACK {
        Ok(())
    } else {
        Err(JacobiError::OutOfDomain(x))
    }
}

/// `P_n^{(a,a)}(x)` by the three-term recurrence; any `a > -1`.
pub(crate) fn symmetric_jacobi(a: f64, n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = (a + 1.0) * x;
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + 2.0 * a;
        let lead = 2.0 * k * (k + 2.0 * a) * (s - 2.0);
        let next = ((s - 1.0) * s * (s - 2.0) * x * cur - 2.0 * (k + a - 1.0).powi(2) * s * prev) / lead;
        prev = cur;
        cur = next;
    }
    cur
}

/// `d^order/dx^order P_n^{(a,a)}(x)` via `P_n' = (n + 2a + 1)/2 P_{n-1}^{(a+1,a+1)}`.
pub(crate) fn symmetric_jacobi_deriv(a: f64, n: usize, x: f64, order: usize) -> f64 {
    if order > n {
        return 0.0;
    }
    let mut factor = 1.0;
    for i in 0..order {
        let m = (n - i) as f64;
        let ai = a + i as f64;
        factor *= 0.5 * (m + 2.0 * ai + 1.0);
    }
    factor * symmetric_jacobi(a + order as f64, n - order, x)
}

pub fn jacobi_eval(mu: WeightExponent, n: usize, x: f64) -> Result<f64, JacobiError> {
    check_domain(x)?;
    Ok(symmetric_jacobi(mu.value(), n, x))
}

/// Derivative of order 1 or 2 (any order is accepted; degree below the order gives 0).
pub fn jacobi_deriv(mu: WeightExponent, n: usize, x: f64, order: usize) -> Result<f64, JacobiError> {
    check_domain(x)?;
    Ok(symmetric_jacobi_deriv(mu.value(), n, x, order))
}

/// `int_{-1}^{1} x^k (1 - x^2)^mu dx`.
pub fn weight_moment(mu: WeightExponent, k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let m = (k / 2) as f64;
    let mu = mu.value();
    let log_beta = libm::lgamma(m + 0.5) + libm::lgamma(mu + 1.0) - libm::lgamma(m + mu + 1.5);
    log_beta.exp()
}

/// Gauss-Lobatto-Jacobi nodes: `-1`, the zeros of `J_N'` in ascending order, `1`.
pub fn glj_nodes(mu: WeightExponent, n: usize) -> Result<Vec<f64>, JacobiError> {
    if n < 2 {
        return Err(JacobiError::DegreeTooSmall(n));
    }
    let a = mu.value() + 1.0;
    let m = n - 1; // J_N' is a multiple of P_{N-1}^{(a,a)}
    let f = |x: f64| symmetric_jacobi(a, m, x);
    let df = |x: f64| symmetric_jacobi_deriv(a, m, x, 1);

    let mut roots = newton_roots(m, n, &f, &df).unwrap_or_default();
    if roots.len() != m {
        roots = bracket_roots(m, &f).ok_or_else(|| JacobiError::NodeSearch {
            n,
            mu: mu.value(),
            reason: "bisection did not isolate all interior zeros".into(),
        })?;
    }
    roots.sort_by(|p, q| p.total_cmp(q));

    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(-1.0);
    nodes.extend(roots);
    nodes.push(1.0);
    for j in 1..=n / 2 {
        let half = 0.5 * (nodes[n - j] - nodes[j]);
        nodes[j] = -half;
        nodes[n - j] = half;
    }
    if n.is_multiple_of(2) {
        nodes[n / 2] = 0.0;
    }

    let scale = (0..=4 * n)
        .map(|i| f(-1.0 + 2.0 * i as f64 / (4 * n) as f64).abs())
        .fold(0.0, f64::max);
    for &x in &nodes[1..n] {
        // a root rounded to the last ulp leaves a residual of order |x f'(x)| eps
        let local = scale.max((x * df(x)).abs()).max(1.0);
        if f(x).abs() > NODE_RESIDUAL_TOL * local {
            return Err(JacobiError::NodeSearch {
                n,
                mu: mu.value(),
                reason: format!("residual {:.3e} at x = {x}", f(x).abs()),
            });
        }
    }
    for w in nodes.windows(2) {
        if !(w[1] > w[0]) {
            return Err(JacobiError::NodeSearch {
                n,
                mu: mu.value(),
                reason: "nodes are not strictly increasing".into(),
            });
        }
    }
    Ok(nodes)
}

/// Newton with deflation from Chebyshev-Gauss-Lobatto guesses.
fn newton_roots(m: usize, n: usize, f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64) -> Option<Vec<f64>> {
    let mut roots: Vec<f64> = Vec::with_capacity(m);
    for j in 1..=m {
        let mut x = -(PI * j as f64 / n as f64).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let p = f(x);
            let dp = df(x);
            let defl: f64 = roots.iter().map(|r| 1.0 / (x - r)).sum();
            let step = p / (dp - p * defl);
            if !step.is_finite() {
                break;
            }
            x -= step;
            if step.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged || !(x.abs() < 1.0) {
            return None;
        }
        roots.push(x);
    }
    let mut sorted = roots.clone();
    sorted.sort_by(|p, q| p.total_cmp(q));
    if sorted.windows(2).any(|w| w[1] - w[0] < 1e-10 / (n * n) as f64) {
        return None;
    }
    Some(roots)
}

fn bracket_roots(m: usize, f: &dyn Fn(f64) -> f64) -> Option<Vec<f64>> {
    // Chebyshev-spaced scan resolves the clustering near the endpoints.
    let samples = 64 * (m + 1);
    let grid: Vec<f64> = (0..=samples).map(|i| -(PI * i as f64 / samples as f64).cos()).collect();
    let mut roots = Vec::with_capacity(m);
    for w in grid.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (mut flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            if hi - lo <= NEWTON_TOL * 0.5 {
                break;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots.retain(|x| x.abs() < 1.0);
    (roots.len() == m).then_some(roots)
}

/// Weights exact on `P_{2N-1}`, from the moment system in the orthonormal
/// Jacobi basis (row `n` enforces exactness on `p_n`).
pub fn glj_weights(mu: WeightExponent, nodes: &[f64]) -> Result<Vec<f64>, JacobiError> {
    let size = nodes.len();
    if size < 3 {
        return Err(JacobiError::DegreeTooSmall(size.saturating_sub(1)));
    }
    let n = size - 1;
    let m0 = weight_moment(mu, 0);
    let mut vander = DenseMatrix::zeros(size, size);
    for (j, &x) in nodes.iter().enumerate() {
        for (k, v) in orthonormal_values(mu.value(), n, x, m0).into_iter().enumerate() {
            vander[(k, j)] = v;
        }
    }
    let mut rhs = vec![0.0; size];
    rhs[0] = m0.sqrt();
    let weights = lu_factor(&vander)?.solve(&rhs)?;
    verify_weights(mu, nodes, &weights)?;
    Ok(weights)
}

/// Orthonormal symmetric Jacobi polynomials `p_0..p_n` at `x`.
fn orthonormal_values(mu: f64, n: usize, x: f64, m0: f64) -> Vec<f64> {
    let coeff = |k: usize| -> f64 {
        if k == 1 {
            return (1.0 / (3.0 + 2.0 * mu)).sqrt();
        }
        let k = k as f64;
        (k * (k + 2.0 * mu) / ((2.0 * k + 2.0 * mu + 1.0) * (2.0 * k + 2.0 * mu - 1.0))).sqrt()
    };
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0 / m0.sqrt());
    if n >= 1 {
        out.push(x * out[0] / coeff(1));
    }
    for k in 1..n {
        let next = (x * out[k] - coeff(k) * out[k - 1]) / coeff(k + 1);
        out.push(next);
    }
    out
}

fn verify_weights(mu: WeightExponent, nodes: &[f64], weights: &[f64]) -> Result<(), JacobiError> {
    if let Some(&w) = weights.iter().find(|w| !(**w > 0.0)) {
        return Err(JacobiError::WeightVerification { degree: 0, error: w });
    }
    let n = nodes.len() - 1;
    let mut powers = vec![1.0; nodes.len()];
    for k in 0..2 * n {
        let sum: f64 = powers.iter().zip(weights).map(|(p, w)| p * w).sum();
        let error = if k % 2 == 0 {
            let exact = weight_moment(mu, k);
            (sum - exact).abs() / exact
        } else {
            let scale: f64 = powers.iter().zip(weights).map(|(p, w)| p.abs() * w).sum();
            sum.abs() / scale.max(f64::MIN_POSITIVE)
        };
        if !(error <= WEIGHT_CHECK_TOL) {
            return Err(JacobiError::WeightVerification { degree: k, error });
        }
        powers.iter_mut().zip(nodes).for_each(|(p, x)| *p *= x);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_lobatto_jacobi(mu: WeightExponent, n: usize) -> Result<Self, JacobiError> {
        let nodes = glj_nodes(mu, n)?;
        let weights = glj_weights(mu, &nodes)?;
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    /// `sum_j w_j f(x_j)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, w)| w * f(x)).sum()
    }

    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// Barycentric weights `1 / prod_{k != j} (x_j - x_k)`, rescaled so the
/// largest magnitude is one.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let logs: Vec<(f64, f64)> = nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let mut log = 0.0;
            let mut sign = 1.0;
            for (k, &xk) in nodes.iter().enumerate() {
                if k != j {
                    let d = xj - xk;
                    log -= d.abs().ln();
                    if d < 0.0 {
                        sign = -sign;
                    }
                }
            }
            (log, sign)
        })
        .collect();
    let top = logs.iter().map(|l| l.0).fold(f64::NEG_INFINITY, f64::max);
    logs.into_iter().map(|(l, s)| s * (l - top).exp()).collect()
}

/// First derivative matrix `D_ij = psi_j'(x_i)`.
pub fn first_derivative_matrix(nodes: &[f64], bary: &[f64]) -> DenseMatrix {
    let size = nodes.len();
    let mut d = DenseMatrix::zeros(size, size);
    for i in 0..size {
        let mut diag = 0.0;
        for j in 0..size {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Second derivative matrix from the first one (Schneider-Werner formula).
pub fn second_derivative_matrix(nodes: &[f64], d1: &DenseMatrix) -> DenseMatrix {
    let size = nodes.len();
    let mut d = DenseMatrix::zeros(size, size);
    for i in 0..size {
        let mut diag = 0.0;
        for j in 0..size {
            if i != j {
                let v = 2.0 * d1[(i, j)] * (d1[(i, i)] - 1.0 / (nodes[i] - nodes[j]));
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// `diff_matrices`: `(D1, D2)` for the given nodes.
pub fn diff_matrices(nodes: &[f64]) -> (DenseMatrix, DenseMatrix) {
    let bary = barycentric_weights(nodes);
    let d1 = first_derivative_matrix(nodes, &bary);
    let d2 = second_derivative_matrix(nodes, &d1);
    (d1, d2)
}

/// Nodal values of `phi_j(x) = 2 mu x psi_j(x) / (1 - x^2)` for interior `j`.
///
/// Column `c` belongs to node `j = c + 1`. Besides the diagonal entry only the
/// endpoint rows are nonzero, where the limit is `-mu psi_j'(+-1)`.
pub fn aux_matrix(mu: WeightExponent, nodes: &[f64], d1: &DenseMatrix) -> DenseMatrix {
    let n = nodes.len() - 1;
    let mu = mu.value();
    let mut psi = DenseMatrix::zeros(n + 1, n - 1);
    if mu == 0.0 {
        return psi;
    }
    for c in 0..n - 1 {
        let j = c + 1;
        let x = nodes[j];
        psi[(j, c)] = 2.0 * x * mu / (1.0 - x * x);
        psi[(0, c)] = -mu * d1[(0, j)];
        psi[(n, c)] = -mu * d1[(n, j)];
    }
    psi
}

/// Everything the Galerkin assembly needs from one Gauss-Lobatto-Jacobi grid.
#[derive(Debug, Clone)]
pub struct JacobiBasis {
    mu: WeightExponent,
    degree: usize,
    rule: QuadratureRule,
    bary: Vec<f64>,
    d1: DenseMatrix,
    d2: DenseMatrix,
    psi: DenseMatrix,
    jn_at_nodes: Vec<f64>,
}

impl JacobiBasis {
    pub fn new(mu: WeightExponent, degree: usize) -> Result<Self, JacobiError> {
        let rule = QuadratureRule::gauss_lobatto_jacobi(mu, degree)?;
        let bary = barycentric_weights(rule.nodes());
        let d1 = first_derivative_matrix(rule.nodes(), &bary);
        let d2 = second_derivative_matrix(rule.nodes(), &d1);
        let psi = aux_matrix(mu, rule.nodes(), &d1);
        let jn_at_nodes = rule
            .nodes()
            .iter()
            .map(|&x| symmetric_jacobi(mu.value(), degree, x))
            .collect();
        Ok(Self {
            mu,
            degree,
            rule,
            bary,
            d1,
            d2,
            psi,
            jn_at_nodes,
        })
    }

    pub fn mu(&self) -> WeightExponent {
        self.mu
    }

    /// Polynomial degree `N`; there are `N + 1` nodes.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        self.rule.nodes()
    }

    pub fn weights(&self) -> &[f64] {
        self.rule.weights()
    }

    pub fn barycentric(&self) -> &[f64] {
        &self.bary
    }

    pub fn d1(&self) -> &DenseMatrix {
        &self.d1
    }

    pub fn d2(&self) -> &DenseMatrix {
        &self.d2
    }

    pub fn psi_matrix(&self) -> &DenseMatrix {
        &self.psi
    }

    pub fn jn_at_nodes(&self) -> &[f64] {
        &self.jn_at_nodes
    }

    /// Eigenvalue `N (N + 2 mu + 1)` of the Jacobi operator.
    pub fn eigenvalue(&self) -> f64 {
        let n = self.degree as f64;
        n * (n + 2.0 * self.mu.value() + 1.0)
    }

    fn nearest_node(&self, x: f64) -> Option<usize> {
        self.nodes().iter().position(|&xk| (x - xk).abs() < NODE_HIT_TOL)
    }

    /// `psi_j(x)` (`deriv = 0`) or `psi_j'(x)` (`deriv = 1`).
    pub fn nodal_basis_eval(&self, j: usize, x: f64, deriv: u8) -> Result<f64, JacobiError> {
        check_domain(x)?;
        if let Some(k) = self.nearest_node(x) {
            return Ok(match deriv {
                0 => f64::from(u8::from(j == k)),
                _ => self.d1[(k, j)],
            });
        }
        let nodes = self.nodes();
        let terms: Vec<f64> = nodes.iter().zip(&self.bary).map(|(xk, b)| b / (x - xk)).collect();
        let value = terms[j] / terms.iter().sum::<f64>();
        if deriv == 0 {
            return Ok(value);
        }
        let log_deriv: f64 = nodes
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, xk)| 1.0 / (x - xk))
            .sum();
        Ok(value * log_deriv)
    }

    /// The closed form `C (1 - x^2) J_N'(x) / ((x_j - x) J_N(x_j))` with
    /// `C = 1/lambda` inside and `(mu + 1)/lambda` at the endpoints.
    pub fn nodal_basis_closed_form(&self, j: usize, x: f64) -> f64 {
        let n = self.degree;
        let mu = self.mu.value();
        let scale = if j == 0 || j == n { mu + 1.0 } else { 1.0 } / self.eigenvalue();
        let xj = self.nodes()[j];
        scale * (1.0 - x * x) * symmetric_jacobi_deriv(mu, n, x, 1) / ((xj - x) * self.jn_at_nodes[j])
    }

    /// Barycentric interpolation of nodal values at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        barycentric_interpolate(self.nodes(), &self.bary, values, x)
    }
}

/// Second-form barycentric interpolation; returns the nodal value on an exact hit.
pub fn barycentric_interpolate(nodes: &[f64], bary: &[f64], values: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xk, &b), &f) in nodes.iter().zip(bary).zip(values) {
        let delta = x - xk;
        if delta == 0.0 {
            return f;
        }
        let t = b / delta;
        num += t * f;
        den += t;
    }
    num / den
}
