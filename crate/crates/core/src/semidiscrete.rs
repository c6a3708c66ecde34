//! Galerkin-with-numerical-integration assembly of the nodal ODE system.
//!
//! Unknowns are the interior nodal values `eta_1..eta_{N-1}`, `u_1..u_{N-1}`;
//! the endpoint values come from the Dirichlet data. With test functions
//! `psi_i` and `phi_i = 2 mu x psi_i / (1 - x^2)`, integration by parts gives
//! `(f'', psi_i)_w = -(f', psi_i' - phi_i)_w`, so every second-order term goes
//! through
//!
//! ```text
//! G[i, h] = (D1[h, i] - Psi[h, i]) w_h,    S1 = G D1,    S2 = G D2
//! ```
//!
//! where the sum over `h` runs over all `N + 1` quadrature nodes. On the
//! physical interval with half-length `s` the equations are divided by `s`:
//!
//! ```text
//! (W + b/s^2 S1_II) eta' = -(1/s) W D1_I u + (1/s) G (eta u) - b/s^2 S1_IB eta_B'
//! (W + d/s^2 S1_II) u'   = -(1/s) W D1_I eta - |c|/s^3 S2 eta + (1/s) G (u^2/2) - d/s^2 S1_IB u_B'
//! ```

use std::cell::Cell;
use std::sync::Arc;

use thiserror::Error;

use crate::jacobi::JacobiBasis;
use crate::linalg::{dot, lu_factor, matmul, DenseMatrix, LinalgError, LuFactorization};
use crate::model::{BoundaryData, BoundaryValues, InitialData, IntervalMap, SystemParams};
use crate::time::{OdeSystem, TimeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemidiscreteError {
    #[error("left-hand side for the {equation} equation is singular (N = {n}, mu = {mu}, b = {b}, d = {d}): {source}")]
    SingularLhs {
        equation: &'static str,
        n: usize,
        mu: f64,
        b: f64,
        d: f64,
        source: LinalgError,
    },
    #[error("non-finite {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },
    #[error("state has {got} interior values, the system expects {expected}")]
    Dimension { expected: usize, got: usize },
}

thread_local! {
    static ASSEMBLIES: Cell<usize> = const { Cell::new(0) };
}

/// Number of [`assemble`] calls made on the current thread.
pub fn assembly_count() -> usize {
    ASSEMBLIES.with(|c| c.get())
}

/// Reference-interval blocks `(G, S1, S2)`.
pub fn galerkin_blocks(basis: &JacobiBasis) -> (DenseMatrix, DenseMatrix, DenseMatrix) {
    let g = test_gradient(basis, basis.mu().value() != 0.0);
    let s1 = matmul(&g, basis.d1()).expect("conforming shapes");
    let s2 = matmul(&g, basis.d2()).expect("conforming shapes");
    (g, s1, s2)
}

/// `G[i - 1, h] = (D1[h, i] - Psi[h, i - 1]) w_h` for interior `i`.
fn test_gradient(basis: &JacobiBasis, with_psi: bool) -> DenseMatrix {
    let n = basis.degree();
    let w = basis.weights();
    let d1 = basis.d1();
    let psi = basis.psi_matrix();
    DenseMatrix::from_fn(n - 1, n + 1, |r, h| {
        let i = r + 1;
        let grad = if with_psi { d1[(h, i)] - psi[(h, r)] } else { d1[(h, i)] };
        grad * w[h]
    })
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    basis: Arc<JacobiBasis>,
    params: SystemParams,
    map: IntervalMap,
    /// Interior quadrature weights (the diagonal of `W`).
    mass: Vec<f64>,
    /// `(1/s) W D1[I, :]`.
    advection: DenseMatrix,
    /// `(1/s) G`, applied to the nodal products.
    flux: DenseMatrix,
    /// `(1/s) W D1[I, :] + |c|/s^3 S2`, applied to `eta` in the u-equation.
    stiff_u: DenseMatrix,
    /// `b/s^2 S1[:, 0]` and `b/s^2 S1[:, N]`.
    eta_boundary: [Vec<f64>; 2],
    /// `d/s^2 S1[:, 0]` and `d/s^2 S1[:, N]`.
    u_boundary: [Vec<f64>; 2],
    lhs_eta_matrix: DenseMatrix,
    lhs_u_matrix: DenseMatrix,
    lhs_eta: LuFactorization,
    lhs_u: LuFactorization,
}

pub fn assemble(
    basis: Arc<JacobiBasis>,
    params: SystemParams,
    map: IntervalMap,
) -> Result<AssembledSystem, SemidiscreteError> {
    ASSEMBLIES.with(|c| c.set(c.get() + 1));
    let n = basis.degree();
    let interior = n - 1;
    let s = map.scale();
    let (g, s1, s2) = galerkin_blocks(&basis);
    let w = basis.weights();
    let d1 = basis.d1();

    let mass: Vec<f64> = w[1..n].to_vec();
    let advection = DenseMatrix::from_fn(interior, n + 1, |r, h| w[r + 1] * d1[(r + 1, h)] / s);
    let flux = g.scaled(1.0 / s);
    let mut stiff_u = advection.clone();
    if params.c != 0.0 {
        stiff_u
            .add_scaled(params.c.abs() / s.powi(3), &s2)
            .expect("conforming shapes");
    }

    let lhs = |coef: f64| -> DenseMatrix {
        let f = coef / (s * s);
        DenseMatrix::from_fn(interior, interior, |r, c| {
            let m = if r == c { mass[r] } else { 0.0 };
            m + f * s1[(r, c + 1)]
        })
    };
    let boundary_columns = |coef: f64| -> [Vec<f64>; 2] {
        let f = coef / (s * s);
        [0, n].map(|col| (0..interior).map(|r| f * s1[(r, col)]).collect())
    };
    let singular = |equation: &'static str, source: LinalgError| SemidiscreteError::SingularLhs {
        equation,
        n,
        mu: basis.mu().value(),
        b: params.b,
        d: params.d,
        source,
    };

    let lhs_eta_matrix = lhs(params.b);
    let lhs_eta = lu_factor(&lhs_eta_matrix).map_err(|e| singular("eta", e))?;
    let (lhs_u_matrix, lhs_u) = if params.d == params.b {
        (lhs_eta_matrix.clone(), lhs_eta.clone())
    } else {
        let m = lhs(params.d);
        let f = lu_factor(&m).map_err(|e| singular("u", e))?;
        (m, f)
    };

    Ok(AssembledSystem {
        eta_boundary: boundary_columns(params.b),
        u_boundary: boundary_columns(params.d),
        basis,
        params,
        map,
        mass,
        advection,
        flux,
        stiff_u,
        lhs_eta_matrix,
        lhs_u_matrix,
        lhs_eta,
        lhs_u,
    })
}

/// Interior nodal values plus the boundary data in force at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub eta: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
    pub bc: BoundaryValues,
}

impl State {
    pub fn zeros(interior: usize) -> Self {
        Self {
            eta: vec![0.0; interior],
            u: vec![0.0; interior],
            t: 0.0,
            bc: BoundaryValues::default(),
        }
    }

    /// All `N + 1` nodal values of `eta`.
    pub fn full_eta(&self) -> Vec<f64> {
        with_ends(&self.eta, self.bc.eta)
    }

    pub fn full_u(&self) -> Vec<f64> {
        with_ends(&self.u, self.bc.u)
    }

    /// `[eta; u]` as one vector.
    pub fn packed(&self) -> Vec<f64> {
        let mut y = self.eta.clone();
        y.extend_from_slice(&self.u);
        y
    }

    pub fn from_packed(y: &[f64], t: f64, bc: BoundaryValues) -> Self {
        let n = y.len() / 2;
        Self {
            eta: y[..n].to_vec(),
            u: y[n..].to_vec(),
            t,
            bc,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.eta.iter().chain(&self.u).all(|v| v.is_finite())
    }
}

fn with_ends(interior: &[f64], ends: [f64; 2]) -> Vec<f64> {
    let mut v = Vec::with_capacity(interior.len() + 2);
    v.push(ends[0]);
    v.extend_from_slice(interior);
    v.push(ends[1]);
    v
}

/// Buffers reused across right-hand-side evaluations.
#[derive(Debug, Clone, Default)]
pub struct RhsScratch {
    eta_full: Vec<f64>,
    u_full: Vec<f64>,
    product: Vec<f64>,
    solve: Vec<f64>,
}

impl AssembledSystem {
    pub fn basis(&self) -> &Arc<JacobiBasis> {
        &self.basis
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn map(&self) -> &IntervalMap {
        &self.map
    }

    pub fn interior_len(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn lhs_eta_matrix(&self) -> &DenseMatrix {
        &self.lhs_eta_matrix
    }

    pub fn lhs_u_matrix(&self) -> &DenseMatrix {
        &self.lhs_u_matrix
    }

    /// Mapped quadrature nodes on the physical interval.
    pub fn physical_nodes(&self) -> Vec<f64> {
        self.basis.nodes().iter().map(|&x| self.map.to_physical(x)).collect()
    }

    /// Boundary contributions to both right-hand sides, before the solves.
    pub fn gamma_rhs(&self, state: &State) -> (Vec<f64>, Vec<f64>) {
        let n = self.basis.degree();
        let bc = &state.bc;
        let interior = self.interior_len();
        let mut g1 = vec![0.0; interior];
        let mut g2 = vec![0.0; interior];
        for r in 0..interior {
            let mut a = 0.0;
            let mut b = 0.0;
            for (side, col) in [(0usize, 0usize), (1, n)] {
                let (eb, ub) = (bc.eta[side], bc.u[side]);
                a += -self.advection[(r, col)] * ub + self.flux[(r, col)] * eb * ub
                    - self.eta_boundary[side][r] * bc.eta_dt[side];
                b += -self.stiff_u[(r, col)] * eb + self.flux[(r, col)] * 0.5 * ub * ub
                    - self.u_boundary[side][r] * bc.u_dt[side];
            }
            g1[r] = a;
            g2[r] = b;
        }
        (g1, g2)
    }

    /// Right-hand sides before the solves, with the boundary columns set to zero.
    pub fn interior_rhs(&self, state: &State) -> (Vec<f64>, Vec<f64>) {
        let zero = State {
            bc: BoundaryValues::default(),
            ..state.clone()
        };
        let eta = zero.full_eta();
        let u = zero.full_u();
        let prod: Vec<f64> = eta.iter().zip(&u).map(|(e, v)| e * v).collect();
        let half_sq: Vec<f64> = u.iter().map(|v| 0.5 * v * v).collect();
        let r1 = (0..self.interior_len())
            .map(|r| -dot(self.advection.row(r), &u) + dot(self.flux.row(r), &prod))
            .collect();
        let r2 = (0..self.interior_len())
            .map(|r| -dot(self.stiff_u.row(r), &eta) + dot(self.flux.row(r), &half_sq))
            .collect();
        (r1, r2)
    }

    pub fn solve_eta(&self, rhs: &[f64]) -> Vec<f64> {
        self.lhs_eta.solve(rhs).expect("conforming length")
    }

    pub fn solve_u(&self, rhs: &[f64]) -> Vec<f64> {
        self.lhs_u.solve(rhs).expect("conforming length")
    }

    /// `(eta', u')` at the interior nodes.
    #[allow(clippy::too_many_arguments)]
    pub fn rhs_into(
        &self,
        t: f64,
        bc: &BoundaryValues,
        eta: &[f64],
        u: &[f64],
        deta: &mut [f64],
        du: &mut [f64],
        scratch: &mut RhsScratch,
    ) -> Result<(), SemidiscreteError> {
        let interior = self.interior_len();
        for got in [eta.len(), u.len(), deta.len(), du.len()] {
            if got != interior {
                return Err(SemidiscreteError::Dimension {
                    expected: interior,
                    got,
                });
            }
        }
        let full = |buf: &mut Vec<f64>, inner: &[f64], ends: [f64; 2]| {
            buf.clear();
            buf.push(ends[0]);
            buf.extend_from_slice(inner);
            buf.push(ends[1]);
        };
        full(&mut scratch.eta_full, eta, bc.eta);
        full(&mut scratch.u_full, u, bc.u);

        let ef = &scratch.eta_full;
        let uf = &scratch.u_full;
        scratch.product.clear();
        scratch.product.extend(ef.iter().zip(uf).map(|(e, v)| e * v));
        for (r, out) in deta.iter_mut().enumerate() {
            *out = -dot(self.advection.row(r), uf) + dot(self.flux.row(r), &scratch.product)
                - self.eta_boundary[0][r] * bc.eta_dt[0]
                - self.eta_boundary[1][r] * bc.eta_dt[1];
        }
        scratch.product.clear();
        scratch.product.extend(uf.iter().map(|v| 0.5 * v * v));
        for (r, out) in du.iter_mut().enumerate() {
            *out = -dot(self.stiff_u.row(r), ef) + dot(self.flux.row(r), &scratch.product)
                - self.u_boundary[0][r] * bc.u_dt[0]
                - self.u_boundary[1][r] * bc.u_dt[1];
        }
        self.lhs_eta.solve_in_place(deta, &mut scratch.solve);
        self.lhs_u.solve_in_place(du, &mut scratch.solve);
        if !deta.iter().chain(du.iter()).all(|v| v.is_finite()) {
            return Err(SemidiscreteError::NonFinite {
                what: "time derivative",
                t,
            });
        }
        Ok(())
    }

    pub fn rhs_eval(&self, state: &State) -> Result<(Vec<f64>, Vec<f64>), SemidiscreteError> {
        if !state.is_finite() {
            return Err(SemidiscreteError::NonFinite {
                what: "state",
                t: state.t,
            });
        }
        let n = self.interior_len();
        let mut deta = vec![0.0; n];
        let mut du = vec![0.0; n];
        let mut scratch = RhsScratch::default();
        self.rhs_into(
            state.t,
            &state.bc,
            &state.eta,
            &state.u,
            &mut deta,
            &mut du,
            &mut scratch,
        )?;
        Ok((deta, du))
    }
}

/// Free-function form of [`AssembledSystem::gamma_rhs`].
pub fn gamma_rhs(sys: &AssembledSystem, state: &State) -> (Vec<f64>, Vec<f64>) {
    sys.gamma_rhs(state)
}

/// Free-function form of [`AssembledSystem::rhs_eval`].
pub fn rhs_eval(sys: &AssembledSystem, state: &State) -> Result<(Vec<f64>, Vec<f64>), SemidiscreteError> {
    sys.rhs_eval(state)
}

/// Nodal interpolation of the initial data; boundary values from `boundary` at `t = 0`.
pub fn initial_state(basis: &JacobiBasis, map: &IntervalMap, data: &InitialData, boundary: &BoundaryData) -> State {
    let n = basis.degree();
    let (eta, u): (Vec<f64>, Vec<f64>) = basis.nodes()[1..n]
        .iter()
        .map(|&x| data.eval(map.to_physical(x)))
        .unzip();
    State {
        eta,
        u,
        t: 0.0,
        bc: boundary.values(map, 0.0),
    }
}

/// The semidiscrete vector field with its boundary data, as an ODE system in `[eta; u]`.
pub struct SemidiscreteProblem {
    sys: Arc<AssembledSystem>,
    boundary: BoundaryData,
    scratch: RhsScratch,
    evaluations: usize,
}

impl SemidiscreteProblem {
    pub fn new(sys: Arc<AssembledSystem>, boundary: BoundaryData) -> Self {
        Self {
            sys,
            boundary,
            scratch: RhsScratch::default(),
            evaluations: 0,
        }
    }

    pub fn system(&self) -> &Arc<AssembledSystem> {
        &self.sys
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn boundary_values(&self, t: f64) -> BoundaryValues {
        self.boundary.values(self.sys.map(), t)
    }

    /// Rebuilds a [`State`] from a packed vector at time `t`.
    pub fn state_at(&self, y: &[f64], t: f64) -> State {
        State::from_packed(y, t, self.boundary_values(t))
    }
}

impl OdeSystem for SemidiscreteProblem {
    fn dim(&self) -> usize {
        2 * self.sys.interior_len()
    }

    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), TimeError> {
        self.evaluations += 1;
        let n = self.sys.interior_len();
        let bc = self.boundary.values(self.sys.map(), t);
        let (eta, u) = y.split_at(n);
        let (deta, du) = dy.split_at_mut(n);
        self.sys
            .rhs_into(t, &bc, eta, u, deta, du, &mut self.scratch)
            .map_err(|e| TimeError::Field {
                t,
                message: e.to_string(),
            })
    }
}
