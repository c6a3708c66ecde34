//! Boussinesq system coefficients, interval mapping, closed-form solutions and
//! the initial/boundary data used by the experiments.
//!
//! The system is
//!
//! ```text
//! eta_t + u_x + (eta u)_x - b eta_xxt = 0
//! u_t + eta_x + u u_x + c eta_xxx - d u_xxt = 0
//! ```

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Points used by the residual gate that every closed form passes at construction.
const GATE_POINTS: usize = 2001;
const GATE_HALF_WIDTH: f64 = 40.0;
const GATE_TIMES: [f64; 3] = [0.0, 0.5, 1.0];
pub const RESIDUAL_GATE_TOL: f64 = 1e-8;
/// Largest boundary/initial mismatch accepted without a warning.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("theta^2 = {value} is outside the admissible range {range}")]
    ThetaOutOfRange { value: f64, range: &'static str },
    #[error("invalid interval [{left}, {right}]")]
    InvalidInterval { left: f64, right: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{family} fails the residual gate: eta-equation {eta:.3e}, u-equation {u:.3e}")]
    ResidualValidation { family: &'static str, eta: f64, u: f64 },
}

/// Coefficients `(b, c, d)` of the `a = 0` system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub theta2: Option<f64>,
}

impl SystemParams {
    pub fn new(b: f64, c: f64, d: f64) -> Result<Self, ModelError> {
        if !(b.is_finite() && c.is_finite() && d.is_finite()) {
            return Err(ModelError::InvalidParameter("coefficients must be finite".into()));
        }
        if b < 0.0 || d < 0.0 || c > 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "need b >= 0, d >= 0, c <= 0; got b = {b}, c = {c}, d = {d}"
            )));
        }
        if b == 0.0 && d == 0.0 {
            return Err(ModelError::InvalidParameter("b and d cannot both vanish".into()));
        }
        Ok(Self { b, c, d, theta2: None })
    }

    /// The coefficient `a` of `u_xxx`; this crate only handles `a = 0`.
    pub fn a(&self) -> f64 {
        0.0
    }
}

/// Bona-Smith member: `b = d = (3 theta^2 - 1)/6`, `c = (2 - 3 theta^2)/3`.
pub fn params_from_theta(theta2: f64) -> Result<SystemParams, ModelError> {
    if !(2.0 / 3.0..=1.0).contains(&theta2) {
        return Err(ModelError::ThetaOutOfRange {
            value: theta2,
            range: "[2/3, 1]",
        });
    }
    let b = (3.0 * theta2 - 1.0) / 6.0;
    let mut c = (2.0 - 3.0 * theta2) / 3.0;
    if theta2 == 2.0 / 3.0 || c > 0.0 {
        c = 0.0;
    }
    Ok(SystemParams {
        b,
        c,
        d: b,
        theta2: Some(theta2),
    })
}

/// The `c = 0` member with `b = (theta^2 - 1/3)/2`, `d = (1 - theta^2)/2`.
pub fn params_b_neq_d(theta2: f64) -> Result<SystemParams, ModelError> {
    if !(theta2 > 1.0 / 3.0 && theta2 < 1.0) {
        return Err(ModelError::ThetaOutOfRange {
            value: theta2,
            range: "(1/3, 1)",
        });
    }
    Ok(SystemParams {
        b: 0.5 * (theta2 - 1.0 / 3.0),
        c: 0.0,
        d: 0.5 * (1.0 - theta2),
        theta2: Some(theta2),
    })
}

/// Affine map between the reference interval `[-1, 1]` and `[left, right]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalMap {
    left: f64,
    right: f64,
}

impl IntervalMap {
    pub fn new(left: f64, right: f64) -> Result<Self, ModelError> {
        if !(left.is_finite() && right.is_finite() && left < right) {
            return Err(ModelError::InvalidInterval { left, right });
        }
        Ok(Self { left, right })
    }

    pub fn reference() -> Self {
        Self { left: -1.0, right: 1.0 }
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    /// Half-length; each physical derivative carries a factor `1/scale`.
    pub fn scale(&self) -> f64 {
        0.5 * (self.right - self.left)
    }

    pub fn shift(&self) -> f64 {
        0.5 * (self.right + self.left)
    }

    pub fn to_physical(&self, xi: f64) -> f64 {
        self.shift() + self.scale() * xi
    }

    pub fn to_reference(&self, x: f64) -> f64 {
        (x - self.shift()) / self.scale()
    }

    pub fn length(&self) -> f64 {
        self.right - self.left
    }
}

/// Values of `sech^2(lambda z)` and its first three derivatives in `z`.
fn sech2_derivatives(lambda: f64, z: f64) -> [f64; 4] {
    let arg = lambda * z;
    let t = arg.tanh();
    let s = {
        let sech = 1.0 / arg.cosh();
        sech * sech
    };
    [
        s,
        -2.0 * lambda * s * t,
        -2.0 * lambda * lambda * s * (1.0 - 3.0 * t * t),
        8.0 * lambda.powi(3) * s * t * (2.0 - 3.0 * t * t),
    ]
}

/// Quadratic `c0 + c1 w + c2 w^2` in the wave profile `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ProfilePolynomial {
    c0: f64,
    c1: f64,
    c2: f64,
}

impl ProfilePolynomial {
    fn derivatives(&self, w: &[f64; 4]) -> [f64; 4] {
        let sq = [
            w[0] * w[0],
            2.0 * w[0] * w[1],
            2.0 * (w[1] * w[1] + w[0] * w[2]),
            2.0 * (3.0 * w[1] * w[2] + w[0] * w[3]),
        ];
        [
            self.c0 + self.c1 * w[0] + self.c2 * sq[0],
            self.c1 * w[1] + self.c2 * sq[1],
            self.c1 * w[2] + self.c2 * sq[2],
            self.c1 * w[3] + self.c2 * sq[3],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionFamily {
    BonaSmithSolitary,
    BbmTraveling,
    BNeqDSolitary,
    Zero,
}

impl SolutionFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::BonaSmithSolitary => "bona-smith solitary wave",
            Self::BbmTraveling => "bbm-bbm traveling wave",
            Self::BNeqDSolitary => "b != d solitary wave",
            Self::Zero => "zero solution",
        }
    }
}

/// Traveling wave `F(x - speed t - offset)` whose components are quadratics in
/// `w = sech^2(lambda z)`; time derivatives follow from `d/dt = -speed d/dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    family: SolutionFamily,
    params: SystemParams,
    eta: ProfilePolynomial,
    u: ProfilePolynomial,
    lambda: f64,
    speed: f64,
    offset: f64,
}

impl ExactSolution {
    pub fn family(&self) -> SolutionFamily {
        self.family
    }

    pub fn params(&self) -> SystemParams {
        self.params
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Inverse width of the `sech^2` profile.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn zero(params: SystemParams) -> Self {
        let p = ProfilePolynomial {
            c0: 0.0,
            c1: 0.0,
            c2: 0.0,
        };
        Self {
            family: SolutionFamily::Zero,
            params,
            eta: p,
            u: p,
            lambda: 1.0,
            speed: 0.0,
            offset: 0.0,
        }
    }

    fn profile(&self, x: f64, t: f64) -> [f64; 4] {
        sech2_derivatives(self.lambda, x - self.speed * t - self.offset)
    }

    /// `[eta, eta_x, eta_xx, eta_xxx]` at `(x, t)`.
    pub fn eta_derivatives(&self, x: f64, t: f64) -> [f64; 4] {
        self.eta.derivatives(&self.profile(x, t))
    }

    /// `[u, u_x, u_xx, u_xxx]` at `(x, t)`.
    pub fn u_derivatives(&self, x: f64, t: f64) -> [f64; 4] {
        self.u.derivatives(&self.profile(x, t))
    }

    pub fn eta(&self, x: f64, t: f64) -> f64 {
        self.eta_derivatives(x, t)[0]
    }

    pub fn u(&self, x: f64, t: f64) -> f64 {
        self.u_derivatives(x, t)[0]
    }

    /// x-derivative of the requested order (0 to 3) of `eta`.
    pub fn eta_dx(&self, x: f64, t: f64, order: usize) -> f64 {
        self.eta_derivatives(x, t)[order]
    }

    pub fn u_dx(&self, x: f64, t: f64, order: usize) -> f64 {
        self.u_derivatives(x, t)[order]
    }

    pub fn eta_dt(&self, x: f64, t: f64) -> f64 {
        -self.speed * self.eta_derivatives(x, t)[1]
    }

    pub fn u_dt(&self, x: f64, t: f64) -> f64 {
        -self.speed * self.u_derivatives(x, t)[1]
    }

    /// Limits of `(eta, u)` as the profile decays.
    pub fn far_field(&self) -> (f64, f64) {
        (self.eta.c0, self.u.c0)
    }

    /// Copy with the varying part of `eta` scaled by `factor`; skips the gate.
    pub fn perturbed_amplitude(&self, factor: f64) -> Self {
        let mut out = *self;
        out.eta.c1 *= factor;
        out.eta.c2 *= factor;
        out
    }

    fn validated(self) -> Result<Self, ModelError> {
        let grid: Vec<f64> = (0..GATE_POINTS)
            .map(|i| self.offset - GATE_HALF_WIDTH + 2.0 * GATE_HALF_WIDTH * i as f64 / (GATE_POINTS - 1) as f64)
            .collect();
        let mut worst = (0.0f64, 0.0f64);
        for &t in &GATE_TIMES {
            let shifted: Vec<f64> = grid.iter().map(|x| x + self.speed * t).collect();
            let (r1, r2) = pde_residual(&self, &self.params, &shifted, t);
            worst = (worst.0.max(r1), worst.1.max(r2));
        }
        if worst.0 <= RESIDUAL_GATE_TOL && worst.1 <= RESIDUAL_GATE_TOL {
            Ok(self)
        } else {
            Err(ModelError::ResidualValidation {
                family: self.family.name(),
                eta: worst.0,
                u: worst.1,
            })
        }
    }
}

/// Solitary wave of the Bona-Smith system for `7/9 < theta^2 < 1`.
pub fn solitary_bona_smith(theta2: f64, x0: f64) -> Result<ExactSolution, ModelError> {
    if !(theta2 > 7.0 / 9.0 && theta2 < 1.0) {
        return Err(ModelError::ThetaOutOfRange {
            value: theta2,
            range: "(7/9, 1)",
        });
    }
    let params = params_from_theta(theta2)?;
    let amplitude = 4.5 * (theta2 - 7.0 / 9.0) / (1.0 - theta2);
    let speed = 4.0 * (theta2 - 2.0 / 3.0) / (2.0 * (1.0 - theta2) * (theta2 - 1.0 / 3.0)).sqrt();
    let lambda = 0.5 * (3.0 * (theta2 - 7.0 / 9.0) / ((theta2 - 1.0 / 3.0) * (theta2 - 2.0 / 3.0))).sqrt();
    let ratio = (2.0 * (1.0 - theta2) / (theta2 - 1.0 / 3.0)).sqrt();
    ExactSolution {
        family: SolutionFamily::BonaSmithSolitary,
        params,
        eta: ProfilePolynomial {
            c0: 0.0,
            c1: amplitude,
            c2: 0.0,
        },
        u: ProfilePolynomial {
            c0: 0.0,
            c1: ratio * amplitude,
            c2: 0.0,
        },
        lambda,
        speed,
        offset: x0,
    }
    .validated()
}

/// Traveling wave of the BBM-BBM system (`b = d = 1/6`, `c = 0`).
///
/// Its far field is the nonzero constant state `(-1 + 4 (cs b rho)^2 / 9, cs (3 - 5 b rho) / 3)`.
pub fn traveling_bbm(rho: f64, cs: f64, x0: f64) -> Result<ExactSolution, ModelError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(ModelError::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    if cs == 0.0 || !cs.is_finite() {
        return Err(ModelError::InvalidParameter(format!("speed must be nonzero, got {cs}")));
    }
    let params = params_from_theta(2.0 / 3.0)?;
    let b = params.b;
    let q = (cs * b * rho).powi(2);
    ExactSolution {
        family: SolutionFamily::BbmTraveling,
        params,
        eta: ProfilePolynomial {
            c0: -1.0 + q * 4.0 / 9.0,
            c1: q * 10.0 / 3.0,
            c2: -q * 5.0,
        },
        u: ProfilePolynomial {
            c0: cs / 3.0 * (3.0 - 5.0 * b * rho),
            c1: 5.0 * cs * b * rho,
            c2: 0.0,
        },
        lambda: 0.5 * rho.sqrt(),
        speed: cs,
        offset: x0,
    }
    .validated()
}

/// `theta^2` of the `b != d` member whose solitary waves are known in closed form.
pub const B_NEQ_D_THETA2: f64 = 7.0 / 9.0;

/// Solitary wave of the `b != d` system with `theta^2 = 7/9`.
pub fn solitary_b_neq_d(eta0: f64, x0: f64) -> Result<ExactSolution, ModelError> {
    let ratio = 3.0 / (eta0 + 3.0);
    if !(eta0 > -3.0) || (1.0..=2.0).contains(&ratio) {
        return Err(ModelError::InvalidParameter(format!(
            "amplitude {eta0} needs eta0 > -3 and 3/(eta0 + 3) outside [1, 2]"
        )));
    }
    let params = params_b_neq_d(B_NEQ_D_THETA2)?;
    let u0 = eta0 * (3.0 / (3.0 + eta0)).sqrt();
    let speed = (3.0 + 2.0 * eta0) / (3.0 * (3.0 + eta0)).sqrt();
    let lambda = 0.5 * (2.0 * eta0 / (params.b * (3.0 + 2.0 * eta0))).sqrt();
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(ModelError::InvalidParameter(format!(
            "no real width for amplitude {eta0}"
        )));
    }
    ExactSolution {
        family: SolutionFamily::BNeqDSolitary,
        params,
        eta: ProfilePolynomial {
            c0: 0.0,
            c1: eta0,
            c2: 0.0,
        },
        u: ProfilePolynomial {
            c0: 0.0,
            c1: u0,
            c2: 0.0,
        },
        lambda,
        speed,
        offset: x0,
    }
    .validated()
}

/// Max-norm residuals of both equations at `grid` for the traveling wave `sol`.
pub fn pde_residual(sol: &ExactSolution, params: &SystemParams, grid: &[f64], t: f64) -> (f64, f64) {
    let cs = sol.speed;
    let mut r_eta = 0.0f64;
    let mut r_u = 0.0f64;
    for &x in grid {
        let e = sol.eta_derivatives(x, t);
        let u = sol.u_derivatives(x, t);
        let eta_t = -cs * e[1];
        let u_t = -cs * u[1];
        let eta_xxt = -cs * e[3];
        let u_xxt = -cs * u[3];
        let first = eta_t + u[1] + e[1] * u[0] + e[0] * u[1] + params.a() * u[3] - params.b * eta_xxt;
        let second = u_t + e[1] + u[0] * u[1] + params.c * e[3] - params.d * u_xxt;
        r_eta = r_eta.max(first.abs());
        r_u = r_u.max(second.abs());
    }
    (r_eta, r_u)
}

/// Dirichlet values and their time derivatives at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryValues {
    pub eta: [f64; 2],
    pub u: [f64; 2],
    pub eta_dt: [f64; 2],
    pub u_dt: [f64; 2],
}

pub type BoundaryFn = Arc<dyn Fn(f64) -> BoundaryValues + Send + Sync>;

#[derive(Clone)]
pub enum BoundaryData {
    Homogeneous,
    /// Constant values `[left, right]`.
    Constant {
        eta: [f64; 2],
        u: [f64; 2],
    },
    /// Traces of a closed-form solution at the interval ends.
    Exact(ExactSolution),
    Custom(BoundaryFn),
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Homogeneous => write!(f, "Homogeneous"),
            Self::Constant { eta, u } => write!(f, "Constant {{ eta: {eta:?}, u: {u:?} }}"),
            Self::Exact(sol) => write!(f, "Exact({})", sol.family().name()),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl BoundaryData {
    pub fn values(&self, map: &IntervalMap, t: f64) -> BoundaryValues {
        match self {
            Self::Homogeneous => BoundaryValues::default(),
            Self::Constant { eta, u } => BoundaryValues {
                eta: *eta,
                u: *u,
                ..Default::default()
            },
            Self::Exact(sol) => {
                let ends = [map.left(), map.right()];
                BoundaryValues {
                    eta: ends.map(|x| sol.eta(x, t)),
                    u: ends.map(|x| sol.u(x, t)),
                    eta_dt: ends.map(|x| sol.eta_dt(x, t)),
                    u_dt: ends.map(|x| sol.u_dt(x, t)),
                }
            }
            Self::Custom(f) => f(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonsmoothKind {
    PiecewiseQuadratic,
    Tent,
}

pub type InitialFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

#[derive(Clone)]
pub enum InitialData {
    Exact(ExactSolution),
    Bore { eta0: f64, u0: f64, kappa: f64 },
    Nonsmooth(NonsmoothKind),
    Custom(InitialFn),
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exact(sol) => write!(f, "Exact({})", sol.family().name()),
            Self::Bore { eta0, u0, kappa } => write!(f, "Bore {{ eta0: {eta0}, u0: {u0}, kappa: {kappa} }}"),
            Self::Nonsmooth(kind) => write!(f, "Nonsmooth({kind:?})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl InitialData {
    /// `(eta, u)` at time zero.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            Self::Exact(sol) => (sol.eta(x, 0.0), sol.u(x, 0.0)),
            Self::Bore { eta0, u0, kappa } => {
                let step = 0.5 * (1.0 - (kappa * x).tanh());
                (eta0 * step, u0 * step)
            }
            Self::Nonsmooth(NonsmoothKind::PiecewiseQuadratic) => {
                let v = if x <= 0.0 {
                    1.0 + 2.0 * x + x * x
                } else {
                    1.0 + 2.0 * x - 3.0 * x * x
                };
                (v, v)
            }
            Self::Nonsmooth(NonsmoothKind::Tent) => (1.0 - x.abs(), 0.0),
            Self::Custom(f) => f(x),
        }
    }
}

/// Left-state velocity `eta0/(eta0 + 1) sqrt((2 + 3 eta0 + eta0^2)/2)` of the bore.
pub fn bore_velocity(eta0: f64) -> f64 {
    eta0 / (eta0 + 1.0) * (0.5 * (2.0 + 3.0 * eta0 + eta0 * eta0)).sqrt()
}

/// Smoothed step from `(eta0, u0)` on the left to rest on the right.
pub fn bore_data(eta0: f64, kappa: f64) -> Result<(InitialData, BoundaryData), ModelError> {
    if !(eta0 > 0.0 && kappa > 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "bore needs eta0 > 0 and kappa > 0, got {eta0} and {kappa}"
        )));
    }
    let u0 = bore_velocity(eta0);
    Ok((
        InitialData::Bore { eta0, u0, kappa },
        BoundaryData::Constant {
            eta: [eta0, 0.0],
            u: [u0, 0.0],
        },
    ))
}

pub fn nonsmooth_data(kind: NonsmoothKind) -> InitialData {
    InitialData::Nonsmooth(kind)
}

/// Largest mismatch between boundary values and initial data at the ends.
pub fn compatibility_mismatch(initial: &InitialData, boundary: &BoundaryData, map: &IntervalMap) -> f64 {
    let bv = boundary.values(map, 0.0);
    let (el, ul) = initial.eval(map.left());
    let (er, ur) = initial.eval(map.right());
    [el - bv.eta[0], er - bv.eta[1], ul - bv.u[0], ur - bv.u[1]]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn bona_smith_coefficients() {
        let p = params_from_theta(2.0 / 3.0).unwrap();
        assert_relative_eq!(p.b, 1.0 / 6.0, max_relative = 1e-15);
        assert_eq!(p.c, 0.0);
        assert_eq!(p.b, p.d);
        let p = params_from_theta(1.0).unwrap();
        assert_relative_eq!(p.b, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(p.c, -1.0 / 3.0, max_relative = 1e-15);
        let p = params_from_theta(9.0 / 11.0).unwrap();
        assert_relative_eq!(p.b, 8.0 / 33.0, max_relative = 1e-15);
        assert_relative_eq!(p.c, -5.0 / 33.0, max_relative = 1e-14);
        assert!(params_from_theta(0.5).is_err());
        assert!(params_from_theta(1.01).is_err());
        assert_eq!(p.a(), 0.0);
    }

    #[test]
    fn b_neq_d_coefficients() {
        let p = params_b_neq_d(7.0 / 9.0).unwrap();
        assert_relative_eq!(p.b, 2.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(p.d, 1.0 / 9.0, max_relative = 1e-15);
        assert_eq!(p.c, 0.0);
        let p = params_b_neq_d(1.0 / 3.0 + 1e-12).unwrap();
        assert!(p.b > 0.0 && p.b < 1e-11);
        let p = params_b_neq_d(2.0 / 3.0).unwrap();
        assert_relative_eq!(p.b, 1.0 / 6.0, max_relative = 1e-15);
        assert_relative_eq!(p.d, 1.0 / 6.0, max_relative = 1e-15);
        assert!(params_b_neq_d(1.0 / 3.0).is_err());
        assert!(params_b_neq_d(1.0).is_err());
    }

    #[test]
    fn generic_params_validation() {
        assert!(SystemParams::new(0.2, -0.1, 0.2).is_ok());
        assert!(SystemParams::new(0.2, 0.1, 0.2).is_err());
        assert!(SystemParams::new(0.0, 0.0, 0.0).is_err());
        assert!(SystemParams::new(-0.1, 0.0, 0.2).is_err());
    }

    #[test]
    fn interval_map_round_trip() {
        let map = IntervalMap::new(-14.0, 50.0).unwrap();
        assert_eq!(map.scale(), 32.0);
        assert_eq!(map.shift(), 18.0);
        assert_eq!(map.to_physical(-1.0), -14.0);
        assert_eq!(map.to_physical(1.0), 50.0);
        for &xi in &[-1.0, -0.3, 0.0, 0.77, 1.0] {
            assert!((map.to_reference(map.to_physical(xi)) - xi).abs() < 1e-15);
        }
        assert!(IntervalMap::new(1.0, 1.0).is_err());
        assert!(IntervalMap::new(2.0, 1.0).is_err());
    }

    #[test]
    fn bona_smith_solitary_parameters() {
        let s = solitary_bona_smith(9.0 / 11.0, 0.0).unwrap();
        assert_relative_eq!(s.eta(0.0, 0.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(s.u(0.0, 0.0), 3f64.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(s.speed(), 5.0 * 3f64.sqrt() / 6.0, max_relative = 1e-14);
        assert_relative_eq!(s.lambda(), 165f64.sqrt() / 20.0, max_relative = 1e-14);
        assert!(solitary_bona_smith(7.0 / 9.0, 0.0).is_err());
        assert!(solitary_bona_smith(1.0, 0.0).is_err());
    }

    #[test]
    fn bbm_traveling_far_field() {
        let s = traveling_bbm(2.0, 1.0, 0.0).unwrap();
        let (e, u) = s.far_field();
        assert_relative_eq!(e, -1.0 + 4.0 / 81.0, max_relative = 1e-14);
        assert_relative_eq!(u, 4.0 / 9.0, max_relative = 1e-14);
        assert!((s.eta(200.0, 0.0) - e).abs() < 1e-14);
        assert!((s.u(-200.0, 0.0) - u).abs() < 1e-14);
        assert!(traveling_bbm(-1.0, 1.0, 0.0).is_err());
        assert!(traveling_bbm(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn traveling_wave_translation() {
        let s = traveling_bbm(2.0, 1.0, 0.5).unwrap();
        let delta = 0.37;
        for &x in &[-3.0, 0.0, 1.2, 4.4] {
            let t = 1.1;
            assert_relative_eq!(
                s.eta(x, t),
                s.eta(x - s.speed() * delta, t - delta),
                max_relative = 1e-13
            );
            assert_relative_eq!(s.u(x, t), s.u(x - s.speed() * delta, t - delta), max_relative = 1e-13);
        }
    }

    #[test]
    fn b_neq_d_solitary_parameters() {
        let s = solitary_b_neq_d(1.0, 0.0).unwrap();
        assert_relative_eq!(s.u(0.0, 0.0), 3f64.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(s.speed(), 5.0 / 12f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(s.lambda(), 0.5 * 1.8f64.sqrt(), max_relative = 1e-14);
        assert!(solitary_b_neq_d(-1.0, 0.0).is_err());
        assert!(solitary_b_neq_d(-3.5, 0.0).is_err());
    }

    #[test]
    fn sech2_derivatives_match_finite_differences() {
        let lambda = 0.73;
        let h = 1e-4;
        for &z in &[-2.1, -0.4, 0.0, 0.9, 3.3] {
            let d = sech2_derivatives(lambda, z);
            let p = sech2_derivatives(lambda, z + h);
            let m = sech2_derivatives(lambda, z - h);
            for k in 0..3 {
                let fd = (p[k] - m[k]) / (2.0 * h);
                assert!((fd - d[k + 1]).abs() < 1e-6, "order {} at z = {z}", k + 1);
            }
        }
        assert_eq!(sech2_derivatives(1.0, 1000.0)[0], 0.0);
    }

    #[test]
    fn residual_gate_for_all_families() {
        let families = [
            solitary_bona_smith(9.0 / 11.0, 0.0).unwrap(),
            solitary_bona_smith(0.9, 3.0).unwrap(),
            traveling_bbm(2.0, 1.0, 0.0).unwrap(),
            solitary_b_neq_d(1.0, 0.0).unwrap(),
        ];
        let xs = grid(-30.0, 30.0, 2001);
        for s in &families {
            for &t in &[0.0, 0.5, 1.0] {
                let (r1, r2) = pde_residual(s, &s.params(), &xs, t);
                assert!(r1 <= 1e-8 && r2 <= 1e-8, "{:?}: {r1:e} {r2:e}", s.family());
            }
        }
    }

    #[test]
    fn residual_of_zero_solution_vanishes() {
        let p = params_from_theta(0.9).unwrap();
        let z = ExactSolution::zero(p);
        assert_eq!(pde_residual(&z, &p, &grid(-5.0, 5.0, 101), 0.3), (0.0, 0.0));
    }

    #[test]
    fn perturbed_amplitude_is_detected() {
        let xs = grid(-30.0, 30.0, 2001);
        for s in [
            solitary_bona_smith(9.0 / 11.0, 0.0).unwrap(),
            traveling_bbm(2.0, 1.0, 0.0).unwrap(),
            solitary_b_neq_d(1.0, 0.0).unwrap(),
        ] {
            let bad = s.perturbed_amplitude(1.01);
            let (r1, r2) = pde_residual(&bad, &bad.params(), &xs, 0.0);
            assert!(r1.max(r2) >= 1e-4, "{:?}: {r1:e} {r2:e}", s.family());
            assert!(matches!(bad.validated(), Err(ModelError::ResidualValidation { .. })));
        }
    }

    #[test]
    fn literal_lambda_typo_fails_the_gate() {
        // the rejected reading (theta^2 - 1) in place of (theta^2 - 2/3)
        let theta2: f64 = 0.85;
        let good = solitary_bona_smith(theta2, 0.0).unwrap();
        let inner = 3.0 * (theta2 - 7.0 / 9.0) / ((theta2 - 1.0 / 3.0) * (1.0 - theta2));
        let mut wrong = good;
        wrong.lambda = 0.5 * inner.sqrt();
        let (r1, r2) = pde_residual(&wrong, &wrong.params(), &grid(-30.0, 30.0, 2001), 0.0);
        assert!(r1.max(r2) > 1e-4);
    }

    #[test]
    fn bore_examples() {
        assert_relative_eq!(bore_velocity(0.25), 0.2 * 1.40625f64.sqrt(), max_relative = 1e-15);
        assert!((bore_velocity(0.25) - 0.23717).abs() < 1e-5);
        let (init, bc) = bore_data(0.25, 0.7).unwrap();
        assert!((init.eval(-1e3).0 - 0.25).abs() < 1e-15);
        let map = IntervalMap::new(-14.0, 50.0).unwrap();
        let mismatch = compatibility_mismatch(&init, &bc, &map);
        let tail = 0.25 * (-2.0f64 * 0.7 * 14.0).exp();
        assert!(mismatch <= 1e-8);
        assert_relative_eq!(mismatch, tail, max_relative = 1e-3);
        let v = bc.values(&map, 3.0);
        assert_eq!(v.eta_dt, [0.0, 0.0]);
        assert_eq!(v.u, [bore_velocity(0.25), 0.0]);
        assert!(bore_data(0.0, 0.7).is_err());
        assert!(bore_data(0.25, -1.0).is_err());
    }

    #[test]
    fn nonsmooth_examples() {
        let pq = nonsmooth_data(NonsmoothKind::PiecewiseQuadratic);
        assert_eq!(pq.eval(0.0), (1.0, 1.0));
        assert_eq!(pq.eval(-1.0), (0.0, 0.0));
        assert_eq!(pq.eval(1.0), (0.0, 0.0));
        // second derivative jumps from 2 to -6 across the origin
        let h = 1e-3;
        let left = (pq.eval(-2.0 * h).0 - 2.0 * pq.eval(-h).0 + pq.eval(-1e-14).0) / (h * h);
        let right = (pq.eval(2.0 * h).0 - 2.0 * pq.eval(h).0 + pq.eval(1e-14).0) / (h * h);
        assert!((left - 2.0).abs() < 1e-6 && (right + 6.0).abs() < 1e-6);
        let tent = nonsmooth_data(NonsmoothKind::Tent);
        assert_eq!(tent.eval(0.0), (1.0, 0.0));
        assert_eq!(tent.eval(1.0), (0.0, 0.0));
        assert_eq!(tent.eval(-1.0), (0.0, 0.0));
    }

    #[test]
    fn exact_boundary_traces() {
        let s = traveling_bbm(2.0, 1.0, 0.0).unwrap();
        let map = IntervalMap::new(-16.0, 16.0).unwrap();
        let bc = BoundaryData::Exact(s);
        let v = bc.values(&map, 1.0);
        assert_eq!(v.eta[0], s.eta(-16.0, 1.0));
        assert_eq!(v.u_dt[1], s.u_dt(16.0, 1.0));
        let init = InitialData::Exact(s);
        assert_eq!(compatibility_mismatch(&init, &bc, &map), 0.0);
    }
}
