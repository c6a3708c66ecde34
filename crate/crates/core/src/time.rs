//! Two-stage singly diagonally implicit Runge-Kutta schemes with fixed-point
//! stage solves, and the linear stability/dispersion diagnostics.
//!
//! Tableau:
//!
//! ```text
//!  gamma     | gamma        0
//!  1 - gamma | 1 - 2 gamma  gamma
//!  ----------+--------------------
//!            | 1/2          1/2
//! ```

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeError {
    #[error("vector field failed at t = {t}: {message}")]
    Field { t: f64, message: String },
    #[error("stage {stage} of step {step} did not converge in {iterations} iterations (increment {increment:.3e}); try a smaller k")]
    StageNotConverged {
        step: usize,
        stage: usize,
        iterations: usize,
        increment: f64,
    },
    #[error("stage {stage} of step {step} diverges (increment {increment:.3e} after {iterations} iterations); try a smaller k")]
    StageDiverged {
        step: usize,
        stage: usize,
        iterations: usize,
        increment: f64,
    },
    #[error("invalid integration plan: {0}")]
    InvalidPlan(String),
    #[error("z = {0} is a pole of the stability function")]
    Pole(Complex64),
}

/// Right-hand side `y' = F(t, y)` of an autonomous-in-structure ODE system.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), TimeError>;
}

/// Closure adaptor for small systems.
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> FnSystem<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: FnMut(f64, &[f64], &mut [f64])> OdeSystem for FnSystem<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), TimeError> {
        (self.f)(t, y, dy);
        Ok(())
    }
}

pub const MIDPOINT_GAMMA: f64 = 0.5;
/// `(3 + sqrt 3) / 6`.
pub const THIRD_ORDER_GAMMA: f64 = 0.788_675_134_594_812_9;
pub const DEFAULT_STAGE_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_STAGE_ITERS: usize = 100;
/// Consecutive increment growths that count as divergence.
const GROWTH_LIMIT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdirkScheme {
    pub gamma: f64,
    pub order: u8,
    pub stage_tol: f64,
    pub max_stage_iters: usize,
}

impl SdirkScheme {
    /// Implicit midpoint rule, order 2.
    pub fn midpoint() -> Self {
        Self {
            gamma: MIDPOINT_GAMMA,
            order: 2,
            stage_tol: DEFAULT_STAGE_TOL,
            max_stage_iters: DEFAULT_MAX_STAGE_ITERS,
        }
    }

    /// `gamma = (3 + sqrt 3)/6`, order 3.
    pub fn third_order() -> Self {
        Self {
            gamma: THIRD_ORDER_GAMMA,
            order: 3,
            ..Self::midpoint()
        }
    }

    /// Preset whose `gamma` matches the argument to 1e-12, if any.
    pub fn from_gamma(gamma: f64) -> Option<Self> {
        [Self::midpoint(), Self::third_order()]
            .into_iter()
            .find(|s| (s.gamma - gamma).abs() < 1e-12)
    }

    pub fn stage_abscissae(&self) -> [f64; 2] {
        [self.gamma, 1.0 - self.gamma]
    }

    pub fn tableau(&self) -> ([[f64; 2]; 2], [f64; 2]) {
        let g = self.gamma;
        ([[g, 0.0], [1.0 - 2.0 * g, g]], [0.5, 0.5])
    }
}

/// Iteration counts of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub stage_iters: [usize; 2],
}

/// Reusable buffers for [`sdirk_step`].
#[derive(Debug, Clone, Default)]
pub struct StepWorkspace {
    stage: Vec<f64>,
    next: Vec<f64>,
    base: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    /// `F` at the last accepted second stage, reused as a predictor.
    last_f: Option<Vec<f64>>,
}

impl StepWorkspace {
    pub fn new(dim: usize) -> Self {
        Self {
            stage: vec![0.0; dim],
            next: vec![0.0; dim],
            base: vec![0.0; dim],
            f1: vec![0.0; dim],
            f2: vec![0.0; dim],
            last_f: None,
        }
    }

    fn ensure(&mut self, dim: usize) {
        if self.stage.len() != dim {
            *self = Self::new(dim);
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `Y = base + h F(t, Y)` by fixed-point iteration starting from `stage`.
/// On success `stage = base + h f_out`, with `f_out` the field at the previous iterate.
#[allow(clippy::too_many_arguments)]
fn picard_stage(
    system: &mut dyn OdeSystem,
    scheme: &SdirkScheme,
    t: f64,
    h: f64,
    base: &[f64],
    stage: &mut Vec<f64>,
    next: &mut Vec<f64>,
    f_out: &mut [f64],
    ids: (usize, usize),
) -> Result<usize, TimeError> {
    let mut previous = f64::INFINITY;
    let mut growths = 0;
    for iter in 1..=scheme.max_stage_iters {
        system.eval(t, stage, f_out)?;
        for ((n, b), f) in next.iter_mut().zip(base).zip(f_out.iter()) {
            *n = b + h * f;
        }
        let increment = next
            .iter()
            .zip(stage.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(stage, next);
        if !increment.is_finite() {
            return Err(TimeError::StageDiverged {
                step: ids.0,
                stage: ids.1,
                iterations: iter,
                increment,
            });
        }
        if increment <= scheme.stage_tol * max_abs(stage).max(1.0) {
            // stage = base + h f_out holds exactly for the last evaluation
            return Ok(iter);
        }
        if increment > previous {
            growths += 1;
            if growths >= GROWTH_LIMIT {
                return Err(TimeError::StageDiverged {
                    step: ids.0,
                    stage: ids.1,
                    iterations: iter,
                    increment,
                });
            }
        } else {
            growths = 0;
        }
        previous = increment;
        if iter == scheme.max_stage_iters {
            return Err(TimeError::StageNotConverged {
                step: ids.0,
                stage: ids.1,
                iterations: iter,
                increment,
            });
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Advances `y` from `t` to `t + k` in place.
pub fn sdirk_step(
    system: &mut dyn OdeSystem,
    scheme: &SdirkScheme,
    t: f64,
    k: f64,
    y: &mut [f64],
    work: &mut StepWorkspace,
    step_index: usize,
) -> Result<StepStats, TimeError> {
    let dim = y.len();
    work.ensure(dim);
    let g = scheme.gamma;
    let [c1, c2] = scheme.stage_abscissae();

    // stage 1: Y1 = y + g k F(Y1)
    match &work.last_f {
        Some(f) => {
            for ((s, yi), fi) in work.stage.iter_mut().zip(y.iter()).zip(f) {
                *s = yi + c1 * k * fi;
            }
        }
        None => work.stage.copy_from_slice(y),
    }
    let it1 = picard_stage(
        system,
        scheme,
        t + c1 * k,
        g * k,
        y,
        &mut work.stage,
        &mut work.next,
        &mut work.f1,
        (step_index, 1),
    )?;

    // stage 2: Y2 = y + (1 - 2g) k F(Y1) + g k F(Y2)
    for ((b, yi), f1) in work.base.iter_mut().zip(y.iter()).zip(&work.f1) {
        *b = yi + (1.0 - 2.0 * g) * k * f1;
    }
    for ((s, yi), f1) in work.stage.iter_mut().zip(y.iter()).zip(&work.f1) {
        *s = yi + c2 * k * f1;
    }
    let base = std::mem::take(&mut work.base);
    let it2 = picard_stage(
        system,
        scheme,
        t + c2 * k,
        g * k,
        &base,
        &mut work.stage,
        &mut work.next,
        &mut work.f2,
        (step_index, 2),
    );
    work.base = base;
    let it2 = it2?;

    for ((yi, f1), f2) in y.iter_mut().zip(&work.f1).zip(&work.f2) {
        *yi += 0.5 * k * (f1 + f2);
    }
    match &mut work.last_f {
        Some(f) => f.copy_from_slice(&work.f2),
        None => work.last_f = Some(work.f2.clone()),
    }
    Ok(StepStats {
        stage_iters: [it1, it2],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationPlan {
    pub k: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
}

impl IntegrationPlan {
    pub fn new(k: f64, t_end: f64) -> Result<Self, TimeError> {
        Self::with_snapshots(k, t_end, Vec::new())
    }

    pub fn with_snapshots(k: f64, t_end: f64, snapshot_times: Vec<f64>) -> Result<Self, TimeError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(TimeError::InvalidPlan(format!("time step must be positive, got {k}")));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(TimeError::InvalidPlan(format!(
                "final time must be nonnegative, got {t_end}"
            )));
        }
        if let Some(bad) = snapshot_times.iter().find(|&&s| !(0.0..=t_end).contains(&s)) {
            return Err(TimeError::InvalidPlan(format!(
                "snapshot time {bad} outside [0, {t_end}]"
            )));
        }
        Ok(Self {
            k,
            t_end,
            snapshot_times,
        })
    }

    /// Step sizes: uniform when `t_end / k` is an integer up to rounding,
    /// otherwise full steps followed by one shorter step.
    pub fn steps(&self) -> Vec<f64> {
        if self.t_end == 0.0 {
            return Vec::new();
        }
        let ratio = self.t_end / self.k;
        let rounded = ratio.round();
        if rounded >= 1.0 && (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            return vec![self.t_end / rounded; rounded as usize];
        }
        let full = ratio.floor() as usize;
        let mut steps = vec![self.k; full];
        steps.push(self.t_end - full as f64 * self.k);
        steps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub requested: f64,
    pub t: f64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationResult {
    pub t: f64,
    pub y: Vec<f64>,
    pub steps: usize,
    pub max_stage_iters: usize,
    pub total_stage_iters: usize,
    pub snapshots: Vec<Snapshot>,
}

/// Repeated [`sdirk_step`] from `t0`; snapshots land on the nearest step boundary.
pub fn integrate(
    system: &mut dyn OdeSystem,
    scheme: &SdirkScheme,
    y0: &[f64],
    t0: f64,
    plan: &IntegrationPlan,
) -> Result<IntegrationResult, TimeError> {
    let steps = plan.steps();
    let mut times = Vec::with_capacity(steps.len() + 1);
    times.push(0.0);
    for h in &steps {
        times.push(times.last().unwrap() + h);
    }
    let snapshot_steps: Vec<usize> = plan
        .snapshot_times
        .iter()
        .map(|&s| {
            times
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - s).abs().total_cmp(&(b.1 - s).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        })
        .collect();

    let mut y = y0.to_vec();
    let mut work = StepWorkspace::new(y.len());
    let mut snapshots = Vec::new();
    let record = |index: usize, y: &[f64], out: &mut Vec<Snapshot>| {
        for (req, &at) in plan.snapshot_times.iter().zip(&snapshot_steps) {
            if at == index {
                out.push(Snapshot {
                    requested: *req,
                    t: t0 + times[index],
                    y: y.to_vec(),
                });
            }
        }
    };
    record(0, &y, &mut snapshots);
    let mut max_iters = 0;
    let mut total = 0;
    for (n, h) in steps.iter().enumerate() {
        let stats = sdirk_step(system, scheme, t0 + times[n], *h, &mut y, &mut work, n)?;
        max_iters = max_iters.max(stats.stage_iters[0].max(stats.stage_iters[1]));
        total += stats.stage_iters[0] + stats.stage_iters[1];
        record(n + 1, &y, &mut snapshots);
    }
    Ok(IntegrationResult {
        t: t0 + plan.t_end,
        y,
        steps: steps.len(),
        max_stage_iters: max_iters,
        total_stage_iters: total,
        snapshots,
    })
}

/// `R(z) = 1 + z b^T (I - zA)^{-1} 1`.
pub fn stability_function(scheme: &SdirkScheme, z: Complex64) -> Result<Complex64, TimeError> {
    let g = scheme.gamma;
    let one = Complex64::new(1.0, 0.0);
    let den = one - g * z;
    if den.norm() < 1e-14 {
        return Err(TimeError::Pole(z));
    }
    let k1 = one / den;
    let k2 = (one + (1.0 - 2.0 * g) * z * k1) / den;
    Ok(one + 0.5 * z * (k1 + k2))
}

fn stability_on_axis(scheme: &SdirkScheme, y: f64) -> Complex64 {
    // 1 - i gamma y never vanishes for real y
    stability_function(scheme, Complex64::new(0.0, y)).expect("no poles on the imaginary axis")
}

/// Phase error `y - arg R(iy)`, with the argument unwrapped continuously from 0.
pub fn dispersion_error(scheme: &SdirkScheme, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let pieces = (y.abs() / 0.1).ceil().max(1.0) as usize;
    let mut phase = 0.0;
    let mut prev = Complex64::new(1.0, 0.0);
    for i in 1..=pieces {
        let r = stability_on_axis(scheme, y * i as f64 / pieces as f64);
        phase += (r / prev).arg();
        prev = r;
    }
    y - phase
}

/// `|R(iy)| - 1`.
pub fn amplification_defect(scheme: &SdirkScheme, y: f64) -> f64 {
    stability_on_axis(scheme, y).norm() - 1.0
}

/// Least-squares slope of `log|v|` against `log x`.
pub fn loglog_slope(x: &[f64], v: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(v).map(|(a, b)| (a.ln(), b.abs().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-spaced samples of `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Empirical order of `|Phi(y)|` over `[1e-3, 1e-1]`.
pub fn dispersion_slope(scheme: &SdirkScheme) -> f64 {
    let ys = log_space(1e-3, 1e-1, 21);
    let phi: Vec<f64> = ys.iter().map(|&y| dispersion_error(scheme, y)).collect();
    loglog_slope(&ys, &phi)
}

/// Observed order on `y' = lambda y`, `y(0) = 1`, over `[0, t_end]` from
/// successive halvings of `k0`.
pub fn scalar_convergence_order(
    scheme: &SdirkScheme,
    lambda: f64,
    t_end: f64,
    k0: f64,
    levels: usize,
) -> Result<Vec<f64>, TimeError> {
    let mut errors = Vec::with_capacity(levels);
    for level in 0..levels {
        let k = k0 / 2f64.powi(level as i32);
        let mut sys = FnSystem::new(1, move |_t, y: &[f64], dy: &mut [f64]| dy[0] = lambda * y[0]);
        let result = integrate(&mut sys, scheme, &[1.0], 0.0, &IntegrationPlan::new(k, t_end)?)?;
        errors.push((result.y[0] - (lambda * t_end).exp()).abs());
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}
