//! The minimizing-movement (proximal) time stepper.
//!
//! One step from a state `sigma` with step size `h` minimizes
//!
//! ```text
//! I(mu) = W2^2(sigma, mu) / (2h) + E(mu)
//! ```
//!
//! over admissible states. In quantile coordinates the problem becomes a
//! smooth convex program: writing the interior as nodes X_0 < ... < X_N at
//! equal mass levels and the walls as L <= X_0, X_N <= R, the objective is
//!
//! ```text
//!   (1/2h) [ beta*(L - Ls)^2 + sum_i dm*(Xbar_i - Xbar_s_i)^2 + beta*(R - Rs)^2 ]
//! + sum_i dm * ( -log((X_{i+1} - X_i)/dm) )        (entropy of the gaps)
//! + alpha * (R - L) ,
//! ```
//!
//! with `Xbar_i` the midpoint of cell i and `s` marking the previous state.
//! The `-log` terms are an interior barrier: any candidate with a collapsed
//! gap has infinite objective, so monotonicity never needs to be imposed
//! explicitly, only preserved by the line search. The two wall constraints
//! are handled by an active set: when a wall is pinned (`L = X_0`), the wall
//! variable is eliminated and its quadratic folds into the corner of the
//! (tridiagonal) Hessian; when free, the wall decouples completely and its
//! optimum is `Ls + alpha*h/beta` in closed form. Each active-set
//! configuration is solved by a damped Newton iteration with backtracking
//! until both monotonicity and objective decrease hold.
//!
//! Because the step genuinely minimizes, the chain inherits the exact
//! discrete dissipation inequality `E(mu_{i+1}) + W2^2/(2h) <= E(mu_i)`,
//! which downstream certificates rely on.

use serde::{Deserialize, Serialize};

use crate::energy;
use crate::error::{Error, Result};
use crate::measure::{GMeasure, ModelParams, QuantileRep};
use crate::testfn::{self, TestFunction};
use crate::transport;

/// Knobs of the proximal stepper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Time step of the minimizing-movement scheme.
    pub h: f64,
    /// Number of equal-mass quantile cells carried by the solver.
    pub n: usize,
    /// Convergence threshold on the sup norm of the reduced gradient.
    pub newton_tol: f64,
    /// Iteration budget for each inner Newton solve.
    pub max_iters: usize,
    /// Backtracking factor of the line search, in (0, 1).
    pub linesearch_shrink: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            n: 256,
            newton_tol: 1e-10,
            max_iters: 50,
            linesearch_shrink: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidParams(format!(
                "step size h must be positive, got {}",
                self.h
            )));
        }
        if self.n < 4 {
            return Err(Error::InvalidParams(format!(
                "need at least 4 quantile cells, got {}",
                self.n
            )));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "newton_tol must be positive, got {}",
                self.newton_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be at least 1".into()));
        }
        if !(self.linesearch_shrink > 0.0 && self.linesearch_shrink < 1.0) {
            return Err(Error::InvalidParams(format!(
                "linesearch_shrink must lie in (0, 1), got {}",
                self.linesearch_shrink
            )));
        }
        Ok(())
    }
}

/// What one proximal step did, in the solver's own (quantile-form)
/// quantities, so the reported inequalities are exact properties of the
/// discrete chain rather than resampling approximations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Squared step length `beta*dL^2 + sum dm*(Xbar - Xbar_s)^2 + beta*dR^2`.
    pub w2_sq_step: f64,
    /// Quantile-form energy of the starting state.
    pub energy_before: f64,
    /// Quantile-form energy of the minimizer; satisfies
    /// `energy_after + w2_sq_step/(2h) <= energy_before` by construction.
    pub energy_after: f64,
    /// Total inner Newton iterations across active-set rounds.
    pub newton_iters: usize,
    /// Largest stationarity residual over the standard test-function corpus.
    pub el_residual_max: f64,
    /// Whether the left/right wall constraint is active at the minimizer.
    pub active_constraints: (bool, bool),
}

/// A time-discrete run: states at `times`, per-step diagnostics (empty for
/// trajectories produced by the reference solver, which has no proximal
/// step), and the configuration that produced them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GMeasure>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub params: ModelParams,
    pub config: SolverConfig,
}

impl Trajectory {
    /// State index holding at time `t` under the piecewise-constant reading
    /// (the state at the largest grid time not exceeding `t`).
    pub fn index_at(&self, t: f64) -> usize {
        match self
            .times
            .binary_search_by(|v| v.partial_cmp(&t).expect("finite times"))
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1).min(self.states.len() - 1),
        }
    }

    /// Index of the stored time closest to `t`; robust against the
    /// accumulated rounding of incrementally summed time grids.
    pub fn index_nearest(&self, t: f64) -> usize {
        let i = match self
            .times
            .binary_search_by(|v| v.partial_cmp(&t).expect("finite times"))
        {
            Ok(i) => return i,
            Err(i) => i,
        };
        if i == 0 {
            return 0;
        }
        if i >= self.times.len() {
            return self.times.len() - 1;
        }
        if (t - self.times[i - 1]).abs() <= (self.times[i] - t).abs() {
            i - 1
        } else {
            i
        }
    }
}

/// Stationarity residual of one step against one test function: the
/// measured left-hand side and the theoretical bound it must respect,
/// `lhs <= sup|zeta''| * W2^2(sigma, mu) / (2h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElResidual {
    pub lhs: f64,
    pub bound: f64,
}

/// Quantile-form energy: gap entropy plus interface term. Agrees with the
/// Eulerian energy of the state the quantile view represents, and is the
/// exact quantity the proximal step minimizes.
pub fn quantile_energy(q: &QuantileRep, params: &ModelParams) -> f64 {
    let dm = q.delta_m();
    let mut s = 0.0;
    for w in q.x().windows(2) {
        s -= dm * ((w[1] - w[0]) / dm).ln();
    }
    s + params.alpha * (q.r() - q.l())
}

/// Quantile-form squared distance: wall terms plus the mean squared
/// midpoint displacement. This is the metric the proximal objective
/// carries; it agrees with [`transport::w2_squared`] to second order in 1/N.
pub fn quantile_w2_squared(q0: &QuantileRep, q1: &QuantileRep) -> Result<f64> {
    if q0.beta() != q1.beta() {
        return Err(Error::BetaMismatch {
            b0: q0.beta(),
            b1: q1.beta(),
        });
    }
    if q0.n_cells() != q1.n_cells() {
        return Err(Error::InvalidParams(format!(
            "quantile resolutions differ: {} vs {}",
            q0.n_cells(),
            q1.n_cells()
        )));
    }
    let dm = q0.delta_m();
    let beta = q0.beta();
    let mut s = 0.0;
    for (w0, w1) in q0.x().windows(2).zip(q1.x().windows(2)) {
        let d = 0.5 * (w0[0] + w0[1]) - 0.5 * (w1[0] + w1[1]);
        s += dm * d * d;
    }
    let dl = q0.l() - q1.l();
    let dr = q0.r() - q1.r();
    Ok(beta * dl * dl + s + beta * dr * dr)
}

/// Value of the proximal objective at candidate `mu` anchored at `sigma`:
/// `quantile_w2_squared(mu, sigma)/(2h) + quantile_energy(mu)`.
pub fn jko_objective(
    mu: &QuantileRep,
    sigma: &QuantileRep,
    h: f64,
    params: &ModelParams,
) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParams(format!(
            "step size h must be positive, got {h}"
        )));
    }
    Ok(quantile_w2_squared(mu, sigma)? / (2.0 * h) + quantile_energy(mu, params))
}

/// Integral of `f` against the state a quantile vector represents, by the
/// midpoint rule in mass coordinates, atoms included.
fn integrate_quantile<F: Fn(f64) -> f64>(l: f64, r: f64, x: &[f64], beta: f64, f: &F) -> f64 {
    let n = x.len() - 1;
    let dm = 1.0 / n as f64;
    let mut s = 0.0;
    for w in x.windows(2) {
        s += f(0.5 * (w[0] + w[1]));
    }
    s * dm + beta * (f(l) + f(r))
}

/// Measured left-hand side of the stationarity identity for one step, in
/// the same mass-coordinate quadrature the solver controls:
///
/// ```text
/// | (1/h) \int zeta d(mu - sigma) - \int rho_mu zeta'' dx
///   + alpha*zeta'(R_mu) - alpha*zeta'(L_mu) |
/// ```
fn el_lhs_quantile(
    sq: &QuantileRep,
    mq: &QuantileRep,
    h: f64,
    zeta: &TestFunction,
    params: &ModelParams,
) -> f64 {
    let f = |x: f64| zeta.eval(x);
    let int_mu = integrate_quantile(mq.l(), mq.r(), mq.x(), mq.beta(), &f);
    let int_sigma = integrate_quantile(sq.l(), sq.r(), sq.x(), sq.beta(), &f);
    let n = mq.n_cells();
    let dm = 1.0 / n as f64;
    let mut second_term = 0.0;
    for w in mq.x().windows(2) {
        second_term += dm * zeta.second(0.5 * (w[0] + w[1]));
    }
    ((int_mu - int_sigma) / h - second_term + params.alpha * zeta.prime(mq.r())
        - params.alpha * zeta.prime(mq.l()))
    .abs()
}

/// Stationarity residual of a step `sigma -> mu` against `zeta`, together
/// with its bound `sup|zeta''| * W2^2(sigma, mu) / (2h)`. `mu` must be the
/// output of a proximal step from `sigma` for the bound to be meaningful.
pub fn el_residual(
    sigma: &GMeasure,
    mu: &GMeasure,
    h: f64,
    zeta: &TestFunction,
    params: &ModelParams,
) -> Result<ElResidual> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParams(format!(
            "step size h must be positive, got {h}"
        )));
    }
    let sq = sigma.to_quantile()?;
    let mq = mu.to_quantile()?;
    let lhs = el_lhs_quantile(&sq, &mq, h, zeta, params);
    let bound = zeta.sup_second() * transport::w2_squared(sigma, mu)? / (2.0 * h);
    Ok(ElResidual { lhs, bound })
}

/// Multiplier threshold below which a pinned wall is released. Negative
/// multipliers of smaller magnitude are treated as roundoff.
const RELEASE_TOL: f64 = 1e-8;

/// Reduced problem: minimize over the node vector `x` with the walls either
/// pinned (wall variable eliminated, quadratic folded into the corner) or
/// free (wall decoupled; optimum known in closed form).
struct ReducedProblem<'a> {
    sigma_mid: &'a [f64],
    sigma_l: f64,
    sigma_r: f64,
    dm: f64,
    h: f64,
    alpha: f64,
    beta: f64,
    pin_l: bool,
    pin_r: bool,
}

impl ReducedProblem<'_> {
    fn objective(&self, x: &[f64]) -> f64 {
        let n = x.len() - 1;
        let (dm, h) = (self.dm, self.h);
        let mut val = 0.0;
        for i in 0..n {
            let g = x[i + 1] - x[i];
            if g <= 0.0 {
                return f64::INFINITY;
            }
            let mid = 0.5 * (x[i] + x[i + 1]);
            let d = mid - self.sigma_mid[i];
            val += dm * d * d / (2.0 * h) - dm * (g / dm).ln();
        }
        if self.pin_l {
            let dl = x[0] - self.sigma_l;
            val += self.beta * dl * dl / (2.0 * h) - self.alpha * x[0];
        }
        if self.pin_r {
            let dr = x[n] - self.sigma_r;
            val += self.beta * dr * dr / (2.0 * h) + self.alpha * x[n];
        }
        val
    }

    /// Gradient and symmetric tridiagonal Hessian (diagonal + upper
    /// off-diagonal) at `x`. Caller guarantees positive gaps.
    fn grad_hess(&self, x: &[f64], grad: &mut [f64], diag: &mut [f64], off: &mut [f64]) {
        let n = x.len() - 1;
        let (dm, h) = (self.dm, self.h);
        grad.fill(0.0);
        diag.fill(0.0);
        off.fill(0.0);
        for i in 0..n {
            let g = x[i + 1] - x[i];
            let mid = 0.5 * (x[i] + x[i + 1]);
            let t = dm * (mid - self.sigma_mid[i]) / h; // transport force on the midpoint
            grad[i] += 0.5 * t + dm / g;
            grad[i + 1] += 0.5 * t - dm / g;
            let q = 0.25 * dm / h;
            let e = dm / (g * g);
            diag[i] += q + e;
            diag[i + 1] += q + e;
            off[i] += q - e;
        }
        if self.pin_l {
            grad[0] += self.beta * (x[0] - self.sigma_l) / h - self.alpha;
            diag[0] += self.beta / h;
        }
        if self.pin_r {
            grad[n] += self.beta * (x[n] - self.sigma_r) / h + self.alpha;
            diag[n] += self.beta / h;
        }
    }
}

/// Damped Newton on the reduced problem, in place. Returns the iteration
/// count on convergence (sup-norm of the gradient below `tol`).
fn newton_minimize(
    problem: &ReducedProblem,
    x: &mut [f64],
    cfg: &SolverConfig,
) -> Result<usize> {
    let m = x.len();
    let mut grad = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m - 1];
    let mut step = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut fx = problem.objective(x);
    let mut grad_norm = f64::INFINITY;
    for iter in 0..cfg.max_iters {
        problem.grad_hess(x, &mut grad, &mut diag, &mut off);
        grad_norm = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if grad_norm <= cfg.newton_tol {
            return Ok(iter);
        }
        step.copy_from_slice(&grad);
        crate::tridiag::solve_spd(&mut diag, &mut off, &mut step);
        // step now solves H*step = grad; descend along -step with
        // backtracking until the iterate stays monotone and the objective
        // does not increase. Once the Newton decrement drops below the
        // floating-point resolution of the objective, descent comparisons
        // are meaningless noise; the undamped step is contractive there, so
        // take it as is.
        let decrement: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
        let plateau = decrement.abs() <= 1e-13 * (1.0 + fx.abs());
        let mut t = 1.0;
        loop {
            for i in 0..m {
                trial[i] = x[i] - t * step[i];
            }
            let ft = problem.objective(&trial);
            if ft <= fx || (plateau && t == 1.0 && ft.is_finite()) {
                x.copy_from_slice(&trial);
                fx = ft;
                break;
            }
            t *= cfg.linesearch_shrink;
            if t < 1e-18 {
                // No acceptable step along the Newton direction; with a
                // convex objective this only happens at numerical stall.
                return Err(Error::NoConvergence {
                    iters: iter,
                    grad_norm,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iters: cfg.max_iters,
        grad_norm,
    })
}

/// One proximal step in quantile coordinates. `corpus` is the test-function
/// set used to fill the stationarity diagnostic; `t_for_errors` only labels
/// structured errors.
pub(crate) fn step_quantile(
    sigma: &QuantileRep,
    params: &ModelParams,
    cfg: &SolverConfig,
    corpus: &[TestFunction],
    t_for_errors: f64,
) -> Result<(QuantileRep, StepDiagnostics)> {
    let n = sigma.n_cells();
    let dm = sigma.delta_m();
    let sigma_mid: Vec<f64> = sigma.x().windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let h = cfg.h;
    let (alpha, beta) = (params.alpha, params.beta);

    // Closed-form wall optima when the constraint is inactive: the wall
    // quadratic (beta/2h)(L - Ls)^2 balances the interface pull -alpha*L,
    // so a free wall always creeps inward at speed alpha/beta.
    let l_free = sigma.l() + alpha * h / beta;
    let r_free = sigma.r() - alpha * h / beta;

    let mut x: Vec<f64> = sigma.x().to_vec();
    // Start from the physically expected configuration: densities with full
    // support press against both walls, so both constraints bind.
    let mut pin_l = true;
    let mut pin_r = true;
    let mut total_iters = 0usize;

    for _round in 0..8 {
        let problem = ReducedProblem {
            sigma_mid: &sigma_mid,
            sigma_l: sigma.l(),
            sigma_r: sigma.r(),
            dm,
            h,
            alpha,
            beta,
            pin_l,
            pin_r,
        };
        total_iters += newton_minimize(&problem, &mut x, cfg)?;

        let mut changed = false;
        if pin_l {
            // Multiplier of L <= X_0 at the merged optimum.
            let lambda = alpha - beta * (x[0] - sigma.l()) / h;
            if lambda < -RELEASE_TOL * (1.0 + alpha) {
                pin_l = false;
                changed = true;
            }
        } else if x[0] < l_free {
            pin_l = true;
            changed = true;
        }
        if pin_r {
            let lambda = alpha + beta * (x[n] - sigma.r()) / h;
            if lambda < -RELEASE_TOL * (1.0 + alpha) {
                pin_r = false;
                changed = true;
            }
        } else if x[n] > r_free {
            pin_r = true;
            changed = true;
        }
        if !changed {
            let l_new = if pin_l { x[0] } else { l_free };
            let r_new = if pin_r { x[n] } else { r_free };
            if r_new - l_new < 10.0 * f64::EPSILON * l_new.abs().max(r_new.abs()).max(1.0) {
                return Err(Error::DomainCollapse {
                    t: t_for_errors,
                    l: l_new,
                    r: r_new,
                });
            }
            let next = QuantileRep::new(l_new, r_new, x, sigma.beta())?;
            let el_max = corpus
                .iter()
                .map(|z| el_lhs_quantile(sigma, &next, h, z, params))
                .fold(0.0f64, f64::max);
            let diag = StepDiagnostics {
                w2_sq_step: quantile_w2_squared(sigma, &next)?,
                energy_before: quantile_energy(sigma, params),
                energy_after: quantile_energy(&next, params),
                newton_iters: total_iters,
                el_residual_max: el_max,
                active_constraints: (pin_l, pin_r),
            };
            return Ok((next, diag));
        }
    }
    Err(Error::NoConvergence {
        iters: total_iters,
        grad_norm: f64::NAN,
    })
}

/// Standard test-function corpus for a run starting at energy `e0`: centers
/// spread over [-D-1, D+1] where D is the width bound at that energy, so
/// the probes cover everything the flow can reach.
pub fn standard_corpus(e0: f64, params: &ModelParams) -> Result<Vec<TestFunction>> {
    let d = energy::diameter_bound(e0.max(energy::energy_lower_bound(params)), params)?;
    Ok(testfn::corpus(-d - 1.0, d + 1.0))
}

/// One proximal step from a uniform-grid state: converts to quantile
/// coordinates (resampling to the solver resolution if needed), minimizes,
/// and converts back. The unit-mass and monotonicity invariants of the
/// output are re-validated by construction.
pub fn jko_step(
    sigma: &GMeasure,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<(GMeasure, StepDiagnostics)> {
    cfg.validate()?;
    let sigma = if sigma.n_cells() == cfg.n {
        sigma.clone()
    } else {
        sigma.resample(cfg.n)?
    };
    let corpus = standard_corpus(energy::energy(&sigma, params).total, params)?;
    let sq = sigma.to_quantile()?;
    let (mq, diag) = step_quantile(&sq, params, cfg, &corpus, 0.0)?;
    Ok((mq.to_gmeasure()?, diag))
}

/// Runs `ceil(T/h)` proximal steps from `mu0`, carrying the chain in
/// quantile coordinates (no resampling between steps, so the per-step
/// dissipation inequalities telescope exactly) and storing uniform-grid
/// snapshots at every grid time.
pub fn run_trajectory(
    mu0: &GMeasure,
    t_final: f64,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::InvalidParams(format!(
            "final time must be positive, got {t_final}"
        )));
    }
    let state0 = if mu0.n_cells() == cfg.n {
        mu0.clone()
    } else {
        mu0.resample(cfg.n)?
    };
    let corpus = standard_corpus(energy::energy(&state0, params).total, params)?;
    let steps = (t_final / cfg.h).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut diagnostics = Vec::with_capacity(steps);
    times.push(0.0);
    let mut q = state0.to_quantile()?;
    states.push(state0);
    for i in 1..=steps {
        let t = i as f64 * cfg.h;
        let (next, diag) = step_quantile(&q, params, cfg, &corpus, t)?;
        times.push(t);
        states.push(next.to_gmeasure()?);
        diagnostics.push(diag);
        q = next;
    }
    Ok(Trajectory {
        times,
        states,
        diagnostics,
        params: *params,
        config: *cfg,
    })
}

/// Accumulated squared step lengths of a proximal trajectory and the a
/// priori bound they must respect,
/// `sum_i W2^2(mu_{i-1}, mu_i) <= 2h * (E(mu_0) - energy floor)`.
pub fn dissipation_sum(traj: &Trajectory) -> (f64, f64) {
    let sum = traj.diagnostics.iter().map(|d| d.w2_sq_step).sum();
    let e0 = energy::energy(&traj.states[0], &traj.params).total;
    let bound = 2.0 * traj.config.h * (e0 - energy::energy_lower_bound(&traj.params));
    (sum, bound)
}
