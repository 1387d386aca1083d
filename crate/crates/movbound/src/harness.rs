//! Certification harness: machine-checkable inequalities that a computed
//! trajectory must satisfy, plus the cross-solver comparison study.
//!
//! Every check follows the same pattern — evaluate a measured quantity and
//! the bound theory puts on it, and record both in a [`Certificate`] so a
//! run can be audited after the fact. The checks are deliberately
//! *independent* of solver internals: they consume stored snapshots through
//! the public measure/transport/energy operations only.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::energy;
use crate::error::{Error, Result};
use crate::jko::{self, Trajectory};
use crate::measure::{GMeasure, ModelParams};
use crate::pde::{pde_solve, PdeConfig};
use crate::testfn::SpaceTimeTestFunction;
use crate::transport;

pub use crate::testfn::{corpus, TestFunction, TestFunctionKind, TimeWindow};

/// One audited inequality: `lhs <= rhs + tol`, with a human-readable
/// context string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
    pub detail: String,
}

impl Certificate {
    /// Records the inequality `lhs <= rhs + tol`.
    pub fn check(name: &str, lhs: f64, rhs: f64, tol: f64, detail: &str) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            tol,
            pass: lhs.is_finite() && rhs.is_finite() && lhs <= rhs + tol,
            detail: detail.to_string(),
        }
    }
}

/// A bundle of certificates with serialization helpers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub certificates: Vec<Certificate>,
}

impl CertificateReport {
    pub fn push(&mut self, c: Certificate) {
        self.certificates.push(c);
    }

    pub fn all_pass(&self) -> bool {
        self.certificates.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&Certificate> {
        self.certificates.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat table with one row per certificate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,lhs,rhs,tol,pass,detail\n");
        for c in &self.certificates {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&c.name),
                c.lhs,
                c.rhs,
                c.tol,
                c.pass,
                csv_field(&c.detail)
            ));
        }
        out
    }
}

/// Quotes a CSV field when it contains a delimiter, quote, or newline.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Both sides of the space-time weak formulation tested against
/// `xi(t, x) = psi(t) zeta(x)`; for an exact solution they agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakFormCheck {
    /// Initial-data plus time-derivative side.
    pub lhs: f64,
    /// Spatial-generator side.
    pub rhs: f64,
}

impl WeakFormCheck {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Assembles the weak formulation of the evolution along a trajectory:
///
/// ```text
/// -int xi(0,.) dmu_0 - int_0^T d/dt[psi](t) * (int zeta dmu_t) dt          (lhs)
///   =  int_0^T psi(t) [ int rho zeta'' dx - alpha zeta'(R) + alpha zeta'(L) ] dt   (rhs)
/// ```
///
/// The time-derivative term is a midpoint Stieltjes sum in the increments of
/// `psi`, which telescopes exactly when `int zeta dmu_t` is constant in
/// time; the generator side uses the trapezoid rule on the stored snapshot
/// times. `psi` should vanish at the final time for the formulation to
/// close (the provided time windows do).
pub fn weak_form_residual(traj: &Trajectory, xi: &SpaceTimeTestFunction) -> WeakFormCheck {
    let zeta = &xi.space;
    let alpha = traj.params.alpha;
    let g: Vec<f64> = traj
        .states
        .iter()
        .map(|mu| mu.integrate_against(|x| zeta.eval(x)))
        .collect();
    let gen: Vec<f64> = traj
        .states
        .iter()
        .map(|mu| {
            mu.integrate_against_density(|x| zeta.second(x)) - alpha * zeta.prime(mu.r())
                + alpha * zeta.prime(mu.l())
        })
        .collect();
    let psi: Vec<f64> = traj.times.iter().map(|&t| xi.window.psi(t)).collect();

    let mut lhs = -psi[0] * g[0];
    let mut rhs = 0.0;
    for i in 0..traj.times.len() - 1 {
        lhs -= 0.5 * (g[i] + g[i + 1]) * (psi[i + 1] - psi[i]);
        let dt = traj.times[i + 1] - traj.times[i];
        rhs += 0.5 * dt * (psi[i] * gen[i] + psi[i + 1] * gen[i + 1]);
    }
    WeakFormCheck { lhs, rhs }
}

/// Metric speed along a trajectory: one value per stored interval. A
/// proximal trajectory with per-step diagnostics uses its own (exact chain)
/// step lengths; otherwise the distances are recomputed between snapshots.
pub fn metric_derivative(traj: &Trajectory) -> Result<Vec<f64>> {
    let k = traj.times.len() - 1;
    let mut out = Vec::with_capacity(k);
    if traj.diagnostics.len() == k {
        for (i, d) in traj.diagnostics.iter().enumerate() {
            let dt = traj.times[i + 1] - traj.times[i];
            out.push(d.w2_sq_step.sqrt() / dt);
        }
    } else {
        for i in 0..k {
            let dt = traj.times[i + 1] - traj.times[i];
            out.push(transport::w2(&traj.states[i], &traj.states[i + 1])? / dt);
        }
    }
    Ok(out)
}

/// Defect of the energy-dissipation balance over the whole run,
///
/// ```text
/// 1/2 int |mu'|^2 dt + 1/2 int slope^2 dt + E(mu_T) - E(mu_0),
/// ```
///
/// with the metric speed from [`metric_derivative`] (midpoint in time) and
/// the descent slope from the snapshots (trapezoid in time). Zero in the
/// continuum; its magnitude is a refinement-quality indicator.
pub fn energy_identity_residual(traj: &Trajectory) -> Result<f64> {
    let speeds = metric_derivative(traj)?;
    let mut kinetic = 0.0;
    for (i, v) in speeds.iter().enumerate() {
        kinetic += 0.5 * v * v * (traj.times[i + 1] - traj.times[i]);
    }
    let slopes: Vec<f64> = traj
        .states
        .iter()
        .map(|mu| energy::slope(mu, &traj.params))
        .collect();
    let mut descent = 0.0;
    for i in 0..traj.times.len() - 1 {
        let dt = traj.times[i + 1] - traj.times[i];
        descent += 0.25 * (slopes[i] * slopes[i] + slopes[i + 1] * slopes[i + 1]) * dt;
    }
    let e0 = energy::energy(&traj.states[0], &traj.params).total;
    let et = energy::energy(traj.states.last().unwrap(), &traj.params).total;
    Ok(kinetic + descent + et - e0)
}

/// Result of testing the evolution-variational inequality along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EviReport {
    /// Per-step gaps; nonpositive values mean the inequality holds strictly.
    pub gaps: Vec<f64>,
    /// Largest gap, clamped below at zero.
    pub max_gap: f64,
}

/// Checks the per-step variational inequality against a comparison state
/// `nu`: each proximal step must satisfy
///
/// ```text
/// W^2(mu_{i+1}, nu) - W^2(mu_i, nu) + W^2(mu_i, mu_{i+1})
///     <= 2 h_i [ E(nu) - E(mu_{i+1}) ],
/// ```
///
/// the exact variational characterization of a proximal map of a convex
/// energy. Distances and energies are evaluated in the solver's own mass
/// coordinates, where the guarantee is exact up to solver tolerance and
/// snapshot rounding.
pub fn evi_check(traj: &Trajectory, nu: &GMeasure) -> Result<EviReport> {
    let n = traj.config.n;
    let nu = if nu.n_cells() == n {
        nu.clone()
    } else {
        nu.resample(n)?
    };
    let nu_q = nu.to_quantile()?;
    let e_nu = jko::quantile_energy(&nu_q, &traj.params);
    let qs: Vec<_> = traj
        .states
        .iter()
        .map(|s| s.to_quantile())
        .collect::<Result<Vec<_>>>()?;
    let mut gaps = Vec::with_capacity(qs.len() - 1);
    for i in 0..qs.len() - 1 {
        let h = traj.times[i + 1] - traj.times[i];
        let d_next = jko::quantile_w2_squared(&qs[i + 1], &nu_q)?;
        let d_prev = jko::quantile_w2_squared(&qs[i], &nu_q)?;
        let step = jko::quantile_w2_squared(&qs[i], &qs[i + 1])?;
        let e_next = jko::quantile_energy(&qs[i + 1], &traj.params);
        gaps.push(d_next - d_prev + step - 2.0 * h * (e_nu - e_next));
    }
    let max_gap = gaps.iter().fold(0.0f64, |a, &g| a.max(g));
    Ok(EviReport { gaps, max_gap })
}

/// Result of comparing two runs started from different data.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    /// Distance between the runs at each shared snapshot time.
    pub distances: Vec<f64>,
    /// Largest single-interval increase of that distance (negative when the
    /// runs only ever approach each other).
    pub max_increase: f64,
}

/// Verifies that two trajectories of the same flow never move apart: the
/// distance between them, step by step, must be nonincreasing because each
/// proximal step is nonexpansive. Both runs must share times and
/// resolution.
pub fn contraction_check(a: &Trajectory, b: &Trajectory) -> Result<ContractionReport> {
    if a.times.len() != b.times.len() {
        return Err(Error::InvalidParams(format!(
            "trajectories store {} vs {} snapshots",
            a.times.len(),
            b.times.len()
        )));
    }
    for (ta, tb) in a.times.iter().zip(&b.times) {
        if (ta - tb).abs() > 1e-12 * ta.abs().max(1.0) {
            return Err(Error::InvalidParams(format!(
                "snapshot times differ: {ta} vs {tb}"
            )));
        }
    }
    let mut distances = Vec::with_capacity(a.times.len());
    for (sa, sb) in a.states.iter().zip(&b.states) {
        let qa = sa.to_quantile()?;
        let qb = sb.to_quantile()?;
        distances.push(jko::quantile_w2_squared(&qa, &qb)?.sqrt());
    }
    let max_increase = distances
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ContractionReport {
        distances,
        max_increase,
    })
}

/// Result of the uniform time-regularity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EquicontinuityReport {
    /// The constant `sqrt(2 (E(mu_0) - log alpha + 1))` used on the right.
    pub constant: f64,
    /// Number of snapshot pairs violating the bound.
    pub violations: usize,
    /// Largest observed `W2(mu_s, mu_t) / (C sqrt(|t - s|))`.
    pub max_ratio: f64,
}

/// Checks the a priori Hoelder-1/2 time regularity on every snapshot pair:
/// `W2(mu_s, mu_t) <= C sqrt(t - s)` with
/// `C = sqrt(2 (E(mu_0) - log alpha + 1))`, a deliberately conservative
/// constant dominating the accumulated dissipation budget.
pub fn equicontinuity_check(traj: &Trajectory) -> Result<EquicontinuityReport> {
    let e0 = energy::energy(&traj.states[0], &traj.params).total;
    let constant = (2.0 * (e0 - traj.params.alpha.ln() + 1.0)).sqrt();
    let mut violations = 0usize;
    let mut max_ratio = 0.0f64;
    for i in 0..traj.states.len() {
        for j in i + 1..traj.states.len() {
            let d = transport::w2(&traj.states[i], &traj.states[j])?;
            let bound = constant * (traj.times[j] - traj.times[i]).sqrt();
            let ratio = d / bound;
            if ratio > 1.0 + 1e-9 {
                violations += 1;
            }
            max_ratio = max_ratio.max(ratio);
        }
    }
    Ok(EquicontinuityReport {
        constant,
        violations,
        max_ratio,
    })
}

/// One refinement level of the cross-solver study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub h: f64,
    /// Largest transport distance to the reference run over the shared
    /// comparison times.
    pub sup_distance: f64,
}

/// Outcome of the cross-solver refinement study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    /// Least-squares slope of `log sup_distance` against `log h`.
    pub order: f64,
}

/// Runs the proximal scheme at each step size in `hs` (which must be
/// decreasing) against a single front-tracking reference solution, and
/// measures the sup-in-time transport distance on the time grid of the
/// coarsest level. The fitted slope estimates the order of convergence of
/// the proximal scheme toward the reference dynamics.
pub fn convergence_study(
    mu0: &GMeasure,
    t_final: f64,
    params: &ModelParams,
    hs: &[f64],
    n: usize,
    pde_cfg: &PdeConfig,
) -> Result<ConvergenceReport> {
    if hs.len() < 2 || hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParams(
            "need at least two strictly decreasing step sizes".into(),
        ));
    }
    let h_coarse = hs[0];
    let snap = ((h_coarse / pde_cfg.dt).round() as usize).max(1);
    let reference = pde_solve(mu0, t_final, params, pde_cfg, snap)?;
    let n_times = (t_final / h_coarse + 1e-9).floor() as usize;
    let mut levels = Vec::with_capacity(hs.len());
    for &h in hs {
        let cfg = jko::SolverConfig {
            h,
            n,
            ..jko::SolverConfig::default()
        };
        let traj = jko::run_trajectory(mu0, t_final, params, &cfg)?;
        let mut sup = 0.0f64;
        for k in 1..=n_times {
            let t = k as f64 * h_coarse;
            let a = &traj.states[traj.index_nearest(t)];
            let b = &reference.states[reference.index_nearest(t)];
            sup = sup.max(transport::w2(a, b)?);
        }
        levels.push(ConvergenceLevel {
            h,
            sup_distance: sup,
        });
    }
    // Least-squares slope in log-log coordinates.
    let xs: Vec<f64> = levels.iter().map(|l| l.h.ln()).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.sup_distance.ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    Ok(ConvergenceReport {
        levels,
        order: num / den,
    })
}

/// Draws an admissible state with bounded, strictly positive density: a
/// random interval and a positive random bump mixture, normalized to unit
/// bulk mass. Deterministic for a fixed generator state.
pub fn random_regular_state<R: Rng>(rng: &mut R, n: usize, beta: f64) -> Result<GMeasure> {
    let l = rng.gen_range(-1.2..-0.1);
    let r = rng.gen_range(0.1..1.2);
    let bumps = rng.gen_range(1..=3);
    let mut centers = Vec::new();
    let mut widths = Vec::new();
    let mut weights = Vec::new();
    for _ in 0..bumps {
        centers.push(rng.gen_range(l..r));
        widths.push(rng.gen_range(0.1..0.5) * (r - l));
        weights.push(rng.gen_range(0.3..1.5));
    }
    let shape: Vec<f64> = (0..n)
        .map(|j| {
            let x = l + (j as f64 + 0.5) * (r - l) / n as f64;
            let mut v = 0.25;
            for k in 0..bumps {
                let u = (x - centers[k]) / widths[k];
                v += weights[k] * (-0.5 * u * u).exp();
            }
            v
        })
        .collect();
    GMeasure::from_shape(l, r, shape, beta)
}

/// Draws a pair of independent admissible states sharing the wall mass.
pub fn random_state_pair<R: Rng>(
    rng: &mut R,
    n: usize,
    beta: f64,
) -> Result<(GMeasure, GMeasure)> {
    Ok((
        random_regular_state(rng, n, beta)?,
        random_regular_state(rng, n, beta)?,
    ))
}
