//! Run orchestration: a JSON configuration in, a directory of artifacts
//! out.
//!
//! Five modes share one configuration shape:
//!
//! * `jko` — proximal (minimizing-movement) run;
//! * `pde` — front-tracking finite-volume run;
//! * `compare` — both runs plus their distance over time;
//! * `certify` — both runs plus the full certificate battery; the summary
//!   reports failure if any certificate fails;
//! * `sweep` — proximal-step refinement study against one reference run.
//!
//! Every artifact is a pure function of the configuration, so repeated runs
//! produce byte-identical files; worker threads only change wall-clock
//! time.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy;
use crate::error::{Error, Result};
use crate::harness::{self, Certificate, CertificateReport};
use crate::jko::{self, SolverConfig, Trajectory};
use crate::measure::{GMeasure, ModelParams};
use crate::pde::{self, PdeConfig};
use crate::svg::LinePlot;
use crate::transport;

/// What the runner should do with the configured problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Jko,
    Pde,
    Compare,
    Certify,
    Sweep,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jko" => Ok(Mode::Jko),
            "pde" => Ok(Mode::Pde),
            "compare" => Ok(Mode::Compare),
            "certify" => Ok(Mode::Certify),
            "sweep" => Ok(Mode::Sweep),
            other => Err(Error::Config(format!(
                "unknown mode '{other}'; expected jko, pde, compare, certify, or sweep"
            ))),
        }
    }
}

/// Initial bulk profile. All variants are normalized to unit bulk mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum InitialProfile {
    /// Flat density on [l, r].
    Uniform { l: f64, r: f64 },
    /// The saturated flat state: density `alpha` on a width-1/alpha
    /// interval centered at the origin. An exact steady state.
    Equilibrium,
    /// Two-level profile on [l, r]: the left half carries `ratio` times the
    /// density of the right half.
    Step { l: f64, r: f64, ratio: f64 },
    /// Truncated bell on [l, r]: shape `floor + exp(-(x-center)^2/(2 width^2))`.
    Gaussian {
        l: f64,
        r: f64,
        center: f64,
        width: f64,
        floor: f64,
    },
    /// Density samples from a CSV file with header `x,rho` and equally
    /// spaced cell centers; the interval is inferred from the spacing.
    Csv { path: PathBuf },
}

impl InitialProfile {
    /// Materializes the profile on `n` cells (CSV data keeps its own
    /// resolution; solvers resample as needed).
    pub fn build(&self, n: usize, params: &ModelParams) -> Result<GMeasure> {
        match self {
            InitialProfile::Uniform { l, r } => GMeasure::make_uniform(*l, *r, n, params.beta),
            InitialProfile::Equilibrium => {
                let half = 0.5 / params.alpha;
                GMeasure::make_uniform(-half, half, n, params.beta)
            }
            InitialProfile::Step { l, r, ratio } => {
                if !(ratio.is_finite() && *ratio > 0.0) {
                    return Err(Error::Config(format!(
                        "step profile ratio must be positive, got {ratio}"
                    )));
                }
                let shape: Vec<f64> = (0..n)
                    .map(|j| if (j as f64 + 0.5) < n as f64 / 2.0 { *ratio } else { 1.0 })
                    .collect();
                GMeasure::from_shape(*l, *r, shape, params.beta)
            }
            InitialProfile::Gaussian {
                l,
                r,
                center,
                width,
                floor,
            } => {
                if !(width.is_finite() && *width > 0.0) || !(floor.is_finite() && *floor >= 0.0) {
                    return Err(Error::Config(
                        "gaussian profile needs width > 0 and floor >= 0".into(),
                    ));
                }
                let shape: Vec<f64> = (0..n)
                    .map(|j| {
                        let x = l + (j as f64 + 0.5) * (r - l) / n as f64;
                        let u = (x - center) / width;
                        floor + (-0.5 * u * u).exp()
                    })
                    .collect();
                GMeasure::from_shape(*l, *r, shape, params.beta)
            }
            InitialProfile::Csv { path } => load_profile_csv(path, params.beta),
        }
    }
}

/// Reads an `x,rho` table with equally spaced centers into a state.
fn load_profile_csv(path: &Path, beta: f64) -> Result<GMeasure> {
    let text = fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut rhos = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            return Err(Error::Config(format!(
                "{}: line {} needs two comma-separated columns",
                path.display(),
                lineno + 1
            )));
        };
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| {
                Error::Config(format!(
                    "{}: line {} has a non-numeric entry '{}'",
                    path.display(),
                    lineno + 1,
                    s.trim()
                ))
            })
        };
        xs.push(parse(a)?);
        rhos.push(parse(b)?);
    }
    if xs.len() < 2 {
        return Err(Error::Config(format!(
            "{}: need at least two samples",
            path.display()
        )));
    }
    let dx = xs[1] - xs[0];
    if dx <= 0.0 {
        return Err(Error::Config(format!(
            "{}: sample positions must increase",
            path.display()
        )));
    }
    for w in xs.windows(2) {
        if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.max(1.0) {
            return Err(Error::Config(format!(
                "{}: sample positions must be equally spaced",
                path.display()
            )));
        }
    }
    GMeasure::from_shape(xs[0] - 0.5 * dx, xs[xs.len() - 1] + 0.5 * dx, rhos, beta)
}

/// Complete description of one run. Unknown keys are rejected with the
/// offending name; missing keys fall back to the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: ModelParams,
    pub initial: InitialProfile,
    pub t_final: f64,
    pub solver: SolverConfig,
    pub pde: PdeConfig,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Compare,
            params: ModelParams { alpha: 1.0, beta: 1.0 },
            initial: InitialProfile::Uniform { l: 0.0, r: 0.5 },
            t_final: 0.25,
            solver: SolverConfig::default(),
            pde: PdeConfig::default(),
            output_dir: PathBuf::from("out"),
            emit_plots: true,
            seed: 7,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        ModelParams::new(self.params.alpha, self.params.beta)?;
        self.solver.validate()?;
        self.pde.validate()?;
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::Config(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        Ok(())
    }
}

/// Loads and validates a configuration file, reporting the file name and
/// the offending key or value on failure.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// What a completed run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub out_dir: PathBuf,
    /// False when any certificate failed (always true outside certify mode).
    pub all_pass: bool,
    /// Artifact file names relative to `out_dir`.
    pub files: Vec<String>,
}

/// Snapshot cadence used for the front-tracking runs: align snapshots with
/// the proximal step so the two solvers share comparison times.
fn pde_snapshot_every(cfg: &RunConfig) -> usize {
    ((cfg.solver.h / cfg.pde.dt).round() as usize).max(1)
}

/// The flat trajectory table: one row per snapshot.
fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let mut out = String::from("t,L,R,E,W2_step,mass,moment,slope\n");
    for (i, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        let report = energy::energy(s, &traj.params);
        let w2_step = if i == 0 {
            0.0
        } else if traj.diagnostics.len() == traj.times.len() - 1 {
            traj.diagnostics[i - 1].w2_sq_step.sqrt()
        } else {
            transport::w2(&traj.states[i - 1], s)?
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            t,
            s.l(),
            s.r(),
            report.total,
            w2_step,
            s.mass(),
            s.first_moment(),
            report.slope
        ));
    }
    Ok(out)
}

/// Long-format density table: one row per cell per snapshot.
fn snapshots_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,x,rho\n");
    for (t, s) in traj.times.iter().zip(&traj.states) {
        for (j, rho) in s.rho().iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", t, s.cell_center(j), rho));
        }
    }
    out
}

fn energy_plot(runs: &[(&str, &Trajectory)]) -> String {
    let mut plot = LinePlot::new("energy along the flow", "t", "E");
    for (label, traj) in runs {
        let pts = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(t, s)| (*t, energy::energy(s, &traj.params).total))
            .collect();
        plot.add_series(label, pts);
    }
    plot.render()
}

fn interval_plot(runs: &[(&str, &Trajectory)]) -> String {
    let mut plot = LinePlot::new("support walls over time", "t", "position");
    for (label, traj) in runs {
        let left = traj.times.iter().zip(&traj.states).map(|(t, s)| (*t, s.l()));
        let right = traj.times.iter().zip(&traj.states).map(|(t, s)| (*t, s.r()));
        plot.add_series(&format!("{label} L"), left.collect());
        plot.add_series(&format!("{label} R"), right.collect());
    }
    plot.render()
}

/// Writer that records every artifact it emits.
struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.root.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Shared comparison times of a proximal run and an aligned front-tracking
/// run, with the transport distance at each.
fn paired_distances(a: &Trajectory, b: &Trajectory) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (i, &t) in a.times.iter().enumerate() {
        let j = b.index_nearest(t);
        if (b.times[j] - t).abs() > 1e-9 * t.max(1.0) {
            continue;
        }
        out.push((t, transport::w2(&a.states[i], &b.states[j])?));
    }
    Ok(out)
}

/// Runs both solvers on the configured problem, in parallel when `jobs > 1`.
fn run_both(cfg: &RunConfig, mu0: &GMeasure, jobs: usize) -> Result<(Trajectory, Trajectory)> {
    let snap = pde_snapshot_every(cfg);
    if jobs > 1 {
        std::thread::scope(|scope| {
            let jko_handle = scope.spawn(|| {
                jko::run_trajectory(mu0, cfg.t_final, &cfg.params, &cfg.solver)
            });
            let pde_traj = pde::pde_solve(mu0, cfg.t_final, &cfg.params, &cfg.pde, snap);
            let jko_traj = jko_handle.join().expect("solver thread panicked");
            Ok((jko_traj?, pde_traj?))
        })
    } else {
        Ok((
            jko::run_trajectory(mu0, cfg.t_final, &cfg.params, &cfg.solver)?,
            pde::pde_solve(mu0, cfg.t_final, &cfg.params, &cfg.pde, snap)?,
        ))
    }
}

/// Assembles the certificate battery for a pair of runs of the same
/// problem. Tolerances follow the project-wide gates.
fn build_certificates(
    cfg: &RunConfig,
    mu0: &GMeasure,
    jko_traj: &Trajectory,
    pde_traj: &Trajectory,
) -> Result<CertificateReport> {
    let params = &cfg.params;
    let mut report = CertificateReport::default();

    // Conservation on snapshots.
    for (label, traj) in [("jko", jko_traj), ("pde", pde_traj)] {
        let sup_mass = traj
            .states
            .iter()
            .map(|s| (s.mass() - 1.0).abs())
            .fold(0.0f64, f64::max);
        report.push(Certificate::check(
            &format!("bulk_mass_conservation_{label}"),
            sup_mass,
            0.0,
            1e-6,
            "sup_t |bulk mass - 1|",
        ));
        let m0 = traj.states[0].first_moment();
        let sup_moment = traj
            .states
            .iter()
            .map(|s| (s.first_moment() - m0).abs())
            .fold(0.0f64, f64::max);
        report.push(Certificate::check(
            &format!("first_moment_drift_{label}"),
            sup_moment,
            0.0,
            1e-4,
            "sup_t |first moment - initial|",
        ));
    }

    // Energy floor and monotonicity.
    let floor = energy::energy_lower_bound(params);
    let min_e = jko_traj
        .states
        .iter()
        .chain(&pde_traj.states)
        .map(|s| energy::energy(s, params).total)
        .fold(f64::INFINITY, f64::min);
    report.push(Certificate::check(
        "energy_floor",
        floor,
        min_e,
        1e-8,
        "flat-state lower bound vs. smallest observed energy",
    ));
    let max_jko_increase = jko_traj
        .diagnostics
        .iter()
        .map(|d| d.energy_after - d.energy_before)
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(Certificate::check(
        "energy_monotone_jko",
        max_jko_increase,
        0.0,
        10.0 * cfg.solver.newton_tol,
        "largest per-step energy increase of the proximal chain",
    ));
    let pde_energies: Vec<f64> = pde_traj
        .states
        .iter()
        .map(|s| energy::energy(s, params).total)
        .collect();
    let startup = 5.min(pde_energies.len().saturating_sub(1));
    let max_pde_increase = pde_energies[startup..]
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max);
    report.push(Certificate::check(
        "energy_monotone_pde",
        max_pde_increase,
        0.0,
        1e-9,
        "largest energy increase between snapshots after startup",
    ));

    // Dissipation budget of the proximal chain.
    let (diss_sum, diss_bound) = jko::dissipation_sum(jko_traj);
    report.push(Certificate::check(
        "dissipation_budget",
        diss_sum,
        diss_bound,
        1e-8,
        "accumulated squared step lengths vs. 2 h (E_0 - floor)",
    ));

    // Per-step stationarity residual against the certified envelope.
    let e0 = energy::energy(&jko_traj.states[0], params).total;
    let corpus = jko::standard_corpus(e0, params)?;
    let sup_dd = corpus
        .iter()
        .map(|z| z.sup_second())
        .fold(0.0f64, f64::max);
    let worst_el = jko_traj
        .diagnostics
        .iter()
        .map(|d| d.el_residual_max - sup_dd * d.w2_sq_step / (2.0 * cfg.solver.h))
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(Certificate::check(
        "step_stationarity",
        worst_el,
        0.0,
        1e-6,
        "worst (residual - envelope) over steps and test functions",
    ));

    // Uniform time regularity.
    let equi = harness::equicontinuity_check(jko_traj)?;
    report.push(Certificate::check(
        "equicontinuity",
        equi.violations as f64,
        0.0,
        0.5,
        &format!(
            "pairs violating W2 <= C sqrt(dt), C = {:.6}, max ratio {:.6}",
            equi.constant, equi.max_ratio
        ),
    ));

    // Variational inequality against the steady profile.
    let nu = InitialProfile::Equilibrium.build(cfg.solver.n, params)?;
    let evi = harness::evi_check(jko_traj, &nu)?;
    report.push(Certificate::check(
        "evi_vs_steady_state",
        evi.max_gap,
        0.0,
        1e-3,
        "largest per-step variational-inequality gap",
    ));

    // Nonexpansiveness against a seeded partner run.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let partner0 = harness::random_regular_state(&mut rng, cfg.solver.n, params.beta)?;
    let partner = jko::run_trajectory(&partner0, cfg.t_final, params, &cfg.solver)?;
    let contraction = harness::contraction_check(jko_traj, &partner)?;
    report.push(Certificate::check(
        "contraction_seeded_pair",
        contraction.max_increase,
        0.0,
        1e-3,
        "largest per-step increase of the inter-run distance",
    ));

    // Duality gap of the distance computation on seeded pairs.
    let mut max_gap = 0.0f64;
    for _ in 0..5 {
        let (a, b) = harness::random_state_pair(&mut rng, cfg.solver.n, params.beta)?;
        let t = transport::kantorovich_potential(&a, &b)?;
        max_gap = max_gap.max(t.duality_gap());
    }
    report.push(Certificate::check(
        "duality_gap_random_pairs",
        max_gap,
        5.0 / cfg.solver.n as f64,
        0.0,
        "largest primal-dual defect over seeded pairs",
    ));

    // Cross-solver agreement envelope.
    let distances = paired_distances(jko_traj, pde_traj)?;
    let sup_d = distances.iter().map(|(_, d)| *d).fold(0.0f64, f64::max);
    report.push(Certificate::check(
        "cross_solver_distance",
        sup_d,
        0.05,
        0.0,
        "sup_t W2(proximal, front-tracking) against a coarse envelope",
    ));

    // Displacement convexity of the energy along the initial-to-final pair.
    let gap = energy::displacement_convexity_gap(mu0, jko_traj.states.last().unwrap(), params)?;
    report.push(Certificate::check(
        "displacement_convexity",
        -gap,
        0.0,
        1e-6,
        "negated convexity gap between initial and final states",
    ));

    Ok(report)
}

/// Executes the configured run and writes all artifacts. `jobs` caps the
/// worker threads used for independent sub-runs; it never changes output
/// bytes.
pub fn run(cfg: &RunConfig, jobs: usize) -> Result<RunSummary> {
    cfg.validate()?;
    let jobs = jobs.max(1);
    let mut out = OutDir::create(&cfg.output_dir)?;
    let mut outcomes = serde_json::Map::new();
    let mut all_pass = true;

    match cfg.mode {
        Mode::Jko => {
            let mu0 = cfg.initial.build(cfg.solver.n, &cfg.params)?;
            info!("proximal run: {} steps", (cfg.t_final / cfg.solver.h).ceil());
            let traj = jko::run_trajectory(&mu0, cfg.t_final, &cfg.params, &cfg.solver)?;
            out.write("trajectory.csv", &trajectory_csv(&traj)?)?;
            out.write("snapshots.csv", &snapshots_csv(&traj))?;
            if cfg.emit_plots {
                out.write("energy.svg", &energy_plot(&[("jko", &traj)]))?;
                out.write("interval.svg", &interval_plot(&[("jko", &traj)]))?;
            }
            record_final_state(&mut outcomes, "jko", &traj);
        }
        Mode::Pde => {
            let mu0 = cfg.initial.build(cfg.pde.m, &cfg.params)?;
            info!("front-tracking run: {} steps", (cfg.t_final / cfg.pde.dt).ceil());
            let traj = pde::pde_solve(
                &mu0,
                cfg.t_final,
                &cfg.params,
                &cfg.pde,
                pde_snapshot_every(cfg),
            )?;
            out.write("trajectory.csv", &trajectory_csv(&traj)?)?;
            out.write("snapshots.csv", &snapshots_csv(&traj))?;
            if cfg.emit_plots {
                out.write("energy.svg", &energy_plot(&[("pde", &traj)]))?;
                out.write("interval.svg", &interval_plot(&[("pde", &traj)]))?;
            }
            record_final_state(&mut outcomes, "pde", &traj);
        }
        Mode::Compare | Mode::Certify => {
            let mu0 = cfg.initial.build(cfg.solver.n, &cfg.params)?;
            info!("running both solvers (jobs = {jobs})");
            let (jko_traj, pde_traj) = run_both(cfg, &mu0, jobs)?;
            out.write("trajectory_jko.csv", &trajectory_csv(&jko_traj)?)?;
            out.write("trajectory_pde.csv", &trajectory_csv(&pde_traj)?)?;
            out.write("snapshots_jko.csv", &snapshots_csv(&jko_traj))?;
            out.write("snapshots_pde.csv", &snapshots_csv(&pde_traj))?;
            let distances = paired_distances(&jko_traj, &pde_traj)?;
            let mut dist_csv = String::from("t,w2\n");
            for (t, d) in &distances {
                dist_csv.push_str(&format!("{t},{d}\n"));
            }
            out.write("distance.csv", &dist_csv)?;
            if cfg.emit_plots {
                out.write(
                    "energy.svg",
                    &energy_plot(&[("jko", &jko_traj), ("pde", &pde_traj)]),
                )?;
                out.write(
                    "interval.svg",
                    &interval_plot(&[("jko", &jko_traj), ("pde", &pde_traj)]),
                )?;
                let mut plot = LinePlot::new("inter-solver distance", "t", "W2");
                plot.add_series("W2(jko, pde)", distances.clone());
                out.write("distance.svg", &plot.render())?;
            }
            let sup_d = distances.iter().map(|(_, d)| *d).fold(0.0f64, f64::max);
            outcomes.insert("sup_distance".into(), sup_d.into());
            record_final_state(&mut outcomes, "jko", &jko_traj);
            record_final_state(&mut outcomes, "pde", &pde_traj);
            if cfg.mode == Mode::Certify {
                info!("assembling certificates");
                let report = build_certificates(cfg, &mu0, &jko_traj, &pde_traj)?;
                all_pass = report.all_pass();
                out.write("certificates.json", &report.to_json()?)?;
                out.write("certificates.csv", &report.to_csv())?;
                outcomes.insert("all_pass".into(), all_pass.into());
                outcomes.insert(
                    "failed_certificates".into(),
                    report
                        .failed()
                        .iter()
                        .map(|c| c.name.clone())
                        .collect::<Vec<_>>()
                        .into(),
                );
            }
        }
        Mode::Sweep => {
            let mu0 = cfg.initial.build(cfg.solver.n, &cfg.params)?;
            let hs = [4.0 * cfg.solver.h, 2.0 * cfg.solver.h, cfg.solver.h];
            info!("refinement sweep over steps {hs:?}");
            let study = harness::convergence_study(
                &mu0,
                cfg.t_final,
                &cfg.params,
                &hs,
                cfg.solver.n,
                &cfg.pde,
            )?;
            let mut csv = String::from("h,sup_distance\n");
            for level in &study.levels {
                csv.push_str(&format!("{},{}\n", level.h, level.sup_distance));
            }
            out.write("sweep.csv", &csv)?;
            if cfg.emit_plots {
                let mut plot =
                    LinePlot::new("distance to reference vs. step size", "h", "sup W2");
                plot.add_series(
                    "sup distance",
                    study.levels.iter().map(|l| (l.h, l.sup_distance)).collect(),
                );
                out.write("sweep.svg", &plot.render())?;
            }
            outcomes.insert(
                "order".into(),
                serde_json::Number::from_f64(study.order)
                    .map(serde_json::Value::Number)
                    .unwrap_or(serde_json::Value::Null),
            );
        }
    }

    let manifest = serde_json::json!({
        "mode": cfg.mode,
        "config": cfg,
        "files": out.files,
        "outcomes": serde_json::Value::Object(outcomes),
    });
    out.write("manifest.json", &serde_json::to_string_pretty(&manifest)?)?;

    Ok(RunSummary {
        mode: cfg.mode,
        out_dir: out.root,
        all_pass,
        files: out.files,
    })
}

fn record_final_state(
    outcomes: &mut serde_json::Map<String, serde_json::Value>,
    label: &str,
    traj: &Trajectory,
) {
    let last = traj.states.last().unwrap();
    let e = energy::energy(last, &traj.params).total;
    outcomes.insert(
        format!("final_{label}"),
        serde_json::json!({
            "t": traj.times.last(),
            "l": last.l(),
            "r": last.r(),
            "energy": e,
            "snapshots": traj.times.len(),
        }),
    );
}
