// The full certificate battery on one configured problem.
//
// Certify mode runs both solvers and then audits the results against every
// structural guarantee the discretization makes: conservation laws, the
// energy floor and monotone decay, the dissipation budget, per-step
// stationarity residuals, uniform time regularity, the variational
// inequality, nonexpansiveness, transport duality, and cross-solver
// agreement. Artifacts (tables, plots, certificates) land in
// `target/certify_demo`.
//
// Run with: cargo run --example certify_run

use movbound::harness::CertificateReport;
use movbound::jko::SolverConfig;
use movbound::pde::PdeConfig;
use movbound::runner::{run, InitialProfile, Mode, RunConfig};

fn main() -> movbound::Result<()> {
    let cfg = RunConfig {
        mode: Mode::Certify,
        initial: InitialProfile::Uniform { l: 0.0, r: 0.5 },
        t_final: 0.05,
        solver: SolverConfig {
            h: 1e-3,
            n: 128,
            ..SolverConfig::default()
        },
        pde: PdeConfig {
            m: 128,
            dt: 1e-4,
            ..PdeConfig::default()
        },
        output_dir: "target/certify_demo".into(),
        ..RunConfig::default()
    };

    let summary = run(&cfg, 2)?;
    println!("artifacts in {}:", summary.out_dir.display());
    for f in &summary.files {
        println!("  {f}");
    }

    let text = std::fs::read_to_string(summary.out_dir.join("certificates.json"))?;
    let report: CertificateReport = serde_json::from_str(&text).map_err(movbound::Error::from)?;
    println!("\n{:>32}  {:>13}  {:>13}  {:>6}", "certificate", "lhs", "rhs+tol", "pass");
    for c in &report.certificates {
        println!(
            "{:>32}  {:>13.4e}  {:>13.4e}  {:>6}",
            c.name,
            c.lhs,
            c.rhs + c.tol,
            if c.pass { "yes" } else { "NO" }
        );
    }
    assert!(summary.all_pass, "a certificate failed — inspect the report");
    println!("\nall certificates passed");
    Ok(())
}
