// Cross-solver refinement study: the proximal scheme converges to the
// front-tracking reference as the step size shrinks.
//
// The two solvers share nothing but the problem statement — different state
// representations, different update rules, different conservation
// mechanisms — so their agreement under refinement is strong evidence that
// both discretize the same evolution. The fitted slope of sup-distance
// against step size estimates the order (about one for this pairing).
//
// Run with: cargo run --example convergence_study

use movbound::harness::convergence_study;
use movbound::pde::PdeConfig;
use movbound::{GMeasure, ModelParams};

fn main() -> movbound::Result<()> {
    let params = ModelParams::new(1.0, 1.0)?;
    let mu0 = GMeasure::make_uniform(0.0, 0.5, 256, params.beta)?;
    let pde_cfg = PdeConfig {
        m: 200,
        dt: 1e-4,
        ..PdeConfig::default()
    };

    let hs = [4e-3, 2e-3, 1e-3];
    println!("running reference once and the proximal scheme at h = {hs:?} ...");
    let report = convergence_study(&mu0, 0.1, &params, &hs, 256, &pde_cfg)?;

    println!("\n{:>10}  {:>14}", "h", "sup W2 to ref");
    for level in &report.levels {
        println!("{:>10.0e}  {:>14.6e}", level.h, level.sup_distance);
    }
    println!("\nfitted order: {:.3}", report.order);

    for pair in report.levels.windows(2) {
        assert!(
            pair[1].sup_distance < pair[0].sup_distance,
            "distance must shrink with the step"
        );
    }
    assert!(report.order > 0.8, "order {:.3} too low", report.order);
    Ok(())
}
