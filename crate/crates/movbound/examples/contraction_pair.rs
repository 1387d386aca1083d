// Two flows started from different data never move apart.
//
// Each proximal step is a resolvent of a convex energy, hence nonexpansive
// in the transport metric: the distance between two runs is nonincreasing,
// step by step, with no constant and no time horizon. This is a sharp
// structural test — a sign error anywhere in the solver breaks it
// immediately.
//
// Run with: cargo run --example contraction_pair

use rand::SeedableRng;

use movbound::harness::{contraction_check, random_regular_state};
use movbound::jko::{run_trajectory, SolverConfig};
use movbound::ModelParams;

fn main() -> movbound::Result<()> {
    let params = ModelParams::new(1.0, 1.0)?;
    let cfg = SolverConfig {
        h: 1e-3,
        n: 128,
        ..SolverConfig::default()
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20260819);
    let a0 = random_regular_state(&mut rng, cfg.n, params.beta)?;
    let b0 = random_regular_state(&mut rng, cfg.n, params.beta)?;
    println!(
        "start A on [{:.4}, {:.4}], start B on [{:.4}, {:.4}]",
        a0.l(),
        a0.r(),
        b0.l(),
        b0.r()
    );

    let a = run_trajectory(&a0, 0.08, &params, &cfg)?;
    let b = run_trajectory(&b0, 0.08, &params, &cfg)?;
    let report = contraction_check(&a, &b)?;

    println!("\n{:>6}  {:>12}", "t", "W2(A, B)");
    for (i, t) in a.times.iter().enumerate().step_by(8) {
        println!("{:>6.3}  {:>12.8}", t, report.distances[i]);
    }

    println!(
        "\ndistance shrank from {:.6} to {:.6}",
        report.distances[0],
        report.distances.last().unwrap()
    );
    println!("largest single-step increase: {:.3e}", report.max_increase);
    assert!(
        report.max_increase <= 1e-6,
        "nonexpansiveness violated by {:.3e}",
        report.max_increase
    );
    Ok(())
}
