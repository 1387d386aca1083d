// Front-tracking reference solution of the same moving-boundary problem.
//
// The domain is mapped to fixed coordinates and the bulk density advances
// by conservative finite volumes; the walls follow their kinetic law
// explicitly. Bulk mass is conserved to rounding by construction — the wall
// faces carry hard-zero fluxes — and the saturated flat state is an exact
// fixed point of the discrete update.
//
// Run with: cargo run --example pde_reference

use movbound::pde::{pde_solve, PdeConfig, TimeScheme};
use movbound::{GMeasure, ModelParams};

fn main() -> movbound::Result<()> {
    let params = ModelParams::new(1.0, 1.0)?;
    let mu0 = GMeasure::make_uniform(0.0, 0.5, 200, params.beta)?;

    for scheme in [TimeScheme::ImplicitEuler, TimeScheme::CrankNicolson] {
        let cfg = PdeConfig {
            m: 200,
            dt: 1e-4,
            scheme,
        };
        let traj = pde_solve(&mu0, 0.1, &params, &cfg, 100)?;
        println!("scheme {scheme:?}");
        println!("{:>6}  {:>10}  {:>10}  {:>12}", "t", "L", "R", "bulk mass");
        for (i, t) in traj.times.iter().enumerate().step_by(2) {
            let s = &traj.states[i];
            println!(
                "{:>6.3}  {:>10.6}  {:>10.6}  {:>12.9}",
                t,
                s.l(),
                s.r(),
                s.mass()
            );
        }
        let worst_drift = traj
            .states
            .iter()
            .map(|s| (s.mass() - 1.0).abs())
            .fold(0.0f64, f64::max);
        println!("worst bulk-mass drift: {worst_drift:.3e}\n");
        assert!(worst_drift < 1e-9);
    }

    // The saturated profile does not move at all.
    let steady = GMeasure::make_uniform(-0.5, 0.5, 200, params.beta)?;
    let cfg = PdeConfig::default();
    let traj = pde_solve(&steady, 0.05, &params, &cfg, 100)?;
    let last = traj.states.last().unwrap();
    println!(
        "steady run: walls moved by ({:.2e}, {:.2e})",
        (last.l() + 0.5).abs(),
        (last.r() - 0.5).abs()
    );
    assert!((last.l() + 0.5).abs() < 1e-12 && (last.r() - 0.5).abs() < 1e-12);
    Ok(())
}
