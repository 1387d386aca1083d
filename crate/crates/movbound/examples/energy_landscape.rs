// The free energy driving the flow: entropy plus interface length.
//
// `E = int rho log rho + alpha (R - L)` is minimized by the flat profile of
// density alpha, giving the floor `log alpha + 1`. At any energy level the
// support width is a priori bounded; the descent slope combines the bulk
// Fisher information with the wall disequilibria, and the energy is convex
// along transport interpolations (nonnegative displacement-convexity gap).
//
// Run with: cargo run --example energy_landscape

use movbound::energy::{
    diameter_bound, displacement_convexity_gap, energy, energy_lower_bound, slope,
};
use movbound::{GMeasure, ModelParams};

fn main() -> movbound::Result<()> {
    let params = ModelParams::new(1.0, 1.0)?;
    let floor = energy_lower_bound(&params);
    println!("energy floor (flat state): {floor:.10}");

    println!("\n{:>28}  {:>12}  {:>12}  {:>12}", "profile", "E", "entropy", "slope");
    let profiles: Vec<(&str, GMeasure)> = vec![
        ("flat on [-1/2, 1/2] (steady)", GMeasure::make_uniform(-0.5, 0.5, 256, 1.0)?),
        ("flat on [0, 1/2] (dense)", GMeasure::make_uniform(0.0, 0.5, 256, 1.0)?),
        ("flat on [0, 2] (dilute)", GMeasure::make_uniform(0.0, 2.0, 256, 1.0)?),
        (
            "ramp on [0, 1]",
            GMeasure::from_shape(0.0, 1.0, (0..256).map(|j| 0.5 + (j as f64 + 0.5) / 256.0).collect(), 1.0)?,
        ),
    ];
    for (name, mu) in &profiles {
        let report = energy(mu, &params);
        println!(
            "{:>28}  {:>12.8}  {:>12.8}  {:>12.6}",
            name, report.total, report.entropy_part, report.slope
        );
        assert!(report.total >= floor - 1e-12);
    }

    // The steady profile sits exactly on the floor with zero slope.
    let steady = energy(&profiles[0].1, &params);
    assert!((steady.total - floor).abs() < 1e-12);
    assert!(slope(&profiles[0].1, &params) < 1e-9);

    // Any state reachable from energy level M fits inside a computable width.
    println!("\nwidth bounds by energy level:");
    for m in [1.01, 1.5, 2.0, 3.0] {
        println!("  E <= {m:>4}: width <= {:.8}", diameter_bound(m, &params)?);
    }

    // Transport interpolation never dips below the chord of the energy.
    let gap = displacement_convexity_gap(&profiles[1].1, &profiles[2].1, &params)?;
    println!("\ndisplacement-convexity gap (dense -> dilute): {gap:.8}");
    assert!(gap >= -1e-9);
    Ok(())
}
