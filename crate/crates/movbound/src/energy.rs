//! The driving free energy, its bounds, and its metric slope.
//!
//! For a state (rho, L, R) the energy is
//!
//! ```text
//! E = \int rho log rho dx + alpha * (R - L) ,
//! ```
//!
//! the entropy of the solute plus a cost per unit length of fluid interval.
//! With unit interior mass, Jensen's inequality gives the two facts this
//! module certifies numerically: the energy never drops below
//! `log(alpha) + 1` (attained exactly by the flat profile rho = alpha on an
//! interval of width 1/alpha), and any state with energy at most `M` has
//! fluid width bounded by the larger root of `-log d + alpha*d = M`.
//!
//! The metric slope of the energy under the transport metric is, for states
//! whose density is smooth and positive,
//!
//! ```text
//! slope^2 = \int (rho_x)^2 / rho dx
//!         + (rho(L) - alpha)^2 / beta + (rho(R) - alpha)^2 / beta ,
//! ```
//!
//! the Fisher information of the interior plus the squared distance of each
//! wall trace from saturation, weighted by the atom inertia. States where
//! the quotient blows up are reported as having infinite slope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{GMeasure, ModelParams};
use crate::transport;

/// Sum threshold beyond which the discrete slope is reported as infinite
/// rather than as a meaninglessly large float.
const SLOPE_OVERFLOW_GUARD: f64 = 1e12;

/// Energy of a state, split into its two parts, along with the metric slope
/// at that state. `slope` is `f64::INFINITY` when the density vanishes
/// somewhere or the discrete Fisher sum overflows the guard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: f64,
    pub entropy_part: f64,
    pub interface_part: f64,
    pub slope: f64,
}

/// Energy of a state: midpoint quadrature of `rho log rho` over the cells
/// (exact for the piecewise-constant interior, with `0 log 0 := 0`) plus
/// `alpha * (R - L)`. The slope field is filled by [`slope`].
pub fn energy(mu: &GMeasure, params: &ModelParams) -> EnergyReport {
    let dx = mu.dx();
    let entropy_part: f64 = mu
        .rho()
        .iter()
        .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
        .sum::<f64>()
        * dx;
    let interface_part = params.alpha * (mu.r() - mu.l());
    EnergyReport {
        total: entropy_part + interface_part,
        entropy_part,
        interface_part,
        slope: slope(mu, params),
    }
}

/// Greatest lower bound of the energy over all admissible states:
/// `log(alpha) + 1`, attained by the flat profile at saturation.
pub fn energy_lower_bound(params: &ModelParams) -> f64 {
    params.alpha.ln() + 1.0
}

/// Largest fluid width compatible with energy level `m`: the larger root of
/// `-log d + alpha*d = m`, found by bisection to absolute tolerance 1e-12.
/// Errors if `m` sits below the energy floor, where no width is admissible.
pub fn diameter_bound(m: f64, params: &ModelParams) -> Result<f64> {
    let floor = energy_lower_bound(params);
    if !m.is_finite() || m < floor - 1e-12 {
        return Err(Error::InvalidParams(format!(
            "energy level {m} sits below the floor {floor}; no admissible width"
        )));
    }
    let g = |d: f64| params.alpha * d - d.ln();
    // The map g is strictly increasing to the right of its minimum at
    // d = 1/alpha, so bracket the larger root starting there.
    let mut lo = 1.0 / params.alpha;
    let mut hi = lo.max(1.0);
    while g(hi) < m {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Discrete metric slope of the energy at a state; `f64::INFINITY` when the
/// density vanishes somewhere or the sum overflows the guard.
///
/// The interior Fisher term uses derivatives of the cell averages at the
/// cell centers: centered differences inside, second-order one-sided at the
/// first and last cells. Wall traces come from the same one-sided
/// extrapolation the rest of the crate uses.
pub fn slope(mu: &GMeasure, params: &ModelParams) -> f64 {
    let rho = mu.rho();
    let n = rho.len();
    let dx = mu.dx();
    if rho.iter().any(|v| *v <= 0.0) {
        return f64::INFINITY;
    }
    let deriv = |i: usize| -> f64 {
        if n == 1 {
            0.0
        } else if n == 2 {
            (rho[1] - rho[0]) / dx
        } else if i == 0 {
            (-3.0 * rho[0] + 4.0 * rho[1] - rho[2]) / (2.0 * dx)
        } else if i == n - 1 {
            (3.0 * rho[n - 1] - 4.0 * rho[n - 2] + rho[n - 3]) / (2.0 * dx)
        } else {
            (rho[i + 1] - rho[i - 1]) / (2.0 * dx)
        }
    };
    let mut sum = 0.0;
    for (i, &v) in rho.iter().enumerate() {
        let d = deriv(i);
        sum += d * d / v * dx;
    }
    let tl = mu.trace_left() - params.alpha;
    let tr = mu.trace_right() - params.alpha;
    sum += (tl * tl + tr * tr) / params.beta;
    if !sum.is_finite() || sum > SLOPE_OVERFLOW_GUARD {
        f64::INFINITY
    } else {
        sum.sqrt()
    }
}

/// Convexity defect of the energy along the monotone interpolation from
/// `mu0` to `mu1`: returns `LHS - RHS` of
///
/// ```text
/// E(mu1) - E(mu0) >= \int (1 - phi'') rho0 dx + alpha*((R1 - R0) - (L1 - L0)) ,
/// ```
///
/// which is nonnegative up to discretization error because the energy is
/// convex along transport interpolations. The curvature integral is taken in
/// mass coordinates, where `\int phi'' rho0 dx` becomes the mean of the
/// image-to-source gap ratios of the transport map's quantile cells.
pub fn displacement_convexity_gap(
    mu0: &GMeasure,
    mu1: &GMeasure,
    params: &ModelParams,
) -> Result<f64> {
    let t = transport::optimal_map(mu0, mu1)?;
    let n = t.map_nodes.len() - 1;
    let dm = 1.0 / n as f64;
    let mut curvature = 0.0;
    for w in t.map_nodes.windows(2) {
        let dsrc = w[1].0 - w[0].0;
        let dimg = w[1].1 - w[0].1;
        curvature += dm * dimg / dsrc;
    }
    let lhs = energy(mu1, params).total - energy(mu0, params).total;
    let rhs = (1.0 - curvature)
        + params.alpha * ((mu1.r() - mu0.r()) - (mu1.l() - mu0.l()));
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(alpha: f64, beta: f64) -> ModelParams {
        ModelParams::new(alpha, beta).unwrap()
    }

    #[test]
    fn energy_of_flat_profile_matches_closed_form() {
        // rho = 2 on [0, 1/2]: entropy log 2, interface alpha/2.
        let mu = GMeasure::make_uniform(0.0, 0.5, 128, 1.0).unwrap();
        let p = params(1.0, 1.0);
        let e = energy(&mu, &p);
        assert_abs_diff_eq!(e.entropy_part, std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(e.interface_part, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e.total, 1.1931471805599453, epsilon = 1e-12);
        assert_abs_diff_eq!(e.total, e.entropy_part + e.interface_part, epsilon = 0.0);
    }

    #[test]
    fn floor_is_attained_by_the_saturated_profile() {
        // rho = alpha on an interval of width 1/alpha is the minimizer.
        let p = params(0.5, 1.0);
        let mu = GMeasure::make_uniform(-1.0, 1.0, 64, 1.0).unwrap();
        let e = energy(&mu, &p);
        assert_abs_diff_eq!(e.total, energy_lower_bound(&p), epsilon = 1e-12);
        assert_abs_diff_eq!(energy_lower_bound(&p), 1.0 - std::f64::consts::LN_2, epsilon = 1e-15);
        // Any other admissible state sits strictly above.
        let other = GMeasure::make_uniform(-1.0, 2.0, 64, 1.0).unwrap();
        assert!(energy(&other, &p).total > energy_lower_bound(&p));
    }

    #[test]
    fn diameter_bound_matches_bisection_oracle() {
        // Larger root of x - log x = 2, computed independently to high
        // precision: 3.14619322062058258...
        let p = params(1.0, 1.0);
        let d = diameter_bound(2.0, &p).unwrap();
        assert_abs_diff_eq!(d, 3.146193220620583, epsilon = 1e-11);
        // Second oracle point at alpha = 1/2, level = floor + 1/2:
        // root 4.71535334789179811...
        let p2 = params(0.5, 1.0);
        let m2 = energy_lower_bound(&p2) + 0.5;
        let d2 = diameter_bound(m2, &p2).unwrap();
        assert_abs_diff_eq!(d2, 4.715353347891798, epsilon = 1e-11);
    }

    #[test]
    fn diameter_bound_edge_cases() {
        let p = params(1.0, 1.0);
        // At the floor the only admissible width is 1/alpha.
        let d = diameter_bound(energy_lower_bound(&p), &p).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-6);
        // Below the floor nothing is admissible.
        assert!(diameter_bound(0.5, &p).is_err());
    }

    #[test]
    fn slope_of_flat_profiles() {
        // rho = 2 on [0, 1/2], alpha = beta = 1: interior term vanishes,
        // each wall contributes (2 - 1)^2, so slope = sqrt(2).
        let p = params(1.0, 1.0);
        let mu = GMeasure::make_uniform(0.0, 0.5, 64, 1.0).unwrap();
        assert_abs_diff_eq!(slope(&mu, &p), std::f64::consts::SQRT_2, epsilon = 1e-12);
        // The saturated profile is stationary: slope 0.
        let eq = GMeasure::make_uniform(0.0, 1.0, 64, 1.0).unwrap();
        assert_abs_diff_eq!(slope(&eq, &p), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn slope_converges_for_affine_density() {
        // rho(x) = (4 - 2x)/3 on [0, 1], alpha = beta = 1:
        // slope^2 = (2/3) log 2 + 2/9 in closed form.
        let p = params(1.0, 1.0);
        let expected = ((2.0 / 3.0) * std::f64::consts::LN_2 + 2.0 / 9.0).sqrt();
        let slope_at = |n: usize| -> f64 {
            let shape: Vec<f64> = (0..n)
                .map(|i| {
                    let x = (i as f64 + 0.5) / n as f64;
                    (4.0 - 2.0 * x) / 3.0
                })
                .collect();
            let mu = GMeasure::new(0.0, 1.0, shape, 1.0).unwrap();
            slope(&mu, &p)
        };
        let coarse = (slope_at(128) - expected).abs();
        let fine = (slope_at(256) - expected).abs();
        assert!(fine < 1e-4, "slope error at N=256 too large: {fine}");
        assert!(fine < coarse, "no convergence: {coarse} -> {fine}");
    }

    #[test]
    fn slope_flags_vacuum_as_infinite() {
        let p = params(1.0, 1.0);
        let mut shape = vec![2.0; 16];
        shape[7] = 0.0;
        let mu = GMeasure::from_shape(0.0, 1.0, shape, 1.0).unwrap();
        assert!(slope(&mu, &p).is_infinite());
        assert!(energy(&mu, &p).slope.is_infinite());
    }

    #[test]
    fn convexity_gap_of_dilation_matches_closed_form() {
        // Uniform [0,1] against uniform [0,2]: energies differ by 1 - log 2
        // and the curvature/interface terms cancel exactly, so the gap is
        // 1 - log 2.
        let p = params(1.0, 1.0);
        let a = GMeasure::make_uniform(0.0, 1.0, 256, 1.0).unwrap();
        let b = GMeasure::make_uniform(0.0, 2.0, 256, 1.0).unwrap();
        let gap = displacement_convexity_gap(&a, &b, &p).unwrap();
        assert_abs_diff_eq!(gap, 1.0 - std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn convexity_gap_is_nonnegative_both_ways() {
        let p = params(1.0, 1.0);
        let shape: Vec<f64> = (0..128)
            .map(|i| {
                let u = (i as f64 + 0.5) / 128.0;
                1.0 + 0.4 * (2.0 * std::f64::consts::PI * u).sin()
            })
            .collect();
        let a = GMeasure::from_shape(0.0, 1.2, shape, 1.0).unwrap();
        let b = GMeasure::make_uniform(-0.5, 1.0, 128, 1.0).unwrap();
        assert!(displacement_convexity_gap(&a, &b, &p).unwrap() >= -1e-6);
        assert!(displacement_convexity_gap(&b, &a, &p).unwrap() >= -1e-6);
    }
}
