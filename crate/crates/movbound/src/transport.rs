//! The quadratic transport metric between states, monotone transport maps,
//! and dual (convex-conjugate) potentials.
//!
//! Between two states with the same atom weight `beta`, the squared distance
//! splits into three independent pieces: each atom travels straight to its
//! counterpart, and the interiors are matched by the monotone rearrangement,
//!
//! ```text
//! W2^2(mu0, mu1) = beta*(L0 - L1)^2 + W2^2(rho0, rho1) + beta*(R0 - R1)^2 .
//! ```
//!
//! In one dimension the interior part is computed in closed form from the
//! quantile functions: `W2^2(rho0, rho1) = \int_0^1 (X0(m) - X1(m))^2 dm`,
//! discretized by the midpoint rule at mass levels `(i + 1/2)/n`. The
//! monotone map is `T = X1 ∘ F0`, and the convex potential with `phi' = T`
//! certifies optimality through the duality identity
//!
//! ```text
//! W2^2 / 2 = \int (x^2/2 - phi) dmu0 + \int (y^2/2 - phi*) dmu1 ,
//! ```
//!
//! where both integrals include the atoms. `phi` is extended affinely
//! outside the source support with slopes `L1` and `R1`, so the atoms map
//! onto the atoms; `phi*` is the conjugate of that extended potential.

use crate::error::{Error, Result};
use crate::measure::GMeasure;

/// Default bound defining a "regular" density: values within
/// [1/REGULARITY_SCALE, REGULARITY_SCALE] on the whole fluid interval.
pub const REGULARITY_SCALE: f64 = 1e3;

/// Outcome of solving the transport problem between two states.
///
/// `map_nodes` pairs source positions (the source quantile nodes, endpoints
/// included) with their images; `phi_nodes` holds the convex potential at
/// the source nodes (anchored to 0 at the left endpoint), `phi_star_nodes`
/// its conjugate at the image nodes. `dual_value` is the right-hand side of
/// the duality identity; comparing it against `w2_squared / 2` measures how
/// far the discrete map is from certified optimality.
#[derive(Debug, Clone)]
pub struct TransportResult {
    pub w2_squared: f64,
    pub map_nodes: Vec<(f64, f64)>,
    pub phi_nodes: Vec<f64>,
    pub phi_star_nodes: Vec<f64>,
    pub dual_value: f64,
}

impl TransportResult {
    /// Absolute defect in the duality identity, `|w2^2/2 - dual|`.
    pub fn duality_gap(&self) -> f64 {
        (0.5 * self.w2_squared - self.dual_value).abs()
    }
}

/// Squared interior transport distance between two unit-mass densities,
/// by the midpoint rule on `n` quantile cells: both quantile functions are
/// evaluated at the mass levels `(i + 1/2)/n` and the squared differences
/// averaged. Exact for rigid translations; second-order in `1/n` otherwise.
pub fn w2_density(mu0: &GMeasure, mu1: &GMeasure, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDensity("need at least one quadrature level".into()));
    }
    let levels: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let x0 = mu0.quantiles_at(&levels)?;
    let x1 = mu1.quantiles_at(&levels)?;
    let sum: f64 = x0
        .iter()
        .zip(&x1)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    Ok(sum / n as f64)
}

/// Squared distance between full states: atom terms plus interior term.
/// The interiors are compared at `max(n0, n1)` midpoint levels. Errors if
/// the atom weights differ (transport between different-weight atoms is
/// undefined in this model).
pub fn w2_squared(mu0: &GMeasure, mu1: &GMeasure) -> Result<f64> {
    if mu0.beta() != mu1.beta() {
        return Err(Error::BetaMismatch {
            b0: mu0.beta(),
            b1: mu1.beta(),
        });
    }
    let n = mu0.n_cells().max(mu1.n_cells());
    let beta = mu0.beta();
    let dl = mu0.l() - mu1.l();
    let dr = mu0.r() - mu1.r();
    Ok(beta * dl * dl + w2_density(mu0, mu1, n)? + beta * dr * dr)
}

/// Distance between full states; square root of [`w2_squared`].
pub fn w2(mu0: &GMeasure, mu1: &GMeasure) -> Result<f64> {
    Ok(w2_squared(mu0, mu1)?.sqrt())
}

/// Whether every cell average lies within [1/scale, scale].
pub fn is_regular(mu: &GMeasure, scale: f64) -> bool {
    let lo = 1.0 / scale;
    mu.rho().iter().all(|v| (lo..=scale).contains(v))
}

/// Clamps the density into [1/scale, scale] and renormalizes, iterating to a
/// fixed point so the result is idempotent: a single clamp-then-normalize
/// can push floor values back out of range when the normalization shrinks
/// the profile, so repeat until nothing moves.
pub fn regularize(mu: &GMeasure, scale: f64) -> Result<GMeasure> {
    if !(scale.is_finite() && scale > 1.0) {
        return Err(Error::InvalidParams(format!(
            "regularity scale must exceed 1, got {scale}"
        )));
    }
    let lo = 1.0 / scale;
    let dx = mu.dx();
    let mut rho: Vec<f64> = mu.rho().to_vec();
    for _ in 0..100 {
        let mut changed = false;
        for v in &mut rho {
            let c = v.clamp(lo, scale);
            if c != *v {
                *v = c;
                changed = true;
            }
        }
        let mass: f64 = rho.iter().sum::<f64>() * dx;
        let s = 1.0 / mass;
        if (s - 1.0).abs() > 1e-15 {
            for v in &mut rho {
                *v *= s;
            }
            changed = true;
        }
        if !changed {
            break;
        }
    }
    GMeasure::new(mu.l(), mu.r(), rho, mu.beta())
}

/// Checks that a sampled map is monotone: for any two support points
/// (x1, y1), (x2, y2) the product (x1 - x2)(y1 - y2) is nonnegative. With
/// the source coordinates sorted this reduces to both coordinates being
/// nondecreasing along the list.
pub fn check_monotone_support(map_nodes: &[(f64, f64)]) -> bool {
    map_nodes
        .windows(2)
        .all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1)
}

/// A continuous piecewise-quadratic function given by knots, values at the
/// knots, and the (piecewise-linear) derivative's values at the knots.
/// Outside the knot range it continues affinely with the end slopes. This is
/// exactly the class the transport potentials live in: `phi` integrates the
/// piecewise-linear map, `phi*` integrates its inverse.
struct PiecewiseQuadratic {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PiecewiseQuadratic {
    /// Antiderivative of the piecewise-linear function through
    /// `(knots[i], slopes[i])`, anchored to `anchor` at the first knot.
    fn from_slopes(knots: Vec<f64>, slopes: Vec<f64>, anchor: f64) -> Self {
        let mut values = Vec::with_capacity(knots.len());
        values.push(anchor);
        for i in 1..knots.len() {
            let dx = knots[i] - knots[i - 1];
            let v = values[i - 1] + 0.5 * (slopes[i - 1] + slopes[i]) * dx;
            values.push(v);
        }
        Self { knots, values, slopes }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0] + self.slopes[0] * (x - self.knots[0]);
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1] + self.slopes[n - 1] * (x - self.knots[n - 1]);
        }
        let i = match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&x).expect("finite knots"))
        {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let h = self.knots[i + 1] - self.knots[i];
        let t = x - self.knots[i];
        // Quadratic segment: value + slope*t + curvature*t^2/2 with the
        // curvature given by the linear slope change across the segment.
        self.values[i] + self.slopes[i] * t + 0.5 * (self.slopes[i + 1] - self.slopes[i]) / h * t * t
    }
}

/// Shared construction behind [`optimal_map`] and [`kantorovich_potential`].
fn build_transport(mu0: &GMeasure, mu1: &GMeasure) -> Result<TransportResult> {
    if mu0.beta() != mu1.beta() {
        return Err(Error::BetaMismatch {
            b0: mu0.beta(),
            b1: mu1.beta(),
        });
    }
    if let Some(i) = mu1.rho().iter().position(|v| *v <= 0.0) {
        return Err(Error::NotRegular(format!(
            "target has interior vacuum at cell {i}; regularize it first"
        )));
    }
    let beta = mu0.beta();
    let n = mu0.n_cells().max(mu1.n_cells());
    let levels: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let mut src = mu0.quantiles_at(&levels)?;
    let mut img = mu1.quantiles_at(&levels)?;
    // Pin the endpoint nodes exactly; full-support positive densities reach
    // their interval ends, and the affine extension of the potential hinges
    // on the endpoints mapping onto the endpoints.
    src[0] = mu0.l();
    src[n] = mu0.r();
    img[0] = mu1.l();
    img[n] = mu1.r();

    let map_nodes: Vec<(f64, f64)> = src.iter().copied().zip(img.iter().copied()).collect();

    // phi' = T on the source nodes, anchored phi(L0) = 0. Values at nodes
    // follow by exact integration of the piecewise-linear map.
    let phi = PiecewiseQuadratic::from_slopes(src.clone(), img.clone(), 0.0);
    let phi_nodes = phi.values.clone();

    // The conjugate of a piecewise-quadratic convex function is piecewise
    // quadratic with the roles of knots and slopes swapped: at a node the
    // supremum in sup_x (x*y - phi(x)) is attained where phi' = y, i.e. at
    // the matching source node, giving phi*(img_i) = src_i*img_i - phi_i.
    let phi_star_nodes: Vec<f64> = (0..=n).map(|i| src[i] * img[i] - phi_nodes[i]).collect();
    let phi_star = PiecewiseQuadratic {
        knots: img.clone(),
        values: phi_star_nodes.clone(),
        slopes: src.clone(),
    };

    let w2_sq = w2_squared(mu0, mu1)?;

    // Dual objective: both interior integrals by midpoint quadrature on the
    // measures' own grids, atoms evaluated exactly.
    let mut dual = 0.0;
    let dx0 = mu0.dx();
    for (i, v) in mu0.rho().iter().enumerate() {
        let x = mu0.l() + (i as f64 + 0.5) * dx0;
        dual += v * (0.5 * x * x - phi.eval(x)) * dx0;
    }
    let dx1 = mu1.dx();
    for (i, v) in mu1.rho().iter().enumerate() {
        let y = mu1.l() + (i as f64 + 0.5) * dx1;
        dual += v * (0.5 * y * y - phi_star.eval(y)) * dx1;
    }
    for (x, y) in [(mu0.l(), mu1.l()), (mu0.r(), mu1.r())] {
        dual += beta * (0.5 * x * x - phi.eval(x));
        dual += beta * (0.5 * y * y - phi_star.eval(y));
    }

    Ok(TransportResult {
        w2_squared: w2_sq,
        map_nodes,
        phi_nodes,
        phi_star_nodes,
        dual_value: dual,
    })
}

/// The monotone map carrying `mu0` onto `mu1`: interior by monotone
/// rearrangement `T = X1 ∘ F0`, sampled at the source quantile nodes, with
/// the endpoints (and so the atoms) mapping onto the endpoints. Errors if
/// the target has interior vacuum.
pub fn optimal_map(mu0: &GMeasure, mu1: &GMeasure) -> Result<TransportResult> {
    build_transport(mu0, mu1)
}

/// The convex potential pair certifying the map of [`optimal_map`]:
/// `phi' = T` anchored to phi = 0 at the source's left endpoint, extended
/// affinely outside the support, and its conjugate `phi*`. The returned
/// `dual_value` should match `w2_squared / 2` up to discretization error;
/// see [`TransportResult::duality_gap`].
pub fn kantorovich_potential(mu0: &GMeasure, mu1: &GMeasure) -> Result<TransportResult> {
    build_transport(mu0, mu1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform(l: f64, r: f64, n: usize, beta: f64) -> GMeasure {
        GMeasure::make_uniform(l, r, n, beta).unwrap()
    }

    /// A strictly positive, clearly nonuniform state for generic checks.
    fn wavy(l: f64, r: f64, n: usize, beta: f64) -> GMeasure {
        let shape: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                1.0 + 0.45 * (3.0 * std::f64::consts::PI * u).cos()
            })
            .collect();
        GMeasure::from_shape(l, r, shape, beta).unwrap()
    }

    #[test]
    fn translation_distance_is_exact() {
        // Shifting a profile by d moves both atoms and every quantile by d:
        // W2^2 = (1 + 2*beta) * d^2, and the midpoint rule sees a constant
        // integrand, so the value is exact.
        let a = uniform(0.0, 1.0, 64, 0.5);
        let b = uniform(1.0, 2.0, 64, 0.5);
        let expected = (1.0f64 + 2.0 * 0.5) * 1.0;
        assert_abs_diff_eq!(w2_squared(&a, &b).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(w2(&a, &b).unwrap(), expected.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn dilation_interior_distance_approaches_one_third() {
        // Quantiles m and 2m give an integrand (m - 2m)^2 = m^2 whose exact
        // integral is 1/3; the midpoint rule converges at second order.
        let a = uniform(0.0, 1.0, 64, 1.0);
        let b = uniform(0.0, 2.0, 64, 1.0);
        let coarse = (w2_density(&a, &b, 64).unwrap() - 1.0 / 3.0).abs();
        let fine = (w2_density(&a, &b, 128).unwrap() - 1.0 / 3.0).abs();
        assert!(coarse < 1e-4, "N=64 error too large: {coarse}");
        let ratio = coarse / fine;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "expected ~4x error drop when doubling levels, got {ratio}"
        );
    }

    #[test]
    fn beta_mismatch_is_rejected() {
        let a = uniform(0.0, 1.0, 32, 1.0);
        let b = uniform(0.0, 1.0, 32, 2.0);
        assert!(matches!(
            w2_squared(&a, &b),
            Err(Error::BetaMismatch { .. })
        ));
    }

    #[test]
    fn map_of_dilation_is_the_line_two_x() {
        let a = uniform(0.0, 1.0, 32, 1.0);
        let b = uniform(0.0, 2.0, 32, 1.0);
        let t = optimal_map(&a, &b).unwrap();
        for (x, y) in &t.map_nodes {
            assert_abs_diff_eq!(*y, 2.0 * x, epsilon = 1e-12);
        }
        assert!(check_monotone_support(&t.map_nodes));
        assert_eq!(t.map_nodes[0], (0.0, 0.0));
        assert_eq!(t.map_nodes[32], (1.0, 2.0));
    }

    #[test]
    fn map_pushes_source_onto_target_quantiles() {
        // Push midpoint-level samples of the source through the map and
        // compare against the target's own quantiles at the same levels.
        let a = wavy(0.0, 1.0, 128, 1.0);
        let b = wavy(-0.5, 1.5, 128, 1.0);
        let t = optimal_map(&a, &b).unwrap();
        let levels: Vec<f64> = (0..128).map(|i| (i as f64 + 0.5) / 128.0).collect();
        let src = a.quantiles_at(&levels).unwrap();
        let want = b.quantiles_at(&levels).unwrap();
        // Interpolate the sampled map at the source points.
        let interp = |x: f64| -> f64 {
            let idx = t
                .map_nodes
                .partition_point(|(k, _)| *k < x)
                .clamp(1, t.map_nodes.len() - 1);
            let (x0, y0) = t.map_nodes[idx - 1];
            let (x1, y1) = t.map_nodes[idx];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        };
        let dx = (b.r() - b.l()) / 128.0;
        for (x, w) in src.iter().zip(&want) {
            assert!(
                (interp(*x) - w).abs() <= dx,
                "pushforward misses target quantile: {} vs {}",
                interp(*x),
                w
            );
        }
    }

    #[test]
    fn duality_identity_holds_to_first_order() {
        let a = uniform(0.0, 1.0, 256, 1.0);
        let b = uniform(0.0, 2.0, 256, 1.0);
        let t = kantorovich_potential(&a, &b).unwrap();
        // W2^2 = 0 + 1/3 + 1 here, so the dual sum must sit near 2/3.
        assert_abs_diff_eq!(t.dual_value, 2.0 / 3.0, epsilon = 5.0 / 256.0);
        assert!(t.duality_gap() <= 5.0 / 256.0);
    }

    #[test]
    fn duality_gap_shrinks_when_grids_refine() {
        let gap_at = |n: usize| -> f64 {
            let a = wavy(0.0, 1.0, n, 1.0);
            let b = wavy(0.25, 1.75, n, 1.0);
            kantorovich_potential(&a, &b).unwrap().duality_gap()
        };
        let coarse = gap_at(128);
        let fine = gap_at(256);
        assert!(coarse <= 5.0 / 128.0, "gap at N=128 too large: {coarse}");
        assert!(
            fine <= 0.6 * coarse,
            "duality gap did not shrink: {coarse} -> {fine}"
        );
    }

    #[test]
    fn potential_nodes_are_convex_and_anchored() {
        let a = wavy(0.0, 1.0, 64, 1.0);
        let b = uniform(0.5, 2.0, 64, 1.0);
        let t = kantorovich_potential(&a, &b).unwrap();
        assert_eq!(t.phi_nodes[0], 0.0);
        // Convexity: slopes (the image nodes) are nondecreasing, so secant
        // slopes of phi_nodes must be too.
        let secants: Vec<f64> = t
            .map_nodes
            .windows(2)
            .zip(t.phi_nodes.windows(2))
            .map(|(m, p)| (p[1] - p[0]) / (m[1].0 - m[0].0))
            .collect();
        for w in secants.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "phi lost convexity: {w:?}");
        }
    }

    #[test]
    fn conjugate_pairs_endpoint_products() {
        // At the endpoints the pair (phi, phi*) must satisfy the equality
        // case of Young's inequality: phi(L0) + phi*(L1) = L0*L1.
        let a = wavy(0.2, 1.2, 64, 1.0);
        let b = wavy(-0.3, 0.9, 64, 1.0);
        let t = kantorovich_potential(&a, &b).unwrap();
        let n = t.map_nodes.len() - 1;
        assert_abs_diff_eq!(
            t.phi_nodes[0] + t.phi_star_nodes[0],
            0.2 * (-0.3),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            t.phi_nodes[n] + t.phi_star_nodes[n],
            1.2 * 0.9,
            epsilon = 1e-12
        );
    }

    #[test]
    fn vacuum_target_is_rejected() {
        let a = uniform(0.0, 1.0, 8, 1.0);
        let mut rho = vec![2.0; 8];
        rho[4] = 0.0;
        let b = GMeasure::from_shape(0.0, 1.0, rho, 1.0).unwrap();
        assert!(matches!(optimal_map(&a, &b), Err(Error::NotRegular(_))));
    }

    #[test]
    fn regularize_clamps_and_is_idempotent() {
        // A spiky profile: one huge cell, the rest tiny.
        let n = 64;
        let mut shape = vec![1e-6; n];
        shape[10] = 5e4;
        let mu = GMeasure::from_shape(0.0, 1.0, shape, 1.0).unwrap();
        assert!(!is_regular(&mu, REGULARITY_SCALE));
        let reg = regularize(&mu, REGULARITY_SCALE).unwrap();
        assert_abs_diff_eq!(reg.mass(), 1.0, epsilon = 1e-12);
        let again = regularize(&reg, REGULARITY_SCALE).unwrap();
        for (a, b) in reg.rho().iter().zip(again.rho()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        // Regular states pass through untouched.
        let tame = uniform(0.0, 0.5, 16, 1.0);
        let same = regularize(&tame, REGULARITY_SCALE).unwrap();
        for (a, b) in tame.rho().iter().zip(same.rho()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-14);
        }
    }

    #[test]
    fn monotone_check_flags_a_swap() {
        let good = vec![(0.0, 0.0), (0.5, 1.0), (1.0, 2.0)];
        assert!(check_monotone_support(&good));
        let bad = vec![(0.0, 0.0), (0.5, 2.0), (1.0, 1.0)];
        assert!(!check_monotone_support(&bad));
    }
}
