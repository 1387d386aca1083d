//! States of the flow: a diffusing density plus two boundary point masses.
//!
//! A state is a triple (rho, L, R): a nonnegative density `rho` supported on
//! the interval [L, R] with unit integral, together with one atom of fixed
//! weight `beta` at each endpoint. The atoms model the immobile phase the
//! moving front exchanges mass with; their weight never changes, only their
//! position does.
//!
//! Two views of the interior density are used throughout:
//!
//! * [`GMeasure`] stores cell averages on a uniform grid over [L, R]. This is
//!   the Eulerian view, convenient for quadrature, output, and the
//!   front-tracking reference solver.
//! * [`QuantileRep`] stores the positions X_0 <= ... <= X_N at which the
//!   cumulative mass reaches the equally spaced levels i/N. This is the
//!   Lagrangian view, in which the quadratic transport distance becomes a
//!   weighted Euclidean norm and the minimizing-movement step becomes a
//!   smooth convex program.
//!
//! Round-tripping between the two views is lossy at order 1/N; tests pin the
//! rate. Quantile inversion requires every cell to carry mass, so states with
//! interior vacuum are rejected rather than silently mishandled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance accepted on the unit-mass invariant when validating input.
const MASS_SLACK: f64 = 1e-10;

/// Physical constants of the model.
///
/// `alpha` is the energy cost per unit length of fluid interval (the driving
/// force pulling the endpoints inward); `beta` is the weight of the point
/// mass sitting on each endpoint (the inertia of the fronts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
}

impl ModelParams {
    /// Both constants must be strictly positive and finite.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParams(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }
}

/// A density-plus-atoms state, interior stored as uniform-grid cell averages.
///
/// Invariants (enforced at construction):
/// * `l < r`, both finite;
/// * all cell averages are finite and nonnegative;
/// * the interior mass `sum(rho) * (r - l) / n` equals 1 after the exact
///   renormalization applied by the constructor (inputs further than 1e-10
///   from unit mass are rejected as corrupt rather than repaired);
/// * `beta > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GMeasure {
    l: f64,
    r: f64,
    rho: Vec<f64>,
    beta: f64,
}

impl GMeasure {
    /// Validates the invariants, renormalizes the interior mass to exactly 1,
    /// and wraps the data.
    pub fn new(l: f64, r: f64, rho: Vec<f64>, beta: f64) -> Result<Self> {
        if !(l.is_finite() && r.is_finite() && l < r) {
            return Err(Error::InvalidInterval { l, r });
        }
        if rho.is_empty() {
            return Err(Error::InvalidDensity("empty cell vector".into()));
        }
        if let Some(bad) = rho.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!(
                "cell average {bad} is negative or non-finite"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        let dx = (r - l) / rho.len() as f64;
        let mass: f64 = rho.iter().sum::<f64>() * dx;
        if (mass - 1.0).abs() > MASS_SLACK {
            return Err(Error::MassInvariant { mass });
        }
        let mut rho = rho;
        // Kill accumulated roundoff so the invariant holds exactly; downstream
        // energy and transport bounds assume unit interior mass.
        let scale = 1.0 / mass;
        for v in &mut rho {
            *v *= scale;
        }
        Ok(Self { l, r, rho, beta })
    }

    /// Builds a state from raw (possibly unnormalized) nonnegative cell data,
    /// normalizing whatever positive mass is present to 1. Used by profile
    /// constructors and resampling, where the input is shape, not mass.
    pub fn from_shape(l: f64, r: f64, shape: Vec<f64>, beta: f64) -> Result<Self> {
        if !(l.is_finite() && r.is_finite() && l < r) {
            return Err(Error::InvalidInterval { l, r });
        }
        if shape.is_empty() {
            return Err(Error::InvalidDensity("empty cell vector".into()));
        }
        if let Some(bad) = shape.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!(
                "cell value {bad} is negative or non-finite"
            )));
        }
        let dx = (r - l) / shape.len() as f64;
        let mass: f64 = shape.iter().sum::<f64>() * dx;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidDensity(format!(
                "shape has non-positive total mass {mass}"
            )));
        }
        let mut rho = shape;
        let scale = 1.0 / mass;
        for v in &mut rho {
            *v *= scale;
        }
        Ok(Self { l, r, rho, beta })
    }

    /// Uniform density 1/(r-l) on [l, r] split into `n` cells.
    pub fn make_uniform(l: f64, r: f64, n: usize, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDensity("need at least one cell".into()));
        }
        let value = 1.0 / (r - l);
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidInterval { l, r });
        }
        Self::new(l, r, vec![value; n], beta)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Cell averages of the interior density, left to right.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    pub fn dx(&self) -> f64 {
        (self.r - self.l) / self.rho.len() as f64
    }

    /// Center of cell `i`.
    pub fn cell_center(&self, i: usize) -> f64 {
        self.l + (i as f64 + 0.5) * self.dx()
    }

    /// Interior mass only; the atoms contribute a constant 2*beta on top.
    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.dx()
    }

    /// First moment of the full state: integral of x against the density
    /// (midpoint rule) plus beta*(l + r) from the two atoms.
    pub fn first_moment(&self) -> f64 {
        let dx = self.dx();
        let interior: f64 = self
            .rho
            .iter()
            .enumerate()
            .map(|(i, v)| v * (self.l + (i as f64 + 0.5) * dx))
            .sum::<f64>()
            * dx;
        interior + self.beta * (self.l + self.r)
    }

    /// Integral of `f` against the full state: midpoint quadrature of f*rho
    /// over the cells plus beta*f(l) + beta*f(r) from the atoms.
    pub fn integrate_against<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let dx = self.dx();
        let interior: f64 = self
            .rho
            .iter()
            .enumerate()
            .map(|(i, v)| v * f(self.l + (i as f64 + 0.5) * dx))
            .sum::<f64>()
            * dx;
        interior + self.beta * (f(self.l) + f(self.r))
    }

    /// Integral of `f` against the bulk density alone (no atom
    /// contributions), by the midpoint rule.
    pub fn integrate_against_density<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let dx = self.dx();
        self.rho
            .iter()
            .enumerate()
            .map(|(i, v)| v * f(self.l + (i as f64 + 0.5) * dx))
            .sum::<f64>()
            * dx
    }

    /// Density value extrapolated to the left endpoint from the two nearest
    /// cell averages. Linear (hence second-order) extrapolation: the value at
    /// a cell center equals the cell average up to O(dx^2) for smooth
    /// densities, and fitting a line through the first two centers gives
    /// (3*rho_0 - rho_1)/2 at the boundary. A single-cell state falls back to
    /// its only average. The result may be slightly negative for rough data;
    /// callers that need a physical value must decide how to treat that.
    pub fn trace_left(&self) -> f64 {
        match self.rho.len() {
            1 => self.rho[0],
            _ => 1.5 * self.rho[0] - 0.5 * self.rho[1],
        }
    }

    /// Mirror image of [`GMeasure::trace_left`] at the right endpoint.
    pub fn trace_right(&self) -> f64 {
        let n = self.rho.len();
        match n {
            1 => self.rho[0],
            _ => 1.5 * self.rho[n - 1] - 0.5 * self.rho[n - 2],
        }
    }

    /// Cumulative interior mass at the uniform grid nodes, normalized so the
    /// last entry is exactly 1. Entry i is the mass of [l, l + i*dx].
    fn cumulative(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut cum = Vec::with_capacity(self.rho.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for v in &self.rho {
            acc += v * dx;
            cum.push(acc);
        }
        let total = *cum.last().unwrap();
        for c in &mut cum {
            *c /= total;
        }
        let last = cum.len() - 1;
        cum[last] = 1.0;
        cum
    }

    /// Positions at which the cumulative interior mass reaches the given
    /// levels. Levels must be sorted into [0, 1]; every cell must carry mass
    /// so the inverse is single-valued.
    pub fn quantiles_at(&self, levels: &[f64]) -> Result<Vec<f64>> {
        if let Some(i) = self.rho.iter().position(|v| *v <= 0.0) {
            return Err(Error::ZeroCell { index: i });
        }
        let cum = self.cumulative();
        let dx = self.dx();
        let mut out = Vec::with_capacity(levels.len());
        let mut cell = 0usize;
        for &m in levels {
            debug_assert!((0.0..=1.0).contains(&m), "mass level out of range");
            // Levels arrive sorted, so the containing cell only moves right.
            while cell + 1 < self.rho.len() && cum[cell + 1] < m {
                cell += 1;
            }
            let frac = (m - cum[cell]) / (cum[cell + 1] - cum[cell]);
            out.push(self.l + (cell as f64 + frac) * dx);
        }
        Ok(out)
    }

    /// Inverse-CDF view at the N+1 equally spaced mass levels i/N, where N is
    /// the cell count. Fails if any cell carries no mass. The endpoint nodes
    /// are pinned to l and r exactly: with strictly positive cells the
    /// cumulative mass reaches 0 and 1 precisely there.
    pub fn to_quantile(&self) -> Result<QuantileRep> {
        let n = self.rho.len();
        let levels: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let mut x = self.quantiles_at(&levels)?;
        x[0] = self.l;
        x[n] = self.r;
        QuantileRep::new(self.l, self.r, x, self.beta)
    }

    /// Conservative re-binning onto `n` uniform cells over the same interval:
    /// each new cell receives exactly the mass the old piecewise-constant
    /// density puts there. Exact when the new grid refines the old one.
    pub fn resample(&self, n: usize) -> Result<GMeasure> {
        if n == 0 {
            return Err(Error::InvalidDensity("need at least one cell".into()));
        }
        let old_edges: Vec<f64> = (0..=self.rho.len())
            .map(|i| self.l + i as f64 * self.dx())
            .collect();
        let rho = rebin_masses(&old_edges, &self.rho, self.l, self.r, n);
        GMeasure::from_shape(self.l, self.r, rho, self.beta)
    }
}

/// Inverse-CDF (quantile) view of a state.
///
/// `x[i]` is the position at which the cumulative interior mass reaches i/N.
/// Invariants: the nodes are strictly increasing, and the support they span
/// stays inside the fluid interval: `l <= x[0]` and `x[N] <= r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRep {
    l: f64,
    r: f64,
    x: Vec<f64>,
    beta: f64,
}

impl QuantileRep {
    pub fn new(l: f64, r: f64, x: Vec<f64>, beta: f64) -> Result<Self> {
        if !(l.is_finite() && r.is_finite() && l < r) {
            return Err(Error::InvalidInterval { l, r });
        }
        if x.len() < 2 {
            return Err(Error::InvalidDensity(
                "quantile view needs at least two nodes".into(),
            ));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDensity(
                "quantile nodes must all be finite".into(),
            ));
        }
        for (i, w) in x.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(Error::NonMonotoneQuantiles { index: i });
            }
        }
        if x[0] < l {
            return Err(Error::NonMonotoneQuantiles { index: 0 });
        }
        if *x.last().unwrap() > r {
            return Err(Error::NonMonotoneQuantiles { index: x.len() - 1 });
        }
        Ok(Self { l, r, x, beta })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Node positions at mass levels i/N, i = 0..=N.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Number of equal-mass cells (one less than the node count).
    pub fn n_cells(&self) -> usize {
        self.x.len() - 1
    }

    /// Mass carried by each quantile cell.
    pub fn delta_m(&self) -> f64 {
        1.0 / self.n_cells() as f64
    }

    /// Quantile value at an arbitrary mass level, by linear interpolation
    /// between the stored nodes (the underlying density is piecewise
    /// constant on the quantile cells, so its quantile function is exactly
    /// piecewise linear).
    pub fn at_level(&self, m: f64) -> f64 {
        let n = self.n_cells();
        let s = m.clamp(0.0, 1.0) * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        let frac = s - i as f64;
        self.x[i] + frac * (self.x[i + 1] - self.x[i])
    }

    /// Resamples the piecewise-constant density this view represents onto N
    /// uniform cells over [l, r]. Mass is rebinned conservatively, then the
    /// unit-mass invariant is re-asserted exactly.
    pub fn to_gmeasure(&self) -> Result<GMeasure> {
        let n = self.n_cells();
        let dm = self.delta_m();
        let masses = vec![dm; n];
        let rho = rebin_masses(&self.x, &masses_to_densities(&self.x, &masses), self.l, self.r, n);
        GMeasure::from_shape(self.l, self.r, rho, self.beta)
    }
}

/// Densities of cells given edges and per-cell masses.
fn masses_to_densities(edges: &[f64], masses: &[f64]) -> Vec<f64> {
    masses
        .iter()
        .zip(edges.windows(2))
        .map(|(m, w)| m / (w[1] - w[0]))
        .collect()
}

/// Distributes the mass of a piecewise-constant density (given by `edges`
/// and per-cell `values`) onto `n` uniform cells spanning [l, r], returning
/// the new cell averages. Mass outside [l, r] is assumed absent (callers
/// guarantee the support fits).
fn rebin_masses(edges: &[f64], values: &[f64], l: f64, r: f64, n: usize) -> Vec<f64> {
    let dx = (r - l) / n as f64;
    let mut out = vec![0.0; n];
    for (k, w) in edges.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let v = values[k];
        if b <= l || a >= r || v == 0.0 {
            continue;
        }
        // Clip the source cell to the target interval, then spread its mass
        // over the uniform cells it overlaps.
        let a = a.max(l);
        let b = b.min(r);
        let first = (((a - l) / dx).floor() as usize).min(n - 1);
        let last = (((b - l) / dx).ceil() as usize).clamp(first + 1, n);
        for (j, slot) in out.iter_mut().enumerate().take(last).skip(first) {
            let lo = (l + j as f64 * dx).max(a);
            let hi = (l + (j + 1) as f64 * dx).min(b);
            if hi > lo {
                *slot += v * (hi - lo);
            }
        }
    }
    for v in &mut out {
        *v /= dx;
    }
    out
}

/// Builds the quantile view directly from a state; see
/// [`GMeasure::to_quantile`].
pub fn to_quantile(mu: &GMeasure) -> Result<QuantileRep> {
    mu.to_quantile()
}

/// Rebuilds a uniform-grid state from a quantile view; see
/// [`QuantileRep::to_gmeasure`].
pub fn from_quantile(q: &QuantileRep) -> Result<GMeasure> {
    q.to_gmeasure()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn smooth_state(n: usize) -> GMeasure {
        // 1 + 0.5*sin(2*pi*u) on [0, 2], sampled at cell centers; strictly
        // positive and genuinely nonuniform.
        let (l, r) = (0.0, 2.0);
        let shape: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                1.0 + 0.5 * (2.0 * std::f64::consts::PI * u).sin()
            })
            .collect();
        GMeasure::from_shape(l, r, shape, 1.0).unwrap()
    }

    #[test]
    fn make_uniform_has_unit_mass_and_flat_density() {
        let mu = GMeasure::make_uniform(0.0, 0.5, 64, 1.0).unwrap();
        assert_abs_diff_eq!(mu.mass(), 1.0, epsilon = 1e-14);
        for v in mu.rho() {
            assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GMeasure::make_uniform(1.0, 1.0, 8, 1.0).is_err());
        assert!(GMeasure::make_uniform(2.0, 1.0, 8, 1.0).is_err());
        assert!(GMeasure::new(0.0, 1.0, vec![1.0; 8], 0.0).is_err());
        assert!(GMeasure::new(0.0, 1.0, vec![-1.0, 3.0], 1.0).is_err());
        // Mass 2, far outside the 1e-10 acceptance band.
        assert!(GMeasure::new(0.0, 1.0, vec![2.0; 8], 1.0).is_err());
        assert!(ModelParams::new(0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -2.0).is_err());
    }

    #[test]
    fn integrate_against_linear_function_is_exact() {
        // Midpoint quadrature integrates affine functions exactly, so the
        // only contributions beyond the interior integral are the atoms.
        let mu = GMeasure::make_uniform(0.0, 1.0, 128, 0.5).unwrap();
        let got = mu.integrate_against(|x| x);
        assert_abs_diff_eq!(got, 0.5 + 0.5 * (0.0 + 1.0), epsilon = 1e-13);
        assert_abs_diff_eq!(got, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn first_moment_matches_integrate_against_identity() {
        let mu = GMeasure::make_uniform(0.0, 1.0, 64, 1.0).unwrap();
        assert_abs_diff_eq!(mu.first_moment(), 1.5, epsilon = 1e-13);
        let nonuniform = smooth_state(97);
        assert_abs_diff_eq!(
            nonuniform.first_moment(),
            nonuniform.integrate_against(|x| x),
            epsilon = 1e-13
        );
    }

    #[test]
    fn traces_reproduce_affine_densities_exactly() {
        // rho(x) = (4 - 2x)/3 on [0, 1] has unit mass; linear extrapolation
        // from cell averages is exact for affine profiles.
        let n = 32;
        let shape: Vec<f64> = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) / n as f64;
                (4.0 - 2.0 * x) / 3.0
            })
            .collect();
        let mu = GMeasure::new(0.0, 1.0, shape, 1.0).unwrap();
        assert_abs_diff_eq!(mu.trace_left(), 4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mu.trace_right(), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn quantile_nodes_of_uniform_state_are_uniform() {
        let mu = GMeasure::make_uniform(1.0, 3.0, 16, 1.0).unwrap();
        let q = mu.to_quantile().unwrap();
        assert_eq!(q.n_cells(), 16);
        for (i, &x) in q.x().iter().enumerate() {
            assert_abs_diff_eq!(x, 1.0 + 2.0 * i as f64 / 16.0, epsilon = 1e-12);
        }
        assert_eq!(q.x()[0], 1.0);
        assert_eq!(q.x()[16], 3.0);
    }

    #[test]
    fn to_quantile_rejects_vacuum_cells() {
        let mut rho = vec![2.0; 8];
        rho[3] = 0.0;
        let mu = GMeasure::from_shape(0.0, 1.0, rho, 1.0).unwrap();
        match mu.to_quantile() {
            Err(Error::ZeroCell { index }) => assert_eq!(index, 3),
            other => panic!("expected ZeroCell error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_error_is_first_order_in_cell_count() {
        // L1 distance between cell averages before and after the quantile
        // round trip drops at least linearly in N.
        let err_at = |n: usize| -> f64 {
            let mu = smooth_state(n);
            let back = mu.to_quantile().unwrap().to_gmeasure().unwrap();
            let dx = mu.dx();
            mu.rho()
                .iter()
                .zip(back.rho())
                .map(|(a, b)| (a - b).abs() * dx)
                .sum()
        };
        let e64 = err_at(64);
        let e128 = err_at(128);
        let e256 = err_at(256);
        assert!(e64 < 0.05, "round-trip error unexpectedly large: {e64}");
        assert!(
            e128 <= 0.6 * e64,
            "no decay from N=64 ({e64}) to N=128 ({e128})"
        );
        assert!(
            e256 <= 0.6 * e128,
            "no decay from N=128 ({e128}) to N=256 ({e256})"
        );
    }

    #[test]
    fn resample_preserves_mass_and_refines_exactly() {
        let mu = smooth_state(32);
        let fine = mu.resample(64).unwrap();
        assert_abs_diff_eq!(fine.mass(), 1.0, epsilon = 1e-14);
        // Doubling the grid refines each cell, so coarsening back is exact.
        let back = fine.resample(32).unwrap();
        for (a, b) in mu.rho().iter().zip(back.rho()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn quantile_rep_validation_catches_violations() {
        assert!(QuantileRep::new(0.0, 1.0, vec![0.0, 0.5, 0.5, 1.0], 1.0).is_err());
        assert!(QuantileRep::new(0.1, 1.0, vec![0.0, 0.5, 1.0], 1.0).is_err());
        assert!(QuantileRep::new(0.0, 0.9, vec![0.0, 0.5, 1.0], 1.0).is_err());
        assert!(QuantileRep::new(0.0, 1.0, vec![0.0, 0.5, 1.0], 1.0).is_ok());
    }

    #[test]
    fn at_level_interpolates_between_nodes() {
        let q = QuantileRep::new(0.0, 2.0, vec![0.0, 1.0, 2.0], 1.0).unwrap();
        assert_abs_diff_eq!(q.at_level(0.25), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q.at_level(0.75), 1.5, epsilon = 1e-15);
        assert_eq!(q.at_level(0.0), 0.0);
        assert_eq!(q.at_level(1.0), 2.0);
    }
}
