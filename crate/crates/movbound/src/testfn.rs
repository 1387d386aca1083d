//! Smooth compactly supported test functions and time windows.
//!
//! The certificate battery probes weak forms and stationarity conditions by
//! integrating states against test functions. Three families are provided,
//! all with analytic first and second derivatives and a certified bound on
//! `sup |zeta''|`:
//!
//! * `gaussian_bump`: `exp(-u^2/2)` with `u = (x - c)/w`; not compactly
//!   supported in the strict sense, but below machine precision a few widths
//!   out, which is what the quadratures see;
//! * `bspline_cubic`: the cubic B-spline `B3(u)`, exactly C^2 with support
//!   `[c - 2w, c + 2w]`;
//! * `poly_cutoff`: `u^d * exp(-1/(1 - u^2))` on `|u| < 1`, a polynomial
//!   times the canonical smooth cutoff, exactly C^infinity with compact
//!   support `[c - w, c + w]`.
//!
//! Space-time probes are products `xi(t, x) = psi(t) * zeta(x)` with
//! [`TimeWindow`] supplying `psi`; windows either vanish at both ends of the
//! run (interior bumps) or start open at t = 0 and close before the final
//! time, which is what initial-condition terms in weak forms need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The canonical smooth cutoff `exp(-1/(1 - u^2))` on |u| < 1, with its
/// first derivative. Zero (exactly, in double precision) outside.
fn cutoff(u: f64) -> f64 {
    if u.abs() >= 1.0 - 1e-8 {
        return 0.0;
    }
    (-1.0 / (1.0 - u * u)).exp()
}

fn cutoff_prime(u: f64) -> f64 {
    if u.abs() >= 1.0 - 1e-8 {
        return 0.0;
    }
    let s = 1.0 - u * u;
    cutoff(u) * (-2.0 * u / (s * s))
}

fn cutoff_second(u: f64) -> f64 {
    if u.abs() >= 1.0 - 1e-8 {
        return 0.0;
    }
    let s = 1.0 - u * u;
    let q1 = -2.0 * u / (s * s);
    let q1p = -2.0 * (1.0 + 3.0 * u * u) / (s * s * s);
    cutoff(u) * (q1 * q1 + q1p)
}

/// Cubic B-spline B3 and derivatives on the reference scale (support
/// [-2, 2], even, C^2, max value 2/3 at the origin).
fn bspline(u: f64) -> f64 {
    let a = u.abs();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        let t = 2.0 - a;
        t * t * t / 6.0
    } else {
        2.0 / 3.0 - a * a + a * a * a / 2.0
    }
}

fn bspline_prime(u: f64) -> f64 {
    let a = u.abs();
    let sign = if u >= 0.0 { 1.0 } else { -1.0 };
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        let t = 2.0 - a;
        sign * (-0.5 * t * t)
    } else {
        sign * (-2.0 * a + 1.5 * a * a)
    }
}

fn bspline_second(u: f64) -> f64 {
    let a = u.abs();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        2.0 - a
    } else {
        -2.0 + 3.0 * a
    }
}

/// Which family a test function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionKind {
    GaussianBump,
    BsplineCubic,
    PolyCutoff,
}

/// A smooth spatial test function with analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: TestFunctionKind,
    pub center: f64,
    pub width: f64,
    /// Polynomial degree; only meaningful for `poly_cutoff`.
    pub degree: u32,
}

impl TestFunction {
    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        Self::new(TestFunctionKind::GaussianBump, center, width, 0)
    }

    pub fn bspline(center: f64, width: f64) -> Result<Self> {
        Self::new(TestFunctionKind::BsplineCubic, center, width, 0)
    }

    pub fn poly_cutoff(center: f64, width: f64, degree: u32) -> Result<Self> {
        Self::new(TestFunctionKind::PolyCutoff, center, width, degree)
    }

    pub fn new(kind: TestFunctionKind, center: f64, width: f64, degree: u32) -> Result<Self> {
        if !(width.is_finite() && width > 0.0 && center.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "test function needs finite center and positive width, got ({center}, {width})"
            )));
        }
        Ok(Self {
            kind,
            center,
            width,
            degree,
        })
    }

    fn u(&self, x: f64) -> f64 {
        (x - self.center) / self.width
    }

    /// zeta(x).
    pub fn eval(&self, x: f64) -> f64 {
        let u = self.u(x);
        match self.kind {
            TestFunctionKind::GaussianBump => (-0.5 * u * u).exp(),
            TestFunctionKind::BsplineCubic => bspline(u),
            TestFunctionKind::PolyCutoff => u.powi(self.degree as i32) * cutoff(u),
        }
    }

    /// zeta'(x).
    pub fn prime(&self, x: f64) -> f64 {
        let u = self.u(x);
        let inner = match self.kind {
            TestFunctionKind::GaussianBump => -u * (-0.5 * u * u).exp(),
            TestFunctionKind::BsplineCubic => bspline_prime(u),
            TestFunctionKind::PolyCutoff => {
                let d = self.degree;
                let poly_term = if d == 0 {
                    0.0
                } else {
                    d as f64 * u.powi(d as i32 - 1) * cutoff(u)
                };
                poly_term + u.powi(d as i32) * cutoff_prime(u)
            }
        };
        inner / self.width
    }

    /// zeta''(x).
    pub fn second(&self, x: f64) -> f64 {
        let u = self.u(x);
        let inner = match self.kind {
            TestFunctionKind::GaussianBump => (u * u - 1.0) * (-0.5 * u * u).exp(),
            TestFunctionKind::BsplineCubic => bspline_second(u),
            TestFunctionKind::PolyCutoff => {
                let d = self.degree;
                let t2 = if d < 2 {
                    0.0
                } else {
                    (d * (d - 1)) as f64 * u.powi(d as i32 - 2) * cutoff(u)
                };
                let t1 = if d == 0 {
                    0.0
                } else {
                    2.0 * d as f64 * u.powi(d as i32 - 1) * cutoff_prime(u)
                };
                t2 + t1 + u.powi(d as i32) * cutoff_second(u)
            }
        };
        inner / (self.width * self.width)
    }

    /// Certified upper bound on `sup_x |zeta''(x)|`. Closed form for the
    /// Gaussian (max at the center) and the B-spline (max at the center
    /// knot); a padded dense-sampling envelope for the cutoff family, whose
    /// extrema have no closed form.
    pub fn sup_second(&self) -> f64 {
        let w2 = self.width * self.width;
        match self.kind {
            TestFunctionKind::GaussianBump => 1.0 / w2,
            TestFunctionKind::BsplineCubic => 2.0 / w2,
            TestFunctionKind::PolyCutoff => {
                let samples = 8192;
                let mut best: f64 = 0.0;
                for i in 0..=samples {
                    let x = self.center + self.width * (2.0 * i as f64 / samples as f64 - 1.0);
                    best = best.max(self.second(x).abs());
                }
                best * (1.0 + 1e-6)
            }
        }
    }
}

/// Standard corpus of 12 test functions (4 per family) with centers spread
/// across [lo, hi] and widths scaled to the span, so together their supports
/// cover the whole window at two different length scales.
pub fn corpus(lo: f64, hi: f64) -> Vec<TestFunction> {
    let span = hi - lo;
    let mut out = Vec::with_capacity(12);
    for j in 0..4 {
        let c = lo + (j as f64 + 0.5) * span / 4.0;
        let w = if j % 2 == 0 { span / 5.0 } else { span / 8.0 };
        out.push(TestFunction::gaussian(c, w).expect("valid corpus width"));
    }
    for j in 0..4 {
        let c = lo + (j as f64 + 0.5) * span / 4.0;
        let w = if j % 2 == 0 { span / 8.0 } else { span / 5.0 };
        out.push(TestFunction::bspline(c, w).expect("valid corpus width"));
    }
    for j in 0..4u32 {
        let c = lo + (j as f64 + 0.5) * span / 4.0;
        let w = span / 3.0;
        out.push(TestFunction::poly_cutoff(c, w, j).expect("valid corpus width"));
    }
    out
}

/// A smooth window in time. `InitialWindow` is open at t = 0 (to exercise
/// initial-condition terms) and closes before `t_end`; `InteriorBump`
/// vanishes outside `(center - width, center + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeWindow {
    InitialWindow { t_end: f64 },
    InteriorBump { center: f64, width: f64 },
}

impl TimeWindow {
    pub fn psi(&self, t: f64) -> f64 {
        match self {
            TimeWindow::InitialWindow { t_end } => cutoff(t / t_end),
            TimeWindow::InteriorBump { center, width } => cutoff((t - center) / width),
        }
    }

    pub fn psi_prime(&self, t: f64) -> f64 {
        match self {
            TimeWindow::InitialWindow { t_end } => cutoff_prime(t / t_end) / t_end,
            TimeWindow::InteriorBump { center, width } => {
                cutoff_prime((t - center) / width) / width
            }
        }
    }
}

/// A separable space-time test function `xi(t, x) = psi(t) * zeta(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeTestFunction {
    pub window: TimeWindow,
    pub space: TestFunction,
}

impl SpaceTimeTestFunction {
    pub fn xi(&self, t: f64, x: f64) -> f64 {
        self.window.psi(t) * self.space.eval(x)
    }

    pub fn xi_t(&self, t: f64, x: f64) -> f64 {
        self.window.psi_prime(t) * self.space.eval(x)
    }

    pub fn xi_x(&self, t: f64, x: f64) -> f64 {
        self.window.psi(t) * self.space.prime(x)
    }

    pub fn xi_xx(&self, t: f64, x: f64) -> f64 {
        self.window.psi(t) * self.space.second(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite differences validate every analytic derivative.
    #[test]
    fn derivatives_match_finite_differences() {
        let eps = 1e-5;
        for f in corpus(-2.0, 2.0) {
            for i in 0..200 {
                let x = -2.5 + 5.0 * i as f64 / 199.0;
                let fd1 = (f.eval(x + eps) - f.eval(x - eps)) / (2.0 * eps);
                let fd2 = (f.eval(x + eps) - 2.0 * f.eval(x) + f.eval(x - eps)) / (eps * eps);
                assert!(
                    (fd1 - f.prime(x)).abs() < 2e-5 * (1.0 + f.prime(x).abs()),
                    "{:?} first derivative off at x={x}: fd {fd1} vs {}",
                    f.kind,
                    f.prime(x)
                );
                assert!(
                    (fd2 - f.second(x)).abs() < 5e-4 * (1.0 + f.second(x).abs()),
                    "{:?} second derivative off at x={x}: fd {fd2} vs {}",
                    f.kind,
                    f.second(x)
                );
            }
        }
    }

    #[test]
    fn sup_second_is_an_upper_envelope() {
        for f in corpus(-1.5, 1.5) {
            let bound = f.sup_second();
            for i in 0..4000 {
                let x = -2.0 + 4.0 * i as f64 / 3999.0;
                assert!(
                    f.second(x).abs() <= bound * (1.0 + 1e-12),
                    "{:?}: |zeta''({x})| = {} exceeds bound {}",
                    f.kind,
                    f.second(x).abs(),
                    bound
                );
            }
        }
    }

    #[test]
    fn corpus_has_twelve_members_covering_the_window() {
        let c = corpus(-3.0, 3.0);
        assert_eq!(c.len(), 12);
        assert_eq!(
            c.iter()
                .filter(|f| f.kind == TestFunctionKind::GaussianBump)
                .count(),
            4
        );
        assert_eq!(
            c.iter()
                .filter(|f| f.kind == TestFunctionKind::BsplineCubic)
                .count(),
            4
        );
        assert_eq!(
            c.iter()
                .filter(|f| f.kind == TestFunctionKind::PolyCutoff)
                .count(),
            4
        );
        for f in &c {
            assert!((-3.0..=3.0).contains(&f.center));
        }
        // Centers really are spread out, not bunched.
        let min = c.iter().map(|f| f.center).fold(f64::INFINITY, f64::min);
        let max = c.iter().map(|f| f.center).fold(f64::NEG_INFINITY, f64::max);
        assert!(max - min > 3.0);
    }

    #[test]
    fn compact_supports_vanish_outside() {
        let b = TestFunction::bspline(0.0, 0.5).unwrap();
        assert_eq!(b.eval(1.01), 0.0);
        assert_eq!(b.prime(-1.01), 0.0);
        assert_eq!(b.second(1.5), 0.0);
        let p = TestFunction::poly_cutoff(0.0, 1.0, 2).unwrap();
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.second(-1.0), 0.0);
        // The B-spline's second derivative is continuous across the knots.
        let knot = 0.5; // u = 1
        assert!((b.second(knot - 1e-9) - b.second(knot + 1e-9)).abs() < 1e-6);
    }

    #[test]
    fn time_windows_behave_at_the_ends() {
        let w = TimeWindow::InitialWindow { t_end: 0.25 };
        assert!(w.psi(0.0) > 0.3); // exp(-1) at the center of the cutoff
        assert_eq!(w.psi(0.25), 0.0);
        assert_eq!(w.psi(0.3), 0.0);
        let b = TimeWindow::InteriorBump {
            center: 0.1,
            width: 0.05,
        };
        assert_eq!(b.psi(0.04), 0.0);
        assert!(b.psi(0.1) > 0.3);
        assert_eq!(b.psi(0.16), 0.0);
        // psi' matches finite differences.
        for t in [0.01, 0.05, 0.1, 0.2] {
            let eps = 1e-6;
            let fd = (w.psi(t + eps) - w.psi(t - eps)) / (2.0 * eps);
            assert!((fd - w.psi_prime(t)).abs() < 1e-4 * (1.0 + fd.abs()));
        }
    }
}
