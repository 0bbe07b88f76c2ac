//! The C^1 smoothing window `h_{alpha,beta,tau}` and its Fourier
//! coefficients, with numerical checks of their integral identities and
//! decay bounds.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NODES: usize = 64;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(NODES).unwrap()))
}

/// `g(x) = -2x^3 + 3x^2`.
pub fn g(x: f64) -> f64 {
    x * x * (3.0 - 2.0 * x)
}

pub fn g1(x: f64) -> f64 {
    6.0 * x * (1.0 - x)
}

pub fn g2(x: f64) -> f64 {
    6.0 - 12.0 * x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
}

impl WindowSpec {
    pub fn new(alpha: f64, beta: f64, tau: f64) -> Result<Self> {
        if !(alpha <= beta) || !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidWindow(format!("alpha = {alpha}, beta = {beta}, tau = {tau}")));
        }
        Ok(WindowSpec { alpha, beta, tau })
    }

    /// `beta - alpha + 2 tau < 2 pi`, needed for the Fourier series.
    pub fn is_periodic(&self) -> bool {
        self.beta - self.alpha + 2.0 * self.tau < 2.0 * PI
    }

    fn knots(&self) -> [f64; 4] {
        [self.alpha - self.tau, self.alpha, self.beta, self.beta + self.tau]
    }
}

/// `h_{alpha,beta,tau}(x)`.
pub fn window_eval(w: &WindowSpec, x: f64) -> f64 {
    let [a0, a, b, b1] = w.knots();
    if x <= a0 || x >= b1 {
        0.0
    } else if x < a {
        g((x - a0) / w.tau)
    } else if x <= b {
        1.0
    } else {
        g((b1 - x) / w.tau)
    }
}

pub fn window_derivative(w: &WindowSpec, x: f64) -> f64 {
    let [a0, a, b, b1] = w.knots();
    if x <= a0 || x >= b1 || (a..=b).contains(&x) {
        0.0
    } else if x < a {
        g1((x - a0) / w.tau) / w.tau
    } else {
        -g1((b1 - x) / w.tau) / w.tau
    }
}

pub fn window_second_derivative(w: &WindowSpec, x: f64) -> f64 {
    let [a0, a, b, b1] = w.knots();
    if x <= a0 || x >= b1 || (a..=b).contains(&x) {
        0.0
    } else if x < a {
        g2((x - a0) / w.tau) / (w.tau * w.tau)
    } else {
        g2((b1 - x) / w.tau) / (w.tau * w.tau)
    }
}

/// Gauss–Legendre over `[a, b]` split at the given points.
fn integrate_split(f: impl Fn(f64) -> f64, pts: &[f64]) -> f64 {
    pts.windows(2).filter(|p| p[1] > p[0]).map(|p| rule().integrate(p[0], p[1], &f)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowIntegrals {
    pub mass: f64,
    pub variation: f64,
    pub curvature: f64,
}

/// `(int h, int |h'|, int |h''|)`; closed forms `beta - alpha + tau`, `2`,
/// `6 / tau`.
pub fn window_integrals(w: &WindowSpec) -> WindowIntegrals {
    let [a0, a, b, b1] = w.knots();
    let pts = [a0, a0 + w.tau / 2.0, a, b, b + w.tau / 2.0, b1];
    WindowIntegrals {
        mass: integrate_split(|x| window_eval(w, x), &pts),
        variation: integrate_split(|x| window_derivative(w, x).abs(), &pts),
        curvature: integrate_split(|x| window_second_derivative(w, x).abs(), &pts),
    }
}

/// `int_{alpha - tau}^{alpha} h`, which equals `tau / 2`.
pub fn left_ramp_mass(w: &WindowSpec) -> f64 {
    integrate_split(|x| window_eval(w, x), &[w.alpha - w.tau, w.alpha])
}

/// `(int g, int |g'|, int |g''|)` over `[0, 1]`.
pub fn g_integrals() -> (f64, f64, f64) {
    (
        integrate_split(g, &[0.0, 1.0]),
        integrate_split(|x| g1(x).abs(), &[0.0, 1.0]),
        integrate_split(|x| g2(x).abs(), &[0.0, 0.5, 1.0]),
    )
}

/// `c_a = (1/2pi) int h(x) e^{-iax} dx` by composite Gauss–Legendre split at
/// the knots, with panels short enough to resolve the oscillation.
pub fn fourier_coefficient(w: &WindowSpec, a: i64) -> Result<Complex64> {
    if !w.is_periodic() {
        return Err(Error::PeriodicityViolated);
    }
    let k = a as f64;
    let [a0, _, _, b1] = w.knots();
    let knots = w.knots();
    let mut pts = vec![a0];
    for seg in knots.windows(2) {
        let panels = ((k.abs() * (seg[1] - seg[0]) / PI).ceil() as usize).max(1);
        for p in 1..panels {
            pts.push(seg[0] + (seg[1] - seg[0]) * p as f64 / panels as f64);
        }
        pts.push(seg[1]);
    }
    debug_assert_eq!(*pts.last().unwrap(), b1);
    let re = integrate_split(|x| window_eval(w, x) * (k * x).cos(), &pts);
    let im = integrate_split(|x| -window_eval(w, x) * (k * x).sin(), &pts);
    Ok(Complex64::new(re, im) / (2.0 * PI))
}

/// `int_0^1 g(u) e^{-iku} du` in closed form (integration by parts; series
/// for small `k`).
fn ramp_transform(k: f64) -> Complex64 {
    if k.abs() < 0.5 {
        // sum_m (-ik)^m / m! * int u^m g(u) = sum (-ik)^m/m! * (3/(m+3) - 2/(m+4))
        let mut s = Complex64::new(0.0, 0.0);
        let mut t = Complex64::new(1.0, 0.0);
        for m in 0..40 {
            let mf = m as f64;
            s += t * (3.0 / (mf + 3.0) - 2.0 / (mf + 4.0));
            t *= Complex64::new(0.0, -k) / (mf + 1.0);
        }
        return s;
    }
    let ik = Complex64::new(0.0, k);
    let e1 = Complex64::from_polar(1.0, -k);
    // derivatives of g at 0 and 1: g = (0, 1), g' = (0, 0), g'' = (6, -6), g''' = (-12, -12)
    let d = [(0.0, 1.0), (0.0, 0.0), (6.0, -6.0), (-12.0, -12.0)];
    let mut s = Complex64::new(0.0, 0.0);
    let mut p = ik;
    for (f0, f1) in d {
        s += -(e1 * f1 - f0) / p;
        p *= ik;
    }
    s
}

/// Closed-form `c_a`.
pub fn fourier_coefficient_exact(w: &WindowSpec, a: i64) -> Result<Complex64> {
    if !w.is_periodic() {
        return Err(Error::PeriodicityViolated);
    }
    let k = a as f64;
    let [a0, al, be, b1] = w.knots();
    let flat = if a == 0 {
        Complex64::new(be - al, 0.0)
    } else {
        (Complex64::from_polar(1.0, -k * be) - Complex64::from_polar(1.0, -k * al)) / Complex64::new(0.0, -k)
    };
    let left = Complex64::from_polar(w.tau, -k * a0) * ramp_transform(k * w.tau);
    let right = Complex64::from_polar(w.tau, -k * b1) * ramp_transform(-k * w.tau);
    Ok((flat + left + right) / (2.0 * PI))
}

/// `min{1/(pi|a|), 3/(pi tau a^2)}`.
pub fn fourier_bound(w: &WindowSpec, a: i64) -> f64 {
    let k = a.unsigned_abs() as f64;
    (1.0 / (PI * k)).min(3.0 / (PI * w.tau * k * k))
}

/// `max_x |sum_{|a| <= big_a} c_a e^{iax} - h(x)|` over `samples` points.
pub fn partial_sum_error(w: &WindowSpec, big_a: i64, samples: usize) -> Result<f64> {
    let c: Vec<Complex64> = (0..=big_a).map(|a| fourier_coefficient_exact(w, a)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for s in 0..samples {
        let x = -PI + 2.0 * PI * (s as f64 + 0.5) / samples as f64;
        let mut v = c[0].re;
        for (a, ca) in c.iter().enumerate().skip(1) {
            // c_{-a} = conj(c_a)
            v += 2.0 * (ca * Complex64::from_polar(1.0, a as f64 * x)).re;
        }
        let hx = (-2..=2).map(|m| window_eval(w, x + 2.0 * PI * m as f64)).sum::<f64>();
        worst = worst.max((v - hx).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    fn close(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        CheckRow { name: name.into(), value, expected, tolerance, pass: (value - expected).abs() <= tolerance }
    }

    fn below(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        CheckRow { name: name.into(), value, expected: bound, tolerance, pass: value <= bound + tolerance }
    }
}

/// Random admissible specs (periodic), deterministic in `seed`.
pub fn random_specs(seed: u64, count: usize) -> Vec<WindowSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let alpha = rng.random_range(-PI..PI);
            let len = rng.random_range(0.0..3.0);
            let tau = rng.random_range(0.05..(2.0 * PI - len) / 2.0 * 0.99);
            WindowSpec { alpha, beta: alpha + len, tau }
        })
        .collect()
}

/// Integral identities, Fourier bounds for `1 <= a <= 200`, `c_0`, and the
/// range of `h` over two fixed specs and 20 random ones.
pub fn window_check(seed: u64) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let (ig, ig1, ig2) = g_integrals();
    rows.push(CheckRow::close("int g", ig, 0.5, 1e-12));
    rows.push(CheckRow::close("int |g'|", ig1, 1.0, 1e-12));
    rows.push(CheckRow::close("int |g''|", ig2, 3.0, 1e-12));
    let mut specs =
        vec![WindowSpec { alpha: 0.0, beta: 1.0, tau: 0.5 }, WindowSpec { alpha: 0.0, beta: 0.0, tau: 1.0 }];
    specs.extend(random_specs(seed, 20));
    for (i, w) in specs.iter().enumerate() {
        let tag = format!("spec {i} ({:.4}, {:.4}, {:.4})", w.alpha, w.beta, w.tau);
        let it = window_integrals(w);
        rows.push(CheckRow::close(format!("{tag}: int h"), it.mass, w.beta - w.alpha + w.tau, 1e-9));
        rows.push(CheckRow::close(format!("{tag}: int |h'|"), it.variation, 2.0, 1e-9));
        rows.push(CheckRow::close(
            format!("{tag}: int |h''|"),
            it.curvature,
            6.0 / w.tau,
            1e-9 * (6.0 / w.tau).max(1.0),
        ));
        rows.push(CheckRow::close(format!("{tag}: half mass"), left_ramp_mass(w), w.tau / 2.0, 1e-12));
        let (lo, hi) = (0..2001)
            .map(|s| window_eval(w, w.alpha - 2.0 * w.tau + (w.beta - w.alpha + 4.0 * w.tau) * s as f64 / 2000.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        rows.push(CheckRow {
            name: format!("{tag}: 0 <= h <= 1"),
            value: hi,
            expected: 1.0,
            tolerance: 0.0,
            pass: lo >= 0.0 && hi <= 1.0,
        });
        if !w.is_periodic() {
            continue;
        }
        let c0 = fourier_coefficient(w, 0).unwrap();
        rows.push(CheckRow::close(format!("{tag}: c_0"), c0.re, (w.beta - w.alpha + w.tau) / (2.0 * PI), 1e-12));
        let mut worst = f64::NEG_INFINITY;
        let mut sym: f64 = 0.0;
        for a in 1..=200 {
            let ca = fourier_coefficient(w, a).unwrap();
            worst = worst.max(ca.norm() - fourier_bound(w, a));
            sym = sym.max((fourier_coefficient(w, -a).unwrap() - ca.conj()).norm());
        }
        rows.push(CheckRow::below(format!("{tag}: max_a |c_a| - bound"), worst, 0.0, 1e-12));
        rows.push(CheckRow::below(format!("{tag}: |c_-a - conj c_a|"), sym, 0.0, 1e-12));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn evaluation_examples() {
        let w = WindowSpec::new(0.0, 1.0, 0.5).unwrap();
        assert_eq!(window_eval(&w, 0.5), 1.0);
        assert_eq!(window_eval(&w, 0.0), 1.0);
        assert_eq!(window_eval(&w, 1.0), 1.0);
        assert!((window_eval(&w, -0.25) - 0.5).abs() < 1e-15);
        assert_eq!(window_eval(&w, -0.5), 0.0);
        assert_eq!(window_eval(&w, -3.0), 0.0);
        assert!(WindowSpec::new(1.0, 0.0, 0.5).is_err());
        assert!(WindowSpec::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn integral_examples() {
        let it = window_integrals(&WindowSpec::new(0.0, 1.0, 0.5).unwrap());
        assert!((it.mass - 1.5).abs() < 1e-12);
        assert!((it.variation - 2.0).abs() < 1e-12);
        assert!((it.curvature - 12.0).abs() < 1e-12);
        let it = window_integrals(&WindowSpec::new(0.0, 0.0, 1.0).unwrap());
        assert!((it.mass - 1.0).abs() < 1e-12);
        assert!((it.variation - 2.0).abs() < 1e-12);
        assert!((it.curvature - 6.0).abs() < 1e-12);
        let (a, b, c) = g_integrals();
        assert!((a - 0.5).abs() < 1e-14 && (b - 1.0).abs() < 1e-14 && (c - 3.0).abs() < 1e-14);
    }

    #[test]
    fn c0_and_closed_form() {
        let w = WindowSpec::new(0.0, 1.0, 0.5).unwrap();
        let c0 = fourier_coefficient(&w, 0).unwrap();
        assert!((c0.re - 1.5 / (2.0 * PI)).abs() < 1e-14 && c0.im.abs() < 1e-15);
        for w in random_specs(3, 10) {
            for a in [-50i64, -3, -1, 0, 1, 2, 7, 120] {
                let q = fourier_coefficient(&w, a).unwrap();
                let e = fourier_coefficient_exact(&w, a).unwrap();
                assert!((q - e).norm() < 1e-13, "{a} {q} {e}");
            }
        }
    }

    #[test]
    fn periodicity_precondition() {
        let w = WindowSpec::new(0.0, 6.0, 0.5).unwrap();
        assert_eq!(fourier_coefficient(&w, 1), Err(Error::PeriodicityViolated));
    }

    #[test]
    fn continuity_at_knots() {
        for w in random_specs(4, 10) {
            for x in w.knots() {
                let e = 1e-9;
                assert!((window_eval(&w, x - e) - window_eval(&w, x + e)).abs() < 1e-7);
                assert!((window_derivative(&w, x - e) - window_derivative(&w, x + e)).abs() < 1e-6 / w.tau.powi(2));
            }
        }
    }

    #[test]
    fn partial_sums_converge() {
        let w = WindowSpec::new(-0.5, 0.7, 1.0).unwrap();
        let err = partial_sum_error(&w, 10_000, 1000).unwrap();
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn full_table_passes() {
        let rows = window_check(11);
        let bad: Vec<_> = rows.iter().filter(|r| !r.pass).collect();
        assert!(bad.is_empty(), "{bad:?}");
    }

    proptest! {
        #[test]
        fn range_is_unit_interval(alpha in -3.0f64..3.0, len in 0.0f64..3.0, tau in 0.01f64..2.0, x in -8.0f64..8.0) {
            let w = WindowSpec::new(alpha, alpha + len, tau).unwrap();
            let v = window_eval(&w, x);
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn decay_bound(alpha in -3.0f64..3.0, len in 0.0f64..2.0, tau in 0.05f64..2.0, a in 1i64..400) {
            let w = WindowSpec::new(alpha, alpha + len, tau).unwrap();
            let c = fourier_coefficient_exact(&w, a).unwrap();
            prop_assert!(c.norm() <= fourier_bound(&w, a) + 1e-12);
        }
    }
}
