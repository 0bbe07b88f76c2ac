//! Erdős–Turán size of a system and the discrepancy bounds built on it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cycles::positive_degree;
use crate::error::{Error, Result};
use crate::lattice_geometry::{projected_mixed_volumes, LatticePolytope, LatticeVector};
use crate::laurent::{LaurentPolynomial, SupNormInterval, SystemSpec, UnivariatePolynomial};
use crate::resultants::nonvanishing_directional_resultants;
use crate::solver::ZeroCycle;

/// Closed real interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Interval { lower: x, upper: x }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lower - tol && x <= self.upper + tol
    }

    /// Image under a nondecreasing map.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Interval {
        Interval { lower: f(self.lower), upper: f(self.upper) }
    }
}

/// Catalan's constant `G = sum (-1)^m / (2m+1)^2`.
///
/// Euler transform of the alternating series.
pub fn catalan_constant() -> f64 {
    // Repeated averaging of partial sums (van Wijngaarden style).
    let terms = 40;
    let mut partial = Vec::with_capacity(terms);
    let mut s = 0.0;
    for m in 0..terms {
        let k = (2 * m + 1) as f64;
        s += if m % 2 == 0 { 1.0 } else { -1.0 } / (k * k);
        partial.push(s);
    }
    while partial.len() > 1 {
        partial = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    partial[0]
}

/// Quoted numeric value of `c`; it does not match `sqrt(2 pi / G)` and is
/// only used as the stricter constant in checks.
pub const UNIVARIATE_CONSTANT_QUOTED: f64 = 2.5619;

/// `c = sqrt(2 pi / G)`.
pub fn univariate_constant() -> f64 {
    (2.0 * PI / catalan_constant()).sqrt()
}

fn exponent_spreads(f: &LaurentPolynomial) -> Vec<i64> {
    let n = f.n();
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for e in f.terms().keys() {
        for j in 0..n {
            lo[j] = lo[j].min(e[j]);
            hi[j] = hi[j].max(e[j]);
        }
    }
    lo.iter().zip(&hi).map(|(a, b)| b - a).collect()
}

/// Sup norm enclosure used by the bounds.
///
/// Lower end: grid maximum plus local ascent. Upper end: the smaller of the
/// l1 norm and a fine-grid maximum inflated by the second-order Bernstein
/// estimate. At the true maximiser the gradient of `|f|^2` vanishes, and
/// `|f|^2` along any direction `h` has frequencies at most
/// `Omega = sum_j w_j |h_j|`, so a grid point at distance `pi/M` per axis
/// keeps at least `(1 - Omega^2 / 2)` of `||f||^2`.
pub fn certified_sup_norm(f: &LaurentPolynomial) -> Result<SupNormInterval> {
    let base = f.sup_norm_default()?;
    let spreads = exponent_spreads(f);
    let total: i64 = spreads.iter().sum();
    if total == 0 {
        return Ok(SupNormInterval { lower: base.upper, upper: base.upper });
    }
    let n = f.n() as u32;
    let cap = (1usize << 24) as f64;
    let max_order = cap.powf(1.0 / n as f64).floor() as usize;
    let order = ((32 * total).max(64) as usize).min(max_order);
    let omega = PI * total as f64 / order as f64;
    let keep = 1.0 - 0.5 * omega * omega;
    let mut upper = base.upper;
    if keep > 0.25 {
        let grid = f.sup_norm(order, false)?.lower;
        upper = upper.min(grid / keep.sqrt() * (1.0 + 1e-12));
    }
    let lower = base.lower.max(f.sup_norm(order.min(4096), false)?.lower).min(upper);
    Ok(SupNormInterval { lower, upper })
}

fn log_interval(s: &SupNormInterval) -> Interval {
    Interval { lower: s.lower.ln(), upper: s.upper.ln() }
}

/// `eta(f) = (1/d) log(||f||_sup / sqrt|a_0 a_d|)` as an interval.
pub fn eta_univariate(f: &UnivariatePolynomial) -> Result<Interval> {
    let f = f.trimmed();
    let d = f.degree();
    if d == 0 {
        return Err(Error::VanishingExtremeCoefficient);
    }
    let a0 = f.coeffs[0].norm();
    let ad = f.coeffs[d].norm();
    if a0 == 0.0 || ad == 0.0 {
        return Err(Error::VanishingExtremeCoefficient);
    }
    let sup = certified_sup_norm(&f.to_laurent())?;
    let shift = 0.5 * (a0.ln() + ad.ln());
    Ok(log_interval(&sup).map(|l| (l - shift) / d as f64))
}

/// One factor of the denominator of `eta` at the witness direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionTerm {
    pub v: LatticeVector,
    pub log_abs_res: f64,
    /// `|<v, w>|` at the witness.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaBreakdown {
    pub eta_interval: Interval,
    pub witness_w: Vec<f64>,
    pub per_direction: Vec<DirectionTerm>,
    #[serde(rename = "D")]
    pub d: u64,
    pub supnorm_intervals: Vec<SupNormInterval>,
    /// Set when the supremum over directions was sampled (n = 3), in which
    /// case the interval is a lower estimate of the true supremum.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub approximate: bool,
}

/// Inputs of the `eta` objective, independent of how the resultants were
/// obtained.
#[derive(Debug, Clone)]
pub struct EtaData {
    pub polytopes: Vec<LatticePolytope>,
    pub log_norms: Vec<Interval>,
    pub resultants: Vec<(LatticeVector, f64)>,
    pub d: u64,
}

impl EtaData {
    pub fn from_system(system: &SystemSpec) -> Result<(Self, Vec<SupNormInterval>)> {
        let d = system.bernstein_number()?;
        let res = nonvanishing_directional_resultants(system)?;
        let sups = system.polynomials().iter().map(certified_sup_norm).collect::<Result<Vec<_>>>()?;
        let data = EtaData {
            polytopes: system.polytopes().to_vec(),
            log_norms: sups.iter().map(log_interval).collect(),
            resultants: res.into_iter().map(|r| (r.v, r.log_abs)).collect(),
            d,
        };
        Ok((data, sups))
    }

    fn n(&self) -> usize {
        self.polytopes.len()
    }

    /// `D * eta` objective at `w`, with the lower and upper sup norms.
    pub fn objective(&self, w: &[f64]) -> Result<(f64, f64)> {
        let dw = projected_mixed_volumes(&self.polytopes, w)?;
        let den: f64 = self.resultants.iter().map(|(v, r)| 0.5 * v.dot_f64(w).abs() * r).sum();
        let lo: f64 = dw.iter().zip(&self.log_norms).map(|(d, l)| d * l.lower).sum();
        let hi: f64 = dw.iter().zip(&self.log_norms).map(|(d, l)| d * l.upper).sum();
        Ok((lo - den, hi - den))
    }
}

fn unit(t: f64) -> [f64; 2] {
    [t.cos(), t.sin()]
}

/// Angles where the n = 2 objective can fail to be of the form
/// `A cos t + B sin t`: directions orthogonal to each `v`, and directions
/// parallel to a vertex difference of some `Q_i` (where the extremal
/// vertices along `w^perp` switch).
fn kink_angles(data: &EtaData) -> Vec<f64> {
    let mut t = Vec::new();
    let mut push_perp = |x: f64, y: f64, shift: f64| {
        let a = y.atan2(x) + shift;
        t.push(a.rem_euclid(2.0 * PI));
        t.push((a + PI).rem_euclid(2.0 * PI));
    };
    for (v, _) in &data.resultants {
        push_perp(v.0[0] as f64, v.0[1] as f64, PI / 2.0);
    }
    for q in &data.polytopes {
        let vs = q.vertices();
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                push_perp((vs[j][0] - vs[i][0]) as f64, (vs[j][1] - vs[i][1]) as f64, 0.0);
            }
        }
    }
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if t.is_empty() {
        t.push(0.0);
    }
    t
}

/// Exact maximisation over the circle: on each arc the objective is
/// `A cos t + B sin t`, whose maximum is at an endpoint or at `atan2(B, A)`.
fn maximise_circle(data: &EtaData, pick: impl Fn((f64, f64)) -> f64) -> Result<(f64, f64)> {
    let kinks = kink_angles(data);
    let m = kinks.len();
    let f = |t: f64| -> Result<f64> { Ok(pick(data.objective(&unit(t))?)) };
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..m {
        let t0 = kinks[k];
        let t1 = if k + 1 < m { kinks[k + 1] } else { kinks[0] + 2.0 * PI };
        let mut cands = vec![t0];
        if t1 - t0 > 1e-9 {
            // Recover A, B from two interior samples of the arc.
            let (s1, s2) = (t0 + (t1 - t0) / 3.0, t0 + 2.0 * (t1 - t0) / 3.0);
            let (g1, g2) = (f(s1)?, f(s2)?);
            let det = (s2 - s1).sin();
            let a = (g1 * s2.sin() - g2 * s1.sin()) / det;
            let b = (g2 * s1.cos() - g1 * s2.cos()) / det;
            let mut tc = b.atan2(a);
            while tc < t0 {
                tc += 2.0 * PI;
            }
            if tc < t1 {
                cands.push(tc);
            }
        }
        for t in cands {
            let val = f(t)?;
            if val > best.0 {
                best = (val, t);
            }
        }
    }
    Ok(best)
}

fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn normalise(w: [f64; 3]) -> [f64; 3] {
    let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    [w[0] / n, w[1] / n, w[2] / n]
}

fn maximise_sphere(data: &EtaData, pick: impl Fn((f64, f64)) -> f64) -> Result<(f64, [f64; 3])> {
    let f = |w: &[f64; 3]| -> Result<f64> { Ok(pick(data.objective(w)?)) };
    let mut scored = fibonacci_sphere(20_000).into_iter().map(|w| Ok((f(&w)?, w))).collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored[0];
    for &(v0, w0) in scored.iter().take(8) {
        let (mut val, mut w) = (v0, w0);
        let mut step = 0.02;
        while step > 1e-10 {
            let mut moved = false;
            for axis in 0..3 {
                for sign in [-1.0, 1.0] {
                    let mut c = w;
                    c[axis] += sign * step;
                    let c = normalise(c);
                    let cv = f(&c)?;
                    if cv > val {
                        val = cv;
                        w = c;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        if val > best.0 {
            best = (val, w);
        }
    }
    Ok(best)
}

/// `eta` from precomputed data, for n <= 3.
pub fn eta_from_data(data: &EtaData, sups: Vec<SupNormInterval>) -> Result<EtaBreakdown> {
    let n = data.n();
    let d = data.d as f64;
    let (lo, hi, w, approximate) = match n {
        1 => {
            let (a, b) = (data.objective(&[1.0])?, data.objective(&[-1.0])?);
            let w = if b.1 > a.1 { -1.0 } else { 1.0 };
            (a.0.max(b.0), a.1.max(b.1), vec![w], false)
        }
        2 => {
            let (lo, _) = maximise_circle(data, |p| p.0)?;
            let (hi, t) = maximise_circle(data, |p| p.1)?;
            (lo, hi, unit(t).to_vec(), false)
        }
        3 => {
            let (lo, _) = maximise_sphere(data, |p| p.0)?;
            let (hi, w) = maximise_sphere(data, |p| p.1)?;
            (lo, hi, w.to_vec(), true)
        }
        _ => return Err(Error::UnsupportedDimension { op: "eta", n }),
    };
    let per_direction = data
        .resultants
        .iter()
        .map(|(v, r)| DirectionTerm { v: v.clone(), log_abs_res: *r, weight: v.dot_f64(&w).abs() })
        .collect();
    Ok(EtaBreakdown {
        eta_interval: Interval { lower: lo / d, upper: hi / d },
        witness_w: w,
        per_direction,
        d: data.d,
        supnorm_intervals: sups,
        approximate,
    })
}

/// Erdős–Turán size of a system (n <= 2; the resultants are not available
/// beyond that).
pub fn eta(system: &SystemSpec) -> Result<EtaBreakdown> {
    let n = system.n();
    if n > 2 {
        return Err(Error::UnsupportedDimension { op: "eta", n });
    }
    let (data, sups) = EtaData::from_system(system)?;
    eta_from_data(&data, sups)
}

/// Univariate Erdős–Turán bounds `(angle, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateBounds {
    pub eta: Interval,
    pub angle: Interval,
    pub radius: Interval,
}

pub fn et_bound_univariate(f: &UnivariatePolynomial, eps: f64) -> Result<UnivariateBounds> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    let eta = eta_univariate(f)?;
    let c = univariate_constant();
    Ok(UnivariateBounds { eta, angle: eta.map(|e| c * e.max(0.0).sqrt()), radius: eta.map(|e| 2.0 / eps * e.max(0.0)) })
}

fn log_plus(x: f64) -> f64 {
    x.max(1.0).ln()
}

/// `66 n 2^n (18 + log+(1/eta))^{2(n-1)/3} eta^{1/3}`.
pub fn angle_bound_multivariate(eta: f64, n: usize) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::NonPositiveEta(eta));
    }
    let n_f = n as f64;
    Ok(66.0 * n_f * 2f64.powi(n as i32) * (18.0 + log_plus(1.0 / eta)).powf(2.0 * (n_f - 1.0) / 3.0) * eta.cbrt())
}

/// `(angle, radius)` bounds for a system of size `eta`.
pub fn et_bound_multivariate(eta: f64, n: usize, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    Ok((angle_bound_multivariate(eta, n)?, 2.0 * n as f64 / eps * eta))
}

/// `22 n (8/3)^n (9 - log theta)^{2(n-1)/3} theta^{2/3}`.
pub fn tomography_bound(theta: f64, n: usize) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    let n_f = n as f64;
    Ok(22.0
        * n_f
        * (8.0 / 3.0f64).powi(n as i32)
        * (9.0 - theta.ln()).powf(2.0 * (n_f - 1.0) / 3.0)
        * theta.powf(2.0 / 3.0))
}

/// Upper bound on `eta` from simplex containments `Q_j ⊂ d_j Δ^n + b_j`.
/// The resultant term is dropped for integer systems, where every nonzero
/// directional resultant has modulus at least 1.
pub fn eta_upper_bound(system: &SystemSpec, d: &[i64], shifts: &[Vec<i64>]) -> Result<f64> {
    let n = system.n();
    if d.len() != n || shifts.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: d.len().min(shifts.len()) });
    }
    for (j, f) in system.polynomials().iter().enumerate() {
        let inside = d[j] >= 1
            && f.effective_support().iter().all(|a| {
                let y: Vec<i64> = a.iter().zip(&shifts[j]).map(|(x, b)| x - b).collect();
                y.iter().all(|&c| c >= 0) && y.iter().sum::<i64>() <= d[j]
            });
        if !inside {
            return Err(Error::ContainmentViolated { index: j + 1, d: d[j], shift: shifts[j].clone() });
        }
    }
    let mv = system.bernstein_number()? as f64;
    let n_f = n as f64;
    let prod: f64 = d.iter().map(|&x| x as f64).product();
    let mut sum = 0.0;
    for (j, f) in system.polynomials().iter().enumerate() {
        sum += certified_sup_norm(f)?.upper.ln() / d[j] as f64;
    }
    let mut total = (n_f + n_f.sqrt()) * prod * sum;
    let integer = system.polynomials().iter().all(|f| f.integer_coefficients().is_some());
    if !integer {
        for r in nonvanishing_directional_resultants(system)? {
            total += 0.5 * r.v.euclidean_norm() * log_plus((-r.log_abs).exp());
        }
    }
    Ok(total / mv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub delta_measured: f64,
    pub bound_value: Interval,
    pub verdict: Verdict,
    pub constants_used: BTreeMap<String, f64>,
}

impl BoundReport {
    /// Pass when the measurement is below the lower end of the bound, fail
    /// when it is above the upper end.
    pub fn new(name: &str, delta_measured: f64, bound_value: Interval, constants: &[(&str, f64)]) -> Self {
        let verdict = if delta_measured <= bound_value.lower {
            Verdict::Pass
        } else if delta_measured > bound_value.upper {
            Verdict::Fail
        } else {
            Verdict::Indeterminate
        };
        BoundReport {
            name: name.to_string(),
            delta_measured,
            bound_value,
            verdict,
            constants_used: constants.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn multivariate_constants(n: usize) -> Vec<(&'static str, f64)> {
    vec![("66_n_2^n", 66.0 * n as f64 * 2f64.powi(n as i32)), ("log_offset", 18.0)]
}

/// Angle bound report for a cycle with size `eta` (interval).
pub fn angle_report(delta: f64, eta: Interval, n: usize) -> Result<BoundReport> {
    if n == 1 {
        let c = univariate_constant();
        let b = eta.map(|e| c * e.max(0.0).sqrt());
        return Ok(BoundReport::new("angle", delta, b, &[("c", c), ("G", catalan_constant())]));
    }
    let b = Interval { lower: angle_bound_multivariate(eta.lower, n)?, upper: angle_bound_multivariate(eta.upper, n)? };
    Ok(BoundReport::new("angle", delta, b, &multivariate_constants(n)))
}

/// Radius bound report `Delta_rad(eps) <= (2n/eps) eta`.
pub fn radius_report(delta: f64, eta: Interval, n: usize, eps: f64) -> Result<BoundReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    let k = 2.0 * n as f64 / eps;
    Ok(BoundReport::new(&format!("radius(eps={eps})"), delta, eta.map(|e| k * e.max(0.0)), &[("2n/eps", k)]))
}

/// Tomography report: `Delta_ang <= 22 n (8/3)^n (...)`, `theta` exact.
pub fn tomography_report(delta: f64, theta: f64, n: usize) -> Result<BoundReport> {
    let b = tomography_bound(theta, n)?;
    Ok(BoundReport::new(
        "tomography",
        delta,
        Interval::point(b),
        &[("22_n_(8/3)^n", 22.0 * n as f64 * (8.0 / 3.0f64).powi(n as i32)), ("log_offset", 9.0)],
    ))
}

/// Positive-real-root count against the multivariate angle bound times
/// `deg Z`; the measured value is the fraction `deg Z_+ / deg Z`.
pub fn positive_degree_report(z: &ZeroCycle, eta: Interval) -> Result<BoundReport> {
    if z.is_empty() {
        return Err(Error::EmptyCycle);
    }
    let frac = positive_degree(z) as f64 / z.degree() as f64;
    let mut r = angle_report(frac, eta, z.n)?;
    r.name = "positive_degree".into();
    Ok(r)
}
