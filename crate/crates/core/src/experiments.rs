//! Dilated families, random systems, trend tables and the projective
//! geometry checks behind the probabilistic statements.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycles::{angle_discrepancy, radius_discrepancy, EpsValue};
use crate::error::{Error, Result};
use crate::et_bounds::{angle_report, eta, BoundReport, Interval, Verdict};
use crate::lattice_geometry::{convex_hull, LatticePolytope, Point};
use crate::laurent::{LaurentPolynomial, SystemSpec, UnivariatePolynomial};
use crate::solver::{fmt17, univariate_roots, zero_cycle};

/// Lattice points of `kappa * Q`.
pub fn dilated_support(q: &LatticePolytope, kappa: u32) -> Result<Vec<Point>> {
    if kappa == 0 {
        return Err(Error::InvalidConfig("kappa must be at least 1".into()));
    }
    let k = kappa as i64;
    let verts: Vec<Point> = q.vertices().iter().map(|v| v.iter().map(|x| x * k).collect()).collect();
    convex_hull(&verts)?.lattice_points()
}

/// Coefficient distribution of a random family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientLaw {
    /// Standard complex Gaussian, `E|c|^2 = 1`.
    Gaussian,
    /// Uniform on `{-1, 1}`.
    Sign,
    /// Uniform on `lo..=hi` with zero excluded.
    IntegerUniform(i64, i64),
}

fn draw(law: CoefficientLaw, rng: &mut ChaCha8Rng) -> Complex64 {
    match law {
        CoefficientLaw::Gaussian => {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        }
        CoefficientLaw::Sign => Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0),
        CoefficientLaw::IntegerUniform(lo, hi) => loop {
            let v = rng.random_range(lo..=hi);
            if v != 0 {
                break Complex64::new(v as f64, 0.0);
            }
        },
    }
}

/// A random system with support `kappa * Q_i` for each `i`, coefficients
/// drawn from `rng`. The declared support is the full dilate.
pub fn random_system_with(
    qs: &[LatticePolytope],
    kappa: u32,
    law: CoefficientLaw,
    rng: &mut ChaCha8Rng,
) -> Result<SystemSpec> {
    let n = qs.first().ok_or(Error::EmptyInput)?.dim();
    let polys = qs
        .iter()
        .map(|q| {
            let supp = dilated_support(q, kappa)?;
            let terms: Vec<(Point, Complex64)> = supp.iter().map(|e| (e.clone(), draw(law, rng))).collect();
            LaurentPolynomial::from_terms(n, terms)?.with_declared_support(supp)
        })
        .collect::<Result<Vec<_>>>()?;
    SystemSpec::new(polys)
}

pub fn random_gaussian_system(qs: &[LatticePolytope], kappa: u32, seed: u64) -> Result<SystemSpec> {
    random_system_with(qs, kappa, CoefficientLaw::Gaussian, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// The `±1` integer family on `kappa * Q_i`.
pub fn random_sign_system(qs: &[LatticePolytope], kappa: u32, seed: u64) -> Result<SystemSpec> {
    random_system_with(qs, kappa, CoefficientLaw::Sign, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Vertex lists of the base polytopes.
    pub polytopes: Vec<Vec<Point>>,
    pub kappas: Vec<u32>,
    pub trials: usize,
    pub seed: u64,
    pub law: CoefficientLaw,
    pub eps: Vec<f64>,
    /// Attempts per trial before it is dropped.
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

fn default_attempts() -> usize {
    10
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappas.is_empty() || self.kappas.contains(&0) {
            return Err(Error::InvalidConfig("kappas must be nonempty and >= 1".into()));
        }
        if self.trials == 0 || self.max_attempts == 0 {
            return Err(Error::InvalidConfig("trials and max_attempts must be >= 1".into()));
        }
        if let Some(&e) = self.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::EpsilonOutOfRange(e));
        }
        let qs = self.base_polytopes()?;
        let sys = SystemSpec::new(
            qs.iter()
                .map(|q| {
                    LaurentPolynomial::from_terms(
                        q.dim(),
                        q.vertices().iter().map(|v| (v.clone(), Complex64::new(1.0, 0.0))),
                    )
                })
                .collect::<Result<Vec<_>>>()?,
        )?;
        sys.bernstein_number()?;
        Ok(())
    }

    pub fn base_polytopes(&self) -> Result<Vec<LatticePolytope>> {
        self.polytopes.iter().map(|v| convex_hull(v)).collect()
    }

    /// RNG for attempt `attempt` of trial `trial` at `kappa`; independent of
    /// scheduling.
    pub fn rng(&self, kappa: u32, trial: usize, attempt: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((kappa as u64) << 40) | ((trial as u64) << 8) | attempt as u64);
        rng
    }
}

/// Outcome of one accepted trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub kappa: u32,
    pub trial: usize,
    pub attempts: usize,
    pub degree: u64,
    pub delta_ang: f64,
    pub delta_ang_exact: bool,
    pub delta_rad: Vec<EpsValue>,
    /// `sum_i log ||f_i||_sup` (upper ends).
    pub log_norm_sum: f64,
    pub eta: Interval,
    pub angle_bound: BoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub kappa: u32,
    pub trials: usize,
    pub accepted: usize,
    pub mean_dang: f64,
    pub max_dang: f64,
    /// `log(kappa+1)^{2n/3 - 1/3} / kappa^{1/3}`.
    pub rate: f64,
    pub mean_drad: Vec<EpsValue>,
    /// Integer-height rate times the fitted `c1`, at the mean of
    /// `sum log ||f_i||_sup / kappa`.
    pub bound: f64,
    /// Failed attempts (vanishing resultant, count mismatch, numerical
    /// failure); each is followed by a resample.
    pub rejected: usize,
    /// Trials that exhausted their attempts.
    pub dropped: usize,
    /// Every accepted trial passed the angle bound of its own `eta`.
    pub all_within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub rows: Vec<TrendRow>,
    pub trials: Vec<TrialResult>,
    pub c1: f64,
    /// Mean angle discrepancy at the last kappa is below the first.
    pub decreasing: bool,
}

/// `log(kappa+1)^{2n/3 - 1/3} / kappa^{1/3}`.
pub fn expected_rate(kappa: u32, n: usize) -> f64 {
    let k = kappa as f64;
    (k + 1.0).ln().powf(2.0 * n as f64 / 3.0 - 1.0 / 3.0) / k.cbrt()
}

/// `s^{1/3} (1 + log+(1/s))^{2(n-1)/3}` with `s = sum log ||f_i|| / kappa`.
pub fn height_rate(s: f64, n: usize) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    s.cbrt() * (1.0 + (1.0 / s).max(1.0).ln()).powf(2.0 * (n as f64 - 1.0) / 3.0)
}

fn is_rejection(e: &Error) -> bool {
    matches!(
        e,
        Error::VanishingResultant { .. }
            | Error::ZeroFacePolynomial { .. }
            | Error::BernsteinMismatch { .. }
            | Error::InterpolationFailure(_)
            | Error::NonConvergence { .. }
            | Error::EmptyCycle
    )
}

/// Solve and measure one system.
pub fn run_trial(
    system: &SystemSpec,
    eps: &[f64],
) -> Result<(u64, f64, bool, Vec<EpsValue>, f64, Interval, BoundReport)> {
    let z = zero_cycle(system)?;
    let ang = angle_discrepancy(&z)?;
    let drad =
        eps.iter().map(|&e| Ok(EpsValue { eps: e, value: radius_discrepancy(&z, e)? })).collect::<Result<Vec<_>>>()?;
    let e = eta(system)?;
    let lsum: f64 = e.supnorm_intervals.iter().map(|s| s.upper.ln()).sum();
    let report = angle_report(ang.value, e.eta_interval, system.n())?;
    Ok((z.degree(), ang.value, ang.exact, drad, lsum, e.eta_interval, report))
}

fn trial(
    config: &ExperimentConfig,
    qs: &[LatticePolytope],
    kappa: u32,
    t: usize,
) -> Result<(Option<TrialResult>, usize)> {
    let mut rejected = 0;
    for attempt in 0..config.max_attempts {
        let mut rng = config.rng(kappa, t, attempt);
        let sys = random_system_with(qs, kappa, config.law, &mut rng)?;
        match run_trial(&sys, &config.eps) {
            Ok((degree, delta_ang, exact, delta_rad, log_norm_sum, eta, angle_bound)) => {
                let res = TrialResult {
                    kappa,
                    trial: t,
                    attempts: attempt + 1,
                    degree,
                    delta_ang,
                    delta_ang_exact: exact,
                    delta_rad,
                    log_norm_sum,
                    eta,
                    angle_bound,
                };
                return Ok((Some(res), rejected));
            }
            Err(e) if is_rejection(&e) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((None, rejected))
}

/// Runs the configured trials for every kappa and aggregates them.
pub fn discrepancy_trend(config: &ExperimentConfig) -> Result<TrendReport> {
    config.validate()?;
    let qs = config.base_polytopes()?;
    let n = qs.len();
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for &kappa in &config.kappas {
        let out =
            (0..config.trials).into_par_iter().map(|t| trial(config, &qs, kappa, t)).collect::<Result<Vec<_>>>()?;
        let rejected: usize = out.iter().map(|o| o.1).sum();
        let accepted: Vec<TrialResult> = out.into_iter().filter_map(|o| o.0).collect();
        if accepted.is_empty() {
            return Err(Error::AllTrialsRejected { kappa, attempts: config.trials * config.max_attempts });
        }
        let m = accepted.len() as f64;
        let mean_dang = accepted.iter().map(|r| r.delta_ang).sum::<f64>() / m;
        let max_dang = accepted.iter().map(|r| r.delta_ang).fold(0.0, f64::max);
        let mean_drad = config
            .eps
            .iter()
            .enumerate()
            .map(|(i, &e)| EpsValue { eps: e, value: accepted.iter().map(|r| r.delta_rad[i].value).sum::<f64>() / m })
            .collect();
        rows.push(TrendRow {
            kappa,
            trials: config.trials,
            accepted: accepted.len(),
            mean_dang,
            max_dang,
            rate: expected_rate(kappa, n),
            mean_drad,
            bound: 0.0,
            rejected,
            dropped: config.trials - accepted.len(),
            all_within_bound: accepted.iter().all(|r| r.angle_bound.verdict == Verdict::Pass),
        });
        all.extend(accepted);
    }
    // smallest c1 making the integer-height rate hold on every trial
    let c1 = all
        .iter()
        .map(|r| {
            let h = height_rate(r.log_norm_sum / r.kappa as f64, n);
            if h > 0.0 {
                r.delta_ang / h
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    for row in rows.iter_mut() {
        let ts: Vec<&TrialResult> = all.iter().filter(|r| r.kappa == row.kappa).collect();
        let s = ts.iter().map(|r| r.log_norm_sum / r.kappa as f64).sum::<f64>() / ts.len() as f64;
        row.bound = c1 * height_rate(s, n);
    }
    let decreasing = rows.len() >= 2 && rows.last().unwrap().mean_dang < rows[0].mean_dang;
    Ok(TrendReport { rows, trials: all, c1, decreasing })
}

/// CSV with columns `kappa, trials, mean_dang, max_dang, rate,
/// mean_drad_<eps>..., bound, rejected`.
pub fn write_trend_csv<W: Write>(rows: &[TrendRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let eps: Vec<f64> = rows.first().map(|r| r.mean_drad.iter().map(|e| e.eps).collect()).unwrap_or_default();
    let mut header: Vec<String> =
        ["kappa", "trials", "mean_dang", "max_dang", "rate"].iter().map(|s| s.to_string()).collect();
    header.extend(eps.iter().map(|e| format!("mean_drad_{e}")));
    header.extend(["bound".to_string(), "rejected".to_string()]);
    out.write_record(&header)?;
    for r in rows {
        let mut rec =
            vec![r.kappa.to_string(), r.trials.to_string(), fmt17(r.mean_dang), fmt17(r.max_dang), fmt17(r.rate)];
        rec.extend(r.mean_drad.iter().map(|e| fmt17(e.value)));
        rec.extend([fmt17(r.bound), r.rejected.to_string()]);
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Sine of the Fubini–Study distance between the points of `P(C^N)`
/// represented by `z1` and `z2`.
pub fn fs_distance(z1: &[Complex64], z2: &[Complex64]) -> Result<f64> {
    if z1.len() != z2.len() {
        return Err(Error::DimensionMismatch { expected: z1.len(), found: z2.len() });
    }
    let (n1, n2) = (norm2(z1), norm2(z2));
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    // Lagrange identity: ||u||^2 ||v||^2 - |<u,v>|^2 = sum_{j<k} |u_j v_k - u_k v_j|^2,
    // which avoids the cancellation in 1 - cos^2 near coincident points.
    let mut s = 0.0;
    for j in 0..z1.len() {
        for k in j + 1..z1.len() {
            s += (z1[j] / n1 * z2[k] / n2 - z1[k] / n1 * z2[j] / n2).norm_sqr();
        }
    }
    Ok(s.sqrt().min(1.0))
}

/// Uniform point of the unit sphere of `C^N` (a uniform point of
/// `P(C^N)` after projection).
pub fn sphere_point(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n).map(|_| draw(CoefficientLaw::Gaussian, rng)).collect();
    let s = norm2(&v);
    v.into_iter().map(|x| x / s).collect()
}

fn check_homogeneous(f: &LaurentPolynomial) -> Result<u32> {
    let d = f.homogeneous_degree()?;
    if d == 0 {
        return Err(Error::InvalidConfig("degree must be at least 1".into()));
    }
    Ok(d)
}

fn eval_poly(f: &LaurentPolynomial, z: &[Complex64]) -> Complex64 {
    f.terms().iter().map(|(e, c)| e.iter().zip(z).fold(*c, |acc, (&k, x)| acc * x.powi(k as i32))).sum()
}

/// `|f(z)| / ||z||^d`.
pub fn normalised_value(f: &LaurentPolynomial, z: &[Complex64], d: u32) -> f64 {
    eval_poly(f, z).norm() / norm2(z).powi(d as i32)
}

/// Lower estimate of `sup |f(x)| / ||x||^d` over the sphere: random
/// starts refined by coordinate ascent. Returns the value and maximiser.
fn sphere_sup(f: &LaurentPolynomial, d: u32, rng: &mut ChaCha8Rng) -> (f64, Vec<Complex64>) {
    let n = f.n();
    let mut best = (0.0, sphere_point(n, rng));
    for _ in 0..200 {
        let x = sphere_point(n, rng);
        let v = normalised_value(f, &x, d);
        if v > best.0 {
            best = (v, x);
        }
    }
    let mut step = 0.1;
    while step > 1e-8 {
        let mut moved = false;
        for j in 0..n {
            for dir in [
                Complex64::new(1.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
            ] {
                let mut x = best.1.clone();
                x[j] += dir * step;
                let v = normalised_value(f, &x, d);
                if v > best.0 {
                    let s = norm2(&x);
                    best = (v, x.into_iter().map(|c| c / s).collect());
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    best
}

/// Points of `V(f)` on the line `z + t x`: roots of `t -> f(z + t x)`.
fn line_hits(f: &LaurentPolynomial, z: &[Complex64], x: &[Complex64], d: u32) -> Result<Vec<Vec<Complex64>>> {
    let m = d as usize + 1;
    // coefficients in t by a DFT over m-th roots of unity
    let vals: Vec<Complex64> = (0..m)
        .map(|k| {
            let t = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
            let p: Vec<Complex64> = z.iter().zip(x).map(|(a, b)| a + t * b).collect();
            eval_poly(f, &p)
        })
        .collect();
    let coeffs: Vec<Complex64> = (0..m)
        .map(|j| {
            (0..m)
                .map(|k| vals[k] * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / m as f64))
                .sum::<Complex64>()
                / m as f64
        })
        .collect();
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(vec![z.to_vec()]);
    }
    let cleaned: Vec<Complex64> =
        coeffs.iter().map(|c| if c.norm() < 1e-14 * scale { Complex64::new(0.0, 0.0) } else { *c }).collect();
    if cleaned[0] == Complex64::new(0.0, 0.0) {
        // z itself lies on V(f)
        return Ok(vec![z.to_vec()]);
    }
    let p = UnivariatePolynomial::new(cleaned);
    if p.trimmed().degree() == 0 {
        return Ok(vec![]);
    }
    let roots = univariate_roots(&p, 1e-12)?;
    Ok(roots.points.iter().map(|r| z.iter().zip(x).map(|(a, b)| a + r.z[0] * b).collect()).collect())
}

/// Upper estimate of `dist(z, V(f))` from points of `V(f)` on lines
/// through `z` in the given directions.
pub fn distance_to_hypersurface(f: &LaurentPolynomial, z: &[Complex64], directions: &[Vec<Complex64>]) -> Result<f64> {
    let d = check_homogeneous(f)?;
    let mut best = f64::INFINITY;
    for x in directions {
        for p in line_hits(f, z, x, d)? {
            if norm2(&p) > 0.0 {
                best = best.min(fs_distance(z, &p)?);
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::DistanceEstimation("no line through the point meets the hypersurface".into()))
    }
}

/// Minimal slack of `|f(z)|/||z||^d - S dist(z, V(f))^d` over random `z`,
/// with `S` estimated from below by ascent and `dist` from above by line
/// sections (the coordinate axes, the maximiser of `S` and random lines).
pub fn lojasiewicz_check(f: &LaurentPolynomial, samples: usize, seed: u64) -> Result<f64> {
    let d = check_homogeneous(f)?;
    let n = f.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sup, xbest) = sphere_sup(f, d, &mut rng);
    let mut slack = f64::INFINITY;
    for _ in 0..samples {
        let z = sphere_point(n, &mut rng);
        let mut dirs: Vec<Vec<Complex64>> =
            (0..n).map(|j| (0..n).map(|k| Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect()).collect();
        dirs.push(xbest.clone());
        dirs.extend((0..4).map(|_| sphere_point(n, &mut rng)));
        let dist = distance_to_hypersurface(f, &z, &dirs)?;
        slack = slack.min(normalised_value(f, &z, d) - sup * dist.powi(d as i32));
    }
    Ok(slack)
}

/// Monte Carlo estimate of `mu(V(f)_delta)` against the tube bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeReport {
    pub n: usize,
    pub degree: u32,
    pub delta: f64,
    pub samples: usize,
    pub estimate: f64,
    pub sigma: f64,
    /// Torus sup-norm enclosure used in the bound.
    pub sup_norm: Interval,
    /// Bound at the upper and lower sup-norm ends.
    pub bound: Interval,
    /// `15 d N^3 delta^{2/d}`, valid for integer coefficients.
    pub integer_bound: Option<f64>,
    pub verdict: Verdict,
    pub ratio: f64,
}

/// `15 d N^3 (delta / ||f||_sup)^{2/d}`.
pub fn tube_bound(d: u32, n: usize, delta: f64, sup: f64) -> f64 {
    15.0 * d as f64 * (n as f64).powi(3) * (delta / sup).powf(2.0 / d as f64)
}

pub fn tube_measure_estimate(f: &LaurentPolynomial, delta: f64, samples: usize, seed: u64) -> Result<TubeReport> {
    let d = check_homogeneous(f)?;
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig(format!("delta must be positive, got {delta}")));
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("sample budget exhausted: no samples".into()));
    }
    let n = f.n();
    let sup = f.sup_norm_default()?;
    let hits: usize = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let z = sphere_point(n, &mut rng);
            usize::from(normalised_value(f, &z, d) < delta)
        })
        .sum();
    let p = hits as f64 / samples as f64;
    let sigma = (p * (1.0 - p) / samples as f64).sqrt();
    let bound = Interval { lower: tube_bound(d, n, delta, sup.upper), upper: tube_bound(d, n, delta, sup.lower) };
    let verdict = if p <= bound.lower + 3.0 * sigma {
        Verdict::Pass
    } else if p > bound.upper + 3.0 * sigma {
        Verdict::Fail
    } else {
        Verdict::Indeterminate
    };
    let integer_bound =
        f.integer_coefficients().map(|_| 15.0 * d as f64 * (n as f64).powi(3) * delta.powf(2.0 / d as f64));
    Ok(TubeReport {
        n,
        degree: d,
        delta,
        samples,
        estimate: p,
        sigma,
        sup_norm: Interval { lower: sup.lower, upper: sup.upper },
        bound,
        integer_bound,
        verdict,
        ratio: if bound.lower > 0.0 { p / bound.lower } else { f64::INFINITY },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::box_mass;
    use crate::cycles::AngleBox;
    use crate::lattice_geometry::volume;
    use crate::laurent::SAMPLE_SYSTEM;
    use num_integer::Integer;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sample_polytopes() -> Vec<LatticePolytope> {
        SystemSpec::parse(SAMPLE_SYSTEM).unwrap().polytopes().to_vec()
    }

    #[test]
    fn dilate_counts() {
        let simplex = convex_hull(&[vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(dilated_support(&simplex, 2).unwrap().len(), 6);
        let square = convex_hull(&[vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        assert_eq!(dilated_support(&square, 3).unwrap().len(), 16);
        assert!(dilated_support(&square, 0).is_err());
    }

    #[test]
    fn dilate_matches_pick() {
        // |kQ ∩ Z^2| = A k^2 + (b/2) k + 1
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let pts: Vec<Point> = (0..5).map(|_| vec![rng.random_range(-3..4), rng.random_range(-3..4)]).collect();
            let q = convex_hull(&pts).unwrap();
            if !q.is_full_dimensional() {
                continue;
            }
            let area = volume(&q).unwrap();
            let vs = q.vertices();
            let mut hull_order: Vec<Point> = vs.to_vec();
            let cx = hull_order.iter().map(|v| v[0] as f64).sum::<f64>() / hull_order.len() as f64;
            let cy = hull_order.iter().map(|v| v[1] as f64).sum::<f64>() / hull_order.len() as f64;
            hull_order.sort_by(|a, b| {
                (a[1] as f64 - cy).atan2(a[0] as f64 - cx).total_cmp(&(b[1] as f64 - cy).atan2(b[0] as f64 - cx))
            });
            let b: i64 = (0..hull_order.len())
                .map(|i| {
                    let (p, q) = (&hull_order[i], &hull_order[(i + 1) % hull_order.len()]);
                    (q[0] - p[0]).gcd(&(q[1] - p[1]))
                })
                .sum();
            for k in 1..=6u32 {
                let kk = k as i128;
                let twice = 2 * area.numer() * kk * kk / area.denom() + b as i128 * kk + 2;
                assert_eq!(2 * dilated_support(&q, k).unwrap().len() as i128, twice);
            }
        }
    }

    #[test]
    fn gaussian_system_is_deterministic() {
        let qs = sample_polytopes();
        let a = random_gaussian_system(&qs, 1, 9).unwrap();
        let b = random_gaussian_system(&qs, 1, 9).unwrap();
        assert_eq!(a.polynomials(), b.polynomials());
        let mut supp = dilated_support(&qs[0], 1).unwrap();
        supp.sort();
        assert_eq!(a.polynomials()[0].support(), supp);
    }

    #[test]
    fn gaussian_law_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = 10_000;
        let xs: Vec<Complex64> = (0..m).map(|_| draw(CoefficientLaw::Gaussian, &mut rng)).collect();
        let var = xs.iter().map(|x| x.norm_sqr()).sum::<f64>() / m as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    fn small_config(law: CoefficientLaw) -> ExperimentConfig {
        ExperimentConfig {
            polytopes: vec![
                vec![vec![0, 0], vec![2, 0], vec![0, 2]],
                vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]],
            ],
            kappas: vec![1, 3],
            trials: 4,
            seed: 17,
            law,
            eps: vec![0.2],
            max_attempts: 10,
        }
    }

    #[test]
    fn trend_is_deterministic_and_accounts_rejections() {
        let cfg = small_config(CoefficientLaw::Sign);
        let a = discrepancy_trend(&cfg).unwrap();
        let b = discrepancy_trend(&cfg).unwrap();
        assert_eq!(a, b);
        for row in &a.rows {
            assert_eq!(row.accepted + row.dropped, row.trials);
            let attempts: usize = a.trials.iter().filter(|t| t.kappa == row.kappa).map(|t| t.attempts).sum();
            assert!(row.rejected + row.accepted >= attempts);
            assert!(row.all_within_bound);
        }
        let mut buf = Vec::new();
        write_trend_csv(&a.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("kappa,trials,mean_dang,max_dang,rate,mean_drad_0.2,bound,rejected"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn single_trial_matches_pipeline() {
        let mut cfg = small_config(CoefficientLaw::Gaussian);
        cfg.kappas = vec![1];
        cfg.trials = 1;
        let rep = discrepancy_trend(&cfg).unwrap();
        let t = &rep.trials[0];
        let sys =
            random_system_with(&cfg.base_polytopes().unwrap(), 1, cfg.law, &mut cfg.rng(1, 0, t.attempts - 1)).unwrap();
        let z = zero_cycle(&sys).unwrap();
        assert_eq!(rep.rows[0].mean_dang, angle_discrepancy(&z).unwrap().value);
        assert_eq!(rep.rows[0].max_dang, rep.rows[0].mean_dang);
    }

    #[test]
    fn box_mass_within_discrepancy() {
        let cfg = small_config(CoefficientLaw::Sign);
        let qs = cfg.base_polytopes().unwrap();
        let sys = random_system_with(&qs, 3, cfg.law, &mut cfg.rng(3, 0, 0)).unwrap();
        let z = zero_cycle(&sys).unwrap();
        let dang = angle_discrepancy(&z).unwrap().value;
        let b = AngleBox { alpha: vec![-1.0, 0.5], beta: vec![2.0, 3.0] };
        let haar = (3.0 / (2.0 * PI)) * (2.5 / (2.0 * PI));
        assert!((box_mass(&z, &b) - haar).abs() <= dang + 1e-12);
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = small_config(CoefficientLaw::IntegerUniform(-3, 3));
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json_str(&s).unwrap(), cfg);
        let mut bad = cfg.clone();
        bad.eps = vec![1.5];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fs_distance_basics() {
        let a = vec![c(1.0), c(2.0)];
        let b = vec![Complex64::new(0.0, 3.0), Complex64::new(0.0, 6.0)];
        assert!(fs_distance(&a, &b).unwrap() < 1e-8);
        assert!((fs_distance(&[c(1.0), c(0.0)], &[c(0.0), c(5.0)]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fs_distance(&[c(0.0), c(0.0)], &a), Err(Error::ZeroVector));
    }

    #[test]
    fn chordal_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let n = rng.random_range(1..6);
            let z2 = sphere_point(n, &mut rng);
            let z1: Vec<Complex64> =
                (0..n).map(|_| draw(CoefficientLaw::Gaussian, &mut rng) * rng.random_range(0.1..3.0)).collect();
            let diff: Vec<Complex64> = z2.iter().zip(&z1).map(|(a, b)| a - b).collect();
            assert!(fs_distance(&z1, &z2).unwrap() <= norm2(&diff) + 1e-12);
        }
    }

    #[test]
    fn lojasiewicz_linear() {
        let f = LaurentPolynomial::parse_in("x1", 3).unwrap();
        let s = lojasiewicz_check(&f, 200, 1).unwrap();
        assert!(s >= -1e-12, "{s}");
    }

    #[test]
    fn lojasiewicz_product_at_one_one() {
        let f = LaurentPolynomial::parse_in("x1*x2", 2).unwrap();
        let z = [c(1.0), c(1.0)];
        let dirs = vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]];
        let dist = distance_to_hypersurface(&f, &z, &dirs).unwrap();
        assert!((dist - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((normalised_value(&f, &z, 2) - 0.5).abs() < 1e-15);
        assert!(normalised_value(&f, &z, 2) >= 0.5 * dist * dist);
    }

    #[test]
    fn lojasiewicz_random_quadrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..3 {
            let terms: Vec<(Point, Complex64)> = [[2, 0, 0], [0, 2, 0], [0, 0, 2], [1, 1, 0], [0, 1, 1], [1, 0, 1]]
                .iter()
                .map(|e| (e.to_vec(), draw(CoefficientLaw::Gaussian, &mut rng)))
                .collect();
            let f = LaurentPolynomial::from_terms(3, terms).unwrap();
            let s = lojasiewicz_check(&f, 300, 3).unwrap();
            assert!(s >= -1e-9, "{s}");
        }
    }

    #[test]
    fn tube_large_delta_is_everything() {
        let f = LaurentPolynomial::parse_in("x1^3", 2).unwrap();
        let r = tube_measure_estimate(&f, 10.0, 500, 1).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert!(r.bound.lower > 1.0);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn tube_linear_hyperplane() {
        let f = LaurentPolynomial::parse_in("x1 + x2 - x3", 3).unwrap();
        let r = tube_measure_estimate(&f, 0.1, 20_000, 5).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.estimate <= r.integer_bound.unwrap() + 3.0 * r.sigma);
        // |<z, u>| < 0.1 |u| for u = (1,1,-1)/sqrt 3: measure 1 - (1 - 0.01/3)^2
        let exact = 1.0 - (1.0 - 0.01 / 3.0f64).powi(2);
        assert!((r.estimate - exact).abs() < 5.0 * r.sigma.max(1e-3));
    }

    #[test]
    fn tube_rejects_bad_input() {
        let f = LaurentPolynomial::parse_in("x1 + 1", 2).unwrap();
        assert_eq!(tube_measure_estimate(&f, 0.1, 10, 1).unwrap_err(), Error::NotHomogeneous);
        let g = LaurentPolynomial::parse_in("x1", 2).unwrap();
        assert!(tube_measure_estimate(&g, 0.1, 0, 1).is_err());
    }
}
