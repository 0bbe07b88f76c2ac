//! Univariate root finding and zero cycles of square systems with n <= 2.

use std::cmp::Ordering;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_geometry::LatticeVector;
use crate::laurent::{ipow, Evaluator, LaurentPolynomial, SystemSpec, UnivariatePolynomial};
use crate::resultants::{elimination_primitive, nonvanishing_directional_resultants};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclePoint {
    pub z: Vec<Complex64>,
    pub m: u32,
    /// max_i |f_i(z)|; zero when the point was not produced by a solver
    #[serde(default)]
    pub residual: f64,
}

/// Effective zero-dimensional cycle of the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCycle {
    pub n: usize,
    pub points: Vec<CyclePoint>,
    /// largest per-point residual
    #[serde(default)]
    pub residual: f64,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub converged: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

impl ZeroCycle {
    pub fn new(n: usize, points: Vec<CyclePoint>) -> Result<Self> {
        for p in &points {
            if p.z.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: p.z.len() });
            }
            if let Some(i) = p.z.iter().position(|c| *c == ZERO) {
                return Err(Error::ZeroCoordinate { index: i });
            }
            if p.m == 0 {
                return Err(Error::InvalidConfig("multiplicities must be positive".into()));
            }
        }
        let residual = points.iter().map(|p| p.residual).fold(0.0, f64::max);
        Ok(ZeroCycle { n, points, residual, converged: true })
    }

    /// Points with multiplicity one.
    pub fn from_points(n: usize, z: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::new(n, z.into_iter().map(|z| CyclePoint { z, m: 1, residual: 0.0 }).collect())
    }

    pub fn from_weighted(n: usize, z: Vec<(Vec<Complex64>, u32)>) -> Result<Self> {
        Self::new(n, z.into_iter().map(|(z, m)| CyclePoint { z, m, residual: 0.0 }).collect())
    }

    pub fn degree(&self) -> u64 {
        self.points.iter().map(|p| p.m as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `chi^a_*(Z)`, coincident images merged with summed multiplicity.
    pub fn direct_image(&self, a: &LatticeVector) -> Result<ZeroCycle> {
        if a.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: a.dim() });
        }
        if a.is_zero() {
            return Err(Error::ZeroVector);
        }
        let images: Vec<(Complex64, u32)> = self
            .points
            .iter()
            .map(|p| (p.z.iter().zip(a.coords()).fold(ONE, |acc, (z, &k)| acc * ipow(*z, k)), p.m))
            .collect();
        let merged = merge_close(images, 1e-10);
        ZeroCycle::new(1, merged.into_iter().map(|(z, m)| CyclePoint { z: vec![z], m, residual: 0.0 }).collect())
    }

    /// Sorts points by `(|z_1|, arg z_1, |z_2|, ...)`.
    pub fn canonicalize(&mut self) {
        self.points.sort_by(|p, q| {
            for (a, b) in p.z.iter().zip(&q.z) {
                let o = a.norm().partial_cmp(&b.norm()).unwrap_or(Ordering::Equal);
                if o != Ordering::Equal {
                    return o;
                }
                let o = arg(*a).partial_cmp(&arg(*b)).unwrap_or(Ordering::Equal);
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        });
    }

    /// One row per point: re/im per coordinate, then modulus and argument per
    /// coordinate, then multiplicity.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = Vec::new();
        for j in 1..=self.n {
            header.push(format!("re{j}"));
            header.push(format!("im{j}"));
        }
        for j in 1..=self.n {
            header.push(format!("mod{j}"));
            header.push(format!("arg{j}"));
        }
        header.push("m".into());
        wr.write_record(&header)?;
        for p in &self.points {
            let mut row: Vec<String> = Vec::new();
            for z in &p.z {
                row.push(fmt17(z.re));
                row.push(fmt17(z.im));
            }
            for z in &p.z {
                row.push(fmt17(z.norm()));
                row.push(fmt17(arg(*z)));
            }
            row.push(p.m.to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.16e}");
    let (mant, exp) = s.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..17).contains(&exp) {
        let digits = (16 - exp).max(0) as usize;
        let t = format!("{x:.digits$}");
        if t.contains('.') {
            t.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            t
        }
    } else {
        let m = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

/// Argument in `(-pi, pi]`.
pub fn arg(z: Complex64) -> f64 {
    let t = z.im.atan2(z.re);
    if t == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        t
    }
}

/// Merges points closer than `rel * max(|z|, |w|)`, summing multiplicities.
fn merge_close(mut pts: Vec<(Complex64, u32)>, rel: f64) -> Vec<(Complex64, u32)> {
    pts.sort_by(|a, b| a.0.re.partial_cmp(&b.0.re).unwrap_or(Ordering::Equal));
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let next = p[i];
            p[i] = r;
            i = next;
        }
        r
    }
    let rmax = pts.iter().map(|p| p.0.norm()).fold(0.0, f64::max);
    for i in 0..n {
        for j in i + 1..n {
            if pts[j].0.re - pts[i].0.re > rel * rmax {
                break;
            }
            let tol = rel * pts[i].0.norm().max(pts[j].0.norm());
            if (pts[i].0 - pts[j].0).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut out: Vec<(Complex64, u32)> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push((pts[r].0, 0));
        }
        out[slot[r]].1 += pts[i].1;
    }
    out
}

/// Raw output of the simultaneous iteration.
#[derive(Debug, Clone)]
pub struct AberthResult {
    pub roots: Vec<Complex64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Value and `p/p'` of `c` (degree 0 upward) at `z`; evaluates the reversed
/// polynomial when `|z| > 1`. Returns `(log|p(z)|, ratio, backward_ok)`.
fn newton_data(c: &[Complex64], abs_c: &[f64], z: Complex64) -> (f64, Complex64, bool) {
    let d = c.len() - 1;
    if z.norm() <= 1.0 {
        let (mut p, mut dp) = (ZERO, ZERO);
        let mut s = 0.0;
        let r = z.norm();
        for k in (0..=d).rev() {
            dp = dp * z + p;
            p = p * z + c[k];
            s = s * r + abs_c[k];
        }
        let ok = p.norm() <= 8.0 * EPS * (d as f64 + 1.0) * s;
        (p.norm().ln(), p / dp, ok)
    } else {
        let w = z.inv();
        let (mut q, mut dq) = (ZERO, ZERO);
        let mut s = 0.0;
        let r = w.norm();
        for k in 0..=d {
            dq = dq * w + q;
            q = q * w + c[k];
            s = s * r + abs_c[k];
        }
        let ok = q.norm() <= 8.0 * EPS * (d as f64 + 1.0) * s;
        let den = q * d as f64 - w * dq;
        (q.norm().ln() + d as f64 * z.norm().ln(), z * q / den, ok)
    }
}

/// Starting points on circles whose radii come from the upper convex hull
/// of `(k, log|c_k|)`, spread with a golden-angle offset.
fn initial_points(c: &[Complex64]) -> Vec<Complex64> {
    let pts: Vec<(usize, f64)> =
        c.iter().enumerate().filter(|(_, z)| **z != ZERO).map(|(k, z)| (k, z.norm().ln())).collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1) - (b.1 - a.1) * (p.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::with_capacity(c.len() - 1);
    for w in hull.windows(2) {
        let (i, j) = (w[0].0, w[1].0);
        let k = j - i;
        let r = ((w[0].1 - w[1].1) / k as f64).exp();
        for t in 0..k {
            let ang = 2.0 * std::f64::consts::PI * t as f64 / k as f64 + golden * (out.len() as f64 + 1.0) + 0.4;
            out.push(Complex64::from_polar(r, ang));
        }
    }
    out
}

/// Aberth–Ehrlich iteration for a polynomial with nonzero extreme
/// coefficients (degree 0 upward).
pub fn aberth(c: &[Complex64], max_iter: usize) -> AberthResult {
    let d = c.len() - 1;
    if d == 1 {
        return AberthResult { roots: vec![-c[0] / c[1]], converged: true, iterations: 0 };
    }
    let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let c: Vec<Complex64> = c.iter().map(|z| z / scale).collect();
    let abs_c: Vec<f64> = c.iter().map(|z| z.norm()).collect();
    let mut z = initial_points(&c);
    let mut done = vec![false; d];
    let mut it = 0;
    while it < max_iter && done.iter().any(|x| !x) {
        it += 1;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (_, ratio, ok) = newton_data(&c, &abs_c, z[i]);
            if ok || !ratio.is_finite() {
                done[i] = ok;
                if !ok {
                    let bump = Complex64::new(1e-8, 1e-8) * z[i].norm().max(1e-300);
                    z[i] += bump;
                }
                continue;
            }
            let zi = z[i];
            let s: Complex64 = z.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, zj)| (zi - zj).inv()).sum();
            let w = ratio / (ONE - ratio * s);
            if !w.is_finite() {
                continue;
            }
            z[i] = zi - w;
            if w.norm() <= 4.0 * EPS * z[i].norm() {
                done[i] = true;
            }
        }
    }
    // Newton polish, accepted only when the value decreases
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (lp, ratio, _) = newton_data(&c, &abs_c, *zi);
            let cand = *zi - ratio;
            if !cand.is_finite() {
                break;
            }
            let (lq, _, _) = newton_data(&c, &abs_c, cand);
            if lq < lp {
                *zi = cand;
            } else {
                break;
            }
        }
    }
    AberthResult { roots: z, converged: done.iter().all(|x| *x), iterations: it }
}

/// Clusters roots whose inclusion discs overlap (or that lie within
/// `max(1e-7 * scale, tol * scale)`), returning centroids with multiplicity.
pub fn cluster_roots(c: &[Complex64], roots: &[Complex64], tol: f64) -> Vec<(Complex64, u32)> {
    let d = roots.len();
    let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cn: Vec<Complex64> = c.iter().map(|z| z / scale).collect();
    let abs_c: Vec<f64> = cn.iter().map(|z| z.norm()).collect();
    let log_lc = cn.last().unwrap().norm().ln();
    let radius: Vec<f64> = (0..d)
        .map(|i| {
            let (lp, _, _) = newton_data(&cn, &abs_c, roots[i]);
            let lprod: f64 = (0..d).filter(|&j| j != i).map(|j| (roots[i] - roots[j]).norm().ln()).sum();
            ((d as f64).ln() + lp - log_lc - lprod).exp()
        })
        .collect();
    let floor = |z: Complex64| 1e-7f64.max(tol) * z.norm().max(1.0);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| roots[a].re.partial_cmp(&roots[b].re).unwrap_or(Ordering::Equal));
    let reach = radius.iter().cloned().fold(0.0, f64::max) * 2.0 + roots.iter().map(|&z| floor(z)).fold(0.0, f64::max);
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for a in 0..d {
        let i = order[a];
        for &j in &order[a + 1..] {
            if roots[j].re - roots[i].re > reach {
                break;
            }
            let dist = (roots[i] - roots[j]).norm();
            if dist <= (radius[i] + radius[j]).max(floor(roots[i]).max(floor(roots[j]))) {
                let (x, y) = (find(&mut parent, i), find(&mut parent, j));
                parent[y] = x;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for i in 0..d {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups
        .values()
        .map(|g| {
            let s: Complex64 = g.iter().map(|&i| roots[i]).sum();
            (s / g.len() as f64, g.len() as u32)
        })
        .collect()
}

/// All roots of `p` in `C^x` (factors of `x` stripped), clustered into
/// multiple roots.
pub fn univariate_roots(p: &UnivariatePolynomial, tol: f64) -> Result<ZeroCycle> {
    let c = p.trimmed().coeffs;
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let lo = c.iter().position(|z| *z != ZERO).unwrap();
    let c = &c[lo..];
    if c.len() < 2 {
        return Err(Error::EmptyCycle);
    }
    let d = c.len() - 1;
    let res = aberth(c, 100 + 5 * d.min(2000));
    let clusters = cluster_roots(c, &res.roots, tol);
    let abs_c: Vec<f64> = c.iter().map(|z| z.norm()).collect();
    let points = clusters
        .into_iter()
        .filter(|(z, _)| *z != ZERO && z.is_finite())
        .map(|(z, m)| {
            let v = c.iter().rev().fold(ZERO, |acc, a| acc * z + a);
            let s = abs_c.iter().rev().fold(0.0, |acc, a| acc * z.norm() + a);
            CyclePoint { z: vec![z], m, residual: if s > 0.0 { v.norm() / s } else { 0.0 } }
        })
        .collect();
    let mut cyc = ZeroCycle::new(1, points)?;
    cyc.converged = res.converged;
    cyc.canonicalize();
    Ok(cyc)
}

/// Coefficients of a Laurent polynomial in one variable as a dense
/// polynomial starting at its lowest exponent.
pub fn dense_coefficients(f: &LaurentPolynomial) -> Result<Vec<Complex64>> {
    if f.n() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: f.n() });
    }
    let lo = f.terms().keys().next().ok_or(Error::ZeroPolynomial)?[0];
    let hi = f.terms().keys().last().unwrap()[0];
    let mut c = vec![ZERO; (hi - lo + 1) as usize];
    for (e, v) in f.terms() {
        c[(e[0] - lo) as usize] = *v;
    }
    Ok(c)
}

/// `f(xi_1, y)` as a dense polynomial in `y` (lowest exponent first).
fn specialize_first(f: &LaurentPolynomial, xi1: Complex64) -> Vec<Complex64> {
    let lo = f.terms().keys().map(|e| e[1]).min().unwrap();
    let hi = f.terms().keys().map(|e| e[1]).max().unwrap();
    let mut c = vec![ZERO; (hi - lo + 1) as usize];
    for (e, v) in f.terms() {
        c[(e[1] - lo) as usize] += v * ipow(xi1, e[0]);
    }
    c
}

fn evaluators(system: &SystemSpec) -> Vec<Evaluator> {
    system.polynomials().iter().map(|f| f.evaluator()).collect()
}

fn relative_residual(evs: &[Evaluator], x: &[Complex64]) -> f64 {
    max_residual(evs, x).1
}

/// Largest `|f_i(x)|` and largest `|f_i(x)| / sum |alpha_a x^a|`.
fn max_residual(evs: &[Evaluator], x: &[Complex64]) -> (f64, f64) {
    let mut abs: f64 = 0.0;
    let mut rel: f64 = 0.0;
    for f in evs {
        let mut v = f.value(x).norm();
        if !v.is_finite() {
            v = f64::INFINITY;
        }
        let s = f.abs_value(x);
        abs = abs.max(v);
        rel = rel.max(if s > 0.0 { v / s } else { v });
    }
    (abs, rel)
}

/// Row scaling so the 2x2 determinant cannot overflow.
fn scaled((v, g): (Complex64, Vec<Complex64>)) -> (Complex64, Vec<Complex64>) {
    let s = g.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if s > 0.0 && s.is_finite() {
        (v / s, g.iter().map(|c| c / s).collect())
    } else {
        (v, g)
    }
}

/// 2x2 Newton on the system; stops at relative step 1e-12 or 60 iterations.
fn polish(evs: &[Evaluator], mut x: Vec<Complex64>) -> Vec<Complex64> {
    let mut best = max_residual(evs, &x).1;
    for _ in 0..60 {
        let (v1, g1) = scaled(evs[0].value_and_gradient(&x));
        let (v2, g2) = scaled(evs[1].value_and_gradient(&x));
        let det = g1[0] * g2[1] - g1[1] * g2[0];
        if det == ZERO || !det.is_finite() {
            break;
        }
        let dx0 = (v1 * g2[1] - v2 * g1[1]) / det;
        let dx1 = (g1[0] * v2 - g2[0] * v1) / det;
        let cand = vec![x[0] - dx0, x[1] - dx1];
        if cand.iter().any(|c| !c.is_finite() || *c == ZERO) {
            break;
        }
        let r = max_residual(evs, &cand).1;
        let step = (dx0.norm() / x[0].norm()).max(dx1.norm() / x[1].norm());
        if r <= best || step < 1e-10 {
            x = cand;
            best = best.min(r);
        } else {
            break;
        }
        if step <= 1e-12 {
            break;
        }
    }
    x
}

/// Relative threshold on `|f_i|` for accepting back-substituted candidates.
pub const CANDIDATE_THRESHOLD: f64 = 1e-6;

/// `Z(f)` for n <= 2 with the Bernstein count certified.
pub fn zero_cycle(system: &SystemSpec) -> Result<ZeroCycle> {
    match system.n() {
        1 => {
            nonvanishing_directional_resultants(system)?;
            let c = dense_coefficients(&system.polynomials()[0])?;
            let mut z = univariate_roots(&UnivariatePolynomial::new(c), 1e-12)?;
            let d = system.bernstein_number()?;
            for p in z.points.iter_mut() {
                p.residual = system.polynomials()[0].evaluate(&p.z)?.norm();
            }
            z.residual = z.points.iter().map(|p| p.residual).fold(0.0, f64::max);
            if z.degree() != d {
                return Err(Error::BernsteinMismatch { found: z.degree(), expected: d });
            }
            Ok(z)
        }
        2 => zero_cycle_2d(system),
        n => Err(Error::UnsupportedDimension { op: "zero_cycle", n }),
    }
}

/// Above this Bernstein number the bivariate solver goes straight to path
/// tracking; elimination coefficients of such systems routinely fall below
/// double precision at the ends of the window.
pub const ELIMINATION_MAX_DEGREE: u64 = 400;

fn zero_cycle_2d(system: &SystemSpec) -> Result<ZeroCycle> {
    nonvanishing_directional_resultants(system)?;
    let d = system.bernstein_number()?;
    if d <= ELIMINATION_MAX_DEGREE {
        match zero_cycle_elimination(system, d) {
            Err(Error::InterpolationFailure(_) | Error::BernsteinMismatch { .. } | Error::NonConvergence { .. }) => {}
            other => return other,
        }
    }
    zero_cycle_homotopy(system, d)
}

/// Path-tracking route; endpoints off the torus or with a large residual
/// are dropped, the rest polished and deduplicated.
pub fn zero_cycle_homotopy(system: &SystemSpec, d: u64) -> Result<ZeroCycle> {
    let ends = crate::homotopy::track_all(system, 2)?;
    let evs = evaluators(system);
    let cands: Vec<Vec<Complex64>> = ends
        .into_par_iter()
        .flatten()
        .filter(|x| x.iter().all(|c| c.norm() > 1e-8 && c.norm() < 1e8))
        .map(|x| polish(&evs, x.to_vec()))
        .filter(|x| relative_residual(&evs, x) < CANDIDATE_THRESHOLD)
        .collect();
    let mut pts: Vec<CyclePoint> = Vec::new();
    for x in cands {
        let dup = pts
            .iter()
            .any(|q| q.z.iter().zip(&x).all(|(a, b)| (a - b).norm() <= 1e-8 * a.norm().max(b.norm()).max(1.0)));
        if !dup {
            let (abs, _) = max_residual(&evs, &x);
            pts.push(CyclePoint { z: x, m: 1, residual: abs });
        }
    }
    let mut z = ZeroCycle::new(2, pts)?;
    z.canonicalize();
    if z.degree() != d {
        return Err(Error::BernsteinMismatch { found: z.degree(), expected: d });
    }
    Ok(z)
}

fn zero_cycle_elimination(system: &SystemSpec, d: u64) -> Result<ZeroCycle> {
    let e = elimination_primitive(system, &LatticeVector(vec![1, 0]), d as usize)?;
    let first = univariate_roots(&e.normalized(), 1e-12)?;
    let (f1, f2) = (&system.polynomials()[0], &system.polynomials()[1]);
    let evs = evaluators(system);
    let found: Vec<Vec<(Vec<Complex64>, u32)>> = first
        .points
        .par_iter()
        .map(|p| {
            let xi1 = p.z[0];
            let mut scored: Vec<(f64, Complex64, u32)> = Vec::new();
            for f in [f1, f2] {
                let Ok(cands) = univariate_roots(&UnivariatePolynomial::new(specialize_first(f, xi1)), 1e-12) else {
                    continue;
                };
                for q in cands.points {
                    let x = [xi1, q.z[0]];
                    let r = relative_residual(&evs, &x);
                    if r >= CANDIDATE_THRESHOLD {
                        continue;
                    }
                    match scored.iter_mut().find(|c| (c.1 - q.z[0]).norm() <= 1e-6 * q.z[0].norm().max(1.0)) {
                        Some(c) => {
                            if r < c.0 {
                                *c = (r, q.z[0], c.2.max(q.m));
                            } else {
                                c.2 = c.2.max(q.m);
                            }
                        }
                        None => scored.push((r, q.z[0], q.m)),
                    }
                }
            }
            scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut left = p.m;
            let mut out = Vec::new();
            for (_, xi2, m2) in scored {
                if left == 0 {
                    break;
                }
                let m = m2.min(left);
                left -= m;
                let x = if m == 1 { polish(&evs, vec![xi1, xi2]) } else { vec![xi1, xi2] };
                out.push((x, m));
            }
            out
        })
        .collect();
    let mut pts: Vec<CyclePoint> = Vec::new();
    for (x, m) in found.into_iter().flatten() {
        let dup = pts
            .iter()
            .any(|q| q.z.iter().zip(&x).all(|(a, b)| (a - b).norm() <= 1e-8 * a.norm().max(b.norm()).max(1.0)));
        if !dup {
            let (abs, _) = max_residual(&evs, &x);
            pts.push(CyclePoint { z: x, m, residual: abs });
        }
    }
    let mut z = ZeroCycle::new(2, pts)?;
    z.converged = first.converged;
    z.canonicalize();
    if z.degree() != d {
        return Err(Error::BernsteinMismatch { found: z.degree(), expected: d });
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn roots_of_unity() {
        for d in [1usize, 2, 7, 50, 200] {
            let mut coeffs = vec![ZERO; d + 1];
            coeffs[0] = c(-1.0);
            coeffs[d] = c(1.0);
            let z = univariate_roots(&UnivariatePolynomial::new(coeffs), 1e-12).unwrap();
            assert_eq!(z.points.len(), d);
            assert!(z.points.iter().all(|p| p.m == 1 && (p.z[0].norm() - 1.0).abs() < 1e-13));
            assert!(z.residual < 1e-12, "{}", z.residual);
        }
    }

    #[test]
    fn triple_root_is_clustered() {
        let p = UnivariatePolynomial::from_roots(&[c(2.0), c(2.0), c(2.0)], ONE);
        let z = univariate_roots(&p, 1e-12).unwrap();
        assert_eq!(z.points.len(), 1);
        assert_eq!(z.points[0].m, 3);
        assert!((z.points[0].z[0] - c(2.0)).norm() < 1e-4);
        let p = UnivariatePolynomial::from_roots(&[c(2.0), c(2.0), c(-1.0), Complex64::new(0.0, 3.0)], ONE);
        let z = univariate_roots(&p, 1e-12).unwrap();
        assert_eq!(z.degree(), 4);
        assert_eq!(z.points.len(), 3);
    }

    #[test]
    fn zero_roots_are_stripped() {
        let p = UnivariatePolynomial::from_real(&[0.0, 0.0, -1.0, 0.0, 1.0]);
        let z = univariate_roots(&p, 1e-12).unwrap();
        assert_eq!(z.degree(), 2);
    }

    #[test]
    fn random_integer_degree_100() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let mut v: Vec<f64> = (0..=100).map(|_| rng.random_range(-10..=10) as f64).collect();
            v[0] = 3.0;
            v[100] = -7.0;
            let p = UnivariatePolynomial::from_real(&v);
            let z = univariate_roots(&p, 1e-12).unwrap();
            assert_eq!(z.degree(), 100);
            let l1: f64 = v.iter().map(|x| x.abs()).sum();
            let total: f64 =
                z.points.iter().map(|q| p.eval(q.z[0]).norm() / l1.max(1.0) / q.z[0].norm().max(1.0).powi(100)).sum();
            assert!(total < 1e-8, "{total}");
        }
    }

    #[test]
    fn product_system() {
        let s = SystemSpec::parse("x1^2 - 1; x2^2 - 1").unwrap();
        let z = zero_cycle(&s).unwrap();
        assert_eq!(z.degree(), 4);
        assert_eq!(z.points.len(), 4);
        for p in &z.points {
            assert!((p.z[0].norm() - 1.0).abs() < 1e-12 && p.z[0].im.abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_system() {
        let s = SystemSpec::parse("x1*x2 - 1; x1 - 2").unwrap();
        let z = zero_cycle(&s).unwrap();
        assert_eq!(z.degree(), 1);
        assert!((z.points[0].z[0] - c(2.0)).norm() < 1e-12);
        assert!((z.points[0].z[1] - c(0.5)).norm() < 1e-12);
    }

    #[test]
    fn sample_system_cycle() {
        let s = SystemSpec::parse("x1^13 + x1*x2^12 + x2^13 + 1; x1^12*x2 - x2^13 - x1*x2 + 1").unwrap();
        let z = zero_cycle(&s).unwrap();
        assert_eq!(z.degree(), 169);
        assert!(z.residual < 1e-8, "{}", z.residual);
        let json = serde_json::to_string(&z).unwrap();
        let back: ZeroCycle = serde_json::from_str(&json).unwrap();
        assert_eq!(back, z);
    }

    #[test]
    fn homotopy_agrees_with_elimination() {
        let s = SystemSpec::parse(crate::laurent::SAMPLE_SYSTEM).unwrap();
        let a = zero_cycle(&s).unwrap();
        let b = zero_cycle_homotopy(&s, 169).unwrap();
        assert_eq!(b.degree(), 169);
        for p in &b.points {
            let near = a
                .points
                .iter()
                .map(|q| (q.z[0] - p.z[0]).norm() + (q.z[1] - p.z[1]).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(near < 1e-8, "{near}");
        }
    }

    #[test]
    fn dilated_sign_system_past_elimination_range() {
        let qs = SystemSpec::parse(crate::laurent::SAMPLE_SYSTEM).unwrap().polytopes().to_vec();
        let s = crate::experiments::random_sign_system(&qs, 2, 1).unwrap();
        assert_eq!(s.bernstein_number().unwrap(), 676);
        let z = zero_cycle(&s).unwrap();
        assert_eq!(z.degree(), 676);
        let evs = evaluators(&s);
        assert!(z.points.iter().all(|p| relative_residual(&evs, &p.z) < 1e-10));
    }

    #[test]
    fn direct_images() {
        let z = ZeroCycle::from_points(2, vec![vec![c(2.0), c(3.0)]]).unwrap();
        let im = z.direct_image(&LatticeVector(vec![1, 1])).unwrap();
        assert_eq!(im.points.len(), 1);
        assert!((im.points[0].z[0] - c(6.0)).norm() < 1e-14);
        let grid = ZeroCycle::from_points(
            2,
            vec![vec![c(1.0), c(1.0)], vec![c(1.0), c(-1.0)], vec![c(-1.0), c(1.0)], vec![c(-1.0), c(-1.0)]],
        )
        .unwrap();
        let mut im = grid.direct_image(&LatticeVector(vec![1, 0])).unwrap();
        im.canonicalize();
        assert_eq!(im.points.iter().map(|p| p.m).collect::<Vec<_>>(), vec![2, 2]);
        let d = 5;
        let roots: Vec<Complex64> =
            (0..d).map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64)).collect();
        let pts = roots.iter().flat_map(|a| roots.iter().map(move |b| vec![*a, *b])).collect();
        let g = ZeroCycle::from_points(2, pts).unwrap();
        let im = g.direct_image(&LatticeVector(vec![d as i64, 0])).unwrap();
        assert_eq!(im.points.len(), 1);
        assert_eq!(im.points[0].m, 25);
        assert_eq!(g.direct_image(&LatticeVector(vec![0, 0])), Err(Error::ZeroVector));
    }

    #[test]
    fn csv_export() {
        let z = ZeroCycle::from_points(1, vec![vec![Complex64::new(0.0, 2.0)]]).unwrap();
        let mut out = Vec::new();
        z.write_csv(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s, "re1,im1,mod1,arg1,m\n0,2,2,1.5707963267948966,1\n");
    }

    #[test]
    fn fmt17_digits() {
        assert_eq!(fmt17(0.1), "0.10000000000000001");
        assert_eq!(fmt17(1.0), "1");
        assert_eq!(fmt17(1e-20), "9.9999999999999995e-21");
        assert_eq!(fmt17(123456.0), "123456");
    }

    fn random_system(seed: u64) -> SystemSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let supp = |rng: &mut ChaCha8Rng| -> Vec<(Vec<i64>, Complex64)> {
            let mut v: Vec<(Vec<i64>, Complex64)> = [(0, 0), (3, 0), (0, 3), (1, 1), (2, 1)]
                .iter()
                .map(|&(a, b)| (vec![a, b], Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
                .collect();
            v.truncate(5);
            v
        };
        let f1 = LaurentPolynomial::from_terms(2, supp(&mut rng)).unwrap();
        let f2 = LaurentPolynomial::from_terms(2, supp(&mut rng)).unwrap();
        SystemSpec::new(vec![f1, f2]).unwrap()
    }

    #[test]
    fn generic_random_systems_meet_bernstein() {
        for seed in 0..10 {
            let s = random_system(seed);
            let z = zero_cycle(&s).unwrap();
            assert_eq!(z.degree(), 9);
            assert!(z.points.iter().all(|p| p.m == 1));
            assert!(z.residual < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn invariant_under_scalars_and_monomials(seed in 0u64..200, b in (-2i64..3, -2i64..3), g in (0.2f64..3.0, -3.0f64..3.0)) {
            let s = random_system(seed);
            let t = SystemSpec::new(vec![
                s.polynomials()[0].scale(Complex64::from_polar(g.0, g.1)),
                s.polynomials()[1].shift(&[b.0, b.1]),
            ]).unwrap();
            let z1 = zero_cycle(&s).unwrap();
            let z2 = zero_cycle(&t).unwrap();
            prop_assert_eq!(z1.points.len(), z2.points.len());
            for p in &z1.points {
                prop_assert!(z2.points.iter().any(|q| p.z.iter().zip(&q.z).all(|(a, b)| (a - b).norm() < 1e-8 * a.norm().max(1.0))));
            }
        }

        #[test]
        fn direct_image_preserves_degree(seed in 0u64..200, a in (-4i64..5, -4i64..5)) {
            prop_assume!(a != (0, 0));
            let z = zero_cycle(&random_system(seed)).unwrap();
            let im = z.direct_image(&LatticeVector(vec![a.0, a.1])).unwrap();
            prop_assert_eq!(im.degree(), z.degree());
        }

        #[test]
        fn elimination_vanishes_on_direct_image(seed in 0u64..200, a in (-3i64..4, -3i64..4)) {
            prop_assume!(a != (0, 0));
            let s = random_system(seed);
            let a = LatticeVector(vec![a.0, a.1]);
            let z = zero_cycle(&s).unwrap();
            let e = crate::resultants::elimination_polynomial(&s, &a).unwrap();
            let im = z.direct_image(&a).unwrap();
            prop_assert_eq!(e.degree() as u64, im.degree());
            // coefficients interpolated on one circle carry absolute noise,
            // so keep to images within three decades of each other
            let mods: Vec<f64> = im.points.iter().map(|q| q.z[0].norm()).collect();
            prop_assume!(mods.iter().cloned().fold(0.0, f64::max) / mods.iter().cloned().fold(f64::INFINITY, f64::min) < 1e3);
            let p = e.normalized();
            for q in &im.points {
                let w = q.z[0];
                let scale: f64 = p.coeffs.iter().enumerate().map(|(i, c)| c.norm() * w.norm().powi(i as i32)).sum();
                prop_assert!(p.eval(w).norm() / scale < 1e-8, "{}", p.eval(w).norm() / scale);
            }
        }
    }
}
