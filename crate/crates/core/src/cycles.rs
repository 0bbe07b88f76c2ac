//! Angle and radius discrepancy of zero cycles and the tomography
//! aggregates theta and rho.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_geometry::LatticeVector;
use crate::solver::{arg, ZeroCycle};

/// Exact candidate search is used up to this degree for n = 2.
pub const EXACT_DEGREE_CAP_2D: u64 = 400;
/// Exact mode refuses n >= 3 above this degree.
pub const EXACT_DEGREE_CAP_ND: u64 = 50;
/// Work budget (pairs times points) for subsampled searches.
const PAIR_BUDGET: f64 = 4e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleBox {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleDiscrepancy {
    pub value: f64,
    pub witness: AngleBox,
    /// false when a candidate subsample was searched (value is a lower bound)
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// exact up to the degree caps, subsampled beyond
    Auto,
    /// exact or error
    Exact,
}

/// Endpoint candidate: `x` itself (`open = false`, counts `theta <= x`) or
/// the left limit at `x` (`open = true`, counts `theta < x`).
#[derive(Debug, Clone, Copy)]
struct Cand {
    x: f64,
    open: bool,
}

impl Cand {
    fn value(&self) -> f64 {
        if self.open {
            self.x.next_down()
        } else {
            self.x
        }
    }
}

fn candidates(mut vals: Vec<f64>) -> Vec<Cand> {
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.dedup();
    let mut out = vec![Cand { x: -PI, open: false }];
    for v in vals {
        out.push(Cand { x: v, open: true });
        out.push(Cand { x: v, open: false });
    }
    out.push(Cand { x: PI, open: false });
    out
}

/// Every `k`-th candidate, keeping both ends.
fn subsample(c: Vec<Cand>, s: usize) -> Vec<Cand> {
    if c.len() <= s {
        return c;
    }
    let step = c.len() as f64 / s as f64;
    let mut out: Vec<Cand> = (0..s).map(|i| c[(i as f64 * step) as usize]).collect();
    out.push(*c.last().unwrap());
    out
}

fn in_strip(t: f64, a: &Cand, b: &Cand) -> bool {
    let above = if a.open { t >= a.x } else { t > a.x };
    let below = if b.open { t < b.x } else { t <= b.x };
    above && below
}

#[derive(Debug, Clone)]
struct Best {
    pos: f64,
    pos_box: (Vec<Cand>, Vec<Cand>),
    neg: f64,
    neg_box: (Vec<Cand>, Vec<Cand>),
}

impl Best {
    fn merge(mut self, o: Best) -> Best {
        if o.pos > self.pos {
            self.pos = o.pos;
            self.pos_box = o.pos_box;
        }
        if o.neg > self.neg {
            self.neg = o.neg;
            self.neg_box = o.neg_box;
        }
        self
    }
}

struct Search<'a> {
    args: &'a [Vec<f64>],
    w: &'a [f64],
    n: usize,
    total: f64,
    /// per outer axis candidate cap, `None` for exhaustive
    cap: Option<usize>,
}

impl Search<'_> {
    /// `subset` is sorted by the last coordinate.
    fn run(&self, subset: &[usize], axis: usize, scale: f64, prefix: (Vec<Cand>, Vec<Cand>), parallel: bool) -> Best {
        if axis + 1 == self.n {
            return self.last_axis(subset, scale, prefix);
        }
        let mut c = candidates(subset.iter().map(|&i| self.args[i][axis]).collect());
        if let Some(s) = self.cap {
            c = subsample(c, s);
        }
        let body = |ia: usize| -> Best {
            let mut best = Best {
                pos: f64::NEG_INFINITY,
                pos_box: prefix.clone(),
                neg: f64::NEG_INFINITY,
                neg_box: prefix.clone(),
            };
            for ib in ia..c.len() {
                let (a, b) = (c[ia], c[ib]);
                let len = b.x - a.x;
                if len < 0.0 {
                    continue;
                }
                let sub: Vec<usize> =
                    subset.iter().copied().filter(|&i| in_strip(self.args[i][axis], &a, &b)).collect();
                let mut p = prefix.clone();
                p.0.push(a);
                p.1.push(b);
                best = best.merge(self.run(&sub, axis + 1, scale * len / (2.0 * PI), p, false));
            }
            best
        };
        let init =
            Best { pos: f64::NEG_INFINITY, pos_box: prefix.clone(), neg: f64::NEG_INFINITY, neg_box: prefix.clone() };
        if parallel {
            (0..c.len()).into_par_iter().map(body).reduce(|| init.clone(), Best::merge)
        } else {
            (0..c.len()).map(body).fold(init, Best::merge)
        }
    }

    /// One-dimensional sweep: `F(x) = count(theta <= x) / D - scale (x + pi) / 2pi`
    /// on the ordered candidate sequence; returns the largest rise and fall.
    fn last_axis(&self, subset: &[usize], scale: f64, prefix: (Vec<Cand>, Vec<Cand>)) -> Best {
        let j = self.n - 1;
        let f = |count: f64, x: f64| count / self.total - scale * (x + PI) / (2.0 * PI);
        let mut seq: Vec<(Cand, f64)> = vec![(Cand { x: -PI, open: false }, 0.0)];
        let mut count = 0.0;
        let mut k = 0;
        while k < subset.len() {
            let v = self.args[subset[k]][j];
            seq.push((Cand { x: v, open: true }, f(count, v)));
            while k < subset.len() && self.args[subset[k]][j] == v {
                count += self.w[subset[k]];
                k += 1;
            }
            seq.push((Cand { x: v, open: false }, f(count, v)));
        }
        seq.push((Cand { x: PI, open: false }, f(count, PI)));
        let (mut lo, mut hi) = (0usize, 0usize);
        let (mut pos, mut neg) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let (mut pb, mut nb) = ((0, 0), (0, 0));
        for (i, (_, fi)) in seq.iter().enumerate() {
            if *fi < seq[lo].1 {
                lo = i;
            }
            if *fi > seq[hi].1 {
                hi = i;
            }
            if fi - seq[lo].1 > pos {
                pos = fi - seq[lo].1;
                pb = (lo, i);
            }
            if seq[hi].1 - fi > neg {
                neg = seq[hi].1 - fi;
                nb = (hi, i);
            }
        }
        let mk = |(a, b): (usize, usize)| {
            let mut p = prefix.clone();
            p.0.push(seq[a].0);
            p.1.push(seq[b].0);
            p
        };
        Best { pos, pos_box: mk(pb), neg, neg_box: mk(nb) }
    }
}

/// `Delta_ang(Z)`: supremum over half-open boxes `prod (alpha_j, beta_j]`.
pub fn angle_discrepancy(z: &ZeroCycle) -> Result<AngleDiscrepancy> {
    angle_discrepancy_with(z, SearchMode::Auto)
}

pub fn angle_discrepancy_with(z: &ZeroCycle, mode: SearchMode) -> Result<AngleDiscrepancy> {
    if z.is_empty() {
        return Err(Error::EmptyCycle);
    }
    let n = z.n;
    let deg = z.degree();
    let args: Vec<Vec<f64>> = z.points.iter().map(|p| p.z.iter().map(|c| arg(*c)).collect()).collect();
    let w: Vec<f64> = z.points.iter().map(|p| p.m as f64).collect();
    let cap = match (n, mode) {
        (1, _) => None,
        (2, _) if deg <= EXACT_DEGREE_CAP_2D => None,
        (2, SearchMode::Exact) => {
            return Err(Error::InvalidConfig(format!(
                "exact angle discrepancy capped at degree {EXACT_DEGREE_CAP_2D} for n = 2"
            )))
        }
        (2, SearchMode::Auto) => Some(((PAIR_BUDGET / z.points.len() as f64).sqrt() as usize).max(32)),
        (_, SearchMode::Exact) if deg <= EXACT_DEGREE_CAP_ND => None,
        (_, SearchMode::Exact) => {
            return Err(Error::InvalidConfig(format!(
                "exact angle discrepancy refuses n >= 3 above degree {EXACT_DEGREE_CAP_ND}"
            )))
        }
        (_, SearchMode::Auto) => Some(16),
    };
    let mut order: Vec<usize> = (0..z.points.len()).collect();
    order.sort_by(|&a, &b| args[a][n - 1].partial_cmp(&args[b][n - 1]).unwrap());
    let s = Search { args: &args, w: &w, n, total: deg as f64, cap };
    let best = s.run(&order, 0, 1.0, (Vec::new(), Vec::new()), true);
    let (value, b) = if best.pos >= best.neg { (best.pos, best.pos_box) } else { (best.neg, best.neg_box) };
    // a subsample that happens to keep every candidate is still exact
    let exact = cap.is_none() || {
        let full = 2 * z.points.len() + 2;
        cap.is_some_and(|c| c + 1 >= full)
    };
    Ok(AngleDiscrepancy {
        value: value.clamp(0.0, 1.0),
        witness: AngleBox { alpha: b.0.iter().map(Cand::value).collect(), beta: b.1.iter().map(Cand::value).collect() },
        exact,
    })
}

/// Degree of `Z` inside the box, divided by `deg Z`.
pub fn box_mass(z: &ZeroCycle, b: &AngleBox) -> f64 {
    let inside: u64 = z
        .points
        .iter()
        .filter(|p| {
            p.z.iter().enumerate().all(|(j, c)| {
                let t = arg(*c);
                b.alpha[j] < t && t <= b.beta[j]
            })
        })
        .map(|p| p.m as u64)
        .sum();
    inside as f64 / z.degree() as f64
}

/// Haar measure of the box.
pub fn box_volume(b: &AngleBox) -> f64 {
    b.alpha.iter().zip(&b.beta).map(|(a, b)| (b - a).max(0.0) / (2.0 * PI)).product()
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(eps))
    }
}

/// `Delta_rad(Z, eps)`: share of the degree outside the annulus
/// `1 - eps < |xi_j| < (1 - eps)^-1` in some coordinate.
pub fn radius_discrepancy(z: &ZeroCycle, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if z.is_empty() {
        return Err(Error::EmptyCycle);
    }
    let (lo, hi) = (1.0 - eps, 1.0 / (1.0 - eps));
    let inside: u64 = z
        .points
        .iter()
        .filter(|p| {
            p.z.iter().all(|c| {
                let r = c.norm();
                lo < r && r < hi
            })
        })
        .map(|p| p.m as u64)
        .sum();
    Ok(1.0 - inside as f64 / z.degree() as f64)
}

/// `rho(Z, eps) = sum_j Delta_rad(chi^{e_j}_* Z, eps)`.
pub fn rho(z: &ZeroCycle, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    (0..z.n).map(|j| radius_discrepancy(&z.direct_image(&LatticeVector::unit(z.n, j))?, eps)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub value: f64,
    pub witness: LatticeVector,
    /// false if the search stopped at a norm limit before the cutoff
    pub exact: bool,
}

/// Integer vectors with sup-norm exactly `r`.
fn shell(n: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![-r; n];
    loop {
        if cur.iter().any(|x| x.abs() == r) {
            out.push(cur.clone());
        }
        let mut j = 0;
        loop {
            if j == n {
                return out;
            }
            if cur[j] < r {
                cur[j] += 1;
                break;
            }
            cur[j] = -r;
            j += 1;
        }
    }
}

fn pushforward_ratio(z: &ZeroCycle, a: &[i64]) -> Result<f64> {
    let lv = LatticeVector(a.to_vec());
    let d = angle_discrepancy(&z.direct_image(&lv)?)?.value;
    Ok(d / lv.euclidean_norm().sqrt())
}

fn better(v: f64, a: &[i64], best: &(f64, Vec<i64>)) -> bool {
    v > best.0
        || (v == best.0
            && (a.iter().map(|x| x * x).sum::<i64>(), a) < (best.1.iter().map(|x| x * x).sum::<i64>(), &best.1[..]))
}

/// `theta(Z) = sup_a Delta_ang(chi^a_* Z) / |a|^{1/2}` by enumeration in
/// sup-norm shells; vectors with `|a| > best^-2` cannot improve.
pub fn theta(z: &ZeroCycle) -> Result<Theta> {
    theta_bounded(z, f64::INFINITY)
}

/// As [`theta`], but stops at `|a| <= max_norm` (flagged inexact if the
/// cutoff was not reached).
pub fn theta_bounded(z: &ZeroCycle, max_norm: f64) -> Result<Theta> {
    if z.is_empty() {
        return Err(Error::EmptyCycle);
    }
    let mut best: (f64, Vec<i64>) = (f64::NEG_INFINITY, vec![0; z.n]);
    let mut r = 1i64;
    loop {
        let cutoff = if best.0 > 0.0 { best.0.powi(-2) } else { f64::INFINITY };
        let limit = cutoff.min(max_norm);
        if r as f64 > limit {
            return Ok(Theta { value: best.0, witness: LatticeVector(best.1), exact: cutoff <= max_norm });
        }
        let cands: Vec<Vec<i64>> = shell(z.n, r)
            .into_iter()
            .filter(|a| (a.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt() <= limit)
            .collect();
        let vals: Vec<Result<f64>> = cands.par_iter().map(|a| pushforward_ratio(z, a)).collect();
        for (a, v) in cands.iter().zip(vals) {
            let v = v?;
            if better(v, a, &best) {
                best = (v, a.clone());
            }
        }
        r += 1;
    }
}

/// Maximum over all nonzero `a` with `|a|_2 <= max_norm`.
pub fn theta_brute_force(z: &ZeroCycle, max_norm: f64) -> Result<Theta> {
    if z.is_empty() {
        return Err(Error::EmptyCycle);
    }
    let r = max_norm.floor() as i64;
    let cands: Vec<Vec<i64>> = (1..=r)
        .flat_map(|s| shell(z.n, s))
        .filter(|a| (a.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt() <= max_norm)
        .collect();
    let vals: Vec<Result<f64>> = cands.par_iter().map(|a| pushforward_ratio(z, a)).collect();
    let mut best: (f64, Vec<i64>) = (f64::NEG_INFINITY, vec![0; z.n]);
    for (a, v) in cands.iter().zip(vals) {
        let v = v?;
        if better(v, a, &best) {
            best = (v, a.clone());
        }
    }
    Ok(Theta { value: best.0, witness: LatticeVector(best.1), exact: true })
}

/// `(1/deg Z) sum m_xi exp(i <a, arg xi>)`; equals 1 at `a = 0`.
pub fn exponential_sum(z: &ZeroCycle, a: &[i64]) -> Result<Complex64> {
    if a.len() != z.n {
        return Err(Error::DimensionMismatch { expected: z.n, found: a.len() });
    }
    if z.is_empty() {
        return Err(Error::EmptyCycle);
    }
    let s: Complex64 = z
        .points
        .iter()
        .map(|p| {
            let t: f64 = p.z.iter().zip(a).map(|(c, &k)| k as f64 * arg(*c)).sum();
            Complex64::from_polar(p.m as f64, t)
        })
        .sum();
    Ok(s / z.degree() as f64)
}

/// Degree of the part of `Z` in the positive orthant.
pub fn positive_degree(z: &ZeroCycle) -> u64 {
    z.points.iter().filter(|p| p.z.iter().all(|c| c.re > 0.0 && c.im.abs() < 1e-9 * c.norm())).map(|p| p.m as u64).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisHistogram {
    pub axis: usize,
    /// `bins + 1` edges
    pub arg_edges: Vec<f64>,
    pub arg_counts: Vec<u64>,
    pub mod_edges: Vec<f64>,
    pub mod_counts: Vec<u64>,
}

impl AxisHistogram {
    /// `max_k | count_k / deg - 1/bins |`.
    pub fn max_arg_deviation(&self) -> f64 {
        let total: u64 = self.arg_counts.iter().sum();
        let b = self.arg_counts.len() as f64;
        self.arg_counts.iter().map(|&c| (c as f64 / total as f64 - 1.0 / b).abs()).fold(0.0, f64::max)
    }
}

/// Per-axis histograms of arguments (bins `(edge_k, edge_k+1]` over
/// `(-pi, pi]`) and moduli (equal bins over the observed range).
pub fn histograms(z: &ZeroCycle, bins: usize) -> Result<Vec<AxisHistogram>> {
    if bins == 0 {
        return Err(Error::InvalidConfig("bins must be positive".into()));
    }
    if z.is_empty() {
        return Err(Error::EmptyCycle);
    }
    let b = bins as f64;
    Ok((0..z.n)
        .map(|j| {
            let arg_edges: Vec<f64> = (0..=bins).map(|k| -PI + 2.0 * PI * k as f64 / b).collect();
            let mut arg_counts = vec![0u64; bins];
            let mods: Vec<f64> = z.points.iter().map(|p| p.z[j].norm()).collect();
            let lo = mods.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut hi = mods.iter().cloned().fold(0.0, f64::max);
            if hi <= lo {
                hi = lo + 1.0;
            }
            let mod_edges: Vec<f64> = (0..=bins).map(|k| lo + (hi - lo) * k as f64 / b).collect();
            let mut mod_counts = vec![0u64; bins];
            for (p, r) in z.points.iter().zip(&mods) {
                let t = arg(p.z[j]);
                let k = (((t + PI) / (2.0 * PI) * b).ceil() as usize).clamp(1, bins) - 1;
                arg_counts[k] += p.m as u64;
                let k = (((r - lo) / (hi - lo) * b) as usize).min(bins - 1);
                mod_counts[k] += p.m as u64;
            }
            AxisHistogram { axis: j, arg_edges, arg_counts, mod_edges, mod_counts }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsValue {
    pub eps: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub degree: u64,
    pub delta_ang: f64,
    pub witness_box: AngleBox,
    pub delta_ang_exact: bool,
    pub delta_rad: Vec<EpsValue>,
    pub theta: f64,
    pub theta_witness: LatticeVector,
    pub theta_exact: bool,
    pub rho: Vec<EpsValue>,
    pub positive_degree: u64,
}

/// Full report; `theta_max_norm` bounds the theta search.
pub fn discrepancy_report(z: &ZeroCycle, eps: &[f64], theta_max_norm: f64) -> Result<DiscrepancyReport> {
    let ang = angle_discrepancy(z)?;
    let th = theta_bounded(z, theta_max_norm)?;
    Ok(DiscrepancyReport {
        degree: z.degree(),
        delta_ang: ang.value,
        witness_box: ang.witness,
        delta_ang_exact: ang.exact,
        delta_rad: eps
            .iter()
            .map(|&e| Ok(EpsValue { eps: e, value: radius_discrepancy(z, e)? }))
            .collect::<Result<_>>()?,
        theta: th.value,
        theta_witness: th.witness,
        theta_exact: th.exact,
        rho: eps.iter().map(|&e| Ok(EpsValue { eps: e, value: rho(z, e)? })).collect::<Result<_>>()?,
        positive_degree: positive_degree(z),
    })
}
