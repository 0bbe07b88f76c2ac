//! Laurent polynomials, their evaluation on the torus, norms, faces and
//! monomial changes of variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_geometry::{
    convex_hull, face, mixed_volume_integer, LatticePolytope, LatticeVector, Point, UnimodularMatrix,
};

/// `z^k` by repeated squaring; negative exponents invert first.
pub fn ipow(z: Complex64, k: i64) -> Complex64 {
    let (mut base, mut e) = if k < 0 { (z.inv(), k.unsigned_abs()) } else { (z, k as u64) };
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Certified enclosure `lower <= ||f||_sup <= upper` of the sup norm on the
/// unit polycircle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNormInterval {
    pub lower: f64,
    pub upper: f64,
}

impl SupNormInterval {
    pub fn log(&self) -> (f64, f64) {
        (self.lower.ln(), self.upper.ln())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPolynomial {
    n: usize,
    terms: BTreeMap<Point, Complex64>,
    declared_support: Option<BTreeSet<Point>>,
}

impl LaurentPolynomial {
    pub fn zero(n: usize) -> Self {
        LaurentPolynomial { n, terms: BTreeMap::new(), declared_support: None }
    }

    /// Builds from (exponent, coefficient) pairs, summing repeats and
    /// pruning zero coefficients.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point, Complex64)>,
    {
        let mut map: BTreeMap<Point, Complex64> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: e.len() });
            }
            *map.entry(e).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(LaurentPolynomial { n, terms: map, declared_support: None })
    }

    pub fn from_real_terms(n: usize, terms: &[(Point, f64)]) -> Result<Self> {
        Self::from_terms(n, terms.iter().map(|(e, c)| (e.clone(), Complex64::new(*c, 0.0))))
    }

    pub fn monomial(exponent: Point, c: Complex64) -> Self {
        let n = exponent.len();
        Self::from_terms(n, [(exponent, c)]).unwrap()
    }

    pub fn constant(n: usize, c: Complex64) -> Self {
        Self::from_terms(n, [(vec![0; n], c)]).unwrap()
    }

    /// Dense univariate polynomial from coefficients of `x^0, x^1, ...`.
    pub fn univariate(coeffs: &[Complex64]) -> Self {
        Self::from_terms(1, coeffs.iter().enumerate().map(|(k, &c)| (vec![k as i64], c))).unwrap()
    }

    /// Attaches a declared support, which must contain the actual support.
    pub fn with_declared_support(mut self, support: Vec<Point>) -> Result<Self> {
        let set: BTreeSet<Point> = support.into_iter().collect();
        if let Some(e) = set.iter().find(|e| e.len() != self.n) {
            return Err(Error::DimensionMismatch { expected: self.n, found: e.len() });
        }
        if let Some(e) = self.terms.keys().find(|e| !set.contains(*e)) {
            return Err(Error::InvalidConfig(format!("exponent {e:?} outside the declared support")));
        }
        self.declared_support = Some(set);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Point, Complex64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn support(&self) -> Vec<Point> {
        self.terms.keys().cloned().collect()
    }

    pub fn declared_support(&self) -> Option<&BTreeSet<Point>> {
        self.declared_support.as_ref()
    }

    /// The declared support when present, else the actual support.
    pub fn effective_support(&self) -> Vec<Point> {
        match &self.declared_support {
            Some(s) => s.iter().cloned().collect(),
            None => self.support(),
        }
    }

    pub fn coefficient(&self, e: &[i64]) -> Complex64 {
        self.terms.get(e).copied().unwrap_or_default()
    }

    /// Newton polytope of the effective support.
    pub fn newton_polytope(&self) -> Result<LatticePolytope> {
        let s = self.effective_support();
        if s.is_empty() {
            return Err(Error::ZeroPolynomial);
        }
        convex_hull(&s)
    }

    fn exponent_bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = vec![i64::MAX; self.n];
        let mut hi = vec![i64::MIN; self.n];
        for e in self.terms.keys() {
            for j in 0..self.n {
                lo[j] = lo[j].min(e[j]);
                hi[j] = hi[j].max(e[j]);
            }
        }
        (lo, hi)
    }

    /// Largest exponent spread over the coordinate axes.
    pub fn width(&self) -> i64 {
        if self.is_zero() {
            return 0;
        }
        let (lo, hi) = self.exponent_bounds();
        lo.iter().zip(&hi).map(|(a, b)| b - a).max().unwrap_or(0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// `sum |alpha_a| |x^a|`, the scale against which `|f(x)|` is small.
    pub fn abs_evaluate(&self, x: &[Complex64]) -> f64 {
        let r: Vec<f64> = x.iter().map(|z| z.norm()).collect();
        self.terms
            .iter()
            .map(|(e, c)| c.norm() * e.iter().zip(&r).map(|(&k, &m)| m.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn evaluate(&self, x: &[Complex64]) -> Result<Complex64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        if let Some(i) = x.iter().position(|z| *z == Complex64::new(0.0, 0.0)) {
            return Err(Error::ZeroCoordinate { index: i });
        }
        Ok(self.terms.iter().map(|(e, c)| e.iter().zip(x).fold(*c, |acc, (&k, &z)| acc * ipow(z, k))).sum())
    }

    /// Log of the largest coefficient modulus.
    pub fn height(&self) -> Result<f64> {
        self.terms
            .values()
            .map(|c| c.norm())
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            .map(f64::ln)
            .ok_or(Error::ZeroPolynomial)
    }

    pub fn default_grid_order(&self) -> usize {
        4 * self.width() as usize + 1
    }

    /// Sup norm enclosure with the default grid and refinement.
    pub fn sup_norm_default(&self) -> Result<SupNormInterval> {
        self.sup_norm(self.default_grid_order(), true)
    }

    /// Lower bound from the grid of `grid_order`-th roots of unity on each
    /// axis (plus optional local ascent), upper bound from the l1 norm.
    pub fn sup_norm(&self, grid_order: usize, refine: bool) -> Result<SupNormInterval> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let upper = self.l1_norm();
        let grid_order = grid_order.max(1);
        let (best, at) = self.grid_max(grid_order);
        let mut lower = best;
        if refine && self.num_terms() > 1 {
            let theta: Vec<f64> =
                at.iter().map(|&k| 2.0 * std::f64::consts::PI * k as f64 / grid_order as f64).collect();
            lower = lower.max(self.ascend(theta, 50));
        }
        Ok(SupNormInterval { lower: lower.min(upper), upper })
    }

    fn grid_max(&self, order: usize) -> (f64, Vec<usize>) {
        let n = self.n;
        let (lo, hi) = self.exponent_bounds();
        let fits = lo.iter().zip(&hi).all(|(a, b)| ((b - a) as usize) < order);
        let total = order.checked_pow(n as u32).unwrap_or(usize::MAX);
        let mut values: Vec<Complex64>;
        if fits && total <= 1 << 24 {
            values = vec![Complex64::new(0.0, 0.0); total];
            for (e, c) in &self.terms {
                let idx = (0..n).fold(0usize, |acc, j| acc * order + (e[j] - lo[j]) as usize);
                values[idx] += c;
            }
            let mut planner = FftPlanner::new();
            let fft = planner.plan_fft_inverse(order);
            let mut line = vec![Complex64::new(0.0, 0.0); order];
            for axis in 0..n {
                let stride = order.pow((n - 1 - axis) as u32);
                for start in 0..total {
                    if !(start / stride).is_multiple_of(order) {
                        continue;
                    }
                    for k in 0..order {
                        line[k] = values[start + k * stride];
                    }
                    fft.process(&mut line);
                    for k in 0..order {
                        values[start + k * stride] = line[k];
                    }
                }
            }
        } else {
            let total = total.min(1 << 22);
            values = (0..total)
                .map(|idx| {
                    let x = grid_point(idx, order, n);
                    self.evaluate(&x).unwrap()
                })
                .collect();
        }
        let (idx, best) = values
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
        let mut at = vec![0usize; n];
        let mut r = idx;
        for j in (0..n).rev() {
            at[j] = r % order;
            r /= order;
        }
        (best, at)
    }

    /// Gradient ascent of `log |f|^2` on the torus angles; returns the best
    /// modulus seen.
    fn ascend(&self, mut theta: Vec<f64>, steps: usize) -> f64 {
        let ev = self.evaluator();
        let point = |t: &[f64]| -> Vec<Complex64> { t.iter().map(|&a| Complex64::from_polar(1.0, a)).collect() };
        let (mut v, mut g) = ev.value_and_angle_gradient(&point(&theta));
        let mut best = v.norm();
        let w = self.width().max(1) as f64;
        let mut step = 1.0 / (w * w);
        for _ in 0..steps {
            if best == 0.0 {
                break;
            }
            let grad: Vec<f64> = g.iter().map(|gj| 2.0 * (v.conj() * gj).re / (best * best)).collect();
            let gn = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
            if gn < 1e-15 {
                break;
            }
            let mut improved = false;
            for _ in 0..30 {
                let cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, d)| t + step * d).collect();
                let (cv, cg) = ev.value_and_angle_gradient(&point(&cand));
                if cv.norm() > best {
                    theta = cand;
                    v = cv;
                    g = cg;
                    best = cv.norm();
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best
    }

    /// Restriction of `f` to the face of its own support in direction `v`.
    pub fn face_polynomial(&self, v: &LatticeVector) -> Result<LaurentPolynomial> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        self.face_polynomial_on(&self.support(), v)
    }

    /// Restriction of `f` to `A^v` for a given support set `A`.
    pub fn face_polynomial_on(&self, a: &[Point], v: &LatticeVector) -> Result<LaurentPolynomial> {
        if v.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: v.dim() });
        }
        let f = face(a, v)?;
        let terms = f.iter().map(|e| (e.clone(), self.coefficient(e)));
        let g = Self::from_terms(self.n, terms)?;
        Ok(g.with_declared_support(f).unwrap())
    }

    /// `f^A(y) = f(y^{b_1}, ..., y^{b_n})` with `b_i` the rows of `A^{-1}`:
    /// the exponent `a` maps to `a A^{-1}`.
    pub fn monomial_pullback(&self, a: &UnimodularMatrix) -> Result<LaurentPolynomial> {
        if a.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: a.dim() });
        }
        let terms = self.terms.iter().map(|(e, c)| (a.apply_inverse_right(e), *c));
        let g = Self::from_terms(self.n, terms)?;
        match &self.declared_support {
            Some(s) => g.with_declared_support(s.iter().map(|e| a.apply_inverse_right(e)).collect()),
            None => Ok(g),
        }
    }

    /// Like `monomial_pullback` but takes a raw integer matrix and checks it.
    pub fn monomial_pullback_rows(&self, rows: Vec<Vec<i64>>) -> Result<LaurentPolynomial> {
        self.monomial_pullback(&UnimodularMatrix::new(rows)?)
    }

    pub fn multiply(&self, other: &LaurentPolynomial) -> Result<LaurentPolynomial> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let mut out: BTreeMap<Point, Complex64> = BTreeMap::new();
        for (a, c) in &self.terms {
            for (b, d) in &other.terms {
                let e: Point = a.iter().zip(b).map(|(x, y)| x + y).collect();
                *out.entry(e).or_default() += c * d;
            }
        }
        Self::from_terms(self.n, out)
    }

    pub fn scale(&self, gamma: Complex64) -> LaurentPolynomial {
        let mut g = Self::from_terms(self.n, self.terms.iter().map(|(e, c)| (e.clone(), c * gamma))).unwrap();
        g.declared_support = self.declared_support.clone();
        g
    }

    /// `x^b f`.
    pub fn shift(&self, b: &[i64]) -> LaurentPolynomial {
        let mv = |e: &Point| -> Point { e.iter().zip(b).map(|(x, y)| x + y).collect() };
        let mut g = Self::from_terms(self.n, self.terms.iter().map(|(e, c)| (mv(e), *c))).unwrap();
        g.declared_support = self.declared_support.as_ref().map(|s| s.iter().map(mv).collect());
        g
    }

    /// Writes `f = x^b g(x^u)` for a polynomial supported on a line `b + Z u`;
    /// `b` is the end of the support with the smallest `u`-parameter.
    pub fn restrict_to_sublattice(&self, u: &LatticeVector) -> Result<UnivariateRestriction> {
        let base = self.terms.keys().next().ok_or(Error::ZeroPolynomial)?.clone();
        let support: Vec<Point> = self.terms.keys().cloned().collect();
        let ks = line_parameters(&support, &base, u)?;
        let kmin = *ks.iter().min().unwrap();
        let kmax = *ks.iter().max().unwrap();
        let b: Point = base.iter().zip(u.coords()).map(|(x, y)| x + kmin * y).collect();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (kmax - kmin + 1) as usize];
        for (k, c) in ks.iter().zip(self.terms.values()) {
            coeffs[(k - kmin) as usize] = *c;
        }
        Ok(UnivariateRestriction { base: b, coeffs })
    }

    /// Integer coefficients when every coefficient is an exact integer.
    pub fn integer_coefficients(&self) -> Option<BTreeMap<Point, i64>> {
        self.terms
            .iter()
            .map(|(e, c)| (c.im == 0.0 && c.re.fract() == 0.0 && c.re.abs() < 9.0e15).then(|| (e.clone(), c.re as i64)))
            .collect()
    }

    pub fn evaluator(&self) -> Evaluator {
        Evaluator::new(self)
    }

    /// Text form, e.g. `x1^13 + x1*x2^12 + x2^13 + 1`.
    pub fn to_text(&self) -> String {
        format_polynomial(self)
    }

    pub fn parse(text: &str) -> Result<LaurentPolynomial> {
        parse_polynomial(text, None)
    }

    pub fn parse_in(text: &str, n: usize) -> Result<LaurentPolynomial> {
        parse_polynomial(text, Some(n))
    }

    /// Total degree when homogeneous with nonnegative exponents.
    pub fn homogeneous_degree(&self) -> Result<u32> {
        let mut degs =
            self.terms.keys().map(|e| if e.iter().any(|&k| k < 0) { None } else { Some(e.iter().sum::<i64>() as u32) });
        let first = degs.next().ok_or(Error::ZeroPolynomial)?.ok_or(Error::NotHomogeneous)?;
        for d in degs {
            if d != Some(first) {
                return Err(Error::NotHomogeneous);
            }
        }
        Ok(first)
    }
}

fn grid_point(mut idx: usize, order: usize, n: usize) -> Vec<Complex64> {
    let mut x = vec![Complex64::new(1.0, 0.0); n];
    for j in (0..n).rev() {
        let k = idx % order;
        idx /= order;
        x[j] = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / order as f64);
    }
    x
}

/// Parameters `k` with `p = base + k u` for each point, or an error when a
/// point is off the line.
pub fn line_parameters(points: &[Point], base: &[i64], u: &LatticeVector) -> Result<Vec<i64>> {
    let j = u.coords().iter().position(|&c| c != 0).ok_or(Error::ZeroVector)?;
    points
        .iter()
        .map(|p| {
            let d: Vec<i64> = p.iter().zip(base).map(|(x, y)| x - y).collect();
            if d[j] % u.coords()[j] != 0 {
                return Err(Error::NotOnLine(u.0.clone()));
            }
            let k = d[j] / u.coords()[j];
            if d.iter().zip(u.coords()).any(|(&x, &y)| x != k * y) {
                return Err(Error::NotOnLine(u.0.clone()));
            }
            Ok(k)
        })
        .collect()
}

/// `f = x^base * g(t)` at `t = x^u`, with `g` given by its coefficients
/// from `t^0` upward.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateRestriction {
    pub base: Point,
    pub coeffs: Vec<Complex64>,
}

/// Precomputed form for fast evaluation with partial derivatives.
#[derive(Debug, Clone)]
pub struct Evaluator {
    n: usize,
    lo: Vec<i64>,
    hi: Vec<i64>,
    exps: Vec<Point>,
    coeffs: Vec<Complex64>,
    abs_coeffs: Vec<f64>,
}

impl Evaluator {
    fn new(f: &LaurentPolynomial) -> Self {
        let (lo, hi) = if f.is_zero() { (vec![0; f.n], vec![0; f.n]) } else { f.exponent_bounds() };
        Evaluator {
            n: f.n,
            lo,
            hi,
            exps: f.terms.keys().cloned().collect(),
            coeffs: f.terms.values().cloned().collect(),
            abs_coeffs: f.terms.values().map(|c| c.norm()).collect(),
        }
    }

    fn power_tables(&self, x: &[Complex64]) -> Vec<Vec<Complex64>> {
        (0..self.n)
            .map(|j| {
                let len = (self.hi[j] - self.lo[j] + 1) as usize;
                let mut t = Vec::with_capacity(len);
                let mut p = ipow(x[j], self.lo[j]);
                for _ in 0..len {
                    t.push(p);
                    p *= x[j];
                }
                t
            })
            .collect()
    }

    pub fn value(&self, x: &[Complex64]) -> Complex64 {
        let tables = self.power_tables(x);
        self.exps
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| (0..self.n).fold(*c, |acc, j| acc * tables[j][(e[j] - self.lo[j]) as usize]))
            .sum()
    }

    /// Value and the gradient with respect to `x`.
    pub fn value_and_gradient(&self, x: &[Complex64]) -> (Complex64, Vec<Complex64>) {
        let tables = self.power_tables(x);
        let mut v = Complex64::new(0.0, 0.0);
        let mut g = vec![Complex64::new(0.0, 0.0); self.n];
        for (e, c) in self.exps.iter().zip(&self.coeffs) {
            let m = (0..self.n).fold(*c, |acc, j| acc * tables[j][(e[j] - self.lo[j]) as usize]);
            v += m;
            for j in 0..self.n {
                if e[j] != 0 {
                    g[j] += m * e[j] as f64 / x[j];
                }
            }
        }
        (v, g)
    }

    /// Value and `d f / d theta_j` at `x = e^{i theta}`.
    pub fn value_and_angle_gradient(&self, x: &[Complex64]) -> (Complex64, Vec<Complex64>) {
        let tables = self.power_tables(x);
        let mut v = Complex64::new(0.0, 0.0);
        let mut g = vec![Complex64::new(0.0, 0.0); self.n];
        for (e, c) in self.exps.iter().zip(&self.coeffs) {
            let m = (0..self.n).fold(*c, |acc, j| acc * tables[j][(e[j] - self.lo[j]) as usize]);
            v += m;
            for j in 0..self.n {
                g[j] += m * Complex64::new(0.0, e[j] as f64);
            }
        }
        (v, g)
    }

    /// `sum |alpha_a| |x^a|`.
    pub fn abs_value(&self, x: &[Complex64]) -> f64 {
        let r: Vec<Complex64> = x.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect();
        let tables = self.power_tables(&r);
        self.exps
            .iter()
            .zip(&self.abs_coeffs)
            .map(|(e, c)| (0..self.n).fold(*c, |acc, j| acc * tables[j][(e[j] - self.lo[j]) as usize].re))
            .sum()
    }
}

/// Dense univariate polynomial, coefficients from degree 0 upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariatePolynomial {
    pub coeffs: Vec<Complex64>,
}

impl UnivariatePolynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        UnivariatePolynomial { coeffs }
    }

    pub fn from_real(c: &[f64]) -> Self {
        UnivariatePolynomial { coeffs: c.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    /// Formal degree (length - 1).
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap_or(&Complex64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Drops exactly-zero top coefficients.
    pub fn trimmed(&self) -> Self {
        let mut c = self.coeffs.clone();
        while c.len() > 1 && *c.last().unwrap() == Complex64::new(0.0, 0.0) {
            c.pop();
        }
        UnivariatePolynomial { coeffs: c }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return UnivariatePolynomial { coeffs: Vec::new() };
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UnivariatePolynomial { coeffs: out }
    }

    /// `prod (z - r)` scaled by `lead`.
    pub fn from_roots(roots: &[Complex64], lead: Complex64) -> Self {
        let mut p = UnivariatePolynomial { coeffs: vec![lead] };
        for r in roots {
            p = p.mul(&UnivariatePolynomial { coeffs: vec![-r, Complex64::new(1.0, 0.0)] });
        }
        p
    }

    pub fn to_laurent(&self) -> LaurentPolynomial {
        LaurentPolynomial::univariate(&self.coeffs)
    }
}

/// Bivariate test system with mixed volume 169 used throughout the examples.
pub const SAMPLE_SYSTEM: &str = "x1^13 + x1*x2^12 + x2^13 + 1; x1^12*x2 - x2^13 - x1*x2 + 1";

/// A square system `f_1, ..., f_n` in `n` variables with cached Newton
/// polytopes.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    n: usize,
    polynomials: Vec<LaurentPolynomial>,
    polytopes: Vec<LatticePolytope>,
}

impl SystemSpec {
    pub fn new(polynomials: Vec<LaurentPolynomial>) -> Result<Self> {
        let n = polynomials.first().ok_or(Error::EmptyInput)?.n();
        if polynomials.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: polynomials.len() });
        }
        if let Some(f) = polynomials.iter().find(|f| f.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: f.n() });
        }
        let polytopes = polynomials.iter().map(|f| f.newton_polytope()).collect::<Result<Vec<_>>>()?;
        Ok(SystemSpec { n, polynomials, polytopes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn polynomials(&self) -> &[LaurentPolynomial] {
        &self.polynomials
    }

    pub fn polytopes(&self) -> &[LatticePolytope] {
        &self.polytopes
    }

    pub fn supports(&self) -> Vec<Vec<Point>> {
        self.polynomials.iter().map(|f| f.effective_support()).collect()
    }

    pub fn mixed_volume(&self) -> Result<u64> {
        mixed_volume_integer(&self.polytopes)
    }

    /// Mixed volume, required to be at least 1.
    pub fn bernstein_number(&self) -> Result<u64> {
        let d = self.mixed_volume()?;
        if d < 1 {
            return Err(Error::DegenerateMixedVolume(d.to_string()));
        }
        Ok(d)
    }

    pub fn map_polynomials<F>(&self, f: F) -> Result<SystemSpec>
    where
        F: FnMut(&LaurentPolynomial) -> Result<LaurentPolynomial>,
    {
        SystemSpec::new(self.polynomials.iter().map(f).collect::<Result<Vec<_>>>()?)
    }

    /// Polynomials separated by `;`, dimension from the largest variable.
    pub fn parse(text: &str) -> Result<SystemSpec> {
        let pieces: Vec<&str> = text.split(';').filter(|p| !p.trim().is_empty()).collect();
        let mut n = pieces.len();
        let mut offset = 0;
        for p in text.split(';') {
            n = n.max(max_variable_index(p).map_err(|e| shift_err(e, offset))?);
            offset += p.len() + 1;
        }
        let mut polys = Vec::new();
        let mut offset = 0;
        for p in text.split(';') {
            if !p.trim().is_empty() {
                polys.push(parse_polynomial(p, Some(n)).map_err(|e| shift_err(e, offset))?);
            }
            offset += p.len() + 1;
        }
        SystemSpec::new(polys)
    }

    pub fn to_text(&self) -> String {
        self.polynomials.iter().map(|f| f.to_text()).collect::<Vec<_>>().join("; ")
    }

    /// `{"n":2,"polynomials":[...]}` where entries are text or term lists.
    pub fn from_json_str(s: &str) -> Result<SystemSpec> {
        let j: SystemJson = serde_json::from_str(s)?;
        let n = j.n;
        let polys = j
            .polynomials
            .into_iter()
            .map(|p| match p {
                PolyEntry::Text(t) => match n {
                    Some(n) => parse_polynomial(&t, Some(n)),
                    None => parse_polynomial(&t, None),
                },
                PolyEntry::Json(pj) => LaurentPolynomial::try_from(pj),
            })
            .collect::<Result<Vec<_>>>()?;
        let n = n.unwrap_or_else(|| polys.iter().map(|f| f.n()).max().unwrap_or(0).max(polys.len()));
        let polys = polys.into_iter().map(|f| lift_dimension(f, n)).collect::<Result<Vec<_>>>()?;
        SystemSpec::new(polys)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "polynomials": self.polynomials.iter().map(|f| serde_json::to_value(f).unwrap()).collect::<Vec<_>>(),
        })
    }
}

fn lift_dimension(f: LaurentPolynomial, n: usize) -> Result<LaurentPolynomial> {
    if f.n() == n {
        return Ok(f);
    }
    if f.n() > n {
        return Err(Error::DimensionMismatch { expected: n, found: f.n() });
    }
    let pad = |e: &Point| -> Point {
        let mut e = e.clone();
        e.resize(n, 0);
        e
    };
    let g = LaurentPolynomial::from_terms(n, f.terms().iter().map(|(e, c)| (pad(e), *c)))?;
    match f.declared_support() {
        Some(s) => g.with_declared_support(s.iter().map(pad).collect()),
        None => Ok(g),
    }
}

fn shift_err(e: Error, offset: usize) -> Error {
    match e {
        Error::Parse { pos, msg } => Error::Parse { pos: pos + offset, msg },
        other => other,
    }
}

#[derive(Deserialize)]
struct SystemJson {
    n: Option<usize>,
    polynomials: Vec<PolyEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolyEntry {
    Text(String),
    Json(PolyJson),
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    e: Point,
    c: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    n: usize,
    terms: Vec<TermJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<Vec<Point>>,
}

impl TryFrom<PolyJson> for LaurentPolynomial {
    type Error = Error;
    fn try_from(j: PolyJson) -> Result<Self> {
        let f = LaurentPolynomial::from_terms(j.n, j.terms.into_iter().map(|t| (t.e, Complex64::new(t.c[0], t.c[1]))))?;
        match j.support {
            Some(s) => f.with_declared_support(s),
            None => Ok(f),
        }
    }
}

impl Serialize for LaurentPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson {
            n: self.n,
            terms: self.terms.iter().map(|(e, c)| TermJson { e: e.clone(), c: [c.re, c.im] }).collect(),
            support: self.declared_support.as_ref().map(|s| s.iter().cloned().collect()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PolyJson::deserialize(d)?;
        LaurentPolynomial::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for LaurentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_polynomial(self))
    }
}

fn format_monomial(e: &[i64]) -> String {
    let n = e.len();
    let mut parts = Vec::new();
    for (j, &k) in e.iter().enumerate() {
        if k == 0 {
            continue;
        }
        let var = if n == 1 { "x".to_string() } else { format!("x{}", j + 1) };
        parts.push(if k == 1 { var } else { format!("{var}^{k}") });
    }
    parts.join("*")
}

fn format_polynomial(p: &LaurentPolynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (e, c)) in p.terms.iter().rev().enumerate() {
        let mono = format_monomial(e);
        let (negative, body) = if c.im != 0.0 {
            let sign = if c.im < 0.0 || (c.im == 0.0 && c.im.is_sign_negative()) { '-' } else { '+' };
            (false, format!("({}{}{}i)", c.re, sign, c.im.abs()))
        } else {
            let neg = c.re.is_sign_negative();
            let a = c.re.abs();
            if a == 1.0 && !mono.is_empty() {
                (neg, String::new())
            } else {
                (neg, format!("{a}"))
            }
        };
        let term = match (body.is_empty(), mono.is_empty()) {
            (true, _) => mono,
            (false, true) => body,
            (false, false) => format!("{body}*{mono}"),
        };
        match (i, negative) {
            (0, false) => out.push_str(&term),
            (0, true) => {
                out.push('-');
                out.push_str(&term);
            }
            (_, false) => {
                out.push_str(" + ");
                out.push_str(&term);
            }
            (_, true) => {
                out.push_str(" - ");
                out.push_str(&term);
            }
        }
    }
    out
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.to_string() })
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.eat(b'.') {
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        if self.pos == start || (self.pos == start + 1 && self.s[start] == b'.') {
            self.pos = start;
            return self.err("expected a number");
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let digits = self.pos;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        let mut v: f64 = match text.parse() {
            Ok(v) => v,
            Err(_) => {
                self.pos = start;
                return self.err("malformed number");
            }
        };
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let d = self.number()?;
            v /= d;
        }
        Ok(v)
    }

    fn signed_integer(&mut self) -> Result<i64> {
        let neg = if self.eat(b'(') {
            self.skip_ws();
            let neg = self.eat(b'-');
            let v = self.unsigned()?;
            self.skip_ws();
            if !self.eat(b')') {
                return self.err("expected ')'");
            }
            return Ok(if neg { -v } else { v });
        } else {
            self.eat(b'-')
        };
        let v = self.unsigned()?;
        Ok(if neg { -v } else { v })
    }

    fn unsigned(&mut self) -> Result<i64> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer exponent");
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().or_else(|_| {
            self.pos = start;
            self.err("exponent out of range")
        })
    }

    /// Coefficient forms: `re`, `re+imi`, `imi`, `i`, `(re+imi)`.
    fn coefficient(&mut self) -> Result<Option<Complex64>> {
        if self.peek() == Some(b'(') {
            self.pos += 1;
            self.skip_ws();
            let neg = self.eat(b'-');
            if !neg {
                self.eat(b'+');
            }
            self.skip_ws();
            let mut c = self.real_or_imag()?;
            if neg {
                c = -c;
            }
            self.skip_ws();
            if matches!(self.peek(), Some(b'+' | b'-')) {
                let neg = self.peek() == Some(b'-');
                self.pos += 1;
                self.skip_ws();
                let d = self.real_or_imag()?;
                c += if neg { -d } else { d };
            }
            self.skip_ws();
            if !self.eat(b')') {
                return self.err("expected ')'");
            }
            return Ok(Some(c));
        }
        if matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
            let re = self.number()?;
            if self.eat(b'i') {
                return Ok(Some(Complex64::new(0.0, re)));
            }
            // re+imi written without spaces
            if matches!(self.peek(), Some(b'+' | b'-')) {
                let save = self.pos;
                let neg = self.peek() == Some(b'-');
                self.pos += 1;
                if matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
                    if let Ok(im) = self.number() {
                        if self.eat(b'i') {
                            return Ok(Some(Complex64::new(re, if neg { -im } else { im })));
                        }
                    }
                }
                self.pos = save;
            }
            return Ok(Some(Complex64::new(re, 0.0)));
        }
        if self.peek() == Some(b'i') && !matches!(self.s.get(self.pos + 1), Some(b'0'..=b'9' | b'a'..=b'z')) {
            self.pos += 1;
            return Ok(Some(Complex64::new(0.0, 1.0)));
        }
        Ok(None)
    }

    fn real_or_imag(&mut self) -> Result<Complex64> {
        if self.eat(b'i') {
            return Ok(Complex64::new(0.0, 1.0));
        }
        let v = self.number()?;
        if self.eat(b'i') {
            Ok(Complex64::new(0.0, v))
        } else {
            Ok(Complex64::new(v, 0.0))
        }
    }

    /// Variable name to 1-based index.
    fn variable(&mut self) -> Result<Option<usize>> {
        match self.peek() {
            Some(b'x') => {
                self.pos += 1;
                let start = self.pos;
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
                if start == self.pos {
                    return Ok(Some(1));
                }
                let idx: usize = std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().unwrap_or(0);
                if idx == 0 {
                    self.pos = start;
                    return self.err("variable indices start at 1");
                }
                Ok(Some(idx))
            }
            Some(b'y') => {
                self.pos += 1;
                Ok(Some(2))
            }
            Some(b'z') => {
                self.pos += 1;
                Ok(Some(3))
            }
            _ => Ok(None),
        }
    }

    fn term(&mut self) -> Result<(Complex64, BTreeMap<usize, i64>)> {
        let mut exps: BTreeMap<usize, i64> = BTreeMap::new();
        let coef = self.coefficient()?;
        let mut expect_var = coef.is_none();
        if coef.is_some() {
            self.skip_ws();
            if self.eat(b'*') {
                self.skip_ws();
                expect_var = true;
            }
        }
        if expect_var {
            loop {
                let Some(idx) = self.variable()? else {
                    return self.err("expected a variable");
                };
                let mut k = 1;
                self.skip_ws();
                if self.eat(b'^') {
                    self.skip_ws();
                    k = self.signed_integer()?;
                }
                *exps.entry(idx).or_insert(0) += k;
                self.skip_ws();
                if self.peek() == Some(b'*') {
                    self.pos += 1;
                    self.skip_ws();
                    continue;
                }
                break;
            }
        }
        Ok((coef.unwrap_or(Complex64::new(1.0, 0.0)), exps))
    }
}

fn parse_terms(text: &str) -> Result<Vec<(Complex64, BTreeMap<usize, i64>)>> {
    let mut p = Parser { s: text.as_bytes(), pos: 0 };
    let mut out = Vec::new();
    p.skip_ws();
    if p.peek().is_none() {
        return p.err("empty polynomial");
    }
    let mut neg = false;
    if p.eat(b'-') {
        neg = true;
    } else {
        p.eat(b'+');
    }
    loop {
        p.skip_ws();
        let (c, e) = p.term()?;
        out.push((if neg { -c } else { c }, e));
        p.skip_ws();
        match p.peek() {
            None => break,
            Some(b'+') => neg = false,
            Some(b'-') => neg = true,
            Some(_) => return p.err("expected '+', '-' or end of input"),
        }
        p.pos += 1;
    }
    Ok(out)
}

fn max_variable_index(text: &str) -> Result<usize> {
    Ok(parse_terms(text)?.iter().flat_map(|(_, e)| e.keys().copied()).max().unwrap_or(1))
}

fn parse_polynomial(text: &str, n: Option<usize>) -> Result<LaurentPolynomial> {
    let terms = parse_terms(text)?;
    let max_idx = terms.iter().flat_map(|(_, e)| e.keys().copied()).max().unwrap_or(1);
    let n = n.unwrap_or(max_idx);
    if max_idx > n {
        return Err(Error::Parse { pos: 0, msg: format!("variable x{max_idx} exceeds dimension {n}") });
    }
    LaurentPolynomial::from_terms(
        n,
        terms.into_iter().map(|(c, e)| {
            let mut v = vec![0; n];
            for (i, k) in e {
                v[i - 1] = k;
            }
            (v, c)
        }),
    )
}
