//! Sylvester resultants, directional resultants of face systems and
//! elimination polynomials by evaluation and interpolation.
//!
//! Resultant magnitudes are carried in log form: for dilated supports the
//! raw values overflow `f64` long before the computations become hard.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_geometry::{complete_to_unimodular, face, facet_normals, minkowski_sum, LatticeVector, Point};
use crate::laurent::{line_parameters, LaurentPolynomial, SystemSpec, UnivariatePolynomial};
use crate::solver::ZeroCycle;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `exp(log_abs) * phase`; zero is `log_abs = -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub log_abs: f64,
    pub phase: Complex64,
}

impl LogValue {
    pub fn zero() -> Self {
        LogValue { log_abs: f64::NEG_INFINITY, phase: ZERO }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z == ZERO {
            Self::zero()
        } else {
            LogValue { log_abs: z.norm().ln(), phase: z / z.norm() }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            ZERO
        } else {
            self.phase * self.log_abs.exp()
        }
    }
}

/// Determinant in log form with a pivot-ratio condition estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDeterminant {
    pub value: LogValue,
    /// max/min pivot modulus after row equilibration; infinite when singular.
    pub condition: f64,
}

/// Determinant of a row-major `n x n` matrix by Gaussian elimination with
/// row equilibration and partial pivoting.
pub fn log_determinant(mut a: Vec<Complex64>, n: usize) -> LogDeterminant {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return LogDeterminant { value: LogValue { log_abs: 0.0, phase: ONE }, condition: 1.0 };
    }
    let singular = LogDeterminant { value: LogValue::zero(), condition: f64::INFINITY };
    let mut log_abs = 0.0;
    let mut phase = ONE;
    for i in 0..n {
        let row = &mut a[i * n..(i + 1) * n];
        let s = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s == 0.0 {
            return singular;
        }
        log_abs += s.ln();
        let inv = 1.0 / s;
        row.iter_mut().for_each(|z| *z *= inv);
    }
    let (mut pmax, mut pmin) = (0.0f64, f64::INFINITY);
    for k in 0..n {
        let (mut best, mut p) = (0.0, k);
        for i in k..n {
            let m = a[i * n + k].norm();
            if m > best {
                best = m;
                p = i;
            }
        }
        if best == 0.0 {
            return singular;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            phase = -phase;
        }
        let piv = a[k * n + k];
        log_abs += best.ln();
        phase *= piv / best;
        pmax = pmax.max(best);
        pmin = pmin.min(best);
        let inv = piv.inv();
        let (top, rest) = a.split_at_mut((k + 1) * n);
        let pivot_row = &top[k * n..];
        for i in 0..n - k - 1 {
            let row = &mut rest[i * n..(i + 1) * n];
            let f = row[k] * inv;
            if f == ZERO {
                continue;
            }
            for j in k + 1..n {
                row[j] -= f * pivot_row[j];
            }
        }
    }
    LogDeterminant { value: LogValue { log_abs, phase: phase / phase.norm() }, condition: pmax / pmin }
}

/// Sylvester matrix of `p` and `q` given from degree 0 upward, with formal
/// degrees `p.len() - 1` and `q.len() - 1`. Row-major, size `m + k`.
pub fn sylvester_matrix<T: Clone + Zero>(p: &[T], q: &[T]) -> (Vec<T>, usize) {
    let m = p.len() - 1;
    let k = q.len() - 1;
    let n = m + k;
    let mut s = vec![T::zero(); n * n];
    for r in 0..k {
        for (i, c) in p.iter().rev().enumerate() {
            s[r * n + r + i] = c.clone();
        }
    }
    for r in 0..m {
        for (i, c) in q.iter().rev().enumerate() {
            s[(k + r) * n + r + i] = c.clone();
        }
    }
    (s, n)
}

/// Resultant of `p` and `q` with formal degrees `p.len() - 1`, `q.len() - 1`.
pub fn sylvester_resultant_log(p: &[Complex64], q: &[Complex64]) -> Result<LogDeterminant> {
    if p.is_empty() || q.is_empty() || p.iter().all(|c| *c == ZERO) || q.iter().all(|c| *c == ZERO) {
        return Err(Error::ZeroPolynomial);
    }
    let (s, n) = sylvester_matrix(p, q);
    Ok(log_determinant(s, n))
}

/// `Res(p, q)` for the actual degrees of `p` and `q`.
pub fn sylvester_resultant(p: &UnivariatePolynomial, q: &UnivariatePolynomial) -> Result<Complex64> {
    if p.is_zero() || q.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    Ok(sylvester_resultant_log(&p.trimmed().coeffs, &q.trimmed().coeffs)?.value.to_complex())
}

/// Exact integer determinant by fraction-free (Bareiss) elimination.
pub fn bareiss_determinant(mut a: Vec<BigInt>, n: usize) -> BigInt {
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k * n + k].is_zero() {
            match (k + 1..n).find(|&i| !a[i * n + k].is_zero()) {
                Some(p) => {
                    for j in 0..n {
                        a.swap(k * n + j, p * n + j);
                    }
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j]) / &prev;
                a[i * n + j] = v;
            }
        }
        prev = a[k * n + k].clone();
    }
    sign * &a[n * n - 1]
}

/// Exact Sylvester resultant of integer polynomials (formal degrees).
pub fn sylvester_resultant_exact(p: &[i64], q: &[i64]) -> BigInt {
    let p: Vec<BigInt> = p.iter().map(|&x| BigInt::from(x)).collect();
    let q: Vec<BigInt> = q.iter().map(|&x| BigInt::from(x)).collect();
    let (s, n) = sylvester_matrix(&p, &q);
    bareiss_determinant(s, n)
}

/// Primes for modular nonvanishing certificates.
pub const CERTIFICATE_PRIMES: [u64; 3] =
    [2_305_843_009_213_693_951, 4_611_686_018_427_387_847, 1_000_000_000_000_000_003];

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

/// Determinant modulo a prime.
pub fn determinant_mod_p(a: &[i64], n: usize, p: u64) -> u64 {
    let mut m: Vec<u64> = a.iter().map(|&x| x.rem_euclid(p as i64) as u64).collect();
    let mut det = 1u64;
    for k in 0..n {
        let Some(piv) = (k..n).find(|&i| m[i * n + k] != 0) else {
            return 0;
        };
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            det = (p - det) % p;
        }
        let d = m[k * n + k];
        det = mulmod(det, d, p);
        let inv = powmod(d, p - 2, p);
        for i in k + 1..n {
            let f = mulmod(m[i * n + k], inv, p);
            if f == 0 {
                continue;
            }
            for j in k..n {
                let s = mulmod(f, m[k * n + j], p);
                m[i * n + j] = (m[i * n + j] + p - s) % p;
            }
        }
    }
    det
}

/// Whether the integer Sylvester resultant is nonzero: modular first, exact
/// Bareiss only when every prime divides it.
pub fn integer_resultant_nonzero(p: &[i64], q: &[i64]) -> bool {
    let (s, n) = sylvester_matrix(p, q);
    if CERTIFICATE_PRIMES.iter().any(|&pr| determinant_mod_p(&s, n, pr) != 0) {
        return true;
    }
    !sylvester_resultant_exact(p, q).is_zero()
}

/// Directional resultant of a system at a primitive direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalResultantValue {
    pub v: LatticeVector,
    #[serde(rename = "log_abs_res")]
    pub log_abs: f64,
    /// Unit phase of the value (the sign convention is not canonical).
    pub phase: [f64; 2],
    /// Lattice lengths of the face supports.
    pub degrees: Vec<i64>,
    pub condition: f64,
    /// Exact nonvanishing certificate for integer systems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certified_nonzero: Option<bool>,
}

impl DirectionalResultantValue {
    pub fn value(&self) -> Complex64 {
        LogValue { log_abs: self.log_abs, phase: Complex64::new(self.phase[0], self.phase[1]) }.to_complex()
    }

    /// Vanishing by the exact certificate when present, else numerically.
    pub fn vanishes(&self) -> bool {
        match self.certified_nonzero {
            Some(nz) => !nz,
            None => self.log_abs == f64::NEG_INFINITY || self.condition > 1e14,
        }
    }
}

/// Face of a declared support restricted to the line through it, as dense
/// coefficients from the minimal `u`-parameter upward.
fn face_line_coefficients(f: &LaurentPolynomial, faces: &[Point], u: &LatticeVector) -> Result<Vec<Complex64>> {
    let base = &faces[0];
    let ks = line_parameters(faces, base, u)?;
    let kmin = *ks.iter().min().unwrap();
    let kmax = *ks.iter().max().unwrap();
    let mut c = vec![ZERO; (kmax - kmin + 1) as usize];
    for (k, e) in ks.iter().zip(faces) {
        c[(k - kmin) as usize] = f.coefficient(e);
    }
    Ok(c)
}

fn check_direction(n: usize, v: &LatticeVector) -> Result<()> {
    if v.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.dim() });
    }
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    if !v.is_primitive() {
        return Err(Error::NotPrimitive(v.0.clone()));
    }
    Ok(())
}

/// Face coefficient vectors for each polynomial in direction `v` (n = 2).
fn face_systems(system: &SystemSpec, v: &LatticeVector) -> Result<Vec<Vec<Complex64>>> {
    let u = LatticeVector(vec![-v.0[1], v.0[0]]);
    system
        .polynomials()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let fa = face(&f.effective_support(), v)?;
            let c = face_line_coefficients(f, &fa, &u)?;
            if c.iter().all(|z| *z == ZERO) {
                return Err(Error::ZeroFacePolynomial { index: i + 1, v: v.0.clone() });
            }
            Ok(c)
        })
        .collect()
}

fn integer_vector(c: &[Complex64]) -> Option<Vec<i64>> {
    c.iter().map(|z| (z.im == 0.0 && z.re.fract() == 0.0 && z.re.abs() < 9.0e15).then_some(z.re as i64)).collect()
}

/// `Res_{A_1^v, ..., A_n^v}(f_1^v, ..., f_n^v)` for n <= 2.
pub fn directional_resultant(system: &SystemSpec, v: &LatticeVector) -> Result<DirectionalResultantValue> {
    let n = system.n();
    check_direction(n, v)?;
    match n {
        1 => {
            let f = &system.polynomials()[0];
            let fa = face(&f.effective_support(), v)?;
            let c = f.coefficient(&fa[0]);
            let lv = LogValue::from_complex(c);
            let exact = integer_vector(&[c]).map(|x| x[0] != 0);
            Ok(DirectionalResultantValue {
                v: v.clone(),
                log_abs: lv.log_abs,
                phase: [lv.phase.re, lv.phase.im],
                degrees: vec![0],
                condition: 1.0,
                certified_nonzero: exact,
            })
        }
        2 => {
            let g = face_systems(system, v)?;
            let degrees = g.iter().map(|c| c.len() as i64 - 1).collect();
            let det = sylvester_resultant_log(&g[0], &g[1])?;
            let exact = match (integer_vector(&g[0]), integer_vector(&g[1])) {
                (Some(p), Some(q)) => Some(integer_resultant_nonzero(&p, &q)),
                _ => None,
            };
            Ok(DirectionalResultantValue {
                v: v.clone(),
                log_abs: det.value.log_abs,
                phase: [det.value.phase.re, det.value.phase.im],
                degrees,
                condition: det.condition,
                certified_nonzero: exact,
            })
        }
        _ => Err(Error::UnsupportedDimension { op: "directional_resultant", n }),
    }
}

/// Exact integer directional resultant (n = 2, integer coefficients).
pub fn directional_resultant_exact(system: &SystemSpec, v: &LatticeVector) -> Result<BigInt> {
    check_direction(system.n(), v)?;
    if system.n() != 2 {
        return Err(Error::UnsupportedDimension { op: "directional_resultant_exact", n: system.n() });
    }
    let g = face_systems(system, v)?;
    let p = integer_vector(&g[0]).ok_or_else(|| Error::InvalidConfig("coefficients are not integers".into()))?;
    let q = integer_vector(&g[1]).ok_or_else(|| Error::InvalidConfig("coefficients are not integers".into()))?;
    Ok(sylvester_resultant_exact(&p, &q))
}

/// The directions where a directional resultant can differ from 1: `±1`
/// for n = 1, facet normals of `Q_1 + Q_2` for n = 2.
pub fn candidate_directions(system: &SystemSpec) -> Result<Vec<LatticeVector>> {
    match system.n() {
        1 => Ok(vec![LatticeVector(vec![1]), LatticeVector(vec![-1])]),
        2 => {
            let q = system.polytopes();
            let sum = minkowski_sum(&q[0], &q[1])?;
            if !sum.is_full_dimensional() {
                return Err(Error::DegenerateMixedVolume("0".into()));
            }
            facet_normals(&sum)
        }
        n => Err(Error::UnsupportedDimension { op: "directional_resultants", n }),
    }
}

/// All nontrivial directional resultants.
pub fn directional_resultants(system: &SystemSpec) -> Result<Vec<DirectionalResultantValue>> {
    candidate_directions(system)?.iter().map(|v| directional_resultant(system, v)).collect()
}

/// Like `directional_resultants` but fails on the first vanishing value.
pub fn nonvanishing_directional_resultants(system: &SystemSpec) -> Result<Vec<DirectionalResultantValue>> {
    let r = directional_resultants(system)?;
    if let Some(bad) = r.iter().find(|r| r.vanishes()) {
        return Err(Error::VanishingResultant { v: bad.v.0.clone(), log_abs: bad.log_abs });
    }
    Ok(r)
}

/// `E_a(f)(z) = exp(log_scale) * sum coeffs[k] z^k`, degree `D`, constant
/// term nonzero. The scale is that of the resultant itself, so extreme
/// coefficients can be compared with directional resultants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationPolynomial {
    pub a: LatticeVector,
    pub coeffs: Vec<Complex64>,
    pub log_scale: f64,
}

impl EliminationPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients divided by the leading one.
    pub fn monic(&self) -> UnivariatePolynomial {
        let lc = *self.coeffs.last().unwrap();
        UnivariatePolynomial::new(self.coeffs.iter().map(|c| c / lc).collect())
    }

    /// Normalized coefficients without the scale.
    pub fn normalized(&self) -> UnivariatePolynomial {
        UnivariatePolynomial::new(self.coeffs.clone())
    }

    /// `log |E(z)|`, stable for large degree and `|z|` away from 1.
    pub fn log_abs_at(&self, z: Complex64) -> f64 {
        self.log_scale + log_abs_poly(&self.coeffs, z)
    }

    /// `log |lc| + log |c_0|`.
    pub fn log_extreme_product(&self) -> f64 {
        2.0 * self.log_scale + self.coeffs[0].norm().ln() + self.coeffs.last().unwrap().norm().ln()
    }
}

/// `log |p(z)|` evaluating the reversed polynomial when `|z| > 1`.
pub fn log_abs_poly(c: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    if r <= 1.0 {
        c.iter().rev().fold(ZERO, |acc, a| acc * z + a).norm().ln()
    } else {
        let w = z.inv();
        let v = c.iter().fold(ZERO, |acc, a| acc * w + a);
        v.norm().ln() + (c.len() - 1) as f64 * r.ln()
    }
}

struct NodeSystem {
    /// per polynomial: y2-degree slot -> list of (y1 exponent, coefficient)
    slots: Vec<Vec<Vec<(i64, Complex64)>>>,
    /// lowest y1 exponent per polynomial
    lo1: Vec<i64>,
}

impl NodeSystem {
    fn new(g: &SystemSpec) -> (Self, Vec<i64>, Vec<i64>) {
        let mut slots = Vec::new();
        let mut lo1 = Vec::new();
        let mut hi1 = Vec::new();
        let mut lens = Vec::new();
        for f in g.polynomials() {
            let supp = f.effective_support();
            let lo2 = supp.iter().map(|e| e[1]).min().unwrap();
            let hi2 = supp.iter().map(|e| e[1]).max().unwrap();
            lo1.push(supp.iter().map(|e| e[0]).min().unwrap());
            hi1.push(supp.iter().map(|e| e[0]).max().unwrap());
            let mut s = vec![Vec::new(); (hi2 - lo2 + 1) as usize];
            for (e, c) in f.terms() {
                s[(e[1] - lo2) as usize].push((e[0], *c));
            }
            lens.push(hi2 - lo2);
            slots.push(s);
        }
        (NodeSystem { slots, lo1: lo1.clone() }, lens, hi1.iter().zip(&lo1).map(|(h, l)| h - l).collect())
    }

    fn coefficients(&self, i: usize, y1: &dyn Fn(i64) -> Complex64) -> Vec<Complex64> {
        self.slots[i].iter().map(|s| s.iter().map(|(e, c)| c * y1(*e)).sum()).collect()
    }
}

/// `E_a(f)` for n = 2 by unimodular pullback and interpolation at roots of
/// unity; non-primitive `a = m a'` via `prod_{w in mu_m} E_{a'}(w z)`.
pub fn elimination_polynomial(system: &SystemSpec, a: &LatticeVector) -> Result<EliminationPolynomial> {
    if system.n() != 2 {
        return Err(Error::UnsupportedDimension { op: "elimination_polynomial", n: system.n() });
    }
    if a.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: a.dim() });
    }
    let ap = a.primitive()?;
    let m = a.content();
    nonvanishing_directional_resultants(system)?;
    let d = system.bernstein_number()? as usize;
    let base = elimination_primitive(system, &ap, d)?;
    if m == 1 {
        Ok(base)
    } else {
        power_elimination(&base, m as usize, a.clone())
    }
}

/// `E_a` for primitive `a`, skipping the resultant precondition check.
///
/// Nodes sit on the circle of radius `r`, the geometric mean of `|xi^a|`
/// read off the directional resultants, which keeps the extreme
/// coefficients above the interpolation noise when the images spread in
/// modulus.
pub fn elimination_primitive(system: &SystemSpec, a: &LatticeVector, d: usize) -> Result<EliminationPolynomial> {
    let res = directional_resultants(system)?;
    let log_r = if res.iter().all(|r| r.log_abs.is_finite()) {
        (log_extreme_factor(&res, a) - 2.0 * log_leading_factor(&res, a)) / d as f64
    } else {
        0.0
    };
    let am = complete_to_unimodular(a)?;
    let g = system.map_polynomials(|f| f.monomial_pullback(&am))?;
    let (ns, l, w1) = NodeSystem::new(&g);
    // exponent range of the resultant in y1
    let width = (l[1] * w1[0] + l[0] * w1[1]) as usize;
    let shift = l[1] * ns.lo1[0] + l[0] * ns.lo1[1];
    let bound = d + (d / 4).max(16);
    let k = (bound.min(width) + 1).next_power_of_two().max(2);
    let roots: Vec<Complex64> = (0..k).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / k as f64)).collect();
    let node = |y1: &dyn Fn(i64) -> Complex64| -> LogValue {
        let p = ns.coefficients(0, y1);
        let q = ns.coefficients(1, y1);
        let (s, n) = sylvester_matrix(&p, &q);
        log_determinant(s, n).value
    };
    let vals: Vec<LogValue> = (0..k)
        .into_par_iter()
        .map(|j| {
            let y = |e: i64| roots[((e * j as i64).rem_euclid(k as i64)) as usize] * (e as f64 * log_r).exp();
            let mut v = node(&y);
            v.phase *= roots[((-shift * j as i64).rem_euclid(k as i64)) as usize];
            v
        })
        .collect();
    let mut e = interpolate(a.clone(), &vals, d)?;
    if log_r != 0.0 {
        // undo the radius, then fix the overall scale against direct
        // evaluations on the unit circle
        let logs: Vec<f64> = e.coeffs.iter().enumerate().map(|(i, c)| c.norm().ln() - i as f64 * log_r).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        e.coeffs = e
            .coeffs
            .iter()
            .zip(&logs)
            .map(|(c, l)| if *c == ZERO { ZERO } else { c / c.norm() * (l - top).exp() })
            .collect();
        let mut diffs: Vec<f64> = (0..7)
            .map(|t| {
                let zeta = Complex64::from_polar(1.0, 2.0 * PI * (t as f64 + 0.5 * 5f64.sqrt()) / 7.0);
                let y = |ex: i64| zeta.powi(ex as i32);
                node(&y).log_abs - log_abs_poly(&e.coeffs, zeta)
            })
            .filter(|x| x.is_finite())
            .collect();
        if diffs.is_empty() {
            return Err(Error::InterpolationFailure("no usable unit-circle check point".into()));
        }
        diffs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        e.log_scale = diffs[diffs.len() / 2];
    }
    Ok(e)
}

pub fn interpolate(a: LatticeVector, vals: &[LogValue], d: usize) -> Result<EliminationPolynomial> {
    let k = vals.len();
    let lmax = vals.iter().map(|v| v.log_abs).fold(f64::NEG_INFINITY, f64::max);
    if !lmax.is_finite() {
        return Err(Error::InterpolationFailure("resultant vanishes at every node".into()));
    }
    let mut buf: Vec<Complex64> =
        vals.iter().map(|v| if v.is_zero() { ZERO } else { v.phase * (v.log_abs - lmax).exp() }).collect();
    FftPlanner::new().plan_fft_forward(k).process(&mut buf);
    let inv = 1.0 / k as f64;
    buf.iter_mut().for_each(|c| *c *= inv);
    if d + 1 > k {
        return Err(Error::InterpolationFailure(format!("{k} nodes for degree {d}")));
    }
    let mags: Vec<f64> = buf.iter().map(|c| c.norm()).collect();
    let cmax = mags.iter().cloned().fold(0.0, f64::max);
    // the k - d - 1 cyclic slots outside the window are the run with the
    // smallest maximum (sliding-window maximum over the doubled sequence)
    let gap = k - d - 1;
    let mut start = 0;
    if gap > 0 {
        let mut best = f64::INFINITY;
        let mut dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
        for i in 0..k + gap - 1 {
            while dq.back().is_some_and(|&b| mags[b % k] <= mags[i % k]) {
                dq.pop_back();
            }
            dq.push_back(i);
            if dq[0] + gap <= i {
                dq.pop_front();
            }
            if i + 1 >= gap {
                let m = mags[dq[0] % k];
                if m < best {
                    best = m;
                    start = (i + 1) % k;
                }
            }
        }
    }
    let outside = (d + 1..k).map(|i| mags[(start + i) % k]).fold(0.0, f64::max);
    if outside > 1e-6 * cmax {
        return Err(Error::InterpolationFailure(format!(
            "coefficient mass outside a degree-{d} window: {:.3e} of the maximum",
            outside / cmax
        )));
    }
    if mags[start].min(mags[(start + d) % k]) <= 1e-13 * cmax {
        return Err(Error::InterpolationFailure(format!("extreme coefficient of the degree-{d} window vanishes")));
    }
    let coeffs: Vec<Complex64> = (0..=d).map(|i| buf[(start + i) % k]).collect();
    Ok(EliminationPolynomial { a, coeffs, log_scale: lmax })
}

/// `Q(z^m) = prod_{w in mu_m} E(w z)` as a polynomial `Q` of the same degree.
fn power_elimination(e: &EliminationPolynomial, m: usize, a: LatticeVector) -> Result<EliminationPolynomial> {
    let d = e.degree();
    let k = (d + 1 + (d / 4).max(16)).next_power_of_two();
    // geometric mean modulus of the roots of E
    let log_re = (e.coeffs[0].norm().ln() - e.coeffs[d].norm().ln()) / d as f64;
    let q_at = |t: f64, log_rad: f64| -> LogValue {
        let mut acc = LogValue { log_abs: 0.0, phase: ONE };
        for r in 0..m {
            let z = Complex64::from_polar(log_rad.exp(), 2.0 * PI * (t + r as f64) / m as f64);
            let v = eval_log(&e.coeffs, z);
            acc.log_abs += v.log_abs + e.log_scale;
            acc.phase *= v.phase;
        }
        acc
    };
    let vals: Vec<LogValue> = (0..k).into_par_iter().map(|j| q_at(j as f64 / k as f64, log_re)).collect();
    let mut q = interpolate(a, &vals, d)?;
    if log_re != 0.0 {
        let log_r = m as f64 * log_re;
        let logs: Vec<f64> = q.coeffs.iter().enumerate().map(|(i, c)| c.norm().ln() - i as f64 * log_r).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        q.coeffs = q
            .coeffs
            .iter()
            .zip(&logs)
            .map(|(c, l)| if *c == ZERO { ZERO } else { c / c.norm() * (l - top).exp() })
            .collect();
        let mut diffs: Vec<f64> = (0..7)
            .map(|t| {
                let t = (t as f64 + 0.5 * 5f64.sqrt()) / 7.0;
                q_at(t, 0.0).log_abs - log_abs_poly(&q.coeffs, Complex64::from_polar(1.0, 2.0 * PI * t))
            })
            .filter(|x| x.is_finite())
            .collect();
        if diffs.is_empty() {
            return Err(Error::InterpolationFailure("no usable unit-circle check point".into()));
        }
        diffs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        q.log_scale = diffs[diffs.len() / 2];
    }
    Ok(q)
}

/// `p(z)` as a log value, evaluating the reversed polynomial when `|z| > 1`.
fn eval_log(c: &[Complex64], z: Complex64) -> LogValue {
    if z.norm() <= 1.0 {
        LogValue::from_complex(c.iter().rev().fold(ZERO, |acc, a| acc * z + a))
    } else {
        let w = z.inv();
        let mut v = LogValue::from_complex(c.iter().fold(ZERO, |acc, a| acc * w + a));
        let d = (c.len() - 1) as i32;
        v.log_abs += d as f64 * z.norm().ln();
        v.phase *= (z / z.norm()).powi(d);
        v
    }
}

/// `log prod_{<v,a> < 0} |Res_v|^{|<v,a>|}` (the leading-coefficient side).
pub fn log_leading_factor(res: &[DirectionalResultantValue], a: &LatticeVector) -> f64 {
    res.iter()
        .map(|r| {
            let s = r.v.dot(a.coords());
            if s < 0 {
                (-s) as f64 * r.log_abs
            } else {
                0.0
            }
        })
        .sum()
}

/// `sum |<v,a>| log |Res_v|`.
pub fn log_extreme_factor(res: &[DirectionalResultantValue], a: &LatticeVector) -> f64 {
    res.iter().map(|r| r.v.dot(a.coords()).abs() as f64 * r.log_abs).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonCheck {
    pub a: LatticeVector,
    /// max over samples of `| |E_a(z)| / rhs(z) - 1 |`
    pub magnitude_residual: f64,
    /// `| |lc c_0| / prod |Res_v|^{|<v,a>|} - 1 |`
    pub extreme_coefficient_residual: f64,
    pub samples: usize,
}

/// Magnitude check of the Poisson factorization of `E_a(f)` against the
/// solved cycle: `|E_a(z)| = prod_{<v,a><0} |Res_v|^{|<v,a>|} prod |z - xi^a|^m`.
pub fn poisson_check(
    system: &SystemSpec,
    a: &LatticeVector,
    cycle: &ZeroCycle,
    samples: &[Complex64],
) -> Result<PoissonCheck> {
    let res = nonvanishing_directional_resultants(system)?;
    match system.n() {
        1 => {
            if a.0 != [1] {
                return Err(Error::InvalidConfig("univariate Poisson check takes a = 1".into()));
            }
            let f = &system.polynomials()[0];
            let images = cycle.direct_image(a)?;
            let lead = res.iter().find(|r| r.v.0[0] < 0).unwrap();
            let lc = lead.log_abs;
            let mut worst: f64 = 0.0;
            for &z in samples {
                let rhs = lc + images.points.iter().map(|p| p.m as f64 * (z - p.z[0]).norm().ln()).sum::<f64>();
                let lhs = f.evaluate(&[z])?.norm().ln() - f.support()[0][0] as f64 * z.norm().ln();
                worst = worst.max(((lhs - rhs).exp() - 1.0).abs());
            }
            Ok(PoissonCheck {
                a: a.clone(),
                magnitude_residual: worst,
                extreme_coefficient_residual: 0.0,
                samples: samples.len(),
            })
        }
        2 => {
            let e = elimination_polynomial(system, a)?;
            let images = cycle.direct_image(a)?;
            let lc = log_leading_factor(&res, a);
            let mut worst: f64 = 0.0;
            for &z in samples {
                let rhs = lc + images.points.iter().map(|p| p.m as f64 * (z - p.z[0]).norm().ln()).sum::<f64>();
                worst = worst.max(((e.log_abs_at(z) - rhs).exp() - 1.0).abs());
            }
            let ext = ((e.log_extreme_product() - log_extreme_factor(&res, a)).exp() - 1.0).abs();
            Ok(PoissonCheck {
                a: a.clone(),
                magnitude_residual: worst,
                extreme_coefficient_residual: ext,
                samples: samples.len(),
            })
        }
        n => Err(Error::UnsupportedDimension { op: "poisson_check", n }),
    }
}

/// Unit-circle sample points halfway between consecutive image arguments,
/// where `|E_a|` is far from its zeros.
pub fn poisson_samples(cycle: &ZeroCycle, a: &LatticeVector, count: usize) -> Result<Vec<Complex64>> {
    let images = cycle.direct_image(a)?;
    let mut args: Vec<f64> = images.points.iter().map(|p| p.z[0].arg()).collect();
    args.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut gaps: Vec<(f64, f64)> = (0..args.len())
        .map(|i| {
            let lo = args[i];
            let hi = if i + 1 < args.len() { args[i + 1] } else { args[0] + 2.0 * PI };
            (hi - lo, 0.5 * (lo + hi))
        })
        .collect();
    gaps.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    Ok(gaps.iter().take(count).map(|&(_, t)| Complex64::from_polar(1.0, t)).collect())
}

/// Right-hand side of the resultant height oracle for a univariate face
/// system: `sum_i D_i (log #A_i + h_i)` with `D_1 = deg q`, `D_2 = deg p`.
pub fn resultant_height_bound(p: &[Complex64], q: &[Complex64]) -> f64 {
    let h = |c: &[Complex64]| c.iter().map(|z| z.norm()).fold(0.0, f64::max).ln();
    let (dp, dq) = ((p.len() - 1) as f64, (q.len() - 1) as f64);
    dq * ((p.len() as f64).ln() + h(p)) + dp * ((q.len() as f64).ln() + h(q))
}

/// `log |x|` of a big integer, `-inf` for zero.
pub fn bigint_log_abs(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits < 1000 {
        let s = x.abs().to_string();
        let lead: f64 = s[..s.len().min(17)].parse().unwrap();
        lead.ln() + (s.len().saturating_sub(17)) as f64 * 10f64.ln()
    } else {
        (x.abs() >> (bits - 60) as usize).to_string().parse::<f64>().unwrap().ln() + (bits - 60) as f64 * 2f64.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::zero_cycle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn poly(v: &[f64]) -> UnivariatePolynomial {
        UnivariatePolynomial::from_real(v)
    }

    pub(crate) fn sample() -> SystemSpec {
        SystemSpec::parse("x1^13 + x1*x2^12 + x2^13 + 1; x1^12*x2 - x2^13 - x1*x2 + 1").unwrap()
    }

    fn is_prime(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = n - 1;
        let mut s = 0;
        while d.is_multiple_of(2) {
            d /= 2;
            s += 1;
        }
        [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37].iter().all(|&a| {
            if a % n == 0 {
                return true;
            }
            let mut x = powmod(a, d, n);
            if x == 1 || x == n - 1 {
                return true;
            }
            for _ in 1..s {
                x = mulmod(x, x, n);
                if x == n - 1 {
                    return true;
                }
            }
            false
        })
    }

    #[test]
    fn certificate_moduli_are_prime() {
        assert!(CERTIFICATE_PRIMES.iter().all(|&p| is_prime(p)));
    }

    #[test]
    fn sylvester_examples() {
        assert!((sylvester_resultant(&poly(&[-2.0, 1.0]), &poly(&[-3.0, 1.0])).unwrap() - c(-1.0)).norm() < 1e-14);
        assert!(
            (sylvester_resultant(&poly(&[-1.0, 0.0, 1.0]), &poly(&[-4.0, 0.0, 1.0])).unwrap() - c(9.0)).norm() < 1e-12
        );
        assert_eq!(sylvester_resultant(&poly(&[0.0]), &poly(&[1.0, 1.0])), Err(Error::ZeroPolynomial));
        assert_eq!(sylvester_resultant_exact(&[-1, 0, 1], &[-4, 0, 1]), BigInt::from(9));
        assert_eq!(sylvester_resultant_exact(&[1, 1], &[-1, 1]), BigInt::from(-2));
        let (s, n) = sylvester_matrix(&[1i64, 1], &[-1, 1]);
        assert_eq!(determinant_mod_p(&s, n, CERTIFICATE_PRIMES[0]), CERTIFICATE_PRIMES[0] - 2);
    }

    #[test]
    fn sylvester_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut r = || {
                UnivariatePolynomial::new(
                    (0..4).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
                )
            };
            let (p, q, s) = (r(), r(), r());
            let lhs = sylvester_resultant(&p, &q.mul(&s)).unwrap();
            let rhs = sylvester_resultant(&p, &q).unwrap() * sylvester_resultant(&p, &s).unwrap();
            assert!((lhs - rhs).norm() < 1e-8 * rhs.norm());
        }
    }

    #[test]
    fn product_formula() {
        let a = [c(1.5), Complex64::new(-0.3, 2.0)];
        let b = [c(-1.0), Complex64::new(0.2, 0.2), c(4.0)];
        let p = UnivariatePolynomial::from_roots(&a, c(2.0));
        let q = UnivariatePolynomial::from_roots(&b, c(-3.0));
        let mut expect = Complex64::new(2.0f64.powi(3) * (-3.0f64).powi(2), 0.0);
        for x in &a {
            for y in &b {
                expect *= x - y;
            }
        }
        assert!((sylvester_resultant(&p, &q).unwrap() - expect).norm() < 1e-10 * expect.norm());
    }

    #[test]
    fn directional_examples() {
        let s = SystemSpec::parse("2 + 3*x + 5*x^2").unwrap();
        let r = directional_resultant(&s, &LatticeVector(vec![1])).unwrap();
        assert!((r.value() - c(2.0)).norm() < 1e-14);
        let r = directional_resultant(&s, &LatticeVector(vec![-1])).unwrap();
        assert!((r.value() - c(5.0)).norm() < 1e-14);

        // faces t + 1 and t - 1 on the edge with inner normal (0, 1)
        let s = SystemSpec::parse("x1 + 1 + x2; x1 - 1 + x2").unwrap();
        let r = directional_resultant(&s, &LatticeVector(vec![0, 1])).unwrap();
        assert!((r.value().norm() - 2.0).abs() < 1e-14);
        assert_eq!(r.degrees, vec![1, 1]);
        assert!(matches!(directional_resultant(&s, &LatticeVector(vec![0, 2])), Err(Error::NotPrimitive(_))));
        let s3 = SystemSpec::parse("x+y+z; x-y; y-z").unwrap();
        assert!(matches!(
            directional_resultant(&s3, &LatticeVector(vec![1, 0, 0])),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn sample_directional_resultants_are_nonzero_integers() {
        let s = sample();
        let rs = directional_resultants(&s).unwrap();
        for r in &rs {
            let exact = directional_resultant_exact(&s, &r.v).unwrap();
            assert!(!exact.is_zero(), "{:?}", r.v);
            assert_eq!(r.certified_nonzero, Some(true));
            let rel = (bigint_log_abs(&exact) - r.log_abs).abs();
            assert!(rel < 1e-9, "{:?}: {} vs {}", r.v, exact, r.log_abs.exp());
        }
        // directions that are not facet normals give 1
        let r = directional_resultant(&s, &LatticeVector(vec![1, 1])).unwrap();
        assert!((r.value() - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn elimination_examples() {
        let s = SystemSpec::parse("x1 - 2; x2 - 3").unwrap();
        let e = elimination_polynomial(&s, &LatticeVector(vec![1, 0])).unwrap();
        let m = e.monic();
        assert_eq!(m.degree(), 1);
        assert!((m.coeffs[0] - c(-2.0)).norm() < 1e-12);

        let s = SystemSpec::parse("x1^2 - 1; x2 - 1").unwrap();
        let m = elimination_polynomial(&s, &LatticeVector(vec![0, 1])).unwrap().monic();
        assert_eq!(m.degree(), 2);
        assert!((m.coeffs[0] - c(1.0)).norm() < 1e-12 && (m.coeffs[1] - c(-2.0)).norm() < 1e-12);

        // non-primitive direction: roots are squares
        let s = SystemSpec::parse("x1 - 2; x2 - 3").unwrap();
        let m = elimination_polynomial(&s, &LatticeVector(vec![2, 0])).unwrap().monic();
        assert!((m.coeffs[0] - c(-4.0)).norm() < 1e-12);
    }

    #[test]
    fn sample_elimination_matches_cycle_and_identities() {
        let s = sample();
        let z = zero_cycle(&s).unwrap();
        for a in [vec![1, 0], vec![0, 1], vec![1, -1], vec![2, 1]] {
            let a = LatticeVector(a);
            let e = elimination_polynomial(&s, &a).unwrap();
            assert_eq!(e.degree(), 169);
            assert!(!(e.coeffs[0] == ZERO));
            let samples = poisson_samples(&z, &a, 10).unwrap();
            let chk = poisson_check(&s, &a, &z, &samples).unwrap();
            assert!(chk.magnitude_residual < 1e-6, "{chk:?}");
            assert!(chk.extreme_coefficient_residual < 1e-6, "{chk:?}");
        }
    }

    #[test]
    fn poisson_translation_invariance() {
        let s = SystemSpec::parse("x1^2 + 3*x2 - 1 + x1*x2; 2*x1 - x2^2 + 5").unwrap();
        let t = SystemSpec::new(vec![s.polynomials()[0].clone(), s.polynomials()[1].shift(&[2, -1])]).unwrap();
        let a = LatticeVector(vec![1, 0]);
        let zs = zero_cycle(&s).unwrap();
        let zt = zero_cycle(&t).unwrap();
        let samples = poisson_samples(&zs, &a, 8).unwrap();
        let r1 = poisson_check(&s, &a, &zs, &samples).unwrap();
        let r2 = poisson_check(&t, &a, &zt, &samples).unwrap();
        assert!(r1.magnitude_residual < 1e-9 && r2.magnitude_residual < 1e-9, "{r1:?} {r2:?}");
    }

    #[test]
    fn univariate_poisson() {
        let s = SystemSpec::parse("3*x^4 - x^3 + 2*x - 5").unwrap();
        let z = zero_cycle(&s).unwrap();
        let samples: Vec<Complex64> = (0..10).map(|k| Complex64::from_polar(1.3, k as f64)).collect();
        let chk = poisson_check(&s, &LatticeVector(vec![1]), &z, &samples).unwrap();
        assert!(chk.magnitude_residual < 1e-9, "{chk:?}");
    }

    fn edge_poly() -> impl Strategy<Value = Vec<i64>> {
        prop::collection::vec(-4i64..5, 2..5).prop_filter("extremes", |v| v[0] != 0 && *v.last().unwrap() != 0)
    }

    fn cv(v: &[i64]) -> Vec<Complex64> {
        v.iter().map(|&x| c(x as f64)).collect()
    }

    proptest! {
        #[test]
        fn multiplicativity_on_edges(p in edge_poly(), g in edge_poly(), h in edge_poly()) {
            let gh = UnivariatePolynomial::new(cv(&g)).mul(&UnivariatePolynomial::new(cv(&h)));
            let lhs = sylvester_resultant_log(&cv(&p), &gh.coeffs).unwrap().value;
            let r1 = sylvester_resultant_log(&cv(&p), &cv(&g)).unwrap().value;
            let r2 = sylvester_resultant_log(&cv(&p), &cv(&h)).unwrap().value;
            let exact = sylvester_resultant_exact(&p, &g) * sylvester_resultant_exact(&p, &h);
            prop_assume!(!exact.is_zero());
            prop_assert!((lhs.log_abs - r1.log_abs - r2.log_abs).abs() < 1e-8);
        }

        #[test]
        fn height_oracle(p in edge_poly(), q in edge_poly()) {
            let r = sylvester_resultant_exact(&p, &q);
            prop_assume!(!r.is_zero());
            prop_assert!(bigint_log_abs(&r) <= resultant_height_bound(&cv(&p), &cv(&q)) + 1e-9);
        }

        #[test]
        fn translation_keeps_directional_magnitudes(b in (-3i64..4, -3i64..4), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut r = |k: usize| -> Vec<(Point, f64)> {
                (0..k).map(|_| (vec![rng.random_range(0..4), rng.random_range(0..4)], rng.random_range(-2.0..2.0))).collect()
            };
            let f1 = LaurentPolynomial::from_real_terms(2, &r(5)).unwrap();
            let f2 = LaurentPolynomial::from_real_terms(2, &r(5)).unwrap();
            let s = SystemSpec::new(vec![f1.clone(), f2.clone()]);
            prop_assume!(s.is_ok());
            let s = s.unwrap();
            prop_assume!(s.mixed_volume().map(|d| d >= 1).unwrap_or(false));
            let t = SystemSpec::new(vec![f1, f2.shift(&[b.0, b.1])]).unwrap();
            let rs = directional_resultants(&s).unwrap();
            for r in rs {
                let q = directional_resultant(&t, &r.v).unwrap();
                if r.log_abs.is_finite() && r.condition < 1e8 {
                    prop_assert!((q.log_abs - r.log_abs).abs() < 1e-9);
                }
            }
        }
    }
}
