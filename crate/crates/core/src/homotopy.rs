//! Total-degree homotopy for bivariate systems, used when elimination runs
//! out of double precision.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::laurent::{LaurentPolynomial, SystemSpec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense bivariate polynomial; row `j` holds the coefficients of `x^i y^j`
/// split into real and imaginary parts and zero-padded to a multiple of
/// `LANES` (rows are trimmed individually).
#[derive(Debug, Clone)]
struct Dense2 {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    width: usize,
    degree: usize,
}

const LANES: usize = 4;

impl Dense2 {
    /// `x^{-lo} f` scaled to unit coefficient 2-norm.
    fn from_laurent(f: &LaurentPolynomial) -> Dense2 {
        let lo: Vec<i64> = (0..2).map(|j| f.terms().keys().map(|e| e[j]).min().unwrap()).collect();
        let norm = f.terms().values().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let hi: Vec<usize> = (0..2).map(|j| (f.terms().keys().map(|e| e[j]).max().unwrap() - lo[j]) as usize).collect();
        let width = (hi[0] + 1).div_ceil(LANES) * LANES;
        let mut re = vec![vec![0.0; width]; hi[1] + 1];
        let mut im = re.clone();
        let mut degree = 0;
        for (e, c) in f.terms() {
            let (i, j) = ((e[0] - lo[0]) as usize, (e[1] - lo[1]) as usize);
            degree = degree.max(i + j);
            re[j][i] += c.re / norm;
            im[j][i] += c.im / norm;
        }
        for (r, m) in re.iter_mut().zip(im.iter_mut()) {
            let used = r.iter().zip(m.iter()).rposition(|(a, b)| *a != 0.0 || *b != 0.0).map_or(0, |k| k + 1);
            let keep = used.div_ceil(LANES) * LANES;
            r.truncate(keep);
            m.truncate(keep);
        }
        Dense2 { re, im, width, degree }
    }

    /// Value and gradient of `f / s^degree` with `s = max(1, |x|, |y|)`,
    /// evaluated as the homogenisation at `(x/s, y/s, 1/s)`. Every monomial
    /// stays below one, so nothing overflows far from the unit polycircle.
    /// Each row is a lane-wise dot product against tabulated powers.
    fn eval(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64, Complex64) {
        let (w, d) = (self.width, self.degree);
        let s = x.norm().max(y.norm()).max(1.0);
        // plain powers while s^d is far from overflow, then one rescale
        let plain = d as f64 * s.ln() < 500.0;
        let (u, v, inv) = if plain { (x, y, 1.0) } else { (x / s, y / s, 1.0 / s) };
        let (mut xr, mut xi, mut dr, mut di) = (vec![0.0; w], vec![0.0; w], vec![0.0; w], vec![0.0; w]);
        let mut q = ONE;
        for i in 0..w {
            xr[i] = q.re;
            xi[i] = q.im;
            if i + 1 < w {
                let g = q * (i + 1) as f64;
                dr[i + 1] = g.re;
                di[i + 1] = g.im;
            }
            q *= u;
        }
        // weight of x^i y^j is 1/s^{d-i-j}, read from a slice starting at j
        let mut wt = vec![0.0; if plain { 0 } else { self.re.len() + w }];
        let mut p = 1.0;
        for k in (0..=d.min(wt.len().saturating_sub(1))).rev().filter(|_| !plain) {
            wt[k] = p;
            p *= inv;
        }
        let (mut f, mut fx, mut fy) = (ZERO, ZERO, ZERO);
        let mut vp = ONE;
        let mut vd = ZERO;
        for (j, (cr, ci)) in self.re.iter().zip(&self.im).enumerate() {
            let acc = if plain {
                row_dot::<false>(cr, ci, &xr, &xi, &dr, &di, &[])
            } else {
                row_dot::<true>(cr, ci, &xr, &xi, &dr, &di, &wt[j..])
            };
            let t: Vec<f64> = acc.iter().map(|v| v.iter().sum()).collect();
            let (row, drow) = (Complex64::new(t[0], t[1]), Complex64::new(t[2], t[3]));
            f += vp * row;
            fx += vp * drow;
            fy += vd * row;
            vd = vp * (j + 1) as f64;
            vp *= v;
        }
        if plain {
            let k = s.powi(-(d as i32));
            (f * k, fx * k, fy * k)
        } else {
            (f, fx * inv, fy * inv)
        }
    }
}

/// Lane-wise sums of `c_i p_i` and `c_i dp_i`, with each term weighted
/// by `wt[i]` when `WEIGHTED`.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn row_dot<const WEIGHTED: bool>(
    cr: &[f64],
    ci: &[f64],
    xr: &[f64],
    xi: &[f64],
    dr: &[f64],
    di: &[f64],
    wt: &[f64],
) -> [[f64; LANES]; 4] {
    let mut acc = [[0.0f64; LANES]; 4];
    for k in (0..cr.len()).step_by(LANES) {
        for l in 0..LANES {
            let c = if WEIGHTED { wt[k + l] } else { 1.0 };
            let (a, b) = (cr[k + l], ci[k + l]);
            let (pr, pi, qr, qi) = (xr[k + l] * c, xi[k + l] * c, dr[k + l] * c, di[k + l] * c);
            acc[0][l] += a * pr - b * pi;
            acc[1][l] += a * pi + b * pr;
            acc[2][l] += a * qr - b * qi;
            acc[3][l] += a * qi + b * qr;
        }
    }
    acc
}

struct Homotopy {
    f: [Dense2; 2],
    d: [usize; 2],
    gamma: Complex64,
}

#[derive(Clone, Copy)]
struct Params {
    max_step: f64,
    /// Largest first Newton correction (relative) accepted after a
    /// predictor step.
    first_correction: f64,
}

const NORMAL: Params = Params { max_step: 0.1, first_correction: 1e-3 };
const STRICT: Params = Params { max_step: 0.01, first_correction: 1e-5 };

type Point2 = [Complex64; 2];

fn norm2(x: &Point2) -> f64 {
    (x[0].norm_sqr() + x[1].norm_sqr()).sqrt()
}

fn solve2(mut j: [[Complex64; 2]; 2], mut r: [Complex64; 2]) -> Option<Point2> {
    // rows are rescaled first: far from the unit polycircle the entries
    // reach 1e80 and the determinant would overflow inside the division
    for i in 0..2 {
        let s = j[i][0].norm().max(j[i][1].norm());
        if s > 0.0 && s.is_finite() {
            j[i] = [j[i][0] / s, j[i][1] / s];
            r[i] /= s;
        }
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det == ZERO || !det.is_finite() {
        return None;
    }
    Some([(r[0] * j[1][1] - r[1] * j[0][1]) / det, (j[0][0] * r[1] - j[1][0] * r[0]) / det])
}

impl Homotopy {
    /// `H(x, t)`, `dH/dx` and `dH/dt`.
    fn eval(&self, x: &Point2, t: f64) -> ([Complex64; 2], [[Complex64; 2]; 2], [Complex64; 2]) {
        let s = (1.0 - t) * self.gamma;
        let mut h = [ZERO; 2];
        let mut jac = [[ZERO; 2]; 2];
        let mut ht = [ZERO; 2];
        let sc = x[0].norm().max(x[1].norm()).max(1.0);
        for i in 0..2 {
            // same scale as the target row, 1/s^d
            let (f, fx, fy) = self.f[i].eval(x[0], x[1]);
            let d = self.d[i] as i32;
            let (u, w) = (x[i] / sc, 1.0 / sc);
            let g = u.powi(d) - w.powi(d);
            let gd = u.powi(d - 1) * (d as f64 * w);
            h[i] = s * g + t * f;
            ht[i] = f - self.gamma * g;
            jac[i] = [t * fx, t * fy];
            jac[i][i] += s * gd;
        }
        (h, jac, ht)
    }

    fn velocity(&self, x: &Point2, t: f64) -> Option<Point2> {
        let (_, j, ht) = self.eval(x, t);
        solve2(j, [-ht[0], -ht[1]])
    }

    fn newton_step(&self, x: &Point2, t: f64) -> Option<Point2> {
        let (h, j, _) = self.eval(x, t);
        solve2(j, h)
    }

    /// Tracks one path from `t = 0` to `t = 1`; `None` when it fails or
    /// diverges.
    fn track(&self, start: Point2, p: Params) -> Option<Point2> {
        let mut x = start;
        let mut t = 0.0;
        let mut h: f64 = 0.01f64.min(p.max_step);
        let mut streak = 0;
        while t < 1.0 {
            let step = h.min(1.0 - t);
            match self.step(&x, t, step, p) {
                Some(nx) => {
                    x = nx;
                    t += step;
                    streak += 1;
                    if streak >= 3 {
                        h = (2.0 * h).min(p.max_step);
                        streak = 0;
                    }
                }
                None => {
                    h *= 0.5;
                    streak = 0;
                    if h < 1e-12 {
                        return None;
                    }
                }
            }
            if !x[0].is_finite() || !x[1].is_finite() || norm2(&x) > 1e12 {
                return None;
            }
        }
        Some(x)
    }

    /// RK4 predictor and up to three Newton corrections.
    fn step(&self, x: &Point2, t: f64, h: f64, p: Params) -> Option<Point2> {
        let add = |a: &Point2, b: &Point2, s: f64| -> Point2 { [a[0] + b[0] * s, a[1] + b[1] * s] };
        let k1 = self.velocity(x, t)?;
        let k2 = self.velocity(&add(x, &k1, h / 2.0), t + h / 2.0)?;
        let k3 = self.velocity(&add(x, &k2, h / 2.0), t + h / 2.0)?;
        let k4 = self.velocity(&add(x, &k3, h), t + h)?;
        let mut y = [
            x[0] + (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) * (h / 6.0),
            x[1] + (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) * (h / 6.0),
        ];
        let scale = 1.0 + norm2(&y);
        let mut prev = f64::INFINITY;
        for it in 0..3 {
            let dx = self.newton_step(&y, t + h)?;
            let n = norm2(&dx);
            if it == 0 && n > p.first_correction * scale {
                return None;
            }
            y = [y[0] - dx[0], y[1] - dx[1]];
            // interior points only need to stay in the basin of the path;
            // the endpoint is refined separately
            if n <= 1e-6 * scale {
                return Some(y);
            }
            if it > 0 && n > 0.25 * prev {
                return None;
            }
            prev = n;
        }
        (prev <= 1e-7 * scale).then_some(y)
    }

    fn start_point(&self, k: usize) -> Point2 {
        let (a, b) = (k % self.d[0], k / self.d[0]);
        [
            Complex64::from_polar(1.0, 2.0 * PI * a as f64 / self.d[0] as f64),
            Complex64::from_polar(1.0, 2.0 * PI * b as f64 / self.d[1] as f64),
        ]
    }

    /// Newton on the target system.
    fn finish(&self, mut x: Point2) -> Point2 {
        for _ in 0..8 {
            let Some(dx) = self.newton_step(&x, 1.0) else { break };
            x = [x[0] - dx[0], x[1] - dx[1]];
            if norm2(&dx) <= 1e-15 * (1.0 + norm2(&x)) {
                break;
            }
        }
        x
    }
}

/// Endpoints of all `d_1 d_2` paths; `None` for failed paths.
pub(crate) fn track_all(system: &SystemSpec, strict_retries: usize) -> Result<Vec<Option<[Complex64; 2]>>> {
    if system.n() != 2 {
        return Err(Error::UnsupportedDimension { op: "homotopy", n: system.n() });
    }
    let f = [Dense2::from_laurent(&system.polynomials()[0]), Dense2::from_laurent(&system.polynomials()[1])];
    let d = [f[0].degree, f[1].degree];
    if d[0] == 0 || d[1] == 0 {
        return Err(Error::DegenerateMixedVolume("constant equation".into()));
    }
    let hom = Homotopy { f, d, gamma: Complex64::from_polar(1.0, 0.618_033_988_749_895 * 2.0 * PI + 0.1) };
    let total = d[0] * d[1];
    let mut ends: Vec<Option<Point2>> =
        (0..total).into_par_iter().map(|k| hom.track(hom.start_point(k), NORMAL).map(|x| hom.finish(x))).collect();
    for _ in 0..strict_retries {
        let redo = suspicious(&ends);
        if redo.is_empty() {
            break;
        }
        let again: Vec<(usize, Option<Point2>)> =
            redo.into_par_iter().map(|k| (k, hom.track(hom.start_point(k), STRICT).map(|x| hom.finish(x)))).collect();
        for (k, e) in again {
            ends[k] = e;
        }
    }
    Ok(ends)
}

/// Failed paths and paths whose endpoints coincide with another path's.
fn suspicious(ends: &[Option<Point2>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ends.len()).collect();
    let key = |k: &usize| ends[*k].map_or(f64::INFINITY, |x| x[0].re);
    idx.sort_by(|a, b| key(a).total_cmp(&key(b)));
    let mut out = Vec::new();
    for (pos, &k) in idx.iter().enumerate() {
        let Some(x) = ends[k] else {
            out.push(k);
            continue;
        };
        let tol = 1e-8 * (1.0 + norm2(&x));
        let close = |&j: &usize| ends[j].is_some_and(|y| (x[0] - y[0]).norm() <= tol && (x[1] - y[1]).norm() <= tol);
        let before = idx[..pos].iter().rev().take_while(|&&j| key(&j) >= x[0].re - tol).any(&close);
        let after = idx[pos + 1..].iter().take_while(|&&j| key(&j) <= x[0].re + tol).any(close);
        if before || after {
            out.push(k);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_eval_matches() {
        let f = LaurentPolynomial::parse_in("3*x1^2*x2 - x2^3 + 2*x1 + 1", 2).unwrap();
        let d = Dense2::from_laurent(&f);
        let norm = (9.0f64 + 1.0 + 4.0 + 1.0).sqrt();
        let (x, y) = (Complex64::new(0.3, -0.7), Complex64::new(1.1, 0.2));
        let (v, vx, vy) = d.eval(x, y);
        let k = norm * y.norm().powi(3);
        assert!(y.norm() > x.norm());
        assert!((v * k - f.evaluate(&[x, y]).unwrap()).norm() < 1e-12);
        assert!((vx * k - (6.0 * x * y + 2.0)).norm() < 1e-12);
        assert!((vy * k - (3.0 * x * x - 3.0 * y * y)).norm() < 1e-12);
        assert_eq!(d.degree, 3);
    }

    #[test]
    fn dense_eval_far_out_stays_finite() {
        let f = LaurentPolynomial::parse_in("x1^200 + x2^200 - x1^100*x2^99", 2).unwrap();
        let d = Dense2::from_laurent(&f);
        let (x, y) = (Complex64::new(1.5, 0.5), Complex64::new(-2.0, 0.1));
        let k = 3f64.sqrt() * y.norm().powi(200);
        let (v, _, _) = d.eval(x, y);
        let exact = f.evaluate(&[x, y]).unwrap();
        assert!((v * k - exact).norm() < 1e-12 * exact.norm());
        // 1e3^200 overflows; the scaled value does not
        let (v, vx, vy) = d.eval(Complex64::new(1e3, 1.0), Complex64::new(-2e3, 5.0));
        assert!(v.is_finite() && vx.is_finite() && vy.is_finite() && v.norm() > 0.0);
    }

    #[test]
    fn tracks_product_system() {
        let s = SystemSpec::parse("x1^3 - 2; x2^2 + x1 - 5").unwrap();
        let ends = track_all(&s, 2).unwrap();
        assert_eq!(ends.len(), 6);
        for e in ends {
            let x = e.unwrap();
            assert!((x[0].powi(3) - 2.0).norm() < 1e-10);
            assert!((x[1] * x[1] + x[0] - 5.0).norm() < 1e-10);
        }
    }
}
