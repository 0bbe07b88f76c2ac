//! Exact lattice polytopes: hulls, Minkowski sums, volumes, mixed volumes,
//! faces and support functions.
//!
//! Support functions use the inf convention `h_P(v) = min_{x in P} <x, v>`,
//! so facet normals are *inner* normals. Vectors imported from sources that
//! use the sup convention have to be negated.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;
pub type Point = Vec<i64>;

fn dot(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

fn sub(a: &[i64], b: &[i64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add(a: &[i64], b: &[i64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn cross3(a: &[i64], b: &[i64]) -> [i128; 3] {
    let (a0, a1, a2) = (a[0] as i128, a[1] as i128, a[2] as i128);
    let (b0, b1, b2) = (b[0] as i128, b[1] as i128, b[2] as i128);
    [a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0]
}

fn cross2(o: &[i64], a: &[i64], b: &[i64]) -> i128 {
    (a[0] - o[0]) as i128 * (b[1] - o[1]) as i128 - (a[1] - o[1]) as i128 * (b[0] - o[0]) as i128
}

fn gcd_all(v: &[i128]) -> i128 {
    v.iter().fold(0i128, |g, &x| g.gcd(&x))
}

/// Integer vector used for directions and exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(pub Vec<i64>);

impl LatticeVector {
    pub fn new(coords: Vec<i64>) -> Self {
        LatticeVector(coords)
    }

    pub fn unit(n: usize, j: usize) -> Self {
        let mut c = vec![0; n];
        c[j] = 1;
        LatticeVector(c)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn dot(&self, other: &[i64]) -> i128 {
        dot(&self.0, other)
    }

    pub fn dot_f64(&self, w: &[f64]) -> f64 {
        self.0.iter().zip(w).map(|(&x, y)| x as f64 * y).sum()
    }

    /// gcd of the coordinates (0 for the zero vector).
    pub fn content(&self) -> i64 {
        self.0.iter().fold(0i64, |g, &x| g.gcd(&x))
    }

    pub fn is_primitive(&self) -> bool {
        self.content() == 1
    }

    /// Divides out the content. Errors on the zero vector.
    pub fn primitive(&self) -> Result<LatticeVector> {
        let g = self.content();
        if g == 0 {
            return Err(Error::ZeroVector);
        }
        Ok(LatticeVector(self.0.iter().map(|x| x / g).collect()))
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.0.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
    }

    pub fn neg(&self) -> LatticeVector {
        LatticeVector(self.0.iter().map(|x| -x).collect())
    }
}

/// A facet: primitive inner normal, its support value and the indices of
/// the vertices on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facet {
    pub normal: LatticeVector,
    pub offset: i64,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeJson", into = "PolytopeJson")]
pub struct LatticePolytope {
    dim: usize,
    vertices: Vec<Point>,
    affine_dim: usize,
    facets: Vec<Facet>,
}

#[derive(Serialize, Deserialize)]
struct PolytopeJson {
    dim: usize,
    vertices: Vec<Point>,
}

impl TryFrom<PolytopeJson> for LatticePolytope {
    type Error = Error;
    fn try_from(j: PolytopeJson) -> Result<Self> {
        if j.vertices.iter().any(|v| v.len() != j.dim) {
            return Err(Error::DimensionMismatch {
                expected: j.dim,
                found: j.vertices.iter().map(|v| v.len()).find(|&l| l != j.dim).unwrap_or(0),
            });
        }
        if j.dim >= 4 {
            return LatticePolytope::from_box_vertices(j.dim, j.vertices);
        }
        convex_hull(&j.vertices)
    }
}

impl From<LatticePolytope> for PolytopeJson {
    fn from(p: LatticePolytope) -> Self {
        PolytopeJson { dim: p.dim, vertices: p.vertices }
    }
}

impl LatticePolytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.affine_dim == self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Product of intervals `[lo_j, hi_j]`; the only polytopes available in
    /// dimension four and above.
    pub fn axis_box(lo: &[i64], hi: &[i64]) -> Result<LatticePolytope> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        if lo.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = lo.len();
        if n <= 3 {
            let mut pts = vec![Vec::new()];
            for j in 0..n {
                let mut next = Vec::new();
                for p in &pts {
                    for &c in &[lo[j], hi[j]] {
                        let mut q: Point = p.clone();
                        q.push(c);
                        next.push(q);
                    }
                }
                pts = next;
            }
            return convex_hull(&pts);
        }
        let mut verts: BTreeSet<Point> = BTreeSet::new();
        verts.insert(Vec::new());
        for j in 0..n {
            let mut next = BTreeSet::new();
            for p in &verts {
                for &c in &[lo[j].min(hi[j]), lo[j].max(hi[j])] {
                    let mut q = p.clone();
                    q.push(c);
                    next.insert(q);
                }
            }
            verts = next;
        }
        let affine_dim = (0..n).filter(|&j| lo[j] != hi[j]).count();
        Ok(LatticePolytope { dim: n, vertices: verts.into_iter().collect(), affine_dim, facets: Vec::new() })
    }

    fn from_box_vertices(n: usize, vertices: Vec<Point>) -> Result<LatticePolytope> {
        let (lo, hi) = box_bounds(n, &vertices).ok_or(Error::UnsupportedDimension { op: "convex_hull", n })?;
        LatticePolytope::axis_box(&lo, &hi)
    }

    /// `[lo, hi]` per coordinate when the polytope is an axis-aligned box.
    pub fn as_box(&self) -> Option<(Point, Point)> {
        box_bounds(self.dim, &self.vertices)
    }

    /// Widths of the bounding box.
    pub fn spread(&self) -> Vec<i64> {
        (0..self.dim)
            .map(|j| {
                let lo = self.vertices.iter().map(|v| v[j]).min().unwrap_or(0);
                let hi = self.vertices.iter().map(|v| v[j]).max().unwrap_or(0);
                hi - lo
            })
            .collect()
    }

    pub fn translate(&self, b: &[i64]) -> LatticePolytope {
        let vertices = self.vertices.iter().map(|v| add(v, b)).collect();
        let facets = self
            .facets
            .iter()
            .map(|f| Facet {
                normal: f.normal.clone(),
                offset: f.offset + f.normal.dot(b) as i64,
                vertices: f.vertices.clone(),
            })
            .collect();
        LatticePolytope { dim: self.dim, vertices, affine_dim: self.affine_dim, facets }
    }

    /// Lattice points of the polytope (n <= 3), by scanning the bounding box.
    pub fn lattice_points(&self) -> Result<Vec<Point>> {
        if self.dim > 3 {
            return Err(Error::UnsupportedDimension { op: "lattice_points", n: self.dim });
        }
        let lo: Vec<i64> = (0..self.dim).map(|j| self.vertices.iter().map(|v| v[j]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..self.dim).map(|j| self.vertices.iter().map(|v| v[j]).max().unwrap()).collect();
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            if self.contains(&cur) {
                out.push(cur.clone());
            }
            let mut j = 0;
            loop {
                if j == self.dim {
                    return Ok(out);
                }
                if cur[j] < hi[j] {
                    cur[j] += 1;
                    break;
                }
                cur[j] = lo[j];
                j += 1;
            }
        }
    }

    /// Exact membership test.
    pub fn contains(&self, x: &[i64]) -> bool {
        if self.is_full_dimensional() && !self.facets.is_empty() {
            return self.facets.iter().all(|f| f.normal.dot(x) >= f.offset as i128);
        }
        match self.affine_dim {
            0 => self.vertices[0] == x,
            1 => {
                let a = &self.vertices[0];
                let b = &self.vertices[1];
                let d = sub(b, a);
                let r = sub(x, a);
                // collinear and between
                let t_num = dot(&r, &d);
                let dd = dot(&d, &d);
                if t_num < 0 || t_num > dd {
                    return false;
                }
                (0..self.dim).all(|i| (0..self.dim).all(|j| r[i] as i128 * d[j] as i128 == r[j] as i128 * d[i] as i128))
            }
            _ => {
                // planar polygon in R^3
                let nrm = plane_normal(&self.vertices);
                let a = &self.vertices[0];
                if dot3(&nrm, &sub(x, a)) != 0 {
                    return false;
                }
                let k = drop_axis(&nrm);
                let proj: Vec<Point> = self.vertices.iter().map(|v| drop_coord(v, k)).collect();
                let px = drop_coord(x, k);
                let m = proj.len();
                let s: Vec<i128> = (0..m).map(|i| cross2(&proj[i], &proj[(i + 1) % m], &px)).collect();
                s.iter().all(|&c| c >= 0) || s.iter().all(|&c| c <= 0)
            }
        }
    }
}

fn box_bounds(n: usize, vertices: &[Point]) -> Option<(Point, Point)> {
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    let mut expected = 1usize;
    for j in 0..n {
        let vals: BTreeSet<i64> = vertices.iter().map(|v| v[j]).collect();
        if vals.len() > 2 || vals.is_empty() {
            return None;
        }
        lo.push(*vals.iter().next().unwrap());
        hi.push(*vals.iter().last().unwrap());
        expected = expected.checked_mul(vals.len())?;
    }
    let distinct: BTreeSet<&Point> = vertices.iter().collect();
    (distinct.len() == expected).then_some((lo, hi))
}

fn dot3(n: &[i128; 3], v: &[i64]) -> i128 {
    n[0] * v[0] as i128 + n[1] * v[1] as i128 + n[2] * v[2] as i128
}

fn plane_normal(pts: &[Point]) -> [i128; 3] {
    let a = &pts[0];
    for i in 1..pts.len() {
        for j in i + 1..pts.len() {
            let c = cross3(&sub(&pts[i], a), &sub(&pts[j], a));
            if c != [0, 0, 0] {
                return c;
            }
        }
    }
    [0, 0, 0]
}

fn drop_axis(nrm: &[i128; 3]) -> usize {
    (0..3).max_by_key(|&k| nrm[k].abs()).unwrap()
}

fn drop_coord(v: &[i64], k: usize) -> Point {
    v.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &x)| x).collect()
}

/// Strictly convex counterclockwise hull in the plane (monotone chain).
fn hull2(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross2(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn polygon_facets(vertices: &[Point]) -> Vec<Facet> {
    let m = vertices.len();
    (0..m)
        .map(|i| {
            let a = &vertices[i];
            let b = &vertices[(i + 1) % m];
            let e = sub(b, a);
            let g = e[0].gcd(&e[1]);
            let normal = LatticeVector(vec![-e[1] / g, e[0] / g]);
            let offset = normal.dot(a) as i64;
            Facet { normal, offset, vertices: vec![i, (i + 1) % m] }
        })
        .collect()
}

fn polygon_from_hull(hull: Vec<Point>) -> LatticePolytope {
    match hull.len() {
        1 => LatticePolytope { dim: 2, vertices: hull, affine_dim: 0, facets: Vec::new() },
        2 => LatticePolytope { dim: 2, vertices: hull, affine_dim: 1, facets: Vec::new() },
        _ => {
            // start at the lowest, then leftmost vertex
            let start = (0..hull.len()).min_by_key(|&i| (hull[i][1], hull[i][0])).unwrap();
            let mut v = hull[start..].to_vec();
            v.extend_from_slice(&hull[..start]);
            let facets = polygon_facets(&v);
            LatticePolytope { dim: 2, vertices: v, affine_dim: 2, facets }
        }
    }
}

/// Convex hull of a nonempty point set in dimension n <= 3.
pub fn convex_hull(points: &[Point]) -> Result<LatticePolytope> {
    let first = points.first().ok_or(Error::EmptyInput)?;
    let n = first.len();
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: p.len() });
    }
    match n {
        0 => Err(Error::UnsupportedDimension { op: "convex_hull", n }),
        1 => {
            let lo = points.iter().map(|p| p[0]).min().unwrap();
            let hi = points.iter().map(|p| p[0]).max().unwrap();
            if lo == hi {
                return Ok(LatticePolytope { dim: 1, vertices: vec![vec![lo]], affine_dim: 0, facets: Vec::new() });
            }
            let facets = vec![
                Facet { normal: LatticeVector(vec![1]), offset: lo, vertices: vec![0] },
                Facet { normal: LatticeVector(vec![-1]), offset: -hi, vertices: vec![1] },
            ];
            Ok(LatticePolytope { dim: 1, vertices: vec![vec![lo], vec![hi]], affine_dim: 1, facets })
        }
        2 => Ok(polygon_from_hull(hull2(points))),
        3 => hull3(points),
        _ => Err(Error::UnsupportedDimension { op: "convex_hull", n }),
    }
}

fn hull3(points: &[Point]) -> Result<LatticePolytope> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort();
    pts.dedup();
    let p0 = pts[0].clone();
    let Some(i1) = (1..pts.len()).next() else {
        return Ok(LatticePolytope { dim: 3, vertices: pts, affine_dim: 0, facets: Vec::new() });
    };
    let d1 = sub(&pts[i1], &p0);
    let i2 = (1..pts.len()).find(|&i| cross3(&d1, &sub(&pts[i], &p0)) != [0, 0, 0]);
    let Some(i2) = i2 else {
        let lo = pts.iter().min_by_key(|p| dot(p, &d1)).unwrap().clone();
        let hi = pts.iter().max_by_key(|p| dot(p, &d1)).unwrap().clone();
        return Ok(LatticePolytope { dim: 3, vertices: vec![lo, hi], affine_dim: 1, facets: Vec::new() });
    };
    let nrm = cross3(&d1, &sub(&pts[i2], &p0));
    let i3 = (1..pts.len()).find(|&i| dot3(&nrm, &sub(&pts[i], &p0)) != 0);
    let Some(i3) = i3 else {
        let k = drop_axis(&nrm);
        let proj: Vec<Point> = pts.iter().map(|p| drop_coord(p, k)).collect();
        let h = hull2(&proj);
        let vertices = h.iter().map(|q| pts[proj.iter().position(|p| p == q).unwrap()].clone()).collect();
        return Ok(LatticePolytope { dim: 3, vertices, affine_dim: 2, facets: Vec::new() });
    };

    // Beneath-beyond with outward oriented triangles.
    let base = [0usize, i1, i2, i3];
    let interior4: Point = (0..3).map(|k| base.iter().map(|&i| pts[i][k]).sum()).collect();
    let outward = |tri: [usize; 3], pts: &[Point]| -> [usize; 3] {
        let n = cross3(&sub(&pts[tri[1]], &pts[tri[0]]), &sub(&pts[tri[2]], &pts[tri[0]]));
        let a4: Point = pts[tri[0]].iter().map(|x| 4 * x).collect();
        if dot3(&n, &sub(&interior4, &a4)) > 0 {
            [tri[0], tri[2], tri[1]]
        } else {
            tri
        }
    };
    let mut tris: Vec<[usize; 3]> = vec![
        outward([base[0], base[1], base[2]], &pts),
        outward([base[0], base[1], base[3]], &pts),
        outward([base[0], base[2], base[3]], &pts),
        outward([base[1], base[2], base[3]], &pts),
    ];
    let tri_normal = |t: &[usize; 3], pts: &[Point]| cross3(&sub(&pts[t[1]], &pts[t[0]]), &sub(&pts[t[2]], &pts[t[0]]));
    for (p, point) in pts.iter().enumerate() {
        if base.contains(&p) {
            continue;
        }
        let visible: Vec<bool> = tris.iter().map(|t| dot3(&tri_normal(t, &pts), &sub(point, &pts[t[0]])) > 0).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (t, &vis) in tris.iter().zip(&visible) {
            if vis {
                for k in 0..3 {
                    edges.insert((t[k], t[(k + 1) % 3]));
                }
            }
        }
        let horizon: Vec<(usize, usize)> = edges.iter().filter(|&&(a, b)| !edges.contains(&(b, a))).cloned().collect();
        let mut kept: Vec<[usize; 3]> = tris.iter().zip(&visible).filter(|(_, &v)| !v).map(|(t, _)| *t).collect();
        for (a, b) in horizon {
            kept.push([a, b, p]);
        }
        tris = kept;
    }

    // Merge coplanar triangles into facets.
    let mut normals: BTreeSet<Vec<i64>> = BTreeSet::new();
    for t in &tris {
        let n = tri_normal(t, &pts);
        let g = gcd_all(&n);
        normals.insert(n.iter().map(|x| (-x / g) as i64).collect());
    }
    let mut vertex_set: BTreeSet<Point> = BTreeSet::new();
    let mut raw_facets: Vec<(LatticeVector, i64, Vec<Point>)> = Vec::new();
    for nv in normals {
        let normal = LatticeVector(nv);
        let h = pts.iter().map(|p| normal.dot(p)).min().unwrap();
        let on: Vec<Point> = pts.iter().filter(|p| normal.dot(p) == h).cloned().collect();
        let nn = [normal.0[0] as i128, normal.0[1] as i128, normal.0[2] as i128];
        let k = drop_axis(&nn);
        let proj: Vec<Point> = on.iter().map(|p| drop_coord(p, k)).collect();
        let poly: Vec<Point> =
            hull2(&proj).iter().map(|q| on[proj.iter().position(|p| p == q).unwrap()].clone()).collect();
        vertex_set.extend(poly.iter().cloned());
        raw_facets.push((normal, h as i64, poly));
    }
    let vertices: Vec<Point> = vertex_set.into_iter().collect();
    let facets = raw_facets
        .into_iter()
        .map(|(normal, offset, poly)| Facet {
            normal,
            offset,
            vertices: poly.iter().map(|q| vertices.iter().position(|v| v == q).unwrap()).collect(),
        })
        .collect();
    Ok(LatticePolytope { dim: 3, vertices, affine_dim: 3, facets })
}

/// Minkowski sum. Full-dimensional polygons are merged edge by edge.
pub fn minkowski_sum(p: &LatticePolytope, q: &LatticePolytope) -> Result<LatticePolytope> {
    if p.dim != q.dim {
        return Err(Error::DimensionMismatch { expected: p.dim, found: q.dim });
    }
    if p.dim == 2 && p.affine_dim == 2 && q.affine_dim == 2 {
        return Ok(edge_merge(&p.vertices, &q.vertices));
    }
    if p.dim >= 4 {
        let ((plo, phi), (qlo, qhi)) = match (p.as_box(), q.as_box()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::UnsupportedDimension { op: "minkowski_sum", n: p.dim }),
        };
        return LatticePolytope::axis_box(&add(&plo, &qlo), &add(&phi, &qhi));
    }
    let sums: Vec<Point> = p.vertices.iter().flat_map(|a| q.vertices.iter().map(move |b| add(a, b))).collect();
    convex_hull(&sums)
}

fn half(e: &[i64]) -> u8 {
    // 0 for directions in [0, pi), 1 for [pi, 2 pi)
    if e[1] > 0 || (e[1] == 0 && e[0] > 0) {
        0
    } else {
        1
    }
}

fn angle_cmp(a: &[i64], b: &[i64]) -> std::cmp::Ordering {
    let (ha, hb) = (half(a), half(b));
    if ha != hb {
        return ha.cmp(&hb);
    }
    let c = a[0] as i128 * b[1] as i128 - a[1] as i128 * b[0] as i128;
    0.cmp(&c)
}

fn edge_merge(pv: &[Point], qv: &[Point]) -> LatticePolytope {
    let edges = |v: &[Point]| -> Vec<Point> { (0..v.len()).map(|i| sub(&v[(i + 1) % v.len()], &v[i])).collect() };
    let (pe, qe) = (edges(pv), edges(qv));
    // both vertex lists start at their lowest-leftmost vertex, so the edge
    // sequences are sorted by angle from direction (1, 0)
    let mut out = vec![add(&pv[0], &qv[0])];
    let (mut i, mut j) = (0, 0);
    while i < pe.len() || j < qe.len() {
        let e = if j == qe.len() || (i < pe.len() && angle_cmp(&pe[i], &qe[j]) != std::cmp::Ordering::Greater) {
            i += 1;
            &pe[i - 1]
        } else {
            j += 1;
            &qe[j - 1]
        };
        let last = out.last().unwrap().clone();
        out.push(add(&last, e));
    }
    out.pop();
    polygon_from_hull(remove_collinear(out))
}

fn remove_collinear(v: Vec<Point>) -> Vec<Point> {
    let m = v.len();
    (0..m).filter(|&i| cross2(&v[(i + m - 1) % m], &v[i], &v[(i + 1) % m]) != 0).map(|i| v[i].clone()).collect()
}

/// Exact Euclidean volume (n <= 3); zero for lower-dimensional polytopes.
pub fn volume(p: &LatticePolytope) -> Result<Rational> {
    if p.dim >= 4 {
        return match p.as_box() {
            Some((lo, hi)) => Ok(Rational::from_integer(lo.iter().zip(&hi).map(|(a, b)| (b - a) as i128).product())),
            None => Err(Error::UnsupportedDimension { op: "volume", n: p.dim }),
        };
    }
    if !p.is_full_dimensional() {
        return Ok(Rational::zero());
    }
    let v = &p.vertices;
    match p.dim {
        1 => Ok(Rational::from_integer((v[1][0] - v[0][0]) as i128)),
        2 => {
            let m = v.len();
            let twice: i128 = (0..m)
                .map(|i| v[i][0] as i128 * v[(i + 1) % m][1] as i128 - v[(i + 1) % m][0] as i128 * v[i][1] as i128)
                .sum();
            Ok(Rational::new(twice.abs(), 2))
        }
        _ => {
            let r = &v[0];
            let mut six: i128 = 0;
            for f in &p.facets {
                let fv = &f.vertices;
                for k in 1..fv.len().saturating_sub(1) {
                    let a = sub(&v[fv[0]], r);
                    let b = sub(&v[fv[k]], r);
                    let c = sub(&v[fv[k + 1]], r);
                    six += dot3(&cross3(&a, &b), &c).abs();
                }
            }
            Ok(Rational::new(six, 6))
        }
    }
}

fn permanent(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    // Ryser's formula
    let mut total: i128 = 0;
    for mask in 1u64..(1u64 << n) {
        let mut prod: i128 = 1;
        for row in m {
            let s: i128 = (0..n).filter(|&j| mask >> j & 1 == 1).map(|j| row[j]).sum();
            prod *= s;
        }
        let sign = if (n - mask.count_ones() as usize).is_multiple_of(2) { 1 } else { -1 };
        total += sign * prod;
    }
    total
}

/// Mixed volume by inclusion-exclusion over subset Minkowski sums,
/// normalized so that `MV(P, ..., P) = n! vol(P)`.
pub fn mixed_volume(polys: &[LatticePolytope]) -> Result<Rational> {
    let first = polys.first().ok_or(Error::EmptyInput)?;
    let n = first.dim;
    if let Some(p) = polys.iter().find(|p| p.dim != n) {
        return Err(Error::DimensionMismatch { expected: n, found: p.dim });
    }
    if polys.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: polys.len() });
    }
    if n >= 4 {
        let widths: Option<Vec<Vec<i128>>> = polys
            .iter()
            .map(|p| p.as_box().map(|(lo, hi)| lo.iter().zip(&hi).map(|(a, b)| (b - a) as i128).collect()))
            .collect();
        return match widths {
            Some(w) => Ok(Rational::from_integer(permanent(&w))),
            None => Err(Error::UnsupportedDimension { op: "mixed_volume", n }),
        };
    }
    let m = polys.len();
    let mut total = Rational::zero();
    for mask in 1u32..(1u32 << m) {
        let mut sum: Option<LatticePolytope> = None;
        for (i, p) in polys.iter().enumerate() {
            if mask >> i & 1 == 1 {
                sum = Some(match sum {
                    None => p.clone(),
                    Some(s) => minkowski_sum(&s, p)?,
                });
            }
        }
        let vol = volume(&sum.unwrap())?;
        let j = mask.count_ones() as usize;
        if (m - j).is_multiple_of(2) {
            total += vol;
        } else {
            total -= vol;
        }
    }
    Ok(total)
}

/// Mixed volume as an integer (lattice polytopes have integral mixed volume).
pub fn mixed_volume_integer(polys: &[LatticePolytope]) -> Result<u64> {
    let mv = mixed_volume(polys)?;
    debug_assert!(mv.is_integer());
    Ok(mv.to_integer().max(0) as u64)
}

/// `h_P(v) = min_{x in P} <x, v>`.
pub fn support_function(p: &LatticePolytope, v: &LatticeVector) -> i64 {
    p.vertices.iter().map(|x| v.dot(x)).min().unwrap() as i64
}

/// Points of `a` attaining the minimum of `<., v>`.
pub fn face(a: &[Point], v: &LatticeVector) -> Result<Vec<Point>> {
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    let h = a.iter().map(|x| v.dot(x)).min().ok_or(Error::EmptyInput)?;
    Ok(a.iter().filter(|x| v.dot(x) == h).cloned().collect())
}

/// Primitive inner facet normals.
pub fn facet_normals(p: &LatticePolytope) -> Result<Vec<LatticeVector>> {
    if !p.is_full_dimensional() || p.dim >= 4 {
        if p.dim >= 4 && p.is_full_dimensional() {
            return Ok((0..p.dim)
                .flat_map(|j| {
                    let e = LatticeVector::unit(p.dim, j);
                    [e.clone(), e.neg()]
                })
                .collect());
        }
        return Err(Error::NotFullDimensional { dim: p.dim, affine_dim: p.affine_dim });
    }
    Ok(p.facets.iter().map(|f| f.normal.clone()).collect())
}

/// Lattice length of the edges of a polygon, keyed by inner normal.
pub fn edge_lattice_lengths(p: &LatticePolytope) -> Result<BTreeMap<LatticeVector, i64>> {
    if p.dim != 2 || !p.is_full_dimensional() {
        return Err(Error::NotFullDimensional { dim: p.dim, affine_dim: p.affine_dim });
    }
    let v = &p.vertices;
    Ok(p.facets
        .iter()
        .map(|f| {
            let e = sub(&v[f.vertices[1]], &v[f.vertices[0]]);
            (f.normal.clone(), e[0].gcd(&e[1]))
        })
        .collect())
}

fn width_along(p: &LatticePolytope, u: &[f64]) -> f64 {
    let vals = p.vertices.iter().map(|x| x.iter().zip(u).map(|(&a, b)| a as f64 * b).sum::<f64>());
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
    hi - lo
}

fn float_hull_area(points: &[[f64; 2]]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if pts.len() < 3 {
        return 0.0;
    }
    let cr = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let chain = |it: &mut dyn Iterator<Item = &[f64; 2]>| {
        let mut c: Vec<[f64; 2]> = Vec::new();
        for p in it {
            while c.len() >= 2 && cr(&c[c.len() - 2], &c[c.len() - 1], p) <= 0.0 {
                c.pop();
            }
            c.push(*p);
        }
        c.pop();
        c
    };
    let mut h = chain(&mut pts.iter());
    h.extend(chain(&mut pts.iter().rev()));
    let m = h.len();
    (0..m).map(|i| h[i][0] * h[(i + 1) % m][1] - h[(i + 1) % m][0] * h[i][1]).sum::<f64>().abs() / 2.0
}

/// `D_{w,i}`: mixed volume in `w^perp` of the projections of the `Q_j`,
/// `j != i`. For n = 2 this is the length of the projection of the other
/// polytope.
pub fn projected_mixed_volumes(polys: &[LatticePolytope], w: &[f64]) -> Result<Vec<f64>> {
    let n = w.len();
    if polys.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: polys.len() });
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitDirection { norm });
    }
    match n {
        1 => Ok(vec![1.0]),
        2 => {
            let u = [-w[1], w[0]];
            Ok(vec![width_along(&polys[1], &u), width_along(&polys[0], &u)])
        }
        3 => {
            let (u1, u2) = orthonormal_complement(w);
            let proj = |p: &LatticePolytope| -> Vec<[f64; 2]> {
                p.vertices
                    .iter()
                    .map(|x| {
                        let xf: Vec<f64> = x.iter().map(|&c| c as f64).collect();
                        [dotf(&xf, &u1), dotf(&xf, &u2)]
                    })
                    .collect()
            };
            let projected: Vec<Vec<[f64; 2]>> = polys.iter().map(proj).collect();
            let mv2 = |a: &[[f64; 2]], b: &[[f64; 2]]| {
                let sums: Vec<[f64; 2]> =
                    a.iter().flat_map(|p| b.iter().map(move |q| [p[0] + q[0], p[1] + q[1]])).collect();
                (float_hull_area(&sums) - float_hull_area(a) - float_hull_area(b)).max(0.0)
            };
            Ok(vec![
                mv2(&projected[1], &projected[2]),
                mv2(&projected[0], &projected[2]),
                mv2(&projected[0], &projected[1]),
            ])
        }
        _ => Err(Error::UnsupportedDimension { op: "projected_mixed_volumes", n }),
    }
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthonormal_complement(w: &[f64]) -> ([f64; 3], [f64; 3]) {
    let k = (0..3).min_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs())).unwrap();
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let c = dotf(&e, w);
    let mut u1 = [e[0] - c * w[0], e[1] - c * w[1], e[2] - c * w[2]];
    let nu = dotf(&u1, &u1).sqrt();
    u1.iter_mut().for_each(|x| *x /= nu);
    let u2 = [w[1] * u1[2] - w[2] * u1[1], w[2] * u1[0] - w[0] * u1[2], w[0] * u1[1] - w[1] * u1[0]];
    (u1, u2)
}

/// Integer matrix with determinant +-1 together with its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnimodularMatrix {
    rows: Vec<Vec<i64>>,
    inverse: Vec<Vec<i64>>,
}

impl UnimodularMatrix {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: r.len() });
        }
        let det = determinant(&rows);
        if det.abs() != 1 {
            return Err(Error::NotUnimodular { det });
        }
        let inverse = rational_inverse(&rows)
            .into_iter()
            .map(|r| r.into_iter().map(|x| x.to_integer() as i64).collect())
            .collect();
        Ok(UnimodularMatrix { rows, inverse })
    }

    pub fn identity(n: usize) -> Self {
        let rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect();
        UnimodularMatrix { inverse: rows.clone(), rows }
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn inverse(&self) -> &[Vec<i64>] {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn det(&self) -> i128 {
        determinant(&self.rows)
    }

    /// Row vector times the inverse: the exponent map of the pullback.
    pub fn apply_inverse_right(&self, a: &[i64]) -> Vec<i64> {
        let n = self.dim();
        (0..n).map(|j| (0..n).map(|i| a[i] * self.inverse[i][j]).sum()).collect()
    }

    /// Image of a column vector: `A v`.
    pub fn apply(&self, v: &[i64]) -> Vec<i64> {
        self.rows.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Determinant by fraction-free elimination.
pub fn determinant(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| a[i][k] != 0) else {
            return 0;
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    if n == 0 {
        1
    } else {
        sign * a[n - 1][n - 1]
    }
}

fn rational_inverse(m: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<Rational> = r.iter().map(|&x| Rational::from_integer(x as i128)).collect();
            row.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            row
        })
        .collect();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[i][k].is_zero()).expect("singular matrix");
        a.swap(p, k);
        let piv = a[k][k];
        a[k].iter_mut().for_each(|x| *x /= piv);
        for i in 0..n {
            if i != k && !a[i][k].is_zero() {
                let f = a[i][k];
                for j in 0..2 * n {
                    let t = a[k][j] * f;
                    a[i][j] -= t;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Unimodular matrix whose first row is the primitive vector `a`.
///
/// Column operations reduce `a` to `e_1`; the accumulated transform `M`
/// satisfies `a M = e_1`, so `M^{-1}` has first row `a`.
pub fn complete_to_unimodular(a: &LatticeVector) -> Result<UnimodularMatrix> {
    if a.is_zero() {
        return Err(Error::ZeroVector);
    }
    if !a.is_primitive() {
        return Err(Error::NotPrimitive(a.0.clone()));
    }
    let n = a.dim();
    let mut row: Vec<i128> = a.0.iter().map(|&x| x as i128).collect();
    // m accumulates column ops, minv the inverse row ops
    let mut m: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i128).collect()).collect();
    let mut minv = m.clone();
    for j in 1..n {
        if row[j] == 0 {
            continue;
        }
        let (x, y) = (row[0], row[j]);
        let e = x.extended_gcd(&y);
        let (g, s, t) = (e.gcd, e.x, e.y);
        // T = [[s, -y/g], [t, x/g]] acting on columns (0, j); det T = 1
        let (p, q) = (-y / g, x / g);
        for r in m.iter_mut() {
            let (c0, cj) = (r[0], r[j]);
            r[0] = c0 * s + cj * t;
            r[j] = c0 * p + cj * q;
        }
        // T^{-1} = [[q, -p], [-t, s]] acting on rows (0, j)
        let (r0, rj) = (minv[0].clone(), minv[j].clone());
        for k in 0..n {
            minv[0][k] = q * r0[k] - p * rj[k];
            minv[j][k] = -t * r0[k] + s * rj[k];
        }
        row[0] = g;
        row[j] = 0;
    }
    if row[0] == -1 {
        for r in m.iter_mut() {
            r[0] = -r[0];
        }
        for k in 0..n {
            minv[0][k] = -minv[0][k];
        }
    }
    let rows: Vec<Vec<i64>> = minv.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
    let inverse: Vec<Vec<i64>> = m.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
    debug_assert_eq!(rows[0], a.0);
    Ok(UnimodularMatrix { rows, inverse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[&[i64]]) -> Vec<Point> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    fn q1() -> LatticePolytope {
        convex_hull(&pts(&[&[0, 0], &[13, 0], &[1, 12], &[0, 13]])).unwrap()
    }

    fn q2() -> LatticePolytope {
        convex_hull(&pts(&[&[12, 1], &[0, 13], &[1, 1], &[0, 0]])).unwrap()
    }

    fn shoelace_oracle(v: &[Point]) -> f64 {
        let m = v.len();
        (0..m).map(|i| (v[i][0] * v[(i + 1) % m][1] - v[(i + 1) % m][0] * v[i][1]) as f64).sum::<f64>().abs() / 2.0
    }

    #[test]
    fn hull_of_sample_first_support() {
        // (1, 12) lies on the edge from (13, 0) to (0, 13), so it is dropped
        let p = q1();
        let got: BTreeSet<Point> = p.vertices().iter().cloned().collect();
        let want: BTreeSet<Point> = pts(&[&[0, 0], &[13, 0], &[0, 13]]).into_iter().collect();
        assert_eq!(got, want);
        assert_eq!(p.affine_dim(), 2);
        assert!(p.contains(&[1, 12]));
    }

    #[test]
    fn degenerate_hulls() {
        let p = convex_hull(&pts(&[&[0, 0]])).unwrap();
        assert_eq!(p.affine_dim(), 0);
        let s = convex_hull(&pts(&[&[0, 0], &[1, 0], &[2, 0]])).unwrap();
        assert_eq!(s.affine_dim(), 1);
        assert_eq!(s.vertices(), &pts(&[&[0, 0], &[2, 0]])[..]);
        assert_eq!(convex_hull(&[]), Err(Error::EmptyInput));
        assert!(matches!(convex_hull(&[vec![0, 0, 0, 0]]), Err(Error::UnsupportedDimension { .. })));
    }

    #[test]
    fn squares_from_segments() {
        let a = convex_hull(&pts(&[&[0, 0], &[1, 0]])).unwrap();
        let b = convex_hull(&pts(&[&[0, 0], &[0, 1]])).unwrap();
        let s = minkowski_sum(&a, &b).unwrap();
        assert_eq!(volume(&s).unwrap(), Rational::from_integer(1));
        assert_eq!(s.vertices().len(), 4);
        let t = minkowski_sum(&q1(), &convex_hull(&[vec![3, -2]]).unwrap()).unwrap();
        assert_eq!(t, q1().translate(&[3, -2]));
    }

    #[test]
    fn sample_sum_matches_brute_force() {
        let s = minkowski_sum(&q1(), &q2()).unwrap();
        let (a, b) = (q1(), q2());
        let brute: Vec<Point> = a.vertices().iter().flat_map(|x| b.vertices().iter().map(move |y| add(x, y))).collect();
        assert_eq!(s, convex_hull(&brute).unwrap());
        // normals by rotating edge vectors
        let v = s.vertices();
        let mut oracle: Vec<LatticeVector> = (0..v.len())
            .map(|i| {
                let e = sub(&v[(i + 1) % v.len()], &v[i]);
                let g = e[0].gcd(&e[1]);
                LatticeVector(vec![-e[1] / g, e[0] / g])
            })
            .collect();
        let mut got = facet_normals(&s).unwrap();
        oracle.sort();
        got.sort();
        assert_eq!(got, oracle);
    }

    #[test]
    fn volumes() {
        let sq = LatticePolytope::axis_box(&[0, 0], &[1, 1]).unwrap();
        assert_eq!(volume(&sq).unwrap(), Rational::from_integer(1));
        let simplex = convex_hull(&pts(&[&[0, 0], &[1, 0], &[0, 1]])).unwrap();
        assert_eq!(volume(&simplex).unwrap(), Rational::new(1, 2));
        let v = volume(&q1()).unwrap();
        assert_eq!(*v.numer() as f64 / *v.denom() as f64, shoelace_oracle(q1().vertices()));
        assert_eq!(v, Rational::new(169, 2));
        let cube = LatticePolytope::axis_box(&[0, 0, 0], &[2, 3, 5]).unwrap();
        assert_eq!(volume(&cube).unwrap(), Rational::from_integer(30));
        let tet = convex_hull(&pts(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0], &[0, 0, 1]])).unwrap();
        assert_eq!(volume(&tet).unwrap(), Rational::new(1, 6));
    }

    #[test]
    fn mixed_volumes() {
        let simplex = convex_hull(&pts(&[&[0, 0], &[1, 0], &[0, 1]])).unwrap();
        assert_eq!(mixed_volume(&[simplex.clone(), simplex.clone()]).unwrap(), Rational::from_integer(1));
        assert_eq!(mixed_volume(&[q1(), q2()]).unwrap(), Rational::from_integer(169));
        let b1 = LatticePolytope::axis_box(&[0, 0, 0, 0], &[1, 2, 0, 0]).unwrap();
        let b2 = LatticePolytope::axis_box(&[0, 0, 0, 0], &[0, 0, 3, 0]).unwrap();
        let b3 = LatticePolytope::axis_box(&[0, 0, 0, 0], &[0, 0, 0, 4]).unwrap();
        let b4 = LatticePolytope::axis_box(&[0, 0, 0, 0], &[1, 1, 1, 1]).unwrap();
        // only the b1-row pairs with coordinates 1,2 and b4 takes the other
        assert_eq!(mixed_volume(&[b1, b2, b3, b4]).unwrap(), Rational::from_integer(3 * 4 * (1 + 2)));
        let cube = LatticePolytope::axis_box(&[0, 0, 0, 0], &[1, 1, 1, 1]).unwrap();
        assert_eq!(mixed_volume(&vec![cube; 4]).unwrap(), Rational::from_integer(24));
    }

    #[test]
    fn support_and_faces() {
        let simplex = convex_hull(&pts(&[&[0, 0], &[1, 0], &[0, 1]])).unwrap();
        assert_eq!(support_function(&simplex, &LatticeVector(vec![1, 1])), 0);
        assert_eq!(support_function(&simplex, &LatticeVector(vec![-1, 0])), -1);
        let a = pts(&[&[0, 0], &[13, 0], &[1, 12], &[0, 13]]);
        assert_eq!(face(&a, &LatticeVector(vec![0, 1])).unwrap(), pts(&[&[0, 0], &[13, 0]]));
        assert_eq!(face(&[vec![4, 5]], &LatticeVector(vec![3, -1])).unwrap(), vec![vec![4, 5]]);
        assert_eq!(face(simplex.vertices(), &LatticeVector(vec![1, 1])).unwrap(), vec![vec![0, 0]]);
        assert_eq!(face(&a, &LatticeVector(vec![0, 0])), Err(Error::ZeroVector));
    }

    #[test]
    fn facet_normals_of_basic_polygons() {
        let mut sq = facet_normals(&LatticePolytope::axis_box(&[0, 0], &[1, 1]).unwrap()).unwrap();
        sq.sort();
        let mut want = vec![
            LatticeVector(vec![1, 0]),
            LatticeVector(vec![-1, 0]),
            LatticeVector(vec![0, 1]),
            LatticeVector(vec![0, -1]),
        ];
        want.sort();
        assert_eq!(sq, want);
        let mut tri = facet_normals(&convex_hull(&pts(&[&[0, 0], &[1, 0], &[0, 1]])).unwrap()).unwrap();
        tri.sort();
        let mut want = vec![LatticeVector(vec![1, 0]), LatticeVector(vec![0, 1]), LatticeVector(vec![-1, -1])];
        want.sort();
        assert_eq!(tri, want);
        let seg = convex_hull(&pts(&[&[0, 0], &[1, 0]])).unwrap();
        assert!(matches!(facet_normals(&seg), Err(Error::NotFullDimensional { .. })));
    }

    #[test]
    fn projected_lengths() {
        let seg = convex_hull(&pts(&[&[0, 0], &[7, 0]])).unwrap();
        let other = convex_hull(&pts(&[&[0, 0], &[0, 1]])).unwrap();
        let d = projected_mixed_volumes(&[seg.clone(), other.clone()], &[0.0, 1.0]).unwrap();
        assert_eq!(d[1], 7.0);
        let d = projected_mixed_volumes(&[seg.clone(), other], &[1.0, 0.0]).unwrap();
        assert_eq!(d[1], 0.0);
        let d = projected_mixed_volumes(&[q1(), q2()], &[1.0, 0.0]).unwrap();
        // min/max of the second coordinates
        assert_eq!(d, vec![13.0, 13.0]);
        assert!(matches!(projected_mixed_volumes(&[q1(), q2()], &[1.0, 0.1]), Err(Error::NonUnitDirection { .. })));
    }

    #[test]
    fn projected_mixed_volume_in_three_dimensions() {
        let cube = LatticePolytope::axis_box(&[0, 0, 0], &[1, 1, 1]).unwrap();
        let d = projected_mixed_volumes(&[cube.clone(), cube.clone(), cube], &[0.0, 0.0, 1.0]).unwrap();
        for x in d {
            assert!((x - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unimodular_completion() {
        let a = complete_to_unimodular(&LatticeVector(vec![1, 0])).unwrap();
        assert_eq!(a.rows(), &[vec![1, 0], vec![0, 1]][..]);
        for v in [vec![2, 3], vec![0, -1], vec![-5, 7], vec![3, 5, 7], vec![6, 10, 15]] {
            let m = complete_to_unimodular(&LatticeVector(v.clone())).unwrap();
            assert_eq!(m.rows()[0], v);
            assert_eq!(m.det().abs(), 1);
            let n = v.len();
            for i in 0..n {
                for j in 0..n {
                    let s: i64 = (0..n).map(|k| m.rows()[i][k] * m.inverse()[k][j]).sum();
                    assert_eq!(s, (i == j) as i64);
                }
            }
        }
        assert!(matches!(complete_to_unimodular(&LatticeVector(vec![2, 4])), Err(Error::NotPrimitive(_))));
    }

    #[test]
    fn three_dimensional_hull_with_coplanar_points() {
        let mut p = Vec::new();
        for x in 0..3 {
            for y in 0..3 {
                for z in 0..3 {
                    p.push(vec![x, y, z]);
                }
            }
        }
        let h = convex_hull(&p).unwrap();
        assert_eq!(h.vertices().len(), 8);
        assert_eq!(h.facets().len(), 6);
        assert_eq!(volume(&h).unwrap(), Rational::from_integer(8));
        assert!(h.contains(&[1, 1, 1]) && !h.contains(&[3, 0, 0]));
    }

    #[test]
    fn json_round_trip() {
        let s = serde_json::to_string(&q1()).unwrap();
        assert!(s.starts_with("{\"dim\":2,\"vertices\":"));
        let back: LatticePolytope = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q1());
    }

    fn small_polygon() -> impl Strategy<Value = LatticePolytope> {
        prop::collection::vec((-4i64..5, -4i64..5), 3..8)
            .prop_map(|v| convex_hull(&v.into_iter().map(|(a, b)| vec![a, b]).collect::<Vec<_>>()).unwrap())
            .prop_filter("full dimensional", |p| p.is_full_dimensional())
    }

    fn small_polytope3() -> impl Strategy<Value = LatticePolytope> {
        prop::collection::vec((-2i64..3, -2i64..3, -2i64..3), 4..9)
            .prop_map(|v| convex_hull(&v.into_iter().map(|(a, b, c)| vec![a, b, c]).collect::<Vec<_>>()).unwrap())
    }

    proptest! {
        #[test]
        fn mixed_volume_is_symmetric_and_translation_invariant(p in small_polygon(), q in small_polygon(), t in (-3i64..4, -3i64..4)) {
            let a = mixed_volume(&[p.clone(), q.clone()]).unwrap();
            prop_assert_eq!(a, mixed_volume(&[q.clone(), p.clone()]).unwrap());
            prop_assert_eq!(a, mixed_volume(&[p.translate(&[t.0, t.1]), q.clone()]).unwrap());
            prop_assert!(a >= Rational::zero());
        }

        #[test]
        fn mixed_volume_is_multilinear(p in small_polygon(), q in small_polygon(), r in small_polygon()) {
            let pq = minkowski_sum(&p, &q).unwrap();
            let lhs = mixed_volume(&[pq, r.clone()]).unwrap();
            let rhs = mixed_volume(&[p, r.clone()]).unwrap() + mixed_volume(&[q, r]).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn diagonal_mixed_volume_is_factorial_volume(p in small_polygon(), c in small_polytope3()) {
            prop_assert_eq!(mixed_volume(&[p.clone(), p.clone()]).unwrap(), volume(&p).unwrap() * Rational::from_integer(2));
            prop_assert_eq!(mixed_volume(&[c.clone(), c.clone(), c.clone()]).unwrap(), volume(&c).unwrap() * Rational::from_integer(6));
        }

        #[test]
        fn edge_merge_equals_brute_force(p in small_polygon(), q in small_polygon()) {
            let brute: Vec<Point> = p.vertices().iter().flat_map(|a| q.vertices().iter().map(move |b| add(a, b))).collect();
            prop_assert_eq!(minkowski_sum(&p, &q).unwrap(), convex_hull(&brute).unwrap());
        }

        #[test]
        fn support_is_additive(p in small_polygon(), q in small_polygon(), v in (-5i64..6, -5i64..6)) {
            let v = LatticeVector(vec![v.0, v.1]);
            let s = minkowski_sum(&p, &q).unwrap();
            prop_assert_eq!(support_function(&s, &v), support_function(&p, &v) + support_function(&q, &v));
        }

        #[test]
        fn facets_are_supporting(c in small_polytope3(), p in small_polygon()) {
            for poly in [c, p] {
                for f in poly.facets() {
                    prop_assert_eq!(f.offset, support_function(&poly, &f.normal));
                    for (i, x) in poly.vertices().iter().enumerate() {
                        let val = f.normal.dot(x);
                        prop_assert!(val >= f.offset as i128);
                        prop_assert_eq!(val == f.offset as i128, f.vertices.contains(&i));
                    }
                }
            }
        }

        #[test]
        fn polygon_area_identity(p in small_polygon()) {
            let lengths = edge_lattice_lengths(&p).unwrap();
            let s: i64 = lengths.iter().map(|(v, l)| -support_function(&p, v) * l).sum();
            prop_assert_eq!(Rational::from_integer(s as i128), volume(&p).unwrap() * Rational::from_integer(2));
        }

        #[test]
        fn faces_are_nonempty(v in prop::collection::vec((-3i64..4, -3i64..4), 1..6), d in (-3i64..4, -3i64..4)) {
            prop_assume!(d != (0, 0));
            let a: Vec<Point> = v.into_iter().map(|(x, y)| vec![x, y]).collect();
            prop_assert!(!face(&a, &LatticeVector(vec![d.0, d.1])).unwrap().is_empty());
        }

        #[test]
        fn completion_is_unimodular(a in (-40i64..40, -40i64..40, -40i64..40)) {
            let v = LatticeVector(vec![a.0, a.1, a.2]);
            prop_assume!(!v.is_zero());
            let v = v.primitive().unwrap();
            let m = complete_to_unimodular(&v).unwrap();
            prop_assert_eq!(&m.rows()[0], &v.0);
            prop_assert_eq!(m.det().abs(), 1);
        }
    }
}
