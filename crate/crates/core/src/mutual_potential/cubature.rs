//! Point-mass kernel for the truncated series.
//!
//! Integration against the Q tensors is integration over the product of two
//! unit simplices. The truncated expansion of `1/|X + d|` is a polynomial of
//! degree `order` in the body-frame coordinates of both points, so it only
//! sees each body's mass moments up to that degree. Each body is therefore
//! replaced by `C(order + 3, 3)` signed point masses on a fixed lattice whose
//! moments match the body's, and the series is evaluated per point pair as a
//! polynomial in `s1 = X·d` and `s2 = |d|²`.

use nalgebra::{DMatrix, DVector, Vector3};

use super::qtensor::{exponents_of, QTensorSet};
use super::series::term_coefficient;
use crate::body_model::PolyhedralBody;

/// A rule on the unit simplex `{σ ≥ 0, σ1 + σ2 + σ3 ≤ 1}`: the three
/// barycentric coordinates of the non-origin vertices and the weight.
pub type SimplexRule = Vec<([f64; 3], f64)>;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Grundmann–Möller rule of index `s` on the 3-simplex, exact for degree
/// `2s + 1`. Weights sum to the simplex volume `1/6`; some are negative.
pub fn grundmann_moeller(s: usize) -> SimplexRule {
    let n = 3;
    let d = 2 * s + 1;
    let mut rule = Vec::new();
    for i in 0..=s {
        let denom = (d + n - 2 * i) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign * denom.powi(d as i32) / (2f64.powi(2 * s as i32) * factorial(i) * factorial(d + n - i));
        let total = s - i;
        // Compositions β of `total` into four parts; β0 belongs to the origin.
        for b1 in 0..=total {
            for b2 in 0..=total - b1 {
                for b3 in 0..=total - b1 - b2 {
                    let lam = |b: usize| (2 * b + 1) as f64 / denom;
                    rule.push(([lam(b1), lam(b2), lam(b3)], w));
                }
            }
        }
    }
    rule
}

/// Smallest Grundmann–Möller index exact through `order`.
pub fn rule_index_for_order(order: usize) -> usize {
    order.saturating_sub(1).div_ceil(2)
}

/// Exponents `(a, b, c)` with `a + b + c ≤ order`.
pub fn monomials(order: usize) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for n in 0..=order as u32 {
        for a in (0..=n).rev() {
            for b in (0..=n - a).rev() {
                out.push([a, b, n - a - b]);
            }
        }
    }
    out
}

fn monomial(p: &Vector3<f64>, e: &[u32; 3]) -> f64 {
    p.x.powi(e[0] as i32) * p.y.powi(e[1] as i32) * p.z.powi(e[2] as i32)
}

/// Mass moments `∫ρ x^a y^b z^c dV` of `body` in units of `scale`, exact
/// through `order`.
pub fn mass_moments(body: &PolyhedralBody, order: usize, scale: f64) -> Vec<f64> {
    let rule = grundmann_moeller(rule_index_for_order(order));
    let exps = monomials(order);
    let mut m = vec![0.0; exps.len()];
    for ((verts, t), rho) in body.simplex_vertices.iter().zip(&body.jacobians).zip(&body.simplex_density) {
        for (lam, w) in &rule {
            let p = verts * Vector3::from(*lam) / scale;
            for (mi, e) in m.iter_mut().zip(&exps) {
                *mi += rho * t * w * monomial(&p, e);
            }
        }
    }
    m
}

/// Signed point masses matching a body's mass moments through `order`.
#[derive(Clone, Debug)]
pub struct PointCloud {
    /// Body-frame positions.
    pub points: Vec<Vector3<f64>>,
    pub masses: Vec<f64>,
}

impl PointCloud {
    /// Points on the degree-`order` principal lattice of a regular
    /// tetrahedron inscribed in the body's circumscribing sphere. That
    /// lattice is unisolvent for polynomials of degree `order`, so the
    /// weights follow from one square moment system.
    pub fn new(body: &PolyhedralBody, order: usize) -> Self {
        let scale = body.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let s = 1.0 / 3f64.sqrt();
        let corners = [
            Vector3::new(s, s, s),
            Vector3::new(s, -s, -s),
            Vector3::new(-s, s, -s),
            Vector3::new(-s, -s, s),
        ];
        let n = order.max(1) as f64;
        let mut unit = Vec::new();
        for e in monomials(order) {
            let i0 = order as u32 - e.iter().sum::<u32>();
            let p = corners[0] * i0 as f64 + corners[1] * e[0] as f64 + corners[2] * e[1] as f64 + corners[3] * e[2] as f64;
            unit.push(p / n);
        }
        if order == 0 {
            unit = vec![Vector3::zeros()];
        }
        let exps = monomials(order);
        let vander = DMatrix::from_fn(exps.len(), unit.len(), |a, i| monomial(&unit[i], &exps[a]));
        let rhs = DVector::from_vec(mass_moments(body, order, scale));
        let masses = vander
            .lu()
            .solve(&rhs)
            .expect("principal lattice is unisolvent");
        PointCloud {
            points: unit.iter().map(|p| p * scale).collect(),
            masses: masses.iter().copied().collect(),
        }
    }

    /// Largest relative moment mismatch through `order`.
    pub fn moment_mismatch(&self, body: &PolyhedralBody, order: usize) -> f64 {
        let scale = body.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let exact = mass_moments(body, order, scale);
        let total: f64 = exact[0].abs();
        monomials(order)
            .iter()
            .zip(&exact)
            .map(|(e, m)| {
                let approx: f64 = self.points.iter().zip(&self.masses).map(|(p, w)| w * monomial(&(p / scale), e)).sum();
                (approx - m).abs() / total
            })
            .fold(0.0, f64::max)
    }
}

/// Largest relative mismatch between the product of `rule` with itself and
/// the Q entries through `order`.
pub fn max_q_mismatch(rule: &SimplexRule, order: usize, q: &QTensorSet) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 0..=order {
        for (idx, exact) in q.rank(n) {
            let e = exponents_of(idx);
            let part = |off: usize| -> f64 {
                rule.iter()
                    .map(|(lam, w)| w * (0..3).map(|k| lam[k].powi(e[off + k] as i32)).product::<f64>())
                    .sum()
            };
            let exact = *exact.numer() as f64 / *exact.denom() as f64;
            worst = worst.max(((part(0) * part(3) - exact) / exact).abs());
        }
    }
    worst
}

/// Coefficients of `P`, `∂P/∂r`, `∂P/∂s1`, `∂P/∂s2` as polynomials in
/// `(s1, s2)`: `c[q][p]` multiplies `s1^p s2^q`.
pub struct RadialPolynomials {
    pub p: Vec<Vec<f64>>,
    pub dr: Vec<Vec<f64>>,
    pub ds1: Vec<Vec<f64>>,
    pub ds2: Vec<Vec<f64>>,
}

impl RadialPolynomials {
    pub fn new(order: usize, r: f64) -> Self {
        let inv_r = 1.0 / r;
        let qmax = order / 2;
        let mut p = vec![Vec::new(); qmax + 1];
        let mut dr = vec![Vec::new(); qmax + 1];
        for q in 0..=qmax {
            for pp in 0..=order - 2 * q {
                let k = pp + q;
                let c = term_coefficient(k, q);
                p[q].push(c * inv_r.powi(2 * k as i32 + 1));
                dr[q].push(-((2 * k + 1) as f64) * c * inv_r.powi(2 * k as i32 + 2));
            }
        }
        let ds1 = p.iter().map(|row| (1..row.len()).map(|k| k as f64 * row[k]).collect()).collect();
        let ds2 = (1..=qmax)
            .map(|q| p[q].iter().map(|c| q as f64 * c).collect())
            .collect();
        RadialPolynomials { p, dr, ds1, ds2 }
    }
}

/// `out[l] = Σ c[q][p] s1[l]^p s2[l]^q` by nested Horner schemes.
pub fn eval_poly(c: &[Vec<f64>], s1: &[f64], s2: &[f64], inner: &mut [f64], out: &mut [f64]) {
    out.fill(0.0);
    for row in c.iter().rev() {
        let Some((&last, rest)) = row.split_last() else {
            for (o, &b) in out.iter_mut().zip(s2) {
                *o *= b;
            }
            continue;
        };
        inner.fill(last);
        for &coef in rest.iter().rev() {
            for (v, &a) in inner.iter_mut().zip(s1) {
                *v = *v * a + coef;
            }
        }
        for ((o, &b), &v) in out.iter_mut().zip(s2).zip(inner.iter()) {
            *o = *o * b + v;
        }
    }
}

/// Body-2 points in structure-of-arrays form with `X·q` cached.
pub struct Targets<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub z: &'a [f64],
    pub m: &'a [f64],
    pub xq: &'a [f64],
}

/// Work buffers sized to the number of body-2 points.
pub struct Buffers {
    s1: Vec<f64>,
    s2: Vec<f64>,
    inner: Vec<f64>,
    val: Vec<f64>,
}

impl Buffers {
    pub fn new(n: usize) -> Self {
        Buffers { s1: vec![0.0; n], s2: vec![0.0; n], inner: vec![0.0; n], val: vec![0.0; n] }
    }
}

/// Sums over a range of body-2 points for one body-1 point at `e = R p`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PointSums {
    pub u: f64,
    pub dr: f64,
    /// `Σ m ∂P/∂s1 d`.
    pub f: Vector3<f64>,
    /// `Σ m (∂P/∂s1 X + 2 ∂P/∂s2 d)`.
    pub g: Vector3<f64>,
}

pub fn point_sums(
    polys: &RadialPolynomials,
    x: &Vector3<f64>,
    e: &Vector3<f64>,
    targets: &Targets,
    range: std::ops::Range<usize>,
    buf: &mut Buffers,
    gradients: bool,
) -> PointSums {
    let n = range.len();
    let (tx, ty, tz) = (&targets.x[range.clone()], &targets.y[range.clone()], &targets.z[range.clone()]);
    let (tm, txq) = (&targets.m[range.clone()], &targets.xq[range]);
    let xe = x.dot(e);
    let (s1, s2) = (&mut buf.s1[..n], &mut buf.s2[..n]);
    for l in 0..n {
        let dx = e.x - tx[l];
        let dy = e.y - ty[l];
        let dz = e.z - tz[l];
        s1[l] = xe - txq[l];
        s2[l] = dx * dx + dy * dy + dz * dz;
    }
    let (inner, val) = (&mut buf.inner[..n], &mut buf.val[..n]);
    let weighted = |val: &[f64]| -> f64 { val.iter().zip(tm).map(|(v, m)| v * m).sum() };
    let moment = |val: &[f64]| -> (f64, Vector3<f64>) {
        let (mut s, mut sx, mut sy, mut sz) = (0.0, 0.0, 0.0, 0.0);
        for l in 0..n {
            let mv = tm[l] * val[l];
            s += mv;
            sx += mv * tx[l];
            sy += mv * ty[l];
            sz += mv * tz[l];
        }
        (s, Vector3::new(sx, sy, sz))
    };

    let mut out = PointSums::default();
    eval_poly(&polys.p, s1, s2, inner, val);
    out.u = weighted(val);
    if !gradients {
        return out;
    }
    eval_poly(&polys.dr, s1, s2, inner, val);
    out.dr = weighted(val);
    eval_poly(&polys.ds1, s1, s2, inner, val);
    let (a, aq) = moment(val);
    out.f = e * a - aq;
    out.g = x * a;
    if !polys.ds2.is_empty() {
        eval_poly(&polys.ds2, s1, s2, inner, val);
        let (b, bq) = moment(val);
        out.g += (e * b - bq) * 2.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::{build_body, octahedron};
    use crate::mutual_potential::compute_q_tensors;

    #[test]
    fn weights_sum_to_volume() {
        for s in 0..6 {
            let total: f64 = grundmann_moeller(s).iter().map(|(_, w)| w).sum();
            assert!((total - 1.0 / 6.0).abs() < 1e-14, "s = {s}");
        }
    }

    #[test]
    fn point_counts() {
        assert_eq!(grundmann_moeller(0).len(), 1);
        assert_eq!(grundmann_moeller(1).len(), 5);
        assert_eq!(grundmann_moeller(2).len(), 15);
    }

    #[test]
    fn reproduces_q_tensors() {
        let q = compute_q_tensors(8).unwrap();
        for order in 0..=8 {
            let rule = grundmann_moeller(rule_index_for_order(order));
            assert!(max_q_mismatch(&rule, order, &q) < 1e-13, "order {order}");
        }
    }

    #[test]
    fn lattice_points_match_body_moments() {
        let body = build_body(&octahedron(1.0, 1.5, 0.9, 2500.0)).unwrap();
        for order in 0..=6 {
            let cloud = PointCloud::new(&body, order);
            assert_eq!(cloud.points.len(), monomials(order).len());
            assert!(cloud.moment_mismatch(&body, order) < 1e-13, "order {order}");
        }
    }

    #[test]
    fn horner_matches_direct_sum() {
        let polys = RadialPolynomials::new(5, 2.5);
        let s1 = [0.3, -0.7];
        let s2 = [0.4, 1.1];
        let mut inner = [0.0; 2];
        let mut out = [0.0; 2];
        eval_poly(&polys.p, &s1, &s2, &mut inner, &mut out);
        for l in 0..2 {
            let mut direct = 0.0;
            for (q, row) in polys.p.iter().enumerate() {
                for (p, c) in row.iter().enumerate() {
                    direct += c * s1[l].powi(p as i32) * s2[l].powi(q as i32);
                }
            }
            assert!((out[l] - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn full_series_tends_to_inverse_distance() {
        // At high order the truncated series approaches 1/|X + d|.
        let r = 5.0;
        let (s1, s2) = (0.8, 1.3);
        let polys = RadialPolynomials::new(20, r);
        let mut inner = [0.0];
        let mut out = [0.0];
        eval_poly(&polys.p, &[s1], &[s2], &mut inner, &mut out);
        let exact = 1.0 / (r * r + 2.0 * s1 + s2).sqrt();
        assert!((out[0] - exact).abs() < 1e-12 * exact);
    }
}
