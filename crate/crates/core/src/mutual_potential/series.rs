//! The general-order series kernel for one simplex pair.
//!
//! With `s1 = w·σ` and `s2 = σᵀ rmat σ`, the inverse distance expands as
//!
//! ```text
//! 1/sqrt(r² + 2 s1 + s2) = Σ_k c_k (2 s1 + s2)^k / r^(2k+1),
//! c_k = (-1)^k (2k-1)!! / (2^k k!)
//! ```
//!
//! Expanding `(2 s1 + s2)^k` binomially gives terms `s1^(k-j) s2^j` of
//! σ-degree `n = k + j`, and the order-n bracket collects all of them. Each
//! σ-monomial integrates to its Q entry over the simplex pair, so a bracket is
//! the Q-weighted sum of the coefficients of a polynomial in σ.

use super::poly::SeriesTables;

/// Series coefficient `c_k` of `(1 + x)^(-1/2) = Σ c_k x^k`.
pub fn inverse_sqrt_coefficient(k: usize) -> f64 {
    let mut c = 1.0;
    for i in 1..=k {
        c *= -((2 * i - 1) as f64) / ((2 * i) as f64);
    }
    c
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficient of `s1^(k-j) s2^j / r^(2k+1)` in the expansion.
pub fn term_coefficient(k: usize, j: usize) -> f64 {
    inverse_sqrt_coefficient(k) * binomial(k, j) * 2f64.powi((k - j) as i32)
}

/// Per-power scalar weights for a fixed separation `r`, shared by all pairs.
#[derive(Clone, Debug)]
pub struct RadialWeights {
    /// Weight of `L(s1^p s2^q)` in the potential bracket sum.
    pub u: Vec<f64>,
    /// Same for `∂/∂r`.
    pub dr: Vec<f64>,
    /// Weight of `s1^p s2^q` in the `∂/∂s1` polynomial (zero when unused).
    pub a: Vec<f64>,
    /// Weight of `s1^p s2^q` in the `∂/∂s2` polynomial (zero when unused).
    pub b: Vec<f64>,
}

impl RadialWeights {
    pub fn new(tables: &SeriesTables, r: f64) -> Self {
        let n = tables.powers.len();
        let (mut u, mut dr, mut a, mut b) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let inv_r = 1.0 / r;
        let rpow = |e: usize| inv_r.powi(e as i32);
        for (idx, &(p, q)) in tables.powers.iter().enumerate() {
            let deg = p + 2 * q;
            // As a term of the potential: k = p + q, j = q.
            let (k, j) = (p + q, q);
            let c = term_coefficient(k, j);
            u[idx] = c * rpow(2 * k + 1);
            dr[idx] = -((2 * k + 1) as f64) * c * rpow(2 * k + 2);
            // As the s1-derivative of the term with k = p + q + 1, j = q.
            if deg < tables.order {
                let (k, j) = (p + q + 1, q);
                a[idx] = term_coefficient(k, j) * (k - j) as f64 * rpow(2 * k + 1);
            }
            // As the s2-derivative of the term with k = p + q + 1, j = q + 1.
            if deg + 2 <= tables.order {
                let (k, j) = (p + q + 1, q + 1);
                b[idx] = term_coefficient(k, j) * j as f64 * rpow(2 * k + 1);
            }
        }
        RadialWeights { u, dr, a, b }
    }
}

/// Series sums for one simplex pair, before the `-G ρa Ta ρb Tb` factor.
#[derive(Clone, Copy, Debug, Default)]
pub struct PairTerms {
    /// `Σ_n Û_n`.
    pub u: f64,
    /// `∂/∂r` of `Σ_n Û_n` at fixed `w`, `rmat`.
    pub dudr: f64,
    /// `∂/∂w^i`.
    pub gw: [f64; 6],
    /// `∂/∂rmat^{il}` for the pairs in [`SeriesTables::GRAD_PAIRS`], with
    /// `rmat^{il}` and `rmat^{li}` treated as separate entries of `σᵀ rmat σ`.
    pub gr: [f64; 15],
}

/// Reusable buffers for [`pair_terms`].
pub struct Scratch {
    powers: Vec<f64>,
    combined: Vec<f64>,
}

impl Scratch {
    pub fn new(tables: &SeriesTables) -> Self {
        let max_block = tables.basis.len(tables.order);
        Scratch {
            powers: vec![0.0; tables.scratch_len],
            combined: vec![0.0; max_block],
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Evaluate the truncated series and its partial derivatives for one pair.
///
/// `gradients` selects whether `gw` and `gr` are computed.
pub fn pair_terms(
    tables: &SeriesTables,
    weights: &RadialWeights,
    w: &[f64; 6],
    rmat: &[[f64; 6]; 6],
    scratch: &mut Scratch,
    gradients: bool,
) -> PairTerms {
    let order = tables.order;
    let basis = &tables.basis;
    let buf = &mut scratch.powers;

    // s1^p s2^q for all p + 2q <= order.
    let mut s2 = [0.0; 21];
    if order >= 2 {
        for i in 0..6 {
            for l in i..6 {
                let k = tables.s2_index[i][l];
                s2[k] = if i == l { rmat[i][i] } else { 2.0 * rmat[i][l] };
            }
        }
    }
    for (idx, &(p, q)) in tables.powers.iter().enumerate() {
        let off = tables.power_offsets[idx];
        let deg = p + 2 * q;
        let len = basis.len(deg);
        if p == 0 && q == 0 {
            buf[off] = 1.0;
            continue;
        }
        // Multiply the previous power by s1 (when q = 0) or by s2.
        let (src_idx, src_deg, program, factor) = if q == 0 {
            (tables.power_index(p - 1, 0), deg - 1, &tables.mul_s1[deg - 1], &w[..])
        } else {
            (tables.power_index(p, q - 1), deg - 2, &tables.mul_s2[deg - 2], &s2[..])
        };
        let src_off = tables.power_offsets[src_idx];
        let (head, tail) = buf.split_at_mut(off);
        program.apply(&head[src_off..src_off + basis.len(src_deg)], factor, &mut tail[..len]);
    }

    let mut out = PairTerms::default();
    for (idx, &(p, q)) in tables.powers.iter().enumerate() {
        let deg = p + 2 * q;
        let off = tables.power_offsets[idx];
        let l = dot(&buf[off..off + basis.len(deg)], &tables.q[deg]);
        out.u += weights.u[idx] * l;
        out.dudr += weights.dr[idx] * l;
    }
    if !gradients || order == 0 {
        return out;
    }

    for deg in 0..order {
        let len = basis.len(deg);
        combine(tables, &weights.a, deg, buf, &mut scratch.combined[..len]);
        let a = &scratch.combined[..len];
        let qs = &tables.q_shift1[deg];
        for i in 0..6 {
            out.gw[i] += dot(a, &qs[i * len..(i + 1) * len]);
        }
        if deg + 2 <= order {
            combine(tables, &weights.b, deg, buf, &mut scratch.combined[..len]);
            let b = &scratch.combined[..len];
            let qs = &tables.q_shift2[deg];
            for (pidx, g) in out.gr.iter_mut().enumerate() {
                *g += dot(b, &qs[pidx * len..(pidx + 1) * len]);
            }
        }
    }
    out
}

/// `Σ weight · s1^p s2^q` over the powers of degree `deg`.
fn combine(tables: &SeriesTables, weights: &[f64], deg: usize, buf: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    let len = out.len();
    for q in 0..=deg / 2 {
        let p = deg - 2 * q;
        let idx = tables.power_index(p, q);
        let wgt = weights[idx];
        if wgt == 0.0 {
            continue;
        }
        let off = tables.power_offsets[idx];
        for (o, &c) in out.iter_mut().zip(&buf[off..off + len]) {
            *o += wgt * c;
        }
    }
}
