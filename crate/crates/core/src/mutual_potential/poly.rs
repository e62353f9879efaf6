//! Dense homogeneous polynomials in the six barycentric variables and the
//! precomputed tables used by the series kernel.

use std::collections::HashMap;

use super::qtensor::{ratio_to_f64, QTensorSet};

pub type Exponents = [u8; 6];

/// Canonical enumeration of monomials of each degree `0..=max_degree`.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    pub max_degree: usize,
    /// `monomials[d][k]` is the exponent vector of monomial `k` of degree `d`.
    pub monomials: Vec<Vec<Exponents>>,
    index: HashMap<Exponents, usize>,
}

impl MonomialBasis {
    pub fn new(max_degree: usize) -> Self {
        let mut monomials = Vec::with_capacity(max_degree + 1);
        let mut index = HashMap::new();
        for d in 0..=max_degree {
            let mut list = Vec::new();
            enumerate(d as u8, 0, [0; 6], &mut list);
            for (k, e) in list.iter().enumerate() {
                index.insert(*e, k);
            }
            monomials.push(list);
        }
        MonomialBasis {
            max_degree,
            monomials,
            index,
        }
    }

    pub fn len(&self, degree: usize) -> usize {
        self.monomials[degree].len()
    }

    /// Position of a monomial within its degree block.
    pub fn index_of(&self, e: &Exponents) -> usize {
        self.index[e]
    }

    /// Index table for multiplying a degree-`d1` block by a degree-`d2`
    /// block: entry `k1 * len(d2) + k2` is the product's index in `d1 + d2`.
    pub fn product_table(&self, d1: usize, d2: usize) -> Vec<u32> {
        let mut table = Vec::with_capacity(self.len(d1) * self.len(d2));
        for a in &self.monomials[d1] {
            for b in &self.monomials[d2] {
                let mut c = [0u8; 6];
                for i in 0..6 {
                    c[i] = a[i] + b[i];
                }
                table.push(self.index_of(&c) as u32);
            }
        }
        table
    }
}

fn enumerate(remaining: u8, var: usize, cur: Exponents, out: &mut Vec<Exponents>) {
    if var == 5 {
        let mut e = cur;
        e[5] = remaining;
        out.push(e);
        return;
    }
    for k in (0..=remaining).rev() {
        let mut e = cur;
        e[var] = k;
        enumerate(remaining - k, var + 1, e, out);
    }
}

/// Product of a degree-`d1` polynomial by a degree-`d2` polynomial written as
/// a gather: output coefficient `k` is `Σ src[terms.0] * factor[terms.1]` over
/// `terms[starts[k]..starts[k + 1]]`.
#[derive(Clone, Debug)]
pub struct Gather {
    pub starts: Vec<u32>,
    pub terms: Vec<(u16, u16)>,
}

impl Gather {
    pub fn new(basis: &MonomialBasis, d1: usize, d2: usize) -> Self {
        let table = basis.product_table(d1, d2);
        let n2 = basis.len(d2);
        let mut by_output: Vec<Vec<(u16, u16)>> = vec![Vec::new(); basis.len(d1 + d2)];
        for (idx, &out) in table.iter().enumerate() {
            by_output[out as usize].push(((idx / n2) as u16, (idx % n2) as u16));
        }
        let mut starts = vec![0u32];
        let mut terms = Vec::with_capacity(table.len());
        for list in by_output {
            terms.extend(list);
            starts.push(terms.len() as u32);
        }
        Gather { starts, terms }
    }

    #[inline]
    pub fn apply(&self, src: &[f64], factor: &[f64], dst: &mut [f64]) {
        for (k, out) in dst.iter_mut().enumerate() {
            let range = self.starts[k] as usize..self.starts[k + 1] as usize;
            *out = self.terms[range]
                .iter()
                .map(|&(s, f)| src[s as usize] * factor[f as usize])
                .sum();
        }
    }
}

/// Unordered index pair `(i, l)` with `i <= l`, in degree-2 monomial order.
pub fn pair_exponents(i: usize, l: usize) -> Exponents {
    let mut e = [0u8; 6];
    e[i] += 1;
    e[l] += 1;
    e
}

/// Tables the kernel needs for a fixed truncation order.
#[derive(Clone, Debug)]
pub struct SeriesTables {
    pub order: usize,
    pub basis: MonomialBasis,
    /// `mul_s1[d]`: degree `d` times degree 1.
    pub mul_s1: Vec<Gather>,
    /// `mul_s2[d]`: degree `d` times degree 2.
    pub mul_s2: Vec<Gather>,
    /// `q[d][k]`: Q entry of monomial `k` of degree `d`.
    pub q: Vec<Vec<f64>>,
    /// `q_shift1[d][i * len(d) + k]`: Q entry of monomial `k` times `σ_i`.
    pub q_shift1: Vec<Vec<f64>>,
    /// `q_shift2[d][p * len(d) + k]`: Q entry of monomial `k` times the
    /// `p`-th pair in [`SeriesTables::GRAD_PAIRS`].
    pub q_shift2: Vec<Vec<f64>>,
    /// Monomials `s1^p s2^q` with `p + 2q <= order`, as `(p, q)`.
    pub powers: Vec<(usize, usize)>,
    /// `s2_index[i][l]` (`i <= l`): position of `σ_i σ_l` in the degree-2 block.
    pub s2_index: [[usize; 6]; 6],
    /// `grad_pair_index[i][l]`: position of `(min, max)` in
    /// [`SeriesTables::GRAD_PAIRS`] when `min(i, l) < 3`.
    pub grad_pair_index: [[usize; 6]; 6],
    /// Offsets of each power's coefficients in the scratch buffer.
    pub power_offsets: Vec<usize>,
    pub scratch_len: usize,
}

impl SeriesTables {
    /// Index pairs `(i, l)`, `i <= l`, with at least one index from simplex a.
    /// These are the only rmat entries whose attitude derivative is nonzero.
    pub const GRAD_PAIRS: [(usize, usize); 15] = [
        (0, 0),
        (0, 1),
        (0, 2),
        (0, 3),
        (0, 4),
        (0, 5),
        (1, 1),
        (1, 2),
        (1, 3),
        (1, 4),
        (1, 5),
        (2, 2),
        (2, 3),
        (2, 4),
        (2, 5),
    ];

    pub fn new(q: &QTensorSet, order: usize) -> Self {
        assert!(order <= q.max_order(), "Q tensors do not reach order {order}");
        let basis = MonomialBasis::new(order);
        let q_of = |e: &Exponents| ratio_to_f64(q.by_exponents(e.map(u32::from)));

        let qd: Vec<Vec<f64>> = basis.monomials.iter().map(|l| l.iter().map(q_of).collect()).collect();

        let shifted = |d: usize, extra: Exponents| -> Vec<f64> {
            basis.monomials[d]
                .iter()
                .map(|m| {
                    let mut e = *m;
                    for i in 0..6 {
                        e[i] += extra[i];
                    }
                    q_of(&e)
                })
                .collect()
        };
        let mut q_shift1 = Vec::new();
        let mut q_shift2 = Vec::new();
        for d in 0..order {
            let mut block = Vec::with_capacity(6 * basis.len(d));
            for i in 0..6 {
                let mut e = [0u8; 6];
                e[i] = 1;
                block.extend(shifted(d, e));
            }
            q_shift1.push(block);
            if d + 2 <= order {
                let mut block = Vec::with_capacity(Self::GRAD_PAIRS.len() * basis.len(d));
                for &(i, l) in &Self::GRAD_PAIRS {
                    block.extend(shifted(d, pair_exponents(i, l)));
                }
                q_shift2.push(block);
            }
        }

        let mul_s1 = (0..order).map(|d| Gather::new(&basis, d, 1)).collect();
        let mul_s2 = (0..order.saturating_sub(1)).map(|d| Gather::new(&basis, d, 2)).collect();

        let mut powers = Vec::new();
        for q2 in 0..=order / 2 {
            for p in 0..=order - 2 * q2 {
                powers.push((p, q2));
            }
        }
        let mut power_offsets = Vec::with_capacity(powers.len());
        let mut len = 0;
        for &(p, q2) in &powers {
            power_offsets.push(len);
            len += basis.len(p + 2 * q2);
        }

        let mut s2_index = [[0; 6]; 6];
        if order >= 2 {
            for i in 0..6 {
                for l in i..6 {
                    s2_index[i][l] = basis.index_of(&pair_exponents(i, l));
                    s2_index[l][i] = s2_index[i][l];
                }
            }
        }
        let mut grad_pair_index = [[usize::MAX; 6]; 6];
        for (k, &(i, l)) in Self::GRAD_PAIRS.iter().enumerate() {
            grad_pair_index[i][l] = k;
            grad_pair_index[l][i] = k;
        }

        SeriesTables {
            order,
            s2_index,
            grad_pair_index,
            basis,
            mul_s1,
            mul_s2,
            q: qd,
            q_shift1,
            q_shift2,
            powers,
            power_offsets,
            scratch_len: len,
        }
    }

    /// Position of `s1^p s2^q` in [`SeriesTables::powers`].
    pub fn power_index(&self, p: usize, q: usize) -> usize {
        // Powers are grouped by q; group q2 has order - 2*q2 + 1 entries.
        let mut idx = 0;
        for q2 in 0..q {
            idx += self.order - 2 * q2 + 1;
        }
        idx + p
    }
}
