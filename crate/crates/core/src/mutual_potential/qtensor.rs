//! Exact Q tensors: moments of barycentric monomials over the product of two
//! standard simplices.

use std::collections::BTreeMap;

use num_rational::Ratio;

use super::PotentialError;

/// Largest supported rank. Factorials up to `(MAX_Q_ORDER + 3)!` and products
/// of two numerators fit in `u128`.
pub const MAX_Q_ORDER: usize = 20;

/// Exact rational entries of the Q tensors of rank `0..=max_order`.
///
/// Each rank-n tensor is fully symmetric over the index set `{0..6}` (indices
/// `0..3` belong to simplex a, `3..6` to simplex b). Only one entry per
/// multiset of indices is stored, keyed by the sorted multi-index. A tensor
/// contraction `Q_{i1..in} x^{i1}..x^{in}` therefore visits each stored entry
/// with the multinomial multiplicity of its key; polynomial coefficients in
/// monomial form already carry that multiplicity.
#[derive(Clone, Debug)]
pub struct QTensorSet {
    max_order: usize,
    ranks: Vec<BTreeMap<Vec<u8>, Ratio<u128>>>,
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

/// `m1! m2! m3! / (m1+m2+m3+3)!` times the same for `m4..m6`.
pub fn q_closed_form(m: [u32; 6]) -> Ratio<u128> {
    let half = |e: &[u32]| {
        let num: u128 = e.iter().map(|&k| factorial(k)).product();
        let den = factorial(e.iter().sum::<u32>() + 3);
        Ratio::new(num, den)
    };
    half(&m[..3]) * half(&m[3..])
}

/// Occurrence counts of each index in a multi-index.
pub fn exponents_of(indices: &[u8]) -> [u32; 6] {
    let mut m = [0u32; 6];
    for &i in indices {
        m[i as usize] += 1;
    }
    m
}

/// All sorted multi-indices of length `n` over `0..6`.
pub fn sorted_multi_indices(n: usize) -> Vec<Vec<u8>> {
    fn rec(n: usize, start: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in start..6 {
            cur.push(i);
            rec(n, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 0, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Precompute every Q entry through rank `max_order`.
pub fn compute_q_tensors(max_order: usize) -> Result<QTensorSet, PotentialError> {
    if max_order > MAX_Q_ORDER {
        return Err(PotentialError::OrderTooHigh {
            order: max_order,
            max: MAX_Q_ORDER,
        });
    }
    let ranks = (0..=max_order)
        .map(|n| {
            sorted_multi_indices(n)
                .into_iter()
                .map(|key| {
                    let q = q_closed_form(exponents_of(&key));
                    (key, q)
                })
                .collect()
        })
        .collect();
    Ok(QTensorSet { max_order, ranks })
}

impl QTensorSet {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Entry for an arbitrary (unsorted) multi-index with components in `0..6`.
    pub fn get(&self, indices: &[usize]) -> Ratio<u128> {
        let mut key: Vec<u8> = indices.iter().map(|&i| i as u8).collect();
        key.sort_unstable();
        self.ranks[key.len()][&key]
    }

    pub fn get_f64(&self, indices: &[usize]) -> f64 {
        ratio_to_f64(self.get(indices))
    }

    /// Entry keyed by exponent counts.
    pub fn by_exponents(&self, m: [u32; 6]) -> Ratio<u128> {
        let key: Vec<u8> = (0..6u8)
            .flat_map(|i| std::iter::repeat_n(i, m[i as usize] as usize))
            .collect();
        self.ranks[key.len()][&key]
    }

    /// Stored entries of rank `n`, keyed by sorted multi-index.
    pub fn rank(&self, n: usize) -> &BTreeMap<Vec<u8>, Ratio<u128>> {
        &self.ranks[n]
    }
}

pub fn ratio_to_f64(q: Ratio<u128>) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}
