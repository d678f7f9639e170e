//! Shared multi-index bookkeeping for truncated Taylor polynomials.
//!
//! A `TaylorTable` enumerates all exponent multi-indices with |α| ≤ N in m
//! variables (graded-lexicographic order) and precomputes the product and
//! derivative index maps so that series arithmetic is table-driven.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Sentinel in the product table for results beyond the degree cutoff.
const OUT: u32 = u32::MAX;

#[derive(Debug)]
pub struct TaylorTable {
    m: usize,
    deg: usize,
    exps: Vec<Box<[u8]>>,
    pos: HashMap<Box<[u8]>, usize>,
    /// `prod[i * len + j]` = index of `exps[i] + exps[j]`, or OUT.
    prod: Vec<u32>,
    /// `deriv[var][i]` = (index of `exps[i] - e_var`, `exps[i][var]`) when defined.
    deriv: Vec<Vec<Option<(usize, f64)>>>,
    horner: HornerNode,
}

#[derive(Debug)]
enum HornerNode {
    Coeff(Option<usize>),
    Poly(Vec<HornerNode>),
}

fn enumerate_degree(m: usize, d: usize, prefix: &mut Vec<u8>, out: &mut Vec<Box<[u8]>>) {
    if prefix.len() == m - 1 {
        prefix.push(d as u8);
        out.push(prefix.clone().into_boxed_slice());
        prefix.pop();
        return;
    }
    for a in (0..=d).rev() {
        prefix.push(a as u8);
        enumerate_degree(m, d - a, prefix, out);
        prefix.pop();
    }
}

impl TaylorTable {
    fn build(m: usize, deg: usize) -> Self {
        assert!(m >= 1, "phase dimension must be at least 1");
        let mut exps = Vec::new();
        for d in 0..=deg {
            let mut prefix = Vec::with_capacity(m);
            enumerate_degree(m, d, &mut prefix, &mut exps);
        }
        let pos: HashMap<_, _> = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();

        let len = exps.len();
        let mut prod = vec![OUT; len * len];
        let mut sum = vec![0u8; m];
        for i in 0..len {
            for j in 0..len {
                let total: usize = exps[i]
                    .iter()
                    .zip(exps[j].iter())
                    .map(|(a, b)| (a + b) as usize)
                    .sum();
                if total <= deg {
                    for v in 0..m {
                        sum[v] = exps[i][v] + exps[j][v];
                    }
                    prod[i * len + j] = pos[sum.as_slice()] as u32;
                }
            }
        }

        let mut deriv = Vec::with_capacity(m);
        for v in 0..m {
            let mut col = Vec::with_capacity(len);
            for e in &exps {
                if e[v] == 0 {
                    col.push(None);
                } else {
                    let mut down = e.clone();
                    down[v] -= 1;
                    col.push(Some((pos[&down], e[v] as f64)));
                }
            }
            deriv.push(col);
        }

        let all: Vec<usize> = (0..len).collect();
        let horner = Self::build_horner(&exps, &all, 0, m, deg);

        TaylorTable {
            m,
            deg,
            exps,
            pos,
            prod,
            deriv,
            horner,
        }
    }

    fn build_horner(
        exps: &[Box<[u8]>],
        subset: &[usize],
        var: usize,
        m: usize,
        deg: usize,
    ) -> HornerNode {
        if var == m {
            debug_assert!(subset.len() <= 1);
            return HornerNode::Coeff(subset.first().copied());
        }
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); deg + 1];
        for &i in subset {
            buckets[exps[i][var] as usize].push(i);
        }
        let top = buckets
            .iter()
            .rposition(|b| !b.is_empty())
            .map_or(0, |p| p);
        let children = buckets[..=top]
            .iter()
            .map(|b| Self::build_horner(exps, b, var + 1, m, deg))
            .collect();
        HornerNode::Poly(children)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn deg(&self) -> usize {
        self.deg
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exp(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.exps[i].iter().map(|&a| a as usize).sum()
    }

    pub fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        self.pos.get(alpha).copied()
    }

    /// Index of `exps[i] + exps[j]`, or None past the degree cutoff.
    #[inline]
    pub fn prod(&self, i: usize, j: usize) -> Option<usize> {
        let p = self.prod[i * self.exps.len() + j];
        (p != OUT).then_some(p as usize)
    }

    /// Index and factor for ∂/∂z_var of the monomial `exps[i]`.
    #[inline]
    pub fn deriv(&self, var: usize, i: usize) -> Option<(usize, f64)> {
        self.deriv[var][i]
    }

    /// Horner evaluation of a coefficient vector at a point.
    pub fn eval<T>(&self, coeffs: &[T], z: &[num_complex::Complex64]) -> num_complex::Complex64
    where
        T: Into<num_complex::Complex64> + Copy,
    {
        debug_assert_eq!(coeffs.len(), self.len());
        debug_assert_eq!(z.len(), self.m);
        self.eval_node(&self.horner, coeffs, z, 0)
    }

    fn eval_node<T>(
        &self,
        node: &HornerNode,
        coeffs: &[T],
        z: &[num_complex::Complex64],
        var: usize,
    ) -> num_complex::Complex64
    where
        T: Into<num_complex::Complex64> + Copy,
    {
        match node {
            HornerNode::Coeff(Some(i)) => coeffs[*i].into(),
            HornerNode::Coeff(None) => num_complex::Complex64::new(0.0, 0.0),
            HornerNode::Poly(children) => {
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                for child in children.iter().rev() {
                    acc = acc * z[var] + self.eval_node(child, coeffs, z, var + 1);
                }
                acc
            }
        }
    }
}

/// Global cache: tables are immutable and shared between all series with the
/// same (m, N).
pub fn taylor_table(m: usize, deg: usize) -> Arc<TaylorTable> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<TaylorTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("taylor table cache poisoned");
    guard
        .entry((m, deg))
        .or_insert_with(|| Arc::new(TaylorTable::build(m, deg)))
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn graded_lex_enumeration() {
        let t = taylor_table(2, 2);
        let got: Vec<Vec<u8>> = (0..t.len()).map(|i| t.exp(i).to_vec()).collect();
        assert_eq!(
            got,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
    }

    #[test]
    fn product_and_derivative_maps() {
        let t = taylor_table(2, 3);
        let x = t.index_of(&[1, 0]).unwrap();
        let xy = t.index_of(&[1, 1]).unwrap();
        let x2y = t.index_of(&[2, 1]).unwrap();
        assert_eq!(t.prod(x, xy), Some(x2y));
        assert_eq!(t.prod(x2y, xy), None); // degree 5 > 3
        let (down, f) = t.deriv(0, x2y).unwrap();
        assert_eq!(down, xy);
        assert_eq!(f, 2.0);
        assert!(t.deriv(1, x).is_none());
    }

    #[test]
    fn horner_matches_direct_sum() {
        let t = taylor_table(3, 4);
        let coeffs: Vec<Complex64> = (0..t.len())
            .map(|i| Complex64::new(0.3 + i as f64 * 0.17, 0.1 - i as f64 * 0.05))
            .collect();
        let z = [
            Complex64::new(0.4, 0.2),
            Complex64::new(-0.3, 0.1),
            Complex64::new(0.25, -0.15),
        ];
        let mut direct = Complex64::new(0.0, 0.0);
        for i in 0..t.len() {
            let mut mono = Complex64::new(1.0, 0.0);
            for (v, &a) in t.exp(i).iter().enumerate() {
                for _ in 0..a {
                    mono *= z[v];
                }
            }
            direct += coeffs[i] * mono;
        }
        let horner = t.eval(&coeffs, &z);
        assert!((horner - direct).norm() < 1e-14 * direct.norm().max(1.0));
    }
}
