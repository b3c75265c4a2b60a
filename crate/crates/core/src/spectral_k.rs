//! Spectral solution for `K + 1` alleles.
//!
//! For each multi-index `α` with `|α| = k` the eigenfunction
//! `y_{k,α}(s) = Σ_β a_{α,β} s^β` of eigenvalue `μ_k` is seeded by
//! `a_{α,β} = δ_{αβ}` on `|β| = k` and extended by
//!
//! ```text
//! a_{α,β} = Σ_{u : β_u ≥ 1} (β_u − 1) a_{α,β−e_u} / (|β|(|β|−1) − k(k−1))
//! ```
//!
//! Terms with `β_u = 0` have no `β − e_u` and are absent from the sum.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::multi_index::{graded_enumerate, MultiIndex};
use crate::scalar::Scalar;
use crate::spectral2::decays;

#[derive(Clone, Debug)]
pub struct EigenTableK<T> {
    dim: usize,
    degmax: u32,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    /// `block_start[d]` is the position of the first index of degree `d`.
    block_start: Vec<usize>,
    /// `rows[a][b − block_start[|α|]] = a_{α,β}`.
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> EigenTableK<T> {
    pub fn build(dim: usize, degmax: u32) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        let indices = graded_enumerate(dim, degmax);
        let lookup: HashMap<_, _> = indices.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut block_start = vec![0usize; degmax as usize + 2];
        for (i, m) in indices.iter().enumerate().rev() {
            block_start[m.degree() as usize] = i;
        }
        block_start[degmax as usize + 1] = indices.len();
        let down: Vec<Vec<Option<usize>>> =
            indices.iter().map(|b| (0..dim).map(|u| b.subtract_unit(u).map(|m| lookup[&m])).collect()).collect();

        let mut rows = Vec::with_capacity(indices.len());
        for (ia, alpha) in indices.iter().enumerate() {
            let k = alpha.degree() as i64;
            let start = block_start[k as usize];
            let mut row: Vec<T> = vec![T::zero(); indices.len() - start];
            row[ia - start] = T::one();
            for ib in block_start[k as usize + 1]..indices.len() {
                let beta = &indices[ib];
                let d = beta.degree() as i64;
                let mut num = T::zero();
                for (u, below) in down[ib].iter().enumerate() {
                    let Some(jb) = below else { continue };
                    let weight = beta.components()[u] as i64 - 1;
                    if weight != 0 && *jb >= start {
                        num += T::from_i64(weight) * row[jb - start].clone();
                    }
                }
                // μ_0 = μ_1: the degree-0 row vanishes above degree 0.
                let den = d * (d - 1) - k * (k - 1);
                row[ib - start] = if den == 0 { T::zero() } else { num / T::from_i64(den) };
            }
            rows.push(row);
        }
        Ok(EigenTableK { dim, degmax, indices, lookup, block_start, rows })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degmax(&self) -> u32 {
        self.degmax
    }

    /// Multi-indices of degree ≤ `degmax`, graded lexicographic.
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index_of(&self, m: &MultiIndex) -> Option<usize> {
        self.lookup.get(m).copied()
    }

    fn entry(&self, ia: usize, ib: usize) -> T {
        let start = self.block_start[self.indices[ia].degree() as usize];
        if ib < start {
            T::zero()
        } else {
            self.rows[ia][ib - start].clone()
        }
    }

    /// `a_{α,β}`; zero when `|β| < |α|`.
    pub fn coefficient(&self, alpha: &MultiIndex, beta: &MultiIndex) -> Result<T> {
        let ia = self.position(alpha)?;
        let ib = self.position(beta)?;
        Ok(self.entry(ia, ib))
    }

    fn position(&self, m: &MultiIndex) -> Result<usize> {
        self.index_of(m).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "multi-index {m} outside the table (K = {}, degmax = {})",
                self.dim, self.degmax
            ))
        })
    }

    /// Apply `−½ Σ_{ij} s_i s_j ∂_i∂_j + Σ_i (s_i²/2) ∂_i + μ_k` to the
    /// truncated `y_{k,α}` term by term and return the largest coefficient
    /// of the result over `|β| < degmax`.
    pub fn verify_eigenfunction(&self, alpha: &MultiIndex, degmax: u32) -> Result<f64> {
        let ia = self.position(alpha)?;
        let k = alpha.degree();
        if k > degmax || degmax > self.degmax {
            return Err(Error::InvalidArgument(format!(
                "need |α| ≤ degmax ≤ {}, got |α| = {k}, degmax = {degmax}",
                self.degmax
            )));
        }
        let half = T::ratio(1, 2);
        let mu = T::ratio((k as i64) * (k as i64 - 1), 2);
        let mut image: HashMap<MultiIndex, T> = HashMap::new();
        let mut add = |m: MultiIndex, v: T| {
            let slot = image.entry(m).or_insert_with(T::zero);
            *slot += v;
        };
        for (ib, gamma) in self.indices.iter().enumerate() {
            if gamma.degree() > degmax {
                break;
            }
            let a = self.entry(ia, ib);
            if a == T::zero() {
                continue;
            }
            let g = gamma.components();
            for i in 0..self.dim {
                for j in 0..self.dim {
                    let second = if i == j { g[i] as i64 * (g[i] as i64 - 1) } else { g[i] as i64 * g[j] as i64 };
                    if second != 0 {
                        add(gamma.clone(), -(half.clone() * T::from_i64(second) * a.clone()));
                    }
                }
                if g[i] > 0 {
                    add(gamma.add_unit(i), half.clone() * T::from_i64(g[i] as i64) * a.clone());
                }
            }
            add(gamma.clone(), mu.clone() * a.clone());
        }
        Ok(image.iter().filter(|(m, _)| m.degree() < degmax).map(|(_, v)| v.to_f64().abs()).fold(0.0, f64::max))
    }
}

/// Expansion coefficients `c_α` for an initial frequency vector.
#[derive(Clone, Debug)]
pub struct SpectralSolutionK<T> {
    p: Vec<T>,
    c: Vec<T>,
    table: Arc<EigenTableK<T>>,
}

impl<T: Scalar> SpectralSolutionK<T> {
    /// Solve `p^β = β! Σ_{|α| ≤ |β|} c_α a_{α,β}` degree block by degree
    /// block: `c_β = p^β / β! − Σ_{|α| < |β|} c_α a_{α,β}`.
    pub fn solve(p: Vec<T>, table: Arc<EigenTableK<T>>) -> Result<Self> {
        let order: Vec<usize> = (0..table.indices.len()).collect();
        Self::solve_in_order(p, table, &order)
    }

    /// As [`solve`](Self::solve), visiting the unknowns in `order`, which
    /// must be a permutation whose degrees are non-decreasing.
    pub fn solve_in_order(p: Vec<T>, table: Arc<EigenTableK<T>>, order: &[usize]) -> Result<Self> {
        validate_frequencies(&p, table.dim)?;
        let n = table.indices.len();
        let mut seen = vec![false; n];
        for w in order.windows(2) {
            if table.indices[w[0]].degree() > table.indices[w[1]].degree() {
                return Err(Error::InvalidArgument("solve order is not degree-graded".into()));
            }
        }
        for &i in order {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument("solve order is not a permutation".into()));
            }
        }
        if order.len() != n {
            return Err(Error::InvalidArgument("solve order is not a permutation".into()));
        }

        let mut c = vec![T::zero(); n];
        for &ib in order {
            let beta = &table.indices[ib];
            let mut v = beta.monomial(&p) / beta.factorial_in::<T>();
            for ia in 0..table.block_start[beta.degree() as usize] {
                v -= c[ia].clone() * table.entry(ia, ib);
            }
            c[ib] = v;
        }
        Ok(SpectralSolutionK { p, c, table })
    }

    pub fn p(&self) -> &[T] {
        &self.p
    }

    pub fn table(&self) -> &Arc<EigenTableK<T>> {
        &self.table
    }

    /// `c_α`.
    pub fn coefficient(&self, alpha: &MultiIndex) -> Result<T> {
        Ok(self.c[self.table.position(alpha)?].clone())
    }

    /// `m_β(t) = β! Σ_{|α| ≤ |β|} c_α a_{α,β} e^{−μ_{|α|} t}`.
    pub fn moment(&self, beta: &MultiIndex, t: f64) -> Result<T> {
        let ib = self.table.position(beta)?;
        let d = decays::<T>(beta.degree() as usize, t);
        Ok(self.moment_with(ib, &d))
    }

    fn moment_with(&self, ib: usize, d: &[T]) -> T {
        let beta = &self.table.indices[ib];
        let end = self.table.block_start[beta.degree() as usize + 1];
        let mut acc = T::zero();
        for ia in 0..end {
            let a = self.table.entry(ia, ib);
            if a != T::zero() {
                acc += self.c[ia].clone() * a * d[self.table.indices[ia].degree() as usize].clone();
            }
        }
        acc * beta.factorial_in::<T>()
    }

    /// Truncated `H(t; s) = Σ_{|β| ≤ degmax} m_β(t) s^β / β!`.
    pub fn mgf(&self, s: &[f64], t: f64, degmax: u32) -> Result<T> {
        if s.len() != self.table.dim || degmax > self.table.degmax {
            return Err(Error::InvalidArgument("mgf argument does not match the table".into()));
        }
        let s: Vec<T> = s.iter().map(|&x| T::from_f64(x)).collect();
        let d = decays::<T>(degmax as usize, t);
        let mut acc = T::zero();
        for ib in 0..self.table.block_start[degmax as usize + 1] {
            let beta = &self.table.indices[ib];
            acc += self.moment_with(ib, &d) * beta.monomial(&s) / beta.factorial_in::<T>();
        }
        Ok(acc)
    }

    /// `max_β |m_β(0) − p^β|`.
    pub fn reconstruction_residual(&self) -> f64 {
        let d = decays::<T>(self.table.degmax as usize, 0.0);
        (0..self.table.indices.len())
            .map(|ib| (self.moment_with(ib, &d) - self.table.indices[ib].monomial(&self.p)).to_f64().abs())
            .fold(0.0, f64::max)
    }
}

fn validate_frequencies<T: Scalar>(p: &[T], dim: usize) -> Result<()> {
    if p.len() != dim {
        return Err(Error::InvalidArgument(format!("expected {dim} frequencies, got {}", p.len())));
    }
    let total = p.iter().fold(T::zero(), |acc, x| acc + x.clone());
    if p.iter().any(|x| *x < T::zero()) || total > T::one() {
        return Err(Error::InvalidArgument("frequencies must be non-negative with sum ≤ 1".into()));
    }
    Ok(())
}
