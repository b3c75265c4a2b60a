//! Multi-indices and the simplex lattice of allele counts.
//!
//! Ordering convention used everywhere in the crate: graded lexicographic,
//! i.e. by total degree first and, within one degree, by *decreasing*
//! lexicographic order of the component vector. For `K = 2` and degree
//! at most 2 this gives `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exponent vector `α ∈ ℕ₀^K`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("multi-index needs at least one component".into()));
        }
        Ok(MultiIndex(components))
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim.max(1)])
    }

    /// Unit vector `e_u`.
    pub fn unit(dim: usize, u: usize) -> Self {
        let mut v = vec![0; dim];
        v[u] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α!` as an integer; overflow is reported rather than wrapped.
    pub fn factorial(&self) -> Result<u128> {
        let mut acc: u128 = 1;
        for &a in &self.0 {
            for j in 2..=a as u128 {
                acc = acc.checked_mul(j).ok_or_else(|| Error::Overflow(format!("{self}! exceeds u128")))?;
            }
        }
        Ok(acc)
    }

    /// `α!` in an arbitrary scalar type.
    pub fn factorial_in<T: Scalar>(&self) -> T {
        let mut acc = T::one();
        for &a in &self.0 {
            for j in 2..=a {
                acc *= T::from_i64(j as i64);
            }
        }
        acc
    }

    /// `α − e_u`, defined only when `α_u ≥ 1`.
    pub fn subtract_unit(&self, u: usize) -> Option<Self> {
        let mut v = self.0.clone();
        v[u] = v[u].checked_sub(1)?;
        Some(MultiIndex(v))
    }

    pub fn add_unit(&self, u: usize) -> Self {
        let mut v = self.0.clone();
        v[u] += 1;
        MultiIndex(v)
    }

    /// `x^α` for a point `x`.
    pub fn monomial<T: Scalar>(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim());
        self.0.iter().zip(x).fold(T::one(), |acc, (&a, xi)| acc * xi.powu(a))
    }

    /// Apply the same permutation to the components.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        MultiIndex(perm.iter().map(|&i| self.0[i]).collect())
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Components joined by `:`; the format accepted by [`MultiIndex::from_str`].
impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(':')
            .map(|p| p.trim().parse::<u32>().map_err(|e| Error::InvalidArgument(format!("bad multi-index {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        MultiIndex::new(parts)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        assert!(!v.is_empty(), "multi-index needs at least one component");
        MultiIndex(v)
    }
}

/// Serialized as the `a:b` string form.
impl serde::Serialize for MultiIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Total degree `|α|`.
pub fn degree(alpha: &MultiIndex) -> u32 {
    alpha.degree()
}

/// `α!`.
pub fn multi_factorial(alpha: &MultiIndex) -> Result<u128> {
    alpha.factorial()
}

/// All `α ∈ ℕ₀^K` with `|α| ≤ max_degree`, in graded lexicographic order.
pub fn graded_enumerate(dim: usize, max_degree: u32) -> Vec<MultiIndex> {
    assert!(dim >= 1, "dimension must be at least 1");
    let mut out = Vec::new();
    let mut buf = vec![0u32; dim];
    for d in 0..=max_degree {
        compositions(d, 0, &mut buf, &mut out);
    }
    out
}

/// Every exponent vector of exact degree `d`, in decreasing lexicographic order.
pub fn graded_block(dim: usize, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut buf = vec![0u32; dim];
    compositions(d, 0, &mut buf, &mut out);
    out
}

fn compositions(remaining: u32, pos: usize, buf: &mut [u32], out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for a in (0..=remaining).rev() {
        buf[pos] = a;
        compositions(remaining - a, pos + 1, buf, out);
    }
}

/// `C(n, k)` as an exact integer (small arguments only).
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, j| acc * (n - j) as u128 / (j + 1) as u128)
}

/// The lattice `Ω_K^{2N} = { i ∈ ℕ₀^K : Σ i_u ≤ 2N }` of allele-count vectors.
///
/// State `i` corresponds to frequencies `i / 2N` of the first `K` alleles;
/// allele `K + 1` holds the remainder.
#[derive(Clone, Debug)]
pub struct SimplexGrid {
    dim: usize,
    two_n: u32,
    states: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl SimplexGrid {
    pub fn new(dim: usize, two_n: u32) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if two_n == 0 || !two_n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("2N must be a positive even integer, got {two_n}")));
        }
        let states = graded_enumerate(dim, two_n);
        let lookup = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(SimplexGrid { dim, two_n, states, lookup })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn two_n(&self) -> u32 {
        self.two_n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[MultiIndex] {
        &self.states
    }

    pub fn state(&self, idx: usize) -> &MultiIndex {
        &self.states[idx]
    }

    pub fn index_of(&self, state: &MultiIndex) -> Option<usize> {
        self.lookup.get(state).copied()
    }

    /// Frequency vector `i / 2N` of a state.
    pub fn frequencies<T: Scalar>(&self, idx: usize) -> Vec<T> {
        let two_n = self.two_n as i64;
        self.states[idx].components().iter().map(|&c| T::ratio(c as i64, two_n)).collect()
    }

    /// True when only one allele is present, i.e. the state is absorbing.
    pub fn is_vertex(&self, idx: usize) -> bool {
        let s = self.states[idx].components();
        let total: u32 = s.iter().sum();
        (total == 0) || (total == self.two_n && s.iter().filter(|&&c| c > 0).count() == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::from(v.to_vec())
    }

    #[test]
    fn degree_examples() {
        assert_eq!(degree(&mi(&[0, 0])), 0);
        assert_eq!(degree(&mi(&[2, 1])), 3);
        assert_eq!(degree(&mi(&[5])), 5);
    }

    #[test]
    fn factorial_examples() {
        assert_eq!(multi_factorial(&mi(&[0, 0])).unwrap(), 1);
        assert_eq!(multi_factorial(&mi(&[3, 2])).unwrap(), 12);
        assert_eq!(multi_factorial(&mi(&[1, 1, 1])).unwrap(), 1);
    }

    #[test]
    fn factorial_overflow_is_reported() {
        assert!(matches!(multi_factorial(&mi(&[40])), Err(Error::Overflow(_))));
        assert!(multi_factorial(&mi(&[34])).is_ok());
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(graded_enumerate(1, 2), vec![mi(&[0]), mi(&[1]), mi(&[2])]);
        assert_eq!(graded_enumerate(2, 1), vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]);
        let six = graded_enumerate(2, 2);
        assert_eq!(six.len(), 6);
        assert_eq!(six[3..], [mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]);
    }

    #[test]
    fn enumeration_is_sorted_by_ord() {
        let v = graded_enumerate(3, 4);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn subtract_unit_requires_positive_component() {
        assert_eq!(mi(&[2, 0]).subtract_unit(0), Some(mi(&[1, 0])));
        assert_eq!(mi(&[2, 0]).subtract_unit(1), None);
    }

    #[test]
    fn parse_and_display_round_trip() {
        let a: MultiIndex = "3:0:2".parse().unwrap();
        assert_eq!(a, mi(&[3, 0, 2]));
        assert_eq!(a.to_string(), "3:0:2");
        assert!("3:x".parse::<MultiIndex>().is_err());
    }

    #[test]
    fn grid_counts_and_vertices() {
        let g = SimplexGrid::new(2, 4).unwrap();
        assert_eq!(g.len(), 15);
        let v: Vec<_> = (0..g.len()).filter(|&i| g.is_vertex(i)).map(|i| g.state(i).clone()).collect();
        assert_eq!(v, vec![mi(&[0, 0]), mi(&[4, 0]), mi(&[0, 4])]);
        assert!(SimplexGrid::new(2, 3).is_err());
    }

    #[test]
    fn one_dimensional_grid_is_natural_order() {
        let g = SimplexGrid::new(1, 6).unwrap();
        for i in 0..=6u32 {
            assert_eq!(g.index_of(&mi(&[i])), Some(i as usize));
        }
    }
}
