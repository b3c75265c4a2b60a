//! Spectral solution of the two-allele moment-generating-function equation
//! `∂_t H = −(s²/2) ∂²_s H + (s²/2) ∂_s H`.
//!
//! Separating variables gives the spectrum `μ_k = k(k−1)/2` with
//! eigenfunctions `y_k(s) = Σ_n a_n^{(k)} s^n`. The table stores the scaled
//! coefficients `A_n^{(k)} = n!·a_n^{(k)}` together with their limits
//! `Ā^{(k)} = lim_n A_n^{(k)}`, from which all moments, the fixation and
//! extinction probabilities and the mean absorption time follow.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `μ_k = k(k−1)/2`.
pub fn eigenvalue(k: usize) -> f64 {
    (k * k.saturating_sub(1) / 2) as f64
}

fn twice_eigenvalue(k: usize) -> i64 {
    (k * k.saturating_sub(1)) as i64
}

/// `e^{−μ_k t}` for `k = 0..=kmax`, from a single exponential.
pub(crate) fn decays<T: Scalar>(kmax: usize, t: f64) -> Vec<T> {
    let q = T::from_f64(-t).exp();
    let mut out = Vec::with_capacity(kmax + 1);
    let mut d = T::one();
    // e^{−μ_k t} = e^{−μ_{k−1} t} · q^{k−1}
    let mut step = T::one();
    for k in 0..=kmax {
        if k >= 2 {
            step *= q.clone();
            d *= step.clone();
        }
        out.push(d.clone());
    }
    out
}

/// Lower-triangular table `A[n][k] = n!·a_n^{(k)}` for `0 ≤ k ≤ n ≤ nmax`
/// and the limits `Ā^{(k)}` for `k ≤ nmax`.
#[derive(Clone, Debug)]
pub struct EigenTable2<T> {
    nmax: usize,
    rows: Vec<Vec<T>>,
    limits: Vec<T>,
}

impl<T: Scalar> EigenTable2<T> {
    /// Fill the table with the ratio recurrence
    /// `A[n][k] = A[n−1][k] · n(n−1) / (n(n−1) − k(k−1))`, `A[k][k] = k!`.
    ///
    /// The limits use the telescoped tail of the same recurrence: for any
    /// `n ≥ k`, `Π_{m>n} m(m−1)/((m−k)(m+k−1)) = Π_{j<k} (n+j)/(n−j)`,
    /// applied to the last row of the table.
    pub fn build(nmax: usize) -> Result<Self> {
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(nmax + 1);
        rows.push(vec![T::one()]);
        for n in 1..=nmax {
            let prev = &rows[n - 1];
            let nn = twice_eigenvalue(n);
            let mut row = Vec::with_capacity(n + 1);
            row.push(T::zero());
            for (k, a) in prev.iter().enumerate().take(n).skip(1) {
                let kk = twice_eigenvalue(k);
                row.push(a.clone() * T::ratio(nn, nn - kk));
            }
            row.push(prev[n - 1].clone() * T::from_usize(n));
            rows.push(row);
        }

        let last = &rows[nmax];
        let mut limits = Vec::with_capacity(nmax + 1);
        limits.push(T::zero());
        for k in 1..=nmax {
            let mut v = last[k].clone();
            for j in 0..k {
                v *= T::ratio((nmax + j) as i64, (nmax - j) as i64);
            }
            limits.push(v);
        }
        if nmax == 0 {
            limits.clear();
            limits.push(T::zero());
        }

        if let Some(k) = limits.iter().position(|v| !v.is_finite()) {
            return Err(Error::Overflow(format!("limit coefficient k = {k} is not representable in {}", T::NAME)));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Overflow(format!("A table with nmax = {nmax} overflows {}", T::NAME)));
        }
        Ok(EigenTable2 { nmax, rows, limits })
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    /// `A_n^{(k)}`; zero above the diagonal.
    pub fn coefficient(&self, n: usize, k: usize) -> T {
        if k > n {
            T::zero()
        } else {
            self.rows[n][k].clone()
        }
    }

    pub fn row(&self, n: usize) -> &[T] {
        &self.rows[n]
    }

    /// `Ā^{(k)}`.
    pub fn limit(&self, k: usize) -> &T {
        &self.limits[k]
    }

    /// The unscaled series coefficient `a_n^{(k)} = A_n^{(k)} / n!`.
    pub fn series_coefficient(&self, n: usize, k: usize) -> T {
        self.coefficient(n, k) / self.rows[n][n].clone()
    }

    /// Extend the ratio recurrence past `nmax` until successive values
    /// differ by less than `rel_tol` relative. The truncation bias of this
    /// stopping rule is of order `k²/n` relative, so it is a slow cross-check
    /// on [`limit`](Self::limit) rather than the way limits are computed.
    pub fn extend_limit(&self, k: usize, rel_tol: f64, max_iter: usize) -> Result<f64> {
        if k > self.nmax {
            return Err(Error::InvalidArgument(format!("k = {k} exceeds nmax = {}", self.nmax)));
        }
        if k <= 1 {
            return Ok(k as f64);
        }
        let kk = twice_eigenvalue(k) as f64;
        let mut v = self.rows[self.nmax][k].to_f64();
        for it in 1..=max_iter {
            let n = (self.nmax + it) as f64;
            let nn = n * (n - 1.0);
            let next = v * nn / (nn - kk);
            if (next - v).abs() < rel_tol * next.abs() {
                return Ok(next);
            }
            v = next;
        }
        Err(Error::LimitNotConverged { k, iterations: max_iter })
    }

    /// Substitute the truncated series `y_k(x) = Σ_{n ≤ nmax} a_n^{(k)} x^n`
    /// into `−x² y'' + x² y' + 2μ_k y` and return the largest coefficient
    /// of the result over orders `0..=nmax`. The order `nmax + 1` term,
    /// produced only by truncation, is not formed.
    pub fn verify_eigenfunction(&self, k: usize, nmax: usize) -> Result<f64> {
        if k > nmax || nmax > self.nmax {
            return Err(Error::InvalidArgument(format!("need k ≤ nmax ≤ {}, got k = {k}, nmax = {nmax}", self.nmax)));
        }
        let y: Vec<T> = (0..=nmax).map(|n| self.series_coefficient(n, k)).collect();
        let dy = derivative(&y);
        let d2y = derivative(&dy);
        let two_mu = T::from_i64(twice_eigenvalue(k));
        let mut worst = 0.0f64;
        for n in 0..=nmax {
            // coefficient of x^n in x²·f is f_{n−2}
            let shifted = |f: &[T]| if n >= 2 { f.get(n - 2).cloned().unwrap_or_else(T::zero) } else { T::zero() };
            let r = -shifted(&d2y) + shifted(&dy) + two_mu.clone() * y[n].clone();
            worst = worst.max(r.to_f64().abs());
        }
        Ok(worst)
    }
}

fn derivative<T: Scalar>(p: &[T]) -> Vec<T> {
    p.iter().enumerate().skip(1).map(|(n, c)| c.clone() * T::from_usize(n)).collect()
}

/// A truncated series together with the magnitude of its last included
/// term, which is the caller's evidence about truncation error.
#[derive(Clone, Debug)]
pub struct SeriesValue<T> {
    pub value: T,
    pub kmax: usize,
    pub last_term: f64,
}

impl<T: Scalar> SeriesValue<T> {
    /// Fail if the last included term exceeds `tol`.
    pub fn within(self, tol: f64) -> Result<Self> {
        if self.last_term > tol {
            Err(Error::TruncationTail { kmax: self.kmax, last_term: self.last_term, tol })
        } else {
            Ok(self)
        }
    }
}

/// Expansion coefficients `c_k` for the initial frequency `p`.
#[derive(Clone, Debug)]
pub struct SpectralSolution2<T> {
    p: T,
    c: Vec<T>,
    table: Arc<EigenTable2<T>>,
}

impl<T: Scalar> SpectralSolution2<T> {
    /// Forward substitution on `Σ_{k≤n} c_k A_n^{(k)} = p^n`, whose
    /// diagonal is `A_n^{(n)} = n!`.
    pub fn solve(p: T, table: Arc<EigenTable2<T>>) -> Result<Self> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::InvalidArgument(format!("frequency {} outside [0, 1]", p.to_f64())));
        }
        if table.nmax < 1 {
            return Err(Error::InvalidArgument("table needs nmax ≥ 1".into()));
        }
        let mut c: Vec<T> = Vec::with_capacity(table.nmax + 1);
        let mut pn = T::one();
        for n in 0..=table.nmax {
            let row = table.row(n);
            let mut s = pn.clone();
            for (ck, a) in c.iter().zip(row) {
                s -= ck.clone() * a.clone();
            }
            c.push(s / row[n].clone());
            pn *= p.clone();
        }
        Ok(SpectralSolution2 { p, c, table })
    }

    pub fn p(&self) -> &T {
        &self.p
    }

    pub fn coefficients(&self) -> &[T] {
        &self.c
    }

    pub fn table(&self) -> &Arc<EigenTable2<T>> {
        &self.table
    }

    pub fn nmax(&self) -> usize {
        self.table.nmax
    }

    /// Solution for the other allele, frequency `1 − p`.
    pub fn complement(&self) -> Result<Self> {
        Self::solve(T::one() - self.p.clone(), Arc::clone(&self.table))
    }

    /// `max_n |Σ_k c_k A_n^{(k)} − p^n|`.
    pub fn reconstruction_residual(&self) -> f64 {
        let mut pn = T::one();
        let mut worst = 0.0f64;
        for n in 0..=self.table.nmax {
            let s = self.c.iter().zip(self.table.row(n)).fold(T::zero(), |acc, (c, a)| acc + c.clone() * a.clone());
            worst = worst.max((s - pn.clone()).to_f64().abs());
            pn *= self.p.clone();
        }
        worst
    }

    /// `m_n(t) = Σ_{k≤n} c_k A_n^{(k)} e^{−μ_k t}`.
    ///
    /// # Panics
    /// If `n` exceeds the table order.
    pub fn moment(&self, n: usize, t: f64) -> T {
        assert!(n <= self.table.nmax, "moment order {n} exceeds nmax {}", self.table.nmax);
        let d = decays::<T>(n, t);
        self.moment_with(n, &d)
    }

    fn moment_with(&self, n: usize, d: &[T]) -> T {
        self.c
            .iter()
            .zip(self.table.row(n))
            .zip(d)
            .fold(T::zero(), |acc, ((c, a), e)| acc + c.clone() * a.clone() * e.clone())
    }

    /// `m_0(t), …, m_nmax(t)`.
    pub fn moments(&self, t: f64) -> Vec<T> {
        let d = decays::<T>(self.table.nmax, t);
        (0..=self.table.nmax).map(|n| self.moment_with(n, &d)).collect()
    }

    /// Truncated `H(t; s) = Σ_{n≤nmax} m_n(t) s^n / n!`.
    pub fn mgf(&self, s: f64, t: f64, nmax: usize) -> T {
        assert!(nmax <= self.table.nmax, "nmax {nmax} exceeds table order {}", self.table.nmax);
        let d = decays::<T>(nmax, t);
        let s = T::from_f64(s);
        let mut term = T::one(); // s^n / n!
        let mut acc = T::zero();
        for n in 0..=nmax {
            if n > 0 {
                term = term * s.clone() / T::from_usize(n);
            }
            acc += self.moment_with(n, &d) * term.clone();
        }
        acc
    }

    /// `P(X_t = 1) = Σ_{k≤kmax} c_k Ā^{(k)} e^{−μ_k t}`, i.e.
    /// `p + Σ_{k=2}^{kmax} …`. The series converges slowly for small `t`;
    /// inspect [`SeriesValue::last_term`] or use [`SeriesValue::within`].
    pub fn fixation_probability(&self, t: f64, kmax: usize) -> SeriesValue<T> {
        assert!(kmax <= self.table.nmax, "kmax {kmax} exceeds table order {}", self.table.nmax);
        let d = decays::<T>(kmax, t);
        let mut value = T::zero();
        let mut last = T::zero();
        for k in 1..=kmax {
            last = self.c[k].clone() * self.table.limit(k).clone() * d[k].clone();
            value += last.clone();
        }
        let last_term = if kmax >= 2 { last.to_f64().abs() } else { 0.0 };
        SeriesValue { value, kmax, last_term }
    }

    /// `P(X_t = 0)`, from the coefficients of the complementary allele.
    pub fn extinction_probability(&self, t: f64, kmax: usize) -> Result<SeriesValue<T>> {
        Ok(self.complement()?.fixation_probability(t, kmax))
    }

    /// `H_t = 2(m_1(t) − m_2(t))`.
    pub fn heterozygosity(&self, t: f64) -> T {
        assert!(self.table.nmax >= 2, "heterozygosity needs nmax ≥ 2");
        let d = decays::<T>(2, t);
        T::from_i64(2) * (self.moment_with(1, &d) - self.moment_with(2, &d))
    }

    /// `E[T] = −Σ_{k=2}^{kmax} (c_k + c'_k) Ā^{(k)} / μ_k`, where `c'` are
    /// the coefficients for `1 − p`.
    pub fn mean_absorption_time(&self, kmax: usize) -> Result<SeriesValue<T>> {
        if kmax < 2 || kmax > self.table.nmax {
            return Err(Error::InvalidArgument(format!("kmax must lie in 2..={}, got {kmax}", self.table.nmax)));
        }
        let other = self.complement()?;
        let mut value = T::zero();
        let mut last = T::zero();
        for k in 2..=kmax {
            last = (self.c[k].clone() + other.c[k].clone()) * self.table.limit(k).clone()
                / T::ratio(twice_eigenvalue(k), 2);
            value -= last.clone();
        }
        Ok(SeriesValue { value, kmax, last_term: last.to_f64().abs() })
    }
}

/// Extinction probability for initial frequency `p`.
pub fn extinction_probability<T: Scalar>(
    p: T,
    t: f64,
    kmax: usize,
    table: Arc<EigenTable2<T>>,
) -> Result<SeriesValue<T>> {
    let other = SpectralSolution2::solve(T::one() - p, table)?;
    Ok(other.fixation_probability(t, kmax))
}

/// Mean time to loss of one allele for initial frequency `p`.
pub fn mean_absorption_time<T: Scalar>(p: T, kmax: usize, table: Arc<EigenTable2<T>>) -> Result<SeriesValue<T>> {
    SpectralSolution2::solve(p, table)?.mean_absorption_time(kmax)
}

/// Long-time distribution `(mass at 0, mass at 1) = (1 − p, p)`.
pub fn stationary_distribution(p: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("frequency {p} outside [0, 1]")));
    }
    Ok((1.0 - p, p))
}
