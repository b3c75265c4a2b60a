//! Finite-population master equation `dP/dt = P·B` and its solution
//! `P(t) = e^{Bt}`.
//!
//! Two generators are built on the count lattice `{0, …, 2N}`:
//!
//! * scheme a ([`build_rate_implicit`]): each row is fixed by the moment
//!   conditions `Σ_k (k/2N)^n B(i,k) = μ_n ((i/2N)^{n−1} − (i/2N)^n)` for
//!   `n = 0..=2N`, so the moments of `P(t)` obey the diffusion moment
//!   hierarchy exactly. Time is diffusion time.
//! * scheme b ([`build_rate_wf`]): the Wright-Fisher binomial kernel minus
//!   the identity. Time is (roughly) generations.
//!
//! [`build_rate_implicit_k`] is the multi-allele analogue of scheme a on the
//! simplex lattice `Ω_K^{2N}`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use log::warn;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::linalg::{expm, expm_taylor, solve_vandermonde, Lu, Matrix};
use crate::multi_index::{graded_enumerate, MultiIndex, SimplexGrid};
use crate::scalar::{BigFloat, Rational, Scalar};

/// Working precision of the fallback exponential for scheme-a generators,
/// whose `e^{Bt}` cancels catastrophically in `f64` beyond `2N ≈ 20`.
pub type Wide = BigFloat<256>;

/// Largest `2N` accepted by [`build_rate_wf`].
pub const WF_MAX_TWO_N: u32 = 2048;
/// Largest `2N` for the scheme-a build in floating point.
pub const IMPLICIT_FLOAT_MAX_TWO_N: u32 = 32;
/// Largest `2N` for the scheme-a build in exact rational arithmetic.
pub const IMPLICIT_EXACT_MAX_TWO_N: u32 = 64;
/// Largest lattice size for the multi-allele scheme-a build.
pub const IMPLICIT_K_MAX_STATES: usize = 500;
/// Residual above which a floating-point scheme-a build is redone exactly.
pub const IMPLICIT_RESIDUAL_LIMIT: f64 = 1e-8;

const SEMIGROUP_TOL: f64 = 1e-8;
const ROW_SUM_TOL: f64 = 1e-10;
const SIGNED_ROW_SUM_TOL: f64 = 1e-8;
const CLAMP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Scheme {
    #[serde(rename = "implicit-a")]
    ImplicitA,
    #[serde(rename = "wright-fisher-b")]
    WrightFisherB,
    #[serde(rename = "implicit-K")]
    ImplicitK,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ImplicitA => "implicit-a",
            Scheme::WrightFisherB => "wright-fisher-b",
            Scheme::ImplicitK => "implicit-K",
        }
    }

    pub fn time_unit(self) -> TimeUnit {
        match self {
            Scheme::WrightFisherB => TimeUnit::Generation,
            _ => TimeUnit::Diffusion,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Diffusion,
    Generation,
}

/// Arithmetic used to solve the moment-condition systems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    /// `f64`, falling back to exact arithmetic when the residual check fails.
    Float,
    #[default]
    Exact,
}

/// Diffusion time corresponding to `t` generations.
pub fn generations_to_diffusion(t: f64, two_n: u32) -> f64 {
    t / two_n as f64
}

/// Generations corresponding to diffusion time `t`.
pub fn diffusion_to_generations(t: f64, two_n: u32) -> f64 {
    t * two_n as f64
}

#[derive(Clone, Debug)]
pub struct RateMatrix {
    scheme: Scheme,
    grid: Arc<SimplexGrid>,
    entries: Matrix<f64>,
    /// Exact entries, kept when a scheme-a build ran in rational arithmetic.
    exact: Option<Arc<Matrix<Rational>>>,
}

impl RateMatrix {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn two_n(&self) -> u32 {
        self.grid.two_n()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn time_unit(&self) -> TimeUnit {
        self.scheme.time_unit()
    }

    pub fn grid(&self) -> &Arc<SimplexGrid> {
        &self.grid
    }

    pub fn entries(&self) -> &Matrix<f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Exact entries of a scheme-a generator, rebuilding them if the matrix
    /// was assembled in floating point.
    pub fn exact_entries(&self) -> Result<Arc<Matrix<Rational>>> {
        if let Some(e) = &self.exact {
            return Ok(e.clone());
        }
        let rebuilt = match self.scheme {
            Scheme::ImplicitA => build_rate_implicit(self.two_n(), Arithmetic::Exact)?,
            Scheme::ImplicitK => build_rate_implicit_k(self.dim(), self.two_n(), Arithmetic::Exact)?,
            Scheme::WrightFisherB => {
                return Err(Error::InvalidArgument("the Wright-Fisher generator has no exact form".into()))
            }
        };
        Ok(rebuilt.exact.expect("exact build keeps its entries"))
    }

    /// Largest `|Σ_k B(i,k)|` over rows.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.len()).map(|i| self.entries.row(i).iter().sum::<f64>().abs()).fold(0.0, f64::max)
    }

    fn meta(&self) -> serde_json::Value {
        serde_json::json!({
            "scheme": self.scheme,
            "twoN": self.two_n(),
            "K": self.dim(),
            "time_unit": self.time_unit(),
        })
    }

    /// CSV export: a `#` JSON metadata line, a header of state labels, then
    /// one line per row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_matrix_csv(w, &self.meta(), &self.grid, &self.entries)
    }
}

/// Scheme b: `B(i,k) = C(2N,k) x^k (1−x)^{2N−k} − δ_{ik}` with `x = i/2N`.
/// The binomial terms are evaluated in log space.
pub fn build_rate_wf(two_n: u32) -> Result<RateMatrix> {
    if two_n > WF_MAX_TWO_N {
        return Err(Error::InvalidArgument(format!("2N = {two_n} exceeds the cap {WF_MAX_TWO_N}")));
    }
    let grid = Arc::new(SimplexGrid::new(1, two_n)?);
    let m = two_n as u64;
    let n = grid.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            if i == 0 || i == n - 1 {
                return row;
            }
            let x = i as f64 / two_n as f64;
            let (lx, ly) = (x.ln(), (-x).ln_1p());
            for (k, v) in row.iter_mut().enumerate() {
                let k64 = k as u64;
                *v = (ln_binomial(m, k64) + k as f64 * lx + (m - k64) as f64 * ly).exp();
            }
            row[i] -= 1.0;
            row
        })
        .collect();
    Ok(RateMatrix { scheme: Scheme::WrightFisherB, grid, entries: Matrix::from_rows(rows)?, exact: None })
}

fn implicit_rows<T: Scalar>(two_n: u32) -> Result<Vec<Vec<T>>> {
    let nodes: Vec<T> = (0..=two_n).map(|k| T::ratio(k as i64, two_n as i64)).collect();
    nodes
        .par_iter()
        .map(|x| {
            let mut rhs = vec![T::zero(); nodes.len()];
            let mut prev = T::one();
            for (n, r) in rhs.iter_mut().enumerate().skip(1) {
                let cur = prev.clone() * x.clone();
                *r = T::ratio((n * (n - 1)) as i64, 2) * (prev - cur.clone());
                prev = cur;
            }
            solve_vandermonde(&nodes, &rhs)
        })
        .collect()
}

/// Largest absolute violation of the scheme-a moment conditions.
fn implicit_residual(two_n: u32, rows: &[Vec<f64>]) -> f64 {
    let m = two_n as usize;
    let mut worst = 0.0f64;
    for (i, row) in rows.iter().enumerate() {
        let x = i as f64 / two_n as f64;
        for n in 0..=m {
            let lhs: f64 = row.iter().enumerate().map(|(k, b)| (k as f64 / two_n as f64).powi(n as i32) * b).sum();
            let rhs = if n == 0 { 0.0 } else { (n * (n - 1)) as f64 / 2.0 * (x.powi(n as i32 - 1) - x.powi(n as i32)) };
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// Scheme a, built row by row from `2N + 1` moment conditions (a
/// Vandermonde system on the nodes `k/2N`).
pub fn build_rate_implicit(two_n: u32, arith: Arithmetic) -> Result<RateMatrix> {
    let grid = Arc::new(SimplexGrid::new(1, two_n)?);
    let cap = match arith {
        Arithmetic::Float => IMPLICIT_FLOAT_MAX_TWO_N,
        Arithmetic::Exact => IMPLICIT_EXACT_MAX_TWO_N,
    };
    if two_n > cap {
        return Err(Error::InvalidArgument(format!("2N = {two_n} exceeds the {arith:?} cap {cap}")));
    }
    let exact = || -> Result<Matrix<Rational>> { Matrix::from_rows(implicit_rows::<Rational>(two_n)?) };
    let (entries, exact) = match arith {
        Arithmetic::Float => {
            let rows = implicit_rows::<f64>(two_n)?;
            let residual = implicit_residual(two_n, &rows);
            if residual > IMPLICIT_RESIDUAL_LIMIT {
                warn!("scheme-a build at 2N = {two_n}: residual {residual:.3e}, redoing in exact arithmetic");
                let e = exact()?;
                (e.to_f64(), Some(Arc::new(e)))
            } else {
                (Matrix::from_rows(rows)?, None)
            }
        }
        Arithmetic::Exact => {
            let e = exact()?;
            (e.to_f64(), Some(Arc::new(e)))
        }
    };
    Ok(RateMatrix { scheme: Scheme::ImplicitA, grid, entries, exact })
}

/// Right-hand side `−μ_{|α|} x^α + Σ_u μ_{α_u} x^{α−e_u}`.
fn implicit_k_rhs<T: Scalar>(alpha: &MultiIndex, x: &[T]) -> T {
    let d = alpha.degree() as i64;
    let mut v = -(T::ratio(d * (d - 1), 2) * alpha.monomial(x));
    for (u, &a) in alpha.components().iter().enumerate() {
        if a >= 2 {
            let lower = alpha.subtract_unit(u).expect("α_u ≥ 2");
            v += T::ratio(a as i64 * (a as i64 - 1), 2) * lower.monomial(x);
        }
    }
    v
}

/// Returns `X` with `X[k][i] = B(i,k)`.
fn implicit_k_solution<T: Scalar>(grid: &SimplexGrid) -> Result<(Matrix<T>, Matrix<T>, Matrix<T>)> {
    let n = grid.len();
    let alphas = graded_enumerate(grid.dim(), grid.two_n());
    let freqs: Vec<Vec<T>> = (0..n).map(|k| grid.frequencies::<T>(k)).collect();
    let vander = Matrix::from_rows(alphas.iter().map(|a| freqs.iter().map(|z| a.monomial(z)).collect()).collect())?;
    let rhs = Matrix::from_rows(alphas.iter().map(|a| freqs.iter().map(|x| implicit_k_rhs(a, x)).collect()).collect())?;
    let x = Lu::new(vander.clone())?.solve_matrix(&rhs);
    Ok((vander, rhs, x))
}

/// Multi-allele scheme a on `Ω_K^{2N}`: every row satisfies the moment
/// conditions for all `α ∈ Ω_K^{2N}`, one multivariate Vandermonde system
/// shared by all rows.
pub fn build_rate_implicit_k(dim: usize, two_n: u32, arith: Arithmetic) -> Result<RateMatrix> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("multi-allele build supports K ≤ 3, got {dim}")));
    }
    let grid = Arc::new(SimplexGrid::new(dim, two_n)?);
    if grid.len() > IMPLICIT_K_MAX_STATES {
        return Err(Error::InvalidArgument(format!("|Ω| = {} exceeds the cap {IMPLICIT_K_MAX_STATES}", grid.len())));
    }
    let exact = || -> Result<Matrix<Rational>> { Ok(transpose(&implicit_k_solution::<Rational>(&grid)?.2)) };
    let (entries, exact) = match arith {
        Arithmetic::Float => {
            let (v, r, x) = implicit_k_solution::<f64>(&grid)?;
            let residual = v.matmul(&x).sub(&r).max_abs();
            if residual > IMPLICIT_RESIDUAL_LIMIT {
                warn!("multi-allele build at K = {dim}, 2N = {two_n}: residual {residual:.3e}, redoing exactly");
                let e = exact()?;
                (e.to_f64(), Some(Arc::new(e)))
            } else {
                (transpose(&x), None)
            }
        }
        Arithmetic::Exact => {
            let e = exact()?;
            (e.to_f64(), Some(Arc::new(e)))
        }
    };
    Ok(RateMatrix { scheme: Scheme::ImplicitK, grid, entries, exact })
}

fn transpose<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(x.cols(), x.rows());
    for i in 0..x.rows() {
        for k in 0..x.cols() {
            out[(k, i)] = x[(i, k)].clone();
        }
    }
    out
}

/// `P(t) = e^{Bt}` together with the checks applied to it.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    scheme: Scheme,
    grid: Arc<SimplexGrid>,
    p: Matrix<f64>,
    /// The same matrix in [`Wide`] precision, when it had to be computed so.
    wide: Option<Matrix<Wide>>,
    t: f64,
    min_entry: f64,
}

impl TransitionMatrix {
    pub fn matrix(&self) -> &Matrix<f64> {
        &self.p
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn grid(&self) -> &Arc<SimplexGrid> {
        &self.grid
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.p.row(i)
    }

    /// Smallest entry before any clamping. Scheme-a matrices are not
    /// stochastic in general and this can be well below zero.
    pub fn min_entry(&self) -> f64 {
        self.min_entry
    }

    /// True when `P(t)` was computed in [`Wide`] precision.
    pub fn is_wide(&self) -> bool {
        self.wide.is_some()
    }

    /// `Σ_j (j/2N)^β P(t, i, j)`, summed in [`Wide`] precision when
    /// available (scheme-a rows can have entries far larger than their
    /// moments).
    pub fn moment(&self, i: usize, beta: &MultiIndex) -> f64 {
        match &self.wide {
            Some(w) => {
                let row = w.row(i);
                (0..self.grid.len())
                    .fold(Wide::zero(), |acc, j| {
                        acc + beta.monomial(&self.grid.frequencies::<Wide>(j)) * row[j].clone()
                    })
                    .to_f64()
            }
            None => distribution_moments(self.p.row(i), beta, &self.grid),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let meta = serde_json::json!({
            "scheme": self.scheme,
            "twoN": self.grid.two_n(),
            "K": self.grid.dim(),
            "time_unit": self.scheme.time_unit(),
            "t": self.t,
            "min_entry": self.min_entry,
        });
        write_matrix_csv(w, &meta, &self.grid, &self.p)
    }
}

/// Exponentiate `B t`. The result is checked against `P(t/2)²`; scheme-b
/// rows are clamped to probability vectors, other schemes only have their
/// row sums checked.
///
/// A scheme-a exponential that fails its checks in `f64` is recomputed from
/// the exact generator in [`Wide`] precision.
pub fn transition_matrix(b: &RateMatrix, t: f64) -> Result<TransitionMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be finite and ≥ 0, got {t}")));
    }
    match transition_f64(b, t) {
        Err(e) if b.scheme != Scheme::WrightFisherB => {
            warn!("{} exponential at 2N = {}, t = {t} failed in f64 ({e}); using wide precision", b.scheme, b.two_n());
            transition_wide(b, t)
        }
        r => r,
    }
}

fn transition_wide(b: &RateMatrix, t: f64) -> Result<TransitionMatrix> {
    let exact = b.exact_entries()?;
    let bw = exact.map(Wide::from_rational);
    let tw = Wide::from_f64(t);
    let p = expm_taylor(&bw.scale(&tw))?;
    if t > 0.0 {
        let half = expm_taylor(&bw.scale(&(tw / Wide::from_i64(2))))?;
        let defect = half.matmul(&half).sub(&p).max_abs() / p.max_abs().max(1.0);
        if defect > SEMIGROUP_TOL {
            return Err(Error::AccuracyContract { defect });
        }
    }
    for i in 0..p.rows() {
        let sum = p.row(i).iter().fold(Wide::zero(), |acc, v| acc + v.clone()).to_f64();
        if (sum - 1.0).abs() > SIGNED_ROW_SUM_TOL {
            return Err(Error::RowSum { row: i, sum });
        }
    }
    let pf = p.to_f64();
    let min_entry = (0..pf.rows()).flat_map(|i| pf.row(i).to_vec()).fold(f64::INFINITY, f64::min);
    Ok(TransitionMatrix { scheme: b.scheme, grid: b.grid.clone(), p: pf, wide: Some(p), t, min_entry })
}

fn transition_f64(b: &RateMatrix, t: f64) -> Result<TransitionMatrix> {
    let mut p = expm(&b.entries.scale(&t))?;
    if t > 0.0 {
        let half = expm(&b.entries.scale(&(t / 2.0)))?;
        let scale = p.max_abs().max(1.0);
        let defect = half.matmul(&half).sub(&p).max_abs() / scale;
        if defect > SEMIGROUP_TOL {
            return Err(Error::AccuracyContract { defect });
        }
    }
    let n = p.rows();
    let min_entry = (0..n).flat_map(|i| p.row(i).to_vec()).fold(f64::INFINITY, f64::min);
    match b.scheme {
        Scheme::WrightFisherB => {
            for i in 0..n {
                for j in 0..n {
                    let v = p[(i, j)];
                    if v < -CLAMP_TOL {
                        return Err(Error::NegativeProbability { row: i, col: j, value: v });
                    }
                    if v < 0.0 {
                        p[(i, j)] = 0.0;
                    }
                }
                let sum: f64 = p.row(i).iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::RowSum { row: i, sum });
                }
                for j in 0..n {
                    p[(i, j)] /= sum;
                }
            }
        }
        Scheme::ImplicitA | Scheme::ImplicitK => {
            for i in 0..n {
                let sum: f64 = p.row(i).iter().sum();
                if (sum - 1.0).abs() > SIGNED_ROW_SUM_TOL {
                    return Err(Error::RowSum { row: i, sum });
                }
            }
        }
    }
    Ok(TransitionMatrix { scheme: b.scheme, grid: b.grid.clone(), p, wide: None, t, min_entry })
}

/// `Σ_j (j/2N)^β row_j`.
pub fn distribution_moments(row: &[f64], beta: &MultiIndex, grid: &SimplexGrid) -> f64 {
    (0..grid.len()).map(|j| beta.monomial(&grid.frequencies::<f64>(j)) * row[j]).sum()
}

/// Maximum central-moment residual of one degree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CentralMomentResidual {
    pub degree: u32,
    pub max_residual: f64,
}

/// Compare `Σ_z (z−x)^α b(x,z)` with its diffusion limit for every
/// non-absorbing state `x` and `1 ≤ |α| ≤ max_degree`.
///
/// The limit is the covariance `x_u(δ_uv − x_v)` for `α = e_u + e_v` and
/// zero otherwise, divided by `2N` for scheme b (generation time).
pub fn diffusion_limit_residuals(b: &RateMatrix, max_degree: u32) -> Vec<CentralMomentResidual> {
    let grid = &b.grid;
    let dim = grid.dim();
    let time_scale = match b.scheme.time_unit() {
        TimeUnit::Diffusion => 1.0,
        TimeUnit::Generation => grid.two_n() as f64,
    };
    let alphas: Vec<MultiIndex> = graded_enumerate(dim, max_degree).into_iter().filter(|a| a.degree() >= 1).collect();
    let freqs: Vec<Vec<f64>> = (0..grid.len()).map(|k| grid.frequencies::<f64>(k)).collect();
    let mut worst = vec![0.0f64; max_degree as usize + 1];
    for (i, x) in freqs.iter().enumerate() {
        if grid.is_vertex(i) {
            continue;
        }
        for alpha in &alphas {
            let mut sum = 0.0;
            for (k, z) in freqs.iter().enumerate() {
                let shifted: Vec<f64> = z.iter().zip(x).map(|(z, x)| z - x).collect();
                sum += alpha.monomial(&shifted) * b.entries[(i, k)];
            }
            let limit = if alpha.degree() == 2 {
                let nz: Vec<usize> =
                    alpha.components().iter().enumerate().filter(|(_, &a)| a > 0).map(|(u, _)| u).collect();
                let (u, v) = (nz[0], *nz.last().unwrap());
                let delta = if u == v { 1.0 } else { 0.0 };
                x[u] * (delta - x[v]) / time_scale
            } else {
                0.0
            };
            let d = alpha.degree() as usize;
            worst[d] = worst[d].max((sum - limit).abs());
        }
    }
    (1..=max_degree).map(|d| CentralMomentResidual { degree: d, max_residual: worst[d as usize] }).collect()
}

fn write_matrix_csv<W: Write>(mut w: W, meta: &serde_json::Value, grid: &SimplexGrid, m: &Matrix<f64>) -> Result<()> {
    writeln!(w, "# {meta}")?;
    let labels: Vec<String> = grid.states().iter().map(|s| s.to_string()).collect();
    writeln!(w, "state,{}", labels.join(","))?;
    for (i, label) in labels.iter().enumerate() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{label},{}", row.join(","))?;
    }
    Ok(())
}
