//! Discrete-generation Wright-Fisher sampler.
//!
//! Each replicate owns a ChaCha8 stream selected by its index, so output is
//! bit-identical for a given seed whatever the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::Statistics;

use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;

/// Generator name recorded in output metadata.
pub const RNG_NAME: &str = "ChaCha8Rng(seed_from_u64(seed), stream = replicate index)";

/// Largest moment degree accepted by [`Samples::moments`].
pub const MAX_ORDER: u32 = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub two_n: u32,
    /// Initial counts of the first `K` alleles.
    pub i0: Vec<u32>,
    pub generations: u32,
    pub replicates: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn dim(&self) -> usize {
        self.i0.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.two_n == 0 {
            return Err(Error::InvalidArgument("2N must be positive".into()));
        }
        if self.i0.is_empty() {
            return Err(Error::InvalidArgument("i0 needs at least one component".into()));
        }
        let total: u64 = self.i0.iter().map(|&c| c as u64).sum();
        if total > self.two_n as u64 {
            return Err(Error::InvalidArgument(format!("Σ i0 = {total} exceeds 2N = {}", self.two_n)));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        Ok(())
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({ "rng": RNG_NAME, "seed": self.seed, "config": self })
    }
}

/// One Wright-Fisher generation: multinomial resampling by sequential
/// binomials.
fn next_generation(counts: &mut [u32], two_n: u32, rng: &mut ChaCha8Rng) {
    let mut left = two_n as u64;
    let mut mass: u64 = two_n as u64;
    for c in counts.iter_mut() {
        let share = *c as u64;
        let draw = if left == 0 || share == 0 {
            0
        } else if share >= mass {
            left
        } else {
            Binomial::new(left, share as f64 / mass as f64).expect("probability in [0, 1]").sample(rng)
        };
        mass -= share;
        left -= draw;
        *c = draw as u32;
    }
}

/// Replicate states at each sampled generation.
#[derive(Clone, Debug)]
pub struct Samples {
    two_n: u32,
    dim: usize,
    replicates: usize,
    generations: Vec<u32>,
    /// `counts[g][r·K + u]`.
    counts: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub generation: u32,
    /// Diffusion time `g / 2N`.
    pub t: f64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub generation: u32,
    pub t: f64,
    pub order: MultiIndex,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixationEstimate {
    pub generation: u32,
    pub t: f64,
    pub fixed_fraction: f64,
    pub lost_fraction: f64,
    pub fixed_std_error: f64,
    pub lost_std_error: f64,
}

fn summarize(values: &[f64]) -> (f64, f64) {
    let mean = values.mean();
    let se = if values.len() > 1 { values.std_dev() / (values.len() as f64).sqrt() } else { 0.0 };
    (mean, se)
}

/// Run `cfg.replicates` paths and record them at `sample_times`
/// (generation counts, each ≤ `cfg.generations`).
pub fn simulate(cfg: &McConfig, sample_times: &[u32]) -> Result<Samples> {
    cfg.validate()?;
    let mut times = sample_times.to_vec();
    times.sort_unstable();
    times.dedup();
    if let Some(&last) = times.last() {
        if last > cfg.generations {
            return Err(Error::InvalidArgument(format!(
                "sample time {last} beyond the horizon of {} generations",
                cfg.generations
            )));
        }
    }
    let dim = cfg.dim();
    let paths: Vec<Vec<u32>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let mut state = cfg.i0.clone();
            let mut out = Vec::with_capacity(times.len() * dim);
            let mut g = 0;
            for &target in &times {
                while g < target {
                    next_generation(&mut state, cfg.two_n, &mut rng);
                    g += 1;
                }
                out.extend_from_slice(&state);
            }
            out
        })
        .collect();
    let counts = (0..times.len())
        .map(|ti| paths.iter().flat_map(|p| p[ti * dim..(ti + 1) * dim].iter().copied()).collect())
        .collect();
    Ok(Samples { two_n: cfg.two_n, dim, replicates: cfg.replicates, generations: times, counts })
}

impl Samples {
    pub fn generations(&self) -> &[u32] {
        &self.generations
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    fn t(&self, g: u32) -> f64 {
        g as f64 / self.two_n as f64
    }

    fn per_replicate(&self, ti: usize, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let scale = self.two_n as f64;
        self.counts[ti]
            .chunks(self.dim)
            .map(|c| {
                let x: Vec<f64> = c.iter().map(|&v| v as f64 / scale).collect();
                f(&x)
            })
            .collect()
    }

    /// Empirical `E[X^β]` with standard errors, for every sampled time.
    pub fn moments(&self, orders: &[MultiIndex]) -> Result<Vec<MomentEstimate>> {
        for o in orders {
            if o.dim() != self.dim || o.degree() > MAX_ORDER {
                return Err(Error::InvalidArgument(format!(
                    "order {o} must have {} components and degree ≤ {MAX_ORDER}",
                    self.dim
                )));
            }
        }
        let mut out = Vec::with_capacity(orders.len() * self.generations.len());
        for (ti, &g) in self.generations.iter().enumerate() {
            for o in orders {
                let (mean, std_error) = summarize(&self.per_replicate(ti, |x| o.monomial(x)));
                out.push(MomentEstimate { generation: g, t: self.t(g), order: o.clone(), mean, std_error });
            }
        }
        Ok(out)
    }

    /// Empirical heterozygosity `1 − Σ_u x_u²` over all `K + 1` alleles.
    pub fn heterozygosity(&self) -> Vec<Estimate> {
        self.generations
            .iter()
            .enumerate()
            .map(|(ti, &g)| {
                let h = self.per_replicate(ti, |x| {
                    let rest = 1.0 - x.iter().sum::<f64>();
                    1.0 - x.iter().map(|v| v * v).sum::<f64>() - rest * rest
                });
                let (mean, std_error) = summarize(&h);
                Estimate { generation: g, t: self.t(g), mean, std_error }
            })
            .collect()
    }

    /// Fractions of replicates fixed at `2N` and lost at `0` (two alleles).
    pub fn fixation(&self) -> Result<Vec<FixationEstimate>> {
        if self.dim != 1 {
            return Err(Error::InvalidArgument("fixation fractions need two alleles (K = 1)".into()));
        }
        let n = self.replicates as f64;
        let se = |f: f64| if self.replicates > 1 { (f * (1.0 - f) / (n - 1.0)).sqrt() } else { 0.0 };
        Ok(self
            .generations
            .iter()
            .zip(&self.counts)
            .map(|(&g, c)| {
                let fixed = c.iter().filter(|&&v| v == self.two_n).count() as f64 / n;
                let lost = c.iter().filter(|&&v| v == 0).count() as f64 / n;
                FixationEstimate {
                    generation: g,
                    t: self.t(g),
                    fixed_fraction: fixed,
                    lost_fraction: lost,
                    fixed_std_error: se(fixed),
                    lost_std_error: se(lost),
                }
            })
            .collect())
    }
}

pub fn simulate_empirical_moments(
    cfg: &McConfig,
    orders: &[MultiIndex],
    sample_times: &[u32],
) -> Result<Vec<MomentEstimate>> {
    simulate(cfg, sample_times)?.moments(orders)
}

pub fn empirical_fixation(cfg: &McConfig, sample_times: &[u32]) -> Result<Vec<FixationEstimate>> {
    simulate(cfg, sample_times)?.fixation()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(two_n: u32, i0: Vec<u32>, generations: u32, replicates: usize) -> McConfig {
        McConfig { two_n, i0, generations, replicates, seed: 7 }
    }

    #[test]
    fn validation() {
        assert!(cfg(10, vec![11], 5, 10).validate().is_err());
        assert!(cfg(10, vec![6, 5], 5, 10).validate().is_err());
        assert!(cfg(10, vec![5], 5, 0).validate().is_err());
        assert!(cfg(10, vec![5], 5, 1).validate().is_ok());
        assert!(simulate(&cfg(10, vec![5], 5, 2), &[6]).is_err());
    }

    #[test]
    fn absorbed_at_zero() {
        let m =
            simulate_empirical_moments(&cfg(20, vec![0], 30, 50), &[MultiIndex::from(vec![1])], &[0, 10, 30]).unwrap();
        assert!(m.iter().all(|e| e.mean == 0.0 && e.std_error == 0.0));
    }

    #[test]
    fn fixed_at_one() {
        let f = empirical_fixation(&cfg(20, vec![20], 30, 50), &[5, 30]).unwrap();
        assert!(f.iter().all(|e| e.fixed_fraction == 1.0 && e.lost_fraction == 0.0));
    }

    #[test]
    fn mean_is_a_martingale() {
        let c = cfg(50, vec![15], 100, 4000);
        for e in simulate_empirical_moments(&c, &[MultiIndex::from(vec![1])], &[1, 25, 100]).unwrap() {
            assert!((e.mean - 0.3).abs() < 4.0 * e.std_error, "{e:?}");
        }
    }

    #[test]
    fn multinomial_conserves_and_tracks_means() {
        let c = cfg(30, vec![10, 5], 40, 3000);
        let s = simulate(&c, &[40]).unwrap();
        assert!(s.counts[0].chunks(2).all(|p| p[0] + p[1] <= 30));
        let m = s.moments(&[MultiIndex::from(vec![1, 0]), MultiIndex::from(vec![0, 1])]).unwrap();
        assert!((m[0].mean - 1.0 / 3.0).abs() < 4.0 * m[0].std_error);
        assert!((m[1].mean - 1.0 / 6.0).abs() < 4.0 * m[1].std_error);
        assert!(s.fixation().is_err());
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let c = cfg(40, vec![13], 60, 500);
        let a = simulate(&c, &[20, 60]).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate(&c, &[20, 60]).unwrap());
        assert_eq!(a.counts, b.counts);
    }

    #[test]
    fn heterozygosity_decays_geometrically() {
        let c = cfg(40, vec![20], 40, 5000);
        for e in simulate(&c, &[10, 40]).unwrap().heterozygosity() {
            let expected = 0.5 * (1.0 - 1.0 / 40.0f64).powi(e.generation as i32);
            assert!((e.mean - expected).abs() < 4.0 * e.std_error, "{e:?}");
        }
    }

    #[test]
    fn order_bounds() {
        let s = simulate(&cfg(10, vec![5], 1, 3), &[1]).unwrap();
        assert!(s.moments(&[MultiIndex::from(vec![7])]).is_err());
        assert!(s.moments(&[MultiIndex::from(vec![1, 1])]).is_err());
    }
}
