//! Helpers shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twonn::generators::{generate, GeneratorKind, GeneratorSpec};
use twonn::{two_nearest, NeighborInfo, Search, ShellSample};

/// Two-sided Kolmogorov-Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic with the usual small-sample
/// correction `lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) * D`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    ks_p_value(ks_statistic(sample, cdf), sample.len())
}

/// Outcome of the three law checks on one torus sample.
#[derive(Debug, Clone, Copy)]
pub struct LawPValues {
    pub delta_v1: f64,
    pub delta_v2: f64,
    pub ratio: f64,
}

impl LawPValues {
    pub fn all_above(&self, alpha: f64) -> bool {
        self.delta_v1 > alpha && self.delta_v2 > alpha && self.ratio > alpha
    }
}

/// KS p-values of the shell volumes and their ratio for `n` uniform points
/// on the unit `d`-torus. Each point sees the other `n - 1` points, so the
/// intensity is `n - 1`.
pub fn shell_laws(d: u32, n: usize, seed: u64) -> LawPValues {
    let g =
        generate(&GeneratorSpec::new(GeneratorKind::Hypercube, d, n, seed).with_pbc(true)).unwrap();
    let ni: Vec<NeighborInfo> = two_nearest(&g.points, &g.metric, Search::Auto).unwrap();
    let density = (n - 1) as f64;
    let shells: Vec<ShellSample> = ni.iter().map(|x| ShellSample::new(x, d, density)).collect();
    let v1: Vec<f64> = shells.iter().map(|s| s.delta_v1).collect();
    let v2: Vec<f64> = shells.iter().map(|s| s.delta_v2).collect();
    let r: Vec<f64> = shells.iter().map(|s| s.ratio).collect();
    let exp_cdf = |v: f64| -(-density * v).exp_m1();
    LawPValues {
        delta_v1: ks_test(&v1, exp_cdf),
        delta_v2: ks_test(&v2, exp_cdf),
        ratio: ks_test(&r, ShellSample::ratio_cdf),
    }
}

/// `n` direct draws from the Pareto law `f(mu) = d mu^(-d-1)`.
pub fn pareto_mu(n: usize, d: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / d))
        .collect()
}

/// `mu_(i) = (1 - i/N)^(-1/d)` for `i = 1..N-1`, plus one larger value in
/// the `F = 1` slot, which is never fitted.
pub fn pareto_quantiles(n: usize, d: f64) -> Vec<f64> {
    let q = |i: f64| (1.0 - i / n as f64).powf(-1.0 / d);
    (1..n)
        .map(|i| q(i as f64))
        .chain([q(n as f64 - 0.5)])
        .collect()
}

/// Neighbor records with `r1 = 1` and `r2 = mu`.
pub fn from_mu(mu: &[f64]) -> Vec<NeighborInfo> {
    mu.iter()
        .map(|&m| NeighborInfo {
            r1: 1.0,
            r2: m,
            idx1: 0,
            idx2: 1,
        })
        .collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
