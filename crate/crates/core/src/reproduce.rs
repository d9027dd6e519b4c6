//! Benchmark protocols: single-dataset fits, convergence with sample size
//! over fresh instances, and block scans of noisy manifolds.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::estimator::{compute_mu, empirical_cdf, estimate_id, Estimate, EstimatorOptions};
use crate::generators::{generate, GeneratorKind, GeneratorSpec};
use crate::io::{self, fmt_f64, FitExport};
use crate::neighbors::{two_nearest, Search};
use crate::scan::{default_block_sizes, scan, ScanCurve, ScanInput};

pub const FIG1_N: usize = 2500;
pub const FIG2_SIZES: [usize; 10] = [20, 50, 100, 200, 500, 1000, 2500, 5000, 10000, 25000];
pub const FIG2_DIMS: [u32; 3] = [2, 5, 10];
pub const FIG2_KINDS: [GeneratorKind; 4] = [
    GeneratorKind::Hypercube,
    GeneratorKind::Gaussian,
    GeneratorKind::CauchyNorm,
    GeneratorKind::Hypersphere,
];
pub const FIG3_N: usize = 50000;
pub const FIG3_NOISE_DIMS: usize = 20;
pub const FIG3_SIGMAS: [f64; 3] = [0.0, 1e-4, 2e-4];
pub const FIG3_MIN_BLOCK: usize = 20;

/// Hypercube in 14 dimensions with pbc, Swiss roll, and Cauchy in 20
/// dimensions, each with `FIG1_N` points.
pub fn fig1_specs(seed: u64) -> [GeneratorSpec; 3] {
    [
        GeneratorSpec::new(GeneratorKind::Hypercube, 14, FIG1_N, seed).with_pbc(true),
        GeneratorSpec::new(GeneratorKind::SwissRoll, 2, FIG1_N, seed),
        GeneratorSpec::new(GeneratorKind::CauchyNorm, 20, FIG1_N, seed),
    ]
}

#[derive(Debug, Clone)]
pub struct FitPanel {
    pub spec: GeneratorSpec,
    pub estimate: Estimate,
    pub fit: FitExport,
}

/// Generates the dataset, estimates and keeps the full CDF for plotting.
pub fn fit_panel(spec: &GeneratorSpec, opts: &EstimatorOptions) -> Result<FitPanel> {
    let g = generate(spec)?;
    let ni = two_nearest(&g.points, &g.metric, Search::Auto)?;
    let estimate = estimate_id(&ni, opts)?;
    let fit = FitExport::from_estimate(
        empirical_cdf(&compute_mu(&ni)),
        estimate.n_used,
        estimate.d_hat,
    );
    Ok(FitPanel {
        spec: *spec,
        estimate,
        fit,
    })
}

pub fn fig1(seed: u64, opts: &EstimatorOptions) -> Result<Vec<FitPanel>> {
    fig1_specs(seed)
        .iter()
        .map(|s| fit_panel(s, opts))
        .collect()
}

/// Seed of one instance, derived from the base seed and the cell it belongs to.
pub fn instance_seed(base: u64, kind: GeneratorKind, d: u32, n: usize, instance: usize) -> u64 {
    let kind_idx = GeneratorKind::ALL
        .iter()
        .position(|k| *k == kind)
        .unwrap_or(0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream((kind_idx << 56) ^ (u64::from(d) << 40) ^ n as u64);
    rng.set_word_pos(2 * instance as u128);
    rng.next_u64()
}

pub fn instance_spec(kind: GeneratorKind, d: u32, n: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec::new(kind, d, n, seed).with_pbc(kind == GeneratorKind::Hypercube)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergencePoint {
    pub kind: GeneratorKind,
    pub d: u32,
    pub n: usize,
    pub d_mean: f64,
    pub d_std: f64,
    pub instances: usize,
}

/// Mean and spread of `d_hat` over `instances` freshly generated datasets.
pub fn convergence_point(
    kind: GeneratorKind,
    d: u32,
    n: usize,
    instances: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<ConvergencePoint> {
    let estimates = (0..instances)
        .into_par_iter()
        .map(|k| {
            let g = generate(&instance_spec(
                kind,
                d,
                n,
                instance_seed(seed, kind, d, n, k),
            ))?;
            let ni = two_nearest(&g.points, &g.metric, Search::Auto)?;
            Ok(estimate_id(&ni, opts)?.d_hat)
        })
        .collect::<Result<Vec<f64>>>()?;
    let m = instances as f64;
    let d_mean = estimates.iter().sum::<f64>() / m;
    let d_std = (estimates.iter().map(|v| (v - d_mean).powi(2)).sum::<f64>() / m).sqrt();
    Ok(ConvergencePoint {
        kind,
        d,
        n,
        d_mean,
        d_std,
        instances,
    })
}

pub fn fig2(
    kinds: &[GeneratorKind],
    dims: &[u32],
    sizes: &[usize],
    instances: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<Vec<ConvergencePoint>> {
    let mut out = Vec::with_capacity(kinds.len() * dims.len() * sizes.len());
    for &kind in kinds {
        for &d in dims {
            for &n in sizes {
                out.push(convergence_point(kind, d, n, instances, seed, opts)?);
            }
        }
    }
    Ok(out)
}

pub fn write_convergence<W: Write>(mut w: W, rows: &[ConvergencePoint]) -> std::io::Result<()> {
    writeln!(w, "# kind\td\tn\td_mean\td_std\tinstances")?;
    for r in rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.kind,
            r.d,
            r.n,
            fmt_f64(r.d_mean),
            fmt_f64(r.d_std),
            r.instances
        )?;
    }
    w.flush()
}

/// Noisy plane or noisy Gaussian roll with `noise_sigma` as the noise
/// standard deviation.
pub fn fig3_spec(kind: GeneratorKind, noise_sigma: f64, seed: u64) -> GeneratorSpec {
    GeneratorSpec::new(kind, 2, FIG3_N, seed).with_noise(noise_sigma, FIG3_NOISE_DIMS)
}

/// Block scan over the default geometric grid.
pub fn scan_spec(
    spec: &GeneratorSpec,
    min_block: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<ScanCurve> {
    let g = generate(spec)?;
    let sizes = default_block_sizes(g.points.n(), min_block);
    scan(
        ScanInput::Points {
            points: &g.points,
            metric: &g.metric,
        },
        &sizes,
        opts,
        seed,
    )
}

pub fn fig3(seed: u64, opts: &EstimatorOptions) -> Result<Vec<(GeneratorSpec, ScanCurve)>> {
    let mut out = Vec::new();
    for kind in [GeneratorKind::NoisyPlane, GeneratorKind::NoisyGaussRoll] {
        for sigma in FIG3_SIGMAS {
            let spec = fig3_spec(kind, sigma, seed);
            out.push((spec, scan_spec(&spec, FIG3_MIN_BLOCK, seed, opts)?));
        }
    }
    Ok(out)
}

/// File name for a fit panel, e.g. `fig1_hypercube_d14.tsv`.
pub fn panel_file_name(prefix: &str, spec: &GeneratorSpec) -> String {
    format!("{prefix}_{}_d{}.tsv", spec.kind, spec.d)
}

/// File name for a scan curve, e.g. `fig3_noisy_plane_sigma0.0001.tsv`.
pub fn scan_file_name(prefix: &str, spec: &GeneratorSpec) -> String {
    format!("{prefix}_{}_sigma{}.tsv", spec.kind, spec.noise_sigma)
}

/// Writes one fit export per panel into `dir`, returning the paths.
pub fn save_panels(dir: &Path, prefix: &str, panels: &[FitPanel]) -> Result<Vec<PathBuf>> {
    panels
        .iter()
        .map(|p| {
            let path = dir.join(panel_file_name(prefix, &p.spec));
            io::export_fit(&path, &p.fit)?;
            Ok(path)
        })
        .collect()
}
