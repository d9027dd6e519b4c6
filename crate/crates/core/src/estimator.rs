//! From neighbor distances to an intrinsic dimension.
//!
//! Under local uniformity `mu = r2 / r1` has CDF `F(mu) = 1 - mu^(-d)`, so the
//! points `(log mu, -log(1 - F(mu)))` lie on the line `y = d * x`. The
//! empirical CDF assigns `F = i / N` to the `i`-th smallest ratio.

use crate::error::{Error, Result};
use crate::neighbors::NeighborInfo;

/// Per-point ratios `r2 / r1`, each finite and at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MuSample(Vec<f64>);

impl MuSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !(v.is_finite() && *v >= 1.0)) {
            return Err(Error::InvalidMu {
                index: pos,
                value: values[pos],
            });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// `mu_i = r2_i / r1_i`, in input order.
pub fn compute_mu(ni: &[NeighborInfo]) -> MuSample {
    // NeighborInfo guarantees 0 < r1 <= r2
    MuSample(ni.iter().map(NeighborInfo::mu).collect())
}

/// One point of the `(log mu, -log(1 - F_emp))` plane. The largest ratio has
/// `F_emp = 1` and `y = +inf`; it is never used in a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfPoint {
    pub x: f64,
    pub y: f64,
}

impl CdfPoint {
    pub fn is_fittable(&self) -> bool {
        self.y.is_finite()
    }
}

/// Sorts the ratios and pairs each with its empirical CDF value `i / N`.
pub fn empirical_cdf(mu: &MuSample) -> Vec<CdfPoint> {
    let n = mu.len();
    mu.sorted()
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            let remaining = (n - (k + 1)) as f64 / n as f64;
            CdfPoint {
                x: m.ln(),
                y: if remaining > 0.0 {
                    -remaining.ln()
                } else {
                    f64::INFINITY
                },
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub rms_residual: f64,
}

/// Least squares line through the origin, `slope = sum(x*y) / sum(x^2)`.
///
/// Points with a non-finite `y` are skipped. Sums run sequentially in input
/// order so the result is reproducible bit for bit.
pub fn fit_line_through_origin(pts: &[CdfPoint]) -> Result<LineFit> {
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for p in pts.iter().filter(|p| p.is_fittable()) {
        sxy += p.x * p.y;
        sxx += p.x * p.x;
    }
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::NoSpread);
    }
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        rms_residual: rms_residual(pts, slope),
    })
}

fn rms_residual(pts: &[CdfPoint], slope: f64) -> f64 {
    let (mut ss, mut count) = (0.0, 0usize);
    for p in pts.iter().filter(|p| p.is_fittable()) {
        let r = p.y - slope * p.x;
        ss += r * r;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        (ss / count as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Slope of the empirical CDF plot (the standard TWO-NN estimate).
    #[default]
    CdfFit,
    /// Closed-form maximum likelihood under the Pareto law of `mu`.
    Mle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// Fraction of largest ratios left out of the fit.
    pub discard_fraction: f64,
    pub method: Method,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            discard_fraction: 0.10,
            method: Method::CdfFit,
        }
    }
}

impl EstimatorOptions {
    pub fn with_discard(mut self, discard_fraction: f64) -> Self {
        self.discard_fraction = discard_fraction;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

/// A fitted intrinsic dimension.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub d_hat: f64,
    pub method: Method,
    pub n_total: usize,
    pub n_used: usize,
    pub discard_fraction: f64,
    /// RMS of `y - d_hat * x` over the fitted points.
    pub rms_residual: f64,
}

/// Number of largest ratios dropped for a given fraction: `ceil(f * n)`.
///
/// A 1e-9 slack absorbs products such as `0.7 * 10 = 7.000000000000001`.
pub fn discard_count(n: usize, fraction: f64) -> usize {
    let k = (fraction * n as f64 - 1e-9).ceil();
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(n)
    }
}

fn check_fraction(f: f64) -> Result<()> {
    if (0.0..1.0).contains(&f) {
        Ok(())
    } else {
        Err(Error::InvalidDiscard(f))
    }
}

/// Fits the intrinsic dimension from neighbor distances.
///
/// The `ceil(discard_fraction * N)` largest ratios are dropped, and the
/// largest one always is (its `F_emp` equals 1). The remaining points are
/// passed to the line fit or to the likelihood estimate.
pub fn estimate_id(ni: &[NeighborInfo], opts: &EstimatorOptions) -> Result<Estimate> {
    check_fraction(opts.discard_fraction)?;
    let n = ni.len();
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    let cdf = empirical_cdf(&compute_mu(ni));
    let n_used = n - discard_count(n, opts.discard_fraction).max(1);
    if n_used < 2 {
        return Err(Error::TooFewAfterDiscard { remaining: n_used });
    }
    let kept = &cdf[..n_used];
    let fit = match opts.method {
        Method::CdfFit => fit_line_through_origin(kept)?,
        Method::Mle => {
            let d = mle_slope(kept.iter().map(|p| p.x), n_used)?;
            LineFit {
                slope: d,
                rms_residual: rms_residual(kept, d),
            }
        }
    };
    Ok(Estimate {
        d_hat: fit.slope,
        method: opts.method,
        n_total: n,
        n_used,
        discard_fraction: opts.discard_fraction,
        rms_residual: fit.rms_residual,
    })
}

/// Maximum likelihood under `f(mu) = d * mu^(-d-1)`:
/// `d_hat = n_used / sum(log mu_i)` over the ratios that survive discarding.
///
/// Unlike [`estimate_id`], only `ceil(discard_fraction * N)` ratios are
/// dropped; the `F_emp = 1` point carries no special meaning for the
/// likelihood.
pub fn estimate_id_mle(mu: &MuSample, discard_fraction: f64) -> Result<Estimate> {
    check_fraction(discard_fraction)?;
    let n = mu.len();
    let n_used = n - discard_count(n, discard_fraction);
    if n_used == 0 {
        return Err(Error::TooFewAfterDiscard { remaining: 0 });
    }
    let cdf = empirical_cdf(mu);
    let kept = &cdf[..n_used];
    let d = mle_slope(kept.iter().map(|p| p.x), n_used)?;
    Ok(Estimate {
        d_hat: d,
        method: Method::Mle,
        n_total: n,
        n_used,
        discard_fraction,
        rms_residual: rms_residual(kept, d),
    })
}

fn mle_slope(log_mu: impl Iterator<Item = f64>, n_used: usize) -> Result<f64> {
    let sum: f64 = log_mu.sum();
    if sum.is_nan() || sum <= 0.0 {
        return Err(Error::NoSpread);
    }
    Ok(n_used as f64 / sum)
}

/// Volume of the unit ball in `d` dimensions, `pi^(d/2) / Gamma(d/2 + 1)`,
/// via the recurrence `w_d = w_(d-2) * 2 pi / d`.
pub fn unit_ball_volume(d: u32) -> f64 {
    let mut w = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = d % 2;
    while k < d {
        k += 2;
        w *= 2.0 * std::f64::consts::PI / f64::from(k);
    }
    w
}

/// Shell volumes around one point: `dv1 = w_d r1^d`, `dv2 = w_d (r2^d - r1^d)`
/// and their ratio `R = dv2 / dv1`.
///
/// For a homogeneous process of intensity `density`, both shell volumes are
/// Exponential(`density`) and `R` has CDF `R / (1 + R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellSample {
    pub delta_v1: f64,
    pub delta_v2: f64,
    pub ratio: f64,
    pub density: f64,
}

impl ShellSample {
    pub fn new(ni: &NeighborInfo, d: u32, density: f64) -> Self {
        let w = unit_ball_volume(d);
        let d = d as i32;
        let (v1, v2) = (ni.r1.powi(d), ni.r2.powi(d));
        let delta_v1 = w * v1;
        let delta_v2 = w * (v2 - v1);
        Self {
            delta_v1,
            delta_v2,
            ratio: delta_v2 / delta_v1,
            density,
        }
    }

    /// Exponential CDF of a shell volume.
    pub fn shell_cdf(&self, v: f64) -> f64 {
        -(-self.density * v).exp_m1()
    }

    /// CDF of the shell-volume ratio, independent of the dimension.
    pub fn ratio_cdf(r: f64) -> f64 {
        r / (1.0 + r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn info(r1: f64, r2: f64) -> NeighborInfo {
        NeighborInfo {
            r1,
            r2,
            idx1: 0,
            idx2: 1,
        }
    }

    /// Exact model quantiles `(1 - i/N)^(-1/d)` for `i = 1..N-1`, plus one
    /// larger value that takes the `F_emp = 1` slot.
    fn quantiles(n: usize, d: f64) -> MuSample {
        let q = |i: f64| (1.0 - i / n as f64).powf(-1.0 / d);
        MuSample::new(
            (1..n)
                .map(|i| q(i as f64))
                .chain([q(n as f64 - 0.5)])
                .collect(),
        )
        .unwrap()
    }

    fn pareto(n: usize, d: f64, seed: u64) -> MuSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MuSample::new(
            (0..n)
                .map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / d))
                .collect(),
        )
        .unwrap()
    }

    fn from_mu(mu: &MuSample) -> Vec<NeighborInfo> {
        mu.values().iter().map(|m| info(1.0, *m)).collect()
    }

    #[test]
    fn mu_from_collinear_points() {
        let mu = compute_mu(&[info(1.0, 3.0), info(1.0, 2.0), info(2.0, 3.0)]);
        assert_eq!(mu.values(), &[3.0, 2.0, 1.5]);
        let ties = compute_mu(&[info(0.5, 0.5), info(2.0, 2.0)]);
        assert_eq!(ties.values(), &[1.0, 1.0]);
        assert!(MuSample::new(vec![1.0, 0.9]).is_err());
        assert!(MuSample::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn inverse_d_moment_on_pareto_samples() {
        // mu^-d is Uniform(0, 1) when mu ~ Pareto(d), so its mean is 1/2
        let n = 100_000;
        let mu = pareto(n, 2.0, 5);
        let mean = mu.values().iter().map(|m| m.powi(-2)).sum::<f64>() / n as f64;
        let se = (1.0f64 / 12.0).sqrt() / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < 4.0 * se, "{mean}");
    }

    #[test]
    fn inverse_d_moment_on_uniform_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let data: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let ps = crate::PointSet::from_flat(data, 2).unwrap();
        let metric = crate::Metric::periodic(vec![1.0, 1.0]).unwrap();
        let ni = crate::two_nearest(&ps, &metric, crate::Search::Auto).unwrap();
        let mu = compute_mu(&ni);
        let mean = mu.values().iter().map(|m| m.powi(-2)).sum::<f64>() / mu.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn cdf_of_three_ratios() {
        let cdf = empirical_cdf(&MuSample::new(vec![2.0, 1.5, 3.0]).unwrap());
        assert_eq!(cdf.len(), 3);
        assert_eq!(
            cdf[0],
            CdfPoint {
                x: 1.5f64.ln(),
                y: -(2.0f64 / 3.0).ln()
            }
        );
        assert_eq!(
            cdf[1],
            CdfPoint {
                x: 2.0f64.ln(),
                y: -(1.0f64 / 3.0).ln()
            }
        );
        assert_eq!(cdf[2].x, 3.0f64.ln());
        assert!(cdf[2].y.is_infinite() && !cdf[2].is_fittable());
    }

    #[test]
    fn single_ratio_has_nothing_to_fit() {
        let cdf = empirical_cdf(&MuSample::new(vec![1.7]).unwrap());
        assert_eq!(cdf.len(), 1);
        assert!(!cdf[0].is_fittable());
        assert!(matches!(
            fit_line_through_origin(&cdf),
            Err(Error::NoSpread)
        ));
    }

    #[test]
    fn quantiles_lie_on_the_line() {
        for d in [1.0, 3.0, 12.5] {
            for p in empirical_cdf(&quantiles(1000, d)) {
                if p.is_fittable() {
                    assert!((p.y - d * p.x).abs() <= 1e-12 * p.y.max(1.0), "{p:?}");
                }
            }
        }
    }

    #[test]
    fn cdf_is_monotone() {
        let cdf = empirical_cdf(&pareto(5000, 4.0, 9));
        for w in cdf.windows(2) {
            assert!(w[0].x <= w[1].x && w[0].y <= w[1].y);
            assert!(w[0].x >= 0.0 && w[0].y >= 0.0);
        }
    }

    #[test]
    fn exact_line_fit() {
        let pts: Vec<_> = (1..20)
            .map(|i| CdfPoint {
                x: i as f64 * 0.1,
                y: 0.3 * i as f64,
            })
            .collect();
        let fit = fit_line_through_origin(&pts).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-14);
        assert!(fit.rms_residual < 1e-14);
        let one = fit_line_through_origin(&[CdfPoint { x: 1.0, y: 2.0 }]).unwrap();
        assert_eq!(one.slope, 2.0);
        let flat = [CdfPoint { x: 0.0, y: 1.0 }, CdfPoint { x: 0.0, y: 2.0 }];
        assert!(matches!(
            fit_line_through_origin(&flat),
            Err(Error::NoSpread)
        ));
    }

    #[test]
    fn line_fit_matches_grid_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pts: Vec<CdfPoint> = (0..50)
            .map(|_| {
                let x = rng.random::<f64>() * 2.0;
                CdfPoint {
                    x,
                    y: (4.0 * x + rng.random::<f64>() - 0.5).max(0.0),
                }
            })
            .collect();
        let loss = |s: f64| pts.iter().map(|p| (p.y - s * p.x).powi(2)).sum::<f64>();
        let step = 1e-4;
        let best = (0..=100_000)
            .map(|k| k as f64 * step)
            .min_by(|a, b| loss(*a).total_cmp(&loss(*b)))
            .unwrap();
        let fit = fit_line_through_origin(&pts).unwrap();
        assert!(
            (fit.slope - best).abs() <= step,
            "{} vs {}",
            fit.slope,
            best
        );
    }

    #[test]
    fn discard_counts() {
        assert_eq!(discard_count(2500, 0.1), 250);
        assert_eq!(discard_count(10, 0.7), 7);
        assert_eq!(discard_count(11, 0.1), 2);
        assert_eq!(discard_count(100, 0.0), 0);
    }

    #[test]
    fn quantiles_recover_d_for_any_discard() {
        for d in [1.0, 2.0, 7.0, 20.0] {
            let ni = from_mu(&quantiles(2000, d));
            for f in [0.0, 0.1, 0.25, 0.5] {
                let est = estimate_id(&ni, &EstimatorOptions::default().with_discard(f)).unwrap();
                assert!(
                    (est.d_hat - d).abs() <= 1e-9 * d,
                    "d={d} f={f}: {}",
                    est.d_hat
                );
                assert_eq!(est.n_total, 2000);
                assert_eq!(est.n_used, 2000 - discard_count(2000, f).max(1));
                assert!(est.rms_residual < 1e-9);
            }
        }
    }

    #[test]
    fn estimate_rejects_bad_input() {
        let ni = from_mu(&quantiles(10, 2.0));
        assert!(matches!(
            estimate_id(&ni, &EstimatorOptions::default().with_discard(1.0)),
            Err(Error::InvalidDiscard(_))
        ));
        assert!(estimate_id(&ni, &EstimatorOptions::default().with_discard(-0.1)).is_err());
        assert!(matches!(
            estimate_id(&ni, &EstimatorOptions::default().with_discard(0.9)),
            Err(Error::TooFewAfterDiscard { remaining: 1 })
        ));
        assert!(matches!(
            estimate_id(&ni[..2], &EstimatorOptions::default()),
            Err(Error::TooFewPoints(2))
        ));
        let flat = vec![info(1.0, 1.0); 10];
        assert!(matches!(
            estimate_id(&flat, &EstimatorOptions::default()),
            Err(Error::NoSpread)
        ));
    }

    #[test]
    fn mle_closed_form() {
        let half = 0.5f64.exp();
        let est = estimate_id_mle(&MuSample::new(vec![half, half]).unwrap(), 0.0).unwrap();
        assert!((est.d_hat - 2.0).abs() < 1e-15);
        assert_eq!((est.n_used, est.method), (2, Method::Mle));
        assert!(matches!(
            estimate_id_mle(&MuSample::new(vec![1.0; 5]).unwrap(), 0.0),
            Err(Error::NoSpread)
        ));
    }

    #[test]
    fn mle_on_pareto_samples() {
        let est = estimate_id_mle(&pareto(100_000, 7.0, 42), 0.0).unwrap();
        assert!((est.d_hat - 7.0).abs() <= 0.07, "{}", est.d_hat);
    }

    #[test]
    fn mle_on_quantiles_is_close() {
        // the mean of -log(1 - i/N) over i < N is 1 - O(log N / N)
        let d = 7.0;
        let est = estimate_id_mle(&quantiles(10_000, d), 0.0).unwrap();
        assert!((est.d_hat - d).abs() <= 2e-3 * d, "{}", est.d_hat);
        let via = estimate_id(
            &from_mu(&quantiles(10_000, d)),
            &EstimatorOptions::default()
                .with_discard(0.0)
                .with_method(Method::Mle),
        )
        .unwrap();
        assert!((via.d_hat - d).abs() <= 2e-3 * d, "{}", via.d_hat);
    }

    #[test]
    fn cdf_fit_and_mle_agree_on_pareto() {
        for (d, seed) in [(2.0, 1), (7.0, 2), (15.0, 3)] {
            let n = 20_000;
            let ni = from_mu(&pareto(n, d, seed));
            let opts = EstimatorOptions::default().with_discard(0.0);
            let cdf = estimate_id(&ni, &opts).unwrap().d_hat;
            let mle = estimate_id(&ni, &opts.with_method(Method::Mle))
                .unwrap()
                .d_hat;
            let se = d / (n as f64).sqrt();
            assert!((cdf - mle).abs() <= 3.0 * se, "d={d}: cdf {cdf}, mle {mle}");
        }
    }

    #[test]
    fn unit_ball_volumes() {
        use std::f64::consts::PI;
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        for d in 1..30u32 {
            let oracle = PI.powf(f64::from(d) / 2.0)
                / statrs::function::gamma::gamma(f64::from(d) / 2.0 + 1.0);
            assert!(
                (unit_ball_volume(d) - oracle).abs() <= 1e-12 * oracle,
                "d={d}"
            );
        }
    }

    proptest! {
        #[test]
        fn shell_ratio_identity(r1 in 1e-3..10.0f64, stretch in 1e-3..3.0f64, d in 1u32..12) {
            let ni = info(r1, r1 * (1.0 + stretch));
            let s = ShellSample::new(&ni, d, 1.0);
            let expect = ni.mu().powi(d as i32) - 1.0;
            prop_assert!((s.ratio - expect).abs() <= 1e-9 * expect, "{} vs {}", s.ratio, expect);
            prop_assert!(s.delta_v1 >= 0.0 && s.delta_v2 >= 0.0);
        }

        #[test]
        fn estimate_is_scale_free(seed in any::<u64>(), c in prop::sample::select(vec![1e-6, 0.37, 1.0, 1e6])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f64> = (0..300 * 3).map(|_| rng.random::<f64>()).collect();
            let ps = crate::PointSet::from_flat(data, 3).unwrap();
            let opts = EstimatorOptions::default();
            let a = crate::estimate_points(&ps, &crate::Metric::Euclidean, &opts).unwrap();
            let b = crate::estimate_points(&ps.scaled(c).unwrap(), &crate::Metric::Euclidean, &opts).unwrap();
            prop_assert!((a.d_hat - b.d_hat).abs() <= 1e-12 * a.d_hat);
        }
    }
}
