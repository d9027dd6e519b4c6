//! Seeded synthetic datasets.
//!
//! Every generator draws from a single ChaCha8 stream seeded with
//! `GeneratorSpec::seed`, one row at a time, so the same spec always yields
//! the same points bit for bit.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dataset::{Metric, PointSet};
use crate::error::{Error, Result};

/// Parameter range of the Swiss Roll angle.
pub const ROLL_T_MIN: f64 = 1.5 * PI;
pub const ROLL_T_MAX: f64 = 4.5 * PI;
/// Height of the Swiss Roll.
pub const ROLL_HEIGHT: f64 = 21.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Uniform on `[0, 1)^d`, optionally periodic.
    Hypercube,
    /// Standard normal in `d` dimensions.
    Gaussian,
    /// Isotropic directions with norms drawn from the half-Cauchy density
    /// `2 / (pi (1 + r^2))`.
    CauchyNorm,
    /// Uniform on the unit `d`-sphere embedded in `d + 1` coordinates.
    Hypersphere,
    /// Area-uniform Swiss Roll in 3 coordinates.
    SwissRoll,
    /// Uniform unit square plus Gaussian noise in `noise_dims` extra
    /// coordinates.
    NoisyPlane,
    /// 2-D Gaussian wrapped onto the Swiss Roll plus Gaussian noise in
    /// `noise_dims` extra coordinates.
    NoisyGaussRoll,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 7] = [
        GeneratorKind::Hypercube,
        GeneratorKind::Gaussian,
        GeneratorKind::CauchyNorm,
        GeneratorKind::Hypersphere,
        GeneratorKind::SwissRoll,
        GeneratorKind::NoisyPlane,
        GeneratorKind::NoisyGaussRoll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Hypercube => "hypercube",
            GeneratorKind::Gaussian => "gaussian",
            GeneratorKind::CauchyNorm => "cauchy_norm",
            GeneratorKind::Hypersphere => "hypersphere",
            GeneratorKind::SwissRoll => "swiss_roll",
            GeneratorKind::NoisyPlane => "noisy_plane",
            GeneratorKind::NoisyGaussRoll => "noisy_gauss_roll",
        }
    }

    fn is_noisy(self) -> bool {
        matches!(
            self,
            GeneratorKind::NoisyPlane | GeneratorKind::NoisyGaussRoll
        )
    }

    /// Kinds whose intrinsic dimension is fixed at 2.
    fn is_two_dimensional(self) -> bool {
        matches!(
            self,
            GeneratorKind::SwissRoll | GeneratorKind::NoisyPlane | GeneratorKind::NoisyGaussRoll
        )
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm = s.replace('-', "_");
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = GeneratorKind::ALL.iter().map(|k| k.name()).collect();
                format!(
                    "unknown dataset kind `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Intrinsic dimension (2 for the roll and noisy kinds).
    pub d: u32,
    pub n: usize,
    pub seed: u64,
    /// Periodic boundaries; hypercube only.
    pub pbc: bool,
    /// Standard deviation of the noise coordinates.
    pub noise_sigma: f64,
    pub noise_dims: usize,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, d: u32, n: usize, seed: u64) -> Self {
        Self {
            kind,
            d,
            n,
            seed,
            pbc: false,
            noise_sigma: 0.0,
            noise_dims: 0,
        }
    }

    pub fn with_pbc(mut self, pbc: bool) -> Self {
        self.pbc = pbc;
        self
    }

    pub fn with_noise(mut self, sigma: f64, dims: usize) -> Self {
        self.noise_sigma = sigma;
        self.noise_dims = dims;
        self
    }

    /// Number of coordinates of the generated points.
    pub fn embedding_dim(&self) -> usize {
        let d = self.d as usize;
        match self.kind {
            GeneratorKind::Hypercube | GeneratorKind::Gaussian | GeneratorKind::CauchyNorm => d,
            GeneratorKind::Hypersphere => d + 1,
            GeneratorKind::SwissRoll => 3,
            GeneratorKind::NoisyPlane => 2 + self.noise_dims,
            GeneratorKind::NoisyGaussRoll => 3 + self.noise_dims,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unsupported = |msg: String| Err(Error::UnsupportedCombination(msg));
        if self.d == 0 {
            return unsupported("dimension must be at least 1".into());
        }
        if self.n == 0 {
            return unsupported("sample count must be at least 1".into());
        }
        if self.pbc && self.kind != GeneratorKind::Hypercube {
            return unsupported(format!(
                "periodic boundaries are only defined for hypercube, not {}",
                self.kind
            ));
        }
        if self.kind.is_two_dimensional() && self.d != 2 {
            return unsupported(format!(
                "{} has intrinsic dimension 2, got {}",
                self.kind, self.d
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return unsupported(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            ));
        }
        if !self.kind.is_noisy() && (self.noise_dims > 0 || self.noise_sigma > 0.0) {
            return unsupported(format!("{} takes no noise parameters", self.kind));
        }
        Ok(())
    }
}

/// A generated dataset together with the metric it should be analyzed with.
#[derive(Debug, Clone)]
pub struct Generated {
    pub points: PointSet,
    pub metric: Metric,
}

pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.embedding_dim();
    let d = spec.d as usize;
    let mut data = Vec::with_capacity(spec.n * dim);
    for _ in 0..spec.n {
        match spec.kind {
            GeneratorKind::Hypercube => data.extend((0..d).map(|_| rng.random::<f64>())),
            GeneratorKind::Gaussian => data.extend((0..d).map(|_| normal(&mut rng))),
            GeneratorKind::CauchyNorm => {
                let dir = unit_vector(&mut rng, d);
                let r = (0.5 * PI * rng.random::<f64>()).tan();
                data.extend(dir.into_iter().map(|x| x * r));
            }
            GeneratorKind::Hypersphere => data.extend(unit_vector(&mut rng, d + 1)),
            GeneratorKind::SwissRoll => {
                let t = roll_angle(&mut rng);
                let h = ROLL_HEIGHT * rng.random::<f64>();
                data.extend(roll_embed(t, h));
            }
            GeneratorKind::NoisyPlane => {
                data.push(rng.random::<f64>());
                data.push(rng.random::<f64>());
                push_noise(&mut rng, &mut data, spec);
            }
            GeneratorKind::NoisyGaussRoll => {
                let (g1, g2) = (normal(&mut rng), normal(&mut rng));
                let t = (3.0 * PI + 0.5 * PI * g1).clamp(ROLL_T_MIN, ROLL_T_MAX);
                let h = 0.5 * ROLL_HEIGHT + 3.0 * g2;
                data.extend(roll_embed(t, h));
                push_noise(&mut rng, &mut data, spec);
            }
        }
    }
    let points = PointSet::from_flat(data, dim)?;
    let metric = if spec.pbc {
        Metric::periodic(vec![1.0; dim])?
    } else {
        Metric::Euclidean
    };
    Ok(Generated { points, metric })
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform direction via a normalized Gaussian vector.
fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Angle with density proportional to the arc-length element `sqrt(1 + t^2)`,
/// by rejection against its maximum at `ROLL_T_MAX`.
fn roll_angle(rng: &mut ChaCha8Rng) -> f64 {
    let envelope = (1.0 + ROLL_T_MAX * ROLL_T_MAX).sqrt();
    loop {
        let t = ROLL_T_MIN + (ROLL_T_MAX - ROLL_T_MIN) * rng.random::<f64>();
        if envelope * rng.random::<f64>() < (1.0 + t * t).sqrt() {
            return t;
        }
    }
}

fn roll_embed(t: f64, h: f64) -> [f64; 3] {
    [t * t.cos(), h, t * t.sin()]
}

fn push_noise(rng: &mut ChaCha8Rng, data: &mut Vec<f64>, spec: &GeneratorSpec) {
    for _ in 0..spec.noise_dims {
        let z = normal(rng);
        data.push(if spec.noise_sigma == 0.0 {
            0.0
        } else {
            spec.noise_sigma * z
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn gen(spec: GeneratorSpec) -> PointSet {
        generate(&spec).unwrap().points
    }

    #[test]
    fn hypersphere_rows_have_unit_norm() {
        for d in [1, 2, 5, 10] {
            let ps = gen(GeneratorSpec::new(GeneratorKind::Hypersphere, d, 500, 3));
            assert_eq!(ps.dim(), d as usize + 1);
            for row in ps.rows() {
                let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hypersphere_is_centered() {
        let n = 20_000;
        let ps = gen(GeneratorSpec::new(GeneratorKind::Hypersphere, 4, n, 8));
        for k in 0..ps.dim() {
            let mean = ps.rows().map(|r| r[k]).sum::<f64>() / n as f64;
            assert!(
                mean.abs() < 4.0 / (n as f64).sqrt(),
                "coordinate {k}: {mean}"
            );
        }
    }

    #[test]
    fn hypercube_is_uniform_in_the_box() {
        let g =
            generate(&GeneratorSpec::new(GeneratorKind::Hypercube, 3, 10_000, 1).with_pbc(true))
                .unwrap();
        assert_eq!(g.metric, Metric::periodic(vec![1.0; 3]).unwrap());
        for k in 0..3 {
            let col: Vec<f64> = g.points.rows().map(|r| r[k]).collect();
            assert!(col.iter().all(|v| (0.0..1.0).contains(v)));
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            assert!((mean - 0.5).abs() < 0.015, "{mean}");
        }
        let open = generate(&GeneratorSpec::new(GeneratorKind::Hypercube, 3, 10, 1)).unwrap();
        assert_eq!(open.metric, Metric::Euclidean);
    }

    #[test]
    fn cauchy_median_norm_is_one() {
        // oracle: Simpson quadrature of the half-Cauchy density over [0, 1]
        // gives exactly half the mass
        let f = |x: f64| 2.0 / (PI * (1.0 + x * x));
        let m = 1000;
        let h = 1.0 / m as f64;
        let mass: f64 = (0..=m)
            .map(|k| {
                let w = if k == 0 || k == m {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * f(k as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((mass - 0.5).abs() < 1e-12);

        let ps = gen(GeneratorSpec::new(GeneratorKind::CauchyNorm, 5, 100_000, 2));
        let mut norms: Vec<f64> = ps
            .rows()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        norms.sort_by(f64::total_cmp);
        let median = norms[norms.len() / 2];
        assert!((median - 1.0).abs() < 0.02, "{median}");
    }

    #[test]
    fn noiseless_plane_has_zero_tail() {
        let ps = gen(GeneratorSpec::new(GeneratorKind::NoisyPlane, 2, 1000, 5).with_noise(0.0, 20));
        assert_eq!(ps.dim(), 22);
        for row in ps.rows() {
            assert!(row[2..].iter().all(|v| *v == 0.0 && v.is_sign_positive()));
            assert!((0.0..1.0).contains(&row[0]) && (0.0..1.0).contains(&row[1]));
        }
    }

    #[test]
    fn noise_has_requested_scale() {
        let ps =
            gen(GeneratorSpec::new(GeneratorKind::NoisyPlane, 2, 20_000, 5).with_noise(1e-4, 3));
        let var = ps.rows().map(|r| r[2] * r[2]).sum::<f64>() / 20_000.0;
        assert!((var.sqrt() - 1e-4).abs() < 3e-6, "{}", var.sqrt());
    }

    #[test]
    fn gauss_roll_stays_on_the_roll() {
        let ps =
            gen(GeneratorSpec::new(GeneratorKind::NoisyGaussRoll, 2, 5000, 5).with_noise(0.0, 2));
        assert_eq!(ps.dim(), 5);
        for r in ps.rows() {
            let radius = (r[0] * r[0] + r[2] * r[2]).sqrt();
            assert!((ROLL_T_MIN - 1e-9..=ROLL_T_MAX + 1e-9).contains(&radius));
        }
    }

    #[test]
    fn swiss_roll_is_area_uniform() {
        let arc = |t: f64| 0.5 * (t * (1.0 + t * t).sqrt() + t.asinh());
        let n = 50_000;
        let bins = 25;
        let ps = gen(GeneratorSpec::new(GeneratorKind::SwissRoll, 2, n, 12));
        let (s0, s1) = (arc(ROLL_T_MIN), arc(ROLL_T_MAX));
        let mut counts = vec![0usize; bins];
        for r in ps.rows() {
            let t = (r[0] * r[0] + r[2] * r[2]).sqrt();
            let k = (((arc(t) - s0) / (s1 - s0)) * bins as f64) as usize;
            counts[k.min(bins - 1)] += 1;
            assert!((0.0..ROLL_HEIGHT).contains(&r[1]));
        }
        let expected = n as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let critical = ChiSquared::new((bins - 1) as f64)
            .unwrap()
            .inverse_cdf(0.99);
        assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
    }

    #[test]
    fn deterministic_in_seed() {
        for kind in GeneratorKind::ALL {
            let d = if kind.is_two_dimensional() { 2 } else { 4 };
            let mut spec = GeneratorSpec::new(kind, d, 300, 77);
            if kind.is_noisy() {
                spec = spec.with_noise(1e-3, 4);
            }
            let a = gen(spec);
            assert_eq!(a, gen(spec), "{kind}");
            assert_eq!(a.dim(), spec.embedding_dim());
            spec.seed = 78;
            assert_ne!(a, gen(spec), "{kind}");
        }
    }

    #[test]
    fn unsupported_combinations() {
        let bad = [
            GeneratorSpec::new(GeneratorKind::Gaussian, 3, 10, 0).with_pbc(true),
            GeneratorSpec::new(GeneratorKind::SwissRoll, 3, 10, 0),
            GeneratorSpec::new(GeneratorKind::Hypercube, 3, 10, 0).with_noise(0.1, 2),
            GeneratorSpec::new(GeneratorKind::NoisyPlane, 2, 10, 0).with_noise(-1.0, 2),
            GeneratorSpec::new(GeneratorKind::Hypercube, 0, 10, 0),
        ];
        for spec in bad {
            assert!(
                matches!(generate(&spec), Err(Error::UnsupportedCombination(_))),
                "{spec:?}"
            );
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in GeneratorKind::ALL {
            assert_eq!(kind.name().parse::<GeneratorKind>().unwrap(), kind);
        }
        assert_eq!(
            "swiss-roll".parse::<GeneratorKind>().unwrap(),
            GeneratorKind::SwissRoll
        );
        assert!("torus".parse::<GeneratorKind>().is_err());
    }
}
