//! Gaussian-mixture stand-ins for extracted features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::dataset::{DatasetFile, DatasetRecord};
use crate::error::{Error, Result};

/// Parameters of a synthetic mixture dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub dim: usize,
    pub clusters_per_class: usize,
    /// Standard deviation of samples around their cluster center.
    pub cluster_spread: f64,
    /// Standard deviation of the cluster centers around the origin.
    pub center_scale: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Versions per test example: the original plus `versions - 1` jittered copies.
    pub versions: usize,
    /// Jitter standard deviation as a fraction of `cluster_spread`.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// The desk dataset: 10 classes in 64 dimensions, spread/center ratio 0.3.
    fn default() -> Self {
        SyntheticSpec {
            classes: 10,
            dim: 64,
            clusters_per_class: 3,
            cluster_spread: 0.3,
            center_scale: 1.0,
            train_per_class: 100,
            test_per_class: 50,
            versions: 1,
            jitter: 0.5,
            seed: 2019,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("C", self.classes),
            ("T", self.dim),
            ("clusters_per_class", self.clusters_per_class),
            ("train_per_class", self.train_per_class),
            ("test_per_class", self.test_per_class),
            ("R", self.versions),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::usage(format!("{name} must be at least 1")));
        }
        for (name, v) in [("cluster_spread", self.cluster_spread), ("center_scale", self.center_scale)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::usage(format!("{name} must be positive")));
            }
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::usage("jitter must be non-negative"));
        }
        let total = self.classes * (self.train_per_class + self.test_per_class * self.versions);
        if total > u32::MAX as usize {
            return Err(Error::usage("dataset too large for 32-bit group ids"));
        }
        Ok(())
    }
}

/// A generated train/test pair plus the true cluster centers.
#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub train: DatasetFile,
    pub test: DatasetFile,
    /// `(class, center)` for every cluster.
    pub centers: Vec<(usize, Vec<f64>)>,
}

impl SyntheticData {
    /// Accuracy of assigning each test group's original vector to the class
    /// of the nearest true cluster center: the best a prototype classifier
    /// with perfect knowledge of the mixture could do on this draw.
    pub fn nearest_center_accuracy(&self) -> f64 {
        let groups = self.test.groups();
        let correct = groups
            .iter()
            .filter(|g| {
                let x = &g[0].values;
                let nearest = self
                    .centers
                    .iter()
                    .map(|(c, m)| {
                        let d: f64 = m.iter().zip(x).map(|(a, &b)| (a - b as f64).powi(2)).sum();
                        (d, *c)
                    })
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, c)| c);
                nearest == Some(g[0].label as usize)
            })
            .count();
        correct as f64 / groups.len() as f64
    }
}

fn gaussian_vector(rng: &mut impl Rng, center: &[f64], sd: f64) -> Vec<f64> {
    center
        .iter()
        .map(|&m| {
            let z: f64 = StandardNormal.sample(rng);
            m + sd * z
        })
        .collect()
}

/// Generate the train and test sets described by `spec`.
///
/// Centers and samples come from one seeded stream and the test jitter from
/// another, so the original vectors do not depend on `versions`. Records are
/// interleaved across classes; training groups are singletons and each test
/// group holds the original followed by its jittered copies.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut jitter_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5851_f42d_4c95_7f2d);
    let origin = vec![0.0; spec.dim];

    let centers: Vec<(usize, Vec<f64>)> = (0..spec.classes)
        .flat_map(|c| (0..spec.clusters_per_class).map(move |_| c))
        .map(|c| (c, gaussian_vector(&mut rng, &origin, spec.center_scale)))
        .collect();

    let draw = |rng: &mut ChaCha8Rng, class: usize| {
        let k = rng.random_range(0..spec.clusters_per_class);
        gaussian_vector(rng, &centers[class * spec.clusters_per_class + k].1, spec.cluster_spread)
    };
    let to_f32 = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();

    let mut train = Vec::with_capacity(spec.classes * spec.train_per_class);
    for i in 0..spec.train_per_class {
        for c in 0..spec.classes {
            train.push(DatasetRecord {
                label: c as u32,
                group: (i * spec.classes + c) as u32,
                values: to_f32(&draw(&mut rng, c)),
            });
        }
    }

    let jitter = Normal::new(0.0, spec.jitter * spec.cluster_spread)
        .map_err(|e| Error::usage(format!("jitter: {e}")))?;
    let mut test = Vec::with_capacity(spec.classes * spec.test_per_class * spec.versions);
    for i in 0..spec.test_per_class {
        for c in 0..spec.classes {
            let group = (i * spec.classes + c) as u32;
            let x = draw(&mut rng, c);
            test.push(DatasetRecord {
                label: c as u32,
                group,
                values: to_f32(&x),
            });
            for _ in 1..spec.versions {
                let v: Vec<f64> = x.iter().map(|&a| a + jitter.sample(&mut jitter_rng)).collect();
                test.push(DatasetRecord {
                    label: c as u32,
                    group,
                    values: to_f32(&v),
                });
            }
        }
    }

    Ok(SyntheticData {
        train: DatasetFile::new(spec.dim, spec.classes, train)?,
        test: DatasetFile::new(spec.dim, spec.classes, test)?,
        centers,
    })
}
