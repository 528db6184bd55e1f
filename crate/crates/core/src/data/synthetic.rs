//! Seeded synthetic KPI telemetry with a planted anomaly rule.
//!
//! Eight KPI-like columns are drawn from a latent standard-normal vector
//! (with two correlated pairs). A row is anomalous when the latent user load
//! exceeds the latent throughput by a margin: `z[6] - z[2] > c`, with `c`
//! placing the requested fraction of rows in the anomaly class. Observed
//! values are `mean + scale * (z + noise)`, so the rule is the same for any
//! choice of means and scales; source and target domains differ only there.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dataset, DatasetSchema};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const FEATURE_NAMES: [&str; 8] = [
    "PRBUsageUL",
    "PRBUsageDL",
    "meanThr_DL",
    "meanThr_UL",
    "maxThr_DL",
    "maxThr_UL",
    "meanUE_DL",
    "meanUE_UL",
];
pub const LABEL_NAME: &str = "Unusual";

const THROUGHPUT: usize = 2;
const USERS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub rows: usize,
    pub anomaly_fraction: f64,
    /// Std of the measurement noise, in latent units.
    pub noise: f64,
    pub means: [f64; 8],
    pub scales: [f64; 8],
    pub seed: u64,
}

impl SyntheticConfig {
    /// 10,000 rows, 20% anomalies.
    pub fn source(seed: u64) -> Self {
        Self {
            rows: 10_000,
            anomaly_fraction: 0.2,
            noise: 0.05,
            means: [42.0, 38.0, 18.0, 4.5, 55.0, 11.0, 3.2, 2.1],
            scales: [9.0, 11.0, 5.5, 1.4, 14.0, 2.8, 0.9, 0.6],
            seed,
        }
    }

    /// Same rule, shifted means and rescaled spreads, 2,000 rows.
    pub fn target(seed: u64) -> Self {
        Self {
            rows: 2_000,
            anomaly_fraction: 0.2,
            noise: 0.05,
            means: [61.0, 52.0, 29.0, 7.9, 83.0, 16.5, 5.1, 3.6],
            scales: [14.0, 15.5, 8.0, 2.2, 21.0, 4.4, 1.6, 1.0],
            seed,
        }
    }
}

/// Threshold `c` with `P(z6 - z2 > c) = fraction` for independent standard normals.
fn rule_threshold(fraction: f64) -> f64 {
    std::f64::consts::SQRT_2 * inverse_normal_upper(fraction)
}

/// Upper-tail standard normal quantile by bisection on `erfc`.
fn inverse_normal_upper(p: f64) -> f64 {
    let tail = |x: f64| 0.5 * erfc(x / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Complementary error function (Numerical Recipes `erfcc`, |err| < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807 + t * (-1.13520398 + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

fn latent(rng: &mut ChaCha8Rng) -> [f64; 8] {
    let mut z = [0.0; 8];
    for v in &mut z {
        *v = rng.sample(StandardNormal);
    }
    // PRB uplink/downlink and mean/max downlink throughput move together.
    z[1] = 0.7 * z[0] + (1.0f64 - 0.49).sqrt() * z[1];
    z[4] = 0.8 * z[THROUGHPUT] + 0.6 * z[4];
    z
}

/// Generates the dataset; anomaly count is exactly `round(rows * fraction)`.
pub fn generate(cfg: &SyntheticConfig) -> Result<Dataset> {
    if cfg.rows < 10 || !(cfg.anomaly_fraction > 0.0 && cfg.anomaly_fraction < 1.0) {
        return Err(Error::Config(format!(
            "synthetic data needs >= 10 rows and a fraction in (0, 1), got {} and {}",
            cfg.rows, cfg.anomaly_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let threshold = rule_threshold(cfg.anomaly_fraction);
    let n_anomaly = (cfg.rows as f64 * cfg.anomaly_fraction).round() as usize;
    let mut quota = [cfg.rows - n_anomaly, n_anomaly];
    let mut data = Vec::with_capacity(cfg.rows * 8);
    let mut labels = Vec::with_capacity(cfg.rows);
    while labels.len() < cfg.rows {
        let z = latent(&mut rng);
        let label = usize::from(z[USERS] - z[THROUGHPUT] > threshold);
        if quota[label] == 0 {
            continue;
        }
        quota[label] -= 1;
        for ((&mean, &scale), &zj) in cfg.means.iter().zip(&cfg.scales).zip(&z) {
            let noise: f64 = rng.sample(StandardNormal);
            data.push(mean + scale * (zj + cfg.noise * noise));
        }
        labels.push(label as u8);
    }
    let schema = DatasetSchema::numeric(FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), LABEL_NAME);
    Dataset::new(Tensor::new(&[cfg.rows, 8], data)?, labels, schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_gives_requested_tail() {
        // P(N(0, 2) > c) = 0.2  =>  c = sqrt(2) * 0.841621...
        let c = rule_threshold(0.2);
        assert!((c - std::f64::consts::SQRT_2 * 0.8416212).abs() < 1e-5, "{c}");
    }

    #[test]
    fn exact_class_counts_and_determinism() {
        let mut cfg = SyntheticConfig::source(4);
        cfg.rows = 500;
        let a = generate(&cfg).unwrap();
        assert_eq!(a.class_counts(), [400, 100]);
        assert_eq!(a, generate(&cfg).unwrap());
        cfg.seed = 5;
        assert_ne!(a, generate(&cfg).unwrap());
    }

    #[test]
    fn target_is_shifted() {
        let s = generate(&SyntheticConfig::source(1)).unwrap();
        let t = generate(&SyntheticConfig::target(1)).unwrap();
        let mean = |ds: &Dataset, c: usize| (0..ds.len()).map(|i| ds.row(i)[c]).sum::<f64>() / ds.len() as f64;
        for c in 0..8 {
            assert!(mean(&t, c) > mean(&s, c));
        }
    }
}
