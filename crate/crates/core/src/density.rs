//! Univariate Gaussian kernel density estimation with log-density
//! evaluation in log-sum-exp form.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("need at least 2 samples, got {0}")]
    TooFewPoints(usize),
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    /// Plain mixture over all samples.
    Kde,
    /// Training points leave out their own kernel.
    KdeLoo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityConfig {
    pub kind: DensityKind,
    pub bandwidth: BandwidthRule,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig { kind: DensityKind::Kde, bandwidth: BandwidthRule::Silverman }
    }
}

/// Lower clamp for log-densities, `ln(1e-300)`.
pub const LOG_DENSITY_FLOOR: f64 = -690.7755278982137;

/// Kernels farther than this many bandwidths contribute less than 1e-300.
const CUTOFF_BANDWIDTHS: f64 = 38.0;

fn sample_sd(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Quantile with linear interpolation between order statistics.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Smallest bandwidth ever used for a sample: `1e-9 * max(sd, 1)`.
pub fn bandwidth_floor(samples: &[f64]) -> f64 {
    1e-9 * sample_sd(samples).max(1.0)
}

/// Silverman's rule `0.9 * min(sd, iqr / 1.34) * n^(-1/5)`.
///
/// When one of the two spread estimates is zero the other is used; when both
/// vanish the floor applies.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64, DensityError> {
    if samples.len() < 2 {
        return Err(DensityError::TooFewPoints(samples.len()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(silverman_sorted(&sorted))
}

fn silverman_sorted(sorted: &[f64]) -> f64 {
    let sd = sample_sd(sorted);
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => 0.0,
    };
    let h = 0.9 * spread * (sorted.len() as f64).powf(-0.2);
    h.max(bandwidth_floor(sorted))
}

/// Equal-weight Gaussian mixture centered on the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    samples: Vec<f64>,
    bandwidth: f64,
    kind: DensityKind,
}

pub fn fit_density(samples: &[f64], config: &DensityConfig) -> Result<DensityModel, DensityError> {
    if samples.len() < 2 {
        return Err(DensityError::TooFewPoints(samples.len()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let bandwidth = match config.bandwidth {
        BandwidthRule::Silverman => silverman_sorted(&sorted),
        BandwidthRule::Fixed(h) => {
            if !(h > 0.0 && h.is_finite()) {
                return Err(DensityError::InvalidBandwidth(h));
            }
            h.max(bandwidth_floor(&sorted))
        }
    };
    Ok(DensityModel { samples: sorted, bandwidth, kind: config.kind })
}

impl DensityModel {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    /// Samples, sorted ascending.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Natural log of the mixture density at each point.
    ///
    /// With `training` set and kind [`DensityKind::KdeLoo`], a point equal to
    /// a sample is scored by the mixture over the other `n - 1` samples.
    /// Results are clamped below at [`LOG_DENSITY_FLOOR`].
    pub fn log_density(&self, points: &[f64], training: bool) -> Vec<f64> {
        let leave_out = training && self.kind == DensityKind::KdeLoo;
        points.iter().map(|&x| self.log_density_at(x, leave_out)).collect()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density_at(x, false).exp()
    }

    fn log_density_at(&self, x: f64, leave_out: bool) -> f64 {
        let h = self.bandwidth;
        let reach = CUTOFF_BANDWIDTHS * h;
        let lo = self.samples.partition_point(|&s| s < x - reach);
        let hi = self.samples.partition_point(|&s| s <= x + reach);
        let skip = if leave_out {
            let at = self.samples.partition_point(|&s| s < x);
            (at < self.samples.len() && self.samples[at] == x).then_some(at)
        } else {
            None
        };
        let count = self.samples.len() - usize::from(skip.is_some());
        let inv_two_h2 = 0.5 / (h * h);
        let nearest =
            (lo..hi).filter(|&i| Some(i) != skip).map(|i| (self.samples[i] - x).abs()).fold(f64::INFINITY, f64::min);
        if count == 0 || nearest > reach {
            return LOG_DENSITY_FLOOR;
        }
        let peak = -nearest * nearest * inv_two_h2;
        let sum: f64 = (lo..hi)
            .filter(|&i| Some(i) != skip)
            .map(|i| {
                let d = self.samples[i] - x;
                (-d * d * inv_two_h2 - peak).exp()
            })
            .sum();
        let log_norm = (count as f64 * h * (2.0 * PI).sqrt()).ln();
        (peak + sum.ln() - log_norm).max(LOG_DENSITY_FLOOR)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn phi(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
    }

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn fixed(h: f64, kind: DensityKind) -> DensityConfig {
        DensityConfig { kind, bandwidth: BandwidthRule::Fixed(h) }
    }

    #[test]
    fn silverman_examples() {
        let h = silverman_bandwidth(&normals(1, 1000)).unwrap();
        assert!((0.20..=0.28).contains(&h), "{h}");
        assert_eq!(silverman_bandwidth(&[2.0; 10]).unwrap(), 1e-9);
        assert_eq!(silverman_bandwidth(&[1.0]), Err(DensityError::TooFewPoints(1)));
    }

    #[test]
    fn silverman_scales_with_data() {
        let s = normals(2, 500);
        let h = silverman_bandwidth(&s).unwrap();
        let scaled: Vec<f64> = s.iter().map(|v| 3.0 * v).collect();
        let h3 = silverman_bandwidth(&scaled).unwrap();
        assert!((h3 - 3.0 * h).abs() < 1e-12 * h3);
    }

    #[test]
    fn mixture_value_closed_form() {
        let m = fit_density(&[-1.0, 1.0], &fixed(1.0, DensityKind::Kde)).unwrap();
        let expected = (phi(1.0) + phi(-1.0)) / 2.0;
        assert!((m.density(0.0) - expected).abs() < 1e-15);
        assert!((expected - 0.24197).abs() < 1e-5);
        assert_eq!(fit_density(&[1.0], &DensityConfig::default()), Err(DensityError::TooFewPoints(1)));
        assert!(fit_density(&[1.0, 2.0], &fixed(0.0, DensityKind::Kde)).is_err());
    }

    #[test]
    fn log_density_examples() {
        let m = fit_density(&[0.0, 0.0], &fixed(1.0, DensityKind::Kde)).unwrap();
        let v = m.log_density(&[0.0], false)[0];
        assert!((v - phi(0.0).ln()).abs() < 1e-14);
        assert!((v + 0.91894).abs() < 1e-5);

        let loo = fit_density(&[-1.0, 1.0], &fixed(1.0, DensityKind::KdeLoo)).unwrap();
        let v = loo.log_density(&[-1.0], true)[0];
        assert!((v - phi(2.0).ln()).abs() < 1e-14);
        assert!((v + 2.9189).abs() < 1e-4);
        // Without the training flag, the full mixture is used.
        let full = loo.log_density(&[-1.0], false)[0];
        assert!((full - ((phi(0.0) + phi(2.0)) / 2.0).ln()).abs() < 1e-14);

        let far = m.log_density(&[1000.0], false)[0];
        assert_eq!(far, LOG_DENSITY_FLOOR);
        assert!((far + 690.78).abs() < 0.01);
    }

    #[test]
    fn integrates_to_one() {
        for seed in 0..20 {
            let s: Vec<f64> = normals(seed, 50 + seed as usize * 7).iter().map(|v| v * (1.0 + seed as f64)).collect();
            let m = fit_density(&s, &DensityConfig::default()).unwrap();
            let h = m.bandwidth();
            let (a, b) = (m.samples()[0] - 10.0 * h, m.samples()[s.len() - 1] + 10.0 * h);
            let steps = 20000;
            let dx = (b - a) / steps as f64;
            let ys: Vec<f64> = (0..=steps).map(|i| m.density(a + dx * i as f64)).collect();
            let integral = dx * (ys.iter().sum::<f64>() - 0.5 * (ys[0] + ys[steps]));
            assert!((integral - 1.0).abs() < 1e-3, "seed {seed}: {integral}");
        }
    }

    #[test]
    fn entropy_of_standard_normal() {
        let s = normals(7, 5000);
        let m = fit_density(&s, &DensityConfig::default()).unwrap();
        let mean_ll = m.log_density(&s, true).iter().sum::<f64>() / 5000.0;
        let entropy = -0.5 * (2.0 * PI * std::f64::consts::E).ln();
        assert!((mean_ll - entropy).abs() < 0.05, "{mean_ll} vs {entropy}");
    }

    #[test]
    fn translation_and_mirror() {
        let s = normals(3, 200);
        let pts = normals(4, 50);
        let base = fit_density(&s, &DensityConfig::default()).unwrap().log_density(&pts, false);
        let c = 12.5;
        let shifted: Vec<f64> = s.iter().map(|v| v + c).collect();
        let spts: Vec<f64> = pts.iter().map(|v| v + c).collect();
        let moved = fit_density(&shifted, &DensityConfig::default()).unwrap().log_density(&spts, false);
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let npts: Vec<f64> = pts.iter().map(|v| -v).collect();
        let mirrored = fit_density(&neg, &DensityConfig::default()).unwrap().log_density(&npts, false);
        for i in 0..pts.len() {
            assert!((base[i] - moved[i]).abs() < 1e-12);
            assert!((base[i] - mirrored[i]).abs() < 1e-12);
        }
    }
}
