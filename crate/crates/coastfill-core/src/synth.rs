//! Synthetic coastal landscape stacks and numeric low-rank fixtures.
//!
//! The landscape generator keys every pixel off a fixed, smoothed random
//! elevation field and moves a scalar "water level" per frame: a sinusoid
//! (four cycles over the stack by default) plus small per-frame noise, both
//! scaled by the seasonal amplitude. Pixels below the level become water,
//! a band above it wetland, the rest land. Thresholds are calibrated so the
//! time-averaged water fraction matches the configured target.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rasterstack::{ClassLabel, GridStack};

/// Configuration of the landscape generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub frames: usize,
    pub rows: usize,
    pub cols: usize,
    /// Target time-averaged water fraction, in (0, 1).
    pub water_target: f64,
    /// Scale of the temporal water-level swing; 0 freezes the landscape.
    pub seasonal_amplitude: f64,
    /// Box-blur radius applied to the elevation noise.
    pub smoothness: usize,
    /// Fraction of pixels that form the wetland band above the waterline.
    pub wetland_band: f64,
    /// Period of the water-level sinusoid in frames; `None` means frames/4.
    pub period_frames: Option<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            frames: 60,
            rows: 64,
            cols: 64,
            water_target: 0.7,
            seasonal_amplitude: 1.0,
            smoothness: 2,
            wetland_band: 0.15,
            period_frames: None,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.rows == 0 || self.cols == 0 {
            return Err(Error::Usage(
                "frames, rows and cols must all be at least 1".into(),
            ));
        }
        if !(self.water_target > 0.0 && self.water_target < 1.0) {
            return Err(Error::Usage(format!(
                "water target must lie in (0, 1), got {}",
                self.water_target
            )));
        }
        if self.seasonal_amplitude < 0.0 {
            return Err(Error::Usage("seasonal amplitude must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.wetland_band) {
            return Err(Error::Usage(format!(
                "wetland band must lie in [0, 1), got {}",
                self.wetland_band
            )));
        }
        Ok(())
    }
}

/// Maximum calibration miss tolerated on the time-averaged water fraction.
const WATER_TARGET_TOL: f64 = 0.05;

/// Generate a fully observed categorical stack. Deterministic per config.
pub fn generate_landscape(config: &SynthConfig) -> Result<GridStack> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut elevation = Array2::from_shape_fn((config.rows, config.cols), |_| {
        normal.sample(&mut rng)
    });
    for _ in 0..2 {
        box_blur(&mut elevation, config.smoothness);
    }
    normalize_field(&mut elevation);

    let period = config
        .period_frames
        .unwrap_or(config.frames as f64 / 4.0)
        .max(f64::MIN_POSITIVE);
    let offsets: Vec<f64> = (0..config.frames)
        .map(|t| {
            let phase = 2.0 * std::f64::consts::PI * t as f64 / period;
            let noise = 0.1 * normal.sample(&mut rng);
            config.seasonal_amplitude * (phase.sin() + noise)
        })
        .collect();

    // Pool the per-frame effective elevations and calibrate both thresholds
    // by bisection against the pooled distribution.
    let mut pooled: Vec<f64> = Vec::with_capacity(config.frames * config.rows * config.cols);
    for &offset in &offsets {
        for &e in elevation.iter() {
            pooled.push(e - offset);
        }
    }
    pooled.sort_by(|a, b| a.partial_cmp(b).expect("finite elevations"));

    let water_level = calibrate_threshold(&pooled, config.water_target)?;
    let achieved = fraction_below(&pooled, water_level);
    if (achieved - config.water_target).abs() > WATER_TARGET_TOL {
        return Err(Error::Calibration(format!(
            "water fraction {achieved:.3} misses target {} by more than {WATER_TARGET_TOL}",
            config.water_target
        )));
    }
    let band_target = config.water_target + config.wetland_band;
    let wetland_level = if band_target >= 1.0 {
        f64::INFINITY
    } else {
        calibrate_threshold(&pooled, band_target)?
    };

    let n = config.rows * config.cols;
    let mut values = Array2::zeros((config.frames, n));
    for (t, &offset) in offsets.iter().enumerate() {
        for r in 0..config.rows {
            for c in 0..config.cols {
                let e = elevation[(r, c)] - offset;
                let label = if e < water_level {
                    ClassLabel::Water
                } else if e < wetland_level {
                    ClassLabel::Wetland
                } else {
                    ClassLabel::Land
                };
                values[(t, r * config.cols + c)] = label.code() as f64;
            }
        }
    }
    GridStack::fully_observed(config.rows, config.cols, values)
}

/// Bisect for a threshold whose pooled below-fraction matches `target`.
fn calibrate_threshold(pooled_sorted: &[f64], target: f64) -> Result<f64> {
    let lo0 = pooled_sorted.first().copied().unwrap_or(0.0) - 1.0;
    let hi0 = pooled_sorted.last().copied().unwrap_or(0.0) + 1.0;
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if fraction_below(pooled_sorted, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !hi.is_finite() {
        return Err(Error::Calibration("threshold search diverged".into()));
    }
    Ok(hi)
}

fn fraction_below(sorted: &[f64], threshold: f64) -> f64 {
    let below = sorted.partition_point(|&v| v < threshold);
    below as f64 / sorted.len() as f64
}

/// In-place separable box blur with clamped borders; radius 0 is identity.
fn box_blur(field: &mut Array2<f64>, radius: usize) {
    if radius == 0 {
        return;
    }
    let (rows, cols) = field.dim();
    let r = radius as isize;
    let mut tmp = field.clone();
    for i in 0..rows as isize {
        for j in 0..cols as isize {
            let mut sum = 0.0;
            let mut count = 0.0;
            for dj in -r..=r {
                let jj = (j + dj).clamp(0, cols as isize - 1) as usize;
                sum += field[(i as usize, jj)];
                count += 1.0;
            }
            tmp[(i as usize, j as usize)] = sum / count;
        }
    }
    for j in 0..cols as isize {
        for i in 0..rows as isize {
            let mut sum = 0.0;
            let mut count = 0.0;
            for di in -r..=r {
                let ii = (i + di).clamp(0, rows as isize - 1) as usize;
                sum += tmp[(ii, j as usize)];
                count += 1.0;
            }
            field[(i as usize, j as usize)] = sum / count;
        }
    }
}

fn normalize_field(field: &mut Array2<f64>) {
    let n = field.len() as f64;
    let mean = field.sum() / n;
    let var = field.mapv(|v| (v - mean).powi(2)).sum() / n;
    let sd = var.sqrt();
    if sd > 1e-12 {
        field.mapv_inplace(|v| (v - mean) / sd);
    } else {
        field.mapv_inplace(|v| v - mean);
    }
}

/// Random `m × n` matrix of exact rank `rank`, built as the product of two
/// random factors. Oracle fixture for exact-recovery tests.
pub fn generate_lowrank_numeric(seed: u64, m: usize, n: usize, rank: usize) -> Result<Array2<f64>> {
    if rank == 0 || rank > m.min(n) {
        return Err(Error::Usage(format!(
            "rank must lie in 1..=min({m}, {n}), got {rank}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let left = Array2::from_shape_fn((m, rank), |_| normal.sample(&mut rng));
    let right = Array2::from_shape_fn((rank, n), |_| normal.sample(&mut rng));
    Ok(left.dot(&right) / (rank as f64).sqrt())
}
