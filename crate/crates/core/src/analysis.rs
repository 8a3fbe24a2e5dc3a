//! Error metrics and convergence studies comparing Halton and pseudorandom
//! sampling.
//!
//! MC errors are always averaged over a seed schedule `base_seed + k`,
//! `k = 0 .. seeds`, because a single pseudorandom run says little about the
//! method. Halton runs are deterministic and evaluated once per grid point.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::estimate_volume;
use crate::maskio::MaskVolume;
use crate::sequences::{SequenceKind, SequenceSpec, DEFAULT_BASES};

pub(crate) fn check_truth(truth: f64) -> Result<()> {
    if !(truth.is_finite() && truth > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "true volume must be positive, got {truth}"
        )));
    }
    Ok(())
}

/// `|computed - truth| / truth`.
pub fn relative_error(computed: f64, truth: f64) -> Result<f64> {
    check_truth(truth)?;
    Ok((computed - truth).abs() / truth)
}

/// Least-squares slope of `log10(error)` against `log10(n)`. Returns `None`
/// with fewer than two usable points (errors must be positive).
pub fn loglog_slope(n_grid: &[u64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = n_grid
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(&n, &e)| ((n as f64).log10(), e.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// `100 * 2^k` up to and including `max`.
pub fn geometric_grid(max: u64) -> Vec<u64> {
    std::iter::successors(Some(100u64), |n| n.checked_mul(2))
        .take_while(|&n| n <= max)
        .collect()
}

/// `start, start + step, ...` up to and including `max`.
pub fn arithmetic_grid(start: u64, step: u64, max: u64) -> Vec<u64> {
    if start == 0 || step == 0 {
        return Vec::new();
    }
    (start..=max).step_by(step as usize).collect()
}

fn check_grid(n_grid: &[u64]) -> Result<()> {
    if n_grid.is_empty() {
        return Err(Error::InvalidArgument("point grid is empty".into()));
    }
    if n_grid[0] == 0 {
        return Err(Error::InvalidArgument("point grid values must be >= 1".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "point grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn check_seeds(seeds: u64) -> Result<()> {
    if seeds == 0 {
        return Err(Error::InvalidArgument("need at least one MC seed".into()));
    }
    Ok(())
}

/// Shared settings for the sweep-style analyses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StudyConfig {
    pub bases: (u64, u64),
    pub seeds: u64,
    pub base_seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            bases: DEFAULT_BASES,
            seeds: 20,
            base_seed: 0,
        }
    }
}

impl StudyConfig {
    fn halton(&self) -> Result<SequenceSpec> {
        SequenceSpec::halton(self.bases)
    }

    fn seed(&self, k: u64) -> u64 {
        self.base_seed.wrapping_add(k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n_grid: Vec<u64>,
    pub qmc_errors: Vec<f64>,
    pub mc_error_mean: Vec<f64>,
    pub mc_error_std: Vec<f64>,
    pub seeds: u64,
    /// `C * N^(-1/2)` through the first MC mean.
    pub theory_mc: Vec<f64>,
    /// `C * N^(-1) * (ln N)^2` through the first Halton error.
    pub theory_qmc: Vec<f64>,
}

impl ConvergenceReport {
    pub fn qmc_slope(&self) -> Option<f64> {
        loglog_slope(&self.n_grid, &self.qmc_errors)
    }

    pub fn mc_slope(&self) -> Option<f64> {
        loglog_slope(&self.n_grid, &self.mc_error_mean)
    }
}

fn qmc_shape(n: u64) -> f64 {
    // (ln N)^2 vanishes at N = 1; floor the log at 1 so the curve stays usable.
    let l = (n as f64).ln().max(1.0);
    l * l / n as f64
}

fn mc_shape(n: u64) -> f64 {
    1.0 / (n as f64).sqrt()
}

fn envelope(n_grid: &[u64], anchor: f64, shape: fn(u64) -> f64) -> Vec<f64> {
    let c = anchor / shape(n_grid[0]);
    n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| if i == 0 { anchor } else { c * shape(n) })
        .collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

fn volume_error(volume: &MaskVolume, spec: &SequenceSpec, n: u64, truth: f64) -> Result<f64> {
    let report = estimate_volume(volume, spec, n, Some(truth))?;
    Ok(report.relative_error.expect("truth was supplied"))
}

/// Relative error of the Halton estimate and of every MC seed at `n` points.
fn errors_at(volume: &MaskVolume, truth: f64, n: u64, config: &StudyConfig) -> Result<(f64, Vec<f64>)> {
    let halton = config.halton()?;
    let qmc = volume_error(volume, &halton, n, truth)?;
    let mc = (0..config.seeds)
        .into_par_iter()
        .map(|k| volume_error(volume, &SequenceSpec::pseudorandom(config.seed(k)), n, truth))
        .collect::<Result<Vec<_>>>()?;
    Ok((qmc, mc))
}

/// Relative error versus points per slice for both samplers.
pub fn convergence_sweep(
    volume: &MaskVolume,
    truth: f64,
    n_grid: &[u64],
    config: &StudyConfig,
) -> Result<ConvergenceReport> {
    check_truth(truth)?;
    check_grid(n_grid)?;
    check_seeds(config.seeds)?;
    config.halton()?;

    let cells = n_grid
        .par_iter()
        .map(|&n| errors_at(volume, truth, n, config))
        .collect::<Result<Vec<_>>>()?;

    let mut qmc_errors = Vec::with_capacity(n_grid.len());
    let mut mc_error_mean = Vec::with_capacity(n_grid.len());
    let mut mc_error_std = Vec::with_capacity(n_grid.len());
    for (qmc, mc) in cells {
        let (mean, std) = mean_std(&mc);
        qmc_errors.push(qmc);
        mc_error_mean.push(mean);
        mc_error_std.push(std);
    }
    Ok(ConvergenceReport {
        n_grid: n_grid.to_vec(),
        theory_mc: envelope(n_grid, mc_error_mean[0], mc_shape),
        theory_qmc: envelope(n_grid, qmc_errors[0], qmc_shape),
        qmc_errors,
        mc_error_mean,
        mc_error_std,
        seeds: config.seeds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointsToTarget {
    pub target: f64,
    /// First grid value whose seed-mean MC error is within target.
    pub n_mc: Option<u64>,
    /// First grid value whose Halton error is within target.
    pub n_qmc: Option<u64>,
    /// `n_mc / n_qmc` when both were reached.
    pub ratio: Option<f64>,
}

/// Scans `n_grid` in order for the first point count at which each sampler
/// reaches `target` relative error. Stops as soon as both have crossed.
pub fn points_to_target(
    volume: &MaskVolume,
    truth: f64,
    target: f64,
    n_grid: &[u64],
    config: &StudyConfig,
) -> Result<PointsToTarget> {
    check_truth(truth)?;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target must lie in (0, 1), got {target}"
        )));
    }
    check_grid(n_grid)?;
    check_seeds(config.seeds)?;
    let halton = config.halton()?;

    let mut n_qmc = None;
    let mut n_mc = None;
    for &n in n_grid {
        if n_qmc.is_none() && volume_error(volume, &halton, n, truth)? <= target {
            n_qmc = Some(n);
        }
        if n_mc.is_none() {
            let mc = (0..config.seeds)
                .into_par_iter()
                .map(|k| volume_error(volume, &SequenceSpec::pseudorandom(config.seed(k)), n, truth))
                .collect::<Result<Vec<_>>>()?;
            if mean_std(&mc).0 <= target {
                n_mc = Some(n);
            }
        }
        if n_qmc.is_some() && n_mc.is_some() {
            break;
        }
    }
    let ratio = match (n_mc, n_qmc) {
        (Some(a), Some(b)) => Some(a as f64 / b as f64),
        _ => None,
    };
    Ok(PointsToTarget {
        target,
        n_mc,
        n_qmc,
        ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub method: SequenceKind,
    pub spec: SequenceSpec,
    pub volume_mm3: f64,
    pub relative_error: Option<f64>,
}

/// Halton and pseudorandom estimates of the same volume with the same point
/// budget. Rows are in that order.
pub fn compare_methods(
    volume: &MaskVolume,
    truth: Option<f64>,
    n_points: u64,
    seed: u64,
    bases: (u64, u64),
) -> Result<Vec<ComparisonRow>> {
    let specs = [SequenceSpec::halton(bases)?, SequenceSpec::pseudorandom(seed)];
    specs
        .iter()
        .map(|spec| {
            let r = estimate_volume(volume, spec, n_points, truth)?;
            Ok(ComparisonRow {
                method: spec.kind(),
                spec: *spec,
                volume_mm3: r.volume_mm3,
                relative_error: r.relative_error,
            })
        })
        .collect()
}

/// Index of the row with the smallest relative error, if errors are known.
pub fn best_row(rows: &[ComparisonRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| r.relative_error.map(|e| (i, e)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}
