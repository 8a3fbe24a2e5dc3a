//! Slice area by point-in-region proportion, volume by the frustum rule.
//!
//! For slice `i`, `n` points of the configured stream are mapped onto the
//! slice and the hits `m` are counted; the area estimate is `(m / n) * S_N`
//! with `S_N` the full slice area. Consecutive areas are joined by
//! `h * (S_i + S_{i+1} + sqrt(S_i * S_{i+1})) / 3`, summed over the `z - 1`
//! adjacent pairs of a `z`-slice stack.
//!
//! By default slice `i` consumes points `i * n .. (i + 1) * n` of a single
//! stream, so no two slices see the same sample pattern.
//! [`SliceLayout::RestartPerSlice`] reuses points `0 .. n` on every slice.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maskio::MaskVolume;
use crate::sequences::SequenceSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceLayout {
    /// Slice `i` uses the stream at offset `i * n_points`.
    #[default]
    Continued,
    /// Every slice uses the stream at offset 0.
    RestartPerSlice,
}

impl SliceLayout {
    fn offset(self, slice_index: usize, n_points: u64) -> u64 {
        match self {
            SliceLayout::Continued => slice_index as u64 * n_points,
            SliceLayout::RestartPerSlice => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AreaEstimate {
    pub slice_index: usize,
    pub hits: u64,
    pub total: u64,
    pub area_mm2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeReport {
    pub volume_mm3: f64,
    pub per_slice: Vec<AreaEstimate>,
    pub method: SequenceSpec,
    pub layout: SliceLayout,
    pub points_per_slice: u64,
    pub truth_mm3: Option<f64>,
    pub relative_error: Option<f64>,
}

impl VolumeReport {
    pub fn areas_mm2(&self) -> Vec<f64> {
        self.per_slice.iter().map(|a| a.area_mm2).collect()
    }
}

fn check_points(n_points: u64) -> Result<()> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("points per slice must be >= 1".into()));
    }
    Ok(())
}

/// Estimates the region area of one slice using the continued-stream layout.
pub fn estimate_slice_area(
    volume: &MaskVolume,
    slice_index: usize,
    spec: &SequenceSpec,
    n_points: u64,
) -> Result<AreaEstimate> {
    estimate_slice_area_with(volume, slice_index, spec, n_points, SliceLayout::Continued)
}

pub fn estimate_slice_area_with(
    volume: &MaskVolume,
    slice_index: usize,
    spec: &SequenceSpec,
    n_points: u64,
    layout: SliceLayout,
) -> Result<AreaEstimate> {
    check_points(n_points)?;
    let slice = volume.slice(slice_index)?;
    let offset = layout.offset(slice_index, n_points);
    let hits = spec
        .points(offset, n_points)
        .filter(|&p| slice.contains_point(p))
        .count() as u64;
    Ok(AreaEstimate {
        slice_index,
        hits,
        total: n_points,
        area_mm2: hits as f64 / n_points as f64 * volume.geometry().slice_area_mm2(),
    })
}

/// Frustum-rule volume of a stack of cross-section areas spaced `h` apart.
/// A single area gives zero.
pub fn frustum_sum(areas: &[f64], h: f64) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("slice spacing must be positive, got {h}")));
    }
    if let Some((index, &value)) = areas.iter().enumerate().find(|(_, a)| !(**a >= 0.0)) {
        return Err(Error::NegativeArea { index, value });
    }
    // Runs of equal areas contribute `count * area * h` in one product, which
    // keeps prisms exact: `z` slices of area `A` give exactly `A * h * (z - 1)`.
    let mut total = 0.0;
    let mut run: Option<(f64, usize)> = None;
    for w in areas.windows(2) {
        let term = if w[0] == w[1] {
            w[0] * h
        } else {
            (w[0] + w[1] + (w[0] * w[1]).sqrt()) * h / 3.0
        };
        run = match run {
            Some((t, n)) if t == term => Some((t, n + 1)),
            Some((t, n)) => {
                total += t * n as f64;
                Some((term, 1))
            }
            None => Some((term, 1)),
        };
    }
    if let Some((t, n)) = run {
        total += t * n as f64;
    }
    Ok(total)
}

/// Estimates the volume of `volume`'s region with `n_points` per slice.
///
/// Slices are evaluated on the current rayon pool; the result does not
/// depend on the number of workers.
pub fn estimate_volume(
    volume: &MaskVolume,
    spec: &SequenceSpec,
    n_points: u64,
    truth: Option<f64>,
) -> Result<VolumeReport> {
    estimate_volume_with(volume, spec, n_points, SliceLayout::Continued, truth)
}

pub fn estimate_volume_with(
    volume: &MaskVolume,
    spec: &SequenceSpec,
    n_points: u64,
    layout: SliceLayout,
    truth: Option<f64>,
) -> Result<VolumeReport> {
    check_points(n_points)?;
    if let Some(t) = truth {
        crate::analysis::check_truth(t)?;
    }
    let per_slice = (0..volume.num_slices())
        .into_par_iter()
        .map(|i| estimate_slice_area_with(volume, i, spec, n_points, layout))
        .collect::<Result<Vec<_>>>()?;
    let areas: Vec<f64> = per_slice.iter().map(|a| a.area_mm2).collect();
    let volume_mm3 = frustum_sum(&areas, volume.geometry().thickness_mm)?;
    let relative_error = truth.map(|t| crate::analysis::relative_error(volume_mm3, t)).transpose()?;
    Ok(VolumeReport {
        volume_mm3,
        per_slice,
        method: *spec,
        layout,
        points_per_slice: n_points,
        truth_mm3: truth,
        relative_error,
    })
}

/// Volume the estimator converges to as the number of points grows: the
/// frustum sum of the exact per-slice inside areas.
pub fn reference_volume(volume: &MaskVolume) -> f64 {
    frustum_sum(&volume.slice_areas_mm2(), volume.geometry().thickness_mm)
        .expect("pixel-count areas are nonnegative and the geometry is validated")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskio::{SliceGeometry, SliceMask};
    use crate::sequences::{stream, SequenceSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn geom(w: usize, h: usize) -> SliceGeometry {
        SliceGeometry::new(w, h, 0.5, 0.75, 2.0).unwrap()
    }

    fn specs() -> Vec<SequenceSpec> {
        vec![
            SequenceSpec::default(),
            SequenceSpec::halton((2, 3)).unwrap(),
            SequenceSpec::pseudorandom(9),
        ]
    }

    #[test]
    fn full_and_empty_slices() {
        let g = geom(10, 6);
        let full = MaskVolume::full(g, 3).unwrap();
        let empty = MaskVolume::empty(g, 3).unwrap();
        for spec in specs() {
            let a = estimate_slice_area(&full, 1, &spec, 100).unwrap();
            assert_eq!((a.hits, a.total), (100, 100));
            assert_eq!(a.area_mm2, g.slice_area_mm2());
            let a = estimate_slice_area(&empty, 2, &spec, 100).unwrap();
            assert_eq!(a.hits, 0);
            assert_eq!(a.area_mm2, 0.0);
        }
    }

    #[test]
    fn half_plane_area_fraction() {
        let g = geom(64, 64);
        let half = SliceMask::from_fn(64, 64, |x, _| x < 32);
        let v = MaskVolume::new(g, vec![half]).unwrap();
        let spec = SequenceSpec::halton((2, 3)).unwrap();
        let a = estimate_slice_area(&v, 0, &spec, 4096).unwrap();
        let frac = a.area_mm2 / g.slice_area_mm2();
        assert!((frac - 0.5).abs() <= 0.01, "{frac}");
    }

    #[test]
    fn slice_errors() {
        let v = MaskVolume::full(geom(4, 4), 2).unwrap();
        let spec = SequenceSpec::default();
        assert!(matches!(
            estimate_slice_area(&v, 2, &spec, 10),
            Err(Error::SliceOutOfRange { index: 2, slices: 2 })
        ));
        assert!(matches!(estimate_slice_area(&v, 0, &spec, 0), Err(Error::InvalidArgument(_))));
        assert!(estimate_volume(&v, &spec, 0, None).is_err());
        assert!(estimate_volume(&v, &spec, 10, Some(0.0)).is_err());
    }

    #[test]
    fn hit_count_matches_brute_force_enumeration() {
        let g = geom(37, 23);
        let slices: Vec<SliceMask> = (0..4)
            .map(|k| SliceMask::from_fn(37, 23, |x, y| (x * 7 + y * 3 + k * 5) % 11 < 4 || x == y))
            .collect();
        let v = MaskVolume::new(g, slices).unwrap();
        let n = 777;
        for spec in specs() {
            for i in 0..4 {
                let pts = stream(&spec, i as u64 * n, n);
                let mut expected = 0;
                for p in &pts {
                    if crate::maskio::contains(&v, i, *p).unwrap() {
                        expected += 1;
                    }
                }
                assert_eq!(estimate_slice_area(&v, i, &spec, n).unwrap().hits, expected);
            }
        }
    }

    #[test]
    fn restart_layout_reuses_the_same_points() {
        let g = geom(16, 16);
        let s = SliceMask::from_fn(16, 16, |x, y| x * y < 40);
        let v = MaskVolume::new(g, vec![s; 5]).unwrap();
        let spec = SequenceSpec::default();
        let r = estimate_volume_with(&v, &spec, 123, SliceLayout::RestartPerSlice, None).unwrap();
        assert!(r.per_slice.iter().all(|a| a.hits == r.per_slice[0].hits));
        let c = estimate_volume(&v, &spec, 123, None).unwrap();
        assert_eq!(c.per_slice[0], r.per_slice[0]);
    }

    #[test]
    fn frustum_examples() {
        assert_eq!(frustum_sum(&[5.0, 5.0], 2.0).unwrap(), 10.0);
        let base = PI * 9.0;
        assert!((frustum_sum(&[base, 0.0], 6.0).unwrap() - base * 6.0 / 3.0).abs() < 1e-12);
        assert_eq!(frustum_sum(&[7.0], 1.0).unwrap(), 0.0);
        assert_eq!(frustum_sum(&[], 1.0).unwrap(), 0.0);
        assert!(matches!(
            frustum_sum(&[1.0, -0.5], 1.0),
            Err(Error::NegativeArea { index: 1, .. })
        ));
        assert!(frustum_sum(&[1.0, f64::NAN], 1.0).is_err());
        assert!(frustum_sum(&[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn frustum_is_exact_on_a_cone() {
        // Sections of a cone of radius r and height H sampled at 31 levels.
        let (r, height) = (12.5, 45.0);
        let h = height / 30.0;
        let areas: Vec<f64> = (0..=30)
            .map(|k| PI * (r * (1.0 - k as f64 / 30.0)).powi(2))
            .collect();
        let v = frustum_sum(&areas, h).unwrap();
        let truth = PI * r * r * height / 3.0;
        assert!((v - truth).abs() / truth < 1e-9);
    }

    #[test]
    fn full_mask_identity() {
        let g = geom(9, 13);
        let v = MaskVolume::full(g, 6).unwrap();
        let expected = g.slice_area_mm2() * g.thickness_mm * 5.0;
        for spec in specs() {
            for n in [1, 17, 1000] {
                let r = estimate_volume(&v, &spec, n, None).unwrap();
                assert_eq!(r.volume_mm3, expected);
            }
        }
    }

    #[test]
    fn single_slice_and_empty_volumes_are_zero() {
        let g = geom(8, 8);
        let one = MaskVolume::full(g, 1).unwrap();
        assert_eq!(estimate_volume(&one, &SequenceSpec::default(), 50, None).unwrap().volume_mm3, 0.0);
        let empty = MaskVolume::empty(g, 5).unwrap();
        for spec in specs() {
            assert_eq!(estimate_volume(&empty, &spec, 50, None).unwrap().volume_mm3, 0.0);
        }
    }

    #[test]
    fn report_relative_error_and_determinism() {
        let g = geom(20, 20);
        let s = SliceMask::from_fn(20, 20, |x, y| (x as i32 - 10).pow(2) + (y as i32 - 9).pow(2) < 40);
        let v = MaskVolume::new(g, vec![s; 4]).unwrap();
        let spec = SequenceSpec::pseudorandom(3);
        let a = estimate_volume(&v, &spec, 500, Some(100.0)).unwrap();
        let b = estimate_volume(&v, &spec, 500, Some(100.0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.relative_error.unwrap(), (a.volume_mm3 - 100.0).abs() / 100.0);
        assert_eq!(a.volume_mm3, frustum_sum(&a.areas_mm2(), g.thickness_mm).unwrap());
        let no_truth = estimate_volume(&v, &spec, 500, None).unwrap();
        assert!(no_truth.truth_mm3.is_none() && no_truth.relative_error.is_none());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let g = geom(32, 32);
        let slices: Vec<SliceMask> = (0..12)
            .map(|k| SliceMask::from_fn(32, 32, |x, y| x + y < 20 + k * 2))
            .collect();
        let v = MaskVolume::new(g, slices).unwrap();
        for spec in specs() {
            let run = |threads| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .unwrap()
                    .install(|| estimate_volume(&v, &spec, 997, Some(1000.0)).unwrap())
            };
            assert_eq!(run(1), run(4));
        }
    }

    proptest! {
        #[test]
        fn frustum_term_is_sandwiched(a in 0.0f64..1e6, b in 0.0f64..1e6, h in 0.01f64..10.0) {
            let v = frustum_sum(&[a, b], h).unwrap();
            let tol = 1e-12 * (a.max(b) * h).max(1.0);
            prop_assert!(v >= a.min(b) * h - tol);
            prop_assert!(v <= a.max(b) * h + tol);
        }

        #[test]
        fn frustum_term_is_monotone(a in 0.0f64..1e4, b in 0.0f64..1e4, d in 0.0f64..1e3) {
            let lo = frustum_sum(&[a, b], 1.0).unwrap();
            let hi = frustum_sum(&[a, b + d], 1.0).unwrap();
            prop_assert!(hi >= lo);
        }

        #[test]
        fn frustum_of_constant_areas(a in 0.0f64..1e5, z in 1usize..50, h in 0.1f64..5.0) {
            let v = frustum_sum(&vec![a; z], h).unwrap();
            let expected = a * h * (z - 1) as f64;
            prop_assert!((v - expected).abs() <= 1e-9 * expected.max(1.0));
        }
    }
}
