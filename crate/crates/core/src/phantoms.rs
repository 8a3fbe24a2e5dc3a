//! Rasterized solids with analytically known volumes.
//!
//! Coordinates are in millimeters. Pixel `(i, j)` has its center at
//! `((i + 0.5) * dx, (j + 0.5) * dy)`; slice `k` lies at `z = k * thickness`.
//! A solid occupies `z` in `[base_z, base_z + height]`, with round shapes
//! (cylinder, cone) aligned to the stacking axis and the cone's apex at the
//! top.
//!
//! Rasterization is by voxel center: a voxel is inside when its center lies
//! inside the solid, taking lower faces as inclusive and upper faces as
//! exclusive. With that rule a box whose faces sit on any grid-aligned
//! coordinate covers exactly `extent / spacing` voxels along each axis.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maskio::{MaskVolume, SliceGeometry, SliceMask};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Cube { edge_mm: f64 },
    /// `x_mm` and `y_mm` are in-plane, `z_mm` runs along the stacking axis.
    Cuboid { x_mm: f64, y_mm: f64, z_mm: f64 },
    Cylinder { radius_mm: f64, height_mm: f64 },
    /// Base of radius `base_radius_mm` at `base_z`, apex at `base_z + height_mm`.
    Cone { base_radius_mm: f64, height_mm: f64 },
}

impl Shape {
    pub fn height_mm(&self) -> f64 {
        match *self {
            Shape::Cube { edge_mm } => edge_mm,
            Shape::Cuboid { z_mm, .. } => z_mm,
            Shape::Cylinder { height_mm, .. } | Shape::Cone { height_mm, .. } => height_mm,
        }
    }

    /// Half extents of the in-plane footprint.
    fn half_extent(&self) -> (f64, f64) {
        match *self {
            Shape::Cube { edge_mm } => (edge_mm / 2.0, edge_mm / 2.0),
            Shape::Cuboid { x_mm, y_mm, .. } => (x_mm / 2.0, y_mm / 2.0),
            Shape::Cylinder { radius_mm, .. } => (radius_mm, radius_mm),
            Shape::Cone { base_radius_mm, .. } => (base_radius_mm, base_radius_mm),
        }
    }

    fn dimensions(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Shape::Cube { edge_mm } => vec![("edge_mm", edge_mm)],
            Shape::Cuboid { x_mm, y_mm, z_mm } => vec![("x_mm", x_mm), ("y_mm", y_mm), ("z_mm", z_mm)],
            Shape::Cylinder { radius_mm, height_mm } => vec![("radius_mm", radius_mm), ("height_mm", height_mm)],
            Shape::Cone { base_radius_mm, height_mm } => {
                vec![("base_radius_mm", base_radius_mm), ("height_mm", height_mm)]
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhantomSpec {
    pub shape: Shape,
    pub geometry: SliceGeometry,
    pub slices: usize,
    /// In-plane center; `None` centers the shape on the slice.
    pub center_mm: Option<(f64, f64)>,
    /// `z` of the bottom face; `None` centers the shape between the first and
    /// last slice.
    pub base_z_mm: Option<f64>,
}

impl PhantomSpec {
    pub fn new(shape: Shape, geometry: SliceGeometry, slices: usize) -> Self {
        PhantomSpec {
            shape,
            geometry,
            slices,
            center_mm: None,
            base_z_mm: None,
        }
    }

    pub fn with_center(mut self, x_mm: f64, y_mm: f64) -> Self {
        self.center_mm = Some((x_mm, y_mm));
        self
    }

    pub fn with_base_z(mut self, z_mm: f64) -> Self {
        self.base_z_mm = Some(z_mm);
        self
    }

    pub fn center(&self) -> (f64, f64) {
        self.center_mm.unwrap_or((
            self.geometry.width_px as f64 * self.geometry.dx_mm / 2.0,
            self.geometry.height_px as f64 * self.geometry.dy_mm / 2.0,
        ))
    }

    pub fn base_z(&self) -> f64 {
        self.base_z_mm
            .unwrap_or((self.stack_height_mm() - self.shape.height_mm()) / 2.0)
    }

    /// Distance between the first and last slice.
    pub fn stack_height_mm(&self) -> f64 {
        self.slices.saturating_sub(1) as f64 * self.geometry.thickness_mm
    }

    pub fn slice_z(&self, k: usize) -> f64 {
        k as f64 * self.geometry.thickness_mm
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.slices == 0 {
            return Err(Error::InvalidGeometry("a phantom needs at least one slice".into()));
        }
        for (name, value) in self.shape.dimensions() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }

        let g = &self.geometry;
        let (cx, cy) = self.center();
        let (hx, hy) = self.shape.half_extent();
        let width = g.width_px as f64 * g.dx_mm;
        let height = g.height_px as f64 * g.dy_mm;
        if cx - hx < g.dx_mm || cx + hx > width - g.dx_mm || cy - hy < g.dy_mm || cy + hy > height - g.dy_mm {
            return Err(Error::PhantomDoesNotFit(format!(
                "footprint [{:.3}, {:.3}] x [{:.3}, {:.3}] mm needs a one-pixel margin inside {:.3} x {:.3} mm",
                cx - hx,
                cx + hx,
                cy - hy,
                cy + hy,
                width,
                height
            )));
        }

        let eps = z_tolerance(g);
        let base = self.base_z();
        let top = base + self.shape.height_mm();
        if base < -eps || top > self.stack_height_mm() + eps {
            return Err(Error::PhantomDoesNotFit(format!(
                "z range [{base:.3}, {top:.3}] mm exceeds the stack [0, {:.3}] mm ({} slices of {} mm)",
                self.stack_height_mm(),
                self.slices,
                g.thickness_mm
            )));
        }
        Ok(())
    }
}

fn z_tolerance(g: &SliceGeometry) -> f64 {
    1e-9 * g.thickness_mm
}

/// Closed-form volume of the ideal solid, in mm^3.
pub fn analytic_volume(spec: &PhantomSpec) -> f64 {
    match spec.shape {
        Shape::Cube { edge_mm } => edge_mm.powi(3),
        Shape::Cuboid { x_mm, y_mm, z_mm } => x_mm * y_mm * z_mm,
        Shape::Cylinder { radius_mm, height_mm } => PI * radius_mm * radius_mm * height_mm,
        Shape::Cone { base_radius_mm, height_mm } => PI * base_radius_mm * base_radius_mm * height_mm / 3.0,
    }
}

/// Analytic cross-section area at each slice position, in mm^2. The solid is
/// treated as closed here, so slices lying exactly on an end face see the
/// full face.
pub fn exact_slice_areas(spec: &PhantomSpec) -> Vec<f64> {
    let eps = z_tolerance(&spec.geometry);
    let base = spec.base_z();
    let height = spec.shape.height_mm();
    (0..spec.slices)
        .map(|k| {
            let z = spec.slice_z(k);
            if z < base - eps || z > base + height + eps {
                return 0.0;
            }
            match spec.shape {
                Shape::Cube { edge_mm } => edge_mm * edge_mm,
                Shape::Cuboid { x_mm, y_mm, .. } => x_mm * y_mm,
                Shape::Cylinder { radius_mm, .. } => PI * radius_mm * radius_mm,
                Shape::Cone { base_radius_mm, height_mm } => {
                    let t = ((z - base) / height_mm).clamp(0.0, 1.0);
                    let r = base_radius_mm * (1.0 - t);
                    PI * r * r
                }
            }
        })
        .collect()
}

/// Voxel-center rasterization of the solid onto `spec`'s grid.
pub fn rasterize(spec: &PhantomSpec) -> Result<MaskVolume> {
    spec.validate()?;
    let g = spec.geometry;
    let (cx, cy) = spec.center();
    let base = spec.base_z();
    let top = base + spec.shape.height_mm();

    let slices = (0..spec.slices)
        .map(|k| {
            let z = spec.slice_z(k);
            if z < base || z >= top {
                return SliceMask::empty(g.width_px, g.height_px);
            }
            match spec.shape {
                Shape::Cube { .. } | Shape::Cuboid { .. } => {
                    let (hx, hy) = spec.shape.half_extent();
                    let (x0, x1, y0, y1) = (cx - hx, cx + hx, cy - hy, cy + hy);
                    SliceMask::from_fn(g.width_px, g.height_px, |i, j| {
                        let x = (i as f64 + 0.5) * g.dx_mm;
                        let y = (j as f64 + 0.5) * g.dy_mm;
                        x0 <= x && x < x1 && y0 <= y && y < y1
                    })
                }
                Shape::Cylinder { radius_mm, .. } => disc(&g, cx, cy, radius_mm),
                Shape::Cone { base_radius_mm, height_mm } => {
                    let r = base_radius_mm * (1.0 - (z - base) / height_mm);
                    disc(&g, cx, cy, r)
                }
            }
        })
        .collect();
    MaskVolume::new(g, slices)
}

fn disc(g: &SliceGeometry, cx: f64, cy: f64, r: f64) -> SliceMask {
    let r2 = r * r;
    SliceMask::from_fn(g.width_px, g.height_px, |i, j| {
        let x = (i as f64 + 0.5) * g.dx_mm - cx;
        let y = (j as f64 + 0.5) * g.dy_mm - cy;
        x * x + y * y < r2
    })
}

/// Axis-aligned ellipsoid, used to build irregular lesion-like masks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ellipsoid {
    pub center_mm: [f64; 3],
    pub radii_mm: [f64; 3],
}

/// Voxel-center rasterization of a union of ellipsoids.
pub fn rasterize_ellipsoids(geometry: SliceGeometry, slices: usize, parts: &[Ellipsoid]) -> Result<MaskVolume> {
    geometry.validate()?;
    if parts.iter().any(|e| e.radii_mm.iter().any(|&r| !(r.is_finite() && r > 0.0))) {
        return Err(Error::InvalidArgument("ellipsoid radii must be positive".into()));
    }
    let g = geometry;
    let masks = (0..slices)
        .map(|k| {
            let z = k as f64 * g.thickness_mm;
            SliceMask::from_fn(g.width_px, g.height_px, |i, j| {
                let x = (i as f64 + 0.5) * g.dx_mm;
                let y = (j as f64 + 0.5) * g.dy_mm;
                parts.iter().any(|e| {
                    let a = (x - e.center_mm[0]) / e.radii_mm[0];
                    let b = (y - e.center_mm[1]) / e.radii_mm[1];
                    let c = (z - e.center_mm[2]) / e.radii_mm[2];
                    a * a + b * b + c * c < 1.0
                })
            })
        })
        .collect();
    MaskVolume::new(g, masks)
}

/// Canonical regular models on a 128 x 128 grid at 1 mm spacing.
///
/// Each slice count leaves an odd number of millimeters between the solid
/// and the stack ends, so the centered solid's end faces fall half-way
/// between slices and its voxel count matches the analytic volume.
pub mod canonical {
    use super::*;

    pub const GRID_PX: usize = 128;
    pub const SPACING_MM: f64 = 1.0;

    fn grid() -> SliceGeometry {
        SliceGeometry::isotropic(GRID_PX, GRID_PX, SPACING_MM).expect("valid canonical grid")
    }

    /// 80 mm cube, 512 cm^3.
    pub fn cube() -> PhantomSpec {
        PhantomSpec::new(Shape::Cube { edge_mm: 80.0 }, grid(), 100)
    }

    /// 60 x 35 mm footprint, 110 mm tall: 231 cm^3.
    pub fn cuboid() -> PhantomSpec {
        PhantomSpec::new(
            Shape::Cuboid {
                x_mm: 60.0,
                y_mm: 35.0,
                z_mm: 110.0,
            },
            grid(),
            130,
        )
    }

    /// r = 30 mm, h = 150 mm: about 424.115 cm^3.
    pub fn cylinder() -> PhantomSpec {
        PhantomSpec::new(
            Shape::Cylinder {
                radius_mm: 30.0,
                height_mm: 150.0,
            },
            grid(),
            170,
        )
    }

    /// Union of four overlapping ellipsoids standing in for an irregular lesion.
    pub fn irregular_lesion() -> Result<MaskVolume> {
        let parts = [
            Ellipsoid {
                center_mm: [60.0, 62.0, 30.0],
                radii_mm: [22.0, 16.0, 18.0],
            },
            Ellipsoid {
                center_mm: [76.0, 70.0, 38.0],
                radii_mm: [14.0, 20.0, 12.0],
            },
            Ellipsoid {
                center_mm: [52.0, 80.0, 24.0],
                radii_mm: [10.0, 9.0, 14.0],
            },
            Ellipsoid {
                center_mm: [70.0, 48.0, 44.0],
                radii_mm: [9.0, 12.0, 8.0],
            },
        ];
        rasterize_ellipsoids(grid(), 61, &parts)
    }
}
