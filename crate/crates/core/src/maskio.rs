//! Slice-stack mask volumes and their on-disk format.
//!
//! A volume is described by a small text manifest next to a raw voxel file:
//!
//! ```text
//! width = 128
//! height = 128
//! slices = 100
//! dx_mm = 1
//! dy_mm = 1
//! thickness_mm = 1
//! encoding = u8
//! data = cube.raw
//! ```
//!
//! Voxels are stored slice-major, then row-major (`x` fastest). `u8` voxels
//! are inside when `>= 128`; `f32le` voxels are inside when `> 0.0`, so the
//! `+4.0` / `-4.0` lesion/background convention binarizes unambiguously.
//! Blank lines and lines starting with `#` are ignored; any other line must
//! be one of the keys above, each given exactly once.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequences::Point2;

/// Value written for inside voxels in `f32le` files.
pub const F32_INSIDE: f32 = 4.0;
/// Value written for background voxels in `f32le` files.
pub const F32_BACKGROUND: f32 = -4.0;

const U8_INSIDE: u8 = 255;
const U8_THRESHOLD: u8 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SliceGeometry {
    pub width_px: usize,
    pub height_px: usize,
    pub dx_mm: f64,
    pub dy_mm: f64,
    /// Spacing between consecutive slices (`h`).
    pub thickness_mm: f64,
}

impl SliceGeometry {
    pub fn new(
        width_px: usize,
        height_px: usize,
        dx_mm: f64,
        dy_mm: f64,
        thickness_mm: f64,
    ) -> Result<Self> {
        let geometry = SliceGeometry {
            width_px,
            height_px,
            dx_mm,
            dy_mm,
            thickness_mm,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    /// Isotropic grid with the given spacing in every direction.
    pub fn isotropic(width_px: usize, height_px: usize, spacing_mm: f64) -> Result<Self> {
        Self::new(width_px, height_px, spacing_mm, spacing_mm, spacing_mm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::InvalidGeometry(format!(
                "slice size must be positive, got {}x{}",
                self.width_px, self.height_px
            )));
        }
        for (name, value) in [
            ("dx_mm", self.dx_mm),
            ("dy_mm", self.dy_mm),
            ("thickness_mm", self.thickness_mm),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Physical area of a whole slice, `S_N`.
    pub fn slice_area_mm2(&self) -> f64 {
        (self.width_px as f64 * self.dx_mm) * (self.height_px as f64 * self.dy_mm)
    }

    pub fn pixel_area_mm2(&self) -> f64 {
        self.dx_mm * self.dy_mm
    }

    pub fn voxel_volume_mm3(&self) -> f64 {
        self.dx_mm * self.dy_mm * self.thickness_mm
    }

    pub fn pixels_per_slice(&self) -> usize {
        self.width_px * self.height_px
    }
}

/// One binary slice, row-major, `true` = inside the region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl SliceMask {
    /// All-background slice.
    pub fn empty(width: usize, height: usize) -> Self {
        SliceMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        SliceMask {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidGeometry(format!(
                "slice of {width}x{height} needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(SliceMask {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        SliceMask {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, inside: bool) {
        self.bits[y * self.width + x] = inside;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_inside(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Pixel hit by a point of the unit square (floor mapping, clamped to the
    /// last pixel so that rounding of `u * width` can never overflow).
    #[inline]
    pub fn contains_point(&self, p: Point2) -> bool {
        let x = ((p.u * self.width as f64) as usize).min(self.width - 1);
        let y = ((p.v * self.height as f64) as usize).min(self.height - 1);
        self.bits[y * self.width + x]
    }
}

/// Ordered stack of slices sharing one geometry. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskVolume {
    geometry: SliceGeometry,
    slices: Vec<SliceMask>,
}

impl MaskVolume {
    pub fn new(geometry: SliceGeometry, slices: Vec<SliceMask>) -> Result<Self> {
        geometry.validate()?;
        if slices.is_empty() {
            return Err(Error::InvalidGeometry("a volume needs at least one slice".into()));
        }
        for (i, s) in slices.iter().enumerate() {
            if s.width != geometry.width_px || s.height != geometry.height_px {
                return Err(Error::InvalidGeometry(format!(
                    "slice {i} is {}x{}, geometry is {}x{}",
                    s.width, s.height, geometry.width_px, geometry.height_px
                )));
            }
        }
        Ok(MaskVolume { geometry, slices })
    }

    /// `count` empty slices.
    pub fn empty(geometry: SliceGeometry, count: usize) -> Result<Self> {
        let slice = SliceMask::empty(geometry.width_px, geometry.height_px);
        Self::new(geometry, vec![slice; count])
    }

    /// `count` slices with every voxel inside.
    pub fn full(geometry: SliceGeometry, count: usize) -> Result<Self> {
        let slice = SliceMask::full(geometry.width_px, geometry.height_px);
        Self::new(geometry, vec![slice; count])
    }

    pub fn geometry(&self) -> &SliceGeometry {
        &self.geometry
    }

    pub fn slices(&self) -> &[SliceMask] {
        &self.slices
    }

    pub fn slice(&self, index: usize) -> Result<&SliceMask> {
        self.slices.get(index).ok_or(Error::SliceOutOfRange {
            index,
            slices: self.slices.len(),
        })
    }

    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn count_inside(&self) -> usize {
        self.slices.iter().map(SliceMask::count_inside).sum()
    }

    /// Inside-voxel count times voxel volume.
    pub fn voxel_count_volume_mm3(&self) -> f64 {
        self.count_inside() as f64 * self.geometry.voxel_volume_mm3()
    }

    /// Exact inside area of each slice (pixel count times pixel area).
    pub fn slice_areas_mm2(&self) -> Vec<f64> {
        let pixel = self.geometry.pixel_area_mm2();
        self.slices
            .iter()
            .map(|s| s.count_inside() as f64 * pixel)
            .collect()
    }
}

/// Whether the point `p` of slice `slice_index` falls on an inside pixel.
pub fn contains(volume: &MaskVolume, slice_index: usize, p: Point2) -> Result<bool> {
    Ok(volume.slice(slice_index)?.contains_point(p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    U8,
    F32le,
}

impl Encoding {
    pub fn bytes_per_voxel(self) -> usize {
        match self {
            Encoding::U8 => 1,
            Encoding::F32le => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Encoding::U8 => "u8",
            Encoding::F32le => "f32le",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "u8" => Ok(Encoding::U8),
            "f32le" => Ok(Encoding::F32le),
            other => Err(format!("unknown encoding `{other}` (expected u8 or f32le)")),
        }
    }
}

const KEYS: [&str; 8] = [
    "width",
    "height",
    "slices",
    "dx_mm",
    "dy_mm",
    "thickness_mm",
    "encoding",
    "data",
];

#[derive(Debug)]
struct Manifest {
    geometry: SliceGeometry,
    slices: usize,
    encoding: Encoding,
    data: PathBuf,
}

fn parse_manifest(path: &Path, text: &str) -> Result<Manifest> {
    let err = |key: &str, offset: usize, message: String| Error::Manifest {
        path: path.to_path_buf(),
        key: key.to_string(),
        offset,
        message,
    };

    let mut values: [Option<(&str, usize)>; KEYS.len()] = [None; KEYS.len()];
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let line_offset = offset;
        offset += line.len();
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(err(trimmed, line_offset, "expected `key = value`".into()));
        };
        let key = key.trim();
        let value = value.trim();
        let Some(slot) = KEYS.iter().position(|k| *k == key) else {
            return Err(err(key, line_offset, "unknown key".into()));
        };
        if values[slot].is_some() {
            return Err(err(key, line_offset, "duplicate key".into()));
        }
        values[slot] = Some((value, line_offset));
    }

    let get = |name: &str| -> Result<(&str, usize)> {
        let slot = KEYS.iter().position(|k| *k == name).expect("known key");
        values[slot].ok_or_else(|| err(name, text.len(), "missing key".into()))
    };
    let positive_int = |name: &str| -> Result<usize> {
        let (raw, at) = get(name)?;
        match raw.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(err(name, at, format!("expected a positive integer, got `{raw}`"))),
        }
    };
    let positive_real = |name: &str| -> Result<f64> {
        let (raw, at) = get(name)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            _ => Err(err(name, at, format!("expected a positive number, got `{raw}`"))),
        }
    };

    let geometry = SliceGeometry {
        width_px: positive_int("width")?,
        height_px: positive_int("height")?,
        dx_mm: positive_real("dx_mm")?,
        dy_mm: positive_real("dy_mm")?,
        thickness_mm: positive_real("thickness_mm")?,
    };
    let slices = positive_int("slices")?;
    let (raw, at) = get("encoding")?;
    let encoding = raw.parse::<Encoding>().map_err(|m| err("encoding", at, m))?;
    let (raw, at) = get("data")?;
    if raw.is_empty() {
        return Err(err("data", at, "empty data path".into()));
    }
    Ok(Manifest {
        geometry,
        slices,
        encoding,
        data: PathBuf::from(raw),
    })
}

/// Reads a manifest and the raw voxel file it references.
pub fn load_volume(manifest_path: impl AsRef<Path>) -> Result<MaskVolume> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest = parse_manifest(manifest_path, &text)?;

    let data_path = match manifest_path.parent() {
        Some(dir) => dir.join(&manifest.data),
        None => manifest.data.clone(),
    };
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;

    let g = manifest.geometry;
    let per_slice = g.pixels_per_slice();
    let expected = per_slice as u64 * manifest.slices as u64 * manifest.encoding.bytes_per_voxel() as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            path: data_path,
            expected,
            actual: bytes.len() as u64,
        });
    }

    let bits: Vec<bool> = match manifest.encoding {
        Encoding::U8 => bytes.iter().map(|&b| b >= U8_THRESHOLD).collect(),
        Encoding::F32le => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) > 0.0)
            .collect(),
    };
    let slices = bits
        .chunks_exact(per_slice)
        .map(|chunk| SliceMask {
            width: g.width_px,
            height: g.height_px,
            bits: chunk.to_vec(),
        })
        .collect();
    MaskVolume::new(g, slices)
}

/// Writes `volume` as a manifest at `manifest_path` plus a raw file beside
/// it named after the manifest's stem (`<stem>.raw`).
pub fn save_volume(volume: &MaskVolume, manifest_path: impl AsRef<Path>, encoding: Encoding) -> Result<()> {
    let manifest_path = manifest_path.as_ref();
    let stem = manifest_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "volume".to_string());
    let data_name = format!("{stem}.raw");
    let data_path = manifest_path
        .parent()
        .map(|d| d.join(&data_name))
        .unwrap_or_else(|| PathBuf::from(&data_name));

    let g = volume.geometry();
    let voxels = volume.slices.iter().flat_map(|s| s.bits.iter().copied());
    let mut raw = Vec::with_capacity(g.pixels_per_slice() * volume.num_slices() * encoding.bytes_per_voxel());
    match encoding {
        Encoding::U8 => raw.extend(voxels.map(|b| if b { U8_INSIDE } else { 0 })),
        Encoding::F32le => {
            for b in voxels {
                let v = if b { F32_INSIDE } else { F32_BACKGROUND };
                raw.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    fs::write(&data_path, raw).map_err(|e| Error::io(&data_path, e))?;

    let manifest = format!(
        "width = {}\nheight = {}\nslices = {}\ndx_mm = {}\ndy_mm = {}\nthickness_mm = {}\nencoding = {}\ndata = {}\n",
        g.width_px,
        g.height_px,
        volume.num_slices(),
        g.dx_mm,
        g.dy_mm,
        g.thickness_mm,
        encoding,
        data_name
    );
    fs::write(manifest_path, manifest).map_err(|e| Error::io(manifest_path, e))
}
