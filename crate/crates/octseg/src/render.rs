//! B-scan overlays and thickness heatmaps as PNG.
//!
//! Heatmaps are always written together with a CSV of the plotted values
//! and a JSON legend, so the image is never the only copy of the data.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::{DynamicImage, ImageFormat, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{depth_map_csv, save_image, write};
use crate::map::Map2;
use crate::pipeline::{BoundaryId, BoundarySet};
use crate::volume::Volume;

/// Colour ramp used for heatmaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ColorRamp {
    #[default]
    Viridis,
    Magma,
    Turbo,
    Greys,
}

impl ColorRamp {
    pub const ALL: [ColorRamp; 4] = [ColorRamp::Viridis, ColorRamp::Magma, ColorRamp::Turbo, ColorRamp::Greys];

    pub fn name(self) -> &'static str {
        match self {
            ColorRamp::Viridis => "viridis",
            ColorRamp::Magma => "magma",
            ColorRamp::Turbo => "turbo",
            ColorRamp::Greys => "greys",
        }
    }

    /// Colour at `t` in `[0, 1]`; values outside are clamped.
    pub fn at(self, t: f64) -> [u8; 3] {
        let g = match self {
            ColorRamp::Viridis => colorous::VIRIDIS,
            ColorRamp::Magma => colorous::MAGMA,
            ColorRamp::Turbo => colorous::TURBO,
            ColorRamp::Greys => colorous::GREYS,
        };
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        // GREYS runs from white to black; flip it so larger is brighter.
        let t = if self == ColorRamp::Greys { 1.0 - t } else { t };
        g.eval_continuous(t).as_array()
    }
}

impl fmt::Display for ColorRamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ColorRamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown colour ramp '{s}'")))
    }
}

/// Drawing options for overlays and heatmaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderStyle {
    /// One colour per boundary, in [`BoundaryId::ALL`] order.
    pub colors: [[u8; 3]; 7],
    pub line_thickness: usize,
    pub ramp: ColorRamp,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            colors: [
                [255, 48, 48],
                [255, 160, 0],
                [240, 240, 0],
                [0, 220, 80],
                [0, 200, 255],
                [70, 90, 255],
                [230, 0, 230],
            ],
            line_thickness: 1,
            ramp: ColorRamp::Viridis,
        }
    }
}

impl RenderStyle {
    pub fn validate(&self) -> Result<()> {
        for i in 0..7 {
            for j in i + 1..7 {
                if self.colors[i] == self.colors[j] {
                    return Err(Error::Config(format!(
                        "boundaries {} and {} share the colour {:?}",
                        BoundaryId::ALL[i],
                        BoundaryId::ALL[j],
                        self.colors[i]
                    )));
                }
            }
        }
        if self.line_thickness == 0 {
            return Err(Error::Config("line thickness must be >= 1".into()));
        }
        Ok(())
    }

    pub fn color(&self, id: BoundaryId) -> [u8; 3] {
        self.colors[id.rank()]
    }
}

/// B-scan `frame` as grayscale (width × depth) with every boundary of `set`
/// drawn as a polyline.
pub fn render_overlay(vol: &Volume<u8>, set: &BoundarySet, frame: usize, style: &RenderStyle) -> Result<RgbImage> {
    style.validate()?;
    let (w, f, d) = vol.dims();
    if frame >= f {
        return Err(Error::InvalidArgument(format!(
            "frame {frame} out of range (volume has {f} frames)"
        )));
    }
    if let Some((bw, bf)) = set.dims() {
        if (bw, bf) != (w, f) {
            return Err(Error::DimensionMismatch(format!(
                "boundaries are {bw}x{bf}, volume is {w}x{f}"
            )));
        }
    }
    let bscan = vol.frame(frame);
    let mut img = RgbImage::from_fn(w as u32, d as u32, |x, z| {
        let v = bscan[x as usize + w * z as usize];
        Rgb([v, v, v])
    });
    for (id, map) in set.iter() {
        let row = map.row(frame);
        let color = Rgb(style.color(id));
        for x in 0..w {
            let x1 = (x + 1).min(w - 1);
            draw_segment(&mut img, (x as f64, row[x]), (x1 as f64, row[x1]), style.line_thickness, color);
        }
    }
    Ok(img)
}

// Square brush stepped along the segment at sub-pixel spacing.
fn draw_segment(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), thickness: usize, color: Rgb<u8>) {
    if !(a.1.is_finite() && b.1.is_finite()) {
        return;
    }
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()) * 2.0).ceil().max(1.0) as usize;
    let lo = -((thickness as i64 - 1) / 2);
    let hi = thickness as i64 / 2;
    let (w, h) = (img.width() as i64, img.height() as i64);
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let cx = (a.0 + t * (b.0 - a.0)).round() as i64;
        let cz = (a.1 + t * (b.1 - a.1)).round() as i64;
        for dz in lo..=hi {
            for dx in lo..=hi {
                let (x, z) = (cx + dx, cz + dz);
                if (0..w).contains(&x) && (0..h).contains(&z) {
                    img.put_pixel(x as u32, z as u32, color);
                }
            }
        }
    }
}

/// Value range and meaning of a heatmap, stored next to the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapLegend {
    pub top: String,
    pub bottom: String,
    pub unit: String,
    pub min: f64,
    pub max: f64,
    pub ramp: ColorRamp,
    pub width: usize,
    pub frames: usize,
}

/// Heatmap of `values` (one pixel per A-scan, width × frames), scaled
/// linearly from the minimum to the maximum value.
pub fn render_heatmap(values: &Map2<f64>, ramp: ColorRamp) -> Result<(RgbImage, f64, f64)> {
    if !values.is_finite() {
        return Err(Error::InvalidArgument("heatmap values must be finite".into()));
    }
    let (lo, hi) = values.min_max();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let img = RgbImage::from_fn(values.width() as u32, values.frames() as u32, |x, y| {
        Rgb(ramp.at((values.get(x as usize, y as usize) - lo) / span))
    });
    Ok((img, lo, hi))
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    save_image(&DynamicImage::ImageRgb8(img.clone()), path, ImageFormat::Png)
}

/// Paths written by [`save_thickness_heatmap`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapFiles {
    pub png: PathBuf,
    pub csv: PathBuf,
    pub legend: PathBuf,
}

/// Write the heatmap PNG at `png`, the values as `<stem>.csv` and the
/// legend as `<stem>.json`.
pub fn save_thickness_heatmap(
    values: &Map2<f64>,
    top: BoundaryId,
    bottom: BoundaryId,
    unit: &str,
    ramp: ColorRamp,
    png: &Path,
) -> Result<(HeatmapLegend, HeatmapFiles)> {
    let (img, min, max) = render_heatmap(values, ramp)?;
    let legend = HeatmapLegend {
        top: top.name().into(),
        bottom: bottom.name().into(),
        unit: unit.into(),
        min,
        max,
        ramp,
        width: values.width(),
        frames: values.frames(),
    };
    let files = HeatmapFiles {
        png: png.to_path_buf(),
        csv: png.with_extension("csv"),
        legend: png.with_extension("json"),
    };
    save_png(&img, &files.png)?;
    write(&files.csv, &depth_map_csv(values)?)?;
    write(&files.legend, serde_json::to_string_pretty(&legend)?.as_bytes())?;
    Ok((legend, files))
}
