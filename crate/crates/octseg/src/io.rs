//! Volume and depth-map files.
//!
//! Volumes are read either from a raw `u8` file with a JSON sidecar of the
//! same stem, or from a directory of 8-bit binary PGM B-scans taken in
//! lexicographic order. Depth maps are written as headerless CSV (one row
//! per frame) or as 16-bit PGM images.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageBuffer, ImageFormat, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::DepthMap;
use crate::pipeline::{BoundaryId, BoundarySet};
use crate::volume::{Volume, VolumeMeta};

/// Voxel order written to and expected in sidecars.
pub const RAW_ORDER: &str = "x-fastest,then z, then y";

/// On-disk volume formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeFormat {
    /// Raw bytes plus a `.json` sidecar.
    Raw,
    /// Directory of PGM frames.
    PgmStack,
}

impl VolumeFormat {
    /// Directories are PGM stacks, anything else raw.
    pub fn detect(path: &Path) -> Self {
        if path.is_dir() {
            VolumeFormat::PgmStack
        } else {
            VolumeFormat::Raw
        }
    }
}

/// JSON sidecar describing a raw volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub width: usize,
    pub frames: usize,
    pub depth: usize,
    #[serde(default = "default_order")]
    pub order: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axial_um_per_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

fn default_order() -> String {
    RAW_ORDER.to_string()
}

/// Sidecar path for a raw volume file.
pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Load a volume and its metadata.
pub fn load_volume(path: &Path, format: VolumeFormat) -> Result<(Volume<u8>, VolumeMeta)> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ));
    }
    match format {
        VolumeFormat::Raw => load_raw(path),
        VolumeFormat::PgmStack => load_pgm_stack(path),
    }
}

fn load_raw(path: &Path) -> Result<(Volume<u8>, VolumeMeta)> {
    let side_path = sidecar_path(path);
    let side: Sidecar = serde_json::from_slice(&read(&side_path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", side_path.display())))?;
    if side.order.replace(' ', "") != RAW_ORDER.replace(' ', "") {
        return Err(Error::Format(format!(
            "{}: unsupported voxel order '{}'",
            side_path.display(),
            side.order
        )));
    }
    let bytes = read(path)?;
    let want = side.width * side.frames * side.depth;
    if bytes.len() != want {
        return Err(Error::DimensionMismatch(format!(
            "{}: sidecar declares {}x{}x{} = {want} voxels, file has {} bytes",
            path.display(),
            side.width,
            side.frames,
            side.depth,
            bytes.len()
        )));
    }
    let vol = Volume::from_vec(side.width, side.frames, side.depth, bytes)?;
    let meta = VolumeMeta {
        axial_um_per_px: side.axial_um_per_px,
        source: side.source.unwrap_or_else(|| path.display().to_string()),
    };
    meta.check()?;
    Ok((vol, meta))
}

fn load_pgm_stack(dir: &Path) -> Result<(Volume<u8>, VolumeMeta)> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Format(format!("{}: no .pgm frames", dir.display())));
    }
    let mut data = Vec::new();
    let mut shape = None;
    for f in &files {
        let img = image::load_from_memory_with_format(&read(f)?, ImageFormat::Pnm)
            .map_err(|e| Error::Format(format!("{}: {e}", f.display())))?;
        let DynamicImage::ImageLuma8(img) = img else {
            return Err(Error::Format(format!(
                "{}: expected an 8-bit grayscale PGM, found {:?}",
                f.display(),
                img.color()
            )));
        };
        let dims = img.dimensions();
        match shape {
            None => shape = Some(dims),
            Some(s) if s != dims => {
                return Err(Error::DimensionMismatch(format!(
                    "{}: frame is {}x{}, earlier frames are {}x{}",
                    f.display(),
                    dims.0,
                    dims.1,
                    s.0,
                    s.1
                )))
            }
            Some(_) => {}
        }
        data.extend_from_slice(img.as_raw());
    }
    let (w, d) = shape.expect("at least one frame");
    let vol = Volume::from_vec(w as usize, files.len(), d as usize, data)?;
    let meta = VolumeMeta {
        axial_um_per_px: None,
        source: dir.display().to_string(),
    };
    Ok((vol, meta))
}

/// Write a raw volume and its sidecar.
pub fn save_volume_raw(vol: &Volume<u8>, meta: &VolumeMeta, path: &Path) -> Result<()> {
    let (width, frames, depth) = vol.dims();
    let side = Sidecar {
        width,
        frames,
        depth,
        order: RAW_ORDER.to_string(),
        axial_um_per_px: meta.axial_um_per_px,
        source: Some(meta.source.clone()),
    };
    write(path, vol.as_slice())?;
    write(&sidecar_path(path), serde_json::to_string_pretty(&side)?.as_bytes())
}

/// Write every B-scan as `frame_NNNN.pgm` into `dir`.
pub fn save_volume_pgm(vol: &Volume<u8>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (w, f, d) = vol.dims();
    let digits = f.to_string().len().max(4);
    for y in 0..f {
        let img = GrayImage::from_raw(w as u32, d as u32, vol.frame(y).to_vec()).expect("frame size");
        let path = dir.join(format!("frame_{y:0digits$}.pgm"));
        save_image(&DynamicImage::ImageLuma8(img), &path, ImageFormat::Pnm)?;
    }
    Ok(())
}

pub(crate) fn save_image(img: &DynamicImage, path: &Path, format: ImageFormat) -> Result<()> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, format)?;
    write(path, buf.get_ref())
}

/// Depth-map file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthFormat {
    Csv,
    /// 16-bit grayscale PGM, depths rounded to integers.
    Pgm16,
}

impl DepthFormat {
    pub fn extension(self) -> &'static str {
        match self {
            DepthFormat::Csv => "csv",
            DepthFormat::Pgm16 => "pgm",
        }
    }
}

/// Write a depth map.
pub fn save_depth_map(map: &DepthMap, path: &Path, format: DepthFormat) -> Result<()> {
    if !map.is_finite() {
        return Err(Error::InvalidArgument("depth map has non-finite entries".into()));
    }
    match format {
        DepthFormat::Csv => write(path, &depth_map_csv(map)?),
        DepthFormat::Pgm16 => {
            let mut px = Vec::with_capacity(map.len());
            for &z in map.as_slice() {
                let r = z.round();
                if !(0.0..=65535.0).contains(&r) {
                    return Err(Error::InvalidArgument(format!("depth {z} does not fit in 16 bits")));
                }
                px.push(r as u16);
            }
            let img: ImageBuffer<Luma<u16>, Vec<u16>> =
                ImageBuffer::from_raw(map.width() as u32, map.frames() as u32, px).expect("map size");
            save_image(&DynamicImage::ImageLuma16(img), path, ImageFormat::Pnm)
        }
    }
}

/// CSV bytes for a depth map: one row per frame, LF line ends, no header.
pub fn depth_map_csv(map: &DepthMap) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for y in 0..map.frames() {
        w.write_record(map.row(y).iter().map(|z| z.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Read a depth map written by [`save_depth_map`].
pub fn load_depth_map(path: &Path, format: DepthFormat) -> Result<DepthMap> {
    let bytes = read(path)?;
    match format {
        DepthFormat::Csv => parse_depth_csv(&bytes).map_err(|e| match e {
            Error::Format(m) | Error::DimensionMismatch(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        }),
        DepthFormat::Pgm16 => {
            let img = image::load_from_memory_with_format(&bytes, ImageFormat::Pnm)
                .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
            let img = img.to_luma16();
            let (w, h) = img.dimensions();
            DepthMap::from_vec(w as usize, h as usize, img.into_raw().into_iter().map(f64::from).collect())
        }
    }
}

fn parse_depth_csv(bytes: &[u8]) -> Result<DepthMap> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("row {}: '{s}' is not a number", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("empty depth map".into()));
    }
    DepthMap::from_rows(&rows)
}

/// Write `<stem>.csv` (and `<stem>.pgm` when `with_pgm`) for every boundary.
pub fn save_boundary_set(set: &BoundarySet, dir: &Path, with_pgm: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (id, map) in set.iter() {
        save_depth_map(map, &boundary_path(dir, id, DepthFormat::Csv), DepthFormat::Csv)?;
        if with_pgm {
            save_depth_map(map, &boundary_path(dir, id, DepthFormat::Pgm16), DepthFormat::Pgm16)?;
        }
    }
    Ok(())
}

pub fn boundary_path(dir: &Path, id: BoundaryId, format: DepthFormat) -> PathBuf {
    dir.join(format!("{}.{}", id.file_stem(), format.extension()))
}

/// Read all seven boundary CSVs from `dir`.
pub fn load_boundary_set(dir: &Path) -> Result<BoundarySet> {
    let mut set = BoundarySet::new();
    for id in BoundaryId::ALL {
        let path = boundary_path(dir, id, DepthFormat::Csv);
        if !path.exists() {
            return Err(Error::Format(format!(
                "{}: boundary {id} missing (expected {})",
                dir.display(),
                path.display()
            )));
        }
        set.insert(id, load_depth_map(&path, DepthFormat::Csv)?)?;
    }
    Ok(set)
}
