//! Synthetic layered volumes with exact ground-truth surfaces, and the error
//! metrics used to score a segmentation against them.

mod eval;

pub use eval::{evaluate, layer_thickness_report, ErrorReport, ErrorStats, LayerThickness, LAYERS};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{DepthMap, Map2};
use crate::pipeline::{BoundaryId, BoundarySet};
use crate::volume::Volume;

/// One boundary surface: `base + ax*sin(2πx/λx + φx) + ay*sin(2πy/λy + φy)`,
/// pushed down by `fovea_dip * g(x, y)` where `g` is the unit fovea bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceSpec {
    pub base: f64,
    pub amplitude_x: f64,
    pub wavelength_x: f64,
    pub amplitude_y: f64,
    pub wavelength_y: f64,
    pub fovea_dip: f64,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        Self {
            base: 0.0,
            amplitude_x: 12.0,
            wavelength_x: 1024.0,
            amplitude_y: 6.0,
            wavelength_y: 400.0,
            fovea_dip: 0.0,
        }
    }
}

/// Gaussian pit; the centre defaults to the middle of the volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FoveaSpec {
    pub center: Option<(f64, f64)>,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl Default for FoveaSpec {
    fn default() -> Self {
        Self {
            center: None,
            sigma_x: 50.0,
            sigma_y: 11.0,
        }
    }
}

/// Attenuated columns running through every frame below the NFL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShadowSpec {
    pub count: usize,
    pub width: usize,
    /// Multiplier applied to shadowed voxels.
    pub attenuation: f64,
}

impl Default for ShadowSpec {
    fn default() -> Self {
        Self {
            count: 0,
            width: 8,
            attenuation: 0.65,
        }
    }
}

/// Bright flattened ellipsoids floating in the vitreous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlobSpec {
    pub count: usize,
    pub intensity: f64,
    /// Semi-axis ranges `(min, max)` along x, y and z.
    pub radius_x: (f64, f64),
    pub radius_y: (f64, f64),
    pub radius_z: (f64, f64),
    /// Range of the gap between a blob's lower edge and the ILM.
    pub gap: (f64, f64),
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            count: 0,
            intensity: 210.0,
            radius_x: (8.0, 15.0),
            radius_y: (1.5, 3.0),
            radius_z: (1.5, 2.5),
            gap: (5.0, 20.0),
        }
    }
}

/// Elliptic patches where the top of the IS/OS band takes the ONL intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DarkSpotSpec {
    pub count: usize,
    pub radius_x: f64,
    pub radius_y: f64,
    /// Depth below the IS/OS surface that is darkened.
    pub thickness: f64,
    /// Spot centres are drawn within this lateral distance of the fovea centre.
    pub spread_x: f64,
    pub spread_y: f64,
}

impl Default for DarkSpotSpec {
    fn default() -> Self {
        Self {
            count: 0,
            radius_x: 20.0,
            radius_y: 5.0,
            thickness: 13.0,
            spread_x: 120.0,
            spread_y: 25.0,
        }
    }
}

/// Everything needed to generate one phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub width: usize,
    pub frames: usize,
    pub depth: usize,
    /// Surfaces from Vitreous-ILM down to RPE-Choroid.
    pub surfaces: [SurfaceSpec; 7],
    /// Band intensities: vitreous, NFL, GCL+IPL, INL, OPL, ONL, IS/OS+RPE, choroid.
    pub intensities: [f64; 8],
    /// E-folding depth of the choroid intensity, in pixels.
    pub choroid_decay: f64,
    /// Undulation phases `(φx, φy)`; drawn from the seed when absent.
    pub phase: Option<(f64, f64)>,
    pub fovea: Option<FoveaSpec>,
    /// Standard deviation of the multiplicative speckle.
    pub speckle_sigma: f64,
    pub shadows: ShadowSpec,
    pub blobs: BlobSpec,
    pub dark_spots: DarkSpotSpec,
    pub axial_um_per_px: f64,
    pub seed: u64,
}

const DEFAULT_BASES: [f64; 7] = [150.0, 161.0, 177.0, 183.5, 191.0, 208.0, 224.0];
const DEFAULT_DIPS: [f64; 7] = [24.0, 16.0, 6.0, 3.0, 0.0, 0.0, 0.0];

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            width: 512,
            frames: 97,
            depth: 496,
            surfaces: DEFAULT_BASES.map(|base| SurfaceSpec {
                base,
                ..SurfaceSpec::default()
            }),
            intensities: [8.0, 180.0, 110.0, 60.0, 130.0, 40.0, 220.0, 90.0],
            choroid_decay: 40.0,
            phase: None,
            fovea: None,
            speckle_sigma: 0.0,
            shadows: ShadowSpec::default(),
            blobs: BlobSpec::default(),
            dark_spots: DarkSpotSpec::default(),
            axial_um_per_px: 3.9,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    /// Noise-free layered volume without fovea, shadows or blobs.
    pub fn clean(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Speckle, four vessel shadows, pre-ILM blobs and a fovea.
    pub fn noisy(seed: u64) -> Self {
        Self::clean(seed).with_fovea().with_speckle(0.15).with_shadows(4).with_blobs(30)
    }

    pub fn with_fovea(mut self) -> Self {
        self.fovea = Some(FoveaSpec::default());
        for (s, dip) in self.surfaces.iter_mut().zip(DEFAULT_DIPS) {
            s.fovea_dip = dip;
        }
        self
    }

    pub fn with_speckle(mut self, sigma: f64) -> Self {
        self.speckle_sigma = sigma;
        self
    }

    pub fn with_shadows(mut self, count: usize) -> Self {
        self.shadows.count = count;
        self
    }

    pub fn with_blobs(mut self, count: usize) -> Self {
        self.blobs.count = count;
        self
    }

    pub fn with_dark_spots(mut self, count: usize) -> Self {
        self.dark_spots.count = count;
        self
    }

    /// Resize the volume. Layer thicknesses are kept; the surfaces move so
    /// the ILM stays at the same relative depth, and the lateral geometry
    /// scales with the width and frame count.
    pub fn resized(mut self, width: usize, frames: usize, depth: usize) -> Self {
        let shift = self.surfaces[0].base * (depth as f64 / self.depth as f64 - 1.0);
        let kx = width as f64 / self.width as f64;
        let ky = frames as f64 / self.frames as f64;
        for s in &mut self.surfaces {
            s.base += shift;
            s.wavelength_x *= kx;
            s.wavelength_y *= ky;
        }
        if let Some(f) = &mut self.fovea {
            f.sigma_x *= kx;
            f.sigma_y *= ky;
        }
        self.width = width;
        self.frames = frames;
        self.depth = depth;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.frames == 0 || self.depth == 0 {
            return Err(Error::Config("phantom dimensions must be positive".into()));
        }
        if let Some(v) = self.intensities.iter().find(|v| !(0.0..=255.0).contains(*v)) {
            return Err(Error::Config(format!("band intensity {v} outside [0, 255]")));
        }
        if !(self.speckle_sigma >= 0.0) {
            return Err(Error::Config("speckle sigma must be >= 0".into()));
        }
        let sh = &self.shadows;
        if sh.count * sh.width > self.width || !(0.0..=1.0).contains(&sh.attenuation) {
            return Err(Error::Config(format!(
                "{} shadows of width {} with attenuation {} do not fit a width of {}",
                sh.count, sh.width, sh.attenuation, self.width
            )));
        }
        if !(0.0..=255.0).contains(&self.blobs.intensity) {
            return Err(Error::Config("blob intensity outside [0, 255]".into()));
        }
        if !(self.axial_um_per_px > 0.0) {
            return Err(Error::Config("axial scale must be positive".into()));
        }
        Ok(())
    }
}

/// Sampled truth surfaces for a spec.
fn surfaces(spec: &PhantomSpec, phase: (f64, f64)) -> Result<Vec<DepthMap>> {
    let fovea = spec.fovea.map(|f| {
        let (cx, cy) = f
            .center
            .unwrap_or(((spec.width as f64 - 1.0) / 2.0, (spec.frames as f64 - 1.0) / 2.0));
        (cx, cy, f.sigma_x, f.sigma_y)
    });
    let maps: Vec<DepthMap> = spec
        .surfaces
        .iter()
        .map(|s| {
            DepthMap::from_fn(spec.width, spec.frames, |x, y| {
                let (xf, yf) = (x as f64, y as f64);
                let mut z = s.base
                    + s.amplitude_x * (2.0 * PI * xf / s.wavelength_x + phase.0).sin()
                    + s.amplitude_y * (2.0 * PI * yf / s.wavelength_y + phase.1).sin();
                if let Some((cx, cy, sx, sy)) = fovea {
                    let g = (-0.5 * (((xf - cx) / sx).powi(2) + ((yf - cy) / sy).powi(2))).exp();
                    z += s.fovea_dip * g;
                }
                z
            })
        })
        .collect();
    let max_z = spec.depth as f64 - 1.0;
    for (i, m) in maps.iter().enumerate() {
        let (lo, hi) = m.min_max();
        if lo < 1.0 || hi > max_z {
            return Err(Error::Config(format!(
                "surface {} spans depths [{lo:.1}, {hi:.1}], outside the volume depth {}",
                BoundaryId::ALL[i],
                spec.depth
            )));
        }
        if i > 0 {
            let above = &maps[i - 1];
            if above.as_slice().iter().zip(m.as_slice()).any(|(a, b)| a > b) {
                return Err(Error::Config(format!(
                    "surface {} crosses {}",
                    BoundaryId::ALL[i],
                    BoundaryId::ALL[i - 1]
                )));
            }
        }
    }
    Ok(maps)
}

struct Ellipsoid {
    c: (f64, f64, f64),
    r: (f64, f64, f64),
}

impl Ellipsoid {
    fn contains(&self, x: f64, y: f64, z: f64) -> bool {
        ((x - self.c.0) / self.r.0).powi(2) + ((y - self.c.1) / self.r.1).powi(2) + ((z - self.c.2) / self.r.2).powi(2)
            <= 1.0
    }
}

fn uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.gen_range(range.0..range.1)
    } else {
        range.0
    }
}

/// Shadow start columns: `count` non-overlapping runs of `width` columns.
fn place_shadows(rng: &mut ChaCha8Rng, width: usize, sh: &ShadowSpec) -> Vec<usize> {
    if sh.count == 0 || sh.width == 0 {
        return Vec::new();
    }
    // Split the free columns into count + 1 gaps.
    let free = width - sh.count * sh.width;
    let mut cuts: Vec<usize> = (0..sh.count).map(|_| rng.gen_range(0..=free)).collect();
    cuts.sort_unstable();
    cuts.iter()
        .enumerate()
        .map(|(i, &c)| c + i * sh.width)
        .collect()
}

/// A generated phantom with its ground truth and where the confounders went.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub volume: Volume<u8>,
    pub truth: BoundarySet,
    /// Columns attenuated by vessel shadows.
    pub shadow_columns: Vec<usize>,
    /// A-scans whose IS/OS band was darkened.
    pub dark_spots: Map2<bool>,
}

/// Generate the volume and its ground truth.
pub fn generate(spec: &PhantomSpec) -> Result<(Volume<u8>, BoundarySet)> {
    let p = generate_phantom(spec)?;
    Ok((p.volume, p.truth))
}

/// Like [`generate`], also reporting the shadow and dark-spot locations.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phase = spec
        .phase
        .unwrap_or_else(|| (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI)));
    let truth = surfaces(spec, phase)?;
    let (w, f, d) = (spec.width, spec.frames, spec.depth);

    let shadow_starts = place_shadows(&mut rng, w, &spec.shadows);
    let mut shadowed = vec![false; w];
    for &s in &shadow_starts {
        shadowed[s..s + spec.shadows.width].fill(true);
    }

    let ilm = &truth[0];
    let blobs: Vec<Ellipsoid> = (0..spec.blobs.count)
        .map(|_| {
            let b = &spec.blobs;
            let cx = rng.gen_range(0.0..w as f64);
            let cy = rng.gen_range(0.0..f as f64);
            let r = (uniform(&mut rng, b.radius_x), uniform(&mut rng, b.radius_y), uniform(&mut rng, b.radius_z));
            let gap = uniform(&mut rng, b.gap);
            let top = ilm.get((cx as usize).min(w - 1), (cy as usize).min(f - 1));
            Ellipsoid {
                c: (cx, cy, top - gap - r.2),
                r,
            }
        })
        .collect();

    let center = spec
        .fovea
        .and_then(|fv| fv.center)
        .unwrap_or(((w as f64 - 1.0) / 2.0, (f as f64 - 1.0) / 2.0));
    let ds = &spec.dark_spots;
    let spots: Vec<Ellipsoid> = (0..ds.count)
        .map(|_| {
            let cx = center.0 + uniform(&mut rng, (-ds.spread_x, ds.spread_x));
            let cy = center.1 + uniform(&mut rng, (-ds.spread_y, ds.spread_y));
            Ellipsoid {
                c: (cx, cy, 0.0),
                r: (ds.radius_x, ds.radius_y, 1.0),
            }
        })
        .collect();
    let dark_spots = Map2::from_fn(w, f, |x, y| spots.iter().any(|e| e.contains(x as f64, y as f64, 0.0)));

    let iv = spec.intensities;
    let noise = (spec.speckle_sigma > 0.0).then(|| Normal::new(0.0, spec.speckle_sigma).expect("sigma >= 0"));
    let mut data = vec![0u8; w * f * d];
    data.par_chunks_mut(w * d).enumerate().for_each(|(y, frame)| {
        // One stream per frame keeps the speckle independent of scheduling.
        let mut frng = ChaCha8Rng::seed_from_u64(spec.seed);
        frng.set_stream(y as u64 + 1);
        let yf = y as f64;
        let mut column = vec![0.0f64; d];
        let frame_blobs: Vec<&Ellipsoid> = blobs.iter().filter(|b| (yf - b.c.1).abs() <= b.r.1).collect();
        for x in 0..w {
            let xf = x as f64;
            let s: [f64; 7] = std::array::from_fn(|b| truth[b].get(x, y));
            let mut band = 0;
            for (z, v) in column.iter_mut().enumerate() {
                let zf = z as f64;
                while band < 7 && zf >= s[band] {
                    band += 1;
                }
                *v = if band == 7 {
                    iv[7] * (-(zf - s[6]) / spec.choroid_decay).exp()
                } else {
                    iv[band]
                };
            }
            if dark_spots.get(x, y) {
                let top = s[5].ceil() as usize;
                let bottom = (s[5] + ds.thickness).min(s[6]).ceil() as usize;
                for v in &mut column[top.min(d)..bottom.min(d)] {
                    *v = iv[5];
                }
            }
            for b in &frame_blobs {
                if (xf - b.c.0).abs() > b.r.0 {
                    continue;
                }
                let z0 = (b.c.2 - b.r.2).floor().max(0.0) as usize;
                let z1 = ((b.c.2 + b.r.2).ceil().max(0.0) as usize).min(d - 1);
                for z in z0..=z1 {
                    if (z as f64) < s[0] && b.contains(xf, yf, z as f64) {
                        column[z] = spec.blobs.intensity;
                    }
                }
            }
            if shadowed[x] {
                let from = s[1].ceil() as usize;
                for v in &mut column[from.min(d)..] {
                    *v *= spec.shadows.attenuation;
                }
            }
            for (z, &v) in column.iter().enumerate() {
                let v = match &noise {
                    Some(n) => v * (1.0 + n.sample(&mut frng)),
                    None => v,
                };
                frame[x + w * z] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    });
    let volume = Volume::from_vec(w, f, d, data)?;

    let mut set = BoundarySet::new();
    for (id, m) in BoundaryId::ALL.into_iter().zip(truth) {
        set.insert(id, m)?;
    }
    let shadow_columns = shadow_starts
        .into_iter()
        .flat_map(|s| s..s + spec.shadows.width)
        .collect();
    Ok(Phantom {
        volume,
        truth: set,
        shadow_columns,
        dark_spots,
    })
}
