//! The seven-boundary cascade.
//!
//! RPE-Choroid is found on the raw volume and used to flatten it. The ILM
//! is found on the flattened volume, then IS/OS between the two, then the
//! four inner boundaries inside ever narrower intervals. All maps are
//! translated back to original coordinates at the end.

mod config;
mod extract;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use config::{EnhancementWeights, IlmConfig, InnerConfig, IsosConfig, PipelineConfig, RpeConfig, WeightMode};
pub use extract::{enhance, extract_first_peak, extract_global_max, extract_global_max_within, first_peak, ScanDirection};
pub use stages::{
    mask_fill, mask_outside, zero_below, segment_ilm, segment_inner, segment_isos, segment_rpe, BoundedOutcome, IlmOutcome,
    RpeOutcome,
};

use crate::error::{Error, Result};
use crate::filters::Orientation;
use crate::map::{DepthMap, Map2};
use crate::volume::{flatten, unflatten_depths, FlattenOffsets, Volume, VolumeMeta};

/// The seven segmented surfaces, listed from the top of the retina down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryId {
    VitreousIlm,
    NflGcl,
    IplInl,
    InlOpl,
    OplOnl,
    OnlIsos,
    RpeChoroid,
}

impl BoundaryId {
    /// All boundaries in anatomical (top to bottom) order.
    pub const ALL: [BoundaryId; 7] = [
        BoundaryId::VitreousIlm,
        BoundaryId::NflGcl,
        BoundaryId::IplInl,
        BoundaryId::InlOpl,
        BoundaryId::OplOnl,
        BoundaryId::OnlIsos,
        BoundaryId::RpeChoroid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryId::VitreousIlm => "VitreousILM",
            BoundaryId::NflGcl => "NflGcl",
            BoundaryId::IplInl => "IplInl",
            BoundaryId::InlOpl => "InlOpl",
            BoundaryId::OplOnl => "OplOnl",
            BoundaryId::OnlIsos => "OnlIsos",
            BoundaryId::RpeChoroid => "RpeChoroid",
        }
    }

    /// File stem used for depth-map outputs.
    pub fn file_stem(self) -> &'static str {
        match self {
            BoundaryId::VitreousIlm => "vitreous_ilm",
            BoundaryId::NflGcl => "nfl_gcl",
            BoundaryId::IplInl => "ipl_inl",
            BoundaryId::InlOpl => "inl_opl",
            BoundaryId::OplOnl => "opl_onl",
            BoundaryId::OnlIsos => "onl_isos",
            BoundaryId::RpeChoroid => "rpe_choroid",
        }
    }

    /// Position in [`BoundaryId::ALL`].
    pub fn rank(self) -> usize {
        self as usize
    }

    pub fn is_inner(self) -> bool {
        matches!(
            self,
            BoundaryId::NflGcl | BoundaryId::IplInl | BoundaryId::InlOpl | BoundaryId::OplOnl
        )
    }

    /// Differential-filter orientation used to find this boundary.
    pub fn orientation(self, cfg: &PipelineConfig) -> Orientation {
        match self {
            BoundaryId::VitreousIlm | BoundaryId::OnlIsos => Orientation::BrightBelow,
            BoundaryId::InlOpl => cfg.inner.inl_opl_orientation,
            _ => Orientation::BrightAbove,
        }
    }
}

impl fmt::Display for BoundaryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryId {
    type Err = Error;

    /// Accepts the display name or the file stem, ignoring case.
    fn from_str(s: &str) -> Result<Self> {
        BoundaryId::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s) || b.file_stem().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown boundary '{s}'")))
    }
}

/// Depth maps keyed by boundary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundarySet {
    maps: BTreeMap<BoundaryId, DepthMap>,
}

impl BoundarySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: BoundaryId, map: DepthMap) -> Result<()> {
        if let Some(first) = self.maps.values().next() {
            first.check_shape(&map, id.name())?;
        }
        self.maps.insert(id, map);
        Ok(())
    }

    pub fn get(&self, id: BoundaryId) -> Option<&DepthMap> {
        self.maps.get(&id)
    }

    /// Like [`BoundarySet::get`], but a missing boundary is an error.
    pub fn require(&self, id: BoundaryId) -> Result<&DepthMap> {
        self.get(id)
            .ok_or_else(|| Error::InvalidArgument(format!("boundary {id} missing")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (BoundaryId, &DepthMap)> {
        self.maps.iter().map(|(&k, v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.maps.len() == BoundaryId::ALL.len()
    }

    /// `(width, frames)` shared by all maps.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.maps.values().next().map(|m| (m.width(), m.frames()))
    }

    /// Number of A-scans where consecutive present boundaries are out of order.
    pub fn ordering_violations(&self) -> usize {
        let Some((w, f)) = self.dims() else {
            return 0;
        };
        let present: Vec<&DepthMap> = self.maps.values().collect();
        (0..w * f)
            .filter(|&i| {
                present
                    .windows(2)
                    .any(|p| p[0].as_slice()[i] > p[1].as_slice()[i])
            })
            .count()
    }
}

/// Per-run diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    /// Set when the RPE differential response never reached `min_contrast`.
    pub low_contrast: bool,
    pub rpe_peak_response: f64,
    /// Columns flagged by any stage.
    pub flagged: Map2<bool>,
    pub flagged_by_boundary: BTreeMap<BoundaryId, usize>,
    /// IS/OS rows whose cubic fit was skipped.
    pub degraded_rows: usize,
    pub smoothing_iterations: BTreeMap<BoundaryId, usize>,
}

impl QualityReport {
    pub fn flagged_count(&self) -> usize {
        self.flagged.as_slice().iter().filter(|&&f| f).count()
    }

    pub fn flagged_fraction(&self) -> f64 {
        self.flagged_count() as f64 / self.flagged.len() as f64
    }

    fn flag(&mut self, id: BoundaryId, mask: &Map2<bool>) {
        let mut n = 0;
        for (dst, &f) in self.flagged.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            if f {
                *dst = true;
                n += 1;
            }
        }
        *self.flagged_by_boundary.entry(id).or_insert(0) += n;
    }
}

/// Result of [`segment_all`].
#[derive(Debug, Clone)]
pub struct Segmentation {
    /// Surfaces in original coordinates.
    pub boundaries: BoundarySet,
    pub offsets: FlattenOffsets,
    pub quality: QualityReport,
    /// Wall time per stage, in execution order.
    pub timings: Vec<(&'static str, Duration)>,
}

impl Segmentation {
    pub fn total_time(&self) -> Duration {
        self.timings.iter().map(|t| t.1).sum()
    }
}

/// Clamp `map` into `[upper, lower]` column-wise; returns the clamped columns.
fn clamp_between(map: &mut DepthMap, upper: &DepthMap, lower: &DepthMap) -> Map2<bool> {
    let mut hit = Map2::filled(map.width(), map.frames(), false);
    for i in 0..map.len() {
        let (u, l) = (upper.as_slice()[i], lower.as_slice()[i]);
        let v = &mut map.as_mut_slice()[i];
        let c = v.clamp(u, l.max(u));
        if c != *v {
            *v = c;
            hit.as_mut_slice()[i] = true;
        }
    }
    hit
}

/// Run the whole cascade on one volume.
pub fn segment_all(vol: &Volume<u8>, cfg: &PipelineConfig) -> Result<Segmentation> {
    cfg.validate(vol.dims())?;
    let (w, f, d) = vol.dims();
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, Duration)>| {
        let now = Instant::now();
        timings.push((name, now - clock));
        clock = now;
    };

    let rpe = segment_rpe(vol, cfg)?;
    lap("rpe", &mut timings);
    let mut quality = QualityReport {
        low_contrast: rpe.peak_response < cfg.min_contrast,
        rpe_peak_response: rpe.peak_response,
        flagged: Map2::filled(w, f, false),
        flagged_by_boundary: BTreeMap::new(),
        degraded_rows: 0,
        smoothing_iterations: BTreeMap::new(),
    };
    quality.smoothing_iterations.insert(BoundaryId::RpeChoroid, rpe.iterations);

    let (flat, offsets) = flatten(vol, &rpe.map)?;
    let rpe_flat = offsets.flatten_depths(&rpe.map)?;
    let below_masked = zero_below(&flat, offsets.reference_depth);
    lap("flatten", &mut timings);

    let ilm = segment_ilm(&below_masked, cfg)?;
    drop(below_masked);
    lap("ilm", &mut timings);
    quality.smoothing_iterations.insert(BoundaryId::VitreousIlm, ilm.iterations);
    let mut ilm_flat = ilm.map;
    let zero = DepthMap::filled(w, f, 0.0);
    let hit = clamp_between(&mut ilm_flat, &zero, &rpe_flat);
    quality.flag(BoundaryId::VitreousIlm, &hit);

    let mut flat_maps: BTreeMap<BoundaryId, DepthMap> = BTreeMap::new();
    let run = |id: BoundaryId,
                   upper: &DepthMap,
                   lower: &DepthMap,
                   quality: &mut QualityReport|
     -> Result<DepthMap> {
        let out = if id == BoundaryId::OnlIsos {
            segment_isos(&flat, lower, upper, cfg)?
        } else {
            segment_inner(&flat, upper, lower, id, cfg)?
        };
        quality.flag(id, &out.flagged);
        quality.degraded_rows += out.degraded_rows;
        quality.smoothing_iterations.insert(id, out.iterations);
        let mut map = out.map;
        let hit = clamp_between(&mut map, upper, lower);
        quality.flag(id, &hit);
        Ok(map)
    };

    let isos = run(BoundaryId::OnlIsos, &ilm_flat, &rpe_flat, &mut quality)?;
    lap("isos", &mut timings);
    let opl_onl = run(BoundaryId::OplOnl, &ilm_flat, &isos, &mut quality)?;
    lap("opl_onl", &mut timings);
    let nfl_gcl = run(BoundaryId::NflGcl, &ilm_flat, &opl_onl, &mut quality)?;
    lap("nfl_gcl", &mut timings);
    let ipl_inl = run(BoundaryId::IplInl, &nfl_gcl, &opl_onl, &mut quality)?;
    lap("ipl_inl", &mut timings);
    let inl_opl = run(BoundaryId::InlOpl, &ipl_inl, &opl_onl, &mut quality)?;
    lap("inl_opl", &mut timings);

    flat_maps.insert(BoundaryId::VitreousIlm, ilm_flat);
    flat_maps.insert(BoundaryId::NflGcl, nfl_gcl);
    flat_maps.insert(BoundaryId::IplInl, ipl_inl);
    flat_maps.insert(BoundaryId::InlOpl, inl_opl);
    flat_maps.insert(BoundaryId::OplOnl, opl_onl);
    flat_maps.insert(BoundaryId::OnlIsos, isos);

    let mut boundaries = BoundarySet::new();
    let hi = d as f64 - 1.0;
    for (id, m) in flat_maps {
        let orig = unflatten_depths(&m, &offsets)?;
        let clamped = orig.map(|z| z.clamp(0.0, hi));
        let moved = orig.zip_map(&clamped, |a, b| a != b)?;
        quality.flag(id, &moved);
        boundaries.insert(id, clamped)?;
    }
    boundaries.insert(BoundaryId::RpeChoroid, rpe.map)?;
    lap("unflatten", &mut timings);

    Ok(Segmentation {
        boundaries,
        offsets,
        quality,
        timings,
    })
}

/// Per-A-scan distance between two boundaries, in micrometres.
pub fn thickness_map(set: &BoundarySet, top: BoundaryId, bottom: BoundaryId, meta: &VolumeMeta) -> Result<Map2<f64>> {
    if top.rank() >= bottom.rank() {
        return Err(Error::InvalidArgument(format!(
            "thickness needs {top} above {bottom}"
        )));
    }
    let scale = meta.scale()?;
    set.require(top)?
        .zip_map(set.require(bottom)?, |t, b| (b - t) * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_names_round_trip() {
        for b in BoundaryId::ALL {
            assert_eq!(b.name().parse::<BoundaryId>().unwrap(), b);
            assert_eq!(b.file_stem().parse::<BoundaryId>().unwrap(), b);
        }
        assert!("Choroid".parse::<BoundaryId>().is_err());
    }

    #[test]
    fn orientations() {
        let cfg = PipelineConfig::default();
        use Orientation::*;
        let expect = [BrightBelow, BrightAbove, BrightAbove, BrightBelow, BrightAbove, BrightBelow, BrightAbove];
        for (b, o) in BoundaryId::ALL.into_iter().zip(expect) {
            assert_eq!(b.orientation(&cfg), o, "{b}");
        }
    }

    #[test]
    fn thickness_of_flat_surfaces() {
        let mut set = BoundarySet::new();
        set.insert(BoundaryId::VitreousIlm, DepthMap::filled(4, 3, 100.0)).unwrap();
        set.insert(BoundaryId::RpeChoroid, DepthMap::filled(4, 3, 110.0)).unwrap();
        let meta = VolumeMeta::new(3.9, "test").unwrap();
        let t = thickness_map(&set, BoundaryId::VitreousIlm, BoundaryId::RpeChoroid, &meta).unwrap();
        assert!(t.as_slice().iter().all(|&v| (v - 39.0).abs() < 1e-12));
        assert!(thickness_map(&set, BoundaryId::RpeChoroid, BoundaryId::RpeChoroid, &meta).is_err());
        assert!(thickness_map(&set, BoundaryId::RpeChoroid, BoundaryId::VitreousIlm, &meta).is_err());
    }

    #[test]
    fn ordering_violations_counted() {
        let mut set = BoundarySet::new();
        set.insert(BoundaryId::VitreousIlm, DepthMap::filled(2, 1, 5.0)).unwrap();
        let mut rpe = DepthMap::filled(2, 1, 9.0);
        rpe.set(1, 0, 4.0);
        set.insert(BoundaryId::RpeChoroid, rpe).unwrap();
        assert_eq!(set.ordering_violations(), 1);
        assert!(set.insert(BoundaryId::OnlIsos, DepthMap::filled(3, 1, 0.0)).is_err());
    }

    #[test]
    fn clamping_reports_columns() {
        let mut m = DepthMap::from_rows(&[vec![1.0, 5.0, 9.0]]).unwrap();
        let up = DepthMap::filled(3, 1, 2.0);
        let low = DepthMap::filled(3, 1, 8.0);
        let hit = clamp_between(&mut m, &up, &low);
        assert_eq!(m.as_slice(), &[2.0, 5.0, 8.0]);
        assert_eq!(hit.as_slice(), &[true, false, true]);
    }

    #[test]
    fn uniform_volume_is_flagged_not_fatal() {
        let vol = Volume::filled(24, 20, 48, 90u8).unwrap();
        let mut cfg = PipelineConfig::default();
        cfg.inner.diff_kernel = crate::filters::KernelSize::new(5, 5, 9);
        let seg = segment_all(&vol, &cfg).unwrap();
        assert!(seg.quality.low_contrast);
        assert_eq!(seg.boundaries.len(), 7);
        assert_eq!(seg.boundaries.ordering_violations(), 0);
    }
}
