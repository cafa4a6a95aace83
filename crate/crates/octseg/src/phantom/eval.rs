use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pipeline::{BoundaryId, BoundarySet};
use crate::volume::VolumeMeta;

/// Mean and population standard deviation of absolute and signed errors,
/// in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorStats {
    pub mean_abs: f64,
    pub std_abs: f64,
    pub mean_signed: f64,
    pub std_signed: f64,
    pub count: usize,
}

impl ErrorStats {
    pub fn from_errors(errors: impl IntoIterator<Item = f64>) -> Self {
        let (mut n, mut s, mut s2, mut a) = (0usize, 0.0, 0.0, 0.0);
        for e in errors {
            n += 1;
            s += e;
            s2 += e * e;
            a += e.abs();
        }
        if n == 0 {
            return Self::default();
        }
        let nf = n as f64;
        let mean_signed = s / nf;
        let mean_abs = a / nf;
        // E[e^2] is shared by the signed and absolute errors.
        let m2 = s2 / nf;
        Self {
            mean_abs,
            std_abs: (m2 - mean_abs * mean_abs).max(0.0).sqrt(),
            mean_signed,
            std_signed: (m2 - mean_signed * mean_signed).max(0.0).sqrt(),
            count: n,
        }
    }

    /// The same statistics in another unit.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            mean_abs: self.mean_abs * k,
            std_abs: self.std_abs * k,
            mean_signed: self.mean_signed * k,
            std_signed: self.std_signed * k,
            count: self.count,
        }
    }
}

/// Per-boundary and pooled errors of a segmentation against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<(BoundaryId, ErrorStats)>,
    /// Pooled over every entry of every boundary.
    pub overall: ErrorStats,
    pub um_per_px: Option<f64>,
}

impl ErrorReport {
    pub fn get(&self, id: BoundaryId) -> Option<&ErrorStats> {
        self.rows.iter().find(|r| r.0 == id).map(|r| &r.1)
    }

    fn lines(&self) -> Vec<(String, ErrorStats)> {
        self.rows
            .iter()
            .map(|(id, s)| (id.name().to_string(), *s))
            .chain(std::iter::once(("Overall".to_string(), self.overall)))
            .collect()
    }

    /// Fixed-width table: absolute and signed error with standard deviation,
    /// in pixels and, when the scale is known, in micrometres.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<12} {:>18} {:>18}", "Boundary", "Absolute (px)", "Signed (px)");
        if self.um_per_px.is_some() {
            let _ = write!(out, " {:>18} {:>18}", "Absolute (um)", "Signed (um)");
        }
        out.push('\n');
        for (name, s) in self.lines() {
            let _ = write!(
                out,
                "{:<12} {:>18} {:>18}",
                name,
                pm(s.mean_abs, s.std_abs),
                pm(s.mean_signed, s.std_signed)
            );
            if let Some(k) = self.um_per_px {
                let u = s.scaled(k);
                let _ = write!(out, " {:>18} {:>18}", pm(u.mean_abs, u.std_abs), pm(u.mean_signed, u.std_signed));
            }
            out.push('\n');
        }
        out
    }

    /// CSV with a header row; micrometre columns are empty when the scale
    /// is unknown.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "boundary,abs_px,abs_std_px,signed_px,signed_std_px,abs_um,abs_std_um,signed_um,signed_std_um\n",
        );
        for (name, s) in self.lines() {
            let _ = write!(out, "{name},{},{},{},{}", s.mean_abs, s.std_abs, s.mean_signed, s.std_signed);
            match self.um_per_px {
                Some(k) => {
                    let u = s.scaled(k);
                    let _ = writeln!(out, ",{},{},{},{}", u.mean_abs, u.std_abs, u.mean_signed, u.std_signed);
                }
                None => out.push_str(",,,,\n"),
            }
        }
        out
    }
}

fn pm(mean: f64, std: f64) -> String {
    format!("{mean:.2} ({std:.2})")
}

/// Compare `result` with `truth` boundary by boundary.
///
/// Only boundaries present in both sets are scored; an empty intersection
/// is an error.
pub fn evaluate(result: &BoundarySet, truth: &BoundarySet, meta: &VolumeMeta) -> Result<ErrorReport> {
    meta.check()?;
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for (id, t) in truth.iter() {
        let Some(r) = result.get(id) else { continue };
        let errs = r.zip_map(t, |a, b| a - b)?.into_vec();
        rows.push((id, ErrorStats::from_errors(errs.iter().copied())));
        all.extend(errs);
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no boundary in common between result and truth".into()));
    }
    Ok(ErrorReport {
        rows,
        overall: ErrorStats::from_errors(all),
        um_per_px: meta.axial_um_per_px,
    })
}

/// The layers between consecutive boundaries.
pub const LAYERS: [(&str, BoundaryId, BoundaryId); 6] = [
    ("NFL", BoundaryId::VitreousIlm, BoundaryId::NflGcl),
    ("GCL+IPL", BoundaryId::NflGcl, BoundaryId::IplInl),
    ("INL", BoundaryId::IplInl, BoundaryId::InlOpl),
    ("OPL", BoundaryId::InlOpl, BoundaryId::OplOnl),
    ("ONL", BoundaryId::OplOnl, BoundaryId::OnlIsos),
    ("IS/OS-RPE", BoundaryId::OnlIsos, BoundaryId::RpeChoroid),
];

#[derive(Debug, Clone, PartialEq)]
pub struct LayerThickness {
    pub name: &'static str,
    pub mean_um: f64,
}

/// Mean thickness of each layer over all A-scans, in micrometres.
pub fn layer_thickness_report(set: &BoundarySet, meta: &VolumeMeta) -> Result<Vec<LayerThickness>> {
    let scale = meta.scale()?;
    LAYERS
        .iter()
        .map(|&(name, top, bottom)| {
            let gap = set.require(bottom)?.zip_map(set.require(top)?, |b, t| b - t)?;
            Ok(LayerThickness {
                name,
                mean_um: gap.mean() * scale,
            })
        })
        .collect()
}
