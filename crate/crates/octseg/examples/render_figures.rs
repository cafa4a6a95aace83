//! Segment a small phantom and write an overlay of the middle B-scan and a
//! total retinal thickness heatmap into `target/figures/`.

use std::path::Path;

use octseg::phantom::{generate, PhantomSpec};
use octseg::pipeline::thickness_map;
use octseg::render::{render_overlay, save_png, save_thickness_heatmap, ColorRamp, RenderStyle};
use octseg::{segment_all, BoundaryId, PipelineConfig, VolumeMeta};

fn main() -> octseg::Result<()> {
    let spec = PhantomSpec::noisy(2).resized(256, 31, 320);
    let (vol, _) = generate(&spec)?;
    let seg = segment_all(&vol, &PipelineConfig::default())?;

    let dir = Path::new("target/figures");
    std::fs::create_dir_all(dir).map_err(|e| octseg::Error::Format(e.to_string()))?;

    let style = RenderStyle {
        line_thickness: 2,
        ..RenderStyle::default()
    };
    let overlay = render_overlay(&vol, &seg.boundaries, vol.frames() / 2, &style)?;
    save_png(&overlay, &dir.join("overlay.png"))?;

    let meta = VolumeMeta::new(spec.axial_um_per_px, "noisy phantom")?;
    let (top, bottom) = (BoundaryId::VitreousIlm, BoundaryId::RpeChoroid);
    let um = thickness_map(&seg.boundaries, top, bottom, &meta)?;
    let (legend, files) = save_thickness_heatmap(&um, top, bottom, "um", ColorRamp::Turbo, &dir.join("thickness.png"))?;
    println!("overlay: {}", dir.join("overlay.png").display());
    println!("heatmap: {} ({:.1}..{:.1} {})", files.png.display(), legend.min, legend.max, legend.unit);
    Ok(())
}
