//! Override a few pipeline settings from JSON and compare with the defaults
//! on a noisy phantom.

use octseg::phantom::{evaluate, generate, PhantomSpec};
use octseg::{segment_all, PipelineConfig, VolumeMeta};

fn main() -> octseg::Result<()> {
    // Only the listed fields change; everything else keeps its default.
    let custom = PipelineConfig::from_json(r#"{ "ilm": { "erosion_compensation": 5 }, "isos": { "confidence": 0.95 } }"#)?;

    let spec = PhantomSpec::noisy(5).resized(192, 25, 320);
    let (vol, truth) = generate(&spec)?;
    let meta = VolumeMeta::new(spec.axial_um_per_px, "noisy phantom")?;
    for (name, cfg) in [("default", PipelineConfig::default()), ("custom", custom)] {
        let seg = segment_all(&vol, &cfg)?;
        let r = evaluate(&seg.boundaries, &truth, &meta)?;
        println!("{name:<8} overall MAE {:.2} px", r.overall.mean_abs);
    }
    Ok(())
}
