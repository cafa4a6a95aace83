//! Segment a synthetic volume and score it against its ground truth.
//!
//!     cargo run --release --example segment_phantom -- [clean|noisy] [seed]

use octseg::phantom::{evaluate, generate, layer_thickness_report, PhantomSpec};
use octseg::{segment_all, PipelineConfig, VolumeMeta};

fn main() -> octseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "clean".into());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let spec = match preset.as_str() {
        "noisy" => PhantomSpec::noisy(seed),
        _ => PhantomSpec::clean(seed),
    };

    let (vol, truth) = generate(&spec)?;
    let seg = segment_all(&vol, &PipelineConfig::default())?;
    let meta = VolumeMeta::new(spec.axial_um_per_px, format!("{preset} phantom, seed {seed}"))?;

    println!("{}", evaluate(&seg.boundaries, &truth, &meta)?.to_table());
    for layer in layer_thickness_report(&seg.boundaries, &meta)? {
        println!("{:<10} {:7.2} um", layer.name, layer.mean_um);
    }
    for (stage, t) in &seg.timings {
        println!("{stage:<10} {:6.2} s", t.as_secs_f64());
    }
    let q = &seg.quality;
    println!(
        "flagged columns: {} ({:.3}%), per frame: {:.3} s",
        q.flagged_count(),
        100.0 * q.flagged_fraction(),
        seg.total_time().as_secs_f64() / vol.frames() as f64
    );
    Ok(())
}
