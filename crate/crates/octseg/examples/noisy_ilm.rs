//! ILM under dense bright blobs in the vitreous: the direct first-peak
//! branch against the eroded branch and their merge.
//!
//!     cargo run --release --example noisy_ilm -- [blobs] [seed]

use octseg::phantom::{generate, ErrorStats, PhantomSpec};
use octseg::pipeline::{segment_ilm, segment_rpe, zero_below};
use octseg::{flatten, BoundaryId, DepthMap, PipelineConfig};

fn mae(a: &DepthMap, b: &DepthMap) -> f64 {
    ErrorStats::from_errors(a.zip_map(b, |x, y| x - y).unwrap().into_vec()).mean_abs
}

fn main() -> octseg::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<u64>().ok());
    let blobs = args.next().flatten().unwrap_or(150) as usize;
    let seed = args.next().flatten().unwrap_or(1);
    let (vol, truth) = generate(&PhantomSpec::clean(seed).with_blobs(blobs))?;

    let cfg = PipelineConfig::default();
    let rpe = segment_rpe(&vol, &cfg)?;
    let (flat, off) = flatten(&vol, &rpe.map)?;
    let ilm = segment_ilm(&zero_below(&flat, off.reference_depth), &cfg)?;
    let t = off.flatten_depths(truth.require(BoundaryId::VitreousIlm)?)?;

    println!("{blobs} blobs, seed {seed}");
    println!("direct   {:.2} px", mae(&ilm.direct, &t));
    if let Some(e) = &ilm.eroded {
        println!("eroded   {:.2} px", mae(e, &t));
    }
    println!("final    {:.2} px", mae(&ilm.map, &t));
    Ok(())
}
