//! IS/OS under dark spots, with and without the per-row cubic fit.
//!
//!     cargo run --release --example dark_spots -- [seed]

use octseg::phantom::{generate_phantom, PhantomSpec};
use octseg::pipeline::{segment_ilm, segment_isos, segment_rpe, zero_below};
use octseg::{flatten, unflatten_depths, BoundaryId, DepthMap, Map2, PipelineConfig};

fn spot_error(found: &DepthMap, truth: &DepthMap, spots: &Map2<bool>) -> (f64, f64) {
    let errs: Vec<f64> = found
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .zip(spots.as_slice())
        .filter(|(_, &s)| s)
        .map(|((a, b), _)| (a - b).abs())
        .collect();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    (mean, errs.iter().copied().fold(0.0, f64::max))
}

fn main() -> octseg::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let p = generate_phantom(&PhantomSpec::clean(seed).with_fovea().with_dark_spots(3))?;
    let truth = p.truth.require(BoundaryId::OnlIsos)?;

    for polyfit in [false, true] {
        let mut cfg = PipelineConfig::default();
        cfg.isos.polyfit = polyfit;
        let rpe = segment_rpe(&p.volume, &cfg)?;
        let (flat, off) = flatten(&p.volume, &rpe.map)?;
        let ilm = segment_ilm(&zero_below(&flat, off.reference_depth), &cfg)?;
        let isos = segment_isos(&flat, &off.flatten_depths(&rpe.map)?, &ilm.map, &cfg)?;

        let (raw_mean, raw_max) = spot_error(&unflatten_depths(&isos.raw, &off)?, truth, &p.dark_spots);
        let (mean, max) = spot_error(&unflatten_depths(&isos.map, &off)?, truth, &p.dark_spots);
        println!("polyfit {polyfit:<5}  raw: mean {raw_mean:5.2} max {raw_max:5.2}   final: mean {mean:5.2} max {max:5.2}");
    }
    Ok(())
}
