//! Flatten a phantom on its RPE, then map a surface back. Depth shifts are
//! whole pixels, so the round trip is exact.

use octseg::phantom::{generate, PhantomSpec};
use octseg::{flatten, unflatten_depths, BoundaryId};

fn main() -> octseg::Result<()> {
    let spec = PhantomSpec::clean(4).resized(128, 24, 320);
    let (vol, truth) = generate(&spec)?;
    let rpe = truth.require(BoundaryId::RpeChoroid)?;

    let (flat, off) = flatten(&vol, rpe)?;
    let rpe_flat = off.flatten_depths(rpe)?;
    let (lo, hi) = rpe_flat.min_max();
    println!("reference depth {}, flattened RPE spans {lo:.2}..{hi:.2}", off.reference_depth);
    println!("volume dims unchanged: {}", flat.dims() == vol.dims());

    let ilm = truth.require(BoundaryId::VitreousIlm)?;
    let back = unflatten_depths(&off.flatten_depths(ilm)?, &off)?;
    println!("ILM round trip exact: {}", &back == ilm);
    Ok(())
}
