//! The four volume filters on a tiny two-layer volume, printed along one
//! A-scan.

use octseg::filters::{diff_filter, erode_ball, mean_filter, threshold_zero};
use octseg::{KernelSize, Orientation, Volume};

fn main() -> octseg::Result<()> {
    // Dark above z = 8, bright below, plus one hot voxel in the dark part.
    let mut vol = Volume::from_fn(9, 9, 16, |_, _, z| if z < 8 { 20u8 } else { 200 })?;
    vol.set(4, 4, 3, 255);

    let mean = mean_filter(&vol, KernelSize::cube(3))?;
    let edge = diff_filter(&vol, KernelSize::new(1, 1, 5), Orientation::BrightBelow)?;
    let denoised = threshold_zero(&mean, 30.0);
    let eroded = erode_ball(&vol, 1);

    println!("{:>3} {:>5} {:>8} {:>8} {:>9} {:>7}", "z", "raw", "mean3", "diff", "thresh30", "erode1");
    for z in 0..vol.depth() {
        println!(
            "{z:>3} {:>5} {:>8.2} {:>8.2} {:>9.2} {:>7}",
            vol.get(4, 4, z),
            mean.get(4, 4, z),
            edge.get(4, 4, z) + 0.0,
            denoised.get(4, 4, z),
            eroded.get(4, 4, z)
        );
    }
    Ok(())
}
