//! Iterative surface correction: plant spikes in a smooth surface and let
//! the RPE schedule pull them back.

use octseg::surface::{error_distances, smooth_with, SmoothingConfig, WeightMatrix};
use octseg::DepthMap;

fn main() {
    let truth = DepthMap::from_fn(64, 24, |x, y| 200.0 + 8.0 * (x as f64 / 20.0).sin() + 0.2 * y as f64);
    let mut noisy = truth.clone();
    for (i, (x, y)) in [(5, 5), (30, 12), (31, 12), (50, 20), (10, 18)].into_iter().enumerate() {
        noisy.set(x, y, truth.get(x, y) + if i % 2 == 0 { 40.0 } else { -25.0 });
    }

    let before = error_distances(&noisy, &WeightMatrix::rpe_7x7());
    let (_, worst) = before.min_max();
    println!("largest error distance before: {worst:.2}");

    let out = smooth_with(&noisy, &SmoothingConfig::rpe());
    let residual = out.map.zip_map(&truth, |a, b| (a - b).abs()).unwrap();
    println!(
        "iterations {} (converged: {}), corrections {}, worst residual {:.2} px",
        out.iterations_used,
        out.converged,
        out.corrections,
        residual.min_max().1
    );
}
