//! Cubic outlier rejection on one row of IS/OS depths with a shallow dip,
//! the way dark spots in the photoreceptor band pull a boundary upwards.

use octseg::surface::{normal_quantile, poly3_reject};

fn main() {
    let truth = |x: f64| 300.0 - 0.02 * x + 4e-5 * x * x;
    let row: Vec<(f64, f64)> = (0..512)
        .map(|x| {
            let x = x as f64;
            let dip = if (240.0..280.0).contains(&x) { -12.0 } else { 0.0 };
            (x, truth(x) + dip)
        })
        .collect();

    let conf = 0.98;
    println!("band half-width: {:.3} sigma", normal_quantile(conf));
    let out = poly3_reject(&row, conf);
    let worst = out
        .z
        .iter()
        .zip(&row)
        .map(|(z, p)| (z - truth(p.0)).abs())
        .fold(0.0f64, f64::max);
    println!("replaced {} points, worst error after {:.2} px", out.replaced.len(), worst);
}
