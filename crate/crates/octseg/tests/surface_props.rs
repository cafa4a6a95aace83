mod common;

use common::rng;
use octseg::surface::{
    dynamic_threshold, error_distance, error_distances, merge_depth_maps, poly3_reject, smooth_depth_map, smooth_with,
    SmoothingConfig, SmoothingSchedule, WeightMatrix,
};
use octseg::DepthMap;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn off_centre_sums() {
    assert_eq!(WeightMatrix::rpe_7x7().off_center_sum(), 138.0);
    assert_eq!(WeightMatrix::ilm_5x5().off_center_sum(), 64.0);
    assert_eq!(WeightMatrix::rpe_7x7().center(), -138.0);
    assert_eq!(WeightMatrix::ilm_5x5().center(), -64.0);
}

proptest! {
    #[test]
    fn constant_maps_have_zero_error_distance(c in -1e4f64..1e4, w in 1usize..40, f in 1usize..40) {
        let m = DepthMap::filled(w, f, c);
        for k in [WeightMatrix::rpe_7x7(), WeightMatrix::ilm_5x5(), WeightMatrix::ilm_3x3()] {
            prop_assert!(error_distances(&m, &k).as_slice().iter().all(|&e| e == 0.0));
        }
    }
}

#[test]
fn single_bump_error_distance() {
    let mut m = DepthMap::filled(15, 15, 100.0);
    m.set(7, 7, 110.0);
    assert_eq!(error_distance(&m, &WeightMatrix::rpe_7x7(), (7, 7)), 10.0);
    let c = DepthMap::filled(15, 15, 100.0);
    assert_eq!(error_distance(&c, &WeightMatrix::rpe_7x7(), (0, 0)), 0.0);
}

#[test]
fn thresholds() {
    let s = SmoothingSchedule::default();
    assert_eq!((s.total_iterations, s.dynamic_iterations), (25, 20));
    assert!((dynamic_threshold(512 * 97, 1, &s) - 24.832).abs() < 1e-12);
    assert_eq!(dynamic_threshold(49664, 21, &s), 1.0);
    assert_eq!(dynamic_threshold(2000, 2, &s), 2.0);
}

#[test]
fn smooth_map_is_returned_after_one_iteration() {
    let m = DepthMap::from_fn(60, 40, |x, y| 150.0 + 0.05 * x as f64 + 0.02 * y as f64);
    let out = smooth_with(&m, &SmoothingConfig::rpe());
    assert_eq!(out.map, m);
    assert_eq!(out.iterations_used, 1);
}

#[test]
fn spike_is_replaced_by_neighbour_average() {
    let mut m = DepthMap::filled(30, 30, 100.0);
    m.set(12, 15, 400.0);
    let w1 = WeightMatrix::rpe_7x7();
    // Fixed threshold of 1 from the first iteration.
    let sched = SmoothingSchedule {
        dynamic_iterations: 0,
        ..SmoothingSchedule::default()
    };
    let out = smooth_depth_map(&m, &w1, &w1.correcting(), &sched);
    // The first step alone puts the spike at the plain average of 100.
    let one = smooth_depth_map(&m, &w1, &w1.correcting(), &SmoothingSchedule { total_iterations: 1, ..sched });
    assert_eq!(one.map.get(12, 15), 100.0);
    // Simultaneous replacement also lifts the spike's neighbours in that
    // first step, so the settled surface sits a few pixels above 100.
    assert!((out.map.get(12, 15) - 100.0).abs() < 5.0);
    assert!(error_distance(&out.map, &w1, (12, 15)) < 1e-9);
}

/// Smooth random surface with a few large spikes; at least 2000 entries so
/// the first dynamic threshold is not below the fixed one.
fn spiky_map(r: &mut impl Rng) -> DepthMap {
    let (w, f) = (r.gen_range(50..=80), r.gen_range(40..=60));
    let (ax, ay, base) = (r.gen_range(0.0..0.2), r.gen_range(-0.2..0.2), r.gen_range(100.0..300.0));
    let mut m = DepthMap::from_fn(w, f, |x, y| base + ax * x as f64 + ay * y as f64);
    for _ in 0..r.gen_range(1..=30) {
        let (x, y) = (r.gen_range(0..w), r.gen_range(0..f));
        m.set(x, y, m.get(x, y) + r.gen_range(-80.0..80.0));
    }
    m
}

#[test]
fn smoothing_contract_on_1000_maps() {
    let mut r = rng(31);
    let kernels = [WeightMatrix::rpe_7x7(), WeightMatrix::ilm_5x5(), WeightMatrix::ilm_3x3()];
    let sched = SmoothingSchedule::default();
    let mut early = 0;
    for trial in 0..1000 {
        let m = spiky_map(&mut r);
        let w1 = &kernels[trial % 3];
        let w2 = w1.correcting();
        let out = smooth_depth_map(&m, w1, &w2, &sched);
        assert!(out.iterations_used <= 25);
        if out.converged {
            early += 1;
            let worst = error_distances(&out.map, w1).min_max().1;
            assert!(worst <= out.last_threshold, "trial {trial}: {worst} > {}", out.last_threshold);
            let again = smooth_depth_map(&out.map, w1, &w2, &sched);
            assert_eq!(again.map, out.map, "trial {trial}");
            assert_eq!(again.iterations_used, 1, "trial {trial}");
        }
    }
    assert!(early > 500, "only {early} runs stopped early");
}

fn cubic(x: f64) -> f64 {
    let t = x / 511.0;
    220.0 + 30.0 * t - 45.0 * t * t + 20.0 * t * t * t
}

/// Points exactly on a cubic with `k` outliers of one magnitude and random
/// sign. With `k` of `n` points displaced by `m`, the contaminated fit has a
/// residual standard error of about `m * sqrt(k / n)`, so each outlier sits
/// at `sqrt(n / k)` >= 5 of those for k <= 20.
#[test]
fn planted_outliers_are_replaced() {
    let mut r = rng(41);
    for k in [1usize, 5, 20] {
        for _ in 0..50 {
            let mut pts: Vec<(f64, f64)> = (0..512).map(|x| (x as f64, cubic(x as f64))).collect();
            let mut planted = rand::seq::index::sample(&mut r, 512, k).into_vec();
            planted.sort_unstable();
            let m = r.gen_range(10.0..100.0);
            for &i in &planted {
                pts[i].1 += if r.gen::<bool>() { m } else { -m };
            }
            let out = poly3_reject(&pts, 0.98);
            assert_eq!(out.replaced, planted, "k={k}, m={m}");
            for &i in &planted {
                assert!((out.z[i] - cubic(i as f64)).abs() <= 0.5, "k={k}: {i} -> {}", out.z[i]);
            }
        }
    }
}

#[test]
fn line_with_one_outlier() {
    let mut pts: Vec<(f64, f64)> = (0..512).map(|x| (x as f64, 200.0 + 0.01 * x as f64)).collect();
    pts[100].1 += 80.0;
    let out = poly3_reject(&pts, 0.98);
    assert_eq!(out.replaced, vec![100]);
    assert!((out.z[100] - 201.0).abs() <= 0.5);
}

#[test]
fn merge_examples() {
    let a = DepthMap::from_fn(5, 5, |x, y| 20.0 + x as f64 + y as f64);
    assert_eq!(merge_depth_maps(&a, &a, 5).unwrap(), a);

    // c is the local mean of a, so a smooth a stays close to it.
    let smooth = DepthMap::filled(5, 5, 50.0);
    let mut spiky = smooth.clone();
    spiky.set(2, 2, 90.0);
    assert_eq!(merge_depth_maps(&smooth, &spiky, 5).unwrap().get(2, 2), 50.0);

    // At the centre c = 9 / 9 = 1, |a - c| = 8 = |b - c|; ties go to b.
    let mut a = DepthMap::filled(3, 3, 0.0);
    a.set(1, 1, 9.0);
    let mut b = a.clone();
    b.set(1, 1, -7.0);
    assert_eq!(merge_depth_maps(&a, &b, 3).unwrap().get(1, 1), -7.0);
}
