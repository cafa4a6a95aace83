mod common;

use common::*;
use octseg::filters::{diff_filter, erode_ball, mean_filter, threshold_zero};
use octseg::{KernelSize, Orientation, Volume};
use proptest::prelude::*;
use rand::Rng;

const VOLUMES: u64 = 120;

fn random_kernel(rng: &mut impl Rng, v: &Volume<u8>) -> KernelSize {
    let (w, f, d) = v.dims();
    KernelSize::new(rng.gen_range(1..=w), rng.gen_range(1..=f), rng.gen_range(1..=d))
}

#[test]
fn mean_matches_brute_force() {
    let mut r = rng(11);
    for _ in 0..VOLUMES {
        let v = random_volume(&mut r, 9);
        let k = random_kernel(&mut r, &v);
        let got = mean_filter(&v, k).unwrap();
        for (a, b) in got.as_slice().iter().zip(mean_oracle(&v, k)) {
            assert!(close(*a, b), "{:?} {k}: {a} vs {b}", v.dims());
        }
    }
}

#[test]
fn diff_matches_brute_force() {
    let mut r = rng(12);
    let mut tested = 0;
    while tested < VOLUMES {
        let v = random_volume(&mut r, 9);
        if v.depth() < 3 {
            continue;
        }
        let (w, f, d) = v.dims();
        let kz = 2 * r.gen_range(1..=(d - 1) / 2) + 1;
        let k = KernelSize::new(r.gen_range(1..=w), r.gen_range(1..=f), kz);
        for o in [Orientation::BrightAbove, Orientation::BrightBelow] {
            let got = diff_filter(&v, k, o).unwrap();
            for (a, b) in got.as_slice().iter().zip(diff_oracle(&v, k, o)) {
                assert!(close(*a, b), "{:?} {k} {o:?}: {a} vs {b}", v.dims());
            }
        }
        tested += 1;
    }
}

#[test]
fn threshold_matches_brute_force() {
    let mut r = rng(13);
    for _ in 0..VOLUMES {
        let v = random_volume(&mut r, 9).to_f64();
        let t = r.gen_range(0.0..256.0f64).floor();
        let got = threshold_zero(&v, t);
        for (a, b) in got.as_slice().iter().zip(v.as_slice()) {
            assert_eq!(*a, if *b < t { 0.0 } else { *b });
        }
    }
}

#[test]
fn erosion_matches_brute_force() {
    let mut r = rng(14);
    for _ in 0..VOLUMES {
        let v = random_volume(&mut r, 9);
        let radius = r.gen_range(0..=4);
        assert_eq!(erode_ball(&v, radius).as_slice(), erode_oracle(&v, radius).as_slice(), "r={radius}");
    }
}

#[test]
fn erosion_r2_on_9_cube() {
    let mut r = rng(15);
    let data = (0..729).map(|_| r.gen()).collect();
    let v = Volume::from_vec(9, 9, 9, data).unwrap();
    assert_eq!(erode_ball(&v, 2).into_vec(), erode_oracle(&v, 2));
}

#[test]
fn mean_of_single_hot_voxel() {
    let mut v = Volume::filled(9, 9, 9, 0u8).unwrap();
    v.set(4, 4, 4, 255);
    let m = mean_filter(&v, KernelSize::cube(3)).unwrap();
    for y in 0..9 {
        for z in 0..9 {
            for x in 0..9 {
                let near = [x, y, z].iter().all(|&c| (3..=5).contains(&c));
                let want = if near { 255.0 / 27.0 } else { 0.0 };
                assert!(close(m.get(x, y, z), want));
            }
        }
    }
}

#[test]
fn mean_of_random_7_cube() {
    let mut r = rng(16);
    let v = Volume::from_vec(7, 7, 7, (0..343).map(|_| r.gen()).collect()).unwrap();
    let m = mean_filter(&v, KernelSize::cube(3)).unwrap();
    for (a, b) in m.as_slice().iter().zip(mean_oracle(&v, KernelSize::cube(3))) {
        assert!(close(*a, b));
    }
}

#[test]
fn axial_step_response() {
    let (a, b) = (40u8, 200u8);
    let v = Volume::from_fn(5, 5, 10, |_, _, z| if z < 5 { a } else { b }).unwrap();
    let up = diff_filter(&v, KernelSize::cube(3), Orientation::BrightAbove).unwrap();
    let down = diff_filter(&v, KernelSize::cube(3), Orientation::BrightBelow).unwrap();
    // z = 5 sees plane 4 (a) above and plane 6 (b) below; z = 4 sees a and b too.
    let want = (a as f64 - b as f64) / 2.0;
    assert_eq!(up.get(2, 2, 5), want);
    assert_eq!(up.get(2, 2, 4), want);
    for (u, d) in up.as_slice().iter().zip(down.as_slice()) {
        assert_eq!(*u, -*d);
    }
}

#[test]
fn threshold_examples() {
    let v = Volume::from_vec(3, 1, 1, vec![10.0, 30.0, 200.0]).unwrap();
    assert_eq!(threshold_zero(&v, 30.0).into_vec(), vec![0.0, 30.0, 200.0]);
    assert_eq!(threshold_zero(&v, 0.0), v);
    let z = Volume::filled(4, 3, 2, 0.0).unwrap();
    assert_eq!(threshold_zero(&z, 77.0), z);
}

#[test]
fn kernel_errors() {
    let v = Volume::filled(4, 4, 4, 1u8).unwrap();
    assert!(mean_filter(&v, KernelSize::cube(5)).is_err());
    assert!(diff_filter(&v, KernelSize::new(1, 1, 2), Orientation::BrightAbove).is_err());
    assert!(diff_filter(&v, KernelSize::new(1, 1, 5), Orientation::BrightAbove).is_err());
}

fn small_volume() -> impl Strategy<Value = Volume<u8>> {
    (1usize..=7, 1usize..=7, 1usize..=7).prop_flat_map(|(w, f, d)| {
        proptest::collection::vec(any::<u8>(), w * f * d).prop_map(move |data| Volume::from_vec(w, f, d, data).unwrap())
    })
}

proptest! {
    #[test]
    fn constant_volumes(c in any::<u8>(), w in 1usize..8, f in 1usize..8, d in 3usize..8) {
        let v = Volume::filled(w, f, d, c).unwrap();
        let m = mean_filter(&v, KernelSize::new(w, f, d)).unwrap();
        prop_assert!(m.as_slice().iter().all(|&x| close(x, c as f64)));
        let df = diff_filter(&v, KernelSize::new(1, 1, 3), Orientation::BrightAbove).unwrap();
        prop_assert!(df.as_slice().iter().all(|&x| x == 0.0));
        prop_assert_eq!(erode_ball(&v, 2), v);
    }

    #[test]
    fn range_is_preserved(v in small_volume(), r in 0usize..4) {
        let (lo, hi) = v.to_f64().min_max();
        let (w, f, d) = v.dims();
        let m = mean_filter(&v, KernelSize::new(w.min(3), f.min(3), d.min(3))).unwrap();
        let (mlo, mhi) = m.min_max();
        prop_assert!(mlo >= lo - 1e-9 && mhi <= hi + 1e-9);
        let e = erode_ball(&v, r);
        let (elo, ehi) = e.to_f64().min_max();
        prop_assert!(elo >= lo && ehi <= hi);
        prop_assert!(e.as_slice().iter().zip(v.as_slice()).all(|(a, b)| a <= b));
    }

    #[test]
    fn erosion_radius_zero_is_identity(v in small_volume()) {
        prop_assert_eq!(erode_ball(&v, 0), v);
    }
}
