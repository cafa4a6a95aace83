//! Brute-force reference implementations and shared fixtures.
#![allow(dead_code)]

use octseg::{KernelSize, Orientation, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random u8 volume with every extent in `1..=max`.
pub fn random_volume(rng: &mut ChaCha8Rng, max: usize) -> Volume<u8> {
    let (w, f, d) = (rng.gen_range(1..=max), rng.gen_range(1..=max), rng.gen_range(1..=max));
    let data = (0..w * f * d).map(|_| rng.gen()).collect();
    Volume::from_vec(w, f, d, data).unwrap()
}

/// Inclusive window `[c - k/2, c + ceil(k/2) - 1]` clipped to `[0, n)`.
fn window(c: usize, k: usize, n: usize) -> std::ops::RangeInclusive<usize> {
    let lo = c as i64 - (k / 2) as i64;
    let hi = c as i64 + k.div_ceil(2) as i64 - 1;
    (lo.max(0) as usize)..=(hi.min(n as i64 - 1) as usize)
}

pub fn mean_oracle(v: &Volume<u8>, k: KernelSize) -> Vec<f64> {
    let (w, f, d) = v.dims();
    let mut out = Vec::with_capacity(w * f * d);
    for y in 0..f {
        for z in 0..d {
            for x in 0..w {
                let (mut s, mut n) = (0.0, 0.0);
                for yy in window(y, k.y, f) {
                    for zz in window(z, k.z, d) {
                        for xx in window(x, k.x, w) {
                            s += v.get(xx, yy, zz) as f64;
                            n += 1.0;
                        }
                    }
                }
                out.push(s / n);
            }
        }
    }
    out
}

/// Half the difference between the mean of the in-bounds planes above the
/// centre and the mean of those below, each over the clipped lateral window;
/// 0 where one side has no plane.
pub fn diff_oracle(v: &Volume<u8>, k: KernelSize, o: Orientation) -> Vec<f64> {
    let (w, f, d) = v.dims();
    let half = (k.z / 2) as i64;
    let sign = match o {
        Orientation::BrightAbove => 1.0,
        Orientation::BrightBelow => -1.0,
    };
    let mut out = Vec::with_capacity(w * f * d);
    for y in 0..f {
        for z in 0..d {
            for x in 0..w {
                let (mut sa, mut na, mut sb, mut nb) = (0.0, 0.0, 0.0, 0.0);
                for dz in -half..=half {
                    let zz = z as i64 + dz;
                    if dz == 0 || zz < 0 || zz >= d as i64 {
                        continue;
                    }
                    for yy in window(y, k.y, f) {
                        for xx in window(x, k.x, w) {
                            let val = v.get(xx, yy, zz as usize) as f64;
                            if dz < 0 {
                                sa += val;
                                na += 1.0;
                            } else {
                                sb += val;
                                nb += 1.0;
                            }
                        }
                    }
                }
                out.push(if na == 0.0 || nb == 0.0 { 0.0 } else { sign * (sa / na - sb / nb) / 2.0 });
            }
        }
    }
    out
}

pub fn erode_oracle(v: &Volume<u8>, r: usize) -> Vec<u8> {
    let (w, f, d) = v.dims();
    let r = r as i64;
    let mut out = Vec::with_capacity(w * f * d);
    for y in 0..f as i64 {
        for z in 0..d as i64 {
            for x in 0..w as i64 {
                let mut m = u8::MAX;
                for dy in -r..=r {
                    for dz in -r..=r {
                        for dx in -r..=r {
                            if dx * dx + dy * dy + dz * dz > r * r {
                                continue;
                            }
                            let (xx, yy, zz) = (x + dx, y + dy, z + dz);
                            if xx < 0 || yy < 0 || zz < 0 || xx >= w as i64 || yy >= f as i64 || zz >= d as i64 {
                                continue;
                            }
                            m = m.min(v.get(xx as usize, yy as usize, zz as usize));
                        }
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}
