//! 3D kernels: box mean, directional axial differential, threshold, and
//! grayscale erosion with a ball.
//!
//! All rectangular windows are clipped at the volume borders and the result
//! renormalized over the in-bounds samples. A window of extent `K` centred on
//! `c` covers `[c - K/2, c + ceil(K/2) - 1]`, which is the usual centred
//! window for odd `K` and leans one sample towards the origin for even `K`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Volume;

/// Window extents along x (A-scans), y (frames) and z (depth).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSize {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl KernelSize {
    pub const fn new(x: usize, y: usize, z: usize) -> Self {
        Self { x, y, z }
    }

    pub const fn cube(k: usize) -> Self {
        Self { x: k, y: k, z: k }
    }

    pub fn check_fits(&self, dims: (usize, usize, usize), what: &str) -> Result<()> {
        let (w, f, d) = dims;
        if self.x == 0 || self.y == 0 || self.z == 0 {
            return Err(Error::Config(format!("{what}: kernel extents must be >= 1")));
        }
        if self.x > w || self.y > f || self.z > d {
            return Err(Error::Config(format!(
                "{what}: kernel {}x{}x{} larger than volume {w}x{f}x{d}",
                self.x, self.y, self.z
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for KernelSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.x, self.y, self.z)
    }
}

/// Which side of a boundary is bright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Bright layer above a dark one: +1 weights above the centre plane, -1 below.
    BrightAbove,
    /// Dark layer above a bright one: the signs are flipped.
    BrightBelow,
}

impl Orientation {
    /// Weight of a sample `dz` planes from the centre (negative is above).
    pub fn weight(self, dz: isize) -> f64 {
        let s = match dz.cmp(&0) {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => -1.0,
        };
        match self {
            Orientation::BrightAbove => s,
            Orientation::BrightBelow => -s,
        }
    }
}

/// Window offsets `(lo, hi)` relative to the centre for extent `k`.
pub fn window_offsets(k: usize) -> (isize, isize) {
    let k = k as isize;
    (-(k / 2), (k + 1) / 2 - 1)
}

#[inline]
fn clip(c: usize, lo: isize, hi: isize, n: usize) -> (usize, usize) {
    let a = (c as isize + lo).max(0) as usize;
    let b = (c as isize + hi).min(n as isize - 1) as usize;
    (a, b)
}

/// Windowed mean along x, per contiguous row.
fn mean_along_x(src: &[f64], width: usize, k: usize) -> Vec<f64> {
    let (lo, hi) = window_offsets(k);
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(width)
        .zip(src.par_chunks(width))
        .for_each_init(
            || vec![0.0; width + 1],
            |prefix, (dst, row)| {
                for (i, &v) in row.iter().enumerate() {
                    prefix[i + 1] = prefix[i] + v;
                }
                for (x, o) in dst.iter_mut().enumerate() {
                    let (a, b) = clip(x, lo, hi, width);
                    *o = (prefix[b + 1] - prefix[a]) / (b - a + 1) as f64;
                }
            },
        );
    out
}

/// Windowed mean along z, per frame.
fn mean_along_z(src: &[f64], width: usize, depth: usize, k: usize) -> Vec<f64> {
    let (lo, hi) = window_offsets(k);
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(width * depth)
        .zip(src.par_chunks(width * depth))
        .for_each_init(
            || vec![0.0; width * (depth + 1)],
            |prefix, (dst, frame)| {
                column_prefix(frame, width, depth, prefix);
                for z in 0..depth {
                    let (a, b) = clip(z, lo, hi, depth);
                    let n = (b - a + 1) as f64;
                    let (top, bot) = (&prefix[a * width..], &prefix[(b + 1) * width..]);
                    for x in 0..width {
                        dst[x + width * z] = (bot[x] - top[x]) / n;
                    }
                }
            },
        );
    out
}

/// `prefix[z * width + x]` = sum of `frame[x, 0..z]`.
fn column_prefix(frame: &[f64], width: usize, depth: usize, prefix: &mut [f64]) {
    prefix[..width].fill(0.0);
    for z in 0..depth {
        let (done, rest) = prefix.split_at_mut((z + 1) * width);
        let prev = &done[z * width..];
        let cur = &mut rest[..width];
        let row = &frame[z * width..(z + 1) * width];
        for x in 0..width {
            cur[x] = prev[x] + row[x];
        }
    }
}

const Y_BLOCK: usize = 4096;

/// Windowed mean along y (across frames), in blocks of frame positions.
fn mean_along_y(src: &[f64], frame_len: usize, frames: usize, k: usize) -> Vec<f64> {
    let (lo, hi) = window_offsets(k);
    let mut out = vec![0.0; src.len()];
    let blocks: Vec<(usize, Vec<f64>)> = (0..frame_len.div_ceil(Y_BLOCK))
        .into_par_iter()
        .map(|bi| {
            let p0 = bi * Y_BLOCK;
            let n = Y_BLOCK.min(frame_len - p0);
            let mut prefix = vec![0.0; n * (frames + 1)];
            for y in 0..frames {
                let s = &src[y * frame_len + p0..y * frame_len + p0 + n];
                for i in 0..n {
                    prefix[(y + 1) * n + i] = prefix[y * n + i] + s[i];
                }
            }
            let mut res = vec![0.0; n * frames];
            for y in 0..frames {
                let (a, b) = clip(y, lo, hi, frames);
                let c = (b - a + 1) as f64;
                for i in 0..n {
                    res[y * n + i] = (prefix[(b + 1) * n + i] - prefix[a * n + i]) / c;
                }
            }
            (p0, res)
        })
        .collect();
    for (p0, res) in blocks {
        let n = res.len() / frames;
        for y in 0..frames {
            out[y * frame_len + p0..y * frame_len + p0 + n].copy_from_slice(&res[y * n..(y + 1) * n]);
        }
    }
    out
}

/// Lateral (x, y) box mean, clipped and renormalized.
fn lateral_mean(vol: &Volume<f64>, kx: usize, ky: usize) -> Vec<f64> {
    let (w, f, d) = vol.dims();
    let mut data = if kx > 1 {
        mean_along_x(vol.as_slice(), w, kx)
    } else {
        vol.as_slice().to_vec()
    };
    if ky > 1 {
        data = mean_along_y(&data, w * d, f, ky);
    }
    data
}

/// 3D box mean with border renormalization.
pub fn mean_filter<T>(vol: &Volume<T>, size: KernelSize) -> Result<Volume<f64>>
where
    T: Copy + Send + Sync + Into<f64>,
{
    size.check_fits(vol.dims(), "mean filter")?;
    let v = vol.to_f64();
    let (w, _, d) = v.dims();
    let mut data = lateral_mean(&v, size.x, size.y);
    drop(v);
    if size.z > 1 {
        data = mean_along_z(&data, w, d, size.z);
    }
    Ok(vol.with_data(data))
}

/// Directional axial differential filter.
///
/// Interior voxels get `sum(f * v) / (kx * ky * (kz - 1))` where `f` is +1 on
/// the planes above the centre and -1 below for [`Orientation::BrightAbove`]
/// (negated for `BrightBelow`). That equals half the difference between the
/// mean of the upper half-window and the mean of the lower one, which is the
/// form used at the borders where each half is averaged over its in-bounds
/// samples. A voxel with no in-bounds plane on one side gets 0.
pub fn diff_filter<T>(vol: &Volume<T>, size: KernelSize, orient: Orientation) -> Result<Volume<f64>>
where
    T: Copy + Send + Sync + Into<f64>,
{
    if size.z < 2 || size.z % 2 == 0 {
        return Err(Error::Config(format!(
            "differential filter needs an odd depth extent >= 3, got {}",
            size.z
        )));
    }
    size.check_fits(vol.dims(), "differential filter")?;
    let v = vol.to_f64();
    let (w, _, d) = v.dims();
    let lateral = lateral_mean(&v, size.x, size.y);
    drop(v);
    let half = size.z / 2;
    let sign = orient.weight(-1);
    let mut out = vec![0.0; lateral.len()];
    out.par_chunks_mut(w * d)
        .zip(lateral.par_chunks(w * d))
        .for_each_init(
            || vec![0.0; w * (d + 1)],
            |prefix, (dst, frame)| {
                column_prefix(frame, w, d, prefix);
                for z in 0..d {
                    // above: [z - half, z - 1], below: [z + 1, z + half]
                    if z == 0 || z + 1 == d {
                        dst[z * w..(z + 1) * w].fill(0.0);
                        continue;
                    }
                    let a0 = z.saturating_sub(half);
                    let b1 = (z + half).min(d - 1);
                    let na = (z - a0) as f64;
                    let nb = (b1 - z) as f64;
                    let pa0 = &prefix[a0 * w..];
                    let pz = &prefix[z * w..];
                    let pz1 = &prefix[(z + 1) * w..];
                    let pb = &prefix[(b1 + 1) * w..];
                    for x in 0..w {
                        let above = (pz[x] - pa0[x]) / na;
                        let below = (pb[x] - pz1[x]) / nb;
                        dst[x + w * z] = sign * 0.5 * (above - below);
                    }
                }
            },
        );
    Ok(vol.with_data(out))
}

/// Zero every voxel below `t`; values at or above `t` are kept.
pub fn threshold_zero(vol: &Volume<f64>, t: f64) -> Volume<f64> {
    vol.map(|v| if v < t { 0.0 } else { v })
}

/// Grayscale erosion with the discrete ball `dx² + dy² + dz² <= r²`,
/// restricted to in-bounds voxels.
///
/// The ball is decomposed into axial runs: for each lateral offset the
/// run half-length is `floor(sqrt(r² - dx² - dy²))`, so the erosion is the
/// minimum over lateral offsets of an axial running minimum.
pub fn erode_ball<T>(vol: &Volume<T>, r: usize) -> Volume<T>
where
    T: Copy + PartialOrd + Send + Sync,
{
    if r == 0 {
        return vol.clone();
    }
    let (w, f, d) = vol.dims();
    let ri = r as isize;
    let r2 = ri * ri;
    // Lateral offsets with their axial half-lengths.
    let mut disk: Vec<(isize, isize, usize)> = Vec::new();
    for dy in -ri..=ri {
        for dx in -ri..=ri {
            let rem = r2 - dx * dx - dy * dy;
            if rem >= 0 {
                disk.push((dx, dy, (rem as f64).sqrt().floor() as usize));
            }
        }
    }
    let frame_len = w * d;
    let runs = |y: usize| -> Vec<Vec<T>> { axial_run_minima(vol.frame(y), w, d, r) };

    let mut out: Vec<T> = vol.as_slice().to_vec();
    let mut cache: Vec<Option<Vec<Vec<T>>>> = vec![None; f];
    for y in 0..f {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(f - 1);
        for (yy, slot) in cache.iter_mut().enumerate().take(y0) {
            if yy + r < y {
                *slot = None;
            }
        }
        let missing: Vec<usize> = (y0..=y1).filter(|&yy| cache[yy].is_none()).collect();
        let computed: Vec<(usize, Vec<Vec<T>>)> =
            missing.into_par_iter().map(|yy| (yy, runs(yy))).collect();
        for (yy, r) in computed {
            cache[yy] = Some(r);
        }
        let cache_ref = &cache;
        let dst = &mut out[y * frame_len..(y + 1) * frame_len];
        dst.par_chunks_mut(w).enumerate().for_each(|(z, row)| {
            for (x, o) in row.iter_mut().enumerate() {
                let mut m = *o;
                for &(dx, dy, h) in &disk {
                    let xx = x as isize + dx;
                    let yy = y as isize + dy;
                    if xx < 0 || xx >= w as isize || yy < 0 || yy >= f as isize {
                        continue;
                    }
                    let stack = cache_ref[yy as usize].as_ref().expect("frame cached");
                    let v = stack[h][xx as usize + w * z];
                    if v < m {
                        m = v;
                    }
                }
                *o = m;
            }
        });
    }
    vol.with_data(out)
}

/// For one frame, `out[h][x + w*z]` = min over `frame[x, z-h ..= z+h]`.
fn axial_run_minima<T: Copy + PartialOrd>(frame: &[T], w: usize, d: usize, r: usize) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(r + 1);
    out.push(frame.to_vec());
    for h in 1..=r {
        let prev = &out[h - 1];
        let mut cur = prev.clone();
        for z in 0..d {
            for x in 0..w {
                let i = x + w * z;
                let mut m = cur[i];
                if z >= h {
                    let v = frame[x + w * (z - h)];
                    if v < m {
                        m = v;
                    }
                }
                if z + h < d {
                    let v = frame[x + w * (z + h)];
                    if v < m {
                        m = v;
                    }
                }
                cur[i] = m;
            }
        }
        out.push(cur);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vol(w: usize, f: usize, d: usize, g: impl Fn(usize, usize, usize) -> f64 + Sync) -> Volume<f64> {
        Volume::from_fn(w, f, d, g).unwrap()
    }

    #[test]
    fn offsets_for_odd_and_even_extents() {
        assert_eq!(window_offsets(1), (0, 0));
        assert_eq!(window_offsets(3), (-1, 1));
        assert_eq!(window_offsets(6), (-3, 2));
        assert_eq!(window_offsets(11), (-5, 5));
    }

    #[test]
    fn mean_of_constant_is_constant() {
        let v = vol(5, 4, 6, |_, _, _| 42.0);
        for k in [KernelSize::cube(3), KernelSize::new(2, 4, 6), KernelSize::new(5, 1, 1)] {
            let m = mean_filter(&v, k).unwrap();
            assert!(m.as_slice().iter().all(|&x| (x - 42.0).abs() < 1e-12), "{k}");
        }
    }

    #[test]
    fn mean_of_impulse_spreads_over_27_neighbours() {
        let v = vol(9, 9, 9, |x, y, z| if (x, y, z) == (4, 4, 4) { 255.0 } else { 0.0 });
        let m = mean_filter(&v, KernelSize::cube(3)).unwrap();
        for y in 0..9usize {
            for z in 0..9usize {
                for x in 0..9usize {
                    let near = x.abs_diff(4) <= 1 && y.abs_diff(4) <= 1 && z.abs_diff(4) <= 1;
                    let expect = if near { 255.0 / 27.0 } else { 0.0 };
                    assert!((m.get(x, y, z) - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn oversized_kernel_is_rejected() {
        let v = vol(4, 4, 4, |_, _, _| 1.0);
        assert!(mean_filter(&v, KernelSize::new(5, 1, 1)).is_err());
        assert!(diff_filter(&v, KernelSize::new(1, 1, 5), Orientation::BrightAbove).is_err());
    }

    #[test]
    fn diff_of_constant_is_zero() {
        let v = vol(6, 5, 12, |_, _, _| 77.0);
        let dv = diff_filter(&v, KernelSize::new(3, 3, 5), Orientation::BrightAbove).unwrap();
        assert!(dv.as_slice().iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn diff_rejects_even_or_unit_depth() {
        let v = vol(6, 5, 12, |_, _, _| 1.0);
        assert!(diff_filter(&v, KernelSize::new(1, 1, 4), Orientation::BrightAbove).is_err());
        assert!(diff_filter(&v, KernelSize::new(1, 1, 1), Orientation::BrightAbove).is_err());
    }

    #[test]
    fn diff_axial_step_is_half_contrast() {
        let (a, b) = (200.0, 40.0);
        let v = vol(5, 5, 10, |_, _, z| if z < 5 { a } else { b });
        let dv = diff_filter(&v, KernelSize::cube(3), Orientation::BrightAbove).unwrap();
        // centre z=4: one plane of a above, one plane of b below.
        // numerator 9a - 9b over 3*3*2
        assert!((dv.get(2, 2, 4) - (a - b) / 2.0).abs() < 1e-12);
        let neg = diff_filter(&v, KernelSize::cube(3), Orientation::BrightBelow).unwrap();
        for (p, q) in dv.as_slice().iter().zip(neg.as_slice()) {
            assert_eq!(*p, -*q);
        }
    }

    #[test]
    fn threshold_keeps_values_at_threshold() {
        let v = Volume::from_vec(3, 1, 1, vec![10.0, 30.0, 200.0]).unwrap();
        assert_eq!(threshold_zero(&v, 30.0).as_slice(), &[0.0, 30.0, 200.0]);
        assert_eq!(threshold_zero(&v, 0.0), v);
        let z = Volume::filled(2, 2, 2, 0.0).unwrap();
        assert_eq!(threshold_zero(&z, 17.0), z);
    }

    #[test]
    fn erosion_radius_zero_is_identity() {
        let v = vol(4, 3, 5, |x, y, z| (x * 7 + y * 3 + z) as f64);
        assert_eq!(erode_ball(&v, 0), v);
    }

    #[test]
    fn erosion_of_constant_is_constant() {
        let v = vol(6, 6, 6, |_, _, _| 9.0);
        assert_eq!(erode_ball(&v, 2), v);
    }

    #[test]
    fn erosion_of_point_hole_makes_a_ball() {
        let v = vol(9, 9, 9, |x, y, z| if (x, y, z) == (4, 4, 4) { 0.0 } else { 5.0 });
        let e = erode_ball(&v, 2);
        for y in 0..9usize {
            for z in 0..9usize {
                for x in 0..9usize {
                    let d2 = x.abs_diff(4).pow(2) + y.abs_diff(4).pow(2) + z.abs_diff(4).pow(2);
                    let expect = if d2 <= 4 { 0.0 } else { 5.0 };
                    assert_eq!(e.get(x, y, z), expect);
                }
            }
        }
    }
}
