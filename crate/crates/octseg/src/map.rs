//! Dense 2D maps indexed by A-scan position `(x, y)`.
//!
//! Rows are B-scan frames (`y`) and columns are A-scans within a frame
//! (`x`), so a map of a volume with `width` A-scans and `frames` B-scans
//! stores `width * frames` entries in row-major order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Map2<T> {
    width: usize,
    frames: usize,
    data: Vec<T>,
}

/// Depth (z index, in pixels) of a surface at every A-scan.
pub type DepthMap = Map2<f64>;

impl<T: Copy> Map2<T> {
    pub fn filled(width: usize, frames: usize, value: T) -> Self {
        Self {
            width,
            frames,
            data: vec![value; width * frames],
        }
    }

    pub fn from_vec(width: usize, frames: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * frames {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {width}x{frames} map",
                data.len()
            )));
        }
        Ok(Self {
            width,
            frames,
            data,
        })
    }

    pub fn from_fn(width: usize, frames: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * frames);
        for y in 0..frames {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            frames,
            data,
        }
    }

    /// Build from rows, one per frame.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let frames = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self {
            width,
            frames,
            data: rows.concat(),
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[x + self.width * y]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[x + self.width * y] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn row_mut(&mut self, y: usize) -> &mut [T] {
        &mut self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn same_shape<U>(&self, other: &Map2<U>) -> bool {
        self.width == other.width && self.frames == other.frames
    }

    pub(crate) fn check_shape<U>(&self, other: &Map2<U>, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.frames, other.width, other.frames
            )))
        }
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Map2<U> {
        Map2 {
            width: self.width,
            frames: self.frames,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map<U: Copy, V: Copy>(&self, other: &Map2<U>, f: impl Fn(T, U) -> V) -> Result<Map2<V>> {
        self.check_shape(other, "zip")?;
        Ok(Map2 {
            width: self.width,
            frames: self.frames,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

impl Map2<f64> {
    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Mean over an `n x n` window centred on each entry, renormalized over
    /// in-bounds entries at the borders.
    pub fn box_mean(&self, n: usize) -> Map2<f64> {
        let (lo, hi) = crate::filters::window_offsets(n);
        let w = self.width as isize;
        let f = self.frames as isize;
        Map2::from_fn(self.width, self.frames, |x, y| {
            let (x, y) = (x as isize, y as isize);
            let mut sum = 0.0;
            let mut count = 0usize;
            for yy in (y + lo).max(0)..=(y + hi).min(f - 1) {
                for xx in (x + lo).max(0)..=(x + hi).min(w - 1) {
                    sum += self.data[(xx + w * yy) as usize];
                    count += 1;
                }
            }
            sum / count as f64
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_mean_of_constant_is_constant() {
        let m = Map2::filled(7, 4, 3.5);
        let b = m.box_mean(5);
        assert!(b.as_slice().iter().all(|&v| (v - 3.5).abs() < 1e-12));
    }

    #[test]
    fn from_rows_rejects_ragged() {
        assert!(Map2::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn indexing_is_row_per_frame() {
        let m = Map2::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.row(1), &[3.0, 4.0]);
    }
}
