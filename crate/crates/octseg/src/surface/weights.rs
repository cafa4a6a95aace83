use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square weight kernel over depth-map neighbours.
///
/// Rows run along frames (y) and columns along A-scans (x). Entries are
/// numerators over a common positive `normalization`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub size: usize,
    pub entries: Vec<f64>,
    pub normalization: f64,
}

#[rustfmt::skip]
const RPE_7X7: [f64; 49] = [
    0., 1.,  1.,    1.,  1., 1., 0.,
    1., 2.,  2.,    2.,  2., 2., 1.,
    2., 4.,  4.,    4.,  4., 4., 2.,
    4., 8., 16., -138., 16., 8., 4.,
    2., 4.,  4.,    4.,  4., 4., 2.,
    1., 2.,  2.,    2.,  2., 2., 1.,
    0., 1.,  1.,    1.,  1., 1., 0.,
];

#[rustfmt::skip]
const ILM_5X5: [f64; 25] = [
    0., 1.,   2., 1., 0.,
    1., 4.,   8., 4., 1.,
    2., 8., -64., 8., 2.,
    1., 4.,   8., 4., 1.,
    0., 1.,   2., 1., 0.,
];

// Symmetric, so the off-centre weights sum to the /12 normalization.
#[rustfmt::skip]
const ILM_3X3: [f64; 9] = [
    1.,   2., 1.,
    2., -12., 2.,
    1.,   2., 1.,
];

impl WeightMatrix {
    pub fn new(size: usize, entries: Vec<f64>, normalization: f64) -> Result<Self> {
        let m = Self {
            size,
            entries,
            normalization,
        };
        m.validate()?;
        Ok(m)
    }

    /// 7x7 error-distance kernel used for the RPE, IS/OS and inner surfaces.
    pub fn rpe_7x7() -> Self {
        Self {
            size: 7,
            entries: RPE_7X7.to_vec(),
            normalization: 138.0,
        }
    }

    /// 5x5 error-distance kernel for the ILM dynamic phase.
    pub fn ilm_5x5() -> Self {
        Self {
            size: 5,
            entries: ILM_5X5.to_vec(),
            normalization: 64.0,
        }
    }

    /// 3x3 error-distance kernel for the ILM final phase.
    pub fn ilm_3x3() -> Self {
        Self {
            size: 3,
            entries: ILM_3X3.to_vec(),
            normalization: 12.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 || self.size % 2 == 0 {
            return Err(Error::Config(format!(
                "weight matrix size must be odd, got {}",
                self.size
            )));
        }
        if self.entries.len() != self.size * self.size {
            return Err(Error::Config(format!(
                "weight matrix of size {} needs {} entries, got {}",
                self.size,
                self.size * self.size,
                self.entries.len()
            )));
        }
        if !(self.normalization > 0.0) {
            return Err(Error::Config("weight normalization must be positive".into()));
        }
        if self.off_center_sum() <= 0.0 {
            return Err(Error::Config("off-centre weights must have a positive sum".into()));
        }
        Ok(())
    }

    pub fn half(&self) -> usize {
        self.size / 2
    }

    pub fn center(&self) -> f64 {
        self.entries[self.size * self.half() + self.half()]
    }

    pub fn off_center_sum(&self) -> f64 {
        self.entries.iter().sum::<f64>() - self.center()
    }

    /// The correcting-value kernel: same weights with the centre zeroed.
    pub fn correcting(&self) -> Self {
        let mut m = self.clone();
        let c = self.size * self.half() + self.half();
        m.entries[c] = 0.0;
        m
    }

    /// Non-zero off-centre taps as `(dx, dy, weight)`.
    pub(crate) fn taps(&self) -> Vec<(isize, isize, f64)> {
        let h = self.half() as isize;
        let mut out = Vec::new();
        for r in 0..self.size {
            for c in 0..self.size {
                let (dx, dy) = (c as isize - h, r as isize - h);
                let w = self.entries[r * self.size + c];
                if (dx, dy) != (0, 0) && w != 0.0 {
                    out.push((dx, dy, w));
                }
            }
        }
        out
    }
}
