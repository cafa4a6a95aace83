use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

/// Result of [`poly3_reject`] on one row of boundary points.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly3Outcome {
    /// Corrected depths, in input order.
    pub z: Vec<f64>,
    /// Indices whose depth was replaced by the refit cubic.
    pub replaced: Vec<usize>,
    /// Set when the fit could not be trusted and the input was returned.
    pub degraded: bool,
}

/// Two-sided standard-normal quantile for a central probability `confidence`.
pub fn normal_quantile(confidence: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    n.inverse_cdf((1.0 + confidence) / 2.0)
}

/// Least-squares cubic through `(x, z)`; coefficients are for the
/// standardized abscissa `(x - shift) / scale`.
struct Cubic {
    coef: [f64; 4],
    shift: f64,
    scale: f64,
}

impl Cubic {
    fn fit(xs: &[f64], zs: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n < 4 {
            return None;
        }
        let (lo, hi) = xs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let shift = 0.5 * (lo + hi);
        let scale = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
        let design = DMatrix::from_fn(n, 4, |r, c| ((xs[r] - shift) / scale).powi(c as i32));
        let rhs = DVector::from_column_slice(zs);
        let svd = design.svd(true, true);
        let sol = svd.solve(&rhs, 1e-12).ok()?;
        Some(Self {
            coef: [sol[0], sol[1], sol[2], sol[3]],
            shift,
            scale,
        })
    }

    fn eval(&self, x: f64) -> f64 {
        let t = (x - self.shift) / self.scale;
        self.coef[0] + t * (self.coef[1] + t * (self.coef[2] + t * self.coef[3]))
    }
}

/// Cubic least-squares outlier rejection on one row of boundary points.
///
/// Points whose residual from the first fit exceeds `q * sigma` (`q` the
/// standard-normal quantile at `(1 + confidence) / 2`, `sigma` the residual
/// standard error) are treated as noise. A second cubic is fitted to the
/// remaining points and each noise point takes that cubic's value.
pub fn poly3_reject(points: &[(f64, f64)], confidence: f64) -> Poly3Outcome {
    let unchanged = |degraded| Poly3Outcome {
        z: points.iter().map(|p| p.1).collect(),
        replaced: Vec::new(),
        degraded,
    };
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let zs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let Some(first) = Cubic::fit(&xs, &zs) else {
        return unchanged(true);
    };
    let resid: Vec<f64> = xs.iter().zip(&zs).map(|(&x, &z)| z - first.eval(x)).collect();
    let dof = points.len().saturating_sub(4).max(1) as f64;
    let sigma = (resid.iter().map(|r| r * r).sum::<f64>() / dof).sqrt();
    let z_scale = zs.iter().fold(1.0f64, |m, z| m.max(z.abs()));
    let band = (normal_quantile(confidence) * sigma).max(1e-9 * z_scale);

    let noise: Vec<usize> = (0..points.len()).filter(|&i| resid[i].abs() > band).collect();
    if noise.is_empty() {
        return unchanged(false);
    }
    let (kx, kz): (Vec<f64>, Vec<f64>) = (0..points.len())
        .filter(|i| noise.binary_search(i).is_err())
        .map(|i| (xs[i], zs[i]))
        .unzip();
    let Some(refit) = Cubic::fit(&kx, &kz) else {
        return unchanged(true);
    };
    let mut z = zs;
    for &i in &noise {
        z[i] = refit.eval(xs[i]);
    }
    Poly3Outcome {
        z,
        replaced: noise,
        degraded: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_at_98_percent() {
        assert!((normal_quantile(0.98) - 2.326_347_874).abs() < 1e-6);
    }

    #[test]
    fn exact_cubic_is_unchanged() {
        let pts: Vec<(f64, f64)> = (0..512)
            .map(|x| {
                let t = x as f64;
                (t, 180.0 + 0.05 * t - 2e-4 * t * t + 3e-7 * t * t * t)
            })
            .collect();
        let out = poly3_reject(&pts, 0.98);
        assert!(out.replaced.is_empty());
        assert!(!out.degraded);
        assert_eq!(out.z, pts.iter().map(|p| p.1).collect::<Vec<_>>());
    }

    #[test]
    fn constant_row_is_unchanged() {
        let pts: Vec<(f64, f64)> = (0..100).map(|x| (x as f64, 150.0)).collect();
        let out = poly3_reject(&pts, 0.98);
        assert!(out.replaced.is_empty());
        assert!(out.z.iter().all(|&z| z == 150.0));
    }

    #[test]
    fn planted_outlier_on_a_line() {
        let mut pts: Vec<(f64, f64)> = (0..512).map(|x| (x as f64, 200.0 + 0.01 * x as f64)).collect();
        pts[300].1 += 80.0;
        let out = poly3_reject(&pts, 0.98);
        assert_eq!(out.replaced, vec![300]);
        assert!((out.z[300] - (200.0 + 3.0)).abs() < 0.5);
    }

    #[test]
    fn too_few_points_is_degraded() {
        let pts = [(0.0, 1.0), (1.0, 2.0), (2.0, 5.0)];
        let out = poly3_reject(&pts, 0.98);
        assert!(out.degraded);
        assert_eq!(out.z, vec![1.0, 2.0, 5.0]);
    }
}
