use crate::error::{Error, Result};
use crate::map::DepthMap;

/// Entry-wise choice between two candidate surfaces.
///
/// `c` is the `n x n` mean of `a`; each entry keeps `a` when it is strictly
/// closer to `c` than `b` is, and takes `b` otherwise.
pub fn merge_depth_maps(a: &DepthMap, b: &DepthMap, n: usize) -> Result<DepthMap> {
    a.check_shape(b, "merge")?;
    if n == 0 || n % 2 == 0 {
        return Err(Error::InvalidArgument(format!("merge window must be odd, got {n}")));
    }
    let c = a.box_mean(n);
    Ok(DepthMap::from_fn(a.width(), a.frames(), |x, y| {
        let (av, bv, cv) = (a.get(x, y), b.get(x, y), c.get(x, y));
        if (av - cv).abs() < (bv - cv).abs() {
            av
        } else {
            bv
        }
    }))
}
