//! One-dimensional optimal transport between equal-size discrete measures and
//! the Monte Carlo sliced distance between point clouds.
//!
//! For two uniform discrete measures on k points each, the squared
//! 2-Wasserstein distance is attained by matching sorted order statistics:
//!
//! ```text
//! W2^2(a, b) = (1/k) * sum_i (a_(i) - b_(i))^2
//! ```
//!
//! so no assignment solver is needed in one dimension.

use crate::error::{Error, Result};
use crate::sphere::DirectionSet;

/// Sorts a copy of `v` ascending. NaN is rejected by callers; total order on
/// the remaining values is the usual one.
fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|x, y| x.partial_cmp(y).expect("non-finite value in sample"));
    s
}

/// Squared 2-Wasserstein distance between the uniform measures on `a` and `b`.
///
/// Inputs need not be sorted; both must have the same length k >= 1.
pub fn w2_squared_equal(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "sample sizes differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("samples must be non-empty"));
    }
    Ok(w2_squared_sorted(&sorted(a), &sorted(b)))
}

/// As [`w2_squared_equal`] for inputs already sorted ascending. Hot path for
/// the per-direction objective where slices are stored sorted.
pub(crate) fn w2_squared_sorted(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len();
    let mut acc = 0.0;
    for i in 0..k {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc / k as f64
}

/// Monte Carlo sliced 2-Wasserstein distance between two equal-size point
/// clouds: the square root of the direction-averaged 1-D squared distance
/// between the projected clouds.
///
/// Directions are consumed in order, so the result is reproducible for a
/// fixed [`DirectionSet`].
pub fn sw2_point_clouds(a: &[Vec<f64>], b: &[Vec<f64>], dirs: &DirectionSet) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "point clouds must have equal size: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("point clouds must be non-empty"));
    }
    let d = dirs.dim();
    if a.iter().chain(b.iter()).any(|p| p.len() != d) {
        return Err(Error::invalid(format!(
            "point dimension does not match direction dimension {d}"
        )));
    }
    let mut acc = 0.0;
    for v in dirs.directions() {
        let pa = sorted(&project(a, v.coords()));
        let pb = sorted(&project(b, v.coords()));
        acc += w2_squared_sorted(&pa, &pb);
    }
    Ok((acc / dirs.len() as f64).sqrt())
}

fn project(points: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    points
        .iter()
        .map(|p| p.iter().zip(v).map(|(x, c)| x * c).sum())
        .collect()
}
