//! Per-direction k-nearest-neighbor selection and the sorted slice matrix.
//!
//! Column j of the slice matrix holds, sorted ascending, the pseudo-projections
//! `Yt_i * <V_j, Xt_i>` of the k normalized covariate rows nearest to
//! direction V_j. Neighbor search is exact brute force: at the scales this
//! crate targets (m <= 10^3 directions, n <= 10^4 rows) it is faster than any
//! index, and it keeps tie handling deterministic.

use crate::data::NormalizedDataset;
use crate::error::{Error, Result};
use crate::sphere::{dot, Direction, DirectionSet};
use rayon::prelude::*;

/// k by m matrix of sorted per-direction slices, stored column-major.
#[derive(Debug, Clone)]
pub struct SliceMatrix {
    data: Vec<f64>,
    k: usize,
    m: usize,
}

impl SliceMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Column j, sorted non-decreasing.
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.k..(j + 1) * self.k]
    }

    /// Builds a matrix from explicit columns; test and diagnostics helper.
    pub fn from_columns(cols: Vec<Vec<f64>>) -> Result<Self> {
        let m = cols.len();
        if m == 0 {
            return Err(Error::invalid("slice matrix needs at least one column"));
        }
        let k = cols[0].len();
        if k == 0 || cols.iter().any(|c| c.len() != k) {
            return Err(Error::invalid("slice matrix columns must be non-empty and equal length"));
        }
        for c in &cols {
            if c.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::invalid("slice matrix columns must be sorted"));
            }
        }
        Ok(SliceMatrix { data: cols.concat(), k, m })
    }
}

/// Indices of the k rows of `xt` closest to `v` in Euclidean distance,
/// ordered by (distance, row index). Ties at the k-th distance are broken by
/// ascending row index, which fixes one deterministic choice among the
/// equally valid neighbor sets.
pub fn knn_indices(xt: &[Vec<f64>], v: &Direction, k: usize) -> Result<Vec<usize>> {
    let n = xt.len();
    if k == 0 {
        return Err(Error::invalid("neighbor count must be >= 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("neighbor count {k} exceeds sample size {n}")));
    }
    let mut order: Vec<(f64, usize)> = xt
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let d2: f64 = row
                .iter()
                .zip(v.coords())
                .map(|(x, c)| (x - c) * (x - c))
                .sum();
            (d2, i)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1))
    };
    if k < n {
        order.select_nth_unstable_by(k - 1, cmp);
        order.truncate(k);
    }
    order.sort_unstable_by(cmp);
    Ok(order.into_iter().map(|(_, i)| i).collect())
}

/// Builds the k by m slice matrix for the given dataset and directions.
/// Columns are independent, so construction parallelizes over j without
/// affecting the result.
pub fn build_slice_matrix(
    nd: &NormalizedDataset,
    dirs: &DirectionSet,
    k: usize,
) -> Result<SliceMatrix> {
    if nd.dim() != dirs.dim() {
        return Err(Error::invalid(format!(
            "data dimension {} does not match direction dimension {}",
            nd.dim(),
            dirs.dim()
        )));
    }
    if k == 0 || k > nd.len() {
        return Err(Error::invalid(format!(
            "neighbor count {k} must be in 1..={}",
            nd.len()
        )));
    }
    let m = dirs.len();
    let mut data = vec![0.0; k * m];
    data.par_chunks_mut(k)
        .zip(dirs.directions().par_iter())
        .try_for_each(|(col, v)| -> Result<()> {
            let idx = knn_indices(nd.xt(), v, k)?;
            for (slot, i) in col.iter_mut().zip(&idx) {
                *slot = nd.yt()[*i] * dot(v.coords(), &nd.xt()[*i]);
            }
            col.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite projections"));
            Ok(())
        })?;
    Ok(SliceMatrix { data, k, m })
}
