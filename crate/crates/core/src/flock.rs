//! Flocks: contiguous runs of vehicles in camera order, compared by the best
//! one-to-one matching of their members.

use std::ops::Range;

use crate::assignment::{max_assignment_unchecked, SquareMatrix};
use crate::error::{Error, Result};

/// Pairwise individual similarities, query rows × gallery columns, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if values.len() != rows * cols {
            return Err(Error::Shape {
                rows,
                cols,
                expected: rows * cols,
                actual: values.len(),
            });
        }
        for (k, &value) in values.iter().enumerate() {
            let (row, col) = (k / cols, k % cols);
            if !value.is_finite() {
                return Err(Error::NonFinite { row, col, value });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange { row, col, value });
            }
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(n * m);
        for r in rows {
            let r = r.as_ref();
            if r.len() != m {
                return Err(Error::Shape {
                    rows: n,
                    cols: m,
                    expected: n * m,
                    actual: values.len() + r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(n, m, values)
    }

    pub(crate) fn from_trusted(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        Self { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Gathers the square sub-block `rows × cols` by index lookup.
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> SquareMatrix {
        assert_eq!(rows.len(), cols.len(), "flock windows must have equal size");
        assert!(rows.end <= self.rows && cols.end <= self.cols);
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for i in rows.clone() {
            values.extend_from_slice(&self.row(i)[cols.clone()]);
        }
        SquareMatrix::from_trusted(rows.len(), values)
    }

    /// Column index of the largest entry in `row`, first one on ties.
    pub fn row_argmax(&self, row: usize) -> usize {
        let mut best = 0;
        for (j, &v) in self.row(row).iter().enumerate() {
            if v > self.row(row)[best] {
                best = j;
            }
        }
        best
    }
}

/// `size` consecutive list positions starting at `start`; the target sits at
/// `start + target_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlockWindow {
    pub start: usize,
    pub size: usize,
    pub target_offset: usize,
}

impl FlockWindow {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.size
    }

    pub fn target(&self) -> usize {
        self.start + self.target_offset
    }
}

/// Result of comparing two equal-size flocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FlockMatch {
    /// Mean matched individual similarity under the optimal matching.
    pub similarity: f64,
    /// `pairing[i]` is the gallery member matched to query member `i`.
    /// Relative to the block for [`flock_similarity`], absolute gallery
    /// indices for [`best_gallery_flock`].
    pub pairing: Vec<usize>,
}

impl FlockMatch {
    /// Gallery index paired with the query window's target.
    pub fn target_match(&self, query: &FlockWindow) -> usize {
        self.pairing[query.target_offset]
    }
}

pub fn check_flock_size(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::config(format!(
            "flock size must be odd and positive, got {k}"
        )));
    }
    Ok(())
}

/// Similarity of two flocks given the `k × k` block of individual similarities
/// (rows: members of the first flock, columns: members of the second).
pub fn flock_similarity(p_block: &SquareMatrix) -> Result<FlockMatch> {
    p_block.check_unit_range()?;
    Ok(flock_similarity_unchecked(p_block))
}

fn flock_similarity_unchecked(p_block: &SquareMatrix) -> FlockMatch {
    let a = max_assignment_unchecked(p_block);
    FlockMatch {
        similarity: a.objective,
        pairing: a.mapping,
    }
}

/// The size-`k` window around `target` in a list of `list_len`, centered when
/// possible and shifted inward at the ends so it always holds `k` positions.
pub fn query_window(list_len: usize, target: usize, k: usize) -> Result<FlockWindow> {
    check_flock_size(k)?;
    if k > list_len {
        return Err(Error::config(format!(
            "flock size {k} exceeds list length {list_len}"
        )));
    }
    if target >= list_len {
        return Err(Error::config(format!(
            "target {target} outside list of length {list_len}"
        )));
    }
    let start = target.saturating_sub(k / 2).min(list_len - k);
    Ok(FlockWindow {
        start,
        size: k,
        target_offset: target - start,
    })
}

/// Every stride-1 gallery window of size `k`: `cols - k + 1` starts.
pub fn gallery_windows(cols: usize, k: usize) -> impl ExactSizeIterator<Item = Range<usize>> {
    let count = (cols + 1).saturating_sub(k);
    (0..count).map(move |s| s..s + k)
}

/// Flock similarity of `query` against every gallery window of the same size,
/// in order of window start.
pub fn scan_gallery_flocks(p: &SimilarityMatrix, query: &FlockWindow) -> Result<Vec<FlockMatch>> {
    let k = query.size;
    if query.range().end > p.rows() || k == 0 {
        return Err(Error::config(format!(
            "query window {:?} outside {} query rows",
            query.range(),
            p.rows()
        )));
    }
    if k > p.cols() {
        return Err(Error::config(format!(
            "flock size {k} exceeds gallery length {}",
            p.cols()
        )));
    }
    Ok(gallery_windows(p.cols(), k)
        .map(|cols| flock_similarity_unchecked(&p.block(query.range(), cols)))
        .collect())
}

/// The gallery window most similar to `query` (smallest start on ties) and
/// its matching, with `pairing` expressed in absolute gallery indices.
///
/// The returned window's `target_offset` locates the gallery member matched
/// to the query target.
pub fn best_gallery_flock(
    p: &SimilarityMatrix,
    query: &FlockWindow,
) -> Result<(FlockWindow, FlockMatch)> {
    let k = query.size;
    if k > p.cols() || query.range().end > p.rows() {
        return Err(Error::config(format!(
            "flock size {k} does not fit a {}x{} matrix",
            p.rows(),
            p.cols()
        )));
    }
    let mut best: Option<(usize, FlockMatch)> = None;
    for cols in gallery_windows(p.cols(), k) {
        let start = cols.start;
        let m = flock_similarity_unchecked(&p.block(query.range(), cols));
        if best
            .as_ref()
            .is_none_or(|(_, b)| m.similarity > b.similarity)
        {
            best = Some((start, m));
        }
    }
    let (start, mut m) = best.expect("at least one gallery window");
    for j in &mut m.pairing {
        *j += start;
    }
    let window = FlockWindow {
        start,
        size: k,
        target_offset: m.target_match(query) - start,
    };
    Ok((window, m))
}

/// Gallery index assigned to query `target` by matching its centered flock.
pub fn match_target(p: &SimilarityMatrix, target: usize, k: usize) -> Result<usize> {
    let query = query_window(p.rows(), target, k)?;
    if k > p.cols() {
        return Err(Error::config(format!(
            "flock size {k} exceeds gallery length {}",
            p.cols()
        )));
    }
    if k == 1 {
        return Ok(p.row_argmax(target));
    }
    let (_, m) = best_gallery_flock(p, &query)?;
    Ok(m.target_match(&query))
}

/// Flock similarity between every query window and every gallery window of
/// size `k`: a `(rows - k + 1) × (cols - k + 1)` grid. For `k = 1` this is the
/// input matrix itself.
pub fn flock_similarity_grid(p: &SimilarityMatrix, k: usize) -> Result<SimilarityMatrix> {
    use rayon::prelude::*;

    check_flock_size(k)?;
    if k > p.rows() || k > p.cols() {
        return Err(Error::config(format!(
            "flock size {k} does not fit a {}x{} matrix",
            p.rows(),
            p.cols()
        )));
    }
    if k == 1 {
        return Ok(p.clone());
    }
    let rows = p.rows() - k + 1;
    let cols = p.cols() - k + 1;
    let values: Vec<f64> = (0..rows)
        .into_par_iter()
        .flat_map_iter(|a| {
            gallery_windows(p.cols(), k)
                .map(move |c| flock_similarity_unchecked(&p.block(a..a + k, c)).similarity)
        })
        .collect();
    // Means of [0, 1] values can round a hair past 1.
    let values = values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(SimilarityMatrix::from_trusted(rows, cols, values))
}
