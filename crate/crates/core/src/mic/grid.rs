//! Grid primitives: axis equipartition with tie handling, cell histograms
//! and the empirical mutual information of a grid.

use super::MicError;

/// A 2-D cell histogram over axis boundary lists. Boundaries are exclusive
/// upper edges: a value equal to a boundary stays in the lower cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridHistogram {
    x_boundaries: Vec<f64>,
    y_boundaries: Vec<f64>,
    /// counts[col][row]
    counts: Vec<Vec<u64>>,
}

impl GridHistogram {
    /// Bins points into the grid spanned by the boundary lists. Each list
    /// must be ascending and non-empty (so the grid is at least 2x2).
    pub fn from_points(
        points: &[(f64, f64)],
        x_boundaries: Vec<f64>,
        y_boundaries: Vec<f64>,
    ) -> Result<Self, MicError> {
        if x_boundaries.is_empty() || y_boundaries.is_empty() {
            return Err(MicError::BadGrid("grid must have at least 2 columns and 2 rows".into()));
        }
        for b in [&x_boundaries, &y_boundaries] {
            if b.windows(2).any(|w| w[0] >= w[1]) {
                return Err(MicError::BadGrid("boundaries must be strictly ascending".into()));
            }
        }
        let cols = x_boundaries.len() + 1;
        let rows = y_boundaries.len() + 1;
        let mut counts = vec![vec![0u64; rows]; cols];
        for &(x, y) in points {
            let ci = x_boundaries.partition_point(|&b| x > b);
            let ri = y_boundaries.partition_point(|&b| y > b);
            counts[ci][ri] += 1;
        }
        Ok(GridHistogram {
            x_boundaries,
            y_boundaries,
            counts,
        })
    }

    /// Builds a histogram directly from a count matrix (counts[col][row]).
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, MicError> {
        if counts.len() < 2 || counts.iter().any(|r| r.len() != counts[0].len()) || counts[0].len() < 2
        {
            return Err(MicError::BadGrid("count matrix must be at least 2x2 and rectangular".into()));
        }
        // Nominal unit-spaced boundaries; only the counts matter for MI.
        let x_boundaries = (1..counts.len()).map(|i| i as f64).collect();
        let y_boundaries = (1..counts[0].len()).map(|i| i as f64).collect();
        Ok(GridHistogram {
            x_boundaries,
            y_boundaries,
            counts,
        })
    }

    pub fn cols(&self) -> usize {
        self.counts.len()
    }

    pub fn rows(&self) -> usize {
        self.counts[0].len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| c.iter().sum::<u64>()).sum()
    }

    pub fn x_boundaries(&self) -> &[f64] {
        &self.x_boundaries
    }

    pub fn y_boundaries(&self) -> &[f64] {
        &self.y_boundaries
    }
}

/// Empirical mutual information of the grid's cell frequencies, in bits.
/// Empty cells contribute nothing (0 log 0 = 0).
pub fn mutual_information(grid: &GridHistogram) -> f64 {
    let n = grid.total();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let cols = grid.cols();
    let rows = grid.rows();
    let mut col_sums = vec![0u64; cols];
    let mut row_sums = vec![0u64; rows];
    for (ci, col) in grid.counts.iter().enumerate() {
        for (ri, &c) in col.iter().enumerate() {
            col_sums[ci] += c;
            row_sums[ri] += c;
        }
    }

    let mut info = 0.0;
    for (ci, col) in grid.counts.iter().enumerate() {
        for (ri, &c) in col.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let p = c as f64 / nf;
            let ratio = (c as f64 * nf) / (col_sums[ci] as f64 * row_sums[ri] as f64);
            info += p * ratio.log2();
        }
    }
    info
}

/// Splits the values into at most `k` contiguous groups of near-equal mass.
/// Equal values are never separated, so fewer groups may come back. Returns
/// the internal boundaries as midpoints between adjacent group edge values.
pub fn equipartition_axis(values: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    equipartition_indices(&sorted, k)
        .into_iter()
        .map(|cut| (sorted[cut - 1] + sorted[cut]) / 2.0)
        .collect()
}

/// Greedy near-equal-mass grouping over sorted values: a group closes when
/// taking the next run of equal values would move its size further from the
/// per-group target, with the target re-estimated from what remains. Returns
/// cut positions (indices into the sorted slice).
pub(super) fn equipartition_indices(sorted: &[f64], k: usize) -> Vec<usize> {
    let n = sorted.len();
    let mut cuts = Vec::new();
    if n == 0 || k < 2 {
        return cuts;
    }

    let mut desired = n as f64 / k as f64;
    let mut in_group = 0usize;
    let mut groups_started = 1usize;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        let run = j - i;
        if in_group > 0 && groups_started < k {
            let with_run = (in_group as f64 + run as f64 - desired).abs();
            let without = (in_group as f64 - desired).abs();
            if with_run >= without {
                cuts.push(i);
                groups_started += 1;
                in_group = 0;
                desired = (n - i) as f64 / (k - groups_started + 1) as f64;
            }
        }
        in_group += run;
        i = j;
    }
    cuts
}
