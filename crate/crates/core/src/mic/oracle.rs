//! Exhaustive small-sample reference for the MIC estimator.
//!
//! Enumerates every tie-respecting placement of row and column boundaries,
//! with both axes free simultaneously, and evaluates each grid with the
//! direct cell-frequency mutual information. Combinatorial cost caps the
//! sample size at [`super::ORACLE_MAX_POINTS`]. Verification use only.

use std::collections::BTreeMap;

use super::grid::{mutual_information, GridHistogram};
use super::{
    grid_limit, shapes_in_budget, CharacteristicMatrix, MicConfig, MicError, MicResult, PointSet,
    ORACLE_MAX_POINTS,
};

/// True maximum of the normalized MI over all boundary placements, for every
/// shape in the budget.
pub fn mic_exhaustive_oracle(points: &PointSet, cfg: &MicConfig) -> Result<MicResult, MicError> {
    cfg.validate()?;
    let n = points.n();
    if n > ORACLE_MAX_POINTS {
        return Err(MicError::TooLarge {
            n,
            max: ORACLE_MAX_POINTS,
        });
    }
    if points.points().iter().all(|p| p.0 == points.points()[0].0)
        || points.points().iter().all(|p| p.1 == points.points()[0].1)
    {
        return Ok(MicResult {
            degenerate: true,
            ..MicResult::degenerate(n, cfg)
        });
    }

    let budget = grid_limit(n, cfg);
    let col_group = tie_group_index(&points.xs());
    let row_group = tie_group_index(&points.ys());
    let n_col_groups = col_group.iter().max().unwrap() + 1;
    let n_row_groups = row_group.iter().max().unwrap() + 1;

    // exact[(a, b)] = best raw MI using exactly a columns and b rows.
    let mut exact: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let max_cols = (budget / 2).min(n_col_groups);
    for a in 2..=max_cols {
        let max_rows = (budget / a).min(n_row_groups);
        if max_rows < 2 {
            continue;
        }
        for_each_combination(n_col_groups - 1, a - 1, &mut |col_cuts| {
            for b in 2..=max_rows {
                for_each_combination(n_row_groups - 1, b - 1, &mut |row_cuts| {
                    let mi = grid_mi(&col_group, &row_group, col_cuts, row_cuts, a, b);
                    let slot = exact.entry((a, b)).or_insert(f64::NEG_INFINITY);
                    if mi > *slot {
                        *slot = mi;
                    }
                });
            }
        });
    }

    // A shape admits any placement with at most that many occupied columns
    // and rows, so take the running 2-D maximum of the exact table.
    let mut matrix = CharacteristicMatrix::default();
    let mut running: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (x, y) in shapes_in_budget(budget) {
        let mut best = exact.get(&(x, y)).copied().unwrap_or(0.0);
        if let Some(&left) = running.get(&(x - 1, y)) {
            best = best.max(left);
        }
        if let Some(&down) = running.get(&(x, y - 1)) {
            best = best.max(down);
        }
        running.insert((x, y), best);
        let m = best / (x.min(y) as f64).log2();
        matrix.insert(x, y, m.clamp(0.0, 1.0));
    }

    Ok(MicResult::from_matrix(matrix, n, cfg.alpha))
}

/// Per-point index of its run of equal values in sorted order.
fn tie_group_index(values: &[f64]) -> Vec<usize> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    distinct.dedup();
    values
        .iter()
        .map(|v| distinct.partition_point(|d| d < v))
        .collect()
}

/// MI of the grid placing column cuts before the listed groups (likewise for
/// rows). Cut value `c` separates group `c-1` from group `c`.
fn grid_mi(
    col_group: &[usize],
    row_group: &[usize],
    col_cuts: &[usize],
    row_cuts: &[usize],
    a: usize,
    b: usize,
) -> f64 {
    let mut counts = vec![vec![0u64; b]; a];
    for (&cg, &rg) in col_group.iter().zip(row_group) {
        let ci = col_cuts.iter().filter(|&&c| c <= cg).count();
        let ri = row_cuts.iter().filter(|&&c| c <= rg).count();
        counts[ci][ri] += 1;
    }
    let grid = GridHistogram::from_counts(counts).expect("a, b >= 2");
    mutual_information(&grid)
}

/// Calls `f` with every ascending k-subset of `1..=pool`.
fn for_each_combination(pool: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn recurse(
        pool: usize,
        k: usize,
        start: usize,
        buf: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if buf.len() == k {
            f(buf);
            return;
        }
        let remaining = k - buf.len();
        for next in start..=(pool + 1 - remaining) {
            buf.push(next);
            recurse(pool, k, next + 1, buf, f);
            buf.pop();
        }
    }
    if k > pool {
        return;
    }
    let mut buf = Vec::with_capacity(k);
    recurse(pool, k, 1, &mut buf, f);
}
