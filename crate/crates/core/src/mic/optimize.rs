//! Column-partition optimization: given a fixed row assignment, finds for
//! every column count the partition of the x-sorted points maximizing the
//! empirical mutual information, by dynamic programming over a candidate
//! boundary set.
//!
//! Candidates are the tie-group edges of the column axis, thinned to
//! near-equal-mass cells when there are more than `clumping_factor *
//! max_cols` of them, plus the equipartition cuts for every column count so
//! the result never falls below the equipartition grid. When every
//! inter-point gap is a candidate the DP is exhaustive over column
//! placements.

use super::grid::equipartition_indices;
use super::{MicConfig, PointSet};

/// Best achievable MI (bits) per column count, for counts `2..=max_cols`,
/// with rows fixed by `row_boundaries` (a value belongs to row `i` when
/// exactly `i` boundaries lie strictly below it).
pub fn optimize_columns(
    points: &PointSet,
    row_boundaries: &[f64],
    max_cols: usize,
    cfg: &MicConfig,
) -> Vec<(usize, f64)> {
    let n_rows = row_boundaries.len() + 1;
    let mut order: Vec<usize> = (0..points.n()).collect();
    let pts = points.points();
    order.sort_by(|&a, &b| pts[a].0.partial_cmp(&pts[b].0).expect("finite coordinates"));

    let sorted_u: Vec<f64> = order.iter().map(|&i| pts[i].0).collect();
    let rows_in_order: Vec<u32> = order
        .iter()
        .map(|&i| row_boundaries.partition_point(|&b| pts[i].1 > b) as u32)
        .collect();
    let mut row_masses = vec![0u64; n_rows];
    for &r in &rows_in_order {
        row_masses[r as usize] += 1;
    }

    let best = best_mi_by_cols(
        &sorted_u,
        &rows_in_order,
        &row_masses,
        max_cols,
        cfg.clumping_factor,
    );
    (2..=max_cols).zip(best).collect()
}

/// Core DP. Returns, for each `l` in `2..=max_cols`, the maximum MI (bits)
/// over partitions of the u-sorted points into at most `l` columns with cuts
/// drawn from the candidate set.
pub(super) fn best_mi_by_cols(
    sorted_u: &[f64],
    rows_in_order: &[u32],
    row_masses: &[u64],
    max_cols: usize,
    clumping_factor: usize,
) -> Vec<f64> {
    let n = sorted_u.len();
    debug_assert_eq!(rows_in_order.len(), n);
    if max_cols < 2 {
        return Vec::new();
    }

    let positions = candidate_positions(sorted_u, max_cols, clumping_factor);
    let m = positions.len() - 1; // number of intervals available

    // Prefix row counts at every candidate position.
    let n_rows = row_masses.len();
    let mut prefix = vec![vec![0u64; n_rows]; positions.len()];
    {
        let mut cum = vec![0u64; n_rows];
        let mut pi = 0;
        for (i, &r) in rows_in_order.iter().enumerate() {
            while positions[pi] == i {
                prefix[pi].copy_from_slice(&cum);
                pi += 1;
            }
            cum[r as usize] += 1;
        }
        while pi < positions.len() {
            prefix[pi].copy_from_slice(&cum);
            pi += 1;
        }
    }

    // k * log2(k) lookup; all cell and marginal counts are integers.
    let tbl: Vec<f64> = (0..=n)
        .map(|k| if k == 0 { 0.0 } else { k as f64 * (k as f64).log2() })
        .collect();

    // Column contribution of the interval (s, t]:
    //   sum_q c_q log2 c_q  -  c log2 c
    let weight = |s: usize, t: usize| -> f64 {
        let mut acc = 0.0;
        let mut total = 0u64;
        for q in 0..n_rows {
            let c = prefix[t][q] - prefix[s][q];
            total += c;
            acc += tbl[c as usize];
        }
        acc - tbl[total as usize]
    };

    let mut w = vec![0.0f64; positions.len() * positions.len()];
    for s in 0..positions.len() {
        for t in (s + 1)..positions.len() {
            w[s * positions.len() + t] = weight(s, t);
        }
    }

    // f[l][t]: best total contribution splitting the prefix ending at
    // position t into exactly l columns.
    let l_max = max_cols.min(m);
    let mut f = vec![vec![f64::NEG_INFINITY; positions.len()]; l_max + 1];
    for t in 1..positions.len() {
        f[1][t] = w[t];
    }
    for l in 2..=l_max {
        for t in l..positions.len() {
            let mut best = f64::NEG_INFINITY;
            for s in (l - 1)..t {
                let cand = f[l - 1][s] + w[s * positions.len() + t];
                if cand > best {
                    best = cand;
                }
            }
            f[l][t] = best;
        }
    }

    // MI from the contribution total: I = (G - sum_q m_q log2 m_q)/n + log2 n.
    let rows_term: f64 = row_masses.iter().map(|&q| tbl[q as usize]).sum();
    let last = positions.len() - 1;
    let to_mi = |g: f64| (g - rows_term + tbl[n]) / n as f64;

    let mut out = Vec::with_capacity(max_cols - 1);
    let mut running = f[1][last];
    for l in 2..=max_cols {
        if l <= l_max && f[l][last] > running {
            running = f[l][last];
        }
        out.push(to_mi(running));
    }
    out
}

/// Candidate cut positions (prefix lengths), always including 0 and n.
fn candidate_positions(sorted_u: &[f64], max_cols: usize, clumping_factor: usize) -> Vec<usize> {
    let n = sorted_u.len();
    let mut tie_ends = Vec::new();
    for i in 1..n {
        if sorted_u[i] != sorted_u[i - 1] {
            tie_ends.push(i);
        }
    }
    tie_ends.push(n);

    let cap = clumping_factor.max(1) * max_cols;
    let clumped = if tie_ends.len() > cap {
        superclump(&tie_ends, n, cap)
    } else {
        tie_ends
    };

    let mut positions = vec![0usize];
    positions.extend(clumped.iter().copied().filter(|&p| p < n));
    for l in 2..=max_cols {
        positions.extend(equipartition_indices(sorted_u, l));
    }
    positions.push(n);
    positions.sort_unstable();
    positions.dedup();
    positions
}

/// Thins tie-group edges to about `cap` near-equal-mass cells, never moving
/// an edge inside a tie run.
fn superclump(tie_ends: &[usize], n: usize, cap: usize) -> Vec<usize> {
    let target = n as f64 / cap as f64;
    let mut out: Vec<usize> = Vec::with_capacity(cap + 1);
    for &e in tie_ends {
        let next_threshold = (out.len() + 1) as f64 * target;
        if (e as f64) + 1e-9 >= next_threshold {
            out.push(e);
        }
    }
    if out.last() != Some(&n) {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::grid::{mutual_information, GridHistogram};
    use super::super::{MicConfig, PointSet};
    use super::*;

    fn point_set(pts: &[(f64, f64)]) -> PointSet {
        PointSet::new(pts.to_vec()).unwrap()
    }

    /// Exhaustive reference: best MI over every way of cutting the x-sorted
    /// points into at most `max_cols` columns at inter-point gaps.
    fn brute_force_best(pts: &[(f64, f64)], row_boundaries: &[f64], max_cols: usize) -> f64 {
        let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut gaps = Vec::new();
        for i in 1..xs.len() {
            if xs[i] != xs[i - 1] {
                gaps.push((xs[i] + xs[i - 1]) / 2.0);
            }
        }
        let mut best: f64 = 0.0;
        let masks = 1u32 << gaps.len();
        for mask in 0..masks {
            let chosen: Vec<f64> = gaps
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &g)| g)
                .collect();
            if chosen.is_empty() || chosen.len() + 1 > max_cols {
                continue;
            }
            if row_boundaries.is_empty() {
                continue;
            }
            let grid =
                GridHistogram::from_points(pts, chosen, row_boundaries.to_vec()).unwrap();
            best = best.max(mutual_information(&grid));
        }
        best
    }

    #[test]
    fn collinear_points_reach_one_bit() {
        let pts = [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0)];
        let ps = point_set(&pts);
        let result = optimize_columns(&ps, &[2.5], 2, &MicConfig::default());
        assert_eq!(result.len(), 1);
        assert_eq!(result[0].0, 2);
        assert!((result[0].1 - 1.0).abs() < 1e-12);
        assert!((result[0].1 - brute_force_best(&pts, &[2.5], 2)).abs() < 1e-12);
    }

    #[test]
    fn independence_square_carries_no_information() {
        let pts = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)];
        let ps = point_set(&pts);
        let result = optimize_columns(&ps, &[0.5], 2, &MicConfig::default());
        assert!(result[0].1.abs() < 1e-12);
        assert!((result[0].1 - brute_force_best(&pts, &[0.5], 2)).abs() < 1e-12);
    }

    #[test]
    fn single_row_carries_no_information() {
        let pts = [(1.0, 1.0), (2.0, 5.0), (3.0, 2.0), (4.0, 8.0)];
        let ps = point_set(&pts);
        // A boundary below every y merges all points into one row.
        let result = optimize_columns(&ps, &[-100.0], 3, &MicConfig::default());
        for (_, mi) in result {
            assert!(mi.abs() < 1e-12);
        }
    }

    #[test]
    fn dp_matches_brute_force_on_random_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(4..12);
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    (
                        rng.gen_range(0..8) as f64,
                        rng.gen_range(0..8) as f64,
                    )
                })
                .collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            if ys.iter().all(|&y| y == ys[0]) || pts.iter().all(|p| p.0 == pts[0].0) {
                continue;
            }
            let rows = super::super::grid::equipartition_axis(&ys, 2);
            if rows.is_empty() {
                continue;
            }
            for max_cols in 2..=4usize {
                let ps = point_set(&pts);
                let got = optimize_columns(&ps, &rows, max_cols, &MicConfig::default());
                let want = brute_force_best(&pts, &rows, max_cols);
                let got_best = got.last().unwrap().1;
                assert!(
                    (got_best - want).abs() < 1e-10,
                    "n={n} cols={max_cols}: dp {got_best} vs brute {want} ({pts:?})"
                );
            }
        }
    }

    #[test]
    fn result_not_below_equipartition_grid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(20..200);
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
                .collect();
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let rows = super::super::grid::equipartition_axis(&ys, 3);
            let ps = point_set(&pts);
            for l in 2..=6usize {
                let dp_best = optimize_columns(&ps, &rows, l, &MicConfig::default())
                    .last()
                    .unwrap()
                    .1;
                let equip_cols = super::super::grid::equipartition_axis(&xs, l);
                if equip_cols.is_empty() {
                    continue;
                }
                let grid =
                    GridHistogram::from_points(&pts, equip_cols, rows.clone()).unwrap();
                let equip_mi = mutual_information(&grid);
                assert!(
                    dp_best >= equip_mi - 1e-10,
                    "dp {dp_best} below equipartition {equip_mi}"
                );
            }
        }
    }
}
