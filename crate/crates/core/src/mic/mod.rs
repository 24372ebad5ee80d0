//! Maximal information coefficient (MIC) between two real-valued samples.
//!
//! For every grid shape (x columns, y rows) with `x*y` inside a sample-size
//! budget, the estimator finds a high-MI placement of the grid, normalizes
//! by `log2(min(x, y))`, and takes the maximum over shapes. Placement search
//! equipartitions one axis and optimizes the other by dynamic programming,
//! in both orientations, so the statistic is symmetric in its arguments and
//! depends only on value order (hence exactly invariant under strictly
//! increasing transforms of either axis).
//!
//! [`mic_exhaustive_oracle`] computes the true maximum over all tie-respecting
//! boundary placements for small samples; it exists to verify the estimator
//! in tests and shares none of its search machinery.

mod grid;
mod optimize;
mod oracle;

use std::collections::BTreeMap;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

pub use grid::{equipartition_axis, mutual_information, GridHistogram};
pub use optimize::optimize_columns;
pub use oracle::mic_exhaustive_oracle;

/// Largest sample the exhaustive oracle accepts.
pub const ORACLE_MAX_POINTS: usize = 14;

#[derive(Debug, Error)]
pub enum MicError {
    #[error("input lengths differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least 4 points, got {n}")]
    TooFewPoints { n: usize },
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("an axis is constant; no grid carries information")]
    DegenerateAxis,
    #[error("exhaustive search supports at most {max} points, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("bad config: {0}")]
    BadConfig(String),
}

/// A finite sample of (x, y) pairs, at least 4 of them.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<(f64, f64)>,
}

impl PointSet {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, MicError> {
        if points.len() < 4 {
            return Err(MicError::TooFewPoints { n: points.len() });
        }
        if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(MicError::NonFinite);
        }
        Ok(PointSet { points })
    }

    pub fn from_series(xs: &[f64], ys: &[f64]) -> Result<Self, MicError> {
        if xs.len() != ys.len() {
            return Err(MicError::LengthMismatch {
                x: xs.len(),
                y: ys.len(),
            });
        }
        PointSet::new(xs.iter().copied().zip(ys.iter().copied()).collect())
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    fn x_constant(&self) -> bool {
        self.points.iter().all(|p| p.0 == self.points[0].0)
    }

    fn y_constant(&self) -> bool {
        self.points.iter().all(|p| p.1 == self.points[0].1)
    }
}

/// Estimator knobs: the grid budget exponent (`B = max(floor(n^alpha),
/// min_b)`) and the candidate-thinning factor of the column search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicConfig {
    pub alpha: f64,
    pub min_b: usize,
    pub clumping_factor: usize,
}

impl Default for MicConfig {
    fn default() -> Self {
        MicConfig {
            alpha: 0.6,
            min_b: 4,
            clumping_factor: 15,
        }
    }
}

impl MicConfig {
    pub fn validate(&self) -> Result<(), MicError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(MicError::BadConfig(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.min_b < 4 {
            return Err(MicError::BadConfig(format!(
                "min_b must be at least 4, got {}",
                self.min_b
            )));
        }
        if self.clumping_factor < 1 {
            return Err(MicError::BadConfig("clumping_factor must be at least 1".into()));
        }
        Ok(())
    }
}

/// Grid-size budget: shapes (x, y) with `x*y <= grid_limit(n)` are searched.
/// The floor of `n^alpha`, clamped below so a 2x2 grid always exists.
pub fn grid_limit(n: usize, cfg: &MicConfig) -> usize {
    let raw = (n as f64).powf(cfg.alpha).floor() as usize;
    raw.max(cfg.min_b)
}

/// Normalized-MI entries per grid shape, keyed (columns, rows).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CharacteristicMatrix {
    entries: BTreeMap<(usize, usize), f64>,
}

impl CharacteristicMatrix {
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.entries.get(&(x, y)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The maximum entry; ties resolve to the lexicographically smallest
    /// (x, y).
    pub fn max_entry(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (&(x, y), &m) in &self.entries {
            match best {
                Some((_, _, bm)) if m <= bm => {}
                _ => best = Some((x, y, m)),
            }
        }
        best
    }

    fn insert(&mut self, x: usize, y: usize, m: f64) {
        self.entries.insert((x, y), m);
    }
}

impl Serialize for CharacteristicMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.entries.len()))?;
        for (&(x, y), &m) in &self.entries {
            seq.serialize_element(&(x, y, m))?;
        }
        seq.end()
    }
}

/// The MIC value, the shape achieving it, and the full matrix it maximizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicResult {
    pub mic: f64,
    pub best_x: usize,
    pub best_y: usize,
    pub n: usize,
    pub alpha: f64,
    pub degenerate: bool,
    pub matrix: CharacteristicMatrix,
}

impl MicResult {
    fn from_matrix(matrix: CharacteristicMatrix, n: usize, alpha: f64) -> Self {
        let (best_x, best_y, mic) = matrix.max_entry().unwrap_or((2, 2, 0.0));
        MicResult {
            mic,
            best_x,
            best_y,
            n,
            alpha,
            degenerate: false,
            matrix,
        }
    }

    fn degenerate(n: usize, cfg: &MicConfig) -> Self {
        let budget = grid_limit(n, cfg);
        let mut matrix = CharacteristicMatrix::default();
        for (x, y) in shapes_in_budget(budget) {
            matrix.insert(x, y, 0.0);
        }
        MicResult {
            mic: 0.0,
            best_x: 2,
            best_y: 2,
            n,
            alpha: cfg.alpha,
            degenerate: true,
            matrix,
        }
    }
}

pub(crate) fn shapes_in_budget(budget: usize) -> Vec<(usize, usize)> {
    let mut shapes = Vec::new();
    let mut x = 2;
    while x * 2 <= budget {
        let mut y = 2;
        while x * y <= budget {
            shapes.push((x, y));
            y += 1;
        }
        x += 1;
    }
    shapes
}

/// Builds the full characteristic matrix: for every shape in budget, the
/// best found MI over grid placements, normalized by `log2(min(x, y))` and
/// clamped into [0, 1]. Fails with [`MicError::DegenerateAxis`] when either
/// coordinate is constant.
pub fn characteristic_matrix(
    points: &PointSet,
    cfg: &MicConfig,
) -> Result<CharacteristicMatrix, MicError> {
    cfg.validate()?;
    if points.x_constant() || points.y_constant() {
        return Err(MicError::DegenerateAxis);
    }
    let budget = grid_limit(points.n(), cfg);

    let xs = points.xs();
    let ys = points.ys();
    // (u columns, v rows) -> raw best MI, for each orientation.
    let cols_on_x = half_matrix(&xs, &ys, budget, cfg);
    let cols_on_y = half_matrix(&ys, &xs, budget, cfg);

    let mut matrix = CharacteristicMatrix::default();
    for (x, y) in shapes_in_budget(budget) {
        let a = cols_on_x.get(&(x, y)).copied().unwrap_or(0.0);
        let b = cols_on_y.get(&(y, x)).copied().unwrap_or(0.0);
        let raw = a.max(b);
        let m = raw / (x.min(y) as f64).log2();
        debug_assert!(
            (-1e-12..=1.0 + 1e-12).contains(&m),
            "normalized MI {m} escapes [0,1] at ({x},{y})"
        );
        matrix.insert(x, y, m.clamp(0.0, 1.0));
    }
    Ok(matrix)
}

/// One orientation of the search: equipartition the v axis into q rows
/// (q = 2..), and for each q optimize the u-axis columns. Keys are
/// (u columns, v rows); values are raw MI in bits.
fn half_matrix(
    u: &[f64],
    v: &[f64],
    budget: usize,
    cfg: &MicConfig,
) -> BTreeMap<(usize, usize), f64> {
    let n = u.len();
    let mut order_by_v: Vec<usize> = (0..n).collect();
    order_by_v.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("finite coordinates"));
    let v_sorted: Vec<f64> = order_by_v.iter().map(|&i| v[i]).collect();

    let mut order_by_u: Vec<usize> = (0..n).collect();
    order_by_u.sort_by(|&a, &b| u[a].partial_cmp(&u[b]).expect("finite coordinates"));
    let u_sorted: Vec<f64> = order_by_u.iter().map(|&i| u[i]).collect();

    let mut out = BTreeMap::new();
    let mut q = 2;
    while q * 2 <= budget {
        let max_cols = budget / q;
        let cuts = grid::equipartition_indices(&v_sorted, q);

        // Row id per point, from its rank on the v axis.
        let mut row_of = vec![0u32; n];
        let mut row = 0u32;
        let mut next_cut = 0;
        for (rank, &point) in order_by_v.iter().enumerate() {
            while next_cut < cuts.len() && cuts[next_cut] == rank {
                row += 1;
                next_cut += 1;
            }
            row_of[point] = row;
        }
        let n_rows = row as usize + 1;
        let mut row_masses = vec![0u64; n_rows];
        for &r in &row_of {
            row_masses[r as usize] += 1;
        }

        let rows_in_u_order: Vec<u32> = order_by_u.iter().map(|&i| row_of[i]).collect();
        let best = optimize::best_mi_by_cols(
            &u_sorted,
            &rows_in_u_order,
            &row_masses,
            max_cols,
            cfg.clumping_factor,
        );
        for (l, mi) in (2..=max_cols).zip(best) {
            out.insert((l, q), mi);
        }
        q += 1;
    }
    out
}

/// MIC of two equal-length samples: the maximum characteristic-matrix entry.
/// A constant axis yields 0 with the `degenerate` flag set.
pub fn mic(x_series: &[f64], y_series: &[f64], cfg: &MicConfig) -> Result<MicResult, MicError> {
    cfg.validate()?;
    let points = PointSet::from_series(x_series, y_series)?;
    match characteristic_matrix(&points, cfg) {
        Ok(matrix) => Ok(MicResult::from_matrix(matrix, points.n(), cfg.alpha)),
        Err(MicError::DegenerateAxis) => Ok(MicResult::degenerate(points.n(), cfg)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_follows_the_power_law() {
        let cfg = MicConfig::default();
        assert_eq!(grid_limit(100, &cfg), 15);
        assert_eq!(grid_limit(487, &cfg), 40);
        // floor(4^0.6) = 2 clamps up to min_b.
        assert_eq!(grid_limit(4, &cfg), 4);
    }

    #[test]
    fn collinear_points_have_unit_matrix_corner() {
        let pts = PointSet::new(vec![(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0)]).unwrap();
        let m = characteristic_matrix(&pts, &MicConfig::default()).unwrap();
        assert_eq!(m.get(2, 2), Some(1.0));
    }

    #[test]
    fn independence_square_matrix_is_zero() {
        let pts =
            PointSet::new(vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]).unwrap();
        let m = characteristic_matrix(&pts, &MicConfig::default()).unwrap();
        for (_, v) in m.iter() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn identity_line_scores_one() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let result = mic(&xs, &xs, &MicConfig::default()).unwrap();
        assert!((result.mic - 1.0).abs() < 1e-9);
        assert_eq!((result.best_x, result.best_y), (2, 2));
        assert!(!result.degenerate);
    }

    #[test]
    fn constant_axis_flags_degenerate() {
        let xs = vec![1.0; 8];
        let ys: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let result = mic(&xs, &ys, &MicConfig::default()).unwrap();
        assert_eq!(result.mic, 0.0);
        assert!(result.degenerate);
        assert!(!result.matrix.is_empty());
        assert!(matches!(
            characteristic_matrix(&PointSet::from_series(&xs, &ys).unwrap(), &MicConfig::default()),
            Err(MicError::DegenerateAxis)
        ));
    }

    #[test]
    fn length_mismatch_and_short_inputs_error() {
        let cfg = MicConfig::default();
        assert!(matches!(
            mic(&[1.0, 2.0], &[1.0, 2.0, 3.0], &cfg),
            Err(MicError::LengthMismatch { .. })
        ));
        assert!(matches!(
            mic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &cfg),
            Err(MicError::TooFewPoints { n: 3 })
        ));
    }

    #[test]
    fn matrix_serializes_as_triples() {
        let pts = PointSet::new(vec![(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0)]).unwrap();
        let result = mic(&pts.xs(), &pts.ys(), &MicConfig::default()).unwrap();
        let json = serde_json::to_value(&result).unwrap();
        assert_eq!(json["n"], 4);
        assert_eq!(json["best_x"], 2);
        let matrix = json["matrix"].as_array().unwrap();
        assert_eq!(matrix[0].as_array().unwrap().len(), 3);
        assert_eq!(matrix[0][0], 2);
        assert_eq!(matrix[0][1], 2);
    }

    #[test]
    fn result_matrix_entries_bounded_on_random_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let n = rng.gen_range(4..40);
            let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let ys: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let result = mic(&xs, &ys, &MicConfig::default()).unwrap();
            for (_, m) in result.matrix.iter() {
                assert!((0.0..=1.0).contains(&m));
            }
            assert!((0.0..=1.0).contains(&result.mic));
        }
    }
}
