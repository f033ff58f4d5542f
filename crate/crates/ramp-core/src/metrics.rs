//! Coverage and entropy estimates over a fixed 2-D occupancy grid.

use crate::error::{Error, Result};

/// Uniform 2-D cell grid over a bounded box. States are binned by their
/// first two coordinates; out-of-range points are clamped to the edge cells.
#[derive(Clone, Debug)]
pub struct CoverageGrid {
    min: [f64; 2],
    max: [f64; 2],
    cells_per_axis: usize,
    visited: Vec<bool>,
    visited_count: usize,
}

impl CoverageGrid {
    pub fn new(min: [f64; 2], max: [f64; 2], cells_per_axis: usize) -> Result<CoverageGrid> {
        if min[0] >= max[0] || min[1] >= max[1] {
            return Err(Error::InvalidArgument("grid bounds must be increasing".into()));
        }
        if cells_per_axis == 0 {
            return Err(Error::InvalidArgument("grid needs at least one cell".into()));
        }
        Ok(CoverageGrid {
            min,
            max,
            cells_per_axis,
            visited: vec![false; cells_per_axis * cells_per_axis],
            visited_count: 0,
        })
    }

    /// Standard maze coverage grid: 50 x 50 cells over `[-1, 1]^2`.
    pub fn maze_default() -> CoverageGrid {
        CoverageGrid::new([-1.0, -1.0], [1.0, 1.0], 50).unwrap()
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn total_cells(&self) -> usize {
        self.visited.len()
    }

    pub fn visited_cells(&self) -> usize {
        self.visited_count
    }

    fn cell_index(&self, p: &[f64]) -> usize {
        let n = self.cells_per_axis;
        let axis = |v: f64, lo: f64, hi: f64| -> usize {
            let t = (v - lo) / (hi - lo) * n as f64;
            (t.floor() as isize).clamp(0, n as isize - 1) as usize
        };
        let cx = axis(p[0], self.min[0], self.max[0]);
        let cy = axis(p[1], self.min[1], self.max[1]);
        cy * n + cx
    }

    /// Marks the cell containing `p` as visited.
    pub fn update(&mut self, p: &[f64]) {
        let idx = self.cell_index(p);
        if !self.visited[idx] {
            self.visited[idx] = true;
            self.visited_count += 1;
        }
    }

    /// Percentage of cells visited, in `[0, 100]`.
    pub fn coverage_percent(&self) -> f64 {
        100.0 * self.visited_count as f64 / self.visited.len() as f64
    }

    /// Plug-in Shannon entropy (nats) of the empirical cell histogram of
    /// `states`. Bounded by `ln(cells)`; an empty input has zero entropy.
    pub fn histogram_entropy<'a, I>(&self, states: I) -> f64
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut counts = vec![0u64; self.visited.len()];
        let mut total = 0u64;
        for s in states {
            counts[self.cell_index(s)] += 1;
            total += 1;
        }
        if total == 0 {
            return 0.0;
        }
        let t = total as f64;
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / t;
                -p * p.ln()
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn test_single_state_zero_entropy_and_one_cell() {
        let mut g = CoverageGrid::new([-1.0, -1.0], [1.0, 1.0], 10).unwrap();
        g.update(&[0.05, 0.05]);
        g.update(&[0.051, 0.049]);
        assert_eq!(g.visited_cells(), 1);
        assert!((g.coverage_percent() - 1.0).abs() < 1e-12);
        let states = [[0.05, 0.05], [0.051, 0.049]];
        let h = g.histogram_entropy(states.iter().map(|s| &s[..]));
        assert_eq!(h, 0.0);
    }

    #[test]
    fn test_full_visitation_is_100_percent() {
        let mut g = CoverageGrid::new([0.0, 0.0], [1.0, 1.0], 4);
        let g = g.as_mut().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                g.update(&[(i as f64 + 0.5) / 4.0, (j as f64 + 0.5) / 4.0]);
            }
        }
        assert_eq!(g.coverage_percent(), 100.0);
    }

    #[test]
    fn test_uniform_samples_approach_log_cells() {
        let g = CoverageGrid::new([-1.0, -1.0], [1.0, 1.0], 10).unwrap();
        let mut r = rng::seeded(4);
        let samples: Vec<[f64; 2]> = (0..100_000)
            .map(|_| [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)])
            .collect();
        let h = g.histogram_entropy(samples.iter().map(|s| &s[..]));
        assert!(
            (h - 100.0f64.ln()).abs() < 0.02,
            "entropy {h} vs {}",
            100.0f64.ln()
        );
    }

    #[test]
    fn test_entropy_never_exceeds_log_cells() {
        let g = CoverageGrid::new([-1.0, -1.0], [1.0, 1.0], 7);
        let g = g.unwrap();
        let mut r = rng::seeded(8);
        for _ in 0..20 {
            let samples: Vec<[f64; 2]> = (0..500)
                .map(|_| [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)])
                .collect();
            let h = g.histogram_entropy(samples.iter().map(|s| &s[..]));
            assert!(h <= (49.0f64).ln() + 1e-12);
            assert!(h >= 0.0);
        }
    }

    #[test]
    fn test_out_of_bounds_clamped_to_edge() {
        let mut g = CoverageGrid::new([-1.0, -1.0], [1.0, 1.0], 10).unwrap();
        g.update(&[5.0, -7.0]);
        assert_eq!(g.visited_cells(), 1);
        g.update(&[1.0, -1.0]);
        // Bottom-right corner cell is the clamp target for both.
        assert_eq!(g.visited_cells(), 1);
    }

    #[test]
    fn test_rejects_degenerate_grids() {
        assert!(CoverageGrid::new([1.0, 0.0], [0.0, 1.0], 10).is_err());
        assert!(CoverageGrid::new([0.0, 0.0], [1.0, 1.0], 0).is_err());
    }
}
