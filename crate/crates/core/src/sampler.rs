//! Stochastic dot placement over a [`ProbGrid`].
//!
//! Each draw picks a black cell by its current probability, subtracts the
//! placed dot's share 1/N' from it and spreads that mass equally over the
//! remaining black cells. A cell that reaches zero turns white; once a
//! single black cell is left, every remaining dot lands there.
//!
//! Cell selection is inverse-CDF lookup over a Fenwick prefix structure,
//! O(log M) per draw. The equal redistribution is folded into a global
//! additive offset so it costs O(1): the effective probability of a black
//! cell is `raw[cell] + offset`.
//!
//! All randomness comes from ChaCha8 keyed by the caller's seed, so runs
//! are bit-reproducible across platforms.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pgrid::{AnalyticPdf, ProbGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub cell: usize,
    /// Sub-cell offset in [0, 1)^2.
    pub offset: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub n_total: usize,
    pub seed: u64,
    pub placements: Vec<Placement>,
}

impl SampleRun {
    /// Continuous grid coordinates of every placed dot.
    pub fn points(&self, grid_width: usize) -> Vec<(f64, f64)> {
        self.placements
            .iter()
            .map(|p| {
                let x = (p.cell % grid_width) as f64 + p.offset.0;
                let y = (p.cell / grid_width) as f64 + p.offset.1;
                (x, y)
            })
            .collect()
    }

    /// Plain-text export: a header line with seed and N, then one
    /// "x y" pair per line.
    pub fn write_text<W: Write>(&self, grid_width: usize, mut out: W) -> Result<()> {
        writeln!(out, "# seed {} N {}", self.seed, self.n_total)?;
        for (x, y) in self.points(grid_width) {
            writeln!(out, "{x} {y}")?;
        }
        Ok(())
    }
}

/// Intra-cell placement of a dot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubCell {
    /// Dot at the cell center (the default; coarse grids then show the
    /// regular grid pattern of the cells themselves).
    Center,
    /// Uniform jitter inside the cell.
    Jitter,
}

impl Default for SubCell {
    fn default() -> Self {
        SubCell::Center
    }
}

struct Fenwick {
    raw: Vec<f64>,
    cnt: Vec<i64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            raw: vec![0.0; n + 1],
            cnt: vec![0; n + 1],
        }
    }

    fn len(&self) -> usize {
        self.raw.len() - 1
    }

    fn add(&mut self, mut i: usize, raw: f64, cnt: i64) {
        i += 1;
        while i < self.raw.len() {
            self.raw[i] += raw;
            self.cnt[i] += cnt;
            i += i & i.wrapping_neg();
        }
    }

    fn totals(&self) -> (f64, i64) {
        let mut i = self.len();
        let mut raw = 0.0;
        let mut cnt = 0;
        while i > 0 {
            raw += self.raw[i];
            cnt += self.cnt[i];
            i -= i & i.wrapping_neg();
        }
        (raw, cnt)
    }

    /// Largest index whose effective prefix sum is <= target, where the
    /// effective value of cell i is raw_i + offset * cnt_i. Returns the
    /// 0-based cell the target falls into.
    fn select(&self, target: f64, offset: f64) -> usize {
        let n = self.len();
        let mut bit = usize::MAX >> (n.leading_zeros());
        bit = (bit + 1) >> 1;
        if bit == 0 {
            bit = 1;
        }
        let mut pos = 0usize;
        let mut rem = target;
        while bit > 0 {
            let next = pos + bit;
            if next <= n {
                let v = self.raw[next] + offset * self.cnt[next] as f64;
                if rem >= v {
                    pos = next;
                    rem -= v;
                }
            }
            bit >>= 1;
        }
        pos.min(n - 1)
    }
}

/// Incremental sampler exposing the per-dot probability state, so tests
/// can audit mass conservation after every iteration.
pub struct DpfSampler {
    n_total: usize,
    placed: usize,
    seed: u64,
    black: Vec<bool>,
    black_count: usize,
    last_black: usize,
    offset: f64,
    raw_vals: Vec<f64>,
    tree: Fenwick,
    rng: ChaCha8Rng,
    subcell: SubCell,
}

impl DpfSampler {
    pub fn new(grid: &ProbGrid, n: usize, seed: u64, subcell: SubCell) -> Result<Self> {
        assert!(n >= 1, "n must be >= 1");
        let cells = grid.probs().len();
        let mut tree = Fenwick::new(cells);
        let mut black = vec![false; cells];
        let mut black_count = 0;
        let mut last_black = 0;
        let raw_vals = grid.probs().to_vec();
        for (i, &p) in grid.probs().iter().enumerate() {
            if p > 0.0 {
                tree.add(i, p, 1);
                black[i] = true;
                black_count += 1;
                last_black = i;
            }
        }
        if black_count == 0 {
            return Err(Error::EmptyDistribution);
        }
        Ok(DpfSampler {
            n_total: n,
            placed: 0,
            seed,
            black,
            black_count,
            last_black,
            offset: 0.0,
            raw_vals,
            tree,
            rng: ChaCha8Rng::seed_from_u64(seed),
            subcell,
        })
    }

    pub fn remaining_black(&self) -> usize {
        self.black_count
    }

    pub fn placed(&self) -> usize {
        self.placed
    }

    /// Sum of all current cell probabilities; stays at 1 (within fp
    /// rounding) until the final cell absorbs the rest.
    pub fn prob_sum(&self) -> f64 {
        let (raw, cnt) = self.tree.totals();
        raw + self.offset * cnt as f64
    }

    /// Current probability of a cell.
    pub fn prob(&self, cell: usize) -> f64 {
        if self.black[cell] {
            self.raw_vals[cell] + self.offset
        } else {
            0.0
        }
    }

    pub fn step(&mut self) -> Option<Placement> {
        if self.placed == self.n_total {
            return None;
        }
        let n_rem = self.n_total - self.placed;
        let cell = if self.black_count == 1 {
            self.last_black
        } else {
            let total = self.prob_sum();
            let target = self.rng.random_range(0.0..total);
            let mut c = self.tree.select(target, self.offset);
            if !self.black[c] {
                // fp slack put the target on a removed cell; take the
                // next black one.
                c = (0..self.black.len())
                    .map(|i| (c + i) % self.black.len())
                    .find(|&i| self.black[i])
                    .expect("at least one black cell");
            }
            c
        };

        if self.black_count > 1 {
            let p = self.raw_vals[cell] + self.offset;
            let a = (1.0 / n_rem as f64).min(p);
            let share = a / (self.black_count - 1) as f64;
            self.offset += share;
            let delta = -(a + share);
            self.tree.add(cell, delta, 0);
            self.raw_vals[cell] += delta;
            if a >= p {
                // Cell reached zero: turns white.
                self.tree.add(cell, -self.raw_vals[cell], -1);
                self.raw_vals[cell] = 0.0;
                self.black[cell] = false;
                self.black_count -= 1;
                if self.black_count == 1 {
                    self.last_black =
                        self.black.iter().position(|&b| b).expect("one black cell");
                }
            }
        }

        let offset = match self.subcell {
            SubCell::Center => (0.5, 0.5),
            SubCell::Jitter => (self.rng.random(), self.rng.random()),
        };
        self.placed += 1;
        Some(Placement { cell, offset })
    }

    pub fn finish(mut self) -> SampleRun {
        let mut placements = Vec::with_capacity(self.n_total - self.placed);
        while let Some(p) = self.step() {
            placements.push(p);
        }
        SampleRun {
            n_total: self.n_total,
            seed: self.seed,
            placements,
        }
    }
}

/// Runs the full placement loop with dots at cell centers.
pub fn sample_dpf(grid: &ProbGrid, n: usize, seed: u64) -> Result<SampleRun> {
    sample_dpf_opts(grid, n, seed, SubCell::Center)
}

pub fn sample_dpf_opts(
    grid: &ProbGrid,
    n: usize,
    seed: u64,
    subcell: SubCell,
) -> Result<SampleRun> {
    Ok(DpfSampler::new(grid, n, seed, subcell)?.finish())
}

/// Direct Monte Carlo sampling of an analytic density.
pub fn sample_pdf(pdf: &AnalyticPdf, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    assert!(n >= 1, "n must be >= 1");
    pdf.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| pdf.sample_one(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgrid::{dpf_from_points, AnalyticPdf, InitPolicy, Rect};

    fn four_cell_grid() -> ProbGrid {
        dpf_from_points(&[(0, 0), (1, 0), (0, 1), (1, 1)], 2, 2, InitPolicy::Uniform).unwrap()
    }

    #[test]
    fn single_black_cell_takes_all_dots() {
        let grid = dpf_from_points(&[(1, 1)], 3, 3, InitPolicy::Uniform).unwrap();
        let run = sample_dpf(&grid, 5, 0).unwrap();
        assert_eq!(run.placements.len(), 5);
        assert!(run.placements.iter().all(|p| p.cell == 4));
    }

    #[test]
    fn mass_conserved_after_first_dot() {
        let grid = four_cell_grid();
        let mut s = DpfSampler::new(&grid, 4, 7, SubCell::Center).unwrap();
        s.step().unwrap();
        assert!((s.prob_sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mass_conserved_every_iteration() {
        let grid = dpf_from_points(
            &[(0, 0), (3, 2), (5, 5), (1, 4), (7, 7), (6, 1)],
            8,
            8,
            InitPolicy::Uniform,
        )
        .unwrap();
        let mut s = DpfSampler::new(&grid, 50, 123, SubCell::Center).unwrap();
        while s.step().is_some() {
            if s.remaining_black() > 1 {
                assert!((s.prob_sum() - 1.0).abs() < 1e-9, "sum {}", s.prob_sum());
            }
        }
    }

    #[test]
    fn dots_only_in_initially_black_cells() {
        let grid = dpf_from_points(&[(0, 0), (2, 2), (4, 4)], 5, 5, InitPolicy::Uniform).unwrap();
        let run = sample_dpf(&grid, 200, 5).unwrap();
        for p in &run.placements {
            assert!(grid.is_black(p.cell));
        }
    }

    #[test]
    fn empty_grid_is_an_error() {
        let grid = ProbGrid::new_white(4, 4);
        assert!(matches!(
            sample_dpf(&grid, 1, 0),
            Err(Error::EmptyDistribution)
        ));
    }

    #[test]
    fn per_cell_mean_count_matches_uniform_expectation() {
        // 4 cells at 0.25, n = 4: over many runs each cell averages 1 dot.
        let grid = four_cell_grid();
        let runs = 100_000;
        let mut counts = [0u64; 4];
        for seed in 0..runs {
            let run = sample_dpf(&grid, 4, seed).unwrap();
            for p in &run.placements {
                counts[p.cell] += 1;
            }
        }
        for &c in &counts {
            let mean = c as f64 / runs as f64;
            assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let grid = four_cell_grid();
        let a = sample_dpf_opts(&grid, 16, 99, SubCell::Jitter).unwrap();
        let b = sample_dpf_opts(&grid, 16, 99, SubCell::Jitter).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn terminates_in_exactly_n_iterations() {
        let grid = four_cell_grid();
        let run = sample_dpf(&grid, 1000, 3).unwrap();
        assert_eq!(run.placements.len(), 1000);
    }

    #[test]
    fn sample_pdf_uniform_moments() {
        let pdf = AnalyticPdf::Uniform2d {
            domain: Rect::new(0.0, 0.0, 1.0, 1.0),
        };
        let pts = sample_pdf(&pdf, 100_000, 11).unwrap();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        assert!((mx - 0.5).abs() < 0.01);
        assert!((my - 0.5).abs() < 0.01);
    }

    #[test]
    fn sample_pdf_normal_covariance() {
        let sigma = 2.0;
        let pdf = AnalyticPdf::Normal2d {
            mean: (0.0, 0.0),
            sigma,
            domain: Rect::new(-20.0, -20.0, 20.0, 20.0),
        };
        let pts = sample_pdf(&pdf, 200_000, 21).unwrap();
        let n = pts.len() as f64;
        let var_x = pts.iter().map(|p| p.0 * p.0).sum::<f64>() / n;
        let var_y = pts.iter().map(|p| p.1 * p.1).sum::<f64>() / n;
        let cov = pts.iter().map(|p| p.0 * p.1).sum::<f64>() / n;
        assert!((var_x - sigma * sigma).abs() / (sigma * sigma) < 0.05);
        assert!((var_y - sigma * sigma).abs() / (sigma * sigma) < 0.05);
        assert!(cov.abs() < 0.05 * sigma * sigma);
    }

    #[test]
    fn sample_pdf_annulus_respects_inner_radius() {
        let pdf = AnalyticPdf::Annulus {
            center: (0.0, 0.0),
            r_inner: 3.0,
            r_outer: 5.0,
        };
        let pts = sample_pdf(&pdf, 20_000, 31).unwrap();
        for (x, y) in pts {
            let r = (x * x + y * y).sqrt();
            assert!(r >= 3.0 - 1e-12 && r <= 5.0 + 1e-12);
        }
    }

    #[test]
    fn text_export_has_header_and_points() {
        let grid = four_cell_grid();
        let run = sample_dpf(&grid, 3, 8).unwrap();
        let mut buf = Vec::new();
        run.write_text(2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# seed 8 N 3");
        assert_eq!(lines.count(), 3);
    }
}
