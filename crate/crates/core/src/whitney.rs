//! Dyadic Whitney decomposition of `I = (-D/2, D/2]`.
//!
//! A dyadic interval `Q ⊆ I` is kept when `|Q| ≤ dist(Q, ∂I)` and its parent is not
//! kept; the pieces then satisfy `|Q| ≤ dist(Q, ∂I) ≤ 5|Q|`. The decomposition is
//! infinite near `∂I`, so pieces shorter than `delta_stop` are dropped.

use serde::Serialize;

use crate::error::{invalid, Result};

/// One piece `(x_j, x_j + δ_j]` with `δ_j = 2^{-level}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhitneyInterval {
    pub j: usize,
    pub x_j: f64,
    pub delta_j: f64,
    pub level: i32,
}

impl WhitneyInterval {
    pub fn right(&self) -> f64 {
        self.x_j + self.delta_j
    }

    pub fn midpoint(&self) -> f64 {
        self.x_j + 0.5 * self.delta_j
    }

    /// Distance from the closed interval to `{±D/2}`.
    pub fn dist_to_boundary(&self, d: f64) -> f64 {
        (self.x_j + 0.5 * d).min(0.5 * d - self.right())
    }

    /// `|I_j| ≤ dist(I_j, ∂I) ≤ 5|I_j|`.
    pub fn satisfies_w2(&self, d: f64) -> bool {
        let dist = self.dist_to_boundary(d);
        self.delta_j <= dist && dist <= 5.0 * self.delta_j
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhitneyDecomposition {
    pub d: f64,
    pub intervals: Vec<WhitneyInterval>,
    pub delta_stop: f64,
    pub covered_measure: f64,
}

impl WhitneyDecomposition {
    pub fn decompose(d: f64, delta_stop: f64) -> Result<Self> {
        if !(d >= 2.0 && d.is_finite()) {
            return Err(invalid(format!("D = {d} must be at least 2")));
        }
        if !(delta_stop > 0.0 && delta_stop < d / 8.0) {
            return Err(invalid(format!(
                "delta_stop = {delta_stop} must lie in (0, D/8)"
            )));
        }
        // No interval longer than D/3 can satisfy |Q| ≤ dist(Q, ∂I).
        let top_level = -((d / 3.0).log2().floor() as i32);
        let top = level_length(top_level);
        let half = 0.5 * d;
        let first = (-half / top).floor() as i64;
        let last = (half / top).ceil() as i64;

        let mut pieces = Vec::new();
        for k in first..last {
            select(k, top_level, half, delta_stop, &mut pieces);
        }
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let intervals: Vec<WhitneyInterval> = pieces
            .into_iter()
            .enumerate()
            .map(|(j, (x_j, level))| WhitneyInterval {
                j,
                x_j,
                delta_j: level_length(level),
                level,
            })
            .collect();
        let covered_measure = intervals.iter().map(|i| i.delta_j).sum();
        Ok(Self {
            d,
            intervals,
            delta_stop,
            covered_measure,
        })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// `#{j : δ_j ≥ delta_min}`.
    pub fn count_at_scale(&self, delta_min: f64) -> Result<usize> {
        if delta_min < self.delta_stop {
            return Err(invalid(format!(
                "delta_min = {delta_min} is below the truncation scale {}",
                self.delta_stop
            )));
        }
        Ok(self.intervals.iter().filter(|i| i.delta_j >= delta_min).count())
    }

    /// Measure of `I` left uncovered by the truncation.
    pub fn sliver_measure(&self) -> f64 {
        self.d - self.covered_measure
    }

    /// Intervals violating the two-sided boundary-distance condition.
    pub fn w2_violations(&self) -> Vec<usize> {
        self.intervals
            .iter()
            .filter(|i| !i.satisfies_w2(self.d))
            .map(|i| i.j)
            .collect()
    }

    /// Pairs (j, j+1) sharing an endpoint.
    pub fn adjacent_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.intervals
            .windows(2)
            .filter(|w| w[0].right() == w[1].x_j)
            .map(|w| (w[0].j, w[1].j))
    }

    /// Largest length ratio between adjacent intervals (1 when there are no neighbours).
    pub fn max_adjacent_ratio(&self) -> f64 {
        self.adjacent_pairs()
            .map(|(a, b)| {
                let (da, db) = (self.intervals[a].delta_j, self.intervals[b].delta_j);
                da.max(db) / da.min(db)
            })
            .fold(1.0, f64::max)
    }
}

fn level_length(level: i32) -> f64 {
    2f64.powi(-level)
}

fn select(k: i64, level: i32, half: f64, delta_stop: f64, out: &mut Vec<(f64, i32)>) {
    let len = level_length(level);
    let left = k as f64 * len;
    let right = left + len;
    if right <= -half || left >= half {
        return;
    }
    if left >= -half && right <= half {
        let dist = (left + half).min(half - right);
        if len <= dist {
            out.push((left, level));
            return;
        }
    }
    if 0.5 * len < delta_stop {
        return;
    }
    select(2 * k, level + 1, half, delta_stop, out);
    select(2 * k + 1, level + 1, half, delta_stop, out);
}
