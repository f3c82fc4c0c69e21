//! Star-discrepancy lower bounds over anchored boxes `[0, t)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscrepancyMode {
    Grid,
    Random,
}

impl std::str::FromStr for DiscrepancyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Self::Grid),
            "random" => Ok(Self::Random),
            _ => Err(Error::parse(
                "mode",
                format!("expected `grid` or `random`, got `{s}`"),
            )),
        }
    }
}

pub const MAX_DIM: usize = 4;

/// Exact star discrepancy of a 1-D point set:
/// `1/(2N) + max_i |x_(i) - (2i-1)/(2N)|` over the sorted points.
pub fn star_discrepancy_1d(points: &[f64]) -> f64 {
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let worst = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (x - (2.0 * i as f64 + 1.0) / (2.0 * n)).abs())
        .fold(0.0, f64::max);
    1.0 / (2.0 * n) + worst
}

/// Deviation at one anchor, using both `[0, t)` and its closure `[0, t]`; the
/// closed count is the limit of open boxes shrinking onto `t`, so the result
/// stays a lower bound for the supremum.
fn anchor_deviation(points: &[Vec<f64>], t: &[f64]) -> f64 {
    let mut open = 0usize;
    let mut closed = 0usize;
    for p in points {
        if p.iter().zip(t).all(|(x, s)| x <= s) {
            closed += 1;
            if p.iter().zip(t).all(|(x, s)| x < s) {
                open += 1;
            }
        }
    }
    let n = points.len() as f64;
    let vol: f64 = t.iter().product();
    (open as f64 / n - vol)
        .abs()
        .max((closed as f64 / n - vol).abs())
}

fn anchor_deviation_1d(sorted: &[f64], t: f64) -> f64 {
    let n = sorted.len() as f64;
    let open = sorted.partition_point(|&x| x < t) as f64;
    let closed = sorted.partition_point(|&x| x <= t) as f64;
    (open / n - t).abs().max((closed / n - t).abs())
}

/// Lower-bound estimate of the star discrepancy. Grid mode checks anchors
/// `t ∈ {1/trials, ..., 1}^d`; random mode checks `trials` seeded uniform anchors.
pub fn discrepancy_estimate(
    points: &[Vec<f64>],
    mode: DiscrepancyMode,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let d = points.first().map_or(0, Vec::len);
    if d == 0 || d > MAX_DIM {
        return Err(Error::Dimension(format!(
            "discrepancy estimates support 1 <= d <= {MAX_DIM}, got {d}"
        )));
    }
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::Dimension("points of mixed dimension".into()));
    }
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let anchors: Vec<Vec<f64>> = match mode {
        DiscrepancyMode::Grid => {
            let total = trials
                .checked_pow(d as u32)
                .ok_or_else(|| Error::Precondition("grid too large".into()))?;
            (0..total)
                .map(|mut idx| {
                    (0..d)
                        .map(|_| {
                            let k = idx % trials;
                            idx /= trials;
                            (k + 1) as f64 / trials as f64
                        })
                        .collect()
                })
                .collect()
        }
        DiscrepancyMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..trials)
                .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
                .collect()
        }
    };
    let worst = if d == 1 {
        let mut sorted: Vec<f64> = points.iter().map(|p| p[0]).collect();
        sorted.sort_by(f64::total_cmp);
        anchors
            .par_iter()
            .map(|t| anchor_deviation_1d(&sorted, t[0]))
            .reduce(|| 0.0, f64::max)
    } else {
        anchors
            .par_iter()
            .map(|t| anchor_deviation(points, t))
            .reduce(|| 0.0, f64::max)
    };
    Ok(worst)
}
