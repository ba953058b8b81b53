//! Separator lines and the regularity criterion shared by both detectors and
//! the direction choice.

use serde::{Deserialize, Serialize};

use crate::raster::Direction;

/// A full-length separator inside the current sub-image. `position` is the
/// column (vertical) or row (horizontal) index, strictly inside the extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeparatorLine {
    pub direction: Direction,
    pub position: usize,
}

impl SeparatorLine {
    pub fn new(direction: Direction, position: usize) -> Self {
        Self { direction, position }
    }
}

/// Population variance of the gaps between consecutive positions after
/// normalizing to `[0, 1]` and adding both borders as virtual lines.
pub fn gap_variance(positions: &[usize], extent: usize) -> f64 {
    let e = extent.max(1) as f64;
    let mut pts: Vec<f64> = positions.iter().map(|&p| p as f64 / e).collect();
    pts.push(0.0);
    pts.push(1.0);
    pts.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n
}

/// Drops candidates from the end of `ranked` (strongest first) until the
/// gap variance of the survivors is at most `max_var`. A single candidate is
/// always kept.
pub fn prune_by_regularity<T>(
    mut ranked: Vec<T>,
    extent: usize,
    max_var: f64,
    position: impl Fn(&T) -> usize,
) -> Vec<T> {
    while ranked.len() > 1 {
        let positions: Vec<usize> = ranked.iter().map(&position).collect();
        if gap_variance(&positions, extent) <= max_var {
            break;
        }
        ranked.pop();
    }
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_variance_examples() {
        assert_eq!(gap_variance(&[], 100), 0.0);
        assert!(gap_variance(&[50], 100).abs() < 1e-15);
        assert!(gap_variance(&[25, 50, 75], 100).abs() < 1e-15);
        // gaps 0.1 and 0.9
        assert!((gap_variance(&[10], 100) - 0.16).abs() < 1e-12);
    }

    #[test]
    fn pruning_keeps_strongest() {
        let ranked = vec![50usize, 25, 75, 3];
        let kept = prune_by_regularity(ranked.clone(), 100, 1e-6, |&p| p);
        assert_eq!(kept, vec![50, 25, 75]);
        let kept = prune_by_regularity(vec![10usize, 11], 100, 0.0, |&p| p);
        assert_eq!(kept, vec![10]);
        let kept = prune_by_regularity(Vec::<usize>::new(), 100, 0.0, |&p| p);
        assert!(kept.is_empty());
    }
}
