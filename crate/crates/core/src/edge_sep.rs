//! Edge-based separator detection: directional Sobel edges, peaks of the
//! one-dimensional Hough transform above an adaptive threshold, regularity
//! pruning, gap-filling consolidation along each line, then length and
//! border-distance filters.

use crate::band_sep::max_runs;
use crate::cfs::CfsParams;
use crate::raster::{hough_1d, sobel_edges, BinaryImage, Direction, GrayImage};
use crate::separator::{prune_by_regularity, SeparatorLine};

/// Dark outer ring of the artificial border, in pixels.
pub const BORDER_DARK: usize = 1;
/// Bright inner ring of the artificial border, in pixels.
pub const BORDER_BRIGHT: usize = 2;
/// Total artificial border width per side.
pub const BORDER_WIDTH: usize = BORDER_DARK + BORDER_BRIGHT;

/// Hough peaks whose positions differ by at most this many pixels form one
/// candidate: both sides of a step, or the two flanks of a dark line up to
/// four pixels wide (two abutting panel frames).
const PEAK_MERGE_DISTANCE: usize = 5;

/// Inputs of the adaptive peak threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoughContext {
    /// Zero-based recursion depth.
    pub depth: usize,
    /// Maximum of the Hough vector.
    pub max: f64,
    /// Fraction of set pixels in the edge map.
    pub fill_ratio: f64,
}

/// `t = m·(h + (1 − h)·√f)` with `h = α·β^depth`, `h` capped at 1.
pub fn peak_threshold(ctx: &HoughContext, alpha: f64, beta: f64) -> f64 {
    let h = (alpha * beta.powi(ctx.depth as i32)).min(1.0);
    ctx.max * (h + (1.0 - h) * ctx.fill_ratio.clamp(0.0, 1.0).sqrt())
}

/// Pads `img` with a one-pixel black ring followed by a two-pixel white
/// ring. The first interior Sobel column (row) on each side always sees a
/// black-to-white step, so every border shows up as a full-length Hough
/// peak regardless of content. Positions in the padded image map back by
/// subtracting [`BORDER_WIDTH`].
pub fn add_artificial_border(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let (pw, ph) = (w + 2 * BORDER_WIDTH, h + 2 * BORDER_WIDTH);
    GrayImage::from_fn(pw, ph, |x, y| {
        let ring = x.min(y).min(pw - 1 - x).min(ph - 1 - y);
        if ring < BORDER_DARK {
            0.0
        } else if ring < BORDER_WIDTH {
            1.0
        } else {
            img.get(x - BORDER_WIDTH, y - BORDER_WIDTH)
        }
    })
}

/// A Hough peak cluster in padded coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCandidate {
    /// Position in the unpadded image.
    pub position: usize,
    /// Padded line indices covered by the cluster.
    pub first: usize,
    pub last: usize,
    /// Largest Hough count within the cluster.
    pub strength: u32,
    /// Longest gap-filled run of edge pixels along the line, once computed.
    pub consolidated_length: usize,
}

/// Intermediate results of one detection, for inspection and debugging.
#[derive(Debug, Clone)]
pub struct EdgeTrace {
    pub edges: BinaryImage,
    pub hough: Vec<u32>,
    pub threshold: f64,
    pub fill_ratio: f64,
    /// Peak clusters above the threshold and strictly inside the image.
    pub candidates: Vec<EdgeCandidate>,
    /// Survivors of regularity pruning, strongest first, consolidated.
    pub pruned: Vec<EdgeCandidate>,
    pub lines: Vec<SeparatorLine>,
}

/// Separator lines of direction `dir` found by the edge-based detector at
/// recursion depth `depth`, sorted by position.
pub fn detect_edge_separators(
    img: &GrayImage,
    dir: Direction,
    depth: usize,
    params: &CfsParams,
) -> Vec<SeparatorLine> {
    trace_edge_separators(img, dir, depth, params).lines
}

pub fn trace_edge_separators(
    img: &GrayImage,
    dir: Direction,
    depth: usize,
    params: &CfsParams,
) -> EdgeTrace {
    let padded = add_artificial_border(img);
    let edges = sobel_edges(&padded, dir, params.edge_sobelthresh);
    let hough = hough_1d(&edges, dir);
    let fill_ratio = edges.fill_ratio();
    let max = hough.iter().copied().max().unwrap_or(0);
    let ctx = HoughContext { depth, max: f64::from(max), fill_ratio };
    let threshold = peak_threshold(&ctx, params.edge_houghratio_min, params.edge_houghratio_base);

    let extent = img.line_count(dir);
    let length = img.line_length(dir);
    let candidates = if max == 0 { Vec::new() } else { peak_clusters(&hough, threshold, extent) };

    let mut ranked = candidates.clone();
    ranked.sort_by(|a, b| b.strength.cmp(&a.strength).then(a.position.cmp(&b.position)));
    let mut pruned =
        prune_by_regularity(ranked, extent, params.edge_maxdistvar, |c: &EdgeCandidate| c.position);

    for c in pruned.iter_mut() {
        c.consolidated_length = consolidated_length(&edges, dir, c, length, params);
    }

    let min_len = params.edge_minseplength * length as f64;
    let min_border = params.edge_minborderdist * extent as f64;
    let mut positions: Vec<usize> = pruned
        .iter()
        .filter(|c| c.consolidated_length as f64 >= min_len)
        .filter(|c| {
            let p = c.position as f64;
            p >= min_border && extent as f64 - p >= min_border
        })
        .map(|c| c.position)
        .collect();
    positions.sort_unstable();
    positions.dedup();
    let lines = positions.into_iter().map(|p| SeparatorLine::new(dir, p)).collect();

    EdgeTrace { edges, hough, threshold, fill_ratio, candidates, pruned, lines }
}

/// Groups Hough bins at or above `threshold` into clusters and keeps those
/// whose center maps strictly inside the unpadded extent. Bins touching the
/// artificial border are ignored.
fn peak_clusters(hough: &[u32], threshold: f64, extent: usize) -> Vec<EdgeCandidate> {
    let interior = BORDER_WIDTH + 1..BORDER_WIDTH + extent.saturating_sub(1);
    let peaks: Vec<usize> = interior.filter(|&i| f64::from(hough[i]) >= threshold).collect();
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    for &i in &peaks {
        match clusters.last_mut() {
            Some((_, last)) if i - *last <= PEAK_MERGE_DISTANCE => *last = i,
            _ => clusters.push((i, i)),
        }
    }
    clusters
        .into_iter()
        .filter_map(|(first, last)| {
            // center rounded up: a step between columns c-1 and c maps to c
            let center = (first + last).div_ceil(2);
            let position = center.checked_sub(BORDER_WIDTH)?;
            if position == 0 || position >= extent {
                return None;
            }
            let strength = hough[first..=last].iter().copied().max().unwrap_or(0);
            Some(EdgeCandidate { position, first, last, strength, consolidated_length: 0 })
        })
        .collect()
}

/// Longest run of edge pixels along the candidate after dropping segments
/// shorter than `edge_lenratio·length` and bridging gaps of at most
/// `edge_gapratio·length`.
fn consolidated_length(
    edges: &BinaryImage,
    dir: Direction,
    c: &EdgeCandidate,
    length: usize,
    params: &CfsParams,
) -> usize {
    let on: Vec<bool> = (BORDER_WIDTH..BORDER_WIDTH + length)
        .map(|t| {
            (c.first..=c.last).any(|s| match dir {
                Direction::Vertical => edges.get(s, t),
                Direction::Horizontal => edges.get(t, s),
            })
        })
        .collect();
    let min_seg = params.edge_lenratio * length as f64;
    let max_gap = params.edge_gapratio * length as f64;
    let mut best = 0;
    let mut current: Option<(usize, usize)> = None;
    for (start, len) in max_runs(&on).into_iter().filter(|&(_, l)| l as f64 >= min_seg) {
        current = match current {
            Some((s, e)) if (start - e) as f64 <= max_gap => Some((s, start + len)),
            Some((s, e)) => {
                best = best.max(e - s);
                Some((start, start + len))
            }
            None => Some((start, start + len)),
        };
    }
    if let Some((s, e)) = current {
        best = best.max(e - s);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::sobel_edges;

    #[test]
    fn threshold_examples() {
        let ctx = HoughContext { depth: 0, max: 100.0, fill_ratio: 0.0 };
        assert!((peak_threshold(&ctx, 0.2, 1.5) - 20.0).abs() < 1e-9);
        for depth in 0..6 {
            let ctx = HoughContext { depth, max: 37.0, fill_ratio: 1.0 };
            assert!((peak_threshold(&ctx, 0.3, 1.7) - 37.0).abs() < 1e-9);
        }
        let ctx = HoughContext { depth: 2, max: 100.0, fill_ratio: 0.25 };
        assert!((peak_threshold(&ctx, 0.2, 1.5) - 72.5).abs() < 1e-9);
    }

    #[test]
    fn deep_recursion_caps_ratio() {
        let ctx = HoughContext { depth: 40, max: 10.0, fill_ratio: 0.3 };
        assert!((peak_threshold(&ctx, 0.2, 1.5) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn border_geometry() {
        let img = GrayImage::filled(10, 7, 0.5);
        let p = add_artificial_border(&img);
        assert_eq!((p.width(), p.height()), (16, 13));
        assert_eq!(p.get(0, 6), 0.0);
        assert_eq!(p.get(1, 6), 1.0);
        assert_eq!(p.get(2, 6), 1.0);
        assert_eq!(p.get(3, 6), 0.5);
        assert_eq!(p.get(3 + 9, 3 + 6), 0.5);
        assert_eq!(p.get(15, 6), 0.0);
    }

    #[test]
    fn border_fires_only_on_frame() {
        let img = GrayImage::filled(20, 12, 0.5);
        let p = add_artificial_border(&img);
        let e = sobel_edges(&p, Direction::Vertical, 0.02);
        for y in 0..p.height() {
            for x in 0..p.width() {
                if e.get(x, y) {
                    let in_frame = x < BORDER_WIDTH + 1 || x + BORDER_WIDTH + 1 >= p.width();
                    assert!(in_frame, "edge at ({x},{y}) inside content");
                }
            }
        }
        // the first interior column sees black→white in every non-corner row
        let counts = hough_1d(&e, Direction::Vertical);
        assert!(counts[1] as usize >= img.height());
        assert!(counts[p.width() - 2] as usize >= img.height());
    }

    #[test]
    fn blank_image_has_no_separators() {
        let img = GrayImage::filled(300, 300, 1.0);
        let params = CfsParams::default();
        for dir in [Direction::Vertical, Direction::Horizontal] {
            assert!(detect_edge_separators(&img, dir, 0, &params).is_empty());
        }
    }

    #[test]
    fn line_inside_border_zone_is_dropped() {
        let w = 400;
        let col = w * 2 / 100;
        let img = GrayImage::from_fn(w, 300, |x, _| if x == col || x == col + 1 { 0.0 } else { 1.0 });
        let params = CfsParams::default();
        assert!(detect_edge_separators(&img, Direction::Vertical, 0, &params).is_empty());
        let far = GrayImage::from_fn(w, 300, |x, _| if x == 200 || x == 201 { 0.0 } else { 1.0 });
        let lines = detect_edge_separators(&far, Direction::Vertical, 0, &params);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].position.abs_diff(201) <= 1);
    }

    #[test]
    fn consolidation_bridges_small_gaps() {
        // a vertical line broken in the middle by a gap of 10% of the height
        let (w, h) = (300, 300);
        let img = GrayImage::from_fn(w, h, |x, y| {
            if (x == 150 || x == 151) && !(135..165).contains(&y) {
                0.0
            } else {
                1.0
            }
        });
        let params = CfsParams { edge_gapratio: 0.2, edge_minseplength: 0.95, ..Default::default() };
        let lines = detect_edge_separators(&img, Direction::Vertical, 0, &params);
        assert_eq!(lines.len(), 1);
        let tight = CfsParams { edge_gapratio: 0.05, ..params };
        assert!(detect_edge_separators(&img, Direction::Vertical, 0, &tight).is_empty());
    }
}
