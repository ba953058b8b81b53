//! Band-based separator detection: binarize at the mean intensity, find
//! maximal runs of all-white lines, filter by width, regularity and border
//! distance, and return the band centers.

use crate::cfs::CfsParams;
use crate::raster::{binarize, hough_1d, BinaryImage, Direction, GrayImage};
use crate::separator::{prune_by_regularity, SeparatorLine};

/// Maximal runs of `true` as `(start, length)`, in order.
pub fn max_runs(bits: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &b) in bits.iter().enumerate() {
        match (b, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - s));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, bits.len() - s));
    }
    runs
}

/// Binarization at the mean intensity. A constant image has no dark pixels
/// and binarizes to all white.
pub fn binarize_at_mean(img: &GrayImage) -> BinaryImage {
    let (lo, hi) = img.min_max();
    if lo == hi {
        return BinaryImage::new(img.width(), img.height(), vec![true; img.pixels().len()])
            .expect("dimensions match");
    }
    binarize(img, img.mean())
}

/// Flags lines of direction `dir` that are entirely white after
/// binarization.
pub fn white_lines(img: &GrayImage, dir: Direction) -> Vec<bool> {
    let bin = binarize_at_mean(img);
    let length = img.line_length(dir) as u32;
    hough_1d(&bin, dir).into_iter().map(|c| c == length).collect()
}

/// Center line of the run `[start, start + len)`.
fn band_center(start: usize, len: usize) -> usize {
    start + len / 2
}

/// Separator lines of direction `dir` at the centers of white bands, sorted
/// by position.
pub fn detect_band_separators(img: &GrayImage, dir: Direction, params: &CfsParams) -> Vec<SeparatorLine> {
    let extent = img.line_count(dir);
    let min_width = (params.band_minsepwidth * extent as f64).max(1.0);
    let mut bands: Vec<(usize, usize)> = max_runs(&white_lines(img, dir))
        .into_iter()
        .filter(|&(_, len)| len as f64 >= min_width)
        .collect();
    // widest first, ties by position
    bands.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let bands = prune_by_regularity(bands, extent, params.band_maxdistvar, |&(s, l)| band_center(s, l));

    let min_border = params.band_minborderdist * extent as f64;
    let mut positions: Vec<usize> = bands
        .into_iter()
        .map(|(s, l)| band_center(s, l))
        .filter(|&c| c > 0 && c < extent)
        .filter(|&c| c as f64 >= min_border && (extent - c) as f64 >= min_border)
        .collect();
    positions.sort_unstable();
    positions.into_iter().map(|p| SeparatorLine::new(dir, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs() {
        assert!(max_runs(&[false; 4]).is_empty());
        assert_eq!(max_runs(&[true; 5]), vec![(0, 5)]);
        assert_eq!(max_runs(&[true, true, false, true]), vec![(0, 2), (3, 1)]);
        assert!(max_runs(&[]).is_empty());
    }

    #[test]
    fn solid_white_gives_center_line() {
        let params = CfsParams::default();
        let img = GrayImage::filled(100, 60, 1.0);
        let v = detect_band_separators(&img, Direction::Vertical, &params);
        assert_eq!(v, vec![SeparatorLine::new(Direction::Vertical, 50)]);
        let h = detect_band_separators(&img, Direction::Horizontal, &params);
        assert_eq!(h, vec![SeparatorLine::new(Direction::Horizontal, 30)]);
    }

    fn two_panels(gutter: f32, panel: f32) -> GrayImage {
        // panels at x in [0,100) and [130,230), gutter [100,130)
        GrayImage::from_fn(230, 80, |x, y| {
            if (100..130).contains(&x) {
                gutter
            } else {
                // mild texture so the panels are never all white
                panel + 0.1 * (((x * 7 + y * 13) % 5) as f32 / 5.0)
            }
        })
    }

    #[test]
    fn white_gutter() {
        let params = CfsParams::default();
        let lines = detect_band_separators(&two_panels(1.0, 0.2), Direction::Vertical, &params);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].position.abs_diff(115) <= 1);
        assert!(detect_band_separators(&two_panels(1.0, 0.2), Direction::Horizontal, &params).is_empty());
    }

    #[test]
    fn light_gray_gutter() {
        let params = CfsParams::default();
        let lines = detect_band_separators(&two_panels(0.6, 0.3), Direction::Vertical, &params);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].position.abs_diff(115) <= 1);
    }

    #[test]
    fn min_width_filters() {
        let params = CfsParams { band_minsepwidth: 0.2, ..Default::default() };
        assert!(detect_band_separators(&two_panels(1.0, 0.2), Direction::Vertical, &params).is_empty());
    }
}
