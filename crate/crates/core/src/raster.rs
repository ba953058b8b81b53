//! Raster primitives: grayscale images, binarization, directional Sobel
//! edges, line projections, the one-dimensional Hough count and rectangle
//! geometry.

use std::path::Path;

use image::{DynamicImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orientation of a pixel line or separator.
///
/// A `Vertical` line runs top to bottom and splits an image into a left and
/// a right part; projections along vertical lines yield one value per column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Vertical,
    Horizontal,
}

impl Direction {
    pub fn orthogonal(self) -> Direction {
        match self {
            Direction::Vertical => Direction::Horizontal,
            Direction::Horizontal => Direction::Vertical,
        }
    }
}

/// Per-line aggregate used by [`line_projection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineStat {
    Mean,
    Variance,
}

/// Row-major grayscale raster with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero-sized image {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("intensity {v} outside [0, 1]")));
        }
        Ok(Self { width, height, data })
    }

    /// Constant image. Panics on zero dimensions or an intensity outside `[0, 1]`.
    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("valid constant image")
    }

    /// Builds an image from `f(x, y)`, clamping results into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        assert!(width > 0 && height > 0, "zero-sized image");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self { width, height, data }
    }

    pub fn from_luma8(img: &image::GrayImage) -> Result<Self> {
        let (w, h) = img.dimensions();
        let data = img.as_raw().iter().map(|&v| f32::from(v) / 255.0).collect();
        Self::new(w as usize, h as usize, data)
    }

    /// Quantizes back to 8 bits (round to nearest).
    pub fn to_luma8(&self) -> image::GrayImage {
        let raw = self.data.iter().map(|&v| (v * 255.0).round() as u8).collect();
        image::GrayImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer matches dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Extent of the image along `dir`: the length of one line in that direction.
    pub fn line_length(&self, dir: Direction) -> usize {
        match dir {
            Direction::Vertical => self.height,
            Direction::Horizontal => self.width,
        }
    }

    /// Number of lines in direction `dir` (the extent a separator of that
    /// direction can be positioned along).
    pub fn line_count(&self, dir: Direction) -> usize {
        match dir {
            Direction::Vertical => self.width,
            Direction::Horizontal => self.height,
        }
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width as u32, self.height as u32)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| f64::from(v)).sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Copies the pixels under `rect`. Panics if `rect` is not inside the image.
    pub fn crop(&self, rect: Rect) -> GrayImage {
        assert!(
            rect.fits_within(self.width, self.height),
            "crop {rect:?} outside {}x{}",
            self.width,
            self.height
        );
        let (x0, y0, w, h) = (rect.x as usize, rect.y as usize, rect.w as usize, rect.h as usize);
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        GrayImage { width: w, height: h, data }
    }

    pub fn transpose(&self) -> GrayImage {
        let mut data = Vec::with_capacity(self.data.len());
        for x in 0..self.width {
            for y in 0..self.height {
                data.push(self.get(x, y));
            }
        }
        GrayImage { width: self.height, height: self.width, data }
    }
}

/// Row-major boolean raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![false; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Fraction of set pixels; zero for an empty raster.
    pub fn fill_ratio(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.count_true() as f64 / self.data.len() as f64
        }
    }
}

/// Axis-aligned pixel rectangle. `w` and `h` are at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    /// Exclusive right edge.
    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    /// Exclusive bottom edge.
    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn is_valid(&self) -> bool {
        self.w >= 1 && self.h >= 1
    }

    pub fn fits_within(&self, width: usize, height: usize) -> bool {
        self.is_valid() && self.right() as usize <= width && self.bottom() as usize <= height
    }

    pub fn contains(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn offset(&self, dx: u32, dy: u32) -> Rect {
        Rect::new(self.x + dx, self.y + dy, self.w, self.h)
    }
}

/// Axis-aligned intersection; `None` when the rectangles share no pixel.
pub fn intersect(a: &Rect, b: &Rect) -> Option<Rect> {
    let x0 = a.x.max(b.x);
    let y0 = a.y.max(b.y);
    let x1 = a.right().min(b.right());
    let y1 = a.bottom().min(b.bottom());
    (x1 > x0 && y1 > y0).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
}

/// Area of the intersection, zero when disjoint.
pub fn overlap_area(a: &Rect, b: &Rect) -> u64 {
    intersect(a, b).map_or(0, |r| r.area())
}

/// ITU-R BT.601 luma, normalized to `[0, 1]`.
pub fn to_grayscale(rgb: &RgbImage) -> Result<GrayImage> {
    let (w, h) = rgb.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::InvalidImage(format!("zero-sized image {w}x{h}")));
    }
    let data = rgb
        .pixels()
        .map(|p| {
            let [r, g, b] = p.0;
            let luma = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
            ((luma / 255.0) as f32).clamp(0.0, 1.0)
        })
        .collect();
    GrayImage::new(w as usize, h as usize, data)
}

/// Loads a PNG or JPEG file as a normalized grayscale image.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    if !path.exists() {
        return Err(Error::MissingAsset(path.to_path_buf()));
    }
    let img = image::open(path)?;
    from_dynamic(&img)
}

pub fn from_dynamic(img: &DynamicImage) -> Result<GrayImage> {
    match img {
        DynamicImage::ImageLuma8(g) => GrayImage::from_luma8(g),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => {
            GrayImage::from_luma8(&img.to_luma8())
        }
        other => to_grayscale(&other.to_rgb8()),
    }
}

/// `true` wherever the pixel is strictly brighter than `threshold`.
pub fn binarize(img: &GrayImage, threshold: f64) -> BinaryImage {
    let data = img.pixels().iter().map(|&v| f64::from(v) > threshold).collect();
    BinaryImage { width: img.width(), height: img.height(), data }
}

/// Aggregates every pixel line in direction `dir` to one number.
///
/// `Vertical` yields one value per column, `Horizontal` one per row.
/// Variance is the population variance of the line.
pub fn line_projection(img: &GrayImage, dir: Direction, stat: LineStat) -> Vec<f64> {
    let (means, vars) = mean_variance_projection(img, dir);
    match stat {
        LineStat::Mean => means,
        LineStat::Variance => vars,
    }
}

/// Mean and population variance projections in one pass.
pub fn mean_variance_projection(img: &GrayImage, dir: Direction) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let (n_lines, len) = (img.line_count(dir), img.line_length(dir));
    let mut sum = vec![0.0f64; n_lines];
    let mut sq = vec![0.0f64; n_lines];
    match dir {
        Direction::Vertical => {
            for y in 0..h {
                for (x, &v) in img.row(y).iter().enumerate() {
                    let v = f64::from(v);
                    sum[x] += v;
                    sq[x] += v * v;
                }
            }
        }
        Direction::Horizontal => {
            for y in 0..h {
                for &v in img.row(y) {
                    let v = f64::from(v);
                    sum[y] += v;
                    sq[y] += v * v;
                }
            }
        }
    }
    debug_assert_eq!(n_lines, if dir == Direction::Vertical { w } else { h });
    let n = len as f64;
    let means: Vec<f64> = sum.iter().map(|s| (s / n).clamp(0.0, 1.0)).collect();
    let vars = sq
        .iter()
        .zip(&means)
        .map(|(s, m)| (s / n - m * m).clamp(0.0, 0.25))
        .collect();
    (means, vars)
}

/// Normalized Sobel response (kernel weights divided by 8) at an interior pixel.
///
/// `Vertical` uses the kernel that responds to vertical edges (the
/// horizontal gradient). A unit step yields a response of magnitude 0.5.
#[inline]
fn sobel_at(img: &GrayImage, dir: Direction, x: usize, y: usize) -> f32 {
    match dir {
        Direction::Vertical => {
            let d = |yy: usize| img.get(x + 1, yy) - img.get(x - 1, yy);
            (d(y - 1) + 2.0 * d(y) + d(y + 1)) / 8.0
        }
        Direction::Horizontal => {
            let d = |xx: usize| img.get(xx, y + 1) - img.get(xx, y - 1);
            (d(x - 1) + 2.0 * d(x) + d(x + 1)) / 8.0
        }
    }
}

/// Binary edge map from a one-directional Sobel filter.
///
/// A pixel is set iff the magnitude of its normalized response exceeds
/// `threshold`. Border pixels, where the 3×3 kernel does not fit, stay unset;
/// images narrower or shorter than 3 pixels give an all-false map.
pub fn sobel_edges(img: &GrayImage, dir: Direction, threshold: f64) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let mut out = BinaryImage::empty(w, h);
    if w < 3 || h < 3 {
        return out;
    }
    let thr = threshold as f32;
    for y in 1..h - 1 {
        let row = &mut out.data[y * w..(y + 1) * w];
        for (x, px) in row.iter_mut().enumerate().take(w - 1).skip(1) {
            *px = sobel_at(img, dir, x, y).abs() > thr;
        }
    }
    out
}

/// One-dimensional Hough transform restricted to full-length axis-aligned
/// lines: the number of set pixels on each line in direction `dir`.
pub fn hough_1d(edges: &BinaryImage, dir: Direction) -> Vec<u32> {
    let (w, h) = (edges.width(), edges.height());
    match dir {
        Direction::Vertical => {
            let mut counts = vec![0u32; w];
            for y in 0..h {
                for (c, &b) in counts.iter_mut().zip(&edges.data[y * w..(y + 1) * w]) {
                    *c += u32::from(b);
                }
            }
            counts
        }
        Direction::Horizontal => (0..h)
            .map(|y| edges.data[y * w..(y + 1) * w].iter().filter(|&&b| b).count() as u32)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn rgb(w: u32, h: u32, px: [u8; 3]) -> RgbImage {
        RgbImage::from_pixel(w, h, Rgb(px))
    }

    #[test]
    fn grayscale_weights() {
        let black = to_grayscale(&rgb(4, 3, [0, 0, 0])).unwrap();
        assert!(black.pixels().iter().all(|&v| v == 0.0));
        let white = to_grayscale(&rgb(4, 3, [255, 255, 255])).unwrap();
        assert!(white.pixels().iter().all(|&v| (v - 1.0).abs() < 1e-6));
        let red = to_grayscale(&rgb(2, 2, [255, 0, 0])).unwrap();
        assert!(red.pixels().iter().all(|&v| (f64::from(v) - 0.299).abs() < 1e-6));
    }

    #[test]
    fn grayscale_rejects_empty() {
        assert!(matches!(to_grayscale(&RgbImage::new(0, 5)), Err(Error::InvalidImage(_))));
    }

    #[test]
    fn image_constructor_validates() {
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn binarize_is_strict() {
        let img = GrayImage::filled(3, 3, 0.5);
        assert_eq!(binarize(&img, 0.5).count_true(), 0);

        let img = GrayImage::from_fn(3, 1, |x, _| if x == 1 { 0.01 } else { 0.0 });
        let b = binarize(&img, 0.0);
        assert_eq!(b.pixels(), &[false, true, false]);

        let checker = GrayImage::from_fn(2, 2, |x, y| ((x + y) % 2) as f32);
        assert_eq!(binarize(&checker, 0.5).pixels(), &[false, true, true, false]);
    }

    #[test]
    fn projections() {
        let img = GrayImage::filled(5, 4, 0.3);
        for dir in [Direction::Vertical, Direction::Horizontal] {
            let (m, v) = mean_variance_projection(&img, dir);
            assert_eq!(m.len(), img.line_count(dir));
            assert!(m.iter().all(|&x| (x - 0.3).abs() < 1e-6));
            assert!(v.iter().all(|&x| x.abs() < 1e-9));
        }
        let img = GrayImage::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(line_projection(&img, Direction::Vertical, LineStat::Mean), vec![0.0, 1.0]);

        let col = GrayImage::new(1, 4, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let var = line_projection(&col, Direction::Vertical, LineStat::Variance);
        assert!((var[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn sobel_constant_and_step() {
        let flat = GrayImage::filled(8, 8, 0.7);
        for dir in [Direction::Vertical, Direction::Horizontal] {
            assert_eq!(sobel_edges(&flat, dir, 0.0).count_true(), 0);
        }
        let step = GrayImage::from_fn(8, 6, |x, _| if x >= 4 { 1.0 } else { 0.0 });
        let v = sobel_edges(&step, Direction::Vertical, 0.1);
        for y in 0..6 {
            for x in 0..8 {
                // the kernel straddles the step at columns 3 and 4, rows 1..=4
                let expected = (x == 3 || x == 4) && (1..5).contains(&y);
                assert_eq!(v.get(x, y), expected, "({x},{y})");
            }
        }
        assert_eq!(sobel_edges(&step, Direction::Horizontal, 0.1).count_true(), 0);
    }

    #[test]
    fn sobel_small_image_is_empty() {
        let img = GrayImage::from_fn(2, 10, |x, _| x as f32);
        assert_eq!(sobel_edges(&img, Direction::Vertical, 0.0).count_true(), 0);
    }

    #[test]
    fn sobel_unit_step_magnitude_is_half() {
        let step = GrayImage::from_fn(6, 3, |x, _| if x >= 3 { 1.0 } else { 0.0 });
        assert_eq!(sobel_at(&step, Direction::Vertical, 2, 1), 0.5);
        assert_eq!(sobel_at(&step, Direction::Vertical, 3, 1), 0.5);
        assert_eq!(sobel_edges(&step, Direction::Vertical, 0.5).count_true(), 0);
        assert_eq!(sobel_edges(&step, Direction::Vertical, 0.49).count_true(), 2);
    }

    #[test]
    fn hough_counts() {
        let e = BinaryImage::empty(5, 4);
        assert_eq!(hough_1d(&e, Direction::Vertical), vec![0; 5]);
        let mut data = vec![false; 20];
        for y in 0..4 {
            data[y * 5 + 2] = true;
        }
        let e = BinaryImage::new(5, 4, data).unwrap();
        assert_eq!(hough_1d(&e, Direction::Vertical), vec![0, 0, 4, 0, 0]);
        assert_eq!(hough_1d(&e, Direction::Horizontal), vec![1; 4]);
    }

    #[test]
    fn intersections() {
        let a = Rect::new(0, 0, 10, 10);
        assert_eq!(intersect(&a, &a), Some(a));
        assert_eq!(intersect(&Rect::new(0, 0, 5, 5), &Rect::new(5, 0, 5, 5)), None);
        assert_eq!(intersect(&a, &Rect::new(5, 5, 10, 10)), Some(Rect::new(5, 5, 5, 5)));
    }

    #[test]
    fn crop_and_transpose() {
        let img = GrayImage::from_fn(4, 3, |x, y| (x + 4 * y) as f32 / 11.0);
        let c = img.crop(Rect::new(1, 1, 2, 2));
        assert_eq!(c.width(), 2);
        assert_eq!(c.get(0, 0), img.get(1, 1));
        assert_eq!(c.get(1, 1), img.get(2, 2));
        let t = img.transpose();
        assert_eq!((t.width(), t.height()), (3, 4));
        assert_eq!(t.get(2, 1), img.get(1, 2));
        assert_eq!(t.transpose(), img);
    }
}
