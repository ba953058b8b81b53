//! Seeded synthetic compound figures with exact ground truth.
//!
//! Three compound layouts (white gutters, dark panel frames, panels stitched
//! edge to edge with contrasting brightness) plus single figures. Panels are
//! either Gaussian noise around a panel mean (stands in for photographs) or
//! line charts on white (stands in for illustrations).

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use super::{Corpus, CorpusEntry};
use crate::error::{Error, Result};
use crate::eval::FigureAnnotation;
use crate::illustration::MetaLabel;
use crate::raster::{GrayImage, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparatorKind {
    WhiteBand,
    BorderEdge,
    Stitched,
    /// A single, non-compound figure.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentKind {
    NoisePanel,
    ChartPanel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub count: usize,
    /// Inclusive ranges.
    pub grid_rows: [usize; 2],
    pub grid_cols: [usize; 2],
    /// Each figure draws its layout uniformly from this list.
    #[serde(alias = "separator_kind", deserialize_with = "one_or_many")]
    pub separator_kinds: Vec<SeparatorKind>,
    /// Gutter width range for white-band layouts, pixels.
    pub band_width: [u32; 2],
    /// Probability that a panel (or single figure) is a chart.
    pub chart_fraction: f64,
    /// Probability that a panel gets a small dark label mark in the
    /// adjacent gutter.
    pub markup_noise: f64,
    pub image_width: [u32; 2],
    pub image_height: [u32; 2],
    /// Probability that a single noise figure has a full-width brightness
    /// step (a horizon-like edge that is not a panel boundary).
    pub single_step_prob: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            count: 100,
            grid_rows: [1, 3],
            grid_cols: [1, 3],
            separator_kinds: vec![SeparatorKind::WhiteBand],
            band_width: [8, 30],
            chart_fraction: 0.5,
            markup_noise: 0.0,
            image_width: [400, 800],
            image_height: [300, 700],
            single_step_prob: 0.0,
            seed: 0,
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<SeparatorKind>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(SeparatorKind),
        Many(Vec<SeparatorKind>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(k) => vec![k],
        OneOrMany::Many(v) => v,
    })
}

/// Smallest panel side the generator will produce.
const MIN_PANEL: u32 = 40;
const MAX_MARGIN: u32 = 15;

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if self.count == 0 {
            return bad("count must be at least 1".into());
        }
        if self.separator_kinds.is_empty() {
            return bad("separator_kinds is empty".into());
        }
        for (name, [lo, hi]) in [("grid_rows", self.grid_rows), ("grid_cols", self.grid_cols)] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} must be a range [min, max] with min >= 1"));
            }
        }
        let needs_grid = self.separator_kinds.iter().any(|&k| k != SeparatorKind::None);
        if needs_grid && self.grid_rows[1] * self.grid_cols[1] < 2 {
            return bad("compound layouts need a grid of at least two panels".into());
        }
        for (name, [lo, hi]) in [
            ("band_width", self.band_width),
            ("image_width", self.image_width),
            ("image_height", self.image_height),
        ] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} must be a range [min, max] with min >= 1"));
            }
        }
        for (name, p) in [
            ("chart_fraction", self.chart_fraction),
            ("markup_noise", self.markup_noise),
            ("single_step_prob", self.single_step_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} outside [0, 1]"));
            }
        }
        let need = |n: usize| {
            n as u32 * MIN_PANEL + (n as u32 - 1) * self.band_width[1] + 2 * MAX_MARGIN
        };
        if needs_grid
            && (self.image_width[0] < need(self.grid_cols[1]) || self.image_height[0] < need(self.grid_rows[1]))
        {
            return bad("minimum image size too small for the largest grid".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthFigure {
    pub image_id: String,
    pub kind: SeparatorKind,
    pub image: GrayImage,
    pub annotation: FigureAnnotation,
    /// Content of each ground-truth rect, in rect order.
    pub contents: Vec<ContentKind>,
    /// Meta label of each rect: charts are illustrations.
    pub labels: Vec<MetaLabel>,
}

pub fn image_id(index: usize) -> String {
    format!("synth-{index:05}")
}

/// All figures of `spec`, generated in parallel. Figure `i` depends only on
/// `(seed, i)`.
pub fn synth_figures(spec: &SynthSpec) -> Result<Vec<SynthFigure>> {
    spec.validate()?;
    Ok((0..spec.count).into_par_iter().map(|i| generate_figure(spec, i)).collect())
}

/// Generates the corpus into `out_dir`: `images/*.png`, `corpus.jsonl` and
/// `annotations.json`.
pub fn synth_generate(spec: &SynthSpec, out_dir: &Path) -> Result<Corpus> {
    let figures = synth_figures(spec)?;
    fs::create_dir_all(out_dir.join("images"))?;
    figures.par_iter().try_for_each(|f| -> Result<()> {
        let path = out_dir.join("images").join(format!("{}.png", f.image_id));
        f.image.to_luma8().save_with_format(&path, image::ImageFormat::Png)?;
        Ok(())
    })?;
    let mut corpus = Corpus::new(out_dir);
    corpus.entries = figures
        .into_iter()
        .map(|f| CorpusEntry {
            image_path: Path::new("images").join(format!("{}.png", f.image_id)),
            image_id: f.image_id,
            annotation: f.annotation,
            labels: Some(f.labels),
        })
        .collect();
    corpus.save()?;
    super::save_annotations(&corpus.annotations(), &out_dir.join("annotations.json"))?;
    Ok(corpus)
}

struct Canvas {
    w: usize,
    h: usize,
    data: Vec<f32>,
}

impl Canvas {
    fn new(w: usize, h: usize) -> Self {
        Self { w, h, data: vec![1.0; w * h] }
    }

    fn set(&mut self, x: usize, y: usize, v: f64) {
        if x < self.w && y < self.h {
            // 8-bit quantized so PNG round trips are exact
            self.data[y * self.w + x] = f32::from((v.clamp(0.0, 1.0) * 255.0).round() as u8) / 255.0;
        }
    }

    fn fill(&mut self, r: Rect, v: f64) {
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                self.set(x as usize, y as usize, v);
            }
        }
    }

    fn into_image(self) -> GrayImage {
        GrayImage::new(self.w, self.h, self.data).expect("canvas values are in range")
    }
}

fn range_u32(rng: &mut ChaCha8Rng, [lo, hi]: [u32; 2]) -> u32 {
    rng.random_range(lo..=hi)
}

/// Splits `total` into `n` positive parts with mildly uneven proportions.
fn split_lengths(rng: &mut ChaCha8Rng, total: u32, n: usize) -> Vec<u32> {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.75..1.25)).collect();
    let sum: f64 = weights.iter().sum();
    let mut out: Vec<u32> = weights.iter().map(|w| (w / sum * total as f64).floor() as u32).collect();
    let used: u32 = out.iter().sum();
    out[n - 1] += total - used;
    out
}

fn draw_noise(canvas: &mut Canvas, rng: &mut ChaCha8Rng, r: Rect, mean: f64) {
    let sigma = rng.random_range(0.06..0.12);
    let normal = Normal::new(mean, sigma).expect("positive sigma");
    for y in r.y..r.bottom() {
        for x in r.x..r.right() {
            let v = normal.sample(rng);
            canvas.set(x as usize, y as usize, v);
        }
    }
}

/// Noise whose mean jumps at a random row, spanning the full width.
fn draw_stepped_noise(canvas: &mut Canvas, rng: &mut ChaCha8Rng, r: Rect) {
    let split = r.y + (r.h as f64 * rng.random_range(0.35..0.65)) as u32;
    let (a, b) = if rng.random_bool(0.5) { (0.25, 0.7) } else { (0.7, 0.25) };
    let (da, db) = (rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
    draw_noise(canvas, rng, Rect::new(r.x, r.y, r.w, split - r.y), a + da);
    draw_noise(canvas, rng, Rect::new(r.x, split, r.w, r.bottom() - split), b + db);
}

fn line(canvas: &mut Canvas, x0: u32, y0: u32, x1: u32, y1: u32, thick: u32, v: f64) {
    for y in y0..=y1 {
        for x in x0..=x1 {
            for t in 0..thick {
                if x0 == x1 {
                    canvas.set((x + t) as usize, y as usize, v);
                } else {
                    canvas.set(x as usize, (y + t) as usize, v);
                }
            }
        }
    }
}

/// Line chart on white: L-shaped axes with ticks crossing them, and
/// polylines spanning the full plot width, so the plot has no internal
/// all-white rows or columns.
fn draw_chart(canvas: &mut Canvas, rng: &mut ChaCha8Rng, r: Rect) {
    canvas.fill(r, 1.0);
    let frac = |rng: &mut ChaCha8Rng, len: u32, lo: f64, hi: f64| ((len as f64 * rng.random_range(lo..hi)) as u32).max(4);
    let x0 = r.x + frac(rng, r.w, 0.04, 0.08);
    let x1 = r.right() - frac(rng, r.w, 0.02, 0.05);
    let y0 = r.y + frac(rng, r.h, 0.02, 0.05);
    let y1 = r.bottom() - frac(rng, r.h, 0.04, 0.08);
    let axis = rng.random_range(0.0..0.25);
    let thick = rng.random_range(1..=2);
    line(canvas, x0, y0, x0, y1, thick, axis);
    line(canvas, x0, y1, x1, y1, thick, axis);

    let ticks = rng.random_range(4..=8);
    for i in 1..=ticks {
        let tx = x0 + (x1 - x0) * i / ticks;
        line(canvas, tx, y1 - 2, tx, y1 + 3, 1, axis);
        let ty = y1 - (y1 - y0) * i / ticks;
        line(canvas, x0 - 3, ty, x0 + 2, ty, 1, axis);
    }

    let series = rng.random_range(1..=3);
    let (lo, hi) = (y0 + 2, y1 - 2);
    for _ in 0..series {
        let ink = rng.random_range(0.05..0.5);
        let knots = rng.random_range(4..=10);
        let ys: Vec<f64> = (0..=knots).map(|_| rng.random_range(lo as f64..hi as f64)).collect();
        let xa = x0 + thick;
        let span = (x1 - xa).max(1) as f64;
        let mut prev: Option<u32> = None;
        for x in xa..=x1 {
            let t = (x - xa) as f64 / span * knots as f64;
            let k = (t.floor() as usize).min(knots - 1);
            let y = (ys[k] + (ys[k + 1] - ys[k]) * (t - k as f64)).round() as u32;
            let (a, b) = match prev {
                Some(p) => (p.min(y), p.max(y)),
                None => (y, y),
            };
            for yy in a..=b {
                canvas.set(x as usize, yy as usize, ink);
            }
            prev = Some(y);
        }
    }
}

/// Small speckled mark (a stand-in for a panel letter) inside `area`.
fn draw_mark(canvas: &mut Canvas, rng: &mut ChaCha8Rng, area: Rect) {
    for y in area.y..area.bottom() {
        for x in area.x..area.right() {
            if rng.random_bool(0.55) {
                canvas.set(x as usize, y as usize, rng.random_range(0.0..0.3));
            }
        }
    }
}

fn pick_grid(rng: &mut ChaCha8Rng, spec: &SynthSpec) -> (usize, usize) {
    loop {
        let rows = rng.random_range(spec.grid_rows[0]..=spec.grid_rows[1]);
        let cols = rng.random_range(spec.grid_cols[0]..=spec.grid_cols[1]);
        if rows * cols >= 2 {
            return (rows, cols);
        }
    }
}

fn content_kind(rng: &mut ChaCha8Rng, spec: &SynthSpec) -> ContentKind {
    if rng.random_bool(spec.chart_fraction) {
        ContentKind::ChartPanel
    } else {
        ContentKind::NoisePanel
    }
}

fn label_of(c: ContentKind) -> MetaLabel {
    match c {
        ContentKind::ChartPanel => MetaLabel::Illustration,
        ContentKind::NoisePanel => MetaLabel::NonIllustration,
    }
}

pub fn generate_figure(spec: &SynthSpec, index: usize) -> SynthFigure {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let rng = &mut rng;
    let kind = spec.separator_kinds[rng.random_range(0..spec.separator_kinds.len())];
    let w = range_u32(rng, spec.image_width);
    let h = range_u32(rng, spec.image_height);
    let mut canvas = Canvas::new(w as usize, h as usize);
    let mut rects = Vec::new();
    let mut contents = Vec::new();

    match kind {
        SeparatorKind::None => {
            let full = Rect::new(0, 0, w, h);
            let c = content_kind(rng, spec);
            match c {
                ContentKind::ChartPanel => draw_chart(&mut canvas, rng, full),
                ContentKind::NoisePanel if rng.random_bool(spec.single_step_prob) => {
                    draw_stepped_noise(&mut canvas, rng, full)
                }
                ContentKind::NoisePanel => {
                    let mean = rng.random_range(0.2..0.8);
                    draw_noise(&mut canvas, rng, full, mean)
                }
            }
            rects.push(full);
            contents.push(c);
        }
        SeparatorKind::WhiteBand => {
            let m: [u32; 4] = std::array::from_fn(|_| rng.random_range(0..=MAX_MARGIN));
            let (iw, ih) = (w - m[0] - m[1], h - m[2] - m[3]);
            let (rows, _) = pick_grid(rng, spec);
            let row_gutters: Vec<u32> = (1..rows).map(|_| range_u32(rng, spec.band_width)).collect();
            let heights = split_lengths(rng, ih - row_gutters.iter().sum::<u32>(), rows);
            let mut y = m[2];
            for (ri, &rh) in heights.iter().enumerate() {
                let mut cols = rng.random_range(spec.grid_cols[0]..=spec.grid_cols[1]);
                if rows == 1 && cols < 2 {
                    cols = 2;
                }
                let col_gutters: Vec<u32> = (1..cols).map(|_| range_u32(rng, spec.band_width)).collect();
                let widths = split_lengths(rng, iw - col_gutters.iter().sum::<u32>(), cols);
                let mut x = m[0];
                for (ci, &cw) in widths.iter().enumerate() {
                    let r = Rect::new(x, y, cw, rh);
                    let c = content_kind(rng, spec);
                    match c {
                        ContentKind::ChartPanel => draw_chart(&mut canvas, rng, r),
                        ContentKind::NoisePanel => {
                            let mean = rng.random_range(0.2..0.75);
                            draw_noise(&mut canvas, rng, r, mean)
                        }
                    }
                    if rng.random_bool(spec.markup_noise) {
                        // in the gutter left of the panel, else above it
                        let mark = if ci > 0 && col_gutters[ci - 1] >= 6 {
                            let gw = (col_gutters[ci - 1] / 2 - 1).min(5);
                            Some(Rect::new(x - col_gutters[ci - 1], y, gw, 7.min(rh)))
                        } else if ri > 0 && row_gutters[ri - 1] >= 6 {
                            let gh = (row_gutters[ri - 1] / 2 - 1).min(7);
                            Some(Rect::new(x, y - row_gutters[ri - 1], 5.min(cw), gh))
                        } else {
                            None
                        };
                        if let Some(area) = mark {
                            draw_mark(&mut canvas, rng, area);
                        }
                    }
                    rects.push(r);
                    contents.push(c);
                    x += cw + col_gutters.get(ci).copied().unwrap_or(0);
                }
                y += rh + row_gutters.get(ri).copied().unwrap_or(0);
            }
        }
        SeparatorKind::BorderEdge | SeparatorKind::Stitched => {
            let m = if kind == SeparatorKind::BorderEdge { rng.random_range(0..=MAX_MARGIN) } else { 0 };
            let (rows, cols) = pick_grid(rng, spec);
            let heights = split_lengths(rng, h - 2 * m, rows);
            let widths = split_lengths(rng, w - 2 * m, cols);
            let flip = rng.random_bool(0.5) as usize;
            let mut y = m;
            for (ri, &rh) in heights.iter().enumerate() {
                let mut x = m;
                for (ci, &cw) in widths.iter().enumerate() {
                    let r = Rect::new(x, y, cw, rh);
                    if kind == SeparatorKind::Stitched {
                        let mean = if (ri + ci + flip).is_multiple_of(2) {
                            rng.random_range(0.15..0.4)
                        } else {
                            rng.random_range(0.6..0.85)
                        };
                        draw_noise(&mut canvas, rng, r, mean);
                    } else {
                        let mean = rng.random_range(0.3..0.8);
                        draw_noise(&mut canvas, rng, r, mean);
                        let t = rng.random_range(1..=2);
                        let ink = rng.random_range(0.0..0.15);
                        canvas.fill(Rect::new(r.x, r.y, r.w, t), ink);
                        canvas.fill(Rect::new(r.x, r.bottom() - t, r.w, t), ink);
                        canvas.fill(Rect::new(r.x, r.y, t, r.h), ink);
                        canvas.fill(Rect::new(r.right() - t, r.y, t, r.h), ink);
                    }
                    rects.push(r);
                    contents.push(ContentKind::NoisePanel);
                    x += cw;
                }
                y += rh;
            }
        }
    }

    let id = image_id(index);
    SynthFigure {
        annotation: FigureAnnotation {
            image_id: id.clone(),
            is_compound: kind != SeparatorKind::None,
            width: w,
            height: h,
            rects,
        },
        labels: contents.iter().map(|&c| label_of(c)).collect(),
        image_id: id,
        kind,
        image: canvas.into_image(),
        contents,
    }
}
