//! Recursive compound figure separation: strip homogeneous margins, look for
//! separators in both directions, split along the more regular set and
//! recurse on the parts.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::band_sep::detect_band_separators;
use crate::edge_sep::detect_edge_separators;
use crate::error::{Error, Result};
use crate::illustration::{MappingStrategy, Router, Routing};
use crate::raster::{Direction, GrayImage, Rect};
use crate::separator::{gap_variance, SeparatorLine};

/// Intensity range below which a margin line counts as homogeneous.
pub const HOMOGENEITY_TOLERANCE: f32 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfsParams {
    pub classifier_model: MappingStrategy,
    pub decision_threshold: f64,
    pub mindim: usize,
    pub elim_area: f64,
    pub edge_maxdepth: usize,
    pub edge_sobelthresh: f64,
    pub edge_houghratio_min: f64,
    pub edge_houghratio_base: f64,
    pub edge_maxdistvar: f64,
    pub edge_gapratio: f64,
    pub edge_lenratio: f64,
    pub edge_minseplength: f64,
    pub edge_minborderdist: f64,
    pub band_maxdepth: usize,
    pub band_minsepwidth: f64,
    pub band_maxdistvar: f64,
    pub band_minborderdist: f64,
}

impl Default for CfsParams {
    /// The tuned configuration.
    fn default() -> Self {
        Self {
            classifier_model: MappingStrategy::Greedy,
            decision_threshold: 0.1,
            mindim: 200,
            elim_area: 0.03,
            edge_maxdepth: 10,
            edge_sobelthresh: 0.02,
            edge_houghratio_min: 0.2,
            edge_houghratio_base: 1.5,
            edge_maxdistvar: 0.1,
            edge_gapratio: 0.3,
            edge_lenratio: 0.03,
            edge_minseplength: 0.5,
            edge_minborderdist: 0.05,
            band_maxdepth: 4,
            band_minsepwidth: 0.0001,
            band_maxdistvar: 0.2,
            band_minborderdist: 0.01,
        }
    }
}

impl CfsParams {
    /// Names accepted by [`CfsParams::get`] and [`CfsParams::set`].
    pub const NUMERIC: [&'static str; 16] = [
        "decision_threshold",
        "mindim",
        "elim_area",
        "edge_maxdepth",
        "edge_sobelthresh",
        "edge_houghratio_min",
        "edge_houghratio_base",
        "edge_maxdistvar",
        "edge_gapratio",
        "edge_lenratio",
        "edge_minseplength",
        "edge_minborderdist",
        "band_maxdepth",
        "band_minsepwidth",
        "band_maxdistvar",
        "band_minborderdist",
    ];

    /// The hand-picked starting point used before tuning.
    pub fn initial() -> Self {
        Self {
            classifier_model: MappingStrategy::First,
            decision_threshold: 0.5,
            mindim: 50,
            elim_area: 0.0,
            edge_maxdepth: 10,
            edge_sobelthresh: 0.05,
            edge_houghratio_min: 0.25,
            edge_houghratio_base: 1.2,
            edge_maxdistvar: 0.0001,
            edge_gapratio: 0.2,
            edge_lenratio: 0.05,
            edge_minseplength: 0.7,
            edge_minborderdist: 0.1,
            band_maxdepth: 2,
            band_minsepwidth: 0.03,
            band_maxdistvar: 0.0003,
            band_minborderdist: 0.1,
        }
    }

    /// A named preset: `optimal` (the default) or `initial`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "optimal" | "default" => Ok(Self::default()),
            "initial" => Ok(Self::initial()),
            _ => Err(Error::Domain(format!("unknown parameter preset {name:?} (optimal|initial)"))),
        }
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        Ok(match name {
            "decision_threshold" => self.decision_threshold,
            "mindim" => self.mindim as f64,
            "elim_area" => self.elim_area,
            "edge_maxdepth" => self.edge_maxdepth as f64,
            "edge_sobelthresh" => self.edge_sobelthresh,
            "edge_houghratio_min" => self.edge_houghratio_min,
            "edge_houghratio_base" => self.edge_houghratio_base,
            "edge_maxdistvar" => self.edge_maxdistvar,
            "edge_gapratio" => self.edge_gapratio,
            "edge_lenratio" => self.edge_lenratio,
            "edge_minseplength" => self.edge_minseplength,
            "edge_minborderdist" => self.edge_minborderdist,
            "band_maxdepth" => self.band_maxdepth as f64,
            "band_minsepwidth" => self.band_minsepwidth,
            "band_maxdistvar" => self.band_maxdistvar,
            "band_minborderdist" => self.band_minborderdist,
            _ => return Err(Error::Domain(format!("unknown numeric parameter {name:?}"))),
        })
    }

    /// Sets a numeric parameter; integer parameters are rounded.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Domain(format!("{name} = {value} is not finite")));
        }
        let int = || value.round().max(0.0) as usize;
        match name {
            "decision_threshold" => self.decision_threshold = value,
            "mindim" => self.mindim = int(),
            "elim_area" => self.elim_area = value,
            "edge_maxdepth" => self.edge_maxdepth = int(),
            "edge_sobelthresh" => self.edge_sobelthresh = value,
            "edge_houghratio_min" => self.edge_houghratio_min = value,
            "edge_houghratio_base" => self.edge_houghratio_base = value,
            "edge_maxdistvar" => self.edge_maxdistvar = value,
            "edge_gapratio" => self.edge_gapratio = value,
            "edge_lenratio" => self.edge_lenratio = value,
            "edge_minseplength" => self.edge_minseplength = value,
            "edge_minborderdist" => self.edge_minborderdist = value,
            "band_maxdepth" => self.band_maxdepth = int(),
            "band_minsepwidth" => self.band_minsepwidth = value,
            "band_maxdistvar" => self.band_maxdistvar = value,
            "band_minborderdist" => self.band_minborderdist = value,
            _ => return Err(Error::Domain(format!("unknown numeric parameter {name:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [
            ("decision_threshold", self.decision_threshold),
            ("elim_area", self.elim_area),
            ("edge_sobelthresh", self.edge_sobelthresh),
            ("edge_maxdistvar", self.edge_maxdistvar),
            ("edge_gapratio", self.edge_gapratio),
            ("edge_lenratio", self.edge_lenratio),
            ("edge_minseplength", self.edge_minseplength),
            ("edge_minborderdist", self.edge_minborderdist),
            ("band_minsepwidth", self.band_minsepwidth),
            ("band_maxdistvar", self.band_maxdistvar),
            ("band_minborderdist", self.band_minborderdist),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !(self.edge_houghratio_min > 0.0) {
            return Err(Error::Domain("edge_houghratio_min must be positive".into()));
        }
        if !(self.edge_houghratio_base >= 1.0) {
            return Err(Error::Domain("edge_houghratio_base must be at least 1".into()));
        }
        if self.mindim < 1 || self.edge_maxdepth < 1 || self.band_maxdepth < 1 {
            return Err(Error::Domain("mindim and maximum depths must be at least 1".into()));
        }
        Ok(())
    }

    pub fn max_depth(&self, routing: Routing) -> usize {
        match routing {
            Routing::BandBased => self.band_maxdepth,
            Routing::EdgeBased => self.edge_maxdepth,
        }
    }
}

/// Whether the illustration classifier runs once on the whole image or again
/// on every sub-image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    ClassifyOnce,
    ClassifyPerSubfigure,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "once" | "classify-once" => Ok(Variant::ClassifyOnce),
            "per-subfigure" | "classify-per-subfigure" => Ok(Variant::ClassifyPerSubfigure),
            _ => Err(Error::Domain(format!("unknown variant {s:?} (once|per-subfigure)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SeparateOptions {
    pub variant: Variant,
    /// Added to the recursion depth seen by the edge peak threshold, so a
    /// sub-image can be re-examined with the threshold it had in the tree.
    pub start_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationResult {
    /// Subfigure boxes in image coordinates, in left-to-right,
    /// top-to-bottom recursion order.
    pub rects: Vec<Rect>,
    pub routing: Routing,
    pub depth_reached: usize,
    /// Recursion depth at which each rect became a leaf.
    pub depths: Vec<usize>,
}

fn homogeneous(values: impl Iterator<Item = f32>) -> bool {
    let (lo, hi) = values.fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo <= HOMOGENEITY_TOLERANCE
}

/// Bounding box left after peeling homogeneous rows and columns off every
/// side, or `None` when the whole image is homogeneous margin.
pub fn remove_border_bands(img: &GrayImage) -> Option<Rect> {
    let (mut x0, mut y0, mut x1, mut y1) = (0, 0, img.width(), img.height());
    let col = |x: usize, y0: usize, y1: usize| (y0..y1).map(move |y| img.get(x, y));
    loop {
        if x0 >= x1 || y0 >= y1 {
            return None;
        }
        let before = (x0, y0, x1, y1);
        while y0 < y1 && homogeneous(img.row(y0)[x0..x1].iter().copied()) {
            y0 += 1;
        }
        while y1 > y0 && homogeneous(img.row(y1 - 1)[x0..x1].iter().copied()) {
            y1 -= 1;
        }
        if y0 >= y1 {
            return None;
        }
        while x0 < x1 && homogeneous(col(x0, y0, y1)) {
            x0 += 1;
        }
        while x1 > x0 && homogeneous(col(x1 - 1, y0, y1)) {
            x1 -= 1;
        }
        if before == (x0, y0, x1, y1) {
            break;
        }
    }
    Some(Rect::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32))
}

/// The direction whose separators (with both borders) are more evenly
/// spaced; vertical on ties. `None` when there are no separators at all.
pub fn decide_direction(v_lines: &[SeparatorLine], h_lines: &[SeparatorLine], bounds: Rect) -> Option<Direction> {
    match (v_lines.is_empty(), h_lines.is_empty()) {
        (true, true) => None,
        (false, true) => Some(Direction::Vertical),
        (true, false) => Some(Direction::Horizontal),
        (false, false) => {
            let pos = |ls: &[SeparatorLine]| ls.iter().map(|l| l.position).collect::<Vec<_>>();
            let v = gap_variance(&pos(v_lines), bounds.w as usize);
            let h = gap_variance(&pos(h_lines), bounds.h as usize);
            Some(if h < v { Direction::Horizontal } else { Direction::Vertical })
        }
    }
}

/// Cuts `bounds` at `positions` (relative to `bounds`) into `n + 1` tiles.
/// The separator's own column or row goes to the following tile.
pub fn split(bounds: Rect, positions: &[usize], dir: Direction) -> Result<Vec<Rect>> {
    let extent = match dir {
        Direction::Vertical => bounds.w,
        Direction::Horizontal => bounds.h,
    } as usize;
    let mut cuts = Vec::with_capacity(positions.len() + 2);
    cuts.push(0);
    for &p in positions {
        if p == 0 || p >= extent || p <= *cuts.last().expect("non-empty") {
            return Err(Error::Domain(format!(
                "separator at {p} not strictly inside (0, {extent}) or not increasing"
            )));
        }
        cuts.push(p);
    }
    cuts.push(extent);
    Ok(cuts
        .windows(2)
        .map(|c| {
            let (start, len) = (c[0] as u32, (c[1] - c[0]) as u32);
            match dir {
                Direction::Vertical => Rect::new(bounds.x + start, bounds.y, len, bounds.h),
                Direction::Horizontal => Rect::new(bounds.x, bounds.y + start, bounds.w, len),
            }
        })
        .collect())
}

/// Separator lines of direction `dir` in `img` under `routing`.
pub fn detect_separators(
    img: &GrayImage,
    dir: Direction,
    routing: Routing,
    depth: usize,
    params: &CfsParams,
) -> Vec<SeparatorLine> {
    match routing {
        Routing::BandBased => detect_band_separators(img, dir, params),
        Routing::EdgeBased => detect_edge_separators(img, dir, depth, params),
    }
}

pub fn separate(img: &GrayImage, params: &CfsParams, router: &dyn Router, variant: Variant) -> SeparationResult {
    separate_with(img, params, router, &SeparateOptions { variant, ..Default::default() })
}

pub fn separate_with(
    img: &GrayImage,
    params: &CfsParams,
    router: &dyn Router,
    opts: &SeparateOptions,
) -> SeparationResult {
    let routing = router.route(img);
    let mut run = Run {
        img,
        params,
        router,
        opts,
        min_area: params.elim_area * (img.width() * img.height()) as f64,
        leaves: Vec::new(),
    };
    run.recurse(img.bounds(), 0, routing);
    let mut leaves = run.leaves;
    if leaves.is_empty() {
        leaves.push((img.bounds(), 0));
    }
    let depth_reached = leaves.iter().map(|l| l.1).max().unwrap_or(0);
    let (rects, depths) = leaves.into_iter().unzip();
    SeparationResult { rects, routing, depth_reached, depths }
}

struct Run<'a> {
    img: &'a GrayImage,
    params: &'a CfsParams,
    router: &'a dyn Router,
    opts: &'a SeparateOptions,
    min_area: f64,
    leaves: Vec<(Rect, usize)>,
}

impl Run<'_> {
    fn recurse(&mut self, bounds: Rect, depth: usize, routing: Routing) {
        let sub = self.img.crop(bounds);
        let routing = match self.opts.variant {
            Variant::ClassifyPerSubfigure if depth > 0 => self.router.route(&sub),
            _ => routing,
        };
        let Some(inner) = remove_border_bands(&sub) else { return };
        let abs = inner.offset(bounds.x, bounds.y);
        if (abs.area() as f64) < self.min_area {
            return;
        }
        if depth >= self.params.max_depth(routing) {
            self.leaves.push((abs, depth));
            return;
        }
        let content = sub.crop(inner);
        let detect = |dir: Direction| {
            if content.line_count(dir) < self.params.mindim {
                return Vec::new();
            }
            detect_separators(&content, dir, routing, depth + self.opts.start_depth, self.params)
        };
        let v = detect(Direction::Vertical);
        let h = detect(Direction::Horizontal);
        let Some(dir) = decide_direction(&v, &h, inner) else {
            self.leaves.push((abs, depth));
            return;
        };
        let lines = if dir == Direction::Vertical { v } else { h };
        let positions: Vec<usize> = lines.iter().map(|l| l.position).collect();
        let parts = split(abs, &positions, dir).expect("detectors return sorted interior lines");
        for part in parts {
            self.recurse(part, depth + 1, routing);
        }
    }
}

/// Grayscale copy of `img` with every rect outlined in green.
pub fn overlay(img: &GrayImage, rects: &[Rect]) -> image::RgbImage {
    let luma = img.to_luma8();
    let mut out = image::RgbImage::from_fn(luma.width(), luma.height(), |x, y| {
        let v = luma.get_pixel(x, y).0[0];
        image::Rgb([v, v, v])
    });
    let green = image::Rgb([0, 200, 0]);
    for r in rects.iter().filter(|r| r.is_valid()) {
        let (x1, y1) = (r.right().min(out.width()) - 1, r.bottom().min(out.height()) - 1);
        for x in r.x..=x1 {
            out.put_pixel(x, r.y, green);
            out.put_pixel(x, y1, green);
        }
        for y in r.y..=y1 {
            out.put_pixel(r.x, y, green);
            out.put_pixel(x1, y, green);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::illustration::FixedRouter;

    #[test]
    fn defaults_valid() {
        CfsParams::default().validate().unwrap();
        CfsParams::initial().validate().unwrap();
        let p: CfsParams = serde_json::from_str(r#"{"mindim": 120}"#).unwrap();
        assert_eq!(p.mindim, 120);
        assert_eq!(p.elim_area, 0.03);
    }

    #[test]
    fn get_set_round_trip() {
        let mut p = CfsParams::default();
        for name in CfsParams::NUMERIC {
            let v = p.get(name).unwrap();
            p.set(name, v).unwrap();
        }
        assert_eq!(p, CfsParams::default());
        p.set("mindim", 149.6).unwrap();
        assert_eq!(p.mindim, 150);
        assert!(p.set("classifier_model", 1.0).is_err());
    }

    #[test]
    fn border_bands() {
        assert_eq!(remove_border_bands(&GrayImage::filled(20, 10, 0.7)), None);
        let framed = GrayImage::from_fn(40, 30, |x, y| {
            if (5..35).contains(&x) && (5..25).contains(&y) {
                ((x + y) % 2) as f32
            } else {
                1.0
            }
        });
        assert_eq!(remove_border_bands(&framed), Some(Rect::new(5, 5, 30, 20)));
        let busy = GrayImage::from_fn(9, 7, |x, y| ((x * 3 + y) % 2) as f32);
        assert_eq!(remove_border_bands(&busy), Some(Rect::new(0, 0, 9, 7)));
    }

    #[test]
    fn direction_choice() {
        let b = Rect::new(0, 0, 100, 100);
        let v = |p| SeparatorLine::new(Direction::Vertical, p);
        let h = |p| SeparatorLine::new(Direction::Horizontal, p);
        assert_eq!(decide_direction(&[], &[], b), None);
        assert_eq!(decide_direction(&[], &[h(30)], b), Some(Direction::Horizontal));
        assert_eq!(decide_direction(&[v(50)], &[h(50)], b), Some(Direction::Vertical));
        // gaps .25 x4 (variance 0) vs .1,.1,.8
        assert_eq!(
            decide_direction(&[v(25), v(50), v(75)], &[h(10), h(20)], b),
            Some(Direction::Vertical)
        );
        assert_eq!(decide_direction(&[v(10), v(20)], &[h(50)], b), Some(Direction::Horizontal));
    }

    #[test]
    fn split_examples() {
        let b = Rect::new(10, 5, 100, 40);
        assert_eq!(split(b, &[], Direction::Vertical).unwrap(), vec![b]);
        let two = split(b, &[50], Direction::Vertical).unwrap();
        assert_eq!(two, vec![Rect::new(10, 5, 50, 40), Rect::new(60, 5, 50, 40)]);
        let three = split(Rect::new(0, 0, 90, 10), &[30, 60], Direction::Vertical).unwrap();
        assert_eq!(three.iter().map(|r| r.w).collect::<Vec<_>>(), vec![30, 30, 30]);
        let rows = split(b, &[10], Direction::Horizontal).unwrap();
        assert_eq!(rows, vec![Rect::new(10, 5, 100, 10), Rect::new(10, 15, 100, 30)]);
        assert!(split(b, &[100], Direction::Vertical).is_err());
        assert!(split(b, &[0], Direction::Vertical).is_err());
        assert!(split(b, &[60, 30], Direction::Vertical).is_err());
    }

    fn noise(x: usize, y: usize, seed: usize) -> f32 {
        let h = (x.wrapping_mul(73856093) ^ y.wrapping_mul(19349663) ^ seed.wrapping_mul(83492791)) % 1000;
        0.2 + 0.4 * h as f32 / 1000.0
    }

    #[test]
    fn band_grid_splits() {
        // two 200x240 noise panels separated by a 20 px white gutter
        let img = GrayImage::from_fn(420, 240, |x, y| {
            if (200..220).contains(&x) {
                1.0
            } else {
                noise(x, y, 1)
            }
        });
        let res = separate(&img, &CfsParams::default(), &FixedRouter(Routing::BandBased), Variant::ClassifyOnce);
        assert_eq!(res.rects, vec![Rect::new(0, 0, 200, 240), Rect::new(220, 0, 200, 240)]);
    }

    #[test]
    fn single_noise_image() {
        let img = GrayImage::from_fn(300, 260, |x, y| noise(x, y, 2));
        for routing in [Routing::BandBased, Routing::EdgeBased] {
            let res = separate(&img, &CfsParams::default(), &FixedRouter(routing), Variant::ClassifyOnce);
            assert_eq!(res.rects, vec![img.bounds()]);
        }
    }

    #[test]
    fn edge_grid_splits() {
        // 2x2 panels, each with a 2 px black frame, abutting
        let (pw, ph) = (220, 210);
        let img = GrayImage::from_fn(2 * pw, 2 * ph, |x, y| {
            let (lx, ly) = (x % pw, y % ph);
            if lx < 2 || ly < 2 || lx >= pw - 2 || ly >= ph - 2 {
                0.0
            } else {
                0.4 + noise(x, y, 3)
            }
        });
        let res = separate(&img, &CfsParams::default(), &FixedRouter(Routing::EdgeBased), Variant::ClassifyOnce);
        assert_eq!(res.rects.len(), 4, "{:?}", res.rects);
    }

    #[test]
    fn constant_image_falls_back() {
        let img = GrayImage::filled(300, 300, 1.0);
        let res = separate(&img, &CfsParams::default(), &FixedRouter(Routing::BandBased), Variant::ClassifyOnce);
        assert_eq!(res.rects, vec![img.bounds()]);
    }

    #[test]
    fn overlay_marks_boundaries() {
        let img = GrayImage::filled(10, 8, 1.0);
        let out = overlay(&img, &[Rect::new(2, 2, 4, 3)]);
        assert_eq!(out.get_pixel(2, 2).0, [0, 200, 0]);
        assert_eq!(out.get_pixel(5, 4).0, [0, 200, 0]);
        assert_eq!(out.get_pixel(3, 3).0, [255, 255, 255]);
    }
}
