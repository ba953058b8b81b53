//! Separation scoring: the association-based per-figure accuracy and the
//! precision/recall protocol with exclusive overlaps, plus the convention
//! for scoring classification + separation chains.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{overlap_area, Rect};

/// Minimum (exclusive) detected-area overlap for an association.
pub const ASSOCIATION_OVERLAP: f64 = 2.0 / 3.0;
/// Minimum (exclusive) ground-truth-area overlap for a true positive.
pub const TP_OVERLAP: f64 = 0.75;
/// Every other ground-truth subfigure must be overlapped less than this.
pub const TP_EXCLUSIVITY: f64 = 0.05;

/// Fraction of `g` covered by `f`.
pub fn overlap_g(g: &Rect, f: &Rect) -> f64 {
    overlap_area(g, f) as f64 / g.area().max(1) as f64
}

/// Fraction of `f` covered by `g`.
pub fn overlap_f(g: &Rect, f: &Rect) -> f64 {
    overlap_area(g, f) as f64 / f.area().max(1) as f64
}

/// Number of greedy ground-truth → detection associations. Ground truth is
/// visited in order; each takes the free detection with the largest
/// detected-area overlap (first on ties) if that overlap exceeds 2/3.
pub fn imageclef_associations(gt: &[Rect], det: &[Rect]) -> usize {
    let mut used = vec![false; det.len()];
    let mut count = 0;
    for g in gt {
        let mut best: Option<(usize, f64)> = None;
        for (j, f) in det.iter().enumerate() {
            if used[j] {
                continue;
            }
            let r = overlap_f(g, f);
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((j, r));
            }
        }
        if let Some((j, r)) = best {
            if r > ASSOCIATION_OVERLAP {
                used[j] = true;
                count += 1;
            }
        }
    }
    count
}

/// Per-figure accuracy `C / max(N_G, N_D)`; zero without detections.
pub fn imageclef_score(gt: &[Rect], det: &[Rect]) -> f64 {
    let denom = gt.len().max(det.len());
    if det.is_empty() || denom == 0 {
        return 0.0;
    }
    imageclef_associations(gt, det) as f64 / denom as f64
}

/// Detections that cover more than 75 % of exactly one ground-truth
/// subfigure and less than 5 % of every other one.
pub fn nlm_true_positives(gt: &[Rect], det: &[Rect]) -> usize {
    det.iter()
        .filter(|f| {
            let ratios: Vec<f64> = gt.iter().map(|g| overlap_g(g, f)).collect();
            let hits = ratios.iter().filter(|&&r| r > TP_OVERLAP).count();
            hits == 1 && ratios.iter().all(|&r| r > TP_OVERLAP || r < TP_EXCLUSIVITY)
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlmAggregate {
    pub ground_truth: usize,
    pub detected: usize,
    pub true_positives: usize,
    pub precision_pct: f64,
    pub recall_pct: f64,
    pub f1_pct: f64,
    /// Set when there were no detections and precision is reported as 0.
    pub precision_undefined: bool,
}

pub fn nlm_aggregate(g: usize, d: usize, t: usize) -> NlmAggregate {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = ratio(t, d);
    let r = ratio(t, g);
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    NlmAggregate {
        ground_truth: g,
        detected: d,
        true_positives: t,
        precision_pct: 100.0 * p,
        recall_pct: 100.0 * r,
        f1_pct: 100.0 * f1,
        precision_undefined: d == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    ImageClef,
    Nlm,
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "imageclef" => Ok(Protocol::ImageClef),
            "nlm" => Ok(Protocol::Nlm),
            _ => Err(Error::Domain(format!("unknown protocol {s:?} (imageclef|nlm)"))),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::ImageClef => "imageclef",
            Protocol::Nlm => "nlm",
        })
    }
}

/// Subfigure boxes of one image, either ground truth or a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureAnnotation {
    pub image_id: String,
    pub is_compound: bool,
    pub width: u32,
    pub height: u32,
    pub rects: Vec<Rect>,
}

impl FigureAnnotation {
    pub fn full_image(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    /// Rects under the chain convention: a non-compound figure, or one with
    /// a single subfigure, is one box covering the whole image.
    pub fn chain_rects(&self) -> Vec<Rect> {
        if !self.is_compound || self.rects.len() <= 1 {
            vec![self.full_image()]
        } else {
            self.rects.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub image_id: String,
    pub ground_truth: usize,
    pub detected: usize,
    /// Associations (association protocol) or true positives (NLM).
    pub matched: usize,
    /// Per-figure accuracy; only meaningful for the association protocol.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "lowercase")]
pub enum Aggregate {
    ImageClef { images: usize, accuracy_pct: f64 },
    Nlm(NlmAggregate),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub per_image: Vec<ImageScore>,
    pub aggregate: Aggregate,
    /// Parameters that produced the predictions, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

impl EvalReport {
    /// Builds the aggregate from per-image scores (sorted by image id).
    pub fn from_scores(protocol: Protocol, mut per_image: Vec<ImageScore>) -> Self {
        per_image.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        let aggregate = match protocol {
            Protocol::ImageClef => {
                let n = per_image.len();
                let sum: f64 = per_image.iter().map(|s| s.accuracy).sum();
                let accuracy_pct = if n == 0 { 0.0 } else { 100.0 * sum / n as f64 };
                Aggregate::ImageClef { images: n, accuracy_pct }
            }
            Protocol::Nlm => {
                let g = per_image.iter().map(|s| s.ground_truth).sum();
                let d = per_image.iter().map(|s| s.detected).sum();
                let t = per_image.iter().map(|s| s.matched).sum();
                Aggregate::Nlm(nlm_aggregate(g, d, t))
            }
        };
        Self { protocol, per_image, aggregate, params: None }
    }

    /// Headline number: accuracy % or F1 %.
    pub fn headline_pct(&self) -> f64 {
        match &self.aggregate {
            Aggregate::ImageClef { accuracy_pct, .. } => *accuracy_pct,
            Aggregate::Nlm(a) => a.f1_pct,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        match &self.aggregate {
            Aggregate::ImageClef { images, accuracy_pct } => {
                let _ = writeln!(s, "protocol  images  accuracy%");
                let _ = writeln!(s, "imageclef {images:>6}  {accuracy_pct:>9.1}");
            }
            Aggregate::Nlm(a) => {
                let _ = writeln!(s, "protocol      G      D      T  precision%  recall%    F1%");
                let _ = writeln!(
                    s,
                    "nlm      {:>6} {:>6} {:>6}  {:>10.1} {:>8.1} {:>6.1}",
                    a.ground_truth, a.detected, a.true_positives, a.precision_pct, a.recall_pct, a.f1_pct
                );
                if a.precision_undefined {
                    let _ = writeln!(s, "note: no detections, precision reported as 0");
                }
            }
        }
        s
    }
}

pub fn score_image(protocol: Protocol, image_id: &str, gt: &[Rect], det: &[Rect]) -> ImageScore {
    let (matched, accuracy) = match protocol {
        Protocol::ImageClef => {
            let c = imageclef_associations(gt, det);
            (c, imageclef_score(gt, det))
        }
        Protocol::Nlm => {
            let t = nlm_true_positives(gt, det);
            (t, if det.is_empty() { 0.0 } else { t as f64 / gt.len().max(det.len()) as f64 })
        }
    };
    ImageScore {
        image_id: image_id.to_string(),
        ground_truth: gt.len(),
        detected: det.len(),
        matched,
        accuracy,
    }
}

fn align<'a>(
    annotations: &'a [FigureAnnotation],
    outputs: &'a [FigureAnnotation],
) -> Result<Vec<(&'a FigureAnnotation, &'a FigureAnnotation)>> {
    let by_id: HashMap<&str, &FigureAnnotation> =
        outputs.iter().map(|o| (o.image_id.as_str(), o)).collect();
    let mut seen = BTreeMap::new();
    for a in annotations {
        let o = by_id
            .get(a.image_id.as_str())
            .ok_or_else(|| Error::Alignment(format!("no prediction for image {:?}", a.image_id)))?;
        if seen.insert(a.image_id.as_str(), (a, *o)).is_some() {
            return Err(Error::Alignment(format!("duplicate ground truth for image {:?}", a.image_id)));
        }
    }
    if outputs.len() != annotations.len() {
        let extra = outputs.iter().find(|o| !seen.contains_key(o.image_id.as_str()));
        if let Some(o) = extra {
            return Err(Error::Alignment(format!("prediction for unknown image {:?}", o.image_id)));
        }
    }
    Ok(seen.into_values().collect())
}

/// Scores predictions against ground truth using the rects exactly as given.
pub fn evaluate(
    annotations: &[FigureAnnotation],
    outputs: &[FigureAnnotation],
    protocol: Protocol,
) -> Result<EvalReport> {
    let scores = align(annotations, outputs)?
        .into_iter()
        .map(|(a, o)| score_image(protocol, &a.image_id, &a.rects, &o.rects))
        .collect();
    Ok(EvalReport::from_scores(protocol, scores))
}

/// Scores a classification + separation chain: non-compound figures and
/// single-subfigure outputs count as one full-image box on both sides.
pub fn chain_evaluate(
    annotations: &[FigureAnnotation],
    outputs: &[FigureAnnotation],
    protocol: Protocol,
) -> Result<EvalReport> {
    let scores = align(annotations, outputs)?
        .into_iter()
        .map(|(a, o)| score_image(protocol, &a.image_id, &a.chain_rects(), &o.chain_rects()))
        .collect();
    Ok(EvalReport::from_scores(protocol, scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: u32, y: u32, w: u32, h: u32) -> Rect {
        Rect::new(x, y, w, h)
    }

    #[test]
    fn overlaps() {
        let g = r(0, 0, 10, 10);
        assert_eq!(overlap_g(&g, &g), 1.0);
        assert_eq!(overlap_g(&g, &r(20, 0, 5, 5)), 0.0);
        assert_eq!(overlap_g(&g, &r(0, 0, 5, 10)), 0.5);
        assert_eq!(overlap_f(&g, &r(2, 2, 3, 3)), 1.0);
        assert_eq!(overlap_f(&r(0, 0, 5, 10), &g), 0.5);
    }

    #[test]
    fn three_panel_configuration() {
        let gt = [r(0, 0, 100, 100), r(100, 0, 100, 100), r(200, 0, 100, 100)];
        let det = [r(50, 0, 100, 100), r(200, 0, 50, 100), r(250, 0, 50, 100)];
        assert!((imageclef_score(&gt, &det) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(nlm_true_positives(&gt, &det), 0);
    }

    #[test]
    fn merged_detection_pair() {
        let det = [r(0, 0, 200, 100)];
        assert_eq!(imageclef_score(&[r(0, 0, 100, 100), r(100, 0, 100, 100)], &det), 0.0);
        assert_eq!(imageclef_score(&[r(0, 0, 150, 100), r(150, 0, 50, 100)], &det), 0.5);
    }

    #[test]
    fn exact_and_empty() {
        let gt = [r(0, 0, 10, 10), r(10, 0, 10, 10)];
        assert_eq!(imageclef_score(&gt, &gt), 1.0);
        assert_eq!(nlm_true_positives(&gt, &gt), 2);
        assert_eq!(imageclef_score(&gt, &[]), 0.0);
        // one box straddling two subfigures at 50 % each
        assert_eq!(nlm_true_positives(&gt, &[r(5, 0, 10, 10)]), 0);
    }

    #[test]
    fn aggregate_table_rows() {
        let a = nlm_aggregate(1656, 1550, 1314);
        assert!((a.precision_pct - 84.8).abs() < 0.05);
        // 1314/1656 = 79.348 %, which the published table lists as 79.4
        assert!((a.recall_pct - 100.0 * 1314.0 / 1656.0).abs() < 1e-9);
        assert!((a.recall_pct - 79.4).abs() < 0.06);
        assert!((a.f1_pct - 82.0).abs() < 0.05);
        let b = nlm_aggregate(1656, 1584, 1297);
        assert!((b.precision_pct - 81.9).abs() < 0.05);
        assert!((b.recall_pct - 78.3).abs() < 0.05);
        assert!((b.f1_pct - 80.1).abs() < 0.05);
        let c = nlm_aggregate(7, 7, 7);
        assert_eq!((c.precision_pct, c.recall_pct, c.f1_pct), (100.0, 100.0, 100.0));
        let z = nlm_aggregate(5, 0, 0);
        assert!(z.precision_undefined);
        assert_eq!(z.f1_pct, 0.0);
    }

    fn ann(id: &str, compound: bool, rects: Vec<Rect>) -> FigureAnnotation {
        FigureAnnotation { image_id: id.into(), is_compound: compound, width: 200, height: 100, rects }
    }

    #[test]
    fn chain_convention() {
        let gt = vec![ann("a", false, vec![r(0, 0, 200, 100)])];
        let pred = vec![ann("a", false, vec![])];
        assert_eq!(chain_evaluate(&gt, &pred, Protocol::ImageClef).unwrap().headline_pct(), 100.0);

        let split = vec![ann("a", true, vec![r(0, 0, 100, 100), r(100, 0, 100, 100)])];
        let rep = chain_evaluate(&gt, &split, Protocol::ImageClef).unwrap();
        assert!((rep.per_image[0].accuracy - 0.5).abs() < 1e-12);

        let gt2 = vec![ann("b", true, vec![r(0, 0, 150, 100), r(150, 0, 50, 100)])];
        let pred2 = vec![ann("b", false, vec![])];
        let rep = chain_evaluate(&gt2, &pred2, Protocol::ImageClef).unwrap();
        assert!((rep.per_image[0].accuracy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn alignment_errors() {
        let gt = vec![ann("a", false, vec![r(0, 0, 200, 100)])];
        let pred = vec![ann("b", false, vec![])];
        assert!(matches!(chain_evaluate(&gt, &pred, Protocol::Nlm), Err(Error::Alignment(_))));
    }

    #[test]
    fn nlm_identical_is_perfect() {
        let gt = vec![
            ann("a", true, vec![r(0, 0, 100, 100), r(100, 0, 100, 100)]),
            ann("b", true, vec![r(0, 0, 200, 50), r(0, 50, 200, 50)]),
        ];
        let rep = evaluate(&gt, &gt, Protocol::Nlm).unwrap();
        assert_eq!(rep.headline_pct(), 100.0);
        let json = serde_json::to_string(&rep).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
    }
}
