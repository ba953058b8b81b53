//! Illustration classifier: decides whether a compound image is separated
//! with the band-based or the edge-based separator detector.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::{Classifier, ModelFile, ModelMetadata};
use crate::raster::GrayImage;

/// Which separator detector to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Routing {
    BandBased,
    EdgeBased,
}

impl FromStr for Routing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "band" | "band_based" => Ok(Routing::BandBased),
            "edge" | "edge_based" => Ok(Routing::EdgeBased),
            _ => Err(Error::Domain(format!("unknown routing {s:?} (band|edge)"))),
        }
    }
}

/// Chooses a separator detector for an image.
pub trait Router: Send + Sync {
    fn route(&self, img: &GrayImage) -> Routing;
}

/// Routes every image the same way.
#[derive(Debug, Clone, Copy)]
pub struct FixedRouter(pub Routing);

impl Router for FixedRouter {
    fn route(&self, _img: &GrayImage) -> Routing {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetaLabel {
    #[serde(alias = "ILL")]
    Illustration,
    #[serde(alias = "NON", alias = "non_illustration")]
    NonIllustration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingStrategy {
    First,
    Majority,
    Unanimous,
    Greedy,
}

impl MappingStrategy {
    pub const ALL: [MappingStrategy; 4] = [
        MappingStrategy::First,
        MappingStrategy::Majority,
        MappingStrategy::Unanimous,
        MappingStrategy::Greedy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MappingStrategy::First => "first",
            MappingStrategy::Majority => "majority",
            MappingStrategy::Unanimous => "unanimous",
            MappingStrategy::Greedy => "greedy",
        }
    }
}

impl fmt::Display for MappingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MappingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown mapping strategy {s:?}")))
    }
}

/// Maps an image's list of meta labels to one label, or `None` when the
/// strategy drops the image.
pub fn map_labels(labels: &[MetaLabel], strategy: MappingStrategy) -> Result<Option<MetaLabel>> {
    let first = *labels
        .first()
        .ok_or_else(|| Error::Domain("cannot map an empty label list".into()))?;
    let ill = labels.iter().filter(|&&l| l == MetaLabel::Illustration).count();
    let non = labels.len() - ill;
    Ok(match strategy {
        MappingStrategy::First => Some(first),
        MappingStrategy::Majority => match ill.cmp(&non) {
            std::cmp::Ordering::Greater => Some(MetaLabel::Illustration),
            std::cmp::Ordering::Less => Some(MetaLabel::NonIllustration),
            std::cmp::Ordering::Equal => None,
        },
        MappingStrategy::Unanimous => (ill == 0 || non == 0).then_some(first),
        MappingStrategy::Greedy => Some(if ill > 0 {
            MetaLabel::Illustration
        } else {
            MetaLabel::NonIllustration
        }),
    })
}

/// Shannon entropy (bits) of the 256-bin intensity histogram and the mean
/// intensity.
pub fn simple2(img: &GrayImage) -> Vec<f64> {
    let mut hist = [0u64; 256];
    for &v in img.pixels() {
        hist[((v * 256.0) as usize).min(255)] += 1;
    }
    let n = img.pixels().len() as f64;
    let entropy = hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    vec![entropy.max(0.0), img.mean()]
}

/// [`simple2`] followed by the nearest-rank deciles 10 %..90 % of the
/// intensity distribution.
pub fn simple11(img: &GrayImage) -> Vec<f64> {
    let mut sorted = img.pixels().to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let mut out = simple2(img);
    out.extend((1..=9).map(|d| {
        let rank = (d * n).div_ceil(10).max(1);
        f64::from(sorted[rank - 1])
    }));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Simple2,
    Simple11,
    /// Caller-supplied descriptor (e.g. a color/edge directivity histogram).
    External,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Simple2 => "simple2",
            FeatureKind::Simple11 => "simple11",
            FeatureKind::External => "external",
        }
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple2" => Ok(FeatureKind::Simple2),
            "simple11" => Ok(FeatureKind::Simple11),
            "external" => Ok(FeatureKind::External),
            _ => Err(Error::Domain(format!("unknown illustration feature kind {s:?}"))),
        }
    }
}

pub type FeatureExtractor = Arc<dyn Fn(&GrayImage) -> Vec<f64> + Send + Sync>;

/// A trained illustration classifier with its routing threshold.
#[derive(Clone)]
pub struct IlluModel {
    pub classifier: Classifier,
    pub feature_kind: FeatureKind,
    pub decision_threshold: f64,
    pub strategy: Option<MappingStrategy>,
    extractor: Option<FeatureExtractor>,
}

impl fmt::Debug for IlluModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IlluModel")
            .field("classifier", &self.classifier.kind())
            .field("feature_kind", &self.feature_kind)
            .field("decision_threshold", &self.decision_threshold)
            .field("strategy", &self.strategy)
            .finish()
    }
}

impl IlluModel {
    pub fn new(classifier: Classifier, feature_kind: FeatureKind, decision_threshold: f64) -> Result<Self> {
        if feature_kind == FeatureKind::External {
            return Err(Error::Domain(
                "external features need an extractor, use IlluModel::external".into(),
            ));
        }
        Self::build(classifier, feature_kind, decision_threshold, None)
    }

    pub fn external(
        classifier: Classifier,
        decision_threshold: f64,
        extractor: FeatureExtractor,
    ) -> Result<Self> {
        Self::build(classifier, FeatureKind::External, decision_threshold, Some(extractor))
    }

    fn build(
        classifier: Classifier,
        feature_kind: FeatureKind,
        decision_threshold: f64,
        extractor: Option<FeatureExtractor>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&decision_threshold) {
            return Err(Error::Domain(format!(
                "decision threshold {decision_threshold} outside [0, 1]"
            )));
        }
        let expected = match feature_kind {
            FeatureKind::Simple2 => Some(2),
            FeatureKind::Simple11 => Some(11),
            FeatureKind::External => None,
        };
        if let Some(d) = expected.filter(|&d| d != classifier.dim()) {
            return Err(Error::Shape(format!(
                "{} features have {d} dimensions, model expects {}",
                feature_kind.name(),
                classifier.dim()
            )));
        }
        Ok(Self { classifier, feature_kind, decision_threshold, strategy: None, extractor })
    }

    pub fn with_strategy(mut self, strategy: MappingStrategy) -> Self {
        self.strategy = Some(strategy);
        self
    }

    pub fn with_threshold(mut self, decision_threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&decision_threshold) {
            return Err(Error::Domain(format!(
                "decision threshold {decision_threshold} outside [0, 1]"
            )));
        }
        self.decision_threshold = decision_threshold;
        Ok(self)
    }

    pub fn features(&self, img: &GrayImage) -> Vec<f64> {
        match self.feature_kind {
            FeatureKind::Simple2 => simple2(img),
            FeatureKind::Simple11 => simple11(img),
            FeatureKind::External => {
                (self.extractor.as_ref().expect("external model carries an extractor"))(img)
            }
        }
    }

    /// Illustration probability, when the inner model provides one.
    pub fn probability(&self, img: &GrayImage) -> Result<Option<f64>> {
        self.classifier.probability(&self.features(img))
    }

    pub fn route_features(&self, features: &[f64]) -> Result<Routing> {
        let band = match &self.classifier {
            Classifier::LogReg(m) => m.predict_proba(features)? > self.decision_threshold,
            Classifier::LinearSvm(m) => m.decision_value(features)? > 0.0,
        };
        Ok(if band { Routing::BandBased } else { Routing::EdgeBased })
    }

    pub fn to_model_file(&self) -> ModelFile {
        ModelFile::new(
            &self.classifier,
            ModelMetadata {
                feature_kind: Some(self.feature_kind.name().into()),
                strategy: self.strategy.map(|s| s.name().into()),
                decision_threshold: Some(self.decision_threshold),
                ..Default::default()
            },
        )
    }

    /// Restores a model saved by [`IlluModel::to_model_file`]. External
    /// feature models need `extractor`.
    pub fn from_model_file(file: &ModelFile, extractor: Option<FeatureExtractor>) -> Result<Self> {
        let kind: FeatureKind = file
            .metadata
            .feature_kind
            .as_deref()
            .ok_or_else(|| Error::Domain("model metadata lacks feature_kind".into()))?
            .parse()?;
        let threshold = file.metadata.decision_threshold.unwrap_or(0.5);
        let classifier = file.classifier()?;
        let mut model = match (kind, extractor) {
            (FeatureKind::External, Some(e)) => Self::external(classifier, threshold, e)?,
            (FeatureKind::External, None) => {
                return Err(Error::Domain("external feature model needs an extractor".into()))
            }
            (k, _) => Self::new(classifier, k, threshold)?,
        };
        if let Some(s) = file.metadata.strategy.as_deref() {
            model.strategy = Some(s.parse()?);
        }
        Ok(model)
    }
}

impl Router for IlluModel {
    fn route(&self, img: &GrayImage) -> Routing {
        self.route_features(&self.features(img))
            .expect("feature dimensionality checked at construction")
    }
}

/// Routing decision of `model` for `img`.
pub fn route(model: &IlluModel, img: &GrayImage) -> Routing {
    model.route(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{LogRegModel, Standardizer};
    use MetaLabel::{Illustration as Ill, NonIllustration as Non};

    #[test]
    fn label_mapping_examples() {
        assert_eq!(map_labels(&[Ill, Non, Ill], MappingStrategy::Majority).unwrap(), Some(Ill));
        assert_eq!(map_labels(&[Ill, Non], MappingStrategy::Unanimous).unwrap(), None);
        assert_eq!(map_labels(&[Non, Non, Ill], MappingStrategy::Greedy).unwrap(), Some(Ill));
        assert_eq!(map_labels(&[Non, Ill], MappingStrategy::First).unwrap(), Some(Non));
        assert_eq!(map_labels(&[Non, Ill], MappingStrategy::Majority).unwrap(), None);
        assert!(map_labels(&[], MappingStrategy::First).is_err());
    }

    #[test]
    fn meta_label_aliases() {
        let v: Vec<MetaLabel> = serde_json::from_str(r#"["ILL","NON","illustration"]"#).unwrap();
        assert_eq!(v, vec![Ill, Non, Ill]);
    }

    #[test]
    fn simple2_examples() {
        let c = simple2(&GrayImage::filled(10, 10, 0.4));
        assert_eq!(c[0], 0.0);
        assert!((c[1] - 0.4).abs() < 1e-6);

        let half = GrayImage::from_fn(10, 10, |x, _| if x < 5 { 0.0 } else { 1.0 });
        assert!((simple2(&half)[0] - 1.0).abs() < 1e-12);

        let uniform = GrayImage::from_fn(16, 16, |x, y| (y * 16 + x) as f32 / 255.0);
        assert!((simple2(&uniform)[0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn simple11_examples() {
        let c = simple11(&GrayImage::filled(7, 3, 0.25));
        assert_eq!(c.len(), 11);
        assert_eq!(c[0], 0.0);
        assert!(c[1..].iter().all(|v| (v - 0.25).abs() < 1e-6));

        let n = 1001;
        let ramp = GrayImage::from_fn(n, 1, |x, _| x as f32 / (n - 1) as f32);
        let f = simple11(&ramp);
        for (d, v) in f[2..].iter().enumerate() {
            let expected = (d + 1) as f64 / 10.0;
            assert!((v - expected).abs() <= 1.0 / (n - 1) as f64 + 1e-6, "decile {d}: {v}");
        }
    }

    fn model_with_proba(p: f64, threshold: f64) -> IlluModel {
        let logit = (p / (1.0 - p)).ln();
        let st = Standardizer { means: vec![0.0, 0.0], scales: vec![1.0, 1.0] };
        let m = LogRegModel { weights: vec![0.0, 0.0], bias: logit, standardizer: st };
        IlluModel::new(Classifier::LogReg(m), FeatureKind::Simple2, threshold).unwrap()
    }

    #[test]
    fn routing_threshold() {
        let img = GrayImage::filled(4, 4, 0.5);
        assert_eq!(model_with_proba(0.5, 0.1).route(&img), Routing::BandBased);
        assert_eq!(model_with_proba(0.999, 1.0).route(&img), Routing::EdgeBased);
        assert_eq!(model_with_proba(0.001, 0.0).route(&img), Routing::BandBased);
        assert_eq!(model_with_proba(0.5, 0.5).route(&img), Routing::EdgeBased);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let st = Standardizer { means: vec![0.0; 3], scales: vec![1.0; 3] };
        let m = LogRegModel { weights: vec![0.0; 3], bias: 0.0, standardizer: st };
        assert!(matches!(
            IlluModel::new(Classifier::LogReg(m), FeatureKind::Simple11, 0.5),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn external_features_hook() {
        let st = Standardizer { means: vec![0.0], scales: vec![1.0] };
        let m = LogRegModel { weights: vec![10.0], bias: 0.0, standardizer: st };
        let extractor: FeatureExtractor = Arc::new(|img: &GrayImage| vec![img.mean() - 0.5]);
        let model = IlluModel::external(Classifier::LogReg(m), 0.5, extractor.clone()).unwrap();
        assert_eq!(model.route(&GrayImage::filled(3, 3, 0.9)), Routing::BandBased);
        assert_eq!(model.route(&GrayImage::filled(3, 3, 0.1)), Routing::EdgeBased);
        let file = model.to_model_file();
        assert!(IlluModel::from_model_file(&file, None).is_err());
        assert!(IlluModel::from_model_file(&file, Some(extractor)).is_ok());
    }

    #[test]
    fn model_file_round_trip() {
        let model = model_with_proba(0.7, 0.1).with_strategy(MappingStrategy::Greedy);
        let back = IlluModel::from_model_file(&model.to_model_file(), None).unwrap();
        assert_eq!(back.feature_kind, FeatureKind::Simple2);
        assert_eq!(back.decision_threshold, 0.1);
        assert_eq!(back.strategy, Some(MappingStrategy::Greedy));
    }
}
