//! Binary classifiers trained by deterministic full-batch gradient descent,
//! and the misclassification-loss decision rule.
//!
//! Both models standardize features with the column means and population
//! standard deviations recorded at training time, so affine rescaling of a
//! feature column does not change predictions.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label. `Positive` is the class of interest (compound figure,
/// illustration).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Negative,
    Positive,
}

impl Class {
    pub fn is_positive(self) -> bool {
        self == Class::Positive
    }
}

impl From<bool> for Class {
    fn from(b: bool) -> Self {
        if b {
            Class::Positive
        } else {
            Class::Negative
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &[Vec<f64>]) -> Result<Self> {
        let dim = check_matrix(features)?;
        let n = features.len() as f64;
        let mut means = vec![0.0; dim];
        for row in features {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut scales = vec![0.0; dim];
        for row in features {
            for ((s, v), m) in scales.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in scales.iter_mut() {
            let sd = (*s / n).sqrt();
            // constant columns standardize to zero
            *s = if sd > 1e-12 { sd } else { 1.0 };
        }
        Ok(Self { means, scales })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!(
                "model expects {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(x.iter()
            .zip(&self.means)
            .zip(&self.scales)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}

fn check_matrix(features: &[Vec<f64>]) -> Result<usize> {
    let first = features
        .first()
        .ok_or_else(|| Error::DegenerateTrainingSet("no samples".into()))?;
    let dim = first.len();
    for (i, row) in features.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Shape(format!("row {i} has {} features, expected {dim}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("row {i} contains a non-finite feature")));
        }
    }
    Ok(dim)
}

fn check_training_set(features: &[Vec<f64>], labels: &[bool]) -> Result<()> {
    if features.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    check_matrix(features)?;
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::DegenerateTrainingSet(
            "training labels contain a single class".into(),
        ));
    }
    Ok(())
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegOptions {
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        Self { l2: 1e-4, epochs: 500, learning_rate: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    #[serde(flatten)]
    pub standardizer: Standardizer,
}

/// Mean negative log-likelihood plus `l2/2 · |w|²` on already standardized
/// rows, with its gradient `(d/dw, d/db)`.
pub fn logreg_objective(
    weights: &[f64],
    bias: f64,
    rows: &[Vec<f64>],
    labels: &[bool],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = rows.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        let z = dot(weights, x) + bias;
        let t = f64::from(u8::from(y));
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for (g, v) in gw.iter_mut().zip(x) {
            *g += r * v;
        }
        gb += r;
    }
    let reg: f64 = weights.iter().map(|w| w * w).sum::<f64>() * l2 / 2.0;
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (loss / n + reg, gw, gb / n)
}

/// Logistic regression by full-batch gradient descent from a zero start.
pub fn train_logreg(
    features: &[Vec<f64>],
    labels: &[bool],
    opts: &LogRegOptions,
) -> Result<LogRegModel> {
    check_training_set(features, labels)?;
    let standardizer = Standardizer::fit(features)?;
    let rows = features
        .iter()
        .map(|x| standardizer.apply(x))
        .collect::<Result<Vec<_>>>()?;
    let mut weights = vec![0.0; standardizer.dim()];
    let mut bias = 0.0;
    for _ in 0..opts.epochs {
        let (_, gw, gb) = logreg_objective(&weights, bias, &rows, labels, opts.l2);
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= opts.learning_rate * g;
        }
        bias -= opts.learning_rate * gb;
    }
    Ok(LogRegModel { weights, bias, standardizer })
}

impl LogRegModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        Ok(dot(&self.weights, &self.standardizer.apply(x)?) + self.bias)
    }

    /// Probability of the positive class.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.decision_value(x)?))
    }
}

/// Probability of the positive class under `model`.
pub fn predict_proba(model: &LogRegModel, x: &[f64]) -> Result<f64> {
    model.predict_proba(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    /// Box constraint; the regularization weight is `1 / (c · n)`.
    pub c: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self { c: 1.0, epochs: 500, learning_rate: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    #[serde(flatten)]
    pub standardizer: Standardizer,
}

fn svm_objective(weights: &[f64], bias: f64, rows: &[Vec<f64>], ys: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = rows
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * (dot(weights, x) + bias)).max(0.0))
        .sum();
    lambda / 2.0 * weights.iter().map(|w| w * w).sum::<f64>() + hinge / rows.len() as f64
}

/// Linear SVM on the primal hinge loss by full-batch subgradient descent
/// with a decaying step; the iterate with the lowest objective is kept.
pub fn train_linear_svm(
    features: &[Vec<f64>],
    labels: &[bool],
    opts: &SvmOptions,
) -> Result<LinearSvmModel> {
    check_training_set(features, labels)?;
    if !(opts.c > 0.0) {
        return Err(Error::Domain(format!("SVM box constraint must be positive, got {}", opts.c)));
    }
    let standardizer = Standardizer::fit(features)?;
    let rows = features
        .iter()
        .map(|x| standardizer.apply(x))
        .collect::<Result<Vec<_>>>()?;
    let ys: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let n = rows.len() as f64;
    let lambda = 1.0 / (opts.c * n);

    let dim = standardizer.dim();
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut best = (svm_objective(&weights, bias, &rows, &ys, lambda), weights.clone(), bias);
    for t in 0..opts.epochs {
        let mut gw: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
        let mut gb = 0.0;
        for (x, &y) in rows.iter().zip(&ys) {
            if y * (dot(&weights, x) + bias) < 1.0 {
                for (g, v) in gw.iter_mut().zip(x) {
                    *g -= y * v / n;
                }
                gb -= y / n;
            }
        }
        let step = opts.learning_rate / ((t + 1) as f64).sqrt();
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= step * g;
        }
        bias -= step * gb;
        let obj = svm_objective(&weights, bias, &rows, &ys, lambda);
        if obj < best.0 {
            best = (obj, weights.clone(), bias);
        }
    }
    Ok(LinearSvmModel { weights: best.1, bias: best.2, standardizer })
}

impl LinearSvmModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Signed distance-like score; positive means the positive class.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        Ok(dot(&self.weights, &self.standardizer.apply(x)?) + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Class> {
        Ok(Class::from(self.decision_value(x)? > 0.0))
    }
}

/// A trained binary classifier of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    LogReg(LogRegModel),
    LinearSvm(LinearSvmModel),
}

impl Classifier {
    pub fn kind(&self) -> &'static str {
        match self {
            Classifier::LogReg(_) => "logreg",
            Classifier::LinearSvm(_) => "svm",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Classifier::LogReg(m) => m.dim(),
            Classifier::LinearSvm(m) => m.dim(),
        }
    }

    /// Positive-class probability, if the model provides one.
    pub fn probability(&self, x: &[f64]) -> Result<Option<f64>> {
        match self {
            Classifier::LogReg(m) => m.predict_proba(x).map(Some),
            Classifier::LinearSvm(m) => {
                m.decision_value(x)?;
                Ok(None)
            }
        }
    }

    /// Class under the loss matrix for probabilistic models, or the margin
    /// sign for SVMs.
    pub fn classify(&self, x: &[f64], loss: &LossMatrix) -> Result<Class> {
        match self {
            Classifier::LogReg(m) => Ok(decide(m.predict_proba(x)?, loss)),
            Classifier::LinearSvm(m) => m.predict(x),
        }
    }
}

/// Loss matrix `[[0, 1], [alpha, 0]]`: rows are true classes, columns
/// predicted classes; missing a positive costs `alpha` times a false alarm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossMatrix {
    alpha: f64,
}

impl Default for LossMatrix {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

impl LossMatrix {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha.is_finite() {
            Ok(Self { alpha })
        } else {
            Err(Error::Domain(format!("loss weight must be positive and finite, got {alpha}")))
        }
    }

    /// Loss matrix whose decision threshold equals `threshold`.
    pub fn from_threshold(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Domain(format!("threshold must lie in (0, 1), got {threshold}")));
        }
        Self::new((1.0 - threshold) / threshold)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn entry(&self, truth: Class, predicted: Class) -> f64 {
        match (truth, predicted) {
            (Class::Negative, Class::Positive) => 1.0,
            (Class::Positive, Class::Negative) => self.alpha,
            _ => 0.0,
        }
    }

    /// Expected loss of predicting `predicted` when `P(positive) = p1`.
    pub fn expected_loss(&self, p1: f64, predicted: Class) -> f64 {
        self.entry(Class::Negative, predicted) * (1.0 - p1)
            + self.entry(Class::Positive, predicted) * p1
    }

    /// Minimal positive-class probability for a positive decision.
    pub fn threshold(&self) -> f64 {
        1.0 / (1.0 + self.alpha)
    }
}

/// Positive iff `p1 >= 1 / (1 + alpha)`.
pub fn decide(p1: f64, loss: &LossMatrix) -> Class {
    Class::from(p1 >= loss.threshold())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMetrics {
    pub total: usize,
    pub correct: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub accuracy_pct: f64,
    pub fp_pct: f64,
    pub fn_pct: f64,
}

/// Accuracy, false-positive and false-negative rates as percentages of all
/// samples.
pub fn classifier_metrics(predictions: &[Class], truth: &[Class]) -> Result<ClassifierMetrics> {
    if predictions.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Shape("no predictions".into()));
    }
    let mut m = ClassifierMetrics {
        total: truth.len(),
        correct: 0,
        false_positives: 0,
        false_negatives: 0,
        accuracy_pct: 0.0,
        fp_pct: 0.0,
        fn_pct: 0.0,
    };
    for (p, t) in predictions.iter().zip(truth) {
        match (t, p) {
            _ if p == t => m.correct += 1,
            (Class::Negative, Class::Positive) => m.false_positives += 1,
            _ => m.false_negatives += 1,
        }
    }
    let pct = |c: usize| 100.0 * c as f64 / m.total as f64;
    m.accuracy_pct = pct(m.correct);
    m.fp_pct = pct(m.false_positives);
    m.fn_pct = pct(m.false_negatives);
    Ok(m)
}

/// Free-form provenance stored with a model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_threshold: Option<f64>,
}

/// On-disk model: `{kind, weights, bias, means, scales, metadata}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: String,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    #[serde(default)]
    pub metadata: ModelMetadata,
}

impl ModelFile {
    pub fn new(classifier: &Classifier, metadata: ModelMetadata) -> Self {
        let (weights, bias, st) = match classifier {
            Classifier::LogReg(m) => (&m.weights, m.bias, &m.standardizer),
            Classifier::LinearSvm(m) => (&m.weights, m.bias, &m.standardizer),
        };
        Self {
            kind: classifier.kind().to_string(),
            weights: weights.clone(),
            bias,
            means: st.means.clone(),
            scales: st.scales.clone(),
            metadata,
        }
    }

    pub fn classifier(&self) -> Result<Classifier> {
        let n = self.weights.len();
        if self.means.len() != n || self.scales.len() != n {
            return Err(Error::Shape(format!(
                "model has {n} weights, {} means, {} scales",
                self.means.len(),
                self.scales.len()
            )));
        }
        if self.scales.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Domain("model scales must be positive".into()));
        }
        let standardizer = Standardizer { means: self.means.clone(), scales: self.scales.clone() };
        let (weights, bias) = (self.weights.clone(), self.bias);
        match self.kind.as_str() {
            "logreg" => Ok(Classifier::LogReg(LogRegModel { weights, bias, standardizer })),
            "svm" => Ok(Classifier::LinearSvm(LinearSvmModel { weights, bias, standardizer })),
            other => Err(Error::Domain(format!("unknown model kind {other:?}"))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingAsset(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clusters() -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let jitter = (i as f64) * 0.01;
            x.push(vec![-1.0 - jitter]);
            y.push(false);
            x.push(vec![1.0 + jitter]);
            y.push(true);
        }
        (x, y)
    }

    fn accuracy(pred: impl Iterator<Item = bool>, y: &[bool]) -> f64 {
        pred.zip(y).filter(|(p, t)| p == *t).count() as f64 / y.len() as f64
    }

    #[test]
    fn logreg_separates_clusters() {
        let (x, y) = clusters();
        let opts = LogRegOptions { epochs: 200, ..Default::default() };
        let m = train_logreg(&x, &y, &opts).unwrap();
        let acc = accuracy(x.iter().map(|r| m.predict_proba(r).unwrap() >= 0.5), &y);
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn constant_column_keeps_zero_weight() {
        let (x, y) = clusters();
        let x: Vec<Vec<f64>> = x.into_iter().map(|r| vec![r[0], 0.0]).collect();
        let m = train_logreg(&x, &y, &LogRegOptions::default()).unwrap();
        assert_eq!(m.weights[1], 0.0);
    }

    #[test]
    fn xor_is_not_linearly_separable() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = vec![false, true, true, false];
        let m = train_logreg(&x, &y, &LogRegOptions::default()).unwrap();
        let acc = accuracy(x.iter().map(|r| m.predict_proba(r).unwrap() >= 0.5), &y);
        assert!(acc <= 0.75);
        let s = train_linear_svm(&x, &y, &SvmOptions::default()).unwrap();
        let acc = accuracy(x.iter().map(|r| s.predict(r).unwrap().is_positive()), &y);
        assert!(acc <= 0.75);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            train_logreg(&x, &[true, true], &LogRegOptions::default()),
            Err(Error::DegenerateTrainingSet(_))
        ));
        assert!(matches!(
            train_linear_svm(&x, &[false, false], &SvmOptions::default()),
            Err(Error::DegenerateTrainingSet(_))
        ));
    }

    #[test]
    fn proba_examples() {
        let st = Standardizer { means: vec![0.0], scales: vec![1.0] };
        let zero = LogRegModel { weights: vec![0.0], bias: 0.0, standardizer: st.clone() };
        assert_eq!(zero.predict_proba(&[3.0]).unwrap(), 0.5);
        let big = LogRegModel { weights: vec![0.0], bias: 50.0, standardizer: st.clone() };
        assert!(big.predict_proba(&[0.0]).unwrap() > 1.0 - 1e-12);
        let one = LogRegModel { weights: vec![1.0], bias: 0.0, standardizer: st };
        assert!((one.predict_proba(&[3f64.ln()]).unwrap() - 0.75).abs() < 1e-12);
        assert!(matches!(one.predict_proba(&[1.0, 2.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn svm_separates_and_ignores_duplication() {
        let (x, y) = clusters();
        let m = train_linear_svm(&x, &y, &SvmOptions::default()).unwrap();
        let signs: Vec<bool> = x.iter().map(|r| m.predict(r).unwrap().is_positive()).collect();
        assert_eq!(accuracy(signs.iter().copied(), &y), 1.0);

        let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<bool> = y.iter().chain(&y).copied().collect();
        let m2 = train_linear_svm(&x2, &y2, &SvmOptions::default()).unwrap();
        let signs2: Vec<bool> = x.iter().map(|r| m2.predict(r).unwrap().is_positive()).collect();
        assert_eq!(signs, signs2);
    }

    #[test]
    fn decision_rule() {
        let sym = LossMatrix::new(1.0).unwrap();
        assert_eq!(sym.threshold(), 0.5);
        assert_eq!(decide(0.5, &sym), Class::Positive);
        assert_eq!(decide(0.4999, &sym), Class::Negative);
        let biased = LossMatrix::new(1.86).unwrap();
        assert!((biased.threshold() - 0.34965).abs() < 1e-5);
        assert_eq!(decide(0.35, &biased), Class::Positive);
        assert!(LossMatrix::new(0.0).is_err());
        let from_d = LossMatrix::from_threshold(0.35).unwrap();
        assert!((from_d.threshold() - 0.35).abs() < 1e-12);
    }

    #[test]
    fn metrics_examples() {
        use Class::*;
        let t = vec![Positive, Negative, Positive, Negative];
        let m = classifier_metrics(&t, &t).unwrap();
        assert_eq!((m.accuracy_pct, m.fp_pct, m.fn_pct), (100.0, 0.0, 0.0));

        let p = vec![Positive, Positive, Positive, Negative];
        let m = classifier_metrics(&p, &t).unwrap();
        assert_eq!((m.accuracy_pct, m.fp_pct, m.fn_pct), (75.0, 25.0, 0.0));

        // 59 % compound, everything predicted compound
        let truth: Vec<Class> = (0..100).map(|i| Class::from(i < 59)).collect();
        let all = vec![Positive; 100];
        let m = classifier_metrics(&all, &truth).unwrap();
        assert_eq!((m.accuracy_pct, m.fp_pct, m.fn_pct), (59.0, 41.0, 0.0));

        assert!(matches!(classifier_metrics(&p, &t[..3]), Err(Error::Shape(_))));
    }

    #[test]
    fn model_file_round_trip() {
        let (x, y) = clusters();
        let m = Classifier::LogReg(train_logreg(&x, &y, &LogRegOptions::default()).unwrap());
        let meta = ModelMetadata { spec: Some("434".into()), k: Some(8), ..Default::default() };
        let file = ModelFile::new(&m, meta);
        let json = serde_json::to_string(&file).unwrap();
        assert!(json.starts_with(r#"{"kind":"logreg","weights":["#));
        let back: ModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.classifier().unwrap(), m);
        let mut bad = back.clone();
        bad.kind = "forest".into();
        assert!(bad.classifier().is_err());
    }
}
