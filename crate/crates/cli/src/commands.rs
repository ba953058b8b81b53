use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use figsep::cfc_features::{extract_cfc_features, FeatureRecord, FeatureSetSpec, QuantizationParams};
use figsep::cfs::{separate_with, SeparateOptions};
use figsep::data::synth::{synth_generate, SynthSpec};
use figsep::data::{load_annotations, load_corpus, save_annotations, Corpus};
use figsep::eval::{chain_evaluate, evaluate, EvalReport, FigureAnnotation, Protocol};
use figsep::illustration::{map_labels, FeatureKind, MappingStrategy, MetaLabel};
use figsep::learn::{
    classifier_metrics, train_linear_svm, train_logreg, Class, Classifier, LogRegOptions, LossMatrix,
    ModelFile, ModelMetadata, SvmOptions,
};
use figsep::tune::{apply_param_set, param_set, save_trace_csv, tune, SearchSpace, TuneError};
use figsep::{CfsParams, FixedRouter, GrayImage, IlluModel, Router, Routing, Variant};

use crate::{
    Algo, ChainArgs, ClassifyArgs, Cli, Command, DecisionArgs, EngineArgs, EvaluateArgs, FeaturesArgs,
    SeparateArgs, SynthArgs, TrainCfcArgs, TrainIlluArgs, TrainOptions, TuneArgs,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] figsep::Error),
    #[error(transparent)]
    Tune(#[from] TuneError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Parses a flag value; failures are usage errors.
fn flag<T: FromStr>(name: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| CliError::Usage(format!("--{name}: {e}")))
}

pub fn run(cli: Cli) -> Result<()> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--workers: {e}")))?;
    }
    match cli.command {
        Command::Synth(a) => synth(a, cli.seed),
        Command::Features(a) => features(a),
        Command::TrainCfc(a) => train_cfc(a),
        Command::TrainIllu(a) => train_illu(a),
        Command::Classify(a) => classify(a),
        Command::Separate(a) => separate_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Chain(a) => chain(a),
        Command::Tune(a) => tune_cmd(a),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(figsep::Error::MissingAsset(path.to_path_buf()).into());
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn synth(a: SynthArgs, seed: Option<u64>) -> Result<()> {
    let mut spec: SynthSpec = match &a.spec {
        Some(p) => read_json(p)?,
        None => SynthSpec::default(),
    };
    if let Some(n) = a.count {
        spec.count = n;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let corpus = synth_generate(&spec, &a.out)?;
    println!("wrote {} figures to {}", corpus.len(), a.out.display());
    Ok(())
}

fn sorted_entries(corpus: &Corpus) -> Vec<&figsep::data::CorpusEntry> {
    let mut entries: Vec<_> = corpus.entries.iter().collect();
    entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    entries
}

fn load_images(corpus: &Corpus) -> Result<Vec<(FigureAnnotation, GrayImage)>> {
    Ok(sorted_entries(corpus)
        .par_iter()
        .map(|e| Ok((e.annotation.clone(), corpus.load_image(e)?)))
        .collect::<figsep::Result<Vec<_>>>()?)
}

fn feature_spec(set: &str, k: usize, p: usize, q: usize, h: usize) -> Result<(FeatureSetSpec, QuantizationParams)> {
    let spec = FeatureSetSpec::parse(set, k).map_err(|e| CliError::Usage(e.to_string()))?;
    let qp = QuantizationParams { p, q, h };
    qp.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((spec, qp))
}

fn features(a: FeaturesArgs) -> Result<()> {
    let (spec, qp) = feature_spec(&a.set, a.k, a.p, a.q, a.h)?;
    let corpus = load_corpus(&a.corpus)?;
    let records = sorted_entries(&corpus)
        .par_iter()
        .map(|e| {
            let img = corpus.load_image(e)?;
            Ok(FeatureRecord {
                id: e.image_id.clone(),
                spec: spec.name(),
                k: spec.k,
                quantization: qp,
                values: extract_cfc_features(&img, &spec, &qp)?.values,
            })
        })
        .collect::<figsep::Result<Vec<_>>>()?;
    let mut out = BufWriter::new(fs::File::create(&a.out)?);
    for r in &records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    println!("{} records of dimension {} -> {}", records.len(), spec.dimensionality(&qp), a.out.display());
    Ok(())
}

fn read_features(path: &Path) -> Result<Vec<FeatureRecord>> {
    if !path.exists() {
        return Err(figsep::Error::MissingAsset(path.to_path_buf()).into());
    }
    let mut records = Vec::new();
    for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: FeatureRecord = serde_json::from_str(&line)
            .map_err(|e| figsep::Error::Parse { line: i + 1, message: e.to_string() })?;
        records.push(r);
    }
    if let Some(first) = records.first() {
        let key = (&first.spec, first.k, first.quantization);
        if let Some(r) = records.iter().find(|r| (&r.spec, r.k, r.quantization) != key) {
            return Err(figsep::Error::Shape(format!(
                "record {} uses set {} k={} but the file starts with set {} k={}",
                r.id, r.spec, r.k, first.spec, first.k
            ))
            .into());
        }
    }
    Ok(records)
}

fn train(x: &[Vec<f64>], y: &[bool], opts: &TrainOptions) -> Result<Classifier> {
    Ok(match opts.algo {
        Algo::Logreg => Classifier::LogReg(train_logreg(
            x,
            y,
            &LogRegOptions { l2: opts.l2, epochs: opts.epochs, ..LogRegOptions::default() },
        )?),
        Algo::Svm => Classifier::LinearSvm(train_linear_svm(
            x,
            y,
            &SvmOptions { c: opts.c, epochs: opts.epochs, ..SvmOptions::default() },
        )?),
    })
}

fn report_fit(clf: &Classifier, x: &[Vec<f64>], y: &[bool]) -> Result<()> {
    let loss = LossMatrix::default();
    let pred = x.iter().map(|v| clf.classify(v, &loss)).collect::<figsep::Result<Vec<_>>>()?;
    let truth: Vec<Class> = y.iter().map(|&b| Class::from(b)).collect();
    let m = classifier_metrics(&pred, &truth)?;
    println!(
        "{} on {} samples: training accuracy {:.1}% (FP {:.1}%, FN {:.1}%)",
        clf.kind(),
        m.total,
        m.accuracy_pct,
        m.fp_pct,
        m.fn_pct
    );
    Ok(())
}

fn train_cfc(a: TrainCfcArgs) -> Result<()> {
    let records = read_features(&a.features)?;
    let corpus = load_corpus(&a.corpus)?;
    let labels: HashMap<&str, bool> =
        corpus.entries.iter().map(|e| (e.image_id.as_str(), e.annotation.is_compound)).collect();
    let mut x = Vec::with_capacity(records.len());
    let mut y = Vec::with_capacity(records.len());
    for r in &records {
        let label = labels
            .get(r.id.as_str())
            .ok_or_else(|| figsep::Error::Alignment(format!("no corpus entry for feature record {:?}", r.id)))?;
        x.push(r.values.clone());
        y.push(*label);
    }
    let clf = train(&x, &y, &a.train)?;
    report_fit(&clf, &x, &y)?;
    let first = records.first().expect("training succeeded on a non-empty set");
    let meta = ModelMetadata {
        spec: Some(first.spec.clone()),
        k: Some(first.k),
        p: Some(first.quantization.p),
        q: Some(first.quantization.q),
        h: Some(first.quantization.h),
        ..ModelMetadata::default()
    };
    ModelFile::new(&clf, meta).save(&a.out)?;
    Ok(())
}

fn train_illu(a: TrainIlluArgs) -> Result<()> {
    let kind: FeatureKind = flag("feature-kind", &a.feature_kind)?;
    if kind == FeatureKind::External {
        return Err(CliError::Usage("--feature-kind external needs a caller-supplied extractor".into()));
    }
    let strategy: MappingStrategy = flag("strategy", &a.strategy)?;
    let corpus = load_corpus(&a.corpus)?;
    let samples = sorted_entries(&corpus)
        .par_iter()
        .filter_map(|e| {
            let labels = e.labels.as_ref()?;
            let label = match map_labels(labels, strategy) {
                Ok(Some(l)) => l,
                Ok(None) => return None,
                Err(err) => return Some(Err(err)),
            };
            Some(corpus.load_image(e).map(|img| {
                let f = match kind {
                    FeatureKind::Simple11 => figsep::illustration::simple11(&img),
                    _ => figsep::illustration::simple2(&img),
                };
                (f, label == MetaLabel::Illustration)
            }))
        })
        .collect::<figsep::Result<Vec<_>>>()?;
    let (x, y): (Vec<_>, Vec<_>) = samples.into_iter().unzip();
    let clf = train(&x, &y, &a.train)?;
    report_fit(&clf, &x, &y)?;
    let model = IlluModel::new(clf, kind, CfsParams::default().decision_threshold)?.with_strategy(strategy);
    model.to_model_file().save(&a.out)?;
    Ok(())
}

fn loss_matrix(d: &DecisionArgs) -> Result<LossMatrix> {
    let m = match (d.alpha, d.threshold) {
        (Some(alpha), _) => LossMatrix::new(alpha),
        (None, Some(t)) => LossMatrix::from_threshold(t),
        (None, None) => Ok(LossMatrix::default()),
    };
    m.map_err(|e| CliError::Usage(e.to_string()))
}

/// Compound classifier plus the feature settings it was trained with.
struct CfcModel {
    classifier: Classifier,
    spec: FeatureSetSpec,
    qp: QuantizationParams,
}

impl CfcModel {
    fn load(path: &Path) -> Result<Self> {
        let file = ModelFile::load(path)?;
        let m = &file.metadata;
        let (Some(set), Some(k)) = (m.spec.as_deref(), m.k) else {
            return Err(figsep::Error::Domain(format!("{} lacks feature set metadata", path.display())).into());
        };
        let d = QuantizationParams::default();
        let qp = QuantizationParams { p: m.p.unwrap_or(d.p), q: m.q.unwrap_or(d.q), h: m.h.unwrap_or(d.h) };
        let spec = FeatureSetSpec::parse(set, k)?;
        Ok(Self { classifier: file.classifier()?, spec, qp })
    }

    fn check_record(&self, r: &FeatureRecord) -> Result<()> {
        if r.spec != self.spec.name() || r.k != self.spec.k || r.quantization != self.qp {
            return Err(figsep::Error::Shape(format!(
                "model expects set {} k={}, record {} has set {} k={}",
                self.spec.name(),
                self.spec.k,
                r.id,
                r.spec,
                r.k
            ))
            .into());
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ClassifyRecord {
    image_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    probability: Option<f64>,
    compound: bool,
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let loss = loss_matrix(&a.decision)?;
    let model = CfcModel::load(&a.model)?;
    let mut records = read_features(&a.features)?;
    records.sort_by(|x, y| x.id.cmp(&y.id));
    let out = records
        .iter()
        .map(|r| {
            model.check_record(r)?;
            Ok(ClassifyRecord {
                image_id: r.id.clone(),
                probability: model.classifier.probability(&r.values)?,
                compound: model.classifier.classify(&r.values, &loss)?.is_positive(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let compound = out.iter().filter(|r| r.compound).count();
    println!("{compound} of {} classified compound (threshold {:.4})", out.len(), loss.threshold());
    write_json(&out, &a.out)
}

fn engine_params(e: &EngineArgs) -> Result<CfsParams> {
    let params = match &e.params {
        Some(p) => read_json::<CfsParams>(p)?,
        None => CfsParams::preset(&e.preset).map_err(|err| CliError::Usage(err.to_string()))?,
    };
    params.validate()?;
    Ok(params)
}

/// The router of `e`; a model's own threshold is replaced by the
/// parameter set's so tuning it has an effect. Defaults to edge routing.
fn engine_router(e: &EngineArgs, params: &CfsParams) -> Result<Box<dyn Router>> {
    if let Some(path) = &e.illu_model {
        let model = IlluModel::from_model_file(&ModelFile::load(path)?, None)?
            .with_threshold(params.decision_threshold)?;
        return Ok(Box::new(model));
    }
    let routing = match &e.routing {
        Some(r) => flag::<Routing>("routing", r)?,
        None => Routing::EdgeBased,
    };
    Ok(Box::new(FixedRouter(routing)))
}

fn engine_variant(e: &EngineArgs) -> Result<Variant> {
    flag("variant", &e.variant)
}

fn run_separation(
    images: &[(FigureAnnotation, GrayImage)],
    params: &CfsParams,
    router: &dyn Router,
    variant: Variant,
) -> Vec<FigureAnnotation> {
    let opts = SeparateOptions { variant, ..SeparateOptions::default() };
    images
        .par_iter()
        .map(|(a, img)| {
            let rects = separate_with(img, params, router, &opts).rects;
            FigureAnnotation { is_compound: rects.len() > 1, rects, ..a.clone() }
        })
        .collect()
}

fn separate_cmd(a: SeparateArgs) -> Result<()> {
    let params = engine_params(&a.engine)?;
    let router = engine_router(&a.engine, &params)?;
    let variant = engine_variant(&a.engine)?;
    let corpus = load_corpus(&a.corpus)?;
    let images = load_images(&corpus)?;
    let out = run_separation(&images, &params, router.as_ref(), variant);
    if let Some(dir) = &a.overlay {
        fs::create_dir_all(dir)?;
        images.par_iter().zip(&out).try_for_each(|((_, img), o)| {
            figsep::cfs::overlay(img, &o.rects)
                .save(dir.join(format!("{}.png", o.image_id)))
                .map_err(figsep::Error::from)
        })?;
    }
    let subfigures: usize = out.iter().map(|o| o.rects.len()).sum();
    println!("{} images -> {subfigures} subfigures", out.len());
    save_annotations(&out, &a.out)?;
    Ok(())
}

fn load_ground_truth(path: &Path) -> Result<Vec<FigureAnnotation>> {
    if path.is_dir() {
        Ok(load_corpus(path)?.annotations())
    } else {
        Ok(load_annotations(path)?)
    }
}

fn finish_report(report: &EvalReport, out: Option<&Path>) -> Result<()> {
    print!("{}", report.summary());
    if let Some(p) = out {
        write_json(report, p)?;
    }
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let protocol: Protocol = flag("protocol", &a.protocol)?;
    let gt = load_ground_truth(&a.gt)?;
    let pred = load_annotations(&a.pred)?;
    let mut report = if a.chain { chain_evaluate(&gt, &pred, protocol)? } else { evaluate(&gt, &pred, protocol)? };
    if let Some(p) = &a.params {
        report.params = Some(read_json(p)?);
    }
    finish_report(&report, a.out.as_deref())
}

fn chain(a: ChainArgs) -> Result<()> {
    let protocol: Protocol = flag("protocol", &a.protocol)?;
    let loss = loss_matrix(&a.decision)?;
    let params = engine_params(&a.engine)?;
    let router = engine_router(&a.engine, &params)?;
    let variant = engine_variant(&a.engine)?;
    let model = a.cfc_model.as_deref().map(CfcModel::load).transpose()?;
    let corpus = load_corpus(&a.corpus)?;
    let images = load_images(&corpus)?;
    let opts = SeparateOptions { variant, ..SeparateOptions::default() };
    let outputs = images
        .par_iter()
        .map(|(ann, img)| {
            let compound = match &model {
                Some(m) => {
                    let f = extract_cfc_features(img, &m.spec, &m.qp)?;
                    m.classifier.classify(f.as_slice(), &loss)?.is_positive()
                }
                None => true,
            };
            let rects = if compound {
                separate_with(img, &params, router.as_ref(), &opts).rects
            } else {
                vec![ann.full_image()]
            };
            Ok(FigureAnnotation { is_compound: compound, rects, ..ann.clone() })
        })
        .collect::<figsep::Result<Vec<_>>>()?;
    let annotations: Vec<FigureAnnotation> = images.iter().map(|(a, _)| a.clone()).collect();
    let mut report = chain_evaluate(&annotations, &outputs, protocol)?;
    report.params = Some(serde_json::json!({
        "separation": params,
        "cfc_threshold": model.as_ref().map(|_| loss.threshold()),
        "variant": variant,
    }));
    let compound = outputs.iter().filter(|o| o.is_compound).count();
    println!("{compound} of {} images routed to separation", outputs.len());
    if let Some(p) = &a.predictions {
        save_annotations(&outputs, p)?;
    }
    finish_report(&report, a.out.as_deref())
}

fn tune_cmd(a: TuneArgs) -> Result<()> {
    let protocol: Protocol = flag("protocol", &a.protocol)?;
    let space: SearchSpace = read_json(&a.space)?;
    if space.parameters.is_empty() {
        return Err(TuneError::Space("no parameters to tune".into()).into());
    }
    let base = engine_params(&a.engine)?;
    let variant = engine_variant(&a.engine)?;
    let initial = param_set(&base, space.parameters.keys())?;
    let corpus = load_corpus(&a.corpus)?;
    let images = load_images(&corpus)?;
    let annotations: Vec<FigureAnnotation> = images.iter().map(|(a, _)| a.clone()).collect();
    let objective = |set: &BTreeMap<String, f64>| -> figsep::Result<f64> {
        let params = apply_param_set(&base, set)?;
        params.validate()?;
        let router = engine_router(&a.engine, &params).map_err(|e| figsep::Error::Domain(e.to_string()))?;
        let out = run_separation(&images, &params, router.as_ref(), variant);
        Ok(evaluate(&annotations, &out, protocol)?.headline_pct())
    };
    let result = tune(&space, &initial, &objective)?;
    let best = apply_param_set(&base, &result.best)?;
    println!(
        "{:.2}% -> {:.2}% after {} evaluations (grid over {})",
        result.initial_score,
        result.score,
        result.evaluations,
        result.grid_parameters.join(", ")
    );
    for (name, value) in &result.best {
        println!("  {name} = {value}");
    }
    write_json(&best, &a.out)?;
    if let Some(p) = &a.trace {
        save_trace_csv(&result.trace, p)?;
    }
    Ok(())
}
