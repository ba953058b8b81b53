//! Corpus and annotation files.
//!
//! A corpus is a directory holding `corpus.jsonl` (one image per line) and
//! the images it references by relative path. Predictions and ground truth
//! exchanged between commands are plain JSON arrays of annotations.

pub mod synth;

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::FigureAnnotation;
use crate::illustration::MetaLabel;
use crate::raster::{load_gray, GrayImage, Rect};

pub const CORPUS_FILE: &str = "corpus.jsonl";

/// One line of `corpus.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CorpusRecord {
    image_id: String,
    image_path: PathBuf,
    is_compound: bool,
    width: u32,
    height: u32,
    rects: Vec<Rect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<MetaLabel>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub image_id: String,
    /// Relative to the corpus root.
    pub image_path: PathBuf,
    pub annotation: FigureAnnotation,
    /// Per-subfigure meta labels for the illustration classifier.
    pub labels: Option<Vec<MetaLabel>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub root: PathBuf,
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), entries: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn image_path(&self, entry: &CorpusEntry) -> PathBuf {
        self.root.join(&entry.image_path)
    }

    pub fn load_image(&self, entry: &CorpusEntry) -> Result<GrayImage> {
        load_gray(&self.image_path(entry))
    }

    pub fn annotations(&self) -> Vec<FigureAnnotation> {
        self.entries.iter().map(|e| e.annotation.clone()).collect()
    }

    /// Writes `corpus.jsonl` under the root. Images are not touched.
    pub fn save(&self) -> Result<()> {
        fs::create_dir_all(&self.root)?;
        let mut out = BufWriter::new(fs::File::create(self.root.join(CORPUS_FILE))?);
        for e in &self.entries {
            let rec = CorpusRecord {
                image_id: e.image_id.clone(),
                image_path: e.image_path.clone(),
                is_compound: e.annotation.is_compound,
                width: e.annotation.width,
                height: e.annotation.height,
                rects: e.annotation.rects.clone(),
                labels: e.labels.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Checks the ground-truth invariants of one annotation.
pub fn validate_annotation(a: &FigureAnnotation) -> std::result::Result<(), String> {
    if a.width == 0 || a.height == 0 {
        return Err(format!("{}: zero image size", a.image_id));
    }
    if a.rects.is_empty() {
        return Err(format!("{}: no rects", a.image_id));
    }
    for r in &a.rects {
        if !r.fits_within(a.width as usize, a.height as usize) {
            return Err(format!(
                "{}: rect {r:?} outside the {}x{} image",
                a.image_id, a.width, a.height
            ));
        }
    }
    if !a.is_compound && (a.rects.len() != 1 || a.rects[0] != a.full_image()) {
        return Err(format!("{}: non-compound figure must have one full-image rect", a.image_id));
    }
    Ok(())
}

/// Loads a corpus from a directory (reading its `corpus.jsonl`) or from a
/// `.jsonl` file whose directory is the root. A directory without the file
/// is an empty corpus.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let (root, file) = if path.is_dir() {
        (path.to_path_buf(), path.join(CORPUS_FILE))
    } else {
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        (root, path.to_path_buf())
    };
    if !file.exists() {
        if path.is_dir() {
            return Ok(Corpus::new(root));
        }
        return Err(Error::MissingAsset(file));
    }
    let reader = BufReader::new(fs::File::open(&file)?);
    let mut corpus = Corpus::new(root);
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let rec: CorpusRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let annotation = FigureAnnotation {
            image_id: rec.image_id.clone(),
            is_compound: rec.is_compound,
            width: rec.width,
            height: rec.height,
            rects: rec.rects,
        };
        validate_annotation(&annotation).map_err(parse_err)?;
        if !ids.insert(rec.image_id.clone()) {
            return Err(parse_err(format!("duplicate image id {:?}", rec.image_id)));
        }
        let full = corpus.root.join(&rec.image_path);
        if !full.exists() {
            return Err(Error::MissingAsset(full));
        }
        corpus.entries.push(CorpusEntry {
            image_id: rec.image_id,
            image_path: rec.image_path,
            annotation,
            labels: rec.labels,
        });
    }
    Ok(corpus)
}

/// Writes annotations (ground truth or predictions) as a JSON array.
pub fn save_annotations(annotations: &[FigureAnnotation], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, annotations)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Reads a JSON array of annotations. Rects are checked against the image
/// size; predictions may have no rects.
pub fn load_annotations(path: &Path) -> Result<Vec<FigureAnnotation>> {
    if !path.exists() {
        return Err(Error::MissingAsset(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let anns: Vec<FigureAnnotation> = serde_json::from_str(&text)
        .map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
    for a in &anns {
        if let Some(r) = a.rects.iter().find(|r| !r.fits_within(a.width as usize, a.height as usize)) {
            return Err(Error::Parse {
                line: 0,
                message: format!("{}: rect {r:?} outside the {}x{} image", a.image_id, a.width, a.height),
            });
        }
    }
    Ok(anns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_png(dir: &Path, name: &str, w: usize, h: usize) {
        GrayImage::filled(w, h, 0.5).to_luma8().save(dir.join(name)).unwrap();
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let c = load_corpus(dir.path()).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        write_png(dir.path(), "a.png", 20, 10);
        let mut c = Corpus::new(dir.path());
        c.entries.push(CorpusEntry {
            image_id: "a".into(),
            image_path: "a.png".into(),
            annotation: FigureAnnotation {
                image_id: "a".into(),
                is_compound: true,
                width: 20,
                height: 10,
                rects: vec![Rect::new(0, 0, 10, 10), Rect::new(10, 0, 10, 10)],
            },
            labels: Some(vec![MetaLabel::Illustration, MetaLabel::NonIllustration]),
        });
        c.save().unwrap();
        assert_eq!(load_corpus(dir.path()).unwrap(), c);
        assert_eq!(load_corpus(&dir.path().join(CORPUS_FILE)).unwrap(), c);

        let p = dir.path().join("gt.json");
        save_annotations(&c.annotations(), &p).unwrap();
        assert_eq!(load_annotations(&p).unwrap(), c.annotations());
    }

    #[test]
    fn out_of_bounds_rect_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        write_png(dir.path(), "a.png", 20, 10);
        let lines = [
            r#"{"image_id":"a","image_path":"a.png","is_compound":false,"width":20,"height":10,"rects":[{"x":0,"y":0,"w":20,"h":10}]}"#,
            r#"{"image_id":"b","image_path":"a.png","is_compound":true,"width":20,"height":10,"rects":[{"x":5,"y":0,"w":20,"h":10}]}"#,
        ];
        fs::write(dir.path().join(CORPUS_FILE), lines.join("\n")).unwrap();
        match load_corpus(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(CORPUS_FILE), "{\"image_id\": 3}\n").unwrap();
        assert!(matches!(load_corpus(dir.path()), Err(Error::Parse { line: 1, .. })));
        let rec = r#"{"image_id":"a","image_path":"nope.png","is_compound":false,"width":2,"height":2,"rects":[{"x":0,"y":0,"w":2,"h":2}]}"#;
        fs::write(dir.path().join(CORPUS_FILE), rec).unwrap();
        assert!(matches!(load_corpus(dir.path()), Err(Error::MissingAsset(_))));
    }
}
