//! Python bindings: images, parameters, separation, features, scoring and
//! synthetic data.

#[pyo3::pymodule]
mod figsep {
    use std::path::PathBuf;

    use pyo3::exceptions::{PyFileNotFoundError, PyOSError, PyValueError};
    use pyo3::prelude::*;
    use pyo3::types::PyDict;

    use figsep_core::cfc_features::{extract_cfc_features, FeatureSetSpec, QuantizationParams};
    use figsep_core::cfs::{separate_with, SeparateOptions};
    use figsep_core::data::synth::{synth_generate as generate, SynthSpec};
    use figsep_core::data::{load_annotations, load_corpus};
    use figsep_core::edge_sep::HoughContext;
    use figsep_core::eval::{self, Protocol};
    use figsep_core::learn::LossMatrix;
    use figsep_core::{CfsParams, Error, FixedRouter, GrayImage, Rect, Routing, Variant};

    type PyRect = (u32, u32, u32, u32);

    fn py_err(e: Error) -> PyErr {
        match e {
            Error::MissingAsset(p) => PyFileNotFoundError::new_err(p.display().to_string()),
            Error::Io(e) => PyOSError::new_err(e.to_string()),
            other => PyValueError::new_err(other.to_string()),
        }
    }

    fn rects(v: &[PyRect]) -> Vec<Rect> {
        v.iter().map(|&(x, y, w, h)| Rect::new(x, y, w, h)).collect()
    }

    fn tuples(v: &[Rect]) -> Vec<PyRect> {
        v.iter().map(|r| (r.x, r.y, r.w, r.h)).collect()
    }

    fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
        py.import("json")?.call_method1("loads", (text,))
    }

    /// Grayscale image with intensities in [0, 1].
    #[pyclass(name = "Image", frozen)]
    struct PyImage(GrayImage);

    #[pymethods]
    impl PyImage {
        /// Row-major pixel values.
        #[new]
        fn new(width: usize, height: usize, pixels: Vec<f32>) -> PyResult<Self> {
            GrayImage::new(width, height, pixels).map(Self).map_err(py_err)
        }

        #[staticmethod]
        fn load(path: PathBuf) -> PyResult<Self> {
            figsep_core::raster::load_gray(&path).map(Self).map_err(py_err)
        }

        #[staticmethod]
        fn filled(width: usize, height: usize, value: f32) -> Self {
            Self(GrayImage::filled(width, height, value))
        }

        #[getter]
        fn width(&self) -> usize {
            self.0.width()
        }

        #[getter]
        fn height(&self) -> usize {
            self.0.height()
        }

        fn pixels(&self) -> Vec<f32> {
            self.0.pixels().to_vec()
        }

        fn mean(&self) -> f64 {
            self.0.mean()
        }

        fn crop(&self, rect: PyRect) -> PyResult<Self> {
            let r = rects(&[rect])[0];
            if !r.fits_within(self.0.width(), self.0.height()) {
                return Err(PyValueError::new_err(format!("{rect:?} outside the image")));
            }
            Ok(Self(self.0.crop(r)))
        }

        fn __repr__(&self) -> String {
            format!("Image({}x{})", self.0.width(), self.0.height())
        }
    }

    /// Separation parameters; the tuned values unless built from a preset.
    #[pyclass(name = "Params", from_py_object)]
    #[derive(Clone)]
    struct PyParams(CfsParams);

    #[pymethods]
    impl PyParams {
        #[new]
        fn new() -> Self {
            Self(CfsParams::default())
        }

        /// `"optimal"` or `"initial"`.
        #[staticmethod]
        fn preset(name: &str) -> PyResult<Self> {
            CfsParams::preset(name).map(Self).map_err(py_err)
        }

        #[staticmethod]
        fn from_json(text: &str) -> PyResult<Self> {
            let p: CfsParams = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
            p.validate().map_err(py_err)?;
            Ok(Self(p))
        }

        /// Names accepted by `get` and `set`.
        #[staticmethod]
        fn names() -> Vec<&'static str> {
            CfsParams::NUMERIC.to_vec()
        }

        fn get(&self, name: &str) -> PyResult<f64> {
            self.0.get(name).map_err(py_err)
        }

        fn set(&mut self, name: &str, value: f64) -> PyResult<()> {
            let mut p = self.0.clone();
            p.set(name, value).map_err(py_err)?;
            p.validate().map_err(py_err)?;
            self.0 = p;
            Ok(())
        }

        fn to_json(&self) -> String {
            serde_json::to_string(&self.0).expect("parameters serialize")
        }

        fn __repr__(&self) -> String {
            format!("Params({})", self.to_json())
        }
    }

    /// Subfigure boxes `(x, y, w, h)` of `image`.
    #[pyfunction]
    #[pyo3(signature = (image, params=None, routing="edge", variant="once"))]
    fn separate(
        py: Python<'_>,
        image: &PyImage,
        params: Option<PyParams>,
        routing: &str,
        variant: &str,
    ) -> PyResult<Vec<PyRect>> {
        let params = params.map(|p| p.0).unwrap_or_default();
        let router = FixedRouter(routing.parse::<Routing>().map_err(py_err)?);
        let variant: Variant = variant.parse().map_err(py_err)?;
        let opts = SeparateOptions { variant, ..SeparateOptions::default() };
        let img = &image.0;
        let res = py.detach(|| separate_with(img, &params, &router, &opts));
        Ok(tuples(&res.rects))
    }

    #[pyfunction]
    #[pyo3(signature = (image, set="434", k=16, p=5, q=8, h=3))]
    fn extract_features(
        py: Python<'_>,
        image: &PyImage,
        set: &str,
        k: usize,
        p: usize,
        q: usize,
        h: usize,
    ) -> PyResult<Vec<f64>> {
        let spec = FeatureSetSpec::parse(set, k).map_err(py_err)?;
        let qp = QuantizationParams { p, q, h };
        let img = &image.0;
        py.detach(|| extract_cfc_features(img, &spec, &qp)).map(|f| f.values).map_err(py_err)
    }

    #[pyfunction]
    #[pyo3(signature = (set, k, p=5, q=8, h=3))]
    fn feature_dimensionality(set: &str, k: usize, p: usize, q: usize, h: usize) -> PyResult<usize> {
        let spec = FeatureSetSpec::parse(set, k).map_err(py_err)?;
        Ok(spec.dimensionality(&QuantizationParams { p, q, h }))
    }

    #[pyfunction]
    fn peak_threshold(depth: usize, max: f64, fill_ratio: f64, alpha: f64, beta: f64) -> f64 {
        figsep_core::edge_sep::peak_threshold(&HoughContext { depth, max, fill_ratio }, alpha, beta)
    }

    /// Minimum compound probability for loss weight `alpha`.
    #[pyfunction]
    fn decision_threshold(alpha: f64) -> PyResult<f64> {
        LossMatrix::new(alpha).map(|m| m.threshold()).map_err(py_err)
    }

    #[pyfunction]
    fn imageclef_score(gt: Vec<PyRect>, det: Vec<PyRect>) -> f64 {
        eval::imageclef_score(&rects(&gt), &rects(&det))
    }

    #[pyfunction]
    fn nlm_true_positives(gt: Vec<PyRect>, det: Vec<PyRect>) -> usize {
        eval::nlm_true_positives(&rects(&gt), &rects(&det))
    }

    #[pyfunction]
    fn nlm_aggregate(py: Python<'_>, g: usize, d: usize, t: usize) -> PyResult<Bound<'_, PyDict>> {
        let a = eval::nlm_aggregate(g, d, t);
        let out = PyDict::new(py);
        out.set_item("precision_pct", a.precision_pct)?;
        out.set_item("recall_pct", a.recall_pct)?;
        out.set_item("f1_pct", a.f1_pct)?;
        out.set_item("precision_undefined", a.precision_undefined)?;
        Ok(out)
    }

    /// Writes a synthetic corpus to `out_dir`; returns the number of figures.
    #[pyfunction]
    #[pyo3(signature = (out_dir, spec_json=None, seed=None))]
    fn synth_generate(py: Python<'_>, out_dir: PathBuf, spec_json: Option<&str>, seed: Option<u64>) -> PyResult<usize> {
        let mut spec: SynthSpec = match spec_json {
            Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => SynthSpec::default(),
        };
        if let Some(s) = seed {
            spec.seed = s;
        }
        py.detach(|| generate(&spec, &out_dir)).map(|c| c.len()).map_err(py_err)
    }

    /// Scores predictions against ground truth (annotation JSON or corpus
    /// directory); returns the report as a dict.
    #[pyfunction]
    #[pyo3(signature = (gt, pred, protocol="imageclef", chain=false))]
    fn evaluate<'py>(
        py: Python<'py>,
        gt: PathBuf,
        pred: PathBuf,
        protocol: &str,
        chain: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let protocol: Protocol = protocol.parse().map_err(py_err)?;
        let gt = if gt.is_dir() { load_corpus(&gt).map(|c| c.annotations()) } else { load_annotations(&gt) }
            .map_err(py_err)?;
        let pred = load_annotations(&pred).map_err(py_err)?;
        let report = if chain {
            eval::chain_evaluate(&gt, &pred, protocol)
        } else {
            eval::evaluate(&gt, &pred, protocol)
        }
        .map_err(py_err)?;
        json_to_py(py, &serde_json::to_string(&report).expect("report serializes"))
    }
}
