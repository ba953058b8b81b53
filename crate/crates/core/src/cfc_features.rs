//! Compound-figure classifier features.
//!
//! Each image is reduced to three projection vectors per direction (mean,
//! variance and a one-dimensional Hough count of Sobel edges), each
//! projection is summarized by a fixed-length spatial profile, and the
//! profiles are concatenated: horizontal mean, variance, Hough, then the
//! same three for the vertical direction.
//!
//! Quantized profiles (methods 1–5) work on bin indices oriented so that
//! the largest index is the most separator-like value for mean and Hough
//! (bright lines, strong edges) and the highest-variance bin for variance.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::raster::{hough_1d, mean_variance_projection, sobel_edges, Direction, GrayImage};

/// Gradient threshold of the Sobel edge map behind the Hough feature.
pub const CFC_SOBEL_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizationParams {
    pub p: usize,
    pub q: usize,
    pub h: usize,
}

impl Default for QuantizationParams {
    fn default() -> Self {
        Self { p: 5, q: 8, h: 3 }
    }
}

impl QuantizationParams {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.q == 0 || self.h == 0 {
            return Err(Error::Domain(format!("quantization bins must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// A feature set `xyz` plus the number `k` of spatial bins.
///
/// `x`, `y` and `z` are the profile methods (0–6) for the mean, variance and
/// Hough projections; 0 drops the component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSetSpec {
    pub mean: u8,
    pub variance: u8,
    pub hough: u8,
    pub k: usize,
}

impl FeatureSetSpec {
    pub fn new(mean: u8, variance: u8, hough: u8, k: usize) -> Result<Self> {
        let spec = Self { mean, variance, hough, k };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses the three-digit set name, e.g. `"434"`.
    pub fn parse(set: &str, k: usize) -> Result<Self> {
        let digits: Vec<u8> = set
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as u8))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Domain(format!("feature set {set:?} is not numeric")))?;
        match digits[..] {
            [x, y, z] => Self::new(x, y, z, k),
            _ => Err(Error::Domain(format!("feature set {set:?} must have three digits"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.mean, self.variance, self.hough].iter().any(|&m| m > 6) {
            return Err(Error::Domain(format!("profile methods must be 0..=6: {}", self.name())));
        }
        if self.mean == 0 && self.variance == 0 && self.hough == 0 {
            return Err(Error::Domain("feature set 000 selects no component".into()));
        }
        if self.k == 0 {
            return Err(Error::Domain("k must be positive".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        format!("{}{}{}", self.mean, self.variance, self.hough)
    }

    /// Length of the extracted vector.
    pub fn dimensionality(&self, qp: &QuantizationParams) -> usize {
        let per_direction: usize = [(self.mean, qp.p), (self.variance, qp.q), (self.hough, qp.h)]
            .iter()
            .map(|&(method, bins)| match method {
                0 => 0,
                1 => self.k * bins,
                _ => self.k,
            })
            .sum();
        2 * per_direction
    }
}

impl fmt::Display for FeatureSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// The ten feature sets studied for the classifier.
pub const STANDARD_SETS: [&str; 10] =
    ["111", "222", "333", "444", "555", "666", "011", "034", "134", "434"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// One line of a feature JSON Lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    #[serde(serialize_with = "ser_set", deserialize_with = "de_set")]
    pub spec: String,
    pub k: usize,
    /// Missing in older files; the defaults apply.
    #[serde(default)]
    pub quantization: QuantizationParams,
    pub values: Vec<f64>,
}

fn ser_set<S: Serializer>(set: &str, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(set)
}

fn de_set<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    // accept both "034" and the bare number 34
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum SetName {
        Text(String),
        Number(u32),
    }
    Ok(match SetName::deserialize(d)? {
        SetName::Text(s) => s,
        SetName::Number(n) => format!("{n:03}"),
    })
}

impl FromStr for QuantizationParams {
    type Err = Error;

    /// Parses `"p,q,h"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Domain(format!("bad quantization params {s:?}: {e}")))?;
        match parts[..] {
            [p, q, h] => {
                let qp = Self { p, q, h };
                qp.validate()?;
                Ok(qp)
            }
            _ => Err(Error::Domain(format!("expected p,q,h, got {s:?}"))),
        }
    }
}

fn check_unit(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("value {v} outside [0, 1]")))
    }
}

/// Bin of a mean intensity among `p` bins with lower bounds `1 - 2^(i-p)`:
/// the smallest `i` whose lower bound is at most `v`. Bin 1 holds the
/// brightest values.
pub fn quantize_mean(v: f64, p: usize) -> Result<usize> {
    check_unit(v)?;
    if p == 0 {
        return Err(Error::Domain("p must be positive".into()));
    }
    Ok((1..=p)
        .find(|&i| 1.0 - (2f64).powi(i as i32 - p as i32) <= v)
        .unwrap_or(p))
}

/// Bin of a line variance among `q` bins with upper bounds `2^(i-q)`:
/// the smallest `i` with `v <= 2^(i-q)`.
pub fn quantize_variance(v: f64, q: usize) -> Result<usize> {
    check_unit(v)?;
    if q == 0 {
        return Err(Error::Domain("q must be positive".into()));
    }
    Ok((1..=q)
        .find(|&i| v <= (2f64).powi(i as i32 - q as i32))
        .unwrap_or(q))
}

/// Bin of a normalized Hough count; same lower-bound scheme as [`quantize_mean`].
pub fn quantize_hough(v: f64, h: usize) -> Result<usize> {
    quantize_mean(v, h)
}

/// Splits `n` positions into `k` contiguous segments whose lengths differ by
/// at most one; the first `n % k` segments are the longer ones.
pub fn spatial_bins(n: usize, k: usize) -> Result<Vec<Range<usize>>> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if n < k {
        return Err(Error::InputTooSmall(format!("{n} positions cannot fill {k} spatial bins")));
    }
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    Ok((0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

/// Spatial profile of a projection vector.
///
/// For methods 1–5 `input` holds oriented bin indices `1..=bins`; for method
/// 6 it holds the raw projection values.
pub fn profile(input: &[f64], method: u8, k: usize, bins: usize) -> Result<Vec<f64>> {
    match method {
        1..=5 => {
            let idx = input
                .iter()
                .map(|&v| {
                    let i = v.round();
                    if i >= 1.0 && i <= bins as f64 && (v - i).abs() < 1e-9 {
                        Ok(i as usize)
                    } else {
                        Err(Error::Domain(format!("{v} is not a bin index in 1..={bins}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            quantized_profile(&idx, method, k, bins)
        }
        6 => fft_profile(input, k),
        _ => Err(Error::Domain(format!("profile method {method} not in 1..=6"))),
    }
}

fn quantized_profile(idx: &[usize], method: u8, k: usize, bins: usize) -> Result<Vec<f64>> {
    let segments = spatial_bins(idx.len(), k)?;
    let b = bins as f64;
    let mut out = Vec::with_capacity(if method == 1 { k * bins } else { k });
    let mut hist = vec![0usize; bins + 1];
    for seg in segments {
        let part = &idx[seg];
        let n = part.len() as f64;
        hist.iter_mut().for_each(|c| *c = 0);
        for &i in part {
            hist[i] += 1;
        }
        match method {
            1 => out.extend(hist[1..].iter().map(|&c| c as f64 / n)),
            2 => {
                // ties go to the smaller bin
                let mode = (1..=bins).fold(1, |best, i| if hist[i] > hist[best] { i } else { best });
                out.push(mode as f64 / b);
            }
            3 => out.push(hist[bins] as f64 / n),
            4 => out.push(*part.iter().max().expect("segment non-empty") as f64 / b),
            5 => out.push(part.iter().sum::<usize>() as f64 / n / b),
            _ => unreachable!("method checked by caller"),
        }
    }
    Ok(out)
}

/// Magnitudes of the first `k` DFT coefficients of `raw`, each divided by
/// the vector length.
fn fft_profile(raw: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = raw.len();
    if n < k {
        return Err(Error::InputTooSmall(format!("{n} positions cannot give {k} coefficients")));
    }
    let mut buf: Vec<Complex<f64>> = raw.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(buf[..k].iter().map(|c| (c.norm() / n as f64).min(1.0)).collect())
}

fn orient_lower_bound(bin: usize, bins: usize) -> usize {
    bins + 1 - bin
}

/// Extracts the classifier feature vector of `img`.
pub fn extract_cfc_features(
    img: &GrayImage,
    spec: &FeatureSetSpec,
    qp: &QuantizationParams,
) -> Result<FeatureVector> {
    spec.validate()?;
    qp.validate()?;
    if img.width() < spec.k || img.height() < spec.k {
        return Err(Error::InputTooSmall(format!(
            "{}x{} image cannot fill k={} spatial bins",
            img.width(),
            img.height(),
            spec.k
        )));
    }
    let mut values = Vec::with_capacity(spec.dimensionality(qp));
    for dir in [Direction::Horizontal, Direction::Vertical] {
        let (means, vars) = if spec.mean != 0 || spec.variance != 0 {
            mean_variance_projection(img, dir)
        } else {
            (Vec::new(), Vec::new())
        };
        if spec.mean != 0 {
            values.extend(component(&means, spec.mean, spec.k, qp.p, |v| {
                quantize_mean(v, qp.p).map(|b| orient_lower_bound(b, qp.p))
            })?);
        }
        if spec.variance != 0 {
            values.extend(component(&vars, spec.variance, spec.k, qp.q, |v| {
                quantize_variance(v, qp.q)
            })?);
        }
        if spec.hough != 0 {
            let edges = sobel_edges(img, dir, CFC_SOBEL_THRESHOLD);
            let extent = img.line_length(dir) as f64;
            let hough: Vec<f64> =
                hough_1d(&edges, dir).iter().map(|&c| f64::from(c) / extent).collect();
            values.extend(component(&hough, spec.hough, spec.k, qp.h, |v| {
                quantize_hough(v, qp.h).map(|b| orient_lower_bound(b, qp.h))
            })?);
        }
    }
    debug_assert_eq!(values.len(), spec.dimensionality(qp));
    Ok(FeatureVector::new(values))
}

fn component(
    projection: &[f64],
    method: u8,
    k: usize,
    bins: usize,
    quantize: impl Fn(f64) -> Result<usize>,
) -> Result<Vec<f64>> {
    if method == 6 {
        return fft_profile(projection, k);
    }
    let idx = projection.iter().map(|&v| quantize(v)).collect::<Result<Vec<_>>>()?;
    quantized_profile(&idx, method, k, bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_quantizer() {
        assert_eq!(quantize_mean(1.0, 5).unwrap(), 1);
        assert_eq!(quantize_mean(0.0, 5).unwrap(), 5);
        assert_eq!(quantize_mean(0.8, 5).unwrap(), 3);
        assert_eq!(quantize_mean(0.75, 5).unwrap(), 3);
        assert_eq!(quantize_mean(0.7499, 5).unwrap(), 4);
        assert!(matches!(quantize_mean(1.01, 5), Err(Error::Domain(_))));
        assert!(quantize_mean(f64::NAN, 5).is_err());
    }

    #[test]
    fn variance_quantizer() {
        assert_eq!(quantize_variance(0.0, 8).unwrap(), 1);
        assert_eq!(quantize_variance(1.0, 8).unwrap(), 8);
        assert_eq!(quantize_variance(0.01, 8).unwrap(), 2);
        assert!(quantize_variance(-0.1, 8).is_err());
    }

    #[test]
    fn hough_quantizer() {
        assert_eq!(quantize_hough(1.0, 3).unwrap(), 1);
        assert_eq!(quantize_hough(0.0, 3).unwrap(), 3);
        assert_eq!(quantize_hough(0.6, 3).unwrap(), 2);
    }

    #[test]
    fn spatial_bin_lengths() {
        let lens = |n, k| spatial_bins(n, k).unwrap().iter().map(|r| r.len()).collect::<Vec<_>>();
        assert_eq!(lens(8, 4), vec![2, 2, 2, 2]);
        assert_eq!(lens(10, 4), vec![3, 3, 2, 2]);
        assert_eq!(lens(5, 5), vec![1, 1, 1, 1, 1]);
        assert!(matches!(spatial_bins(3, 4), Err(Error::InputTooSmall(_))));
    }

    #[test]
    fn profile_examples() {
        assert_eq!(profile(&[2.0; 6], 1, 2, 3).unwrap(), vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        let dc = profile(&[0.4; 12], 6, 4, 0).unwrap();
        assert!((dc[0] - 0.4).abs() < 1e-12);
        assert!(dc[1..].iter().all(|v| v.abs() < 1e-12));
        assert_eq!(profile(&[1.0, 1.0, 2.0, 3.0], 2, 1, 3).unwrap(), vec![1.0 / 3.0]);
        assert!(matches!(profile(&[1.0], 7, 1, 3), Err(Error::Domain(_))));
        assert!(matches!(profile(&[1.0], 0, 1, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn profile_methods_three_to_five() {
        let v = [3.0, 3.0, 1.0, 2.0];
        assert_eq!(profile(&v, 3, 1, 3).unwrap(), vec![0.5]);
        assert_eq!(profile(&v, 4, 1, 3).unwrap(), vec![1.0]);
        assert_eq!(profile(&v, 5, 1, 3).unwrap(), vec![9.0 / 4.0 / 3.0]);
        // mode tie between 1 and 2 resolves to the smaller bin
        assert_eq!(profile(&[2.0, 1.0], 2, 1, 4).unwrap(), vec![0.25]);
    }

    #[test]
    fn set_parsing() {
        let s = FeatureSetSpec::parse("034", 16).unwrap();
        assert_eq!((s.mean, s.variance, s.hough), (0, 3, 4));
        assert_eq!(s.to_string(), "034");
        assert!(FeatureSetSpec::parse("000", 4).is_err());
        assert!(FeatureSetSpec::parse("17", 4).is_err());
        assert!(FeatureSetSpec::parse("171", 4).is_err());
        assert!(FeatureSetSpec::parse("1a1", 4).is_err());
        assert!(FeatureSetSpec::parse("111", 0).is_err());
    }

    #[test]
    fn too_small_image() {
        let img = GrayImage::filled(8, 20, 0.5);
        let spec = FeatureSetSpec::parse("434", 16).unwrap();
        assert!(matches!(
            extract_cfc_features(&img, &spec, &QuantizationParams::default()),
            Err(Error::InputTooSmall(_))
        ));
    }

    #[test]
    fn feature_record_accepts_numeric_set() {
        let r: FeatureRecord =
            serde_json::from_str(r#"{"id":"a","spec":34,"k":4,"values":[0.5]}"#).unwrap();
        assert_eq!(r.spec, "034");
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains(r#""spec":"034""#));
    }
}
