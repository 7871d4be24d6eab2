//! Orthogonal Procrustes alignment and landmark selection.
//!
//! The canonical direction is A → B: the fitted `Q` maps rows of the source
//! space into the reference space (`A ← A·Q`), B is never modified. Applying
//! `Qᵀ` to B instead gives the same cosine distances since `Q` is orthogonal.

use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embedding::{row_cosine_distance, AlignedPair};
use crate::error::{Error, Result};
use crate::io::write_atomic;

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 10_000;

/// An orthogonal map fitted on a set of landmark words.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalTransform {
    pub q: DMatrix<f64>,
    pub landmarks: Vec<String>,
    /// `‖A_L·Q − B_L‖_F` over the landmark rows.
    pub residual: f64,
}

#[derive(Serialize, Deserialize)]
struct TransformJson {
    dimension: usize,
    landmarks: Vec<String>,
    residual: f64,
    q: Vec<f64>,
}

impl OrthogonalTransform {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// JSON document `{dimension, landmarks, residual, q}` with `q` row-major.
    pub fn to_json(&self) -> Result<String> {
        let d = self.dim();
        let q = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| self.q[(i, j)])
            .collect();
        let doc = TransformJson {
            dimension: d,
            landmarks: self.landmarks.clone(),
            residual: self.residual,
            q,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TransformJson = serde_json::from_str(s)?;
        let d = doc.dimension;
        if d == 0 || doc.q.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: doc.q.len(),
            });
        }
        if doc.q.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("transform matrix".into()));
        }
        Ok(OrthogonalTransform {
            q: DMatrix::from_row_slice(d, d, &doc.q),
            landmarks: doc.landmarks,
            residual: doc.residual,
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

/// `‖QᵀQ − I‖_F`.
pub fn orthogonality_error(q: &DMatrix<f64>) -> f64 {
    let n = q.ncols();
    (q.transpose() * q - DMatrix::<f64>::identity(n, n)).norm()
}

/// Solves `min ‖A·Q − B‖_F` over orthogonal `Q`: with `AᵀB = UΣVᵀ`, `Q = UVᵀ`.
///
/// When `Σ` has repeated or zero singular values the minimiser is not unique;
/// any returned `Q` is orthogonal and attains the minimum.
pub fn orthogonal_procrustes(a_sub: &DMatrix<f64>, b_sub: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a_sub.shape() != b_sub.shape() {
        return Err(Error::DimensionMismatch {
            expected: a_sub.nrows(),
            found: b_sub.nrows(),
        });
    }
    if a_sub.nrows() == 0 || a_sub.ncols() == 0 {
        return Err(Error::InvalidArgument("procrustes needs at least one row".into()));
    }
    if a_sub.iter().chain(b_sub.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("procrustes input".into()));
    }
    let m = a_sub.transpose() * b_sub;
    let svd = m
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD did not return singular vectors".into())),
    };
    Ok(u * v_t)
}

pub(crate) fn gather_rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

/// Which end of the frequency ranking to take landmarks from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyEnd {
    Top,
    Bottom,
}

/// Landmark choice for an alignment run.
#[derive(Debug, Clone, PartialEq)]
pub enum LandmarkStrategy {
    Global,
    Frequency { fraction: f64, end: FrequencyEnd },
    /// A word-per-line file, e.g. clean pairs from an external noise detector.
    File(std::path::PathBuf),
    /// Everything except the `q` fraction most cosine-distant words under global alignment.
    CosineSplit(f64),
    /// Self-supervised landmark refinement.
    S4a,
}

impl FromStr for LandmarkStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidArgument(format!(
                "bad landmark strategy `{s}` (expected global, top-freq:F, bot-freq:F, cos-split:Q, file:PATH or s4a)"
            ))
        };
        let freq = |f: &str, end| -> Result<Self> {
            let fraction: f64 = f.parse().map_err(|_| bad())?;
            Ok(LandmarkStrategy::Frequency { fraction, end })
        };
        match s.split_once(':') {
            None if s == "global" => Ok(LandmarkStrategy::Global),
            None if s == "s4a" => Ok(LandmarkStrategy::S4a),
            Some(("top-freq", f)) => freq(f, FrequencyEnd::Top),
            Some(("bot-freq", f)) => freq(f, FrequencyEnd::Bottom),
            Some(("cos-split", q)) => Ok(LandmarkStrategy::CosineSplit(q.parse().map_err(|_| bad())?)),
            Some(("file", p)) if !p.is_empty() => Ok(LandmarkStrategy::File(p.into())),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for LandmarkStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LandmarkStrategy::Global => f.write_str("global"),
            LandmarkStrategy::Frequency { fraction, end: FrequencyEnd::Top } => write!(f, "top-freq:{fraction}"),
            LandmarkStrategy::Frequency { fraction, end: FrequencyEnd::Bottom } => write!(f, "bot-freq:{fraction}"),
            LandmarkStrategy::CosineSplit(q) => write!(f, "cos-split:{q}"),
            LandmarkStrategy::File(p) => write!(f, "file:{}", p.display()),
            LandmarkStrategy::S4a => f.write_str("s4a"),
        }
    }
}

/// `⌈fraction·N⌉` most (`Top`) or least (`Bottom`) frequent common words.
/// Ties in rank are broken lexicographically.
pub fn select_landmarks_frequency(
    pair: &AlignedPair,
    fraction: f64,
    end: FrequencyEnd,
) -> Result<Vec<String>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "landmark fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let ranks = pair
        .freq_rank()
        .ok_or_else(|| Error::MissingFrequency(vec!["<all words>".into()]))?;
    let missing: Vec<String> = pair
        .words()
        .iter()
        .filter(|w| !ranks.contains_key(*w))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFrequency(missing));
    }
    let n = pair.len();
    // guard against 0.05 * 100 = 5.000000000000001
    let count = ((fraction * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    let mut ranked: Vec<(&String, usize)> = pair.words().iter().map(|w| (w, ranks[w])).collect();
    match end {
        FrequencyEnd::Top => ranked.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0))),
        FrequencyEnd::Bottom => ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0))),
    }
    Ok(ranked.into_iter().take(count).map(|(w, _)| w.clone()).collect())
}

/// Globally aligns a copy of the pair and splits the vocabulary by cosine
/// distance: the `⌈q·N⌉` most distant words become non-landmarks, the rest
/// landmarks. Returns `(landmarks, non_landmarks)` as sorted row indices.
pub(crate) fn cosine_split_indices(pair: &AlignedPair, q: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("cosine split fraction must lie in (0, 1), got {q}")));
    }
    let n = pair.len();
    let mut global = pair.clone();
    align_on_indices(&mut global, &(0..n).collect::<Vec<_>>())?;
    let mut by_distance: Vec<(usize, f64)> =
        (0..n).map(|i| shift_at(&global, i).map(|(_, c)| (i, c))).collect::<Result<_>>()?;
    by_distance.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let k = ((q * n as f64) - 1e-9).ceil() as usize;
    let mut m: Vec<usize> = by_distance[..k].iter().map(|p| p.0).collect();
    let mut l: Vec<usize> = by_distance[k..].iter().map(|p| p.0).collect();
    m.sort_unstable();
    l.sort_unstable();
    Ok((l, m))
}

/// Word form of the cosine split: `(landmarks, non_landmarks)` in row order.
pub fn select_landmarks_cosine_split(pair: &AlignedPair, q: f64) -> Result<(Vec<String>, Vec<String>)> {
    let (l, m) = cosine_split_indices(pair, q)?;
    let words = pair.words();
    let names = |idx: Vec<usize>| idx.into_iter().map(|i| words[i].clone()).collect();
    Ok((names(l), names(m)))
}

/// Fits `Q` on the landmark rows and returns a copy of the pair with `A ← A_source·Q`.
pub fn align<S: AsRef<str>>(pair: &AlignedPair, landmarks: &[S]) -> Result<AlignedPair> {
    let mut out = pair.clone();
    align_in_place(&mut out, landmarks)?;
    Ok(out)
}

pub fn align_in_place<S: AsRef<str>>(pair: &mut AlignedPair, landmarks: &[S]) -> Result<()> {
    if landmarks.is_empty() {
        return Err(Error::InvalidArgument("landmark set is empty".into()));
    }
    let idx = pair.indices_of(landmarks)?;
    align_on_indices(pair, &idx)
}

pub(crate) fn align_on_indices(pair: &mut AlignedPair, idx: &[usize]) -> Result<()> {
    if idx.is_empty() {
        return Err(Error::InvalidArgument("landmark set is empty".into()));
    }
    let a_l = gather_rows(pair.a_source(), idx);
    let b_l = gather_rows(pair.b(), idx);
    let q = orthogonal_procrustes(&a_l, &b_l)?;
    let residual = (&a_l * &q - &b_l).norm();
    pair.a = pair.a_source() * &q;
    pair.transform = Some(OrthogonalTransform {
        q,
        landmarks: idx.iter().map(|&i| pair.words()[i].clone()).collect(),
        residual,
    });
    Ok(())
}

/// Applies a previously fitted transform to the pair's source space.
pub fn apply_transform(pair: &AlignedPair, transform: &OrthogonalTransform) -> Result<AlignedPair> {
    if transform.dim() != pair.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.dim(),
            found: transform.dim(),
        });
    }
    let mut out = pair.clone();
    out.a = out.a_source() * &transform.q;
    out.transform = Some(transform.clone());
    Ok(out)
}

/// Euclidean and cosine distance between the aligned rows of `word`.
pub fn shift_magnitude(pair: &AlignedPair, word: &str) -> Result<(f64, f64)> {
    if pair.transform().is_none() {
        return Err(Error::InvalidArgument("pair has not been aligned".into()));
    }
    let i = pair
        .index_of(word)
        .ok_or_else(|| Error::UnknownWords(vec![word.to_string()]))?;
    Ok(shift_at(pair, i)?)
}

pub(crate) fn shift_at(pair: &AlignedPair, i: usize) -> Result<(f64, f64)> {
    let euclid = (pair.a().row(i) - pair.b().row(i)).norm();
    let cos = row_cosine_distance(pair.a(), pair.b(), i)?;
    Ok((euclid, cos))
}
