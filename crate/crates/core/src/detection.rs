//! Binary shift detectors over an aligned pair.
//!
//! Every decision rule uses a strict inequality: a word is labelled shifted
//! only when its score is above the threshold.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::alignment::OrthogonalTransform;
use crate::classifier::{predict, MlpWeights, DEFAULT_THRESHOLD};
use crate::embedding::{cosine_distance, row_cosine_distance, row_vec, AlignedPair, EmbeddingTable};
use crate::error::{Error, Result};
use crate::io::{fmt_float, write_atomic};
use crate::sampling::make_batch;

/// Detector family and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Cosine(f64),
    Cdf(f64),
    S4d,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Cosine(t) => write!(f, "cos:{t}"),
            Method::Cdf(t) => write!(f, "cdf:{t}"),
            Method::S4d => f.write_str("s4d"),
        }
    }
}

/// Detector requested on the command line; `cdf` picks its threshold itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorSpec {
    Cosine(f64),
    Cdf,
    S4d,
}

impl FromStr for DetectorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "cdf" => Ok(DetectorSpec::Cdf),
            None if s == "s4d" => Ok(DetectorSpec::S4d),
            Some(("cos", t)) => t
                .parse()
                .map(DetectorSpec::Cosine)
                .map_err(|_| Error::InvalidArgument(format!("bad cosine threshold `{t}`"))),
            _ => Err(Error::InvalidArgument(format!(
                "unknown detector `{s}` (expected cos:T, cdf or s4d)"
            ))),
        }
    }
}

impl fmt::Display for DetectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectorSpec::Cosine(t) => write!(f, "cos:{t}"),
            DetectorSpec::Cdf => f.write_str("cdf"),
            DetectorSpec::S4d => f.write_str("s4d"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPrediction {
    pub word: String,
    /// Cosine distance, CDF value or classifier probability, depending on `method`.
    pub score: f64,
    pub label: u8,
    pub method: Method,
}

/// Predictions in input order, plus requested words that could not be scored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Detection {
    pub predictions: Vec<ShiftPrediction>,
    pub skipped: Vec<String>,
}

impl Detection {
    /// `word<TAB>score<TAB>label<TAB>method` lines.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for p in &self.predictions {
            writeln!(s, "{}\t{}\t{}\t{}", p.word, fmt_float(p.score), p.label, p.method).unwrap();
        }
        s
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_tsv().as_bytes())
    }
}

/// Vectors to score: `a` is already in B's space.
#[derive(Debug, Clone, Default)]
pub struct Targets {
    pub keys: Vec<String>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub skipped: Vec<String>,
}

impl Targets {
    /// Common-vocabulary words, read from the aligned pair. Unknown words are skipped.
    pub fn from_pair<S: AsRef<str>>(pair: &AlignedPair, words: &[S]) -> Self {
        let mut t = Targets::default();
        for w in words {
            let w = w.as_ref();
            match pair.index_of(w) {
                Some(i) => {
                    t.keys.push(w.to_string());
                    t.a.push(row_vec(pair.a(), i));
                    t.b.push(row_vec(pair.b(), i));
                }
                None => t.skipped.push(w.to_string()),
            }
        }
        t
    }

    /// Word pairs `(word in A, word in B)` looked up in the full tables, so words
    /// outside the common vocabulary can still be compared. The A vector is mapped
    /// with `transform`. Keys are `wordA` when both words match, else `wordA/wordB`.
    pub fn from_tables(
        table_a: &EmbeddingTable,
        table_b: &EmbeddingTable,
        transform: &OrthogonalTransform,
        pairs: &[(String, String)],
    ) -> Result<Self> {
        if transform.dim() != table_a.dim() || table_a.dim() != table_b.dim() {
            return Err(Error::DimensionMismatch {
                expected: table_a.dim(),
                found: transform.dim(),
            });
        }
        let mut t = Targets::default();
        for (wa, wb) in pairs {
            let key = if wa == wb { wa.clone() } else { format!("{wa}/{wb}") };
            match (table_a.vector(wa), table_b.vector(wb)) {
                (Some(va), Some(vb)) => {
                    let mapped = va * &transform.q;
                    t.keys.push(key);
                    t.a.push(mapped.iter().copied().collect());
                    t.b.push(vb.iter().copied().collect());
                }
                _ => t.skipped.push(key),
            }
        }
        Ok(t)
    }

    fn distances(&self) -> Result<Vec<f64>> {
        self.a.iter().zip(&self.b).map(|(a, b)| cosine_distance(a, b)).collect()
    }
}

/// Cosine distance between the aligned rows of every common word, in row order.
pub fn all_distances(pair: &AlignedPair) -> Result<Vec<f64>> {
    (0..pair.len()).map(|i| row_cosine_distance(pair.a(), pair.b(), i)).collect()
}

pub fn cosine_predictions(targets: &Targets, threshold: f64) -> Result<Detection> {
    let predictions = targets
        .keys
        .iter()
        .zip(targets.distances()?)
        .map(|(w, d)| ShiftPrediction {
            word: w.clone(),
            score: d,
            label: u8::from(d > threshold),
            method: Method::Cosine(threshold),
        })
        .collect();
    Ok(Detection {
        predictions,
        skipped: targets.skipped.clone(),
    })
}

/// Label 1 iff the cosine distance is above `threshold`.
pub fn classify_cosine<S: AsRef<str>>(pair: &AlignedPair, words: &[S], threshold: f64) -> Result<Detection> {
    cosine_predictions(&Targets::from_pair(pair, words), threshold)
}

/// Fraction of `all_distances` strictly below `x`.
pub fn empirical_cdf_value(all_distances: &[f64], x: f64) -> f64 {
    if all_distances.is_empty() {
        return 0.0;
    }
    all_distances.iter().filter(|&&d| d < x).count() as f64 / all_distances.len() as f64
}

/// Sorted copy of a population, for repeated CDF queries.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("CDF population is empty".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted })
    }

    pub fn value(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&d| d < x) as f64 / self.sorted.len() as f64
    }
}

/// Candidate thresholds 0.1, 0.2, …, 0.9.
pub fn threshold_grid() -> impl Iterator<Item = f64> {
    (1..=9).map(|k| k as f64 / 10.0)
}

/// Leave-one-out accuracy of the rule `cdf > t ⇒ 1` for each grid threshold;
/// returns the best `t`, the smallest on ties.
///
/// The rule has no fitted parameters, so the held-out prediction for a sample
/// does not depend on the remaining samples and the leave-one-out accuracy
/// equals the fraction of samples the rule gets right.
pub fn select_threshold_loocv(samples: &[(f64, u8)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("threshold selection needs at least 2 samples".into()));
    }
    let positives = samples.iter().filter(|s| s.1 == 1).count();
    if positives == 0 || positives == samples.len() {
        return Err(Error::InvalidArgument("threshold selection needs both labels".into()));
    }
    let mut best = (0usize, f64::NAN);
    for t in threshold_grid() {
        let correct = samples.iter().filter(|(v, y)| u8::from(*v > t) == *y).count();
        if best.1.is_nan() || correct > best.0 {
            best = (correct, t);
        }
    }
    Ok(best.1)
}

/// Self-supervised calibration samples: one perturbation batch, each row scored
/// by the CDF of its `A ↔ B'` cosine distance against the vocabulary's distances.
pub fn calibration_samples<R: Rng + ?Sized>(
    pair: &AlignedPair,
    landmarks: &[usize],
    non_landmarks: &[usize],
    n_pos: usize,
    n_neg: usize,
    r: f64,
    rng: &mut R,
) -> Result<Vec<(f64, u8)>> {
    let cdf = EmpiricalCdf::new(&all_distances(pair)?)?;
    let batch = make_batch(pair, landmarks, non_landmarks, n_pos, n_neg, r, rng)?;
    let d = pair.dim();
    (0..batch.len())
        .map(|i| {
            let row: Vec<f64> = batch.features.row(i).iter().copied().collect();
            let dist = cosine_distance(&row[..d], &row[d..])?;
            Ok((cdf.value(dist), batch.labels[i] as u8))
        })
        .collect()
}

/// Scores targets by the empirical CDF of their cosine distance over the common
/// vocabulary; label 1 iff the CDF value is above `t`.
pub fn cdf_predictions(targets: &Targets, population: &EmpiricalCdf, t: f64) -> Result<Detection> {
    let predictions = targets
        .keys
        .iter()
        .zip(targets.distances()?)
        .map(|(w, d)| {
            let score = population.value(d);
            ShiftPrediction {
                word: w.clone(),
                score,
                label: u8::from(score > t),
                method: Method::Cdf(t),
            }
        })
        .collect();
    Ok(Detection {
        predictions,
        skipped: targets.skipped.clone(),
    })
}

pub fn classify_cdf<S: AsRef<str>>(pair: &AlignedPair, words: &[S], t: f64) -> Result<Detection> {
    let population = EmpiricalCdf::new(&all_distances(pair)?)?;
    cdf_predictions(&Targets::from_pair(pair, words), &population, t)
}

pub fn s4d_predictions(weights: &MlpWeights, targets: &Targets) -> Result<Detection> {
    let predictions = targets
        .keys
        .iter()
        .zip(targets.a.iter().zip(&targets.b))
        .map(|(w, (a, b))| {
            let (label, p) = predict(weights, a, b, DEFAULT_THRESHOLD)?;
            Ok(ShiftPrediction {
                word: w.clone(),
                score: p,
                label,
                method: Method::S4d,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Detection {
        predictions,
        skipped: targets.skipped.clone(),
    })
}

pub fn classify_s4d<S: AsRef<str>>(weights: &MlpWeights, pair: &AlignedPair, words: &[S]) -> Result<Detection> {
    s4d_predictions(weights, &Targets::from_pair(pair, words))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::align;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn pair_with_distances() -> AlignedPair {
        // row i of B is A's row rotated by a growing angle
        let angles = [0.0, 0.5, 1.0, 1.5707963267948966, 2.5];
        let n = angles.len();
        let a = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { 0.0 });
        let b = DMatrix::from_fn(n, 2, |i, j| if j == 0 { f64::cos(angles[i]) } else { f64::sin(angles[i]) });
        let words = (0..n).map(|i| format!("w{i}")).collect();
        let p = AlignedPair::new(words, a, b).unwrap();
        let mut aligned = p.clone();
        aligned.transform = Some(OrthogonalTransform {
            q: DMatrix::identity(2, 2),
            landmarks: vec!["w0".into()],
            residual: 0.0,
        });
        aligned
    }

    #[test]
    fn cosine_rule_is_strict() {
        let p = pair_with_distances();
        // w3 is at distance exactly 1 (orthogonal)
        let det = classify_cosine(&p, &["w3", "w4", "w0", "zzz"], 1.0).unwrap();
        let labels: Vec<u8> = det.predictions.iter().map(|p| p.label).collect();
        assert_eq!(labels, [0, 1, 0]);
        assert_eq!(det.skipped, ["zzz"]);
        assert_eq!(det.predictions[2].score, 0.0);
        assert_eq!(det.predictions[0].method.to_string(), "cos:1");
    }

    #[test]
    fn cdf_values() {
        let d = [0.1, 0.2, 0.3];
        assert!((empirical_cdf_value(&d, 0.25) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(empirical_cdf_value(&d, 0.0), 0.0);
        assert_eq!(empirical_cdf_value(&d, 0.5), 1.0);
        let cdf = EmpiricalCdf::new(&d).unwrap();
        assert_eq!(cdf.value(0.25), empirical_cdf_value(&d, 0.25));
        assert_eq!(cdf.value(0.1), 0.0);
    }

    #[test]
    fn cdf_extremes() {
        let p = pair_with_distances();
        let det = classify_cdf(&p, &["w4", "w0"], 0.7).unwrap();
        assert!((det.predictions[0].score - 0.8).abs() < 1e-15);
        assert_eq!(det.predictions[0].label, 1);
        assert_eq!(det.predictions[1].score, 0.0);
        assert_eq!(det.predictions[1].label, 0);
    }

    #[test]
    fn loocv_tie_breaks_low() {
        let samples = [(0.9, 1), (0.95, 1), (0.88, 1), (0.12, 0), (0.14, 0), (0.11, 0)];
        assert_eq!(select_threshold_loocv(&samples).unwrap(), 0.2);
        assert!(select_threshold_loocv(&[(0.5, 1)]).is_err());
        assert!(select_threshold_loocv(&[(0.5, 1), (0.6, 1)]).is_err());
    }

    #[test]
    fn s4d_with_zero_weights() {
        let p = pair_with_distances();
        let w = MlpWeights::zeros(2, 4);
        let det = classify_s4d(&w, &p, &["w1", "w2"]).unwrap();
        assert!(det.predictions.iter().all(|p| p.score == 0.5 && p.label == 0));
    }

    #[test]
    fn tsv_format() {
        let p = pair_with_distances();
        let det = classify_cosine(&p, &["w0"], 0.5).unwrap();
        assert_eq!(det.to_tsv(), "w0\t0\t0\tcos:0.5\n");
    }

    #[test]
    fn word_pairs_from_tables() {
        let ta = EmbeddingTable::new(vec!["labour".into(), "x".into()], DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0])).unwrap();
        let tb = EmbeddingTable::new(vec!["labor".into(), "x".into()], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let q = OrthogonalTransform {
            q: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            landmarks: vec!["x".into()],
            residual: 0.0,
        };
        let pairs = vec![("labour".to_string(), "labor".to_string()), ("x".into(), "x".into()), ("a".into(), "b".into())];
        let t = Targets::from_tables(&ta, &tb, &q, &pairs).unwrap();
        assert_eq!(t.keys, ["labour/labor", "x"]);
        assert_eq!(t.skipped, ["a/b"]);
        let det = cosine_predictions(&t, 0.5).unwrap();
        assert!(det.predictions[0].score.abs() < 1e-15);
    }

    #[test]
    fn parse_detectors() {
        assert_eq!("cos:0.3".parse::<DetectorSpec>().unwrap(), DetectorSpec::Cosine(0.3));
        assert_eq!("cdf".parse::<DetectorSpec>().unwrap(), DetectorSpec::Cdf);
        assert_eq!("s4d".parse::<DetectorSpec>().unwrap(), DetectorSpec::S4d);
        assert!("cos:x".parse::<DetectorSpec>().is_err());
    }

    proptest! {
        #[test]
        fn raising_thresholds_never_adds_positives(t1 in 0.0f64..2.0, dt in 0.0f64..1.0) {
            let p = pair_with_distances();
            let words: Vec<String> = p.words().to_vec();
            let lo = classify_cosine(&p, &words, t1).unwrap();
            let hi = classify_cosine(&p, &words, t1 + dt).unwrap();
            for (a, b) in lo.predictions.iter().zip(&hi.predictions) {
                prop_assert!(b.label <= a.label);
            }
        }

        #[test]
        fn cdf_is_non_decreasing(values in proptest::collection::vec(0.0f64..2.0, 1..40),
                                 x in 0.0f64..2.0, dx in 0.0f64..1.0) {
            prop_assert!(empirical_cdf_value(&values, x) <= empirical_cdf_value(&values, x + dx));
        }

        #[test]
        fn cosine_labels_survive_a_shared_rotation(theta in 0.0f64..6.283) {
            let p = pair_with_distances();
            let words: Vec<String> = p.words().to_vec();
            let g = DMatrix::from_row_slice(2, 2, &[theta.cos(), theta.sin(), -theta.sin(), theta.cos()]);
            let rotated = AlignedPair::new(words.clone(), p.a() * &g, p.b() * &g).unwrap();
            let rotated = align(&rotated, &words[..1]).unwrap();
            let base = align(&AlignedPair::new(words.clone(), p.a().clone(), p.b().clone()).unwrap(), &words[..1]).unwrap();
            let x = classify_cosine(&base, &words, 0.3).unwrap();
            let y = classify_cosine(&rotated, &words, 0.3).unwrap();
            let lx: Vec<u8> = x.predictions.iter().map(|p| p.label).collect();
            let ly: Vec<u8> = y.predictions.iter().map(|p| p.label).collect();
            prop_assert_eq!(lx, ly);
        }
    }
}
