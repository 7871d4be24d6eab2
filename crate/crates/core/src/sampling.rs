//! Pseudo-labelled batches: perturbed words as positives, landmarks as negatives.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::embedding::AlignedPair;
use crate::error::{Error, Result};

/// Upper bound accepted for the perturbation rate.
pub const MAX_RATE: f64 = 2.0;

/// One training batch. Rows are shuffled; `row_words[i]` and `row_targets[i]`
/// describe row `i` (`row_targets` is `None` for negatives).
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationBatch {
    /// `[A(w) ‖ B'(w)]`, one row per sample, `2d` columns.
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
    /// Sampled positives in draw order, with `targets[i]` the word moved towards.
    pub positive_words: Vec<String>,
    pub targets: Vec<String>,
    pub negative_words: Vec<String>,
    pub row_words: Vec<usize>,
    pub row_targets: Vec<Option<usize>>,
}

impl PerturbationBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub(crate) fn check_rate(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= MAX_RATE) {
        return Err(Error::InvalidArgument(format!(
            "perturbation rate must lie in (0, {MAX_RATE}], got {r}"
        )));
    }
    if r > 1.0 {
        log::warn!("perturbation rate {r} is above 1");
    }
    Ok(())
}

/// `B(w) + r·B(t)`, computed element-wise as `b_w + r * b_t`. `b` is not modified.
pub fn perturb(b: &DMatrix<f64>, w: usize, t: usize, r: f64) -> Result<Vec<f64>> {
    if w == t {
        return Err(Error::InvalidArgument("perturbation target must differ from the word".into()));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("perturbation rate must be positive, got {r}")));
    }
    if w >= b.nrows() || t >= b.nrows() {
        return Err(Error::InvalidArgument("word index out of range".into()));
    }
    Ok((0..b.ncols()).map(|j| b[(w, j)] + r * b[(t, j)]).collect())
}

/// `n` uniform draws with replacement.
pub fn uniform_sample<R: Rng + ?Sized>(set: &[usize], n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| set[rng.random_range(0..set.len())]).collect()
}

/// Draws `n_neg` negatives from `landmarks` and `n_pos` positives from
/// `non_landmarks`, perturbing each positive towards a target drawn from
/// `non_landmarks` (re-drawn until it differs from the positive).
///
/// Both sets hold row indices of `pair`. When `non_landmarks` has fewer than two
/// words, positives and targets come from the whole common vocabulary.
pub fn make_batch<R: Rng + ?Sized>(
    pair: &AlignedPair,
    landmarks: &[usize],
    non_landmarks: &[usize],
    n_pos: usize,
    n_neg: usize,
    r: f64,
    rng: &mut R,
) -> Result<PerturbationBatch> {
    check_rate(r)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument("sample counts must be at least 1".into()));
    }
    if landmarks.is_empty() {
        return Err(Error::InvalidArgument("cannot sample negatives from an empty landmark set".into()));
    }
    let everything: Vec<usize>;
    let pos_pool = if non_landmarks.len() >= 2 {
        non_landmarks
    } else {
        everything = (0..pair.len()).collect();
        &everything
    };
    if pos_pool.len() < 2 {
        return Err(Error::InvalidArgument("need at least two words to draw perturbation targets".into()));
    }

    let negatives = uniform_sample(landmarks, n_neg, rng);
    let positives = uniform_sample(pos_pool, n_pos, rng);
    let targets: Vec<usize> = positives
        .iter()
        .map(|&w| loop {
            let t = pos_pool[rng.random_range(0..pos_pool.len())];
            if t != w {
                break t;
            }
        })
        .collect();

    let mut rows: Vec<(usize, Option<usize>)> = positives
        .iter()
        .zip(&targets)
        .map(|(&w, &t)| (w, Some(t)))
        .chain(negatives.iter().map(|&w| (w, None)))
        .collect();
    rows.shuffle(rng);

    let d = pair.dim();
    let (a, b) = (pair.a(), pair.b());
    let mut features = DMatrix::zeros(rows.len(), 2 * d);
    for (i, &(w, t)) in rows.iter().enumerate() {
        for j in 0..d {
            features[(i, j)] = a[(w, j)];
        }
        match t {
            Some(t) => {
                let moved = perturb(b, w, t, r)?;
                for (j, x) in moved.into_iter().enumerate() {
                    features[(i, d + j)] = x;
                }
            }
            None => {
                for j in 0..d {
                    features[(i, d + j)] = b[(w, j)];
                }
            }
        }
    }

    let words = pair.words();
    Ok(PerturbationBatch {
        features,
        labels: rows.iter().map(|(_, t)| if t.is_some() { 1.0 } else { 0.0 }).collect(),
        positive_words: positives.iter().map(|&i| words[i].clone()).collect(),
        targets: targets.iter().map(|&i| words[i].clone()).collect(),
        negative_words: negatives.iter().map(|&i| words[i].clone()).collect(),
        row_words: rows.iter().map(|(w, _)| *w).collect(),
        row_targets: rows.iter().map(|(_, t)| *t).collect(),
    })
}
