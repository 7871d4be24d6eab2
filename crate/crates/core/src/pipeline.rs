//! S4-D training over a fixed alignment, and the S4-A landmark refinement loop.

use std::collections::HashSet;
use std::hash::Hash;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::{
    align, align_on_indices, cosine_split_indices, select_landmarks_cosine_split, select_landmarks_frequency,
    LandmarkStrategy, OrthogonalTransform,
};
use crate::classifier::{forward_batch, init_weights, MlpWeights, TrainConfig, Trainer, DEFAULT_THRESHOLD};
use crate::embedding::AlignedPair;
use crate::error::{Error, Result};
use crate::io::{read_word_list, write_atomic};
use crate::sampling::{check_rate, make_batch};

/// Sampling and training parameters shared by S4-D and S4-A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S4Params {
    pub n_pos: usize,
    pub n_neg: usize,
    /// Perturbation rate, in `(0, 2]`.
    pub r: f64,
    pub iterations: usize,
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for S4Params {
    /// Detection defaults: 1000 positives and 1000 negatives per iteration,
    /// `r = 0.25`, 100 iterations.
    fn default() -> Self {
        S4Params {
            n_pos: 1000,
            n_neg: 1000,
            r: 0.25,
            iterations: 100,
            seed: 42,
            train: TrainConfig::default(),
        }
    }
}

/// Named parameter sets. `detect` is the default; the language profiles are
/// the per-language S4-A settings (`n` positives, `m` negatives).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Detect,
    English,
    German,
    Latin,
    Swedish,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "detect" | "s4d" => Ok(Profile::Detect),
            "english" => Ok(Profile::English),
            "german" => Ok(Profile::German),
            "latin" => Ok(Profile::Latin),
            "swedish" => Ok(Profile::Swedish),
            _ => Err(Error::InvalidArgument(format!("unknown profile `{s}`"))),
        }
    }
}

impl S4Params {
    pub fn profile(p: Profile) -> Self {
        let base = S4Params::default();
        let (n_pos, n_neg, r) = match p {
            Profile::Detect => return base,
            Profile::English => (100, 50, 1.0),
            Profile::German => (100, 200, 1.0),
            Profile::Latin => (10, 4, 0.5),
            Profile::Swedish => (100, 200, 1.0),
        };
        S4Params {
            n_pos,
            n_neg,
            r,
            iterations: 100,
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pos == 0 || self.n_neg == 0 {
            return Err(Error::InvalidArgument("n_pos and n_neg must be at least 1".into()));
        }
        check_rate(self.r)?;
        self.train.validate()
    }
}

/// Output of [`s4d_train`].
#[derive(Debug, Clone)]
pub struct S4dModel {
    pub weights: MlpWeights,
    /// Mean training loss of each iteration.
    pub losses: Vec<f64>,
}

/// Trains the shift classifier on an already aligned pair: each iteration draws
/// a fresh batch (negatives from `landmarks`, perturbed positives from
/// `non_landmarks`) and runs one training update.
pub fn s4d_train<S: AsRef<str>>(
    pair: &AlignedPair,
    landmarks: &[S],
    non_landmarks: &[S],
    params: &S4Params,
) -> Result<S4dModel> {
    if pair.transform().is_none() {
        return Err(Error::InvalidArgument("S4-D needs an aligned pair".into()));
    }
    params.validate()?;
    let l = pair.indices_of(landmarks)?;
    let m = pair.indices_of(non_landmarks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let weights = init_weights(pair.dim(), params.train.hidden, &mut rng)?;
    let mut trainer = Trainer::new(params.train, weights)?;
    let mut losses = Vec::with_capacity(params.iterations);
    for _ in 0..params.iterations {
        let batch = make_batch(pair, &l, &m, params.n_pos, params.n_neg, params.r, &mut rng)?;
        losses.push(trainer.update(&batch)?);
    }
    Ok(S4dModel {
        weights: trainer.weights,
        losses,
    })
}

/// Starting partition for S4-A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum S4aInit {
    /// Every word is a landmark; positives come from the whole vocabulary.
    AllLandmarks,
    /// Globally align, then mark the `q` fraction most cosine-distant words as non-landmarks.
    CosineSplit(f64),
}

impl FromStr for S4aInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "all" || s == "all_landmarks" => Ok(S4aInit::AllLandmarks),
            None if s == "cosine_split" => Ok(S4aInit::CosineSplit(0.1)),
            Some(("cosine_split", q)) => q
                .parse()
                .ok()
                .filter(|q: &f64| *q > 0.0 && *q < 1.0)
                .map(S4aInit::CosineSplit)
                .ok_or_else(|| Error::InvalidArgument(format!("bad cosine_split fraction `{q}`"))),
            _ => Err(Error::InvalidArgument(format!(
                "unknown S4-A init `{s}` (expected all or cosine_split:Q)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct S4AResult {
    pub landmarks: Vec<String>,
    pub non_landmarks: Vec<String>,
    pub weights: MlpWeights,
    /// Fitted on the final landmark set.
    pub transform: OrthogonalTransform,
    /// `J(L_i, L_{i-1})` for iterations `1..=K`.
    pub jaccard_history: Vec<f64>,
    pub losses: Vec<f64>,
    /// The input pair aligned with `transform`.
    pub aligned: AlignedPair,
}

impl S4AResult {
    /// Cumulative mean of the Jaccard history.
    pub fn running_jaccard(&self) -> Vec<f64> {
        running_mean(&self.jaccard_history)
    }

    /// `{landmarks, non_landmarks, jaccard_history, transform, weights}` where
    /// the last two are file references.
    pub fn to_json(&self, transform_ref: &str, weights_ref: &str) -> Result<String> {
        let doc = serde_json::json!({
            "landmarks": self.landmarks,
            "non_landmarks": self.non_landmarks,
            "jaccard_history": self.jaccard_history,
            "transform": transform_ref,
            "weights": weights_ref,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn write_landmarks(&self, path: &Path) -> Result<()> {
        let mut s = self.landmarks.join("\n");
        s.push('\n');
        write_atomic(path, s.as_bytes())
    }
}

fn concat_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = a.shape();
    let mut x = DMatrix::zeros(n, 2 * d);
    x.columns_mut(0, d).copy_from(a);
    x.columns_mut(d, d).copy_from(b);
    x
}

/// Classifier probabilities for every common word, `[A(w) ‖ B(w)]` on the current alignment.
pub fn predict_all(weights: &MlpWeights, pair: &AlignedPair) -> Result<Vec<f64>> {
    let x = concat_columns(pair.a(), pair.b());
    Ok(forward_batch(weights, &x)?.iter().copied().collect())
}

fn initial_partition(pair: &AlignedPair, init: S4aInit) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = pair.len();
    match init {
        S4aInit::AllLandmarks => Ok(((0..n).collect(), Vec::new())),
        S4aInit::CosineSplit(q) => {
            let (l, m) = cosine_split_indices(pair, q)?;
            if l.is_empty() {
                return Err(Error::EmptyLandmarks { iteration: 0 });
            }
            Ok((l, m))
        }
    }
}

/// Self-supervised landmark refinement.
///
/// Each iteration aligns A to B on the current landmarks, trains the
/// classifier on one fresh batch, predicts every common word, and makes the
/// words predicted stable the new landmark set.
pub fn s4a(pair: &AlignedPair, params: &S4Params, init: S4aInit) -> Result<S4AResult> {
    params.validate()?;
    if params.iterations == 0 {
        return Err(Error::InvalidArgument("S4-A needs at least one iteration".into()));
    }
    let mut work = pair.clone();
    let (mut l, mut m) = initial_partition(&work, init)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let weights = init_weights(work.dim(), params.train.hidden, &mut rng)?;
    let mut trainer = Trainer::new(params.train, weights)?;
    let mut jaccard_history = Vec::with_capacity(params.iterations);
    let mut losses = Vec::with_capacity(params.iterations);

    for iteration in 1..=params.iterations {
        align_on_indices(&mut work, &l)?;
        let batch = make_batch(&work, &l, &m, params.n_pos, params.n_neg, params.r, &mut rng)?;
        losses.push(trainer.update(&batch)?);
        let probs = predict_all(&trainer.weights, &work)?;
        let (next_l, next_m): (Vec<usize>, Vec<usize>) =
            (0..work.len()).partition(|&i| probs[i] <= DEFAULT_THRESHOLD);
        if next_l.is_empty() {
            return Err(Error::EmptyLandmarks { iteration });
        }
        jaccard_history.push(jaccard_sorted(&l, &next_l));
        log::debug!(
            "s4a iteration {iteration}: {} landmarks, loss {:.4}",
            next_l.len(),
            losses.last().unwrap()
        );
        l = next_l;
        m = next_m;
    }

    align_on_indices(&mut work, &l)?;
    let words = work.words();
    Ok(S4AResult {
        landmarks: l.iter().map(|&i| words[i].clone()).collect(),
        non_landmarks: m.iter().map(|&i| words[i].clone()).collect(),
        weights: trainer.weights,
        transform: work.transform().cloned().expect("aligned above"),
        jaccard_history,
        losses,
        aligned: work,
    })
}

/// An aligned pair together with the landmark partition that produced it.
pub struct Alignment {
    pub pair: AlignedPair,
    pub landmarks: Vec<String>,
    pub non_landmarks: Vec<String>,
    pub s4a: Option<S4AResult>,
}

fn complement(pair: &AlignedPair, landmarks: &[String]) -> Vec<String> {
    let set: std::collections::HashSet<&str> = landmarks.iter().map(String::as_str).collect();
    pair.words().iter().filter(|w| !set.contains(w.as_str())).cloned().collect()
}

/// Selects landmarks with `strategy` and aligns on them.
pub fn align_with_strategy(
    pair: &AlignedPair,
    strategy: &LandmarkStrategy,
    params: &S4Params,
    init: S4aInit,
) -> Result<Alignment> {
    let (landmarks, non_landmarks) = match strategy {
        LandmarkStrategy::Global => (pair.words().to_vec(), Vec::new()),
        LandmarkStrategy::Frequency { fraction, end } => {
            let l = select_landmarks_frequency(pair, *fraction, *end)?;
            let m = complement(pair, &l);
            (l, m)
        }
        LandmarkStrategy::CosineSplit(q) => select_landmarks_cosine_split(pair, *q)?,
        LandmarkStrategy::File(path) => {
            let l = read_word_list(path)?;
            pair.indices_of(&l)?;
            let m = complement(pair, &l);
            (l, m)
        }
        LandmarkStrategy::S4a => {
            let res = s4a(pair, params, init)?;
            return Ok(Alignment {
                pair: res.aligned.clone(),
                landmarks: res.landmarks.clone(),
                non_landmarks: res.non_landmarks.clone(),
                s4a: Some(res),
            });
        }
    };
    Ok(Alignment {
        pair: align(pair, &landmarks)?,
        landmarks,
        non_landmarks,
        s4a: None,
    })
}

/// `|A ∩ B| / |A ∪ B|`; two empty sets give 1.
pub fn jaccard<T: Eq + Hash>(prev: &HashSet<T>, curr: &HashSet<T>) -> f64 {
    let union = prev.union(curr).count();
    if union == 0 {
        return 1.0;
    }
    prev.intersection(curr).count() as f64 / union as f64
}

/// Jaccard index of two ascending, duplicate-free index lists.
fn jaccard_sorted(a: &[usize], b: &[usize]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn running_mean(values: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::align;
    use crate::synth::{generate_synthetic_pair, SyntheticSpec};

    fn set(words: &[&str]) -> HashSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&set(&["a", "b"]), &set(&["a", "b"])), 1.0);
        assert_eq!(jaccard(&set(&["a", "b"]), &set(&["c"])), 0.0);
        assert_eq!(jaccard(&set(&["a", "b", "c"]), &set(&["b", "c", "d"])), 0.5);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 1.0);
        assert_eq!(jaccard_sorted(&[0, 1, 2], &[1, 2, 3]), 0.5);
        assert_eq!(jaccard_sorted(&[], &[]), 1.0);
    }

    #[test]
    fn running_mean_is_cumulative() {
        assert_eq!(running_mean(&[1.0, 0.0, 0.5]), [1.0, 0.5, 0.5]);
    }

    #[test]
    fn detection_profile_defaults() {
        let p = S4Params::default();
        assert_eq!((p.n_pos, p.n_neg, p.r, p.iterations), (1000, 1000, 0.25, 100));
        let en = S4Params::profile(Profile::English);
        assert_eq!((en.n_pos, en.n_neg, en.r, en.iterations), (100, 50, 1.0, 100));
        let la = S4Params::profile(Profile::Latin);
        assert_eq!((la.n_pos, la.n_neg, la.r), (10, 4, 0.5));
        assert!("klingon".parse::<Profile>().is_err());
    }

    fn small_synth() -> crate::synth::SyntheticPair {
        generate_synthetic_pair(&SyntheticSpec { vocab_size: 300, dim: 10, seed: 5, ..Default::default() }).unwrap()
    }

    #[test]
    fn zero_iterations_return_initial_weights() {
        let s = small_synth();
        let all: Vec<String> = s.pair.words().to_vec();
        let aligned = align(&s.pair, &all).unwrap();
        let params = S4Params { iterations: 0, ..Default::default() };
        let model = s4d_train(&aligned, &all, &[], &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        assert_eq!(model.weights, init_weights(10, 100, &mut rng).unwrap());
        assert!(model.losses.is_empty());
    }

    #[test]
    fn s4d_requires_alignment() {
        let s = small_synth();
        let all: Vec<String> = s.pair.words().to_vec();
        assert!(s4d_train(&s.pair, &all, &[], &S4Params::default()).is_err());
    }

    #[test]
    fn s4a_partitions_vocabulary_and_is_deterministic() {
        let s = small_synth();
        let params = S4Params { n_pos: 100, n_neg: 100, iterations: 8, ..Default::default() };
        let res = s4a(&s.pair, &params, S4aInit::AllLandmarks).unwrap();
        assert_eq!(res.jaccard_history.len(), 8);
        assert!(res.jaccard_history.iter().all(|j| (0.0..=1.0).contains(j)));
        let l: HashSet<_> = res.landmarks.iter().collect();
        let m: HashSet<_> = res.non_landmarks.iter().collect();
        assert!(l.is_disjoint(&m));
        assert_eq!(l.len() + m.len(), 300);
        assert!(crate::alignment::orthogonality_error(&res.transform.q) < 1e-8);

        let again = s4a(&s.pair, &params, S4aInit::AllLandmarks).unwrap();
        assert_eq!(again.landmarks, res.landmarks);
        assert_eq!(again.weights, res.weights);
        assert_eq!(again.transform, res.transform);
    }

    #[test]
    fn cosine_split_init() {
        let s = small_synth();
        let (l, m) = initial_partition(&s.pair, S4aInit::CosineSplit(0.1)).unwrap();
        assert_eq!(m.len(), 30);
        assert_eq!(l.len(), 270);
        assert_eq!("cosine_split:0.2".parse::<S4aInit>().unwrap(), S4aInit::CosineSplit(0.2));
        assert!("cosine_split:2".parse::<S4aInit>().is_err());
    }

    #[test]
    fn strategies_partition_the_vocabulary() {
        let spec = SyntheticSpec { vocab_size: 100, dim: 6, seed: 4, ..Default::default() };
        let pair = generate_synthetic_pair(&spec).unwrap().pair;
        let params = S4Params { iterations: 2, n_pos: 20, n_neg: 20, ..Default::default() };
        for s in ["global", "top-freq:0.3", "cos-split:0.1", "s4a"] {
            let strategy: LandmarkStrategy = s.parse().unwrap();
            let out = align_with_strategy(&pair, &strategy, &params, S4aInit::AllLandmarks).unwrap();
            assert_eq!(out.landmarks.len() + out.non_landmarks.len(), 100, "{s}");
            assert!(out.landmarks.iter().all(|w| !out.non_landmarks.contains(w)), "{s}");
            assert_eq!(out.s4a.is_some(), s == "s4a");
        }
    }
}
