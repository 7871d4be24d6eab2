//! Metrics against gold labels, shift rankings, and comparisons between rankings.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alignment::shift_at;
use crate::detection::ShiftPrediction;
use crate::embedding::AlignedPair;
use crate::error::{Error, Result};
use crate::io::{fmt_float, write_atomic};

/// Binary classification metrics; every `0/0` ratio is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub n_skipped: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize, n_skipped: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EvalReport {
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision,
            recall,
            f1,
            tp,
            fp,
            tn,
            fn_,
            n_skipped,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }
}

/// Scores predictions against `gold`. Predictions without a gold label are
/// counted in `n_skipped`.
pub fn score<G>(preds: &[ShiftPrediction], gold: &G) -> Result<EvalReport>
where
    G: GoldLabels,
{
    let (mut tp, mut fp, mut tn, mut fn_, mut skipped) = (0, 0, 0, 0, 0);
    for p in preds {
        match (gold.label(&p.word), p.label) {
            (None, _) => skipped += 1,
            (Some(1), 1) => tp += 1,
            (Some(_), 1) => fp += 1,
            (Some(1), _) => fn_ += 1,
            (Some(_), _) => tn += 1,
        }
    }
    if tp + fp + tn + fn_ == 0 {
        return Err(Error::InvalidArgument("no prediction has a gold label".into()));
    }
    Ok(EvalReport::from_counts(tp, fp, tn, fn_, skipped))
}

/// Anything that maps a word to a 0/1 gold label.
pub trait GoldLabels {
    fn label(&self, word: &str) -> Option<u8>;
}

impl GoldLabels for HashMap<String, u8> {
    fn label(&self, word: &str) -> Option<u8> {
        self.get(word).copied()
    }
}

impl GoldLabels for std::collections::BTreeMap<String, u8> {
    fn label(&self, word: &str) -> Option<u8> {
        self.get(word).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftMetric {
    Euclidean,
    Cosine,
}

impl std::str::FromStr for ShiftMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(ShiftMetric::Euclidean),
            "cosine" => Ok(ShiftMetric::Cosine),
            _ => Err(Error::InvalidArgument(format!("unknown metric `{s}`"))),
        }
    }
}

/// Words ordered by decreasing shift, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedShiftList {
    pub entries: Vec<(String, f64)>,
    pub method: String,
}

impl RankedShiftList {
    pub fn new(mut entries: Vec<(String, f64)>, method: impl Into<String>) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        RankedShiftList {
            entries,
            method: method.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self, k: usize) -> impl Iterator<Item = &str> {
        self.entries.iter().take(k).map(|(w, _)| w.as_str())
    }

    /// Word → 1-based rank, tied scores sharing the average of their positions.
    pub fn average_ranks(&self) -> HashMap<&str, f64> {
        let mut ranks = HashMap::with_capacity(self.len());
        let mut start = 0;
        while start < self.len() {
            let mut end = start + 1;
            while end < self.len() && self.entries[end].1 == self.entries[start].1 {
                end += 1;
            }
            let avg = (start + end + 1) as f64 / 2.0;
            for (w, _) in &self.entries[start..end] {
                ranks.insert(w.as_str(), avg);
            }
            start = end;
        }
        ranks
    }

    /// `rank<TAB>word<TAB>score` lines.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (i, (w, v)) in self.entries.iter().enumerate() {
            writeln!(s, "{}\t{}\t{}", i + 1, w, fmt_float(*v)).unwrap();
        }
        s
    }
}

/// Ranks every common word by its shift after alignment.
pub fn rank_shifts(pair: &AlignedPair, metric: ShiftMetric) -> Result<RankedShiftList> {
    if pair.transform().is_none() {
        return Err(Error::InvalidArgument("pair has not been aligned".into()));
    }
    let entries = (0..pair.len())
        .map(|i| {
            let (e, c) = shift_at(pair, i)?;
            let v = match metric {
                ShiftMetric::Euclidean => e,
                ShiftMetric::Cosine => c,
            };
            Ok((pair.words()[i].clone(), v))
        })
        .collect::<Result<_>>()?;
    let name = match metric {
        ShiftMetric::Euclidean => "euclidean",
        ShiftMetric::Cosine => "cosine",
    };
    Ok(RankedShiftList::new(entries, name))
}

/// Which words enter the rank correlation at each `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpearmanMode {
    /// The top-k words of the first list.
    #[default]
    Anchor,
    /// The union of both top-k sets.
    Union,
}

/// Average ranks (1-based) of `values` within the slice.
fn rank_within(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho as the Pearson correlation of two rank vectors. Without
/// ties this equals `1 − 6Σd²/(m(m²−1))`.
pub fn spearman_rho(rx: &[f64], ry: &[f64]) -> f64 {
    let m = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / m;
    let my = ry.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in rx.iter().zip(ry) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        // constant ranks: only identical vectors count as agreement
        return if rx == ry { 1.0 } else { 0.0 };
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Rank correlation of two shift rankings restricted to the top-k words, for each `k`.
pub fn spearman_topk(
    list_x: &RankedShiftList,
    list_y: &RankedShiftList,
    ks: &[usize],
    mode: SpearmanMode,
) -> Result<Vec<(usize, f64)>> {
    let rank_x = list_x.average_ranks();
    let rank_y = list_y.average_ranks();
    if rank_x.len() != rank_y.len() || rank_x.keys().any(|w| !rank_y.contains_key(w)) {
        return Err(Error::InvalidArgument("rankings cover different vocabularies".into()));
    }
    ks.iter()
        .map(|&k| {
            if k < 2 {
                return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
            }
            if k > list_x.len() {
                return Err(Error::InvalidArgument(format!(
                    "k = {k} exceeds the vocabulary size {}",
                    list_x.len()
                )));
            }
            let members: Vec<&str> = match mode {
                SpearmanMode::Anchor => list_x.top(k).collect(),
                SpearmanMode::Union => list_x.top(k).chain(list_y.top(k)).collect::<BTreeSet<_>>().into_iter().collect(),
            };
            let gx: Vec<f64> = members.iter().map(|w| rank_x[w]).collect();
            let gy: Vec<f64> = members.iter().map(|w| rank_y[w]).collect();
            Ok((k, spearman_rho(&rank_within(&gx), &rank_within(&gy))))
        })
        .collect()
}

/// `k<TAB>rho` lines.
pub fn rho_curve_tsv(curve: &[(usize, f64)]) -> String {
    let mut s = String::new();
    for (k, rho) in curve {
        writeln!(s, "{k}\t{}", fmt_float(*rho)).unwrap();
    }
    s
}

/// `10, 20, …, 500` clipped to the vocabulary size.
pub fn default_ks(n: usize) -> Vec<usize> {
    (1..=50).map(|i| i * 10).filter(|&k| k <= n).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UniqueWords {
    pub only_x: Vec<String>,
    pub only_y: Vec<String>,
    pub common: Vec<String>,
}

impl UniqueWords {
    /// Three columns `only_x<TAB>only_y<TAB>common`, padded with empty cells,
    /// after a header line naming the methods.
    pub fn to_tsv(&self, name_x: &str, name_y: &str) -> String {
        let mut s = format!("{name_x}\t{name_y}\tcommon\n");
        let rows = self.only_x.len().max(self.only_y.len()).max(self.common.len());
        let cell = |v: &Vec<String>, i: usize| v.get(i).cloned().unwrap_or_default();
        for i in 0..rows {
            writeln!(s, "{}\t{}\t{}", cell(&self.only_x, i), cell(&self.only_y, i), cell(&self.common, i)).unwrap();
        }
        s
    }
}

/// Set differences and intersection of the two top-k word sets, each sorted.
pub fn unique_words(list_x: &RankedShiftList, list_y: &RankedShiftList, k: usize) -> Result<UniqueWords> {
    if k > list_x.len() || k > list_y.len() {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds a list length")));
    }
    let x: BTreeSet<&str> = list_x.top(k).collect();
    let y: BTreeSet<&str> = list_y.top(k).collect();
    let owned = |it: Vec<&&str>| it.into_iter().map(|s| s.to_string()).collect();
    Ok(UniqueWords {
        only_x: owned(x.difference(&y).collect()),
        only_y: owned(y.difference(&x).collect()),
        common: owned(x.intersection(&y).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::Method;
    use proptest::prelude::*;

    fn preds(labels: &[u8]) -> Vec<ShiftPrediction> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| ShiftPrediction {
                word: format!("w{i}"),
                score: 0.0,
                label: l,
                method: Method::S4d,
            })
            .collect()
    }

    fn gold(labels: &[u8]) -> HashMap<String, u8> {
        labels.iter().enumerate().map(|(i, &l)| (format!("w{i}"), l)).collect()
    }

    #[test]
    fn hand_confusion_matrix() {
        let r = score(&preds(&[1, 1, 0, 0]), &gold(&[1, 0, 0, 1])).unwrap();
        assert_eq!((r.tp, r.fp, r.tn, r.fn_), (1, 1, 1, 1));
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (0.5, 0.5, 0.5, 0.5));
    }

    #[test]
    fn perfect_and_degenerate() {
        let r = score(&preds(&[1, 0, 1]), &gold(&[1, 0, 1])).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));
        let r = score(&preds(&[0, 0, 0]), &gold(&[1, 0, 1])).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn skips_and_no_overlap() {
        let mut p = preds(&[1, 0]);
        p[1].word = "unknown".into();
        let r = score(&p, &gold(&[1])).unwrap();
        assert_eq!(r.n_skipped, 1);
        assert!(score(&preds(&[1]), &HashMap::new()).is_err());
    }

    #[test]
    fn report_json_has_table_columns() {
        let r = EvalReport::from_counts(1, 1, 1, 1, 0);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in ["accuracy", "precision", "recall", "f1", "tp", "fp", "tn", "fn", "n_skipped"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    fn list(order: &[&str]) -> RankedShiftList {
        let n = order.len();
        RankedShiftList::new(order.iter().enumerate().map(|(i, w)| (w.to_string(), (n - i) as f64)).collect(), "t")
    }

    #[test]
    fn spearman_examples() {
        let x = list(&["a", "b", "c", "d"]);
        assert_eq!(spearman_topk(&x, &x, &[2, 3, 4], SpearmanMode::Anchor).unwrap(), [(2, 1.0), (3, 1.0), (4, 1.0)]);
        let rev = list(&["d", "c", "b", "a"]);
        assert!((spearman_topk(&x, &rev, &[4], SpearmanMode::Anchor).unwrap()[0].1 + 1.0).abs() < 1e-12);
        let y = list(&["a", "c", "b", "d"]);
        assert!((spearman_topk(&x, &y, &[4], SpearmanMode::Anchor).unwrap()[0].1 - 0.8).abs() < 1e-12);
        assert!(spearman_topk(&x, &y, &[1], SpearmanMode::Anchor).is_err());
        assert!(spearman_topk(&x, &y, &[5], SpearmanMode::Anchor).is_err());
        assert!(spearman_topk(&x, &list(&["a", "b", "c", "e"]), &[2], SpearmanMode::Anchor).is_err());
    }

    #[test]
    fn spearman_union_mode() {
        let x = list(&["a", "b", "c", "d"]);
        let y = list(&["c", "d", "a", "b"]);
        // union of top-2 = {a,b,c,d}; ranks x = (1,2,3,4), y = (3,4,1,2)
        let rho = spearman_topk(&x, &y, &[2], SpearmanMode::Union).unwrap()[0].1;
        assert!((rho - (1.0 - 6.0 * 16.0 / 60.0)).abs() < 1e-12);
    }

    #[test]
    fn tied_identical_lists_correlate_perfectly() {
        let x = RankedShiftList::new(vec![("a".into(), 1.0), ("b".into(), 1.0), ("c".into(), 0.5), ("d".into(), 0.5)], "t");
        for k in 2..=4 {
            assert_eq!(spearman_topk(&x, &x, &[k], SpearmanMode::Anchor).unwrap()[0].1, 1.0);
        }
        let ranks = x.average_ranks();
        assert_eq!(ranks["a"], 1.5);
        assert_eq!(ranks["d"], 3.5);
    }

    #[test]
    fn unique_word_sets() {
        let x = list(&["a", "b", "c", "e"]);
        let same = unique_words(&x, &x, 3).unwrap();
        assert!(same.only_x.is_empty() && same.only_y.is_empty());
        let y = list(&["b", "c", "d", "a"]);
        let u = unique_words(&x, &y, 3).unwrap();
        assert_eq!(u.only_x, ["a"]);
        assert_eq!(u.only_y, ["d"]);
        assert_eq!(u.common, ["b", "c"]);
        let z = list(&["e", "a", "b", "c"]);
        let w = list(&["b", "c", "e", "a"]);
        let d = unique_words(&list(&["a", "b", "x", "y"]), &list(&["x", "y", "a", "b"]), 2).unwrap();
        assert_eq!((d.only_x.len(), d.only_y.len()), (2, 2));
        assert_eq!(unique_words(&z, &w, 4).unwrap().common.len(), 4);
        assert!(unique_words(&x, &y, 5).is_err());
        assert_eq!(u.to_tsv("x", "y"), "x\ty\tcommon\na\td\tb\n\t\tc\n");
    }

    #[test]
    fn default_k_grid() {
        assert_eq!(default_ks(1000).len(), 50);
        assert_eq!(default_ks(35), [10, 20, 30]);
    }

    proptest! {
        #[test]
        fn rho_stays_in_range(perm in Just((0..12).collect::<Vec<usize>>()).prop_shuffle(), k in 2usize..=12) {
            let words: Vec<String> = (0..12).map(|i| format!("w{i:02}")).collect();
            let x = RankedShiftList::new(words.iter().enumerate().map(|(i, w)| (w.clone(), -(i as f64))).collect(), "x");
            let y = RankedShiftList::new(perm.iter().enumerate().map(|(i, &p)| (words[p].clone(), -(i as f64))).collect(), "y");
            for mode in [SpearmanMode::Anchor, SpearmanMode::Union] {
                let rho = spearman_topk(&x, &y, &[k], mode).unwrap()[0].1;
                prop_assert!((-1.0..=1.0).contains(&rho));
            }
        }

        #[test]
        fn score_ignores_order(labels in proptest::collection::vec(0u8..2, 1..20),
                               truth in proptest::collection::vec(0u8..2, 20),
                               seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let p = preds(&labels);
            let g = gold(&truth);
            let mut shuffled = p.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(score(&p, &g).unwrap(), score(&shuffled, &g).unwrap());
        }
    }
}
