//! Embedding tables, the common-vocabulary pair, and vector primitives.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, RowDVector};
use serde::{Deserialize, Serialize};

use crate::alignment::OrthogonalTransform;
use crate::error::{Error, Result};
use crate::io::{fmt_float, read_lines, write_atomic};

/// A vocabulary and its word vectors, one matrix row per word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    matrix: DMatrix<f64>,
    freq_rank: Option<HashMap<String, usize>>,
}

impl EmbeddingTable {
    /// Builds a table, checking the row count, uniqueness and finiteness invariants.
    pub fn new(words: Vec<String>, matrix: DMatrix<f64>) -> Result<Self> {
        if words.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: words.len(),
                found: matrix.nrows(),
            });
        }
        if matrix.ncols() == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!("invalid word {w:?}")));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::DuplicateWord {
                    word: w.clone(),
                    line: i + 1,
                });
            }
        }
        if let Some(i) = matrix.row_iter().position(|r| r.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite(format!("vector of `{}`", words[i])));
        }
        Ok(EmbeddingTable {
            words,
            index,
            matrix,
            freq_rank: None,
        })
    }

    /// Attaches frequency ranks derived from row order (row 0 has rank 1).
    pub fn with_file_order_ranks(mut self) -> Self {
        self.freq_rank = Some(
            self.words
                .iter()
                .enumerate()
                .map(|(i, w)| (w.clone(), i + 1))
                .collect(),
        );
        self
    }

    pub fn with_freq_rank(mut self, ranks: HashMap<String, usize>) -> Self {
        self.freq_rank = Some(ranks);
        self
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn freq_rank(&self) -> Option<&HashMap<String, usize>> {
        self.freq_rank.as_ref()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, word: &str) -> Option<RowDVector<f64>> {
        self.index_of(word).map(|i| self.matrix.row(i).into_owned())
    }

    /// Returns a copy normalised with `mode`.
    pub fn normalized(&self, mode: Normalization) -> Result<Self> {
        let mut out = self.clone();
        normalize_rows(&mut out.matrix, mode, &out.words)?;
        Ok(out)
    }

    /// Serialises in word2vec text format with a `<N> <d>` header.
    pub fn to_word2vec_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {}", self.len(), self.dim()).unwrap();
        for (w, row) in self.words.iter().zip(self.matrix.row_iter()) {
            s.push_str(w);
            for x in row.iter() {
                s.push(' ');
                s.push_str(&fmt_float(*x));
            }
            s.push('\n');
        }
        s
    }

    pub fn write_word2vec_text(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_word2vec_text().as_bytes())
    }
}

/// Loads a word2vec text file, with or without the `<N> <d>` header line.
///
/// Frequency ranks are taken from file order, which is how the common
/// exporters sort their vocabularies.
pub fn load_word2vec_text(path: &Path) -> Result<EmbeddingTable> {
    let lines = read_lines(path)?;
    parse_word2vec_lines(lines, &path.display().to_string())
}

/// Parses word2vec text held in memory. `source` is used in error messages.
pub fn parse_word2vec_text(text: &str, source: &str) -> Result<EmbeddingTable> {
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    parse_word2vec_lines(lines, source)
}

fn parse_word2vec_lines(lines: Vec<(usize, String)>, source: &str) -> Result<EmbeddingTable> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut iter = lines.into_iter().peekable();
    let mut header: Option<(usize, usize)> = None;
    if let Some((line_no, first)) = iter.peek() {
        let toks: Vec<&str> = first.split_whitespace().collect();
        if toks.len() == 2 {
            if let (Ok(n), Ok(d)) = (toks[0].parse::<usize>(), toks[1].parse::<usize>()) {
                if d == 0 {
                    return Err(parse_err(*line_no, "header declares dimension 0".into()));
                }
                header = Some((n, d));
                iter.next();
            }
        }
    }

    let mut dim = header.map(|(_, d)| d);
    let mut words = Vec::new();
    let mut values = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (line_no, line) in iter {
        let mut toks = line.split_whitespace();
        let word = toks.next().unwrap().to_string();
        let row: Vec<f64> = toks
            .map(|t| {
                f64::from_str(t).map_err(|_| parse_err(line_no, format!("cannot parse `{t}` as a number")))
            })
            .collect::<Result<_>>()?;
        if row.is_empty() {
            return Err(parse_err(line_no, format!("word `{word}` has no vector")));
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(parse_err(
                    line_no,
                    format!("expected {d} values, found {}", row.len()),
                ))
            }
            _ => {}
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(parse_err(line_no, format!("non-finite value for `{word}`")));
        }
        if seen.insert(word.clone(), line_no).is_some() {
            return Err(Error::DuplicateWord { word, line: line_no });
        }
        words.push(word);
        values.extend(row);
    }
    let d = dim.ok_or_else(|| parse_err(1, "no vectors found".into()))?;
    if let Some((n, _)) = header {
        if n != words.len() {
            return Err(parse_err(
                1,
                format!("header declares {n} words, file has {}", words.len()),
            ));
        }
    }
    let matrix = DMatrix::from_row_slice(words.len(), d, &values);
    Ok(EmbeddingTable::new(words, matrix)?.with_file_order_ranks())
}

/// Reads a `word<TAB>count` file and turns counts into ranks (1 = most frequent,
/// ties broken lexicographically).
pub fn load_frequency_file(path: &Path) -> Result<HashMap<String, usize>> {
    let mut counts = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let mut fields = line.split('\t');
        let (Some(word), Some(count)) = (fields.next(), fields.next()) else {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: line_no,
                message: "expected word<TAB>count".into(),
            });
        };
        let count: f64 = count.trim().parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: line_no,
            message: format!("bad count `{count}`"),
        })?;
        counts.push((word.trim().to_string(), count));
    }
    Ok(ranks_from_counts(counts))
}

pub fn ranks_from_counts(mut counts: Vec<(String, f64)>) -> HashMap<String, usize> {
    counts.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    counts
        .into_iter()
        .enumerate()
        .map(|(i, (w, _))| (w, i + 1))
        .collect()
}

/// Two embedding matrices restricted to their common vocabulary.
///
/// Row `i` of both matrices belongs to `words[i]`. `source` keeps the
/// untransformed A so that re-alignment always starts from the original space.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    words: Vec<String>,
    index: HashMap<String, usize>,
    source: DMatrix<f64>,
    pub(crate) a: DMatrix<f64>,
    b: DMatrix<f64>,
    pub(crate) transform: Option<OrthogonalTransform>,
    freq_rank: Option<HashMap<String, usize>>,
}

impl AlignedPair {
    /// Builds a pair directly from matrices that already share row indexing.
    pub fn new(words: Vec<String>, a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.shape() != b.shape() {
            return Err(Error::DimensionMismatch {
                expected: a.ncols(),
                found: b.ncols(),
            });
        }
        if words.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: words.len(),
                found: a.nrows(),
            });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::DuplicateWord {
                    word: w.clone(),
                    line: i + 1,
                });
            }
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("pair matrices".into()));
        }
        Ok(AlignedPair {
            words,
            index,
            source: a.clone(),
            a,
            b,
            transform: None,
            freq_rank: None,
        })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// Source space, with the current transform applied.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Source space before any transform.
    pub fn a_source(&self) -> &DMatrix<f64> {
        &self.source
    }

    /// Reference space.
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn transform(&self) -> Option<&OrthogonalTransform> {
        self.transform.as_ref()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn freq_rank(&self) -> Option<&HashMap<String, usize>> {
        self.freq_rank.as_ref()
    }

    /// Replaces the frequency ranks (e.g. from an external frequency file).
    pub fn set_freq_rank(&mut self, ranks: HashMap<String, usize>) {
        self.freq_rank = Some(ranks);
    }

    /// Indices of `words`, or an error listing every unknown word.
    pub fn indices_of<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<usize>> {
        let mut missing = Vec::new();
        let idx: Vec<usize> = words
            .iter()
            .filter_map(|w| {
                let found = self.index_of(w.as_ref());
                if found.is_none() {
                    missing.push(w.as_ref().to_string());
                }
                found
            })
            .collect();
        if missing.is_empty() {
            Ok(idx)
        } else {
            Err(Error::UnknownWords(missing))
        }
    }

    /// Applies `mode` to the source and reference matrices. Any transform is dropped.
    pub fn normalize(&mut self, mode: Normalization) -> Result<()> {
        normalize_rows(&mut self.source, mode, &self.words)?;
        normalize_rows(&mut self.b, mode, &self.words)?;
        self.a = self.source.clone();
        self.transform = None;
        Ok(())
    }
}

/// Restricts two tables to their common vocabulary, sorted lexicographically.
///
/// Frequency ranks come from `ea` when it has them.
pub fn intersect(ea: &EmbeddingTable, eb: &EmbeddingTable) -> Result<AlignedPair> {
    if ea.dim() != eb.dim() {
        return Err(Error::DimensionMismatch {
            expected: ea.dim(),
            found: eb.dim(),
        });
    }
    let mut words: Vec<String> = ea
        .words()
        .iter()
        .filter(|w| eb.index_of(w).is_some())
        .cloned()
        .collect();
    if words.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    words.sort_unstable();
    let d = ea.dim();
    let gather = |t: &EmbeddingTable| {
        DMatrix::from_fn(words.len(), d, |i, j| {
            t.matrix()[(t.index_of(&words[i]).unwrap(), j)]
        })
    };
    let a = gather(ea);
    let b = gather(eb);
    let freq = ea.freq_rank().map(|ranks| {
        words
            .iter()
            .filter_map(|w| ranks.get(w).map(|&r| (w.clone(), r)))
            .collect::<HashMap<_, _>>()
    });
    let mut pair = AlignedPair::new(words, a, b)?;
    pair.freq_rank = freq;
    Ok(pair)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    #[default]
    L2,
    CenterL2,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Normalization::None),
            "l2" => Ok(Normalization::L2),
            "center_l2" | "center-l2" => Ok(Normalization::CenterL2),
            _ => Err(Error::InvalidArgument(format!(
                "unknown normalization `{s}` (expected none, l2 or center_l2)"
            ))),
        }
    }
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Normalization::None => "none",
            Normalization::L2 => "l2",
            Normalization::CenterL2 => "center_l2",
        })
    }
}

/// Normalises matrix rows in place. `words` names rows in error messages.
pub fn normalize_rows(m: &mut DMatrix<f64>, mode: Normalization, words: &[String]) -> Result<()> {
    if mode == Normalization::None {
        return Ok(());
    }
    if mode == Normalization::CenterL2 && m.nrows() > 0 {
        let mean = m.row_mean();
        for mut row in m.row_iter_mut() {
            row -= &mean;
        }
    }
    for (i, mut row) in m.row_iter_mut().enumerate() {
        let norm = row.norm();
        if norm == 0.0 {
            let name = words.get(i).cloned().unwrap_or_else(|| format!("row {i}"));
            return Err(Error::ZeroVector(name));
        }
        row /= norm;
    }
    Ok(())
}

/// `1 - cos(u, v)`, in `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector("cosine distance operand".into()));
    }
    Ok((1.0 - dot / (nu * nv)).clamp(0.0, 2.0))
}

/// Cosine distance between row `i` of `a` and row `i` of `b`.
pub(crate) fn row_cosine_distance(a: &DMatrix<f64>, b: &DMatrix<f64>, i: usize) -> Result<f64> {
    let u: Vec<f64> = a.row(i).iter().copied().collect();
    let v: Vec<f64> = b.row(i).iter().copied().collect();
    cosine_distance(&u, &v)
}

pub(crate) fn row_vec(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table(words: &[&str], rows: &[&[f64]]) -> EmbeddingTable {
        let d = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        EmbeddingTable::new(
            words.iter().map(|s| s.to_string()).collect(),
            DMatrix::from_row_slice(rows.len(), d, &flat),
        )
        .unwrap()
    }

    #[test]
    fn header_form() {
        let t = parse_word2vec_text("2 3\na 1 0 0\nb 0 1 0", "mem").unwrap();
        assert_eq!(t.words(), ["a", "b"]);
        assert_eq!(t.matrix().shape(), (2, 3));
        assert_eq!(t.matrix()[(1, 1)], 1.0);
        assert_eq!(t.freq_rank().unwrap()["b"], 2);
    }

    #[test]
    fn headerless_form() {
        let t = parse_word2vec_text("a 1 0\nb 0 1", "mem").unwrap();
        assert_eq!(t.words(), ["a", "b"]);
        assert_eq!(t.matrix().shape(), (2, 2));
    }

    #[test]
    fn crlf_and_trailing_whitespace() {
        let t = parse_word2vec_text("2 2\r\na 1 0  \r\nb 0 1\r\n", "mem").unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn ragged_rows_cite_line() {
        let err = parse_word2vec_text("a 1 0\nb 0 1 0", "mem").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn duplicate_and_non_finite_rejected() {
        assert!(matches!(
            parse_word2vec_text("a 1 0\na 0 1", "mem"),
            Err(Error::DuplicateWord { line: 2, .. })
        ));
        assert!(matches!(
            parse_word2vec_text("a 1 NaN", "mem"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_word2vec_text("a 1 inf", "mem").is_err());
    }

    #[test]
    fn header_count_mismatch() {
        assert!(parse_word2vec_text("3 2\na 1 0\nb 0 1", "mem").is_err());
    }

    #[test]
    fn intersection_is_sorted() {
        let ea = table(&["c", "a", "b"], &[&[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0]]);
        let eb = table(&["d", "b", "c"], &[&[0.0, 1.0], &[0.0, 2.0], &[0.0, 3.0]]);
        let p = intersect(&ea, &eb).unwrap();
        assert_eq!(p.words(), ["b", "c"]);
        assert_eq!(p.a()[(0, 0)], 3.0);
        assert_eq!(p.b()[(0, 1)], 2.0);
        assert_eq!(intersect(&eb, &ea).unwrap().words(), p.words());
    }

    #[test]
    fn identical_tables_give_equal_matrices() {
        let ea = table(&["x", "y"], &[&[1.0, 2.0], &[3.0, 4.0]]);
        let p = intersect(&ea, &ea).unwrap();
        assert_eq!(p.a(), p.b());
    }

    #[test]
    fn disjoint_and_mismatched_dims() {
        let ea = table(&["a"], &[&[1.0, 0.0]]);
        let eb = table(&["b"], &[&[1.0, 0.0]]);
        assert!(matches!(intersect(&ea, &eb), Err(Error::EmptyIntersection)));
        let ec = table(&["a"], &[&[1.0, 0.0, 0.0]]);
        assert!(matches!(intersect(&ea, &ec), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn normalization_modes() {
        let words = vec!["p".to_string(), "q".to_string()];
        let mut m = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        normalize_rows(&mut m, Normalization::L2, &words).unwrap();
        assert_abs_diff_eq!(m[(0, 0)], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 1)], 0.8, epsilon = 1e-15);

        let orig = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.5, 2.0]);
        let mut same = orig.clone();
        normalize_rows(&mut same, Normalization::None, &words).unwrap();
        assert_eq!(same, orig);

        let mut c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        normalize_rows(&mut c, Normalization::CenterL2, &words).unwrap();
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]));

        let mut z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        match normalize_rows(&mut z, Normalization::L2, &words) {
            Err(Error::ZeroVector(w)) => assert_eq!(w, "q"),
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_distance(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 2.0);
        assert!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn word2vec_text_reloads() {
        let t = table(&["a", "b"], &[&[0.125, -2.0], &[1e-9, 3.5]]);
        let back = parse_word2vec_text(&t.to_word2vec_text(), "mem").unwrap();
        assert_eq!(back.words(), t.words());
        assert_eq!(back.matrix(), t.matrix());
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, 4)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
    }

    proptest! {
        #[test]
        fn cosine_is_scale_invariant(u in vec_strategy(), v in vec_strategy(),
                                     alpha in 0.01f64..100.0, beta in 0.01f64..100.0) {
            let su: Vec<f64> = u.iter().map(|x| x * alpha).collect();
            let sv: Vec<f64> = v.iter().map(|x| x * beta).collect();
            let d0 = cosine_distance(&u, &v).unwrap();
            let d1 = cosine_distance(&su, &sv).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-12);
            prop_assert!((0.0..=2.0).contains(&d0));
        }

        #[test]
        fn l2_is_idempotent(rows in proptest::collection::vec(vec_strategy(), 1..8)) {
            let n = rows.len();
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            let words: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            let mut once = DMatrix::from_row_slice(n, 4, &flat);
            normalize_rows(&mut once, Normalization::L2, &words).unwrap();
            let mut twice = once.clone();
            normalize_rows(&mut twice, Normalization::L2, &words).unwrap();
            prop_assert!((once - twice).abs().max() < 1e-15);
        }
    }
}
