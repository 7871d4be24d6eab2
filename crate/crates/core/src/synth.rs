//! Synthetic embedding pairs with planted semantic shifts.
//!
//! `A` is a set of random unit vectors. `B` is `A` rotated, plus Gaussian
//! noise; a fraction of words additionally get the perturbation rule applied
//! with strength `s` towards a random other word and are renormalised. Those
//! words carry gold label 1.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::{AlignedPair, EmbeddingTable};
use crate::error::{Error, Result};
use crate::io::{read_lines, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rotation {
    None,
    RandomOrthogonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub vocab_size: usize,
    pub dim: usize,
    /// Fraction of words with a planted shift; `⌈ρN⌉` words are shifted.
    pub shift_fraction: f64,
    pub shift_strength: f64,
    /// Noise level relative to the unit rows: each noise vector is
    /// `σ/√d · N(0, I_d)`, so its expected squared norm is `σ²`.
    pub noise_sigma: f64,
    pub rotation: Rotation,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            vocab_size: 2000,
            dim: 50,
            shift_fraction: 0.1,
            shift_strength: 0.6,
            noise_sigma: 0.05,
            rotation: Rotation::RandomOrthogonal,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.vocab_size < 2 || self.dim == 0 {
            return bad("synthetic vocabulary needs at least 2 words and dimension ≥ 1");
        }
        if !(0.0..1.0).contains(&self.shift_fraction) {
            return bad("shift fraction must lie in [0, 1)");
        }
        if !(self.shift_strength > 0.0 && self.shift_strength.is_finite()) {
            return bad("shift strength must be positive");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise sigma must be non-negative");
        }
        Ok(())
    }

    pub fn planted_count(&self) -> usize {
        ((self.shift_fraction * self.vocab_size as f64) - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPair {
    /// Unaligned pair; frequency ranks follow word order.
    pub pair: AlignedPair,
    /// Word → 1 for planted shifts, 0 otherwise.
    pub gold: BTreeMap<String, u8>,
    pub rotation: DMatrix<f64>,
    /// Row indices of the planted words, ascending.
    pub planted: Vec<usize>,
}

impl SyntheticPair {
    pub fn is_planted(&self, i: usize) -> bool {
        self.planted.binary_search(&i).is_ok()
    }

    /// The two spaces as tables, for writing in word2vec format.
    pub fn tables(&self) -> Result<(EmbeddingTable, EmbeddingTable)> {
        let words = self.pair.words().to_vec();
        let a = EmbeddingTable::new(words.clone(), self.pair.a_source().clone())?.with_file_order_ranks();
        let b = EmbeddingTable::new(words, self.pair.b().clone())?.with_file_order_ranks();
        Ok((a, b))
    }
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn gaussian_rows<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            m[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    m
}

pub fn word_name(i: usize) -> String {
    format!("w{i:06}")
}

pub fn generate_synthetic_pair(spec: &SyntheticSpec) -> Result<SyntheticPair> {
    spec.validate()?;
    let (n, d) = (spec.vocab_size, spec.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut a = gaussian_rows(n, d, &mut rng);
    for mut row in a.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
    let rotation = match spec.rotation {
        Rotation::None => DMatrix::identity(d, d),
        Rotation::RandomOrthogonal => random_orthogonal(d, &mut rng),
    };
    let noise = gaussian_rows(n, d, &mut rng) * (spec.noise_sigma / (d as f64).sqrt());
    let base = &a * &rotation + noise;
    let mut b = base.clone();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut planted: Vec<usize> = order[..spec.planted_count()].to_vec();
    planted.sort_unstable();
    for &w in &planted {
        let t = loop {
            let t = rng.random_range(0..n);
            if t != w {
                break t;
            }
        };
        let mut row = base.row(w) + base.row(t) * spec.shift_strength;
        let norm = row.norm();
        row /= norm;
        b.set_row(w, &row);
    }

    let words: Vec<String> = (0..n).map(word_name).collect();
    let gold = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), u8::from(planted.binary_search(&i).is_ok())))
        .collect();
    let mut pair = AlignedPair::new(words.clone(), a, b)?;
    pair.set_freq_rank(words.into_iter().enumerate().map(|(i, w)| (w, i + 1)).collect());
    Ok(SyntheticPair {
        pair,
        gold,
        rotation,
        planted,
    })
}

/// Gold labels as `word<TAB>label` lines.
pub fn gold_to_tsv(gold: &BTreeMap<String, u8>) -> String {
    let mut s = String::new();
    for (w, l) in gold {
        writeln!(s, "{w}\t{l}").unwrap();
    }
    s
}

pub fn write_gold_tsv(gold: &BTreeMap<String, u8>, path: &Path) -> Result<()> {
    write_atomic(path, gold_to_tsv(gold).as_bytes())
}

/// Reads `word<TAB>label` lines; labels must be 0 or 1.
pub fn read_gold_tsv(path: &Path) -> Result<BTreeMap<String, u8>> {
    let mut gold = BTreeMap::new();
    for (line_no, line) in read_lines(path)? {
        let mut fields = line.split('\t');
        let (Some(w), Some(l)) = (fields.next(), fields.next()) else {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: line_no,
                message: "expected word<TAB>label".into(),
            });
        };
        let label = match l.trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: line_no,
                    message: format!("label must be 0 or 1, got `{other}`"),
                })
            }
        };
        gold.insert(w.trim().to_string(), label);
    }
    Ok(gold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{align, orthogonality_error, shift_at};

    #[test]
    fn same_seed_same_pair() {
        let spec = SyntheticSpec { vocab_size: 200, dim: 10, ..Default::default() };
        let x = generate_synthetic_pair(&spec).unwrap();
        let y = generate_synthetic_pair(&spec).unwrap();
        assert_eq!(x.pair, y.pair);
        assert_eq!(x.gold, y.gold);
        let z = generate_synthetic_pair(&SyntheticSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(x.pair, z.pair);
    }

    #[test]
    fn gold_count_is_ceiling() {
        let spec = SyntheticSpec { vocab_size: 205, dim: 8, shift_fraction: 0.1, ..Default::default() };
        let s = generate_synthetic_pair(&spec).unwrap();
        assert_eq!(s.gold.values().filter(|&&l| l == 1).count(), 21);
        assert_eq!(s.planted.len(), 21);
        assert_eq!(s.gold.len(), 205);
        assert!(s.gold.keys().next().unwrap() == "w000000");
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [1, 2, 7, 30] {
            assert!(orthogonality_error(&random_orthogonal(d, &mut rng)) < 1e-10);
        }
    }

    #[test]
    fn noiseless_single_shift_recovers_rotation() {
        let spec = SyntheticSpec {
            vocab_size: 300,
            dim: 12,
            shift_fraction: 1.0 / 300.0,
            noise_sigma: 0.0,
            ..Default::default()
        };
        let s = generate_synthetic_pair(&spec).unwrap();
        assert_eq!(s.planted.len(), 1);
        let stable: Vec<String> =
            (0..300).filter(|i| !s.is_planted(*i)).map(word_name).collect();
        // global alignment: the single planted word barely matters, but the
        // exact-recovery claim is about alignment on the stable rows
        let aligned = align(&s.pair, &stable).unwrap();
        assert!(aligned.transform().unwrap().residual < 1e-6);
        assert!((&aligned.transform().unwrap().q - &s.rotation).abs().max() < 1e-8);
        let all: Vec<String> = s.pair.words().to_vec();
        let global = align(&s.pair, &all).unwrap();
        assert!(orthogonality_error(&global.transform().unwrap().q) < 1e-8);
    }

    #[test]
    fn no_shift_no_noise_gives_zero_magnitudes() {
        let spec = SyntheticSpec {
            vocab_size: 100,
            dim: 6,
            shift_fraction: 0.0,
            noise_sigma: 0.0,
            ..Default::default()
        };
        let s = generate_synthetic_pair(&spec).unwrap();
        let all: Vec<String> = s.pair.words().to_vec();
        let aligned = align(&s.pair, &all).unwrap();
        for i in 0..100 {
            let (e, _) = shift_at(&aligned, i).unwrap();
            assert!(e < 1e-6);
        }
    }

    #[test]
    fn planted_rows_are_unit() {
        let s = generate_synthetic_pair(&SyntheticSpec { vocab_size: 100, dim: 5, ..Default::default() }).unwrap();
        for &i in &s.planted {
            assert!((s.pair.b().row(i).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            SyntheticSpec { vocab_size: 1, ..Default::default() },
            SyntheticSpec { shift_fraction: 1.0, ..Default::default() },
            SyntheticSpec { shift_strength: 0.0, ..Default::default() },
            SyntheticSpec { noise_sigma: -1.0, ..Default::default() },
        ] {
            assert!(generate_synthetic_pair(&spec).is_err());
        }
    }

    #[test]
    fn gold_tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gold.tsv");
        let gold: BTreeMap<String, u8> = [("a".to_string(), 1), ("b".to_string(), 0)].into();
        write_gold_tsv(&gold, &p).unwrap();
        assert_eq!(read_gold_tsv(&p).unwrap(), gold);
        std::fs::write(&p, "a\t2\n").unwrap();
        assert!(read_gold_tsv(&p).is_err());
    }
}
