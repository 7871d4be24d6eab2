//! Writes a synthetic pair in word2vec text format with its gold labels,
//! reads it back and checks the round trip.
//!
//!     cargo run --release --example synthetic_files [out_dir]

use std::path::PathBuf;

use semshift::embedding::load_word2vec_text;
use semshift::intersect;
use semshift::synth::{generate_synthetic_pair, read_gold_tsv, write_gold_tsv, SyntheticSpec};

fn main() -> semshift::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("semshift-synth"));
    let spec = SyntheticSpec { vocab_size: 500, dim: 20, ..Default::default() };
    let synth = generate_synthetic_pair(&spec)?;
    let (a, b) = synth.tables()?;
    a.write_word2vec_text(&out.join("a.txt"))?;
    b.write_word2vec_text(&out.join("b.txt"))?;
    write_gold_tsv(&synth.gold, &out.join("gold.tsv"))?;
    println!("wrote {}", out.display());

    let pair = intersect(&load_word2vec_text(&out.join("a.txt"))?, &load_word2vec_text(&out.join("b.txt"))?)?;
    let worst = (pair.a_source() - synth.pair.a_source())
        .abs()
        .max()
        .max((pair.b() - synth.pair.b()).abs().max());
    println!("{} words reloaded, largest element change {worst:.1e}", pair.len());
    let gold = read_gold_tsv(&out.join("gold.tsv"))?;
    println!("{} gold labels, {} shifted", gold.len(), gold.values().filter(|&&g| g == 1).count());
    Ok(())
}
