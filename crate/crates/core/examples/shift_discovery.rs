//! Ranks words by shift under two alignments and compares the rankings.
//!
//!     cargo run --release --example shift_discovery [seed]

use semshift::alignment::align;
use semshift::eval::{default_ks, rank_shifts, spearman_topk, unique_words, ShiftMetric, SpearmanMode};
use semshift::pipeline::{s4a, S4Params, S4aInit};
use semshift::synth::{generate_synthetic_pair, SyntheticSpec};
use semshift::Normalization;

fn main() -> semshift::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let synth = generate_synthetic_pair(&SyntheticSpec { seed, ..Default::default() })?;
    let mut pair = synth.pair.clone();
    pair.normalize(Normalization::L2)?;

    let global = rank_shifts(&align(&pair, pair.words())?, ShiftMetric::Euclidean)?;
    let params = S4Params { r: 1.0, seed, ..Default::default() };
    let s4a_list = rank_shifts(&s4a(&pair, &params, S4aInit::AllLandmarks)?.aligned, ShiftMetric::Euclidean)?;

    let top: Vec<&str> = s4a_list.top(10).collect();
    println!("ten most shifted after S4-A: {}", top.join(" "));
    let hits = s4a_list.top(200).filter(|w| synth.gold[*w] == 1).count();
    println!("planted shifts among the top 200: {hits}");

    let curve = spearman_topk(&s4a_list, &global, &default_ks(pair.len()), SpearmanMode::Anchor)?;
    for (k, rho) in curve.iter().filter(|(k, _)| k % 100 == 0 || *k == 10) {
        println!("k = {k:>3}: rho {rho:+.4}");
    }
    let diff = unique_words(&s4a_list, &global, 50)?;
    println!(
        "top 50: {} only after S4-A, {} only after global alignment, {} shared",
        diff.only_x.len(),
        diff.only_y.len(),
        diff.common.len()
    );
    print!("{}", diff.to_tsv("s4a", "global").lines().take(4).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
