//! Runs the self-supervised landmark loop and reports how the landmark set
//! settles and how many planted shifts it leaves out.
//!
//!     cargo run --release --example s4a_landmarks [seed]

use semshift::alignment::align;
use semshift::detection::all_distances;
use semshift::pipeline::{s4a, S4Params, S4aInit};
use semshift::synth::{generate_synthetic_pair, SyntheticPair, SyntheticSpec};
use semshift::{AlignedPair, Normalization};

fn gap(pair: &AlignedPair, synth: &SyntheticPair) -> semshift::Result<f64> {
    let d = all_distances(pair)?;
    let (mut s, mut ns, mut t, mut nt) = (0.0, 0.0, 0.0, 0.0);
    for (i, x) in d.iter().enumerate() {
        if synth.is_planted(i) {
            s += x;
            ns += 1.0;
        } else {
            t += x;
            nt += 1.0;
        }
    }
    Ok(s / ns - t / nt)
}

fn main() -> semshift::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let synth = generate_synthetic_pair(&SyntheticSpec { seed, ..Default::default() })?;
    let mut pair = synth.pair.clone();
    pair.normalize(Normalization::L2)?;
    let global = align(&pair, pair.words())?;

    let params = S4Params { r: 1.0, seed, ..Default::default() };
    for init in [S4aInit::AllLandmarks, S4aInit::CosineSplit(0.1)] {
        let res = s4a(&pair, &params, init)?;
        let running = res.running_jaccard();
        let planted_left = res.landmarks.iter().filter(|w| synth.gold[*w] == 1).count();
        println!("init {init:?}");
        for i in [0, 9, 49, 99] {
            if let (Some(j), Some(m)) = (res.jaccard_history.get(i), running.get(i)) {
                println!("  iteration {:>3}: jaccard {j:.4}, running mean {m:.4}", i + 1);
            }
        }
        println!(
            "  {} landmarks, {} of them planted shifts; residual {:.4}",
            res.landmarks.len(),
            planted_left,
            res.transform.residual
        );
        println!(
            "  distance gap shifted - stable: {:.6} (global alignment {:.6})",
            gap(&res.aligned, &synth)?,
            gap(&global, &synth)?
        );
    }
    Ok(())
}
