//! Trains the self-supervised shift classifier on a synthetic pair and scores
//! it against the planted labels, next to the cosine-threshold baselines.
//!
//!     cargo run --release --example s4d_detection [seed]

use semshift::alignment::LandmarkStrategy;
use semshift::detection::{classify_cosine, classify_s4d, Detection};
use semshift::eval::score;
use semshift::pipeline::{align_with_strategy, s4d_train, S4Params, S4aInit};
use semshift::synth::{generate_synthetic_pair, SyntheticSpec};
use semshift::Normalization;

fn main() -> semshift::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let synth = generate_synthetic_pair(&SyntheticSpec { seed, ..Default::default() })?;
    let mut pair = synth.pair.clone();
    pair.normalize(Normalization::L2)?;
    let words = pair.words().to_vec();
    let params = S4Params { seed, ..Default::default() };

    let show = |name: &str, det: &Detection| -> semshift::Result<()> {
        let r = score(&det.predictions, &synth.gold)?;
        println!(
            "{name:<28} acc {:.3}  prec {:.3}  rec {:.3}  f1 {:.3}",
            r.accuracy, r.precision, r.recall, r.f1
        );
        Ok(())
    };

    for strategy in ["global", "cos-split:0.1"] {
        let strategy: LandmarkStrategy = strategy.parse()?;
        let al = align_with_strategy(&pair, &strategy, &params, S4aInit::AllLandmarks)?;
        println!("landmarks: {strategy} ({} words)", al.landmarks.len());
        for t in [0.3, 0.5, 0.7] {
            show(&format!("  cosine > {t}"), &classify_cosine(&al.pair, &words, t)?)?;
        }
        let model = s4d_train(&al.pair, &al.landmarks, &al.non_landmarks, &params)?;
        println!(
            "  S4-D loss {:.4} -> {:.4} over {} iterations",
            model.losses[0],
            model.losses.last().unwrap(),
            model.losses.len()
        );
        show("  S4-D", &classify_s4d(&model.weights, &al.pair, &words)?)?;
    }
    Ok(())
}
