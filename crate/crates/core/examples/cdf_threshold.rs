//! Picks a CDF threshold from self-supervised calibration samples and applies
//! it to every word.
//!
//!     cargo run --release --example cdf_threshold [seed]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semshift::alignment::LandmarkStrategy;
use semshift::detection::{calibration_samples, classify_cdf, select_threshold_loocv, threshold_grid};
use semshift::eval::score;
use semshift::pipeline::{align_with_strategy, S4Params, S4aInit};
use semshift::synth::{generate_synthetic_pair, SyntheticSpec};
use semshift::Normalization;

fn main() -> semshift::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let synth = generate_synthetic_pair(&SyntheticSpec { seed, ..Default::default() })?;
    let mut pair = synth.pair.clone();
    pair.normalize(Normalization::L2)?;
    let params = S4Params { seed, ..Default::default() };
    let strategy: LandmarkStrategy = "cos-split:0.1".parse()?;
    let al = align_with_strategy(&pair, &strategy, &params, S4aInit::AllLandmarks)?;

    let l = al.pair.indices_of(&al.landmarks)?;
    let m = al.pair.indices_of(&al.non_landmarks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = calibration_samples(&al.pair, &l, &m, params.n_pos, params.n_neg, params.r, &mut rng)?;
    for t in threshold_grid() {
        let correct = samples.iter().filter(|(v, y)| u8::from(*v > t) == *y).count();
        println!("t = {t:.1}: calibration accuracy {:.3}", correct as f64 / samples.len() as f64);
    }
    let t = select_threshold_loocv(&samples)?;
    let det = classify_cdf(&al.pair, al.pair.words(), t)?;
    let r = score(&det.predictions, &synth.gold)?;
    println!("selected t = {t}: acc {:.3} prec {:.3} rec {:.3} f1 {:.3}", r.accuracy, r.precision, r.recall, r.f1);
    Ok(())
}
