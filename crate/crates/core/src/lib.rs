//! Lexical semantic change detection between two word-embedding spaces.
//!
//! Two embedding tables are intersected on their common vocabulary, aligned with
//! orthogonal Procrustes on a set of landmark words, and then compared word by word.
//! Besides the usual cosine-threshold detectors, the crate implements a
//! self-supervised detector: word vectors are perturbed towards other words to
//! simulate semantic change, and a small MLP learns to tell perturbed pairs from
//! landmark pairs. The same classifier can refine the landmark set iteratively,
//! re-aligning on the words it predicts as stable.
//!
//! | module | contents |
//! |---|---|
//! | [`embedding`] | word2vec text IO, vocabulary intersection, normalisation |
//! | [`alignment`] | Procrustes solver, landmark strategies, shift magnitudes |
//! | [`sampling`] | perturbation rule and pseudo-labelled batches |
//! | [`classifier`] | the 2d → H → 1 MLP with exact gradients |
//! | [`pipeline`] | S4-D training and the S4-A landmark loop |
//! | [`detection`] | cosine, CDF and classifier detectors |
//! | [`eval`] | metrics, shift ranking, Spearman top-k, unique-word diffs |
//! | [`synth`] | synthetic pairs with planted shifts |
//! | [`cli`] | the `semshift` command-line front end |

pub mod alignment;
pub mod classifier;
pub mod cli;
pub mod detection;
pub mod embedding;
mod error;
pub mod eval;
pub mod io;
pub mod pipeline;
pub mod sampling;
pub mod synth;

pub use alignment::{align, orthogonal_procrustes, OrthogonalTransform};
pub use classifier::MlpWeights;
pub use embedding::{intersect, AlignedPair, EmbeddingTable, Normalization};
pub use error::{Error, Result};
pub use pipeline::{s4a, s4d_train, S4AResult, S4Params};
