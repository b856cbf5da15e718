//! Watermark evaluation: bit metrics, image fidelity, a toy embedder used as
//! a black-box target, and numerical checks of the Gaussian entropy bound.

mod lemma;
mod metrics;
mod toy;

pub use lemma::{bound_derivative, 
    gaussian_entropy_bound, kl_entropy, sample_family, validate_lemma, Family, LemmaCheck, LemmaReport, LemmaRow,
    DEFAULT_VARIANCES,
};
pub use metrics::{bar, fidelity, ids, mcc, psnr_mse, wus, BitString, ConfusionCounts, Fidelity, WatermarkReport};
pub use toy::{decode_toy_watermark, embed_toy_watermark, ToyWatermark, ToyWatermarkSpec};
