//! Finite-blocklength layered binning: codebook generation, enrollment,
//! authentication, and exact or sampled performance metrics.

mod codebook;
mod exact;
mod model;
mod montecarlo;

pub use codebook::{
    generate_codebook, CodeParams, CodeSizes, Codebook, EncodeStatus, EnrollChoice, Transcript, VLabel,
    CODEBOOK_VERSION, MAX_CODEWORDS,
};
pub use exact::{
    exact_analysis, exact_metrics, exact_work, exponent_sweep, ExactAnalysis, Metrics, SweepRow, EXACT_GUARD,
};
pub use model::{is_typical, SchemeModel, SchemeRates};
pub use montecarlo::{monte_carlo_metrics, wilson, Adversary, Estimate, McMetrics, MC_BLOCK};
