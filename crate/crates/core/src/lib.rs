pub mod config;
pub mod normalize;
pub mod lint;
pub mod translate;
pub mod synth;
pub mod metrics;
pub mod corpus;
pub mod llm;
pub mod eval;

/// Float type used by the non-generic parts of the toolkit.
pub type Real = f64;
/// Wilcoxon result at the default precision.
pub type Wilcoxon = metrics::WilcoxonResult<Real>;
/// CrystalBLEU breakdown at the default precision.
pub type BleuBreakdown = metrics::BleuDetail<Real>;
