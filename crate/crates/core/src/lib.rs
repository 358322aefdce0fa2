//! Prototype-based fouling detection over patch embeddings.
//!
//! Frames arrive as a global embedding plus a grid of patch embeddings.
//! Patches are grouped into a few component features, each component is
//! scored against the class prototypes of a [`PrototypeBank`], and the
//! per-patch scores give an image confidence, a coverage fraction and a
//! heatmap. On top of that sit prototype fitting ([`fit`]), evaluation
//! ([`metrics`]), transect timelines ([`video`]), representative-frame
//! selection ([`summarize`]) and the file formats ([`io`]).
//!
//! ```
//! use foulscan::synthetic::{synthetic_transect, TransectConfig};
//! use foulscan::{predict_frame, InferenceConfig};
//!
//! let t = synthetic_transect(&TransectConfig { duration_s: 1.0, ..Default::default() });
//! let p = predict_frame(&t.frames[0], &t.fouling_bank, &InferenceConfig::default()).unwrap();
//! assert!(p.fouling_confidence > 0.9);
//! ```

pub mod exec;
pub mod fit;
pub mod io;
pub mod kmeans;
mod linalg;
pub mod metrics;
pub mod model;
pub mod summarize;
pub mod synthetic;
pub mod video;

pub use exec::Execution;
pub use fit::{
    exemplars, fit_bank, fit_bank_with, FitConfig, FitError, FitReport, FrameLabel, LabeledEmbeddingSet,
    PrototypeExemplars, Split,
};
pub use metrics::{average_precision, evaluate, pr_curve, select_threshold, slof_from_coverage, EvalReport, PRCurve};
pub use model::{
    cluster_components, confidence_map, predict_frame, ClassConfidenceMap, ComponentAssignment, EmbeddedFrame,
    InferenceConfig, ModelError, PrototypeBank,
};
pub use summarize::{skmps, SummaryConfig};
pub use video::{build_report, gaussian_smooth, ReportBuilder, ReportConfig, TimelineConfig, TransectReport};

/// Components per image when a bank does not record its own.
pub const DEFAULT_COMPONENTS: usize = 5;

/// Tool name and version stamped into written banks.
pub fn created_by() -> String {
    concat!("foulscan ", env!("CARGO_PKG_VERSION")).to_string()
}
