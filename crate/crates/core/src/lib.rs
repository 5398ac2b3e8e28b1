pub mod classify;
pub mod detect;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod linalg;
pub mod pipeline;
pub mod reduce;
pub mod reenact;
pub mod scalar;
pub mod store;
pub mod synth;
pub mod workflow;
pub mod workspace;

pub use scalar::Scalar;
pub use workspace::Workspace;

pub type AudioClipF32 = ingest::AudioClip<f32>;
pub type AudioClipF64 = ingest::AudioClip<f64>;
pub type EmbeddingF32 = features::Embedding<f32>;
pub type EmbeddingF64 = features::Embedding<f64>;
pub type PcaModelF32 = reduce::PcaModel<f32>;
pub type PcaModelF64 = reduce::PcaModel<f64>;
pub type UmapOutputF32 = reduce::umap::UmapOutput<f32>;
pub type UmapOutputF64 = reduce::umap::UmapOutput<f64>;
pub type TemplateF32 = detect::Template<f32>;
pub type TemplateF64 = detect::Template<f64>;
pub type ClassifierModelF32 = classify::ClassifierModel<f32>;
pub type ClassifierModelF64 = classify::ClassifierModel<f64>;
