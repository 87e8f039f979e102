//! On-disk formats consumed and produced by the engine.

mod cxgb;
mod gray;
mod manifest;

pub use cxgb::{decode, encode, read_embeddings, write_embeddings, EmbeddingMatrix, CXGB_MAGIC, CXGB_VERSION};
pub use gray::{load_gray_image, GrayImage, DEFAULT_TARGET_SIDE};
pub use manifest::{
    parse_manifest, read_manifest, write_manifest, SampleManifest, SampleRecord, Split,
    LABEL_NAMES, NUM_LABELS,
};
