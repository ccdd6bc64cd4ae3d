//! A lossy image codec built on per-block pixel clustering and frequent
//! sequence mining instead of transform coding.
//!
//! The pipeline, per color channel: split the channel into b x b blocks,
//! quantize each block's pixels with deterministic 1-D k-means, rewrite the
//! channel as a grid of cluster identifiers, mine the grid's rows for closed
//! frequent contiguous symbol runs, greedily parse the grid into those runs,
//! and Huffman-code the resulting token stream. The container carries the
//! per-block mean tables and per-channel code tables, so decompression is a
//! prefix-code walk followed by a table lookup per pixel.

pub mod block_cluster;
pub mod codec;
pub mod entropy_code;
pub mod pixel_grid;
pub mod quality_metrics;
pub mod seq_mine;
pub mod support_adjust;

#[cfg(test)]
pub(crate) mod testdata;

pub use block_cluster::{ClusterTable, IdentifierGrid};
pub use codec::{CodecParams, CompressedImage, SupportThreshold};
pub use entropy_code::{BitStream, CodeTable};
pub use pixel_grid::{Block, ImageFormat, PixelGrid};
pub use quality_metrics::MetricsReport;
pub use seq_mine::{Pattern, PatternSet};
pub use support_adjust::ParsedGrid;
