//! End-to-end compressor/decompressor and the container format.
//!
//! The container is byte-aligned and little-endian: a fixed header with the
//! geometry and parameters, then per channel the block mean tables, the
//! pattern list with canonical code lengths and adjusted frequencies, and
//! the CRC-protected bit payload. Code values are never stored; the decoder
//! rebuilds them canonically from the lengths.

use rayon::prelude::*;
use thiserror::Error;

use crate::block_cluster::{cluster_all_blocks, reconstruct_block, ClusterError, ClusterTable};
use crate::entropy_code::{build_code_table, decode, encode, BitStream, CodeError, CodeTable};
use crate::pixel_grid::{
    extract_tiles, merge_blocks, merge_channels, partition_blocks, split_channels, ImageError,
    PixelGrid,
};
use crate::seq_mine::{mine_closed_frequent, MineError, PatternSet};
use crate::support_adjust::{compute_modified_support, tokens_in_order, AdjustError};

const MAGIC: [u8; 4] = *b"FSIC";
const VERSION: u8 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Mine(#[from] MineError),
    #[error(transparent)]
    Adjust(#[from] AdjustError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("not a codec container (bad magic)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),
    #[error("container truncated")]
    Truncated,
    #[error("payload checksum mismatch")]
    ChecksumMismatch,
    #[error("corrupt container: {0}")]
    CorruptContainer(&'static str),
}

/// Minimum support, either as an absolute row count or as a percentage of
/// the channel's row count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportThreshold {
    Absolute(usize),
    Percent(f64),
}

impl SupportThreshold {
    /// Resolves to an absolute row count (at least 1).
    pub fn resolve(&self, rows: usize) -> Result<usize, CodecError> {
        match *self {
            SupportThreshold::Absolute(n) if n >= 1 => Ok(n),
            SupportThreshold::Absolute(_) => Err(CodecError::InvalidParams(
                "support must be at least 1 row".into(),
            )),
            SupportThreshold::Percent(p) if p > 0.0 && p.is_finite() => {
                Ok(((p / 100.0 * rows as f64).ceil() as usize).max(1))
            }
            SupportThreshold::Percent(p) => Err(CodecError::InvalidParams(format!(
                "support percentage {p} out of range"
            ))),
        }
    }
}

/// Compression parameters: block side, cluster count, minimum support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecParams {
    pub block_size: usize,
    pub clusters: usize,
    pub min_support: SupportThreshold,
}

impl CodecParams {
    fn validate(&self, img: &PixelGrid) -> Result<(), CodecError> {
        if self.block_size == 0 {
            return Err(CodecError::InvalidParams(
                "block size must be positive".into(),
            ));
        }
        if self.clusters == 0 || self.clusters > 256 {
            return Err(CodecError::InvalidParams(
                "cluster count must be in 1..=256".into(),
            ));
        }
        if !img.width().is_multiple_of(self.block_size)
            || !img.height().is_multiple_of(self.block_size)
        {
            return Err(CodecError::InvalidParams(format!(
                "block size {} does not divide {}x{}",
                self.block_size,
                img.width(),
                img.height()
            )));
        }
        if img.width() > usize::from(u16::MAX) || img.height() > usize::from(u16::MAX) {
            return Err(CodecError::InvalidParams(
                "dimensions exceed the container's 16-bit fields".into(),
            ));
        }
        Ok(())
    }
}

/// One coded pattern as stored in the container: its symbols, the canonical
/// code length, and the adjusted frequency it was weighted with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternEntry {
    pub symbols: Vec<u8>,
    pub code_len: u8,
    pub psi_mod: u32,
}

/// Everything one channel contributes to the container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelData {
    /// One table per block, row-major block order, k means each.
    pub cluster_tables: Vec<ClusterTable>,
    /// Coded patterns in canonical order (only positive adjusted frequency).
    pub patterns: Vec<PatternEntry>,
    pub bit_count: u64,
    pub payload: Vec<u8>,
}

impl ChannelData {
    /// Assembles the channel record from the pipeline products.
    pub fn from_pipeline(
        cluster_tables: Vec<ClusterTable>,
        adjusted: &PatternSet,
        table: &CodeTable,
        stream: &BitStream,
    ) -> Self {
        let patterns = table
            .entries()
            .iter()
            .map(|entry| {
                let psi_mod = adjusted
                    .patterns
                    .iter()
                    .find(|p| p.symbols == entry.symbols)
                    .map(|p| p.psi_mod)
                    .unwrap_or(0) as u32;
                PatternEntry {
                    symbols: entry.symbols.clone(),
                    code_len: entry.len,
                    psi_mod,
                }
            })
            .collect();
        ChannelData {
            cluster_tables,
            patterns,
            bit_count: stream.bit_count(),
            payload: stream.bytes().to_vec(),
        }
    }
}

/// A compressed image: header fields plus one [`ChannelData`] per channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedImage {
    pub width: u16,
    pub height: u16,
    pub channels: u8,
    pub block_size: u16,
    pub clusters: u16,
    /// Minimum support resolved to an absolute row count.
    pub min_support: u32,
    pub channel_data: Vec<ChannelData>,
}

impl CompressedImage {
    pub fn block_count(&self) -> usize {
        (usize::from(self.width) / usize::from(self.block_size))
            * (usize::from(self.height) / usize::from(self.block_size))
    }

    /// Exact serialized byte length: header, mean tables, pattern tables,
    /// payloads, and checksums.
    pub fn byte_size(&self) -> usize {
        let header = 4 + 1 + 2 + 2 + 1 + 2 + 2 + 4;
        let per_channel: usize = self
            .channel_data
            .iter()
            .map(|ch| {
                let tables: usize = ch.cluster_tables.iter().map(|t| t.means.len()).sum();
                let patterns: usize = ch
                    .patterns
                    .iter()
                    .map(|p| 2 + p.symbols.len() + 1 + 4)
                    .sum();
                tables + 4 + patterns + 8 + ch.payload.len() + 4
            })
            .sum();
        header + per_channel
    }
}

fn compress_channel(
    chan: &PixelGrid,
    block_size: usize,
    clusters: usize,
    min_support: usize,
) -> Result<ChannelData, CodecError> {
    let blocks = partition_blocks(chan, block_size)?;
    let (tables, ident) = cluster_all_blocks(&blocks, clusters, chan.width(), chan.height())?;
    let rows = ident.rows();
    let mined = mine_closed_frequent(&rows, min_support)?;
    let (adjusted, parse) = compute_modified_support(&mined, &rows)?;
    let code_table = build_code_table(&adjusted)?;
    let tokens: Vec<&[u8]> = tokens_in_order(&parse)
        .map(|t| adjusted.patterns[t.pattern].symbols.as_slice())
        .collect();
    let stream = encode(tokens, &code_table)?;
    Ok(ChannelData::from_pipeline(
        tables,
        &adjusted,
        &code_table,
        &stream,
    ))
}

/// Runs the full pipeline: split channels, cluster blocks, mine and parse the
/// identifier grids, and entropy-code the token streams. Channels are
/// processed by independent workers; the result does not depend on the
/// schedule.
pub fn compress(img: &PixelGrid, params: &CodecParams) -> Result<CompressedImage, CodecError> {
    params.validate(img)?;
    let min_support = params.min_support.resolve(img.height())?;

    let channel_grids: Vec<PixelGrid> = if img.channels() == 3 {
        let (r, g, b) = split_channels(img)?;
        vec![r, g, b]
    } else {
        vec![img.clone()]
    };

    let channel_data: Result<Vec<ChannelData>, CodecError> = channel_grids
        .par_iter()
        .map(|chan| compress_channel(chan, params.block_size, params.clusters, min_support))
        .collect();

    Ok(CompressedImage {
        width: img.width() as u16,
        height: img.height() as u16,
        channels: img.channels() as u8,
        block_size: params.block_size as u16,
        clusters: params.clusters as u16,
        min_support: min_support as u32,
        channel_data: channel_data?,
    })
}

fn decompress_channel(
    image: &CompressedImage,
    channel: &ChannelData,
) -> Result<PixelGrid, CodecError> {
    let width = usize::from(image.width);
    let height = usize::from(image.height);
    let side = usize::from(image.block_size);

    let lengths: Vec<(Vec<u8>, u8)> = channel
        .patterns
        .iter()
        .map(|p| (p.symbols.clone(), p.code_len))
        .collect();
    let code_table = CodeTable::from_lengths(lengths)?;
    let stream = BitStream::from_parts(channel.bit_count, channel.payload.clone())?;
    let rows = decode(&stream, &code_table, width * height, width)?;

    let flat: Vec<u8> = rows.into_iter().flatten().collect();
    let tiles = extract_tiles(&flat, width, height, side);
    if tiles.len() != channel.cluster_tables.len() {
        return Err(CodecError::CorruptContainer("cluster table count mismatch"));
    }
    let blocks = tiles
        .iter()
        .zip(&channel.cluster_tables)
        .map(|(tile, table)| reconstruct_block(tile, side, table))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(merge_blocks(&blocks, width, height)?)
}

/// Inverts [`compress`]: decode each channel's bitstream, recolor identifiers
/// through the block tables, and merge blocks and channels.
pub fn decompress(image: &CompressedImage) -> Result<PixelGrid, CodecError> {
    validate_header(image)?;
    let planes: Result<Vec<PixelGrid>, CodecError> = image
        .channel_data
        .par_iter()
        .map(|channel| decompress_channel(image, channel))
        .collect();
    let planes = planes?;
    if image.channels == 3 {
        Ok(merge_channels(&planes[0], &planes[1], &planes[2])?)
    } else {
        Ok(planes.into_iter().next().expect("one channel"))
    }
}

fn validate_header(image: &CompressedImage) -> Result<(), CodecError> {
    let ok = image.width >= 1
        && image.height >= 1
        && (image.channels == 1 || image.channels == 3)
        && image.block_size >= 1
        && image.width.is_multiple_of(image.block_size)
        && image.height.is_multiple_of(image.block_size)
        && (1..=256).contains(&image.clusters)
        && image.min_support >= 1
        && image.channel_data.len() == usize::from(image.channels);
    if !ok {
        return Err(CodecError::CorruptContainer("inconsistent header"));
    }
    let n_b = image.block_count();
    for channel in &image.channel_data {
        if channel.cluster_tables.len() != n_b {
            return Err(CodecError::CorruptContainer("cluster table count mismatch"));
        }
        if channel
            .cluster_tables
            .iter()
            .any(|t| t.means.len() != usize::from(image.clusters))
        {
            return Err(CodecError::CorruptContainer("cluster table size mismatch"));
        }
    }
    Ok(())
}

// CRC-32 (IEEE, reflected) over the payload bytes.
const CRC_TABLE: [u32; 256] = build_crc_table();

const fn build_crc_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut bit = 0;
        while bit < 8 {
            c = if c & 1 != 0 {
                0xEDB8_8320 ^ (c >> 1)
            } else {
                c >> 1
            };
            bit += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
}

fn crc32(data: &[u8]) -> u32 {
    let mut crc = !0u32;
    for &byte in data {
        crc = (crc >> 8) ^ CRC_TABLE[((crc ^ u32::from(byte)) & 0xFF) as usize];
    }
    !crc
}

/// Writes the container byte stream. Exact inverse of [`deserialize`].
pub fn serialize(image: &CompressedImage) -> Result<Vec<u8>, CodecError> {
    validate_header(image)?;
    let mut out = Vec::with_capacity(image.byte_size());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&image.width.to_le_bytes());
    out.extend_from_slice(&image.height.to_le_bytes());
    out.push(image.channels);
    out.extend_from_slice(&image.block_size.to_le_bytes());
    out.extend_from_slice(&image.clusters.to_le_bytes());
    out.extend_from_slice(&image.min_support.to_le_bytes());

    for channel in &image.channel_data {
        for table in &channel.cluster_tables {
            out.extend_from_slice(&table.means);
        }
        let count = u32::try_from(channel.patterns.len())
            .map_err(|_| CodecError::CorruptContainer("pattern count overflow"))?;
        out.extend_from_slice(&count.to_le_bytes());
        for pattern in &channel.patterns {
            let len = u16::try_from(pattern.symbols.len())
                .map_err(|_| CodecError::CorruptContainer("pattern length overflow"))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(&pattern.symbols);
            out.push(pattern.code_len);
            out.extend_from_slice(&pattern.psi_mod.to_le_bytes());
        }
        out.extend_from_slice(&channel.bit_count.to_le_bytes());
        out.extend_from_slice(&channel.payload);
        out.extend_from_slice(&crc32(&channel.payload).to_le_bytes());
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).ok_or(CodecError::Truncated)?;
        if end > self.bytes.len() {
            return Err(CodecError::Truncated);
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses and validates a container byte stream.
pub fn deserialize(bytes: &[u8]) -> Result<CompressedImage, CodecError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(CodecError::BadMagic);
    }
    let version = cur.u8()?;
    if version != VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    let width = cur.u16()?;
    let height = cur.u16()?;
    let channels = cur.u8()?;
    let block_size = cur.u16()?;
    let clusters = cur.u16()?;
    let min_support = cur.u32()?;

    if !(channels == 1 || channels == 3) {
        return Err(CodecError::CorruptContainer("invalid channel count"));
    }
    if width == 0
        || height == 0
        || block_size == 0
        || width % block_size != 0
        || height % block_size != 0
        || !(1..=256).contains(&clusters)
        || min_support == 0
    {
        return Err(CodecError::CorruptContainer("inconsistent header"));
    }
    let n_b = (usize::from(width) / usize::from(block_size))
        * (usize::from(height) / usize::from(block_size));

    let mut channel_data = Vec::with_capacity(usize::from(channels));
    for _ in 0..channels {
        let mut cluster_tables = Vec::with_capacity(n_b);
        for block_index in 0..n_b {
            let means = cur.take(usize::from(clusters))?.to_vec();
            cluster_tables.push(ClusterTable { block_index, means });
        }
        let pattern_count = cur.u32()? as usize;
        let mut patterns = Vec::with_capacity(pattern_count.min(1 << 16));
        for _ in 0..pattern_count {
            let len = usize::from(cur.u16()?);
            if len == 0 || len > usize::from(width) {
                return Err(CodecError::CorruptContainer("pattern length out of range"));
            }
            let symbols = cur.take(len)?.to_vec();
            if symbols.iter().any(|&s| u16::from(s) >= clusters) {
                return Err(CodecError::CorruptContainer("pattern symbol out of range"));
            }
            let code_len = cur.u8()?;
            let psi_mod = cur.u32()?;
            if code_len == 0 || psi_mod == 0 {
                return Err(CodecError::CorruptContainer("uncoded pattern entry"));
            }
            patterns.push(PatternEntry {
                symbols,
                code_len,
                psi_mod,
            });
        }
        let bit_count = cur.u64()?;
        let payload_len = usize::try_from(bit_count.div_ceil(8))
            .map_err(|_| CodecError::CorruptContainer("bit count overflow"))?;
        let payload = cur.take(payload_len)?.to_vec();
        let checksum = cur.u32()?;
        if crc32(&payload) != checksum {
            return Err(CodecError::ChecksumMismatch);
        }
        channel_data.push(ChannelData {
            cluster_tables,
            patterns,
            bit_count,
            payload,
        });
    }
    if cur.pos != bytes.len() {
        return Err(CodecError::CorruptContainer("trailing bytes"));
    }

    let image = CompressedImage {
        width,
        height,
        channels,
        block_size,
        clusters,
        min_support,
        channel_data,
    };
    validate_header(&image)?;
    Ok(image)
}
