//! Image ingestion/emission and the geometric transforms the codec is built
//! on: channel split/merge and block partition/merge.
//!
//! Sample storage is planar: all samples of channel 0 in row-major order,
//! then channel 1, then channel 2.

use thiserror::Error;

/// Errors from image parsing and grid geometry operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("unrecognized image magic bytes")]
    BadMagic,
    #[error("malformed header: {0}")]
    MalformedHeader(&'static str),
    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(u16),
    #[error("unsupported BMP compression mode {0}")]
    UnsupportedCompression(u32),
    #[error("unsupported PNM maxval {0} (only 255)")]
    UnsupportedMaxval(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("expected a {expected}-channel grid, found {found}")]
    ChannelCount { expected: usize, found: usize },
    #[error("block side {side} does not divide {width}x{height}")]
    BlockGeometry {
        side: usize,
        width: usize,
        height: usize,
    },
    #[error("{0} blocks do not tile the requested grid")]
    MergeGeometry(usize),
    #[error("invalid grid dimensions")]
    EmptyGrid,
    #[error("sample buffer length {found} does not match {expected}")]
    SampleCount { expected: usize, found: usize },
}

/// An m x n x c matrix of 8-bit intensity samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl PixelGrid {
    /// Builds a grid from planar samples (channel-major, rows top to bottom).
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        samples: Vec<u8>,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || !(channels == 1 || channels == 3) {
            return Err(ImageError::EmptyGrid);
        }
        let expected = width * height * channels;
        if samples.len() != expected {
            return Err(ImageError::SampleCount {
                expected,
                found: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Raw planar sample buffer.
    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    /// The row-major plane of one channel.
    pub fn plane(&self, channel: usize) -> &[u8] {
        let n = self.width * self.height;
        &self.samples[channel * n..(channel + 1) * n]
    }

    pub fn sample(&self, channel: usize, x: usize, y: usize) -> u8 {
        self.plane(channel)[y * self.width + x]
    }

    /// Total byte size of the raw samples, the codec's notion of
    /// "uncompressed size".
    pub fn byte_size(&self) -> usize {
        self.samples.len()
    }
}

/// One b x b tile of a single-channel grid, in row-major block order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub block_index: usize,
    pub side: usize,
    pub samples: Vec<u8>,
}

impl Block {
    pub fn new(block_index: usize, side: usize, samples: Vec<u8>) -> Result<Self, ImageError> {
        if side == 0 || samples.len() != side * side {
            return Err(ImageError::SampleCount {
                expected: side * side,
                found: samples.len(),
            });
        }
        Ok(Self {
            block_index,
            side,
            samples,
        })
    }
}

/// Supported on-disk image formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// Uncompressed 24-bit BMP with a BITMAPINFOHEADER.
    Bmp,
    /// Binary PPM (P6) or PGM (P5), maxval 255.
    Pnm,
}

impl ImageFormat {
    pub fn detect(bytes: &[u8]) -> Result<Self, ImageError> {
        match bytes {
            [b'B', b'M', ..] => Ok(ImageFormat::Bmp),
            [b'P', b'5', ..] | [b'P', b'6', ..] => Ok(ImageFormat::Pnm),
            _ => Err(ImageError::BadMagic),
        }
    }
}

/// Decodes a BMP or binary PPM/PGM byte stream.
///
/// BMP yields a 3-channel grid (both bottom-up and top-down row orders are
/// accepted and normalized to top-down); P6 yields 3 channels, P5 one.
pub fn load_image(bytes: &[u8]) -> Result<PixelGrid, ImageError> {
    match ImageFormat::detect(bytes)? {
        ImageFormat::Bmp => decode_bmp(bytes),
        ImageFormat::Pnm => decode_pnm(bytes),
    }
}

/// Encodes a grid as BMP (3-channel only) or PNM (P5 for 1 channel, P6 for 3).
pub fn save_image(grid: &PixelGrid, format: ImageFormat) -> Result<Vec<u8>, ImageError> {
    match format {
        ImageFormat::Bmp => encode_bmp(grid),
        ImageFormat::Pnm => Ok(encode_pnm(grid)),
    }
}

fn read_u16_le(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32_le(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn decode_bmp(bytes: &[u8]) -> Result<PixelGrid, ImageError> {
    if bytes.len() < 54 {
        return Err(ImageError::MalformedHeader("file shorter than BMP headers"));
    }
    let data_offset = read_u32_le(bytes, 10) as usize;
    let info_size = read_u32_le(bytes, 14);
    if info_size < 40 {
        return Err(ImageError::MalformedHeader(
            "info header smaller than BITMAPINFOHEADER",
        ));
    }
    let width = read_u32_le(bytes, 18) as i32;
    let raw_height = read_u32_le(bytes, 22) as i32;
    let bit_count = read_u16_le(bytes, 28);
    let compression = read_u32_le(bytes, 30);
    if bit_count != 24 {
        return Err(ImageError::UnsupportedBitDepth(bit_count));
    }
    if compression != 0 {
        return Err(ImageError::UnsupportedCompression(compression));
    }
    if width <= 0 || raw_height == 0 {
        return Err(ImageError::MalformedHeader("non-positive dimensions"));
    }
    let top_down = raw_height < 0;
    let width = width as usize;
    let height = raw_height.unsigned_abs() as usize;
    let stride = (3 * width + 3) & !3;
    let needed = data_offset + stride * height;
    if bytes.len() < needed {
        return Err(ImageError::TruncatedPayload {
            expected: needed,
            found: bytes.len(),
        });
    }

    let n = width * height;
    let mut samples = vec![0u8; 3 * n];
    for y in 0..height {
        let src_row = if top_down { y } else { height - 1 - y };
        let row = &bytes[data_offset + src_row * stride..];
        for x in 0..width {
            // BMP stores pixels as BGR triples.
            samples[y * width + x] = row[3 * x + 2];
            samples[n + y * width + x] = row[3 * x + 1];
            samples[2 * n + y * width + x] = row[3 * x];
        }
    }
    PixelGrid::new(width, height, 3, samples)
}

fn encode_bmp(grid: &PixelGrid) -> Result<Vec<u8>, ImageError> {
    if grid.channels != 3 {
        return Err(ImageError::ChannelCount {
            expected: 3,
            found: grid.channels,
        });
    }
    let (w, h) = (grid.width, grid.height);
    let stride = (3 * w + 3) & !3;
    let data_size = stride * h;
    let file_size = 54 + data_size;
    let mut out = Vec::with_capacity(file_size);
    out.extend_from_slice(b"BM");
    out.extend_from_slice(&(file_size as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&54u32.to_le_bytes());
    out.extend_from_slice(&40u32.to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&24u16.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(data_size as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 16]);

    let n = w * h;
    for y in (0..h).rev() {
        for x in 0..w {
            out.push(grid.samples[2 * n + y * w + x]);
            out.push(grid.samples[n + y * w + x]);
            out.push(grid.samples[y * w + x]);
        }
        out.resize(out.len() + (stride - 3 * w), 0);
    }
    Ok(out)
}

/// Reads one whitespace-delimited ASCII integer, skipping `#` comments.
fn pnm_token(bytes: &[u8], pos: &mut usize) -> Result<u32, ImageError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(ImageError::MalformedHeader("expected ASCII integer"));
    }
    let mut value: u32 = 0;
    for &b in &bytes[start..*pos] {
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add(u32::from(b - b'0')))
            .ok_or(ImageError::MalformedHeader("header value overflow"))?;
    }
    Ok(value)
}

fn decode_pnm(bytes: &[u8]) -> Result<PixelGrid, ImageError> {
    let channels = match bytes[1] {
        b'5' => 1usize,
        b'6' => 3usize,
        _ => return Err(ImageError::BadMagic),
    };
    let mut pos = 2;
    let width = pnm_token(bytes, &mut pos)? as usize;
    let height = pnm_token(bytes, &mut pos)? as usize;
    let maxval = pnm_token(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(ImageError::UnsupportedMaxval(maxval));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(ImageError::MalformedHeader(
            "missing whitespace after maxval",
        ));
    }
    pos += 1;
    if width == 0 || height == 0 {
        return Err(ImageError::MalformedHeader("non-positive dimensions"));
    }
    let n = width * height;
    let expected = pos + n * channels;
    if bytes.len() < expected {
        return Err(ImageError::TruncatedPayload {
            expected,
            found: bytes.len(),
        });
    }
    let data = &bytes[pos..pos + n * channels];
    let mut samples = vec![0u8; n * channels];
    if channels == 1 {
        samples.copy_from_slice(data);
    } else {
        for i in 0..n {
            samples[i] = data[3 * i];
            samples[n + i] = data[3 * i + 1];
            samples[2 * n + i] = data[3 * i + 2];
        }
    }
    PixelGrid::new(width, height, channels, samples)
}

fn encode_pnm(grid: &PixelGrid) -> Vec<u8> {
    let n = grid.width * grid.height;
    let magic = if grid.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{}\n{} {}\n255\n", magic, grid.width, grid.height).into_bytes();
    if grid.channels == 1 {
        out.extend_from_slice(&grid.samples);
    } else {
        for i in 0..n {
            out.push(grid.samples[i]);
            out.push(grid.samples[n + i]);
            out.push(grid.samples[2 * n + i]);
        }
    }
    out
}

/// Splits a 3-channel grid into (red, green, blue) single-channel grids.
pub fn split_channels(img: &PixelGrid) -> Result<(PixelGrid, PixelGrid, PixelGrid), ImageError> {
    if img.channels != 3 {
        return Err(ImageError::ChannelCount {
            expected: 3,
            found: img.channels,
        });
    }
    let mk = |c: usize| {
        PixelGrid::new(img.width, img.height, 1, img.plane(c).to_vec())
            .expect("plane geometry is valid by construction")
    };
    Ok((mk(0), mk(1), mk(2)))
}

/// Reassembles the single-channel grids produced by [`split_channels`].
pub fn merge_channels(
    red: &PixelGrid,
    green: &PixelGrid,
    blue: &PixelGrid,
) -> Result<PixelGrid, ImageError> {
    for chan in [red, green, blue] {
        if chan.channels != 1 {
            return Err(ImageError::ChannelCount {
                expected: 1,
                found: chan.channels,
            });
        }
        if chan.width != red.width || chan.height != red.height {
            return Err(ImageError::MergeGeometry(3));
        }
    }
    let mut samples = Vec::with_capacity(3 * red.width * red.height);
    samples.extend_from_slice(&red.samples);
    samples.extend_from_slice(&green.samples);
    samples.extend_from_slice(&blue.samples);
    PixelGrid::new(red.width, red.height, 3, samples)
}

/// Cuts a row-major plane into side x side tiles in row-major block order.
///
/// Geometry must already be validated: `side` divides both dimensions.
pub(crate) fn extract_tiles(
    plane: &[u8],
    width: usize,
    height: usize,
    side: usize,
) -> Vec<Vec<u8>> {
    let blocks_x = width / side;
    let blocks_y = height / side;
    let mut tiles = Vec::with_capacity(blocks_x * blocks_y);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let mut tile = Vec::with_capacity(side * side);
            for dy in 0..side {
                let row = (by * side + dy) * width + bx * side;
                tile.extend_from_slice(&plane[row..row + side]);
            }
            tiles.push(tile);
        }
    }
    tiles
}

/// Inverse of [`extract_tiles`] for tiles given in row-major block order.
pub(crate) fn merge_tiles(tiles: &[Vec<u8>], width: usize, height: usize, side: usize) -> Vec<u8> {
    let blocks_x = width / side;
    let mut plane = vec![0u8; width * height];
    for (index, tile) in tiles.iter().enumerate() {
        let bx = index % blocks_x;
        let by = index / blocks_x;
        for dy in 0..side {
            let dst = (by * side + dy) * width + bx * side;
            plane[dst..dst + side].copy_from_slice(&tile[dy * side..(dy + 1) * side]);
        }
    }
    plane
}

/// Partitions a single-channel grid into b x b blocks in row-major block order.
pub fn partition_blocks(chan: &PixelGrid, side: usize) -> Result<Vec<Block>, ImageError> {
    if chan.channels != 1 {
        return Err(ImageError::ChannelCount {
            expected: 1,
            found: chan.channels,
        });
    }
    if side == 0 || !chan.width.is_multiple_of(side) || !chan.height.is_multiple_of(side) {
        return Err(ImageError::BlockGeometry {
            side,
            width: chan.width,
            height: chan.height,
        });
    }
    Ok(extract_tiles(&chan.samples, chan.width, chan.height, side)
        .into_iter()
        .enumerate()
        .map(|(block_index, samples)| Block {
            block_index,
            side,
            samples,
        })
        .collect())
}

/// Exact inverse of [`partition_blocks`]: blocks are consumed in positional
/// (row-major) order.
pub fn merge_blocks(
    blocks: &[Block],
    width: usize,
    height: usize,
) -> Result<PixelGrid, ImageError> {
    let side = match blocks.first() {
        Some(b) => b.side,
        None => return Err(ImageError::MergeGeometry(0)),
    };
    let consistent = blocks.iter().all(|b| b.side == side);
    let tiles_fit = side != 0
        && width.is_multiple_of(side)
        && height.is_multiple_of(side)
        && (width / side) * (height / side) == blocks.len();
    if !consistent || !tiles_fit {
        return Err(ImageError::MergeGeometry(blocks.len()));
    }
    let tiles: Vec<Vec<u8>> = blocks.iter().map(|b| b.samples.clone()).collect();
    PixelGrid::new(width, height, 1, merge_tiles(&tiles, width, height, side))
}
