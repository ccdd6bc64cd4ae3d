//! Compression ratio, MSE/PSNR, and SSIM for evaluating codec output.
//!
//! PSNR uses the 8-bit peak (255); SSIM uses an 8x8 uniform sliding window
//! with stride 1 and the usual stabilizing constants, averaged over all
//! window positions and channels. Reported sizes use 1000-byte kilobytes.

use thiserror::Error;

use crate::pixel_grid::PixelGrid;

const SSIM_WINDOW: usize = 8;
const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("compressed size must be positive")]
    ZeroCompressedSize,
    #[error("images have different geometry")]
    GeometryMismatch,
    #[error("image smaller than the {0}x{0} comparison window")]
    WindowTooLarge(usize),
}

/// Uncompressed size over compressed size.
pub fn compression_ratio(uncompressed: u64, compressed: u64) -> Result<f64, MetricsError> {
    if compressed == 0 {
        return Err(MetricsError::ZeroCompressedSize);
    }
    Ok(uncompressed as f64 / compressed as f64)
}

fn check_geometry(a: &PixelGrid, b: &PixelGrid) -> Result<(), MetricsError> {
    if a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels() {
        return Err(MetricsError::GeometryMismatch);
    }
    Ok(())
}

fn channel_mse(a: &PixelGrid, b: &PixelGrid, channel: usize) -> f64 {
    let total: u64 = a
        .plane(channel)
        .iter()
        .zip(b.plane(channel))
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    total as f64 / (a.width() * a.height()) as f64
}

/// Mean squared sample difference over all channels.
pub fn mse(a: &PixelGrid, b: &PixelGrid) -> Result<f64, MetricsError> {
    check_geometry(a, b)?;
    let sum: f64 = (0..a.channels()).map(|c| channel_mse(a, b, c)).sum();
    Ok(sum / a.channels() as f64)
}

/// Peak signal-to-noise ratio in dB; infinite for identical images.
pub fn psnr(a: &PixelGrid, b: &PixelGrid) -> Result<f64, MetricsError> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

fn window_ssim(x: &[u8], y: &[u8], width: usize, x0: usize, y0: usize) -> f64 {
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut sum_x = 0u32;
    let mut sum_y = 0u32;
    for dy in 0..SSIM_WINDOW {
        let row = (y0 + dy) * width + x0;
        for dx in 0..SSIM_WINDOW {
            sum_x += u32::from(x[row + dx]);
            sum_y += u32::from(y[row + dx]);
        }
    }
    let mu_x = f64::from(sum_x) / n;
    let mu_y = f64::from(sum_y) / n;

    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for dy in 0..SSIM_WINDOW {
        let row = (y0 + dy) * width + x0;
        for dx in 0..SSIM_WINDOW {
            let ex = f64::from(x[row + dx]) - mu_x;
            let ey = f64::from(y[row + dx]) - mu_y;
            var_x += ex * ex;
            var_y += ey * ey;
            cov += ex * ey;
        }
    }
    var_x /= n;
    var_y /= n;
    cov /= n;

    let numerator = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2);
    let denominator = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2);
    numerator / denominator
}

/// Mean structural similarity over all 8x8 windows and channels.
pub fn ssim(a: &PixelGrid, b: &PixelGrid) -> Result<f64, MetricsError> {
    check_geometry(a, b)?;
    if a.width() < SSIM_WINDOW || a.height() < SSIM_WINDOW {
        return Err(MetricsError::WindowTooLarge(SSIM_WINDOW));
    }
    let mut total = 0.0;
    let mut windows = 0u64;
    for channel in 0..a.channels() {
        let x = a.plane(channel);
        let y = b.plane(channel);
        for y0 in 0..=a.height() - SSIM_WINDOW {
            for x0 in 0..=a.width() - SSIM_WINDOW {
                total += window_ssim(x, y, a.width(), x0, y0);
                windows += 1;
            }
        }
    }
    Ok(total / windows as f64)
}

/// Size and quality summary for one compression run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub uncompressed_bytes: u64,
    pub compressed_bytes: u64,
    pub compression_ratio: f64,
    pub channel_mse: Vec<f64>,
    pub mean_mse: f64,
    pub psnr_db: f64,
    pub ssim: f64,
}

impl MetricsReport {
    pub fn new(
        original: &PixelGrid,
        reconstructed: &PixelGrid,
        compressed_bytes: u64,
    ) -> Result<Self, MetricsError> {
        check_geometry(original, reconstructed)?;
        if compressed_bytes == 0 {
            return Err(MetricsError::ZeroCompressedSize);
        }
        let uncompressed_bytes = original.byte_size() as u64;
        let channel_mse: Vec<f64> = (0..original.channels())
            .map(|c| channel_mse(original, reconstructed, c))
            .collect();
        Ok(Self {
            uncompressed_bytes,
            compressed_bytes,
            compression_ratio: compression_ratio(uncompressed_bytes, compressed_bytes)?,
            mean_mse: mse(original, reconstructed)?,
            psnr_db: psnr(original, reconstructed)?,
            ssim: ssim(original, reconstructed)?,
            channel_mse,
        })
    }
}

/// Formats a byte count in 1000-byte kilobytes.
pub fn kilobytes(bytes: u64) -> f64 {
    bytes as f64 / 1000.0
}
