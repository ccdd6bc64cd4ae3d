//! Command implementations behind the `fsic` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};

use fsic::codec::{self, CodecParams, CompressedImage, SupportThreshold};
use fsic::pixel_grid::{self, ImageFormat, PixelGrid};
use fsic::quality_metrics::{self, kilobytes, MetricsReport};

/// CSV header emitted by `sweep`.
pub const SWEEP_CSV_HEADER: &str = "param,value,compressed_bytes,cr,psnr_db,ssim,compress_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    /// Block side length
    B,
    /// Cluster count
    K,
    /// Minimum support
    Psi,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::B => "b",
            Axis::K => "k",
            Axis::Psi => "psi",
        }
    }
}

/// One parameter sweep: the axis to vary, its values, and the fixed settings
/// for everything else.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<String>,
    pub block_size: usize,
    pub clusters: usize,
    pub support: String,
    pub input: PathBuf,
}

/// Parses "58%" as a percentage of the row count and "2" as absolute rows.
pub fn parse_support(text: &str) -> Result<SupportThreshold> {
    let text = text.trim();
    if let Some(percent) = text.strip_suffix('%') {
        let value: f64 = percent
            .trim()
            .parse()
            .with_context(|| format!("invalid support percentage {text:?}"))?;
        Ok(SupportThreshold::Percent(value))
    } else {
        let value: usize = text
            .parse()
            .with_context(|| format!("invalid support row count {text:?}"))?;
        Ok(SupportThreshold::Absolute(value))
    }
}

/// Runs `body` inside a dedicated rayon pool when a thread count was given.
pub fn with_threads<T>(threads: Option<usize>, body: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match threads {
        None => body(),
        Some(n) => {
            if n == 0 {
                bail!("--threads must be at least 1");
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("failed to build thread pool")?;
            pool.install(body)
        }
    }
}

fn load_grid(path: &Path) -> Result<PixelGrid> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    pixel_grid::load_image(&bytes).with_context(|| format!("cannot decode {}", path.display()))
}

fn load_container(path: &Path) -> Result<CompressedImage> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    codec::deserialize(&bytes).with_context(|| format!("cannot parse {}", path.display()))
}

fn format_for(path: &Path) -> ImageFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("bmp") => ImageFormat::Bmp,
        _ => ImageFormat::Pnm,
    }
}

pub fn run_compress(
    block_size: usize,
    clusters: usize,
    support: &str,
    input: &Path,
    output: &Path,
) -> Result<()> {
    let params = CodecParams {
        block_size,
        clusters,
        min_support: parse_support(support)?,
    };

    let t0 = Instant::now();
    let img = load_grid(input)?;
    let load_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let compressed = codec::compress(&img, &params)?;
    let compress_s = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let bytes = codec::serialize(&compressed)?;
    fs::write(output, &bytes).with_context(|| format!("cannot write {}", output.display()))?;
    let write_s = t2.elapsed().as_secs_f64();

    let ratio = quality_metrics::compression_ratio(img.byte_size() as u64, bytes.len() as u64)?;
    println!(
        "loaded  {}x{}x{} ({} bytes) in {load_s:.3} s",
        img.width(),
        img.height(),
        img.channels(),
        img.byte_size()
    );
    println!(
        "compressed to {} bytes ({:.1} kB) in {compress_s:.3} s",
        bytes.len(),
        kilobytes(bytes.len() as u64)
    );
    println!("wrote   {} in {write_s:.3} s", output.display());
    println!("compression ratio: {ratio:.4}");
    Ok(())
}

pub fn run_decompress(input: &Path, output: &Path) -> Result<()> {
    let t0 = Instant::now();
    let container = load_container(input)?;
    let load_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let img = codec::decompress(&container)?;
    let decompress_s = t1.elapsed().as_secs_f64();

    let bytes = pixel_grid::save_image(&img, format_for(output))?;
    fs::write(output, &bytes).with_context(|| format!("cannot write {}", output.display()))?;
    println!("loaded  {} in {load_s:.3} s", input.display());
    println!(
        "decompressed {}x{}x{} in {decompress_s:.3} s",
        img.width(),
        img.height(),
        img.channels()
    );
    println!("wrote   {} ({} bytes)", output.display(), bytes.len());
    Ok(())
}

fn psnr_field(value: f64) -> String {
    if value.is_infinite() {
        "inf".to_string()
    } else {
        format!("{value:.4}")
    }
}

pub fn run_metrics(original: &Path, reconstructed: &Path, compressed: Option<&Path>) -> Result<()> {
    let a = load_grid(original)?;
    let b = load_grid(reconstructed)?;
    match compressed {
        Some(path) => {
            let size = fs::metadata(path)
                .with_context(|| format!("cannot stat {}", path.display()))?
                .len();
            let report = MetricsReport::new(&a, &b, size)?;
            println!(
                "uncompressed: {} bytes ({:.1} kB)",
                report.uncompressed_bytes,
                kilobytes(report.uncompressed_bytes)
            );
            println!(
                "compressed:   {} bytes ({:.1} kB)",
                report.compressed_bytes,
                kilobytes(report.compressed_bytes)
            );
            println!("ratio:        {:.4}", report.compression_ratio);
            let per_channel: Vec<String> = report
                .channel_mse
                .iter()
                .map(|m| format!("{m:.3}"))
                .collect();
            println!(
                "mse:          {:.3} (per channel: {})",
                report.mean_mse,
                per_channel.join(" ")
            );
            println!("psnr:         {} dB", psnr_field(report.psnr_db));
            println!("ssim:         {:.6}", report.ssim);
        }
        None => {
            println!("mse:   {:.3}", quality_metrics::mse(&a, &b)?);
            println!("psnr:  {} dB", psnr_field(quality_metrics::psnr(&a, &b)?));
            println!("ssim:  {:.6}", quality_metrics::ssim(&a, &b)?);
        }
    }
    Ok(())
}

pub fn run_inspect(input: &Path, cluster_tables: bool) -> Result<()> {
    let container = load_container(input)?;
    let mut out = String::new();
    write_inspection(&mut out, &container, cluster_tables);
    print!("{out}");
    Ok(())
}

fn write_inspection(out: &mut String, container: &CompressedImage, cluster_tables: bool) {
    let _ = writeln!(out, "container version 1");
    let _ = writeln!(
        out,
        "  geometry: {}x{}, {} channel(s)",
        container.width, container.height, container.channels
    );
    let _ = writeln!(
        out,
        "  block size: {}  clusters: {}  min support: {} rows",
        container.block_size, container.clusters, container.min_support
    );
    let _ = writeln!(out, "  blocks per channel: {}", container.block_count());
    for (index, channel) in container.channel_data.iter().enumerate() {
        let _ = writeln!(
            out,
            "  channel {index}: {} patterns, {} payload bits",
            channel.patterns.len(),
            channel.bit_count
        );
        let _ = writeln!(
            out,
            "    {:<12} {:>8} {:>9}",
            "symbols", "psi_mod", "code_len"
        );
        for pattern in &channel.patterns {
            let symbols: Vec<String> = pattern.symbols.iter().map(u8::to_string).collect();
            let _ = writeln!(
                out,
                "    {:<12} {:>8} {:>9}",
                symbols.join(""),
                pattern.psi_mod,
                pattern.code_len
            );
        }
        if cluster_tables {
            for table in &channel.cluster_tables {
                let means: Vec<String> = table.means.iter().map(u8::to_string).collect();
                let _ = writeln!(
                    out,
                    "    block {:>4}: means [{}]",
                    table.block_index,
                    means.join(", ")
                );
            }
        }
    }
}

/// Compresses one sweep point and renders its CSV row.
fn sweep_point(img: &PixelGrid, axis: Axis, value: &str, base: &SweepSpec) -> Result<String> {
    let mut params = CodecParams {
        block_size: base.block_size,
        clusters: base.clusters,
        min_support: parse_support(&base.support)?,
    };
    match axis {
        Axis::B => {
            params.block_size = value
                .trim()
                .parse()
                .with_context(|| format!("invalid block size {value:?}"))?
        }
        Axis::K => {
            params.clusters = value
                .trim()
                .parse()
                .with_context(|| format!("invalid cluster count {value:?}"))?
        }
        Axis::Psi => params.min_support = parse_support(value)?,
    }

    let t0 = Instant::now();
    let compressed = codec::compress(img, &params)?;
    let compress_s = t0.elapsed().as_secs_f64();
    let bytes = codec::serialize(&compressed)?;
    let reconstructed = codec::decompress(&compressed)?;

    let cr = quality_metrics::compression_ratio(img.byte_size() as u64, bytes.len() as u64)?;
    let psnr = quality_metrics::psnr(img, &reconstructed)?;
    let ssim = quality_metrics::ssim(img, &reconstructed)?;
    Ok(format!(
        "{},{},{},{:.6},{},{:.6},{:.4}",
        axis.name(),
        value.trim(),
        bytes.len(),
        cr,
        psnr_field(psnr),
        ssim,
        compress_s
    ))
}

/// Runs every sweep point, collecting one CSV row per value. A failing point
/// keeps its row with empty measurement fields and the sweep continues; the
/// diagnostic goes to the error stream.
pub fn sweep_csv(spec: &SweepSpec) -> Result<String> {
    let img = load_grid(&spec.input)?;
    let mut out = String::new();
    let _ = writeln!(out, "{SWEEP_CSV_HEADER}");
    for value in &spec.values {
        match sweep_point(&img, spec.axis, value, spec) {
            Ok(row) => {
                let _ = writeln!(out, "{row}");
            }
            Err(err) => {
                eprintln!("sweep point {}={} failed: {err:#}", spec.axis.name(), value);
                let _ = writeln!(out, "{},{},,,,,", spec.axis.name(), value.trim());
            }
        }
    }
    Ok(out)
}

pub fn run_sweep(spec: &SweepSpec, csv_path: Option<&Path>) -> Result<()> {
    let csv = sweep_csv(spec)?;
    match csv_path {
        Some(path) => {
            fs::write(path, &csv).with_context(|| format!("cannot write {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_parsing_accepts_both_forms() {
        assert_eq!(parse_support("2").unwrap(), SupportThreshold::Absolute(2));
        assert_eq!(
            parse_support("58%").unwrap(),
            SupportThreshold::Percent(58.0)
        );
        assert_eq!(
            parse_support(" 12.5% ").unwrap(),
            SupportThreshold::Percent(12.5)
        );
        assert!(parse_support("abc").is_err());
        assert!(parse_support("%").is_err());
    }

    #[test]
    fn inspection_lists_patterns() {
        let img = PixelGrid::new(8, 8, 1, (0..64).collect()).unwrap();
        let compressed = codec::compress(
            &img,
            &CodecParams {
                block_size: 4,
                clusters: 2,
                min_support: SupportThreshold::Absolute(2),
            },
        )
        .unwrap();
        let mut out = String::new();
        write_inspection(&mut out, &compressed, true);
        assert!(out.contains("block size: 4  clusters: 2"));
        assert!(out.contains("psi_mod"));
        assert!(out.contains("block    0: means"));
    }

    #[test]
    fn sweep_rows_are_deterministic_apart_from_timing() {
        let dir = std::env::temp_dir().join("fsic-cli-sweep-test");
        fs::create_dir_all(&dir).unwrap();
        let input = dir.join("input.pgm");
        let samples: Vec<u8> = (0..256).map(|i| (i * 31 % 251) as u8).collect();
        let img = PixelGrid::new(16, 16, 1, samples).unwrap();
        fs::write(
            &input,
            pixel_grid::save_image(&img, ImageFormat::Pnm).unwrap(),
        )
        .unwrap();

        let spec = SweepSpec {
            axis: Axis::K,
            values: vec!["2".into(), "4".into()],
            block_size: 4,
            clusters: 8,
            support: "2".into(),
            input,
        };
        let strip_time = |csv: &str| -> Vec<String> {
            csv.lines()
                .map(|l| {
                    l.rsplit_once(',')
                        .map(|(head, _)| head.to_string())
                        .unwrap()
                })
                .collect()
        };
        let a = sweep_csv(&spec).unwrap();
        let b = sweep_csv(&spec).unwrap();
        assert_eq!(strip_time(&a), strip_time(&b));
        assert!(a.starts_with(SWEEP_CSV_HEADER));
        assert_eq!(a.lines().count(), 3);
    }

    #[test]
    fn sweep_records_failed_points_and_continues() {
        let dir = std::env::temp_dir().join("fsic-cli-sweep-fail");
        fs::create_dir_all(&dir).unwrap();
        let input = dir.join("input.pgm");
        let img = PixelGrid::new(16, 16, 1, vec![9; 256]).unwrap();
        fs::write(
            &input,
            pixel_grid::save_image(&img, ImageFormat::Pnm).unwrap(),
        )
        .unwrap();

        let spec = SweepSpec {
            axis: Axis::B,
            values: vec!["5".into(), "4".into()],
            block_size: 4,
            clusters: 4,
            support: "2".into(),
            input,
        };
        let csv = sweep_csv(&spec).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "b,5,,,,,");
        assert!(lines[2].starts_with("b,4,"));
    }
}
