//! `ncc`: fit models, (de)compress files, sweep R-D trade-offs and score images.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ncc::codecs::{compress_bytes, compress_image, decompress_bytes, decompress_image, CompressOptions};
use ncc::container::{CodecId, Container};
use ncc::image::{decode_pnm, encode_pnm, Image};
use ncc::metrics::{color_metric, ms_ssim, mse, psnr, ssim_image, MsSsimConfig, SsimConfig};
use ncc::models::{fit_categorical, fit_discretized, fit_logistic_mixture, Categorical, GatedMixturePredictor, Kernel, ModelBlob};
use ncc::optim::OptimOptions;
use ncc::rd::{ba_curve, rd_sweep, BaOptions, DistortionMatrix, EcvqCodec, LosslessCodec, RdPoint};
use ncc::transform::{bits_per_pixel, JpegishParams, ProgressiveCoder};
use ncc::Error;

#[derive(Parser)]
#[command(name = "ncc", version, about = "Entropy coding and rate-distortion toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a probability model to the bytes of a file.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "categorical")]
        family: FitFamily,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mixture components or gated experts.
        #[arg(long, default_value_t = 3)]
        components: usize,
    },
    /// Compress a byte file, or a PGM/PPM image with `--codec jpegish`.
    Compress {
        #[arg(long)]
        codec: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Byte model from `ncc fit` for the static codecs.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 75)]
        quality: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 4)]
        components: usize,
    },
    /// Restore the original bytes or image from an NCC1 container.
    Decompress {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Original image; prints distortion of the reconstruction.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Operational rate-distortion sweep, one CSV row per λ.
    RdSweep {
        #[arg(long, value_enum)]
        codec: SweepCodec,
        /// Comma-separated slopes (jpegish: quality levels; progressive: initial step).
        #[arg(long, default_value = "")]
        lambda: String,
        /// Whitespace-separated numbers, or an image for jpegish.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        levels: usize,
        #[arg(long, default_value_t = 4)]
        stages: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Information rate-distortion curve by Blahut-Arimoto.
    Ba {
        /// `bernoulli:p` or `probs:p0,p1,...`
        #[arg(long)]
        source: String,
        #[arg(long, value_enum, default_value = "hamming")]
        distortion: BaDistortion,
        #[arg(long, default_value = "")]
        lambda: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Image quality scores of a test image against a reference.
    Metrics {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 255.0)]
        peak: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FitFamily {
    Categorical,
    Logistic,
    Gaussian,
    Mixture,
    Gated,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepCodec {
    Lossless,
    Ecvq,
    Jpegish,
    Progressive,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaDistortion {
    Hamming,
    Squared,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_corruption() => 3,
        Error::Numeric(_) | Error::NoConvergence { .. } | Error::Unencodable(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("NCC_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn csv_writer(path: Option<&Path>) -> CliResult<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Failure::Usage(format!("not a number: {t:?}"))))
        .collect()
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Fit { input, family, output, seed, components } => fit(&input, family, &output, seed, components),
        Command::Compress { codec, input, output, model, quality, seed, order, components } => {
            let codec = CodecId::from_name(&codec).ok_or_else(|| Failure::Usage(format!("unknown codec {codec:?}")))?;
            let raw = read(&input)?;
            let container = if codec == CodecId::Jpegish {
                let img = decode_pnm(&raw)?;
                let c = compress_image(&img, &JpegishParams::quality(quality)?)?;
                let bytes = c.to_bytes();
                println!("pixels={} bytes={} bpp={:.6}", img.num_pixels(), bytes.len(), bits_per_pixel(&bytes, &img));
                c
            } else {
                let model = match model {
                    Some(p) => Some(byte_model(&ModelBlob::from_bytes(&read(&p)?)?.0)?),
                    None => None,
                };
                let opts = CompressOptions { context_order: order, mixture_components: components, seed, model };
                let c = compress_bytes(codec, &raw, &opts)?;
                let n = c.to_bytes().len();
                let rate = if raw.is_empty() { 0.0 } else { 8.0 * n as f64 / raw.len() as f64 };
                println!("input={} bytes={n} bits_per_byte={rate:.6}", raw.len());
                c
            };
            write(&output, &container.to_bytes())
        }
        Command::Decompress { input, output, reference } => {
            let c = Container::from_bytes(&read(&input)?)?;
            if c.codec == CodecId::Jpegish {
                let img = decompress_image(&c)?;
                write(&output, &encode_pnm(&img))?;
                if let Some(r) = reference {
                    let orig = decode_pnm(&read(&r)?)?;
                    let d = color_metric(&orig, &img, |a, b| mse(a.data(), b.data()))?;
                    let bpp = 8.0 * c.to_bytes().len() as f64 / orig.num_pixels() as f64;
                    println!("bpp={bpp:.6} mse={d:.6} psnr={:.4}", 10.0 * (255.0f64 * 255.0 / d).log10());
                }
                Ok(())
            } else {
                write(&output, &decompress_bytes(&c)?)
            }
        }
        Command::RdSweep { codec, lambda, input, csv, levels, stages, seed } => {
            let params = parse_list(&lambda)?;
            sweep(codec, &params, &input, csv.as_deref(), levels, stages, seed)
        }
        Command::Ba { source, distortion, lambda, csv } => {
            let src = parse_source(&source)?;
            let rho = match distortion {
                BaDistortion::Hamming => DistortionMatrix::hamming(src.len()),
                BaDistortion::Squared => {
                    let v: Vec<f64> = (0..src.len()).map(|i| i as f64).collect();
                    DistortionMatrix::squared_error(&v, &v)?
                }
            };
            let curve = ba_curve(&src, &rho, &parse_list(&lambda)?, BaOptions::default())?;
            let points: Vec<RdPoint> = curve.iter().map(RdPoint::from).collect();
            write_points(csv.as_deref(), "lambda", &points)
        }
        Command::Metrics { reference, test, peak } => {
            let x = decode_pnm(&read(&reference)?)?;
            let y = decode_pnm(&read(&test)?)?;
            let mut w = csv_writer(None)?;
            w.write_record(["metric", "value"])?;
            let m = color_metric(&x, &y, |a, b| mse(a.data(), b.data()))?;
            let p = color_metric(&x, &y, |a, b| psnr(a.data(), b.data(), peak))?;
            let s = color_metric(&x, &y, |a, b| ssim_image(a, b, &SsimConfig::for_peak(peak)))?;
            let ms = color_metric(&x, &y, |a, b| ms_ssim(a, b, &MsSsimConfig::for_peak(peak)));
            w.write_record(["mse", &m.to_string()])?;
            w.write_record(["psnr", &p.to_string()])?;
            w.write_record(["ssim", &s.to_string()])?;
            match ms {
                Ok(v) => w.write_record(["ms_ssim", &v.to_string()])?,
                // too small for five scales
                Err(Error::ShapeMismatch(_)) | Err(Error::InvalidParameter(_)) => {}
                Err(e) => return Err(e.into()),
            }
            w.flush().map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn fit(input: &Path, family: FitFamily, output: &Path, seed: u64, components: usize) -> CliResult {
    use rand::SeedableRng;
    let raw = read(input)?;
    if raw.is_empty() {
        return Err(Error::EmptyInput.into());
    }
    let values: Vec<i64> = raw.iter().map(|&b| b as i64).collect();
    let support = Some((0, 255));
    let blob = match family {
        FitFamily::Categorical => {
            let symbols: Vec<usize> = raw.iter().map(|&b| b as usize).collect();
            ModelBlob::from_categorical(&fit_categorical(&symbols, 256, 0.0)?)
        }
        FitFamily::Logistic => ModelBlob::from_discretized(&fit_discretized(Kernel::Logistic, &values, support, OptimOptions::default())?.model),
        FitFamily::Gaussian => ModelBlob::from_discretized(&fit_discretized(Kernel::Gaussian, &values, support, OptimOptions::default())?.model),
        FitFamily::Mixture => {
            ModelBlob::from_discretized(&fit_logistic_mixture(&values, components, support, OptimOptions::default())?.model)
        }
        FitFamily::Gated => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let init = GatedMixturePredictor::new(4, components, 0, 255, &mut rng)?;
            let opts = OptimOptions { max_iter: 500, ..OptimOptions::default() };
            ModelBlob::from_gated(&init.fit(&values, opts)?.0)
        }
    };
    write(output, &blob.to_bytes())
}

/// A 256-symbol byte model from a categorical or discretized blob.
fn byte_model(blob: &ModelBlob) -> CliResult<Categorical> {
    if let Ok(c) = blob.to_categorical() {
        return Ok(c);
    }
    let d = blob.to_discretized()?;
    if d.support() != (0, 255) {
        return Err(Failure::Usage(format!("model support {:?} is not the byte range", d.support())));
    }
    Ok(Categorical::from_weights(&d.probs())?)
}

fn parse_source(spec: &str) -> CliResult<Categorical> {
    let (kind, rest) = spec.split_once(':').ok_or_else(|| Failure::Usage(format!("bad source {spec:?}")))?;
    let probs = match kind {
        "bernoulli" => {
            let p = parse_list(rest)?;
            if p.len() != 1 {
                return Err(Failure::Usage("bernoulli takes one probability".into()));
            }
            vec![1.0 - p[0], p[0]]
        }
        "probs" => parse_list(rest)?,
        _ => return Err(Failure::Usage(format!("unknown source kind {kind:?}"))),
    };
    Ok(Categorical::new(probs)?)
}

fn read_numbers(path: &Path) -> CliResult<Vec<f64>> {
    let text = String::from_utf8(read(path)?).map_err(|_| Failure::Usage("input is not text".into()))?;
    text.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Failure::Usage(format!("not a number: {t:?}"))))
        .collect()
}

fn write_points(path: Option<&Path>, key: &str, points: &[RdPoint]) -> CliResult {
    let mut w = csv_writer(path)?;
    w.write_record([key, "rate", "distortion"])?;
    for p in points {
        w.write_record([p.lambda.to_string(), p.rate.to_string(), p.distortion.to_string()])?;
    }
    w.flush().map_err(|e| Failure::Usage(e.to_string()))
}

fn sweep(codec: SweepCodec, params: &[f64], input: &Path, csv: Option<&Path>, levels: usize, stages: usize, seed: u64) -> CliResult {
    match codec {
        SweepCodec::Lossless => write_points(csv, "lambda", &rd_sweep(&LosslessCodec, params, &read_numbers(input)?)?),
        SweepCodec::Ecvq => write_points(csv, "lambda", &rd_sweep(&EcvqCodec { levels, seed }, params, &read_numbers(input)?)?),
        SweepCodec::Jpegish => {
            let img = decode_pnm(&read(input)?)?;
            let points = params
                .iter()
                .map(|&q| jpegish_point(&img, q))
                .collect::<CliResult<Vec<_>>>()?;
            write_points(csv, "quality", &points)
        }
        SweepCodec::Progressive => {
            let data = read_numbers(input)?;
            if data.is_empty() {
                return Err(Error::EmptyInput.into());
            }
            let step0 = match params {
                [] => return write_points(csv, "stages", &[]),
                [s] => *s,
                _ => return Err(Failure::Usage("progressive takes a single initial step".into())),
            };
            let coder = ProgressiveCoder::halving(step0, stages)?;
            let payloads = coder.encode(&data)?;
            let mut points = Vec::with_capacity(stages);
            let mut bytes = 0usize;
            for t in 1..=stages {
                bytes += payloads[t - 1].len();
                let recon = coder.decode(&payloads, t)?;
                points.push(RdPoint {
                    lambda: t as f64,
                    rate: 8.0 * bytes as f64 / data.len() as f64,
                    distortion: mse(&data, &recon.values)?,
                });
            }
            write_points(csv, "stages", &points)
        }
    }
}

fn jpegish_point(img: &Image, q: f64) -> CliResult<RdPoint> {
    if !(1.0..=100.0).contains(&q) || q.fract() != 0.0 {
        return Err(Failure::Usage(format!("quality {q} outside 1..=100")));
    }
    let bytes = compress_image(img, &JpegishParams::quality(q as u8)?)?.to_bytes();
    let recon = decompress_image(&Container::from_bytes(&bytes)?)?;
    let d = color_metric(img, &recon, |a, b| mse(a.data(), b.data()))?;
    Ok(RdPoint { lambda: q, rate: 8.0 * bytes.len() as f64 / img.num_pixels() as f64, distortion: d })
}
