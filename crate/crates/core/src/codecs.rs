//! Byte-stream codecs behind the container: static Huffman, arithmetic and
//! rANS, adaptive context models with arithmetic or rANS, and bits-back
//! coding under a latent byte mixture. Plus the image codec entry points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitVector;
use crate::coding::{quantize_pmf, ArithDecoder, ArithEncoder, HuffmanTree, QuantizedPmf, RansState};
use crate::container::{CodecId, Container};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::latent::{bitsback_decode_with, bitsback_encode_with, CodingTables, ToyLatentModel};
use crate::models::{Categorical, ContextModel};
use crate::transform::{jpegish_decode, jpegish_encode, JpegishParams};
use crate::wire::Reader;

pub const STATIC_PRECISION: u32 = 12;
pub const PREAMBLE_WORDS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct CompressOptions {
    pub context_order: usize,
    pub mixture_components: usize,
    pub seed: u64,
    /// Byte model to use instead of fitting one to the input.
    pub model: Option<Categorical>,
}

impl Default for CompressOptions {
    fn default() -> Self {
        Self { context_order: 2, mixture_components: 4, seed: 0, model: None }
    }
}

/// `precision u8 | count u16 | count × freq u16`.
pub fn write_table(pmf: &QuantizedPmf, out: &mut Vec<u8>) {
    out.push(pmf.precision() as u8);
    out.extend_from_slice(&(pmf.num_symbols() as u16).to_le_bytes());
    for &f in pmf.freqs() {
        out.extend_from_slice(&(f as u16).to_le_bytes());
    }
}

pub fn read_table(r: &mut Reader) -> Result<QuantizedPmf> {
    let precision = r.u8()? as u32;
    if precision > 15 {
        return Err(Error::Format(format!("table precision {precision}")));
    }
    let count = r.u16()? as usize;
    let freqs = (0..count).map(|_| Ok(r.u16()? as u32)).collect::<Result<Vec<_>>>()?;
    QuantizedPmf::from_freqs(freqs, precision).map_err(|e| Error::Format(e.to_string()))
}

fn byte_pmf(data: &[u8], model: Option<&Categorical>) -> Result<QuantizedPmf> {
    if let Some(m) = model {
        if m.len() != 256 {
            return Err(Error::InvalidParameter(format!("byte model over {} symbols", m.len())));
        }
        return quantize_pmf(m.probs(), STATIC_PRECISION);
    }
    let mut counts = [0f64; 256];
    for &b in data {
        counts[b as usize] += 1.0;
    }
    if data.is_empty() {
        counts = [1.0; 256];
    }
    quantize_pmf(&counts, STATIC_PRECISION)
}

fn put_len(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&(n as u64).to_le_bytes());
}

fn get_len(r: &mut Reader) -> Result<usize> {
    let n = r.u64()?;
    if n > 1 << 40 {
        return Err(Error::Format(format!("message length {n}")));
    }
    Ok(n as usize)
}

fn put_bits(out: &mut Vec<u8>, bits: BitVector) {
    put_len(out, bits.len());
    out.extend(bits.into_bytes());
}

fn get_bits(r: &mut Reader) -> Result<BitVector> {
    let len = get_len(r)?;
    let bytes = r.take(len.div_ceil(8))?;
    Ok(BitVector::from_bytes(bytes, len))
}

/// EM fit of `π_z p_z(x)` on the byte histogram.
pub fn fit_byte_mixture(data: &[u8], k: usize, seed: u64) -> Result<ToyLatentModel> {
    if k == 0 || k > 64 {
        return Err(Error::InvalidParameter(format!("{k} mixture components")));
    }
    const SMOOTHING: f64 = 0.01;
    let mut counts = [0f64; 256];
    for &b in data {
        counts[b as usize] += 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prior = vec![1.0 / k as f64; k];
    let mut lik: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let w: Vec<f64> = counts.iter().map(|c| (c + 1.0) * rng.gen_range(0.5..1.5)).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|v| v / s).collect()
        })
        .collect();
    for _ in 0..50 {
        let mut nz = vec![0.0; k];
        let mut acc = vec![vec![SMOOTHING; 256]; k];
        for x in 0..256 {
            if counts[x] == 0.0 {
                continue;
            }
            let joint: Vec<f64> = (0..k).map(|z| prior[z] * lik[z][x]).collect();
            let s: f64 = joint.iter().sum();
            for z in 0..k {
                let r = counts[x] * joint[z] / s;
                nz[z] += r;
                acc[z][x] += r;
            }
        }
        let total: f64 = nz.iter().sum::<f64>() + k as f64 * SMOOTHING;
        prior = nz.iter().map(|n| (n + SMOOTHING) / total).collect();
        for z in 0..k {
            let s: f64 = acc[z].iter().sum();
            lik[z] = acc[z].iter().map(|v| v / s).collect();
        }
    }
    ToyLatentModel::with_exact_posterior(prior, lik)
}

fn write_mixture_tables(t: &CodingTables, out: &mut Vec<u8>) {
    out.push(t.likelihood.len() as u8);
    write_table(&t.prior, out);
    t.likelihood.iter().for_each(|p| write_table(p, out));
    t.posterior.iter().for_each(|p| write_table(p, out));
}

fn read_mixture_tables(model: &[u8]) -> Result<CodingTables> {
    let mut r = Reader::new(model);
    let k = r.u8()? as usize;
    let prior = read_table(&mut r)?;
    let likelihood = (0..k).map(|_| read_table(&mut r)).collect::<Result<Vec<_>>>()?;
    let posterior = (0..256).map(|_| read_table(&mut r)).collect::<Result<Vec<_>>>()?;
    if prior.num_symbols() != k
        || likelihood.iter().any(|p| p.num_symbols() != 256)
        || posterior.iter().any(|p| p.num_symbols() != k)
        || r.remaining() != 0
    {
        return Err(Error::Format("inconsistent mixture tables".into()));
    }
    Ok(CodingTables { prior, likelihood, posterior })
}

fn context_model(order: usize) -> ContextModel {
    ContextModel::new(order, 256).with_precision(STATIC_PRECISION)
}

fn read_order(model: &[u8]) -> Result<usize> {
    match model {
        [o] if *o <= 8 => Ok(*o as usize),
        _ => Err(Error::Format("bad context model header".into())),
    }
}

/// Lossless compression of a byte string.
pub fn compress_bytes(codec: CodecId, data: &[u8], opts: &CompressOptions) -> Result<Container> {
    let msg: Vec<usize> = data.iter().map(|&b| b as usize).collect();
    let mut model = Vec::new();
    let mut payload = Vec::new();
    put_len(&mut payload, data.len());
    match codec {
        CodecId::Huffman | CodecId::Arithmetic | CodecId::Rans => {
            let pmf = byte_pmf(data, opts.model.as_ref())?;
            write_table(&pmf, &mut model);
            match codec {
                CodecId::Huffman => put_bits(&mut payload, HuffmanTree::build(&pmf).encode(&msg)?),
                CodecId::Arithmetic => {
                    let mut enc = ArithEncoder::new();
                    for &s in &msg {
                        enc.encode(s, &pmf)?;
                    }
                    put_bits(&mut payload, enc.finish());
                }
                _ => {
                    let mut st = RansState::new();
                    for &s in msg.iter().rev() {
                        st.push(s, &pmf)?;
                    }
                    payload.extend(st.to_bytes());
                }
            }
        }
        CodecId::ContextArithmetic | CodecId::ContextRans => {
            if opts.context_order > 8 {
                return Err(Error::InvalidParameter("context order above 8".into()));
            }
            model.push(opts.context_order as u8);
            let mut cm = context_model(opts.context_order);
            if codec == CodecId::ContextArithmetic {
                let mut enc = ArithEncoder::new();
                for i in 0..msg.len() {
                    let ctx = cm.context(&msg[..i]);
                    enc.encode(msg[i], &cm.predict(&ctx))?;
                    cm.update(&ctx, msg[i]);
                }
                put_bits(&mut payload, enc.finish());
            } else {
                let mut slots = Vec::with_capacity(msg.len());
                for i in 0..msg.len() {
                    let ctx = cm.context(&msg[..i]);
                    let pmf = cm.predict(&ctx);
                    slots.push((pmf.cum(msg[i]), pmf.freq(msg[i])));
                    cm.update(&ctx, msg[i]);
                }
                let mut st = RansState::new();
                for &(cum, freq) in slots.iter().rev() {
                    st.push_interval(cum, freq, STATIC_PRECISION);
                }
                payload.extend(st.to_bytes());
            }
        }
        CodecId::BitsBack => {
            let mixture = fit_byte_mixture(data, opts.mixture_components, opts.seed)?;
            let tables = CodingTables::new(&mixture, STATIC_PRECISION)?;
            write_mixture_tables(&tables, &mut model);
            let preamble = RansState::random(&mut ChaCha8Rng::seed_from_u64(opts.seed), PREAMBLE_WORDS);
            let chain = bitsback_encode_with(&tables, &msg, preamble)?;
            payload.extend(chain.state.to_bytes());
        }
        CodecId::Jpegish => return Err(Error::InvalidParameter("jpegish compresses images, not bytes".into())),
    }
    Ok(Container { codec, model, payload })
}

pub fn decompress_bytes(c: &Container) -> Result<Vec<u8>> {
    let mut r = Reader::new(&c.payload);
    let n = get_len(&mut r)?;
    let msg: Vec<usize> = match c.codec {
        CodecId::Huffman | CodecId::Arithmetic | CodecId::Rans => {
            let mut mr = Reader::new(&c.model);
            let pmf = read_table(&mut mr)?;
            if pmf.num_symbols() != 256 || mr.remaining() != 0 {
                return Err(Error::Format("byte model must have 256 symbols".into()));
            }
            match c.codec {
                CodecId::Huffman => HuffmanTree::build(&pmf).decode(&get_bits(&mut r)?, n)?,
                CodecId::Arithmetic => {
                    let bits = get_bits(&mut r)?;
                    let mut dec = ArithDecoder::new(&bits);
                    (0..n).map(|_| dec.decode(&pmf)).collect()
                }
                _ => {
                    let mut st = RansState::from_bytes(r.take(r.remaining())?)?;
                    (0..n).map(|_| st.pop(&pmf)).collect::<Result<_>>()?
                }
            }
        }
        CodecId::ContextArithmetic | CodecId::ContextRans => {
            let mut cm = context_model(read_order(&c.model)?);
            let mut out = Vec::with_capacity(n);
            if c.codec == CodecId::ContextArithmetic {
                let bits = get_bits(&mut r)?;
                let mut dec = ArithDecoder::new(&bits);
                for _ in 0..n {
                    let ctx = cm.context(&out);
                    let s = dec.decode(&cm.predict(&ctx));
                    cm.update(&ctx, s);
                    out.push(s);
                }
            } else {
                let mut st = RansState::from_bytes(r.take(r.remaining())?)?;
                for _ in 0..n {
                    let ctx = cm.context(&out);
                    let s = st.pop(&cm.predict(&ctx))?;
                    cm.update(&ctx, s);
                    out.push(s);
                }
            }
            out
        }
        CodecId::BitsBack => {
            let tables = read_mixture_tables(&c.model)?;
            let st = RansState::from_bytes(r.take(r.remaining())?)?;
            bitsback_decode_with(&tables, n, st)?.0
        }
        CodecId::Jpegish => return Err(Error::InvalidParameter("jpegish container holds an image".into())),
    };
    Ok(msg.into_iter().map(|s| s as u8).collect())
}

pub fn compress_image(img: &Image, params: &JpegishParams) -> Result<Container> {
    Ok(Container { codec: CodecId::Jpegish, model: Vec::new(), payload: jpegish_encode(img, params)? })
}

pub fn decompress_image(c: &Container) -> Result<Image> {
    if c.codec != CodecId::Jpegish {
        return Err(Error::InvalidParameter(format!("{} container holds bytes", c.codec.name())));
    }
    jpegish_decode(&c.payload)
}

/// Lossless codecs in container-id order.
pub const LOSSLESS: [CodecId; 6] = [
    CodecId::Huffman,
    CodecId::Arithmetic,
    CodecId::Rans,
    CodecId::ContextArithmetic,
    CodecId::ContextRans,
    CodecId::BitsBack,
];
