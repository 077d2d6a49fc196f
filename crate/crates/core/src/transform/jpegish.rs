//! Fixed-transform image codec: color transform, blockwise DCT, per-band
//! step sizes, DC differences with an adaptive context model and AC bands
//! under fitted discretized logistics, all entropy coded with rANS.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::band::BandModel;
use super::dct::{dct8_forward, dct8_inverse, Block};
use crate::coding::{QuantizedPmf, RansState};
use crate::error::{Error, Result};
use crate::image::{Image, Plane};
use crate::models::ContextModel;
use crate::wire::{put_chunk, Reader};

pub const FORMAT_VERSION: u8 = 1;

pub const LUMA_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, 12, 12, 14, 19, 26, 58, 60, 55, 14, 13, 16, 24, 40, 57, 69, 56, 14, 17, 22, 29, 51, 87, 80, 62, 18, 22,
    37, 56, 68, 109, 103, 77, 24, 35, 55, 64, 81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99,
];

pub const CHROMA_TABLE: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
];

/// Per-coefficient step sizes, row-major over the 8×8 block. One table for
/// every channel, or luma then chroma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JpegishParams {
    pub tables: Vec<[u16; 64]>,
}

impl JpegishParams {
    /// IJG-style scaling of the standard tables; 100 gives all-ones steps.
    pub fn quality(q: u8) -> Result<Self> {
        if !(1..=100).contains(&q) {
            return Err(Error::InvalidParameter(format!("quality {q} outside 1..=100")));
        }
        let scale = if q < 50 { 5000 / q as u32 } else { 200 - 2 * q as u32 };
        let scaled = |t: &[u16; 64]| t.map(|v| ((v as u32 * scale + 50) / 100).clamp(1, 32767) as u16);
        Ok(Self { tables: vec![scaled(&LUMA_TABLE), scaled(&CHROMA_TABLE)] })
    }

    pub fn uniform(step: u16) -> Result<Self> {
        if step == 0 {
            return Err(Error::InvalidParameter("zero step".into()));
        }
        Ok(Self { tables: vec![[step; 64]] })
    }

    fn table(&self, channel: usize) -> &[u16; 64] {
        &self.tables[if channel == 0 { 0 } else { self.tables.len() - 1 }]
    }
}

/// 3×3 color matrix with rational entries `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColorTransform {
    pub num: [[i32; 3]; 3],
    pub den: u32,
}

impl ColorTransform {
    /// RGB to YCbCr without chroma offset.
    pub const YCBCR: ColorTransform = ColorTransform {
        num: [[299_000, 587_000, 114_000], [-168_736, -331_264, 500_000], [500_000, -418_688, -81_312]],
        den: 1_000_000,
    };

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.num.map(|r| r.map(|v| v as f64 / self.den as f64))
    }

    pub fn inverse(&self) -> Result<[[f64; 3]; 3]> {
        let m = self.matrix();
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let det = m[0][0] * cof(1, 2, 1, 2) - m[0][1] * cof(1, 2, 0, 2) + m[0][2] * cof(1, 2, 0, 1);
        if det.abs() < 1e-12 || self.den == 0 {
            return Err(Error::Format("singular color transform".into()));
        }
        Ok([
            [cof(1, 2, 1, 2) / det, -cof(0, 2, 1, 2) / det, cof(0, 1, 1, 2) / det],
            [-cof(1, 2, 0, 2) / det, cof(0, 2, 0, 2) / det, -cof(0, 1, 0, 2) / det],
            [cof(1, 2, 0, 1) / det, -cof(0, 2, 0, 1) / det, cof(0, 1, 0, 1) / det],
        ])
    }
}

fn apply(m: &[[f64; 3]; 3], planes: &[Plane]) -> Vec<Plane> {
    (0..3)
        .map(|r| {
            let data = (0..planes[0].data().len())
                .map(|i| (0..3).map(|c| m[r][c] * planes[c].data()[i]).sum())
                .collect();
            Plane::new(planes[0].width(), planes[0].height(), data).unwrap()
        })
        .collect()
}

fn blocks_of(plane: &Plane) -> Vec<Block> {
    let (bw, bh) = (plane.width() / 8, plane.height() / 8);
    let block = |b: usize| {
        let (x0, y0) = (8 * (b % bw), 8 * (b / bw));
        let mut blk = [[0.0; 8]; 8];
        for (r, row) in blk.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = plane.get(x0 + c, y0 + r);
            }
        }
        blk
    };
    #[cfg(feature = "parallel")]
    return (0..bw * bh).into_par_iter().map(block).collect();
    #[cfg(not(feature = "parallel"))]
    (0..bw * bh).map(block).collect()
}

/// Smallest category `c` with `|d| < 2^c`.
fn category(d: i64) -> usize {
    (64 - d.unsigned_abs().leading_zeros()) as usize
}

const DC_CATEGORIES: usize = 24;

fn dc_symbols(dc: &[i64], blocks_per_row: usize) -> Vec<(usize, u64)> {
    dc.iter()
        .enumerate()
        .map(|(i, &v)| {
            let prev = if i % blocks_per_row == 0 { 0 } else { dc[i - 1] };
            let d = v - prev;
            let c = category(d);
            let extra = if d >= 0 { d as u64 } else { (d + (1i64 << c) - 1) as u64 };
            (c, extra)
        })
        .collect()
}

fn encode_dc(dc: &[i64], blocks_per_row: usize) -> Result<Vec<u8>> {
    let syms = dc_symbols(dc, blocks_per_row);
    let mut model = ContextModel::new(1, DC_CATEGORIES);
    let mut history = Vec::with_capacity(syms.len());
    let mut ops: Vec<(usize, QuantizedPmf)> = Vec::with_capacity(2 * syms.len());
    for &(c, extra) in &syms {
        if c >= DC_CATEGORIES {
            return Err(Error::Unencodable(format!("DC difference category {c}")));
        }
        let ctx = model.context(&history);
        ops.push((c, model.predict(&ctx)));
        model.update(&ctx, c);
        history.push(c);
        if c > 0 {
            ops.push((extra as usize, QuantizedPmf::uniform(1 << c, c as u32)?));
        }
    }
    let mut st = RansState::new();
    for (s, pmf) in ops.iter().rev() {
        st.push(*s, pmf)?;
    }
    Ok(st.to_bytes())
}

fn decode_dc(bytes: &[u8], count: usize, blocks_per_row: usize) -> Result<Vec<i64>> {
    let mut st = RansState::from_bytes(bytes)?;
    let mut model = ContextModel::new(1, DC_CATEGORIES);
    let mut history = Vec::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let ctx = model.context(&history);
        let c = st.pop(&model.predict(&ctx))?;
        model.update(&ctx, c);
        history.push(c);
        let d = if c == 0 {
            0
        } else {
            let e = st.pop(&QuantizedPmf::uniform(1 << c, c as u32)?)? as i64;
            if e >> (c - 1) == 1 {
                e
            } else {
                e - (1i64 << c) + 1
            }
        };
        let prev = if i % blocks_per_row == 0 { 0 } else { out[i - 1] };
        out.push(prev + d);
    }
    Ok(out)
}

fn encode_plane(plane: &Plane, steps: &[u16; 64], out: &mut Vec<u8>) -> Result<()> {
    let blocks = blocks_of(plane);
    let quantize = |b: &Block| -> [i64; 64] {
        let y = dct8_forward(b);
        std::array::from_fn(|i| (y[i / 8][i % 8] / steps[i] as f64).round() as i64)
    };
    #[cfg(feature = "parallel")]
    let q: Vec<[i64; 64]> = blocks.par_iter().map(quantize).collect();
    #[cfg(not(feature = "parallel"))]
    let q: Vec<[i64; 64]> = blocks.iter().map(quantize).collect();

    let dc: Vec<i64> = q.iter().map(|b| b[0]).collect();
    put_chunk(out, &encode_dc(&dc, plane.width() / 8)?);

    let fit_band = |k: usize| BandModel::fit(&q.iter().map(|b| b[k]).collect::<Vec<_>>());
    #[cfg(feature = "parallel")]
    let models = (1..64).into_par_iter().map(fit_band).collect::<Result<Vec<_>>>()?;
    #[cfg(not(feature = "parallel"))]
    let models = (1..64).map(fit_band).collect::<Result<Vec<_>>>()?;
    let pmfs = models.iter().map(BandModel::pmf).collect::<Result<Vec<_>>>()?;
    for m in &models {
        m.write(out);
    }
    let mut st = RansState::new();
    for b in q.iter().rev() {
        for k in (1..64).rev() {
            st.push((b[k] - models[k - 1].min as i64) as usize, &pmfs[k - 1])?;
        }
    }
    put_chunk(out, &st.to_bytes());
    Ok(())
}

fn decode_plane(r: &mut Reader, width: usize, height: usize, steps: &[u16; 64]) -> Result<Plane> {
    let (bw, bh) = (width / 8, height / 8);
    let n = bw * bh;
    let dc = decode_dc(r.chunk()?, n, bw)?;
    let models = (1..64).map(|_| BandModel::read(r)).collect::<Result<Vec<_>>>()?;
    let pmfs = models.iter().map(BandModel::pmf).collect::<Result<Vec<_>>>()?;
    let mut st = RansState::from_bytes(r.chunk()?)?;
    let mut q = vec![[0i64; 64]; n];
    for (b, blk) in q.iter_mut().enumerate() {
        blk[0] = dc[b];
        for k in 1..64 {
            blk[k] = st.pop(&pmfs[k - 1])? as i64 + models[k - 1].min as i64;
        }
    }
    let recon = |blk: &[i64; 64]| {
        let mut y = [[0.0; 8]; 8];
        for i in 0..64 {
            y[i / 8][i % 8] = blk[i] as f64 * steps[i] as f64;
        }
        dct8_inverse(&y)
    };
    #[cfg(feature = "parallel")]
    let pix: Vec<Block> = q.par_iter().map(recon).collect();
    #[cfg(not(feature = "parallel"))]
    let pix: Vec<Block> = q.iter().map(recon).collect();
    let mut plane = Plane::filled(width, height, 0.0);
    for (b, blk) in pix.iter().enumerate() {
        let (x0, y0) = (8 * (b % bw), 8 * (b / bw));
        for (r, row) in blk.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                plane.set(x0 + c, y0 + r, *v);
            }
        }
    }
    Ok(plane)
}

/// Header: version u8 | channels u8 | width u32 | height u32 |
/// (color: den u32 | 9 × i32) | table count u8 | tables × 64 × u16, then per
/// channel a DC chunk, 63 band models and an AC chunk. Integers little-endian.
pub fn jpegish_encode(img: &Image, params: &JpegishParams) -> Result<Vec<u8>> {
    if params.tables.is_empty() || params.tables.len() > 2 || params.tables.iter().any(|t| t.contains(&0)) {
        return Err(Error::InvalidParameter("one or two step tables with nonzero steps".into()));
    }
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 || w > u32::MAX as usize || h > u32::MAX as usize {
        return Err(Error::InvalidParameter("bad image size".into()));
    }
    let mut out = vec![FORMAT_VERSION, img.channels() as u8];
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    let shifted: Vec<Plane> = img.planes().iter().map(|p| p.map(|v| v - 128.0)).collect();
    let planes = if img.channels() == 3 {
        let c = ColorTransform::YCBCR;
        out.extend_from_slice(&c.den.to_le_bytes());
        for v in c.num.iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        apply(&c.matrix(), &shifted)
    } else {
        shifted
    };
    out.push(params.tables.len() as u8);
    for t in &params.tables {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let (pw, ph) = (w.div_ceil(8) * 8, h.div_ceil(8) * 8);
    for (ch, p) in planes.iter().enumerate() {
        encode_plane(&p.pad_to(pw, ph), params.table(ch), &mut out)?;
    }
    Ok(out)
}

pub fn jpegish_decode(bytes: &[u8]) -> Result<Image> {
    let mut r = Reader::new(bytes);
    let version = r.u8()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let channels = r.u8()? as usize;
    if channels != 1 && channels != 3 {
        return Err(Error::Format(format!("{channels} channels")));
    }
    let (w, h) = (r.u32()? as usize, r.u32()? as usize);
    if w == 0 || h == 0 || w.saturating_mul(h) > 1 << 28 {
        return Err(Error::Format(format!("bad size {w}x{h}")));
    }
    let inverse = if channels == 3 {
        let den = r.u32()?;
        let mut num = [[0i32; 3]; 3];
        for v in num.iter_mut().flatten() {
            *v = r.i32()?;
        }
        Some(ColorTransform { num, den }.inverse()?)
    } else {
        None
    };
    let count = r.u8()? as usize;
    if count == 0 || count > 2 {
        return Err(Error::Format(format!("{count} step tables")));
    }
    let mut tables = Vec::with_capacity(count);
    for _ in 0..count {
        let mut t = [0u16; 64];
        for v in t.iter_mut() {
            *v = r.u16()?;
        }
        if t.contains(&0) {
            return Err(Error::Format("zero step".into()));
        }
        tables.push(t);
    }
    let params = JpegishParams { tables };
    let (pw, ph) = (w.div_ceil(8) * 8, h.div_ceil(8) * 8);
    let mut planes = (0..channels)
        .map(|ch| decode_plane(&mut r, pw, ph, params.table(ch))?.crop(0, 0, w, h))
        .collect::<Result<Vec<_>>>()?;
    if r.remaining() != 0 {
        return Err(Error::Format("trailing bytes".into()));
    }
    if let Some(inv) = inverse {
        planes = apply(&inv, &planes);
    }
    let planes = planes.into_iter().map(|p| p.map(|v| (v + 128.0).round().clamp(0.0, 255.0))).collect();
    Image::new(planes)
}

/// Coded size in bits per pixel.
pub fn bits_per_pixel(bytes: &[u8], img: &Image) -> f64 {
    8.0 * bytes.len() as f64 / img.num_pixels() as f64
}
