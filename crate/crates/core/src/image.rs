//! Planar images and binary PGM/PPM I/O.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// One channel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!("{} samples for {width}x{height}", data.len())));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// 2x2 average pooling; a trailing odd row or column is dropped.
    pub fn downsample2(&self) -> Self {
        let (w, h) = (self.width / 2, self.height / 2);
        Self::from_fn(w, h, |x, y| {
            (self.get(2 * x, 2 * y) + self.get(2 * x + 1, 2 * y) + self.get(2 * x, 2 * y + 1) + self.get(2 * x + 1, 2 * y + 1)) / 4.0
        })
    }

    /// Replicate-edge padding up to the given size.
    pub fn pad_to(&self, width: usize, height: usize) -> Self {
        Self::from_fn(width, height, |x, y| self.get(x.min(self.width - 1), y.min(self.height - 1)))
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::ShapeMismatch("crop outside image".into()));
        }
        Ok(Self::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y)))
    }

    pub fn same_shape(&self, other: &Plane) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// One (gray) or three (RGB) planes of equal size, values on a 0..=255 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    planes: Vec<Plane>,
}

impl Image {
    pub fn new(planes: Vec<Plane>) -> Result<Self> {
        if planes.len() != 1 && planes.len() != 3 {
            return Err(Error::ShapeMismatch(format!("{} channels", planes.len())));
        }
        for p in &planes[1..] {
            planes[0].same_shape(p)?;
        }
        Ok(Self { planes })
    }

    pub fn gray(plane: Plane) -> Self {
        Self { planes: vec![plane] }
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn into_planes(self) -> Vec<Plane> {
        self.planes
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn width(&self) -> usize {
        self.planes[0].width
    }

    pub fn height(&self) -> usize {
        self.planes[0].height
    }

    pub fn num_pixels(&self) -> usize {
        self.width() * self.height()
    }

    /// Samples rounded and clamped to bytes, interleaved.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.num_pixels();
        let mut out = Vec::with_capacity(n * self.channels());
        for i in 0..n {
            for p in &self.planes {
                out.push(p.data[i].round().clamp(0.0, 255.0) as u8);
            }
        }
        out
    }

    pub fn from_bytes(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * channels {
            return Err(Error::ShapeMismatch(format!("{} bytes for {width}x{height}x{channels}", bytes.len())));
        }
        let planes = (0..channels)
            .map(|c| Plane::new(width, height, bytes.iter().skip(c).step_by(channels).map(|&b| b as f64).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(planes)
    }

    pub fn read_pnm<R: Read>(mut reader: R) -> Result<Self> {
        let mut buf = Vec::new();
        reader.read_to_end(&mut buf).map_err(|e| Error::Format(e.to_string()))?;
        decode_pnm(&buf)
    }

    pub fn write_pnm<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(&encode_pnm(self)).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn decode_pnm(buf: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < buf.len() && buf[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < buf.len() && buf[pos] == b'#' {
                while pos < buf.len() && buf[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PNM header".into()));
        }
        Ok(String::from_utf8_lossy(&buf[start..pos]).into_owned())
    };
    let channels = match token()?.as_str() {
        "P5" => 1,
        "P6" => 3,
        m => return Err(Error::Format(format!("unsupported PNM magic {m:?}"))),
    };
    let mut num = || -> Result<usize> { token()?.parse().map_err(|_| Error::Format("bad PNM header number".into())) };
    let (width, height, maxval) = (num()?, num()?, num()?);
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("bad PNM geometry {width}x{height} max {maxval}")));
    }
    let body = &buf[(pos + 1).min(buf.len())..];
    let n = width * height * channels;
    let scale = 255.0 / maxval as f64;
    let samples: Vec<u16> = if maxval < 256 {
        if body.len() < n {
            return Err(Error::Format("truncated PNM raster".into()));
        }
        body[..n].iter().map(|&b| b as u16).collect()
    } else {
        if body.len() < 2 * n {
            return Err(Error::Format("truncated PNM raster".into()));
        }
        body[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    let planes = (0..channels)
        .map(|c| Plane::new(width, height, samples.iter().skip(c).step_by(channels).map(|&v| v as f64 * scale).collect()))
        .collect::<Result<Vec<_>>>()?;
    Image::new(planes)
}

pub fn encode_pnm(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_bytes());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pnm_roundtrip_gray_and_color() {
        let g = Image::gray(Plane::from_fn(5, 3, |x, y| (x * 40 + y) as f64));
        assert_eq!(decode_pnm(&encode_pnm(&g)).unwrap(), g);
        let c = Image::from_bytes(2, 2, 3, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]).unwrap();
        assert_eq!(c.planes()[1].data(), &[2.0, 5.0, 8.0, 11.0]);
        let bytes = encode_pnm(&c);
        assert!(bytes.starts_with(b"P6\n2 2\n255\n"));
        assert_eq!(decode_pnm(&bytes).unwrap(), c);
    }

    #[test]
    fn pnm_comments_and_errors() {
        let img = decode_pnm(b"P5 # c\n2 1\n# x\n255\n\x07\x09").unwrap();
        assert_eq!(img.planes()[0].data(), &[7.0, 9.0]);
        assert!(decode_pnm(b"P2\n1 1\n255\n1").is_err());
        assert!(decode_pnm(b"P5\n4 4\n255\n\x00").is_err());
    }

    #[test]
    fn pad_and_downsample() {
        let p = Plane::from_fn(3, 2, |x, y| (x + 10 * y) as f64);
        let q = p.pad_to(4, 4);
        assert_eq!(q.get(3, 0), 2.0);
        assert_eq!(q.get(3, 3), 12.0);
        let d = q.downsample2();
        assert_eq!((d.width(), d.height()), (2, 2));
        assert_eq!(d.get(0, 0), 5.5);
    }
}
