//! Fitted integer models shared by the transform codecs.

use crate::coding::QuantizedPmf;
use crate::error::{Error, Result};
use crate::models::{fit_discretized, Density, DiscretizedDensity, Kernel};
use crate::optim::OptimOptions;
use crate::wire::Reader;

/// Discretized logistic fitted to a block of integers, on their range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BandModel {
    pub(crate) min: i32,
    pub(crate) max: i32,
    loc: f64,
    scale: f64,
}

impl BandModel {
    pub(crate) fn fit(values: &[i64]) -> Result<Self> {
        let min = *values.iter().min().ok_or(Error::EmptyInput)?;
        let max = *values.iter().max().unwrap();
        if min < i32::MIN as i64 || max > i32::MAX as i64 {
            return Err(Error::Unencodable("coefficient out of range".into()));
        }
        if min == max {
            return Ok(Self { min: min as i32, max: max as i32, loc: min as f64, scale: 1.0 });
        }
        let opts = OptimOptions { max_iter: 300, rel_tol: 1e-7, initial_step: 1.0 };
        let fit = fit_discretized(Kernel::Logistic, values, Some((min, max)), opts)?;
        let (loc, scale) = match *fit.model.density() {
            Density::Logistic { loc, scale } => (loc, scale),
            _ => unreachable!("logistic fit"),
        };
        Ok(Self { min: min as i32, max: max as i32, loc, scale })
    }

    pub(crate) fn pmf(&self) -> Result<QuantizedPmf> {
        let bins = (self.max as i64 - self.min as i64 + 1) as u64;
        if self.min > self.max || bins > 1 << 16 {
            return Err(Error::Format("bad AC band support".into()));
        }
        if bins == 1 {
            return QuantizedPmf::from_freqs(vec![1 << 12], 12);
        }
        let precision = (64 - (bins - 1).leading_zeros() + 4).clamp(12, 16);
        DiscretizedDensity::new(Density::logistic(self.loc, self.scale)?, self.min as i64, self.max as i64)?
            .quantize(precision)
    }

    pub(crate) fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.min.to_le_bytes());
        out.extend_from_slice(&self.max.to_le_bytes());
        if self.min < self.max {
            out.extend_from_slice(&self.loc.to_le_bytes());
            out.extend_from_slice(&self.scale.to_le_bytes());
        }
    }

    /// `min i32 | max i32`, then `loc f64 | scale f64` unless the band is constant.
    pub(crate) fn read(r: &mut Reader) -> Result<Self> {
        let (min, max) = (r.i32()?, r.i32()?);
        if min == max {
            return Ok(Self { min, max, loc: min as f64, scale: 1.0 });
        }
        let m = Self { min, max, loc: r.f64()?, scale: r.f64()? };
        if !(m.loc.is_finite() && m.scale > 0.0 && m.scale.is_finite()) {
            return Err(Error::Format("bad AC band parameters".into()));
        }
        Ok(m)
    }
}

