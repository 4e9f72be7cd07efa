//! Dense H x W x C arrays used for images, latents and feature maps.
//!
//! Layout is channel-interleaved: element `(h, w, c)` lives at
//! `(h * width + w) * channels + c`, so the per-position feature vector is
//! contiguous. That is the access pattern the entropy model cares about.

use crate::error::FdcError;
use crate::Result;

/// Real-valued field. Pixel data is kept in `[-1, 1]`, latents and feature
/// maps use whatever range falls out of the transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Field {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(FdcError::dims(format!(
                "data length {} != {}x{}x{}",
                data.len(),
                height,
                width,
                channels
            )));
        }
        Ok(Field {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    #[inline]
    pub fn idx(&self, h: usize, w: usize, c: usize) -> usize {
        (h * self.width + w) * self.channels + c
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, c: usize) -> f64 {
        self.data[self.idx(h, w, c)]
    }

    #[inline]
    pub fn set(&mut self, h: usize, w: usize, c: usize, v: f64) {
        let i = self.idx(h, w, c);
        self.data[i] = v;
    }

    /// Contiguous feature vector at one spatial position.
    #[inline]
    pub fn at(&self, h: usize, w: usize) -> &[f64] {
        let base = (h * self.width + w) * self.channels;
        &self.data[base..base + self.channels]
    }

    #[inline]
    pub fn at_mut(&mut self, h: usize, w: usize) -> &mut [f64] {
        let base = (h * self.width + w) * self.channels;
        &mut self.data[base..base + self.channels]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if !self.same_shape(other) {
            return Err(FdcError::dims("zip_with on differently shaped fields"));
        }
        Ok(Field {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Squared L2 norm over all elements.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Concatenate along the channel axis.
    pub fn concat_channels(parts: &[&Field]) -> Result<Field> {
        let first = parts
            .first()
            .ok_or_else(|| FdcError::invalid("concat of zero fields"))?;
        let (h, w) = (first.height, first.width);
        if parts.iter().any(|p| p.height != h || p.width != w) {
            return Err(FdcError::dims("concat_channels spatial mismatch"));
        }
        let channels: usize = parts.iter().map(|p| p.channels).sum();
        let mut out = Field::zeros(h, w, channels);
        for hh in 0..h {
            for ww in 0..w {
                let dst = out.at_mut(hh, ww);
                let mut off = 0;
                for p in parts {
                    dst[off..off + p.channels].copy_from_slice(p.at(hh, ww));
                    off += p.channels;
                }
            }
        }
        Ok(out)
    }
}

/// Integer-valued field for quantized latents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntField {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<i32>,
}

impl IntField {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        IntField {
            height,
            width,
            channels,
            data: vec![0; height * width * channels],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn idx(&self, h: usize, w: usize, c: usize) -> usize {
        (h * self.width + w) * self.channels + c
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, c: usize) -> i32 {
        self.data[self.idx(h, w, c)]
    }

    #[inline]
    pub fn set(&mut self, h: usize, w: usize, c: usize, v: i32) {
        let i = self.idx(h, w, c);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[i32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [i32] {
        &mut self.data
    }

    pub fn to_field(&self) -> Field {
        Field {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }
}
