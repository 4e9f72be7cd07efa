//! Orthonormal 2D DCT and the squared-frequency grid.
//!
//! The diffusion machinery runs in frequency space: pixels go in through
//! `dct2_forward`, get scaled per frequency, and come back through
//! `dct2_inverse`. The transform is the separable orthonormal type-II DCT
//! (type-III inverse), so it is exactly norm preserving, which is what makes
//! the epsilon-MSE loss identical in pixel and frequency space.

use crate::error::FdcError;
use crate::field::Field;
use crate::Result;
use std::f64::consts::PI;

/// Precomputed cosine bases for one H x W geometry.
///
/// Immutable after construction; transforms are pure functions, so a plan can
/// be shared freely across threads.
#[derive(Debug, Clone)]
pub struct DctPlan {
    height: usize,
    width: usize,
    /// Row-major H x H orthonormal DCT-II matrix.
    basis_h: Vec<f64>,
    /// Row-major W x W orthonormal DCT-II matrix.
    basis_w: Vec<f64>,
}

fn dct_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    let norm0 = (1.0 / n as f64).sqrt();
    let norm = (2.0 / n as f64).sqrt();
    for k in 0..n {
        let s = if k == 0 { norm0 } else { norm };
        for i in 0..n {
            m[k * n + i] = s * (PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n as f64)).cos();
        }
    }
    m
}

impl DctPlan {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(FdcError::invalid("DctPlan with zero dimension"));
        }
        Ok(DctPlan {
            height,
            width,
            basis_h: dct_matrix(height),
            basis_w: dct_matrix(width),
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn check(&self, field: &Field) -> Result<()> {
        if field.height() != self.height || field.width() != self.width {
            return Err(FdcError::dims(format!(
                "field is {}x{}, plan is {}x{}",
                field.height(),
                field.width(),
                self.height,
                self.width
            )));
        }
        Ok(())
    }

    /// Apply `rows` as a left matrix along H and `cols` along W, per channel.
    /// `transpose_*` selects the matrix or its transpose.
    fn apply_separable(&self, field: &Field, transpose: bool) -> Field {
        let (h, w, c) = (self.height, self.width, field.channels());
        let bh = &self.basis_h;
        let bw = &self.basis_w;
        let mut tmp = vec![0.0; h * w];
        let mut out = Field::zeros(h, w, c);
        for ch in 0..c {
            // rows pass: tmp[k][x] = sum_y B[k][y] field[y][x]
            for k in 0..h {
                for x in 0..w {
                    tmp[k * w + x] = 0.0;
                }
                for y in 0..h {
                    let b = if transpose { bh[y * h + k] } else { bh[k * h + y] };
                    if b == 0.0 {
                        continue;
                    }
                    for x in 0..w {
                        tmp[k * w + x] += b * field.get(y, x, ch);
                    }
                }
            }
            // cols pass: out[k][l] = sum_x tmp[k][x] B[l][x]
            for k in 0..h {
                for l in 0..w {
                    let mut acc = 0.0;
                    for x in 0..w {
                        let b = if transpose { bw[x * w + l] } else { bw[l * w + x] };
                        acc += tmp[k * w + x] * b;
                    }
                    out.set(k, l, ch, acc);
                }
            }
        }
        out
    }
}

/// Forward 2D DCT (pixels -> frequency coefficients), per channel.
pub fn dct2_forward(field: &Field, plan: &DctPlan) -> Result<Field> {
    plan.check(field)?;
    Ok(plan.apply_separable(field, false))
}

/// Inverse 2D DCT (frequency coefficients -> pixels), per channel.
pub fn dct2_inverse(coeffs: &Field, plan: &DctPlan) -> Result<Field> {
    plan.check(coeffs)?;
    Ok(plan.apply_separable(coeffs, true))
}

/// Squared-frequency grid: lambda[m][n] = pi^2 (n^2/W^2 + m^2/H^2).
///
/// Stored with the nonnegative sign convention so that the frequency damping
/// exp(-lambda tau) always lies in (0, 1].
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    height: usize,
    width: usize,
    lambda: Vec<f64>,
}

impl FrequencyGrid {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.lambda[m * self.width + n]
    }

    pub fn values(&self) -> &[f64] {
        &self.lambda
    }
}

pub fn frequency_grid(width: usize, height: usize) -> Result<FrequencyGrid> {
    if width == 0 || height == 0 {
        return Err(FdcError::invalid("frequency_grid with zero dimension"));
    }
    let mut lambda = vec![0.0; height * width];
    let (wf, hf) = (width as f64, height as f64);
    for m in 0..height {
        for n in 0..width {
            lambda[m * width + n] =
                PI * PI * ((n * n) as f64 / (wf * wf) + (m * m) as f64 / (hf * hf));
        }
    }
    Ok(FrequencyGrid {
        height,
        width,
        lambda,
    })
}
