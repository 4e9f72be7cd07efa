//! Noise, blur and transition schedules.
//!
//! Scalars follow the variance-preserving cosine schedule
//! `alpha_t = cos(t pi / 2T)`, `sigma_t^2 = 1 - alpha_t^2`. Blur enters
//! through the dissipation time `tau_t = sigma_B,t^2 / 2` with
//! `sigma_B,t = sigma_B,max sin(t pi / 2T)^2`, giving the per-frequency
//! damping `d_t = (1 - d_min) exp(-lambda tau_t) + d_min`. The combined
//! per-frequency signal coefficient is `abar_t = alpha_t * d_t`.
//!
//! Per-timestep scalars are precomputed; per-frequency vectors are derived
//! on demand from the lambda grid (they are cheap, and storing T of them for
//! large grids would be wasteful).

use crate::error::FdcError;
use crate::spectral::FrequencyGrid;
use crate::Result;
use std::f64::consts::PI;

/// Floor applied to cumulative signal coefficients before any division.
/// cos(pi/2) is ~6e-17 in f64; dividing by it amplifies rounding noise by
/// fourteen orders of magnitude, so the epsilon -> x reparameterization
/// clamps here.
pub const ABAR_FLOOR: f64 = 1e-9;

/// Guard floor for the damping itself; only reachable with d_min = 0 and
/// extreme blur, where exp underflows to zero.
const D_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct ScheduleConfig {
    /// Number of diffusion steps T; the index t runs over 0..=T.
    pub timesteps: usize,
    /// Maximum blur level sigma_B,max, in pixels. Zero disables blurring and
    /// the whole model collapses to an isotropic DDPM.
    pub sigma_b_max: f64,
    /// Floor for the frequency damping, keeping high frequencies from being
    /// amplified too aggressively on the way back.
    pub d_min: f64,
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.timesteps < 1 {
            return Err(FdcError::invalid("timesteps must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.d_min) {
            return Err(FdcError::invalid("d_min must lie in [0, 1)"));
        }
        if self.sigma_b_max < 0.0 || !self.sigma_b_max.is_finite() {
            return Err(FdcError::invalid("sigma_b_max must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Elementwise coefficients of the deblurring posterior
/// q(f_{t-1} | f_t, f_x): mean = coeff_ft * f_t + coeff_fx * f_x,
/// stddev = sigma, all per frequency.
#[derive(Debug, Clone)]
pub struct PosteriorParams {
    pub coeff_ft: Vec<f64>,
    pub coeff_fx: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScheduleTable {
    timesteps: usize,
    height: usize,
    width: usize,
    d_min: f64,
    lambda: Vec<f64>,
    alpha_scalar: Vec<f64>,
    sigma_scalar: Vec<f64>,
    sigma_b: Vec<f64>,
    tau: Vec<f64>,
}

pub fn build_schedule(cfg: ScheduleConfig, grid: &FrequencyGrid) -> Result<ScheduleTable> {
    cfg.validate()?;
    let t_max = cfg.timesteps;
    let mut alpha_scalar = Vec::with_capacity(t_max + 1);
    let mut sigma_scalar = Vec::with_capacity(t_max + 1);
    let mut sigma_b = Vec::with_capacity(t_max + 1);
    let mut tau = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        let phase = t as f64 * PI / (2.0 * t_max as f64);
        let a = phase.cos();
        alpha_scalar.push(a);
        sigma_scalar.push((1.0 - a * a).max(0.0).sqrt());
        let sb = cfg.sigma_b_max * phase.sin().powi(2);
        sigma_b.push(sb);
        tau.push(sb * sb / 2.0);
    }
    Ok(ScheduleTable {
        timesteps: t_max,
        height: grid.height(),
        width: grid.width(),
        d_min: cfg.d_min,
        lambda: grid.values().to_vec(),
        alpha_scalar,
        sigma_scalar,
        sigma_b,
        tau,
    })
}

impl ScheduleTable {
    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn freq_len(&self) -> usize {
        self.lambda.len()
    }

    pub fn alpha_scalar(&self, t: usize) -> f64 {
        self.alpha_scalar[t]
    }

    pub fn sigma_scalar(&self, t: usize) -> f64 {
        self.sigma_scalar[t]
    }

    pub fn sigma_b(&self, t: usize) -> f64 {
        self.sigma_b[t]
    }

    pub fn tau(&self, t: usize) -> f64 {
        self.tau[t]
    }

    /// Per-frequency damping d_t. Written as `e + d_min (1 - e)` so the DC
    /// entry (lambda = 0, e = 1) is exactly 1.
    pub fn d_vec(&self, t: usize) -> Vec<f64> {
        let tau = self.tau[t];
        self.lambda
            .iter()
            .map(|&l| {
                let e = (-l * tau).exp();
                (e + self.d_min * (1.0 - e)).max(D_FLOOR)
            })
            .collect()
    }

    /// Combined cumulative signal coefficient abar_t = alpha_t * d_t.
    pub fn alpha_vec(&self, t: usize) -> Vec<f64> {
        let a = self.alpha_scalar[t];
        self.d_vec(t).into_iter().map(|d| a * d).collect()
    }

    /// Same, floored for use as a divisor.
    pub fn alpha_vec_clamped(&self, t: usize) -> Vec<f64> {
        self.alpha_vec(t)
            .into_iter()
            .map(|v| v.max(ABAR_FLOOR))
            .collect()
    }

    /// Per-step transition coefficient alpha_{t|t-1} = abar_t / abar_{t-1}.
    pub fn alpha_step_vec(&self, t: usize) -> Result<Vec<f64>> {
        if t < 1 || t > self.timesteps {
            return Err(FdcError::invalid(format!("alpha_step at t = {t}")));
        }
        let cur = self.alpha_vec(t);
        let prev = self.alpha_vec(t - 1);
        Ok(cur.iter().zip(&prev).map(|(c, p)| c / p).collect())
    }

    /// Per-step noise variance sigma^2_{t|t-1}; tiny negative rounding
    /// residue is clipped to zero.
    pub fn sigma2_step_vec(&self, t: usize) -> Result<Vec<f64>> {
        let astep = self.alpha_step_vec(t)?;
        let s2 = self.sigma_scalar[t] * self.sigma_scalar[t];
        let s2_prev = self.sigma_scalar[t - 1] * self.sigma_scalar[t - 1];
        Ok(astep
            .iter()
            .map(|a| {
                let v = s2 - a * a * s2_prev;
                if v < 0.0 {
                    debug_assert!(v > -1e-15, "sigma2_step went negative: {v}");
                    0.0
                } else {
                    v
                }
            })
            .collect())
    }

    /// Coefficients of the true deblurring posterior q(f_{t-1} | f_t, f_x).
    pub fn posterior_params(&self, t: usize) -> Result<PosteriorParams> {
        if t < 1 || t > self.timesteps {
            return Err(FdcError::invalid(format!(
                "posterior_params needs 1 <= t <= {}, got {t}",
                self.timesteps
            )));
        }
        let astep = self.alpha_step_vec(t)?;
        let s2step = self.sigma2_step_vec(t)?;
        let abar_prev = self.alpha_vec(t - 1);
        let s_prev = self.sigma_scalar[t - 1];
        let s2 = self.sigma_scalar[t] * self.sigma_scalar[t];
        let s = self.sigma_scalar[t];
        let mut coeff_ft = Vec::with_capacity(astep.len());
        let mut coeff_fx = Vec::with_capacity(astep.len());
        let mut sigma = Vec::with_capacity(astep.len());
        for i in 0..astep.len() {
            coeff_ft.push(astep[i] * s_prev * s_prev / s2);
            coeff_fx.push(abar_prev[i] * s2step[i] / s2);
            sigma.push(s2step[i].sqrt() * s_prev / s);
        }
        Ok(PosteriorParams {
            coeff_ft,
            coeff_fx,
            sigma,
        })
    }

    /// Coefficient on (f_t - sigma_t f_eps) in the epsilon-form ancestral
    /// step: sigma^2_{t|t-1} / (alpha_{t|t-1} sigma_t^2), with the divisor
    /// built from the floored abar.
    pub fn eps_coeff_vec(&self, t: usize) -> Result<Vec<f64>> {
        if t < 1 || t > self.timesteps {
            return Err(FdcError::invalid(format!("eps_coeff at t = {t}")));
        }
        let s2step = self.sigma2_step_vec(t)?;
        let cur = self.alpha_vec_clamped(t);
        let prev = self.alpha_vec(t - 1);
        let s2 = self.sigma_scalar[t] * self.sigma_scalar[t];
        Ok((0..s2step.len())
            .map(|i| {
                let astep = cur[i] / prev[i];
                s2step[i] / (astep * s2)
            })
            .collect())
    }
}
