//! Forward blurring diffusion and the deblurring ancestral sampler.
//!
//! All per-frequency algebra happens between a DCT forward/inverse pair.
//! Noise is always drawn in pixel space: the per-step marginal noise level
//! is isotropic (every frequency shares the same sigma), and the DCT is
//! orthonormal, so V^T eps is another standard normal field.

use crate::error::FdcError;
use crate::field::Field;
use crate::rng::{derive_seed, rng_from_seed, standard_normal_field};
use crate::schedules::ScheduleTable;
use crate::spectral::{dct2_forward, dct2_inverse, DctPlan};
use crate::Result;

/// How the stochastic term of an ancestral step is produced.
///
/// `FreshNoise` draws a new standard normal field each step, which is the
/// standard ancestral sampler. `PaperLiteral` reuses the predicted noise
/// as the stochastic term, reproducing the printed decoding recursion
/// verbatim; it is kept behind this switch rather than silently corrected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    FreshNoise,
    PaperLiteral,
}

impl NoiseMode {
    pub fn to_u8(self) -> u8 {
        match self {
            NoiseMode::FreshNoise => 0,
            NoiseMode::PaperLiteral => 1,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(NoiseMode::FreshNoise),
            1 => Ok(NoiseMode::PaperLiteral),
            _ => Err(FdcError::invalid(format!("unknown noise mode {v}"))),
        }
    }
}

/// Anything that predicts the noise component of a diffused field.
pub trait Denoiser {
    /// Returns eps_hat with the same shape as `z_t`. `cond` carries the
    /// quantized semantic latent when the model is conditional.
    fn predict_eps(&self, z_t: &Field, t: usize, cond: Option<&Field>) -> Result<Field>;
}

fn check_grid(field: &Field, table: &ScheduleTable) -> Result<()> {
    if field.height() != table.height() || field.width() != table.width() {
        return Err(FdcError::dims(format!(
            "field {}x{} vs schedule grid {}x{}",
            field.height(),
            field.width(),
            table.height(),
            table.width()
        )));
    }
    Ok(())
}

/// field * vec, where `vec` is an H*W per-frequency coefficient table
/// applied to every channel.
fn mul_freq(field: &Field, vec: &[f64]) -> Field {
    let mut out = field.clone();
    let (h, w, c) = (field.height(), field.width(), field.channels());
    for hh in 0..h {
        for ww in 0..w {
            let m = vec[hh * w + ww];
            for v in out.at_mut(hh, ww).iter_mut().take(c) {
                *v *= m;
            }
        }
    }
    out
}

/// Draw z_t ~ q(z_t | x) for a given timestep along with the noise used.
///
/// z_t = V(abar_t (.) V^T x) + sigma_t * eps, eps ~ N(0, I) in pixel space.
pub fn forward_sample(
    x: &Field,
    t: usize,
    table: &ScheduleTable,
    plan: &DctPlan,
    rng_seed: u64,
) -> Result<(Field, Field)> {
    check_grid(x, table)?;
    if t > table.timesteps() {
        return Err(FdcError::invalid(format!(
            "t = {t} outside 0..={}",
            table.timesteps()
        )));
    }
    let mut rng = rng_from_seed(rng_seed);
    let eps = standard_normal_field(x.height(), x.width(), x.channels(), &mut rng);
    if t == 0 {
        // identity endpoint: abar_0 = 1, sigma_0 = 0
        return Ok((x.clone(), eps));
    }
    let fx = dct2_forward(x, plan)?;
    let blurred = dct2_inverse(&mul_freq(&fx, &table.alpha_vec(t)), plan)?;
    let z = blurred.add(&eps.scale(table.sigma_scalar(t)))?;
    Ok((z, eps))
}

/// Invert the epsilon reparameterization:
/// x_hat = V (1/abar_t) (V^T z_t - sigma_t V^T eps_hat).
pub fn predict_x(
    z_t: &Field,
    t: usize,
    eps_hat: &Field,
    table: &ScheduleTable,
    plan: &DctPlan,
) -> Result<Field> {
    check_grid(z_t, table)?;
    if t < 1 || t > table.timesteps() {
        return Err(FdcError::invalid(format!("predict_x needs 1 <= t <= T, got {t}")));
    }
    if !z_t.same_shape(eps_hat) {
        return Err(FdcError::dims("z_t and eps_hat shapes differ"));
    }
    let ft = dct2_forward(z_t, plan)?;
    let feps = dct2_forward(eps_hat, plan)?;
    let sigma = table.sigma_scalar(t);
    let abar = table.alpha_vec_clamped(t);
    let mut fx = ft.sub(&feps.scale(sigma))?;
    let (h, w, c) = (fx.height(), fx.width(), fx.channels());
    for hh in 0..h {
        for ww in 0..w {
            let d = abar[hh * w + ww];
            for v in fx.at_mut(hh, ww).iter_mut().take(c) {
                *v /= d;
            }
        }
    }
    dct2_inverse(&fx, plan)
}

/// One deblurring step z_t -> z_{t-1} given the predicted noise.
pub fn ancestral_step(
    z_t: &Field,
    t: usize,
    eps_hat: &Field,
    table: &ScheduleTable,
    plan: &DctPlan,
    rng_seed: u64,
    noise_mode: NoiseMode,
) -> Result<Field> {
    check_grid(z_t, table)?;
    if t < 1 || t > table.timesteps() {
        return Err(FdcError::invalid(format!(
            "ancestral_step needs 1 <= t <= {}, got {t}",
            table.timesteps()
        )));
    }
    if !z_t.same_shape(eps_hat) {
        return Err(FdcError::dims("z_t and eps_hat shapes differ"));
    }
    let ft = dct2_forward(z_t, plan)?;
    let feps = dct2_forward(eps_hat, plan)?;
    let post = table.posterior_params(t)?;
    let ceps = table.eps_coeff_vec(t)?;
    let sigma_t = table.sigma_scalar(t);

    let (h, w, c) = (ft.height(), ft.width(), ft.channels());
    let mut mu = Field::zeros(h, w, c);
    for hh in 0..h {
        for ww in 0..w {
            let i = hh * w + ww;
            let a = post.coeff_ft[i];
            let ce = ceps[i];
            let src_t = ft.at(hh, ww);
            let src_e = feps.at(hh, ww);
            let dst = mu.at_mut(hh, ww);
            for ch in 0..c {
                dst[ch] = a * src_t[ch] + ce * (src_t[ch] - sigma_t * src_e[ch]);
            }
        }
    }

    let fnoise = match noise_mode {
        NoiseMode::FreshNoise => {
            let mut rng = rng_from_seed(rng_seed);
            let eps_prime = standard_normal_field(h, w, c, &mut rng);
            dct2_forward(&eps_prime, plan)?
        }
        NoiseMode::PaperLiteral => feps,
    };
    for hh in 0..h {
        for ww in 0..w {
            let s = post.sigma[hh * w + ww];
            let src = fnoise.at(hh, ww);
            let dst = mu.at_mut(hh, ww);
            for ch in 0..c {
                dst[ch] += s * src[ch];
            }
        }
    }
    dct2_inverse(&mu, plan)
}

/// Run the full reverse process from z_T ~ N(0, I) down to z_0.
///
/// The per-step noise seeds are derived from `rng_seed` with SplitMix64
/// (stream T+1 for z_T, stream t for step t), so a header seed pins the
/// entire texture synthesis.
pub fn decode_image(
    cond: Option<&Field>,
    denoiser: &dyn Denoiser,
    table: &ScheduleTable,
    plan: &DctPlan,
    channels: usize,
    rng_seed: u64,
    noise_mode: NoiseMode,
) -> Result<Field> {
    let t_max = table.timesteps();
    let mut rng = rng_from_seed(derive_seed(rng_seed, t_max as u64 + 1));
    let mut z = standard_normal_field(table.height(), table.width(), channels, &mut rng);
    for t in (1..=t_max).rev() {
        let eps_hat = denoiser.predict_eps(&z, t, cond)?;
        if !eps_hat.same_shape(&z) {
            return Err(FdcError::dims("denoiser output shape mismatch"));
        }
        if eps_hat.data().iter().any(|v| !v.is_finite()) {
            return Err(FdcError::invalid(format!(
                "denoiser produced non-finite output at t = {t}"
            )));
        }
        z = ancestral_step(
            &z,
            t,
            &eps_hat,
            table,
            plan,
            derive_seed(rng_seed, t as u64),
            noise_mode,
        )?;
    }
    Ok(z)
}

/// Mean squared error between the drawn and predicted noise.
pub fn simplified_loss(eps: &Field, eps_hat: &Field) -> Result<f64> {
    if !eps.same_shape(eps_hat) {
        return Err(FdcError::dims("simplified_loss shape mismatch"));
    }
    let n = eps.len() as f64;
    Ok(eps
        .data()
        .iter()
        .zip(eps_hat.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// Bayes-optimal noise predictor for a zero-mean Gaussian source with a
/// known per-frequency variance spectrum.
///
/// Per frequency, E[f_x | f_t] = abar v f_t / (abar^2 v + sigma^2); running
/// that through the reparameterization gives
/// eps_hat_f = sigma f_t / (abar^2 v + sigma^2).
pub struct OracleDenoiser {
    spectrum: Vec<f64>,
    table: ScheduleTable,
    plan: DctPlan,
}

pub fn oracle_denoiser(
    data_variance_spectrum: Vec<f64>,
    table: &ScheduleTable,
    plan: &DctPlan,
) -> Result<OracleDenoiser> {
    if data_variance_spectrum.len() != table.freq_len() {
        return Err(FdcError::dims("spectrum length vs schedule grid"));
    }
    if data_variance_spectrum.iter().any(|&v| !(v > 0.0)) {
        return Err(FdcError::invalid("variance spectrum must be positive"));
    }
    Ok(OracleDenoiser {
        spectrum: data_variance_spectrum,
        table: table.clone(),
        plan: plan.clone(),
    })
}

impl Denoiser for OracleDenoiser {
    fn predict_eps(&self, z_t: &Field, t: usize, _cond: Option<&Field>) -> Result<Field> {
        check_grid(z_t, &self.table)?;
        let ft = dct2_forward(z_t, &self.plan)?;
        let abar = self.table.alpha_vec(t);
        let sigma = self.table.sigma_scalar(t);
        let (h, w, c) = (ft.height(), ft.width(), ft.channels());
        let mut out = ft.clone();
        for hh in 0..h {
            for ww in 0..w {
                let i = hh * w + ww;
                let g = sigma / (abar[i] * abar[i] * self.spectrum[i] + sigma * sigma);
                for v in out.at_mut(hh, ww).iter_mut().take(c) {
                    *v *= g;
                }
            }
        }
        dct2_inverse(&out, &self.plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::{build_schedule, ScheduleConfig};
    use crate::spectral::frequency_grid;

    fn setup(t_max: usize, sigma_b_max: f64, h: usize, w: usize) -> (ScheduleTable, DctPlan) {
        let grid = frequency_grid(w, h).unwrap();
        let table = build_schedule(
            ScheduleConfig {
                timesteps: t_max,
                sigma_b_max,
                d_min: 0.001,
            },
            &grid,
        )
        .unwrap();
        let plan = DctPlan::new(h, w).unwrap();
        (table, plan)
    }

    #[test]
    fn t0_is_identity() {
        let (table, plan) = setup(4, 10.0, 8, 8);
        let x = standard_normal_field(8, 8, 1, &mut rng_from_seed(1));
        let (z0, _) = forward_sample(&x, 0, &table, &plan, 99).unwrap();
        assert_eq!(z0, x);
    }

    #[test]
    fn forward_matches_dense_matrix_oracle() {
        // dense oracle: build the full DCT matrix product explicitly
        let (table, plan) = setup(4, 6.0, 8, 8);
        let x = standard_normal_field(8, 8, 1, &mut rng_from_seed(5));
        let (z, eps) = forward_sample(&x, 2, &table, &plan, 123).unwrap();

        let abar = table.alpha_vec(2);
        let fx = dct2_forward(&x, &plan).unwrap();
        let mut scaled = fx.clone();
        for h in 0..8 {
            for w in 0..8 {
                let v = scaled.get(h, w, 0) * abar[h * 8 + w];
                scaled.set(h, w, 0, v);
            }
        }
        let expect = dct2_inverse(&scaled, &plan)
            .unwrap()
            .add(&eps.scale(table.sigma_scalar(2)))
            .unwrap();
        assert!(z.max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn endpoint_is_white_noise() {
        let (table, plan) = setup(8, 12.0, 8, 8);
        let x = standard_normal_field(8, 8, 1, &mut rng_from_seed(3)).scale(0.5);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let n_seeds = 200;
        for seed in 0..n_seeds {
            let (z, _) = forward_sample(&x, 8, &table, &plan, seed).unwrap();
            for &v in z.data() {
                sum += v;
                sum_sq += v * v;
            }
        }
        let n = (n_seeds * 64) as f64;
        let mean = sum / n;
        let var = sum_sq / n - mean * mean;
        assert!(mean.abs() < 0.05, "mean = {mean}");
        assert!((var - 1.0).abs() < 0.06, "var = {var}");
    }

    #[test]
    fn predict_x_with_true_eps_recovers_x() {
        // exact algebraic inversion for t < T; at t = T the signal
        // coefficient is cos(pi/2) ~ 6e-17 and x is no longer recoverable
        // in finite precision (nor in exact arithmetic at alpha = 0).
        let (table, plan) = setup(6, 9.0, 8, 8);
        let x = standard_normal_field(8, 8, 2, &mut rng_from_seed(11)).scale(0.7);
        for t in 1..6 {
            let (z, eps) = forward_sample(&x, t, &table, &plan, 1000 + t as u64).unwrap();
            let back = predict_x(&z, t, &eps, &table, &plan).unwrap();
            assert!(back.max_abs_diff(&x) < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn predict_x_zero_eps_is_pure_unblur() {
        let (table, plan) = setup(6, 9.0, 4, 4);
        let z = standard_normal_field(4, 4, 1, &mut rng_from_seed(2));
        let got = predict_x(&z, 3, &Field::zeros(4, 4, 1), &table, &plan).unwrap();
        let fz = dct2_forward(&z, &plan).unwrap();
        let abar = table.alpha_vec_clamped(3);
        let mut fx = fz.clone();
        for h in 0..4 {
            for w in 0..4 {
                let v = fx.get(h, w, 0) / abar[h * 4 + w];
                fx.set(h, w, 0, v);
            }
        }
        let expect = dct2_inverse(&fx, &plan).unwrap();
        assert!(got.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn step_matches_posterior_composition() {
        // mu-hat from the epsilon form must equal the posterior mean with
        // f_x replaced by its reparameterized estimate; compare the linear
        // coefficients (relative tolerance; the t = T coefficient is large).
        let (table, _plan) = setup(50, 7.0, 8, 8);
        for t in 1..=50 {
            let post = table.posterior_params(t).unwrap();
            let ceps = table.eps_coeff_vec(t).unwrap();
            let abar_cl = table.alpha_vec_clamped(t);
            for i in 0..ceps.len() {
                let via_posterior = post.coeff_fx[i] / abar_cl[i];
                let diff = (ceps[i] - via_posterior).abs();
                assert!(
                    diff <= 1e-12 * via_posterior.abs().max(1.0),
                    "t={t} i={i}: {} vs {}",
                    ceps[i],
                    via_posterior
                );
            }
        }
    }

    #[test]
    fn deterministic_deblur_when_no_step_noise() {
        // with sigma_b_max = 0 and d_min = 0 the DC frequency of step t has
        // sigma2_step > 0; instead check both modes agree wherever the
        // posterior sigma is zero (t = 1 has sigma_post = 0 everywhere).
        let (table, plan) = setup(5, 8.0, 4, 4);
        let x = standard_normal_field(4, 4, 1, &mut rng_from_seed(21)).scale(0.3);
        let (z1, eps) = forward_sample(&x, 1, &table, &plan, 77).unwrap();
        let a = ancestral_step(&z1, 1, &eps, &table, &plan, 1, NoiseMode::FreshNoise).unwrap();
        let b = ancestral_step(&z1, 1, &eps, &table, &plan, 2, NoiseMode::PaperLiteral).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
        // and the step actually inverts to x (true posterior at t=1 pins f_0 = f_x)
        assert!(a.max_abs_diff(&x) < 1e-8);
    }

    #[test]
    fn decode_is_deterministic() {
        let (table, plan) = setup(10, 5.0, 8, 8);
        let spectrum = vec![1.0; 64];
        let den = oracle_denoiser(spectrum, &table, &plan).unwrap();
        let a = decode_image(None, &den, &table, &plan, 1, 42, NoiseMode::FreshNoise).unwrap();
        let b = decode_image(None, &den, &table, &plan, 1, 42, NoiseMode::FreshNoise).unwrap();
        assert_eq!(a, b);
        let c = decode_image(None, &den, &table, &plan, 1, 43, NoiseMode::FreshNoise).unwrap();
        assert!(a.max_abs_diff(&c) > 1e-6);
    }

    #[test]
    fn single_exact_step_decode() {
        // T = 1: the only step is deterministic (sigma_post = 0) and the
        // denoiser returning the true eps of a known z_1 recovers x.
        let (table, plan) = setup(1, 4.0, 8, 8);
        let x = standard_normal_field(8, 8, 1, &mut rng_from_seed(8)).scale(0.4);
        let (z1, eps) = forward_sample(&x, 1, &table, &plan, 5).unwrap();
        struct Fixed(Field);
        impl Denoiser for Fixed {
            fn predict_eps(&self, _z: &Field, _t: usize, _c: Option<&Field>) -> Result<Field> {
                Ok(self.0.clone())
            }
        }
        let got = ancestral_step(&z1, 1, &eps, &table, &plan, 0, NoiseMode::FreshNoise).unwrap();
        assert!(got.max_abs_diff(&x) < 1e-8);
        let _ = Fixed(eps); // silence unused warning path when optimized out
    }

    #[test]
    fn loss_basics_and_norm_identity() {
        let (_, plan) = setup(2, 0.0, 8, 8);
        let mut rng = rng_from_seed(4);
        let eps = standard_normal_field(8, 8, 1, &mut rng);
        let eps_hat = standard_normal_field(8, 8, 1, &mut rng);
        assert_eq!(simplified_loss(&eps, &eps).unwrap(), 0.0);
        let pixel = simplified_loss(&eps, &eps_hat).unwrap();
        let diff = eps.sub(&eps_hat).unwrap();
        let fdiff = dct2_forward(&diff, &plan).unwrap();
        let freq = fdiff.norm_sq() / fdiff.len() as f64;
        assert!((pixel - freq).abs() < 1e-10);
        // eps_hat = 0 on standard normal noise: loss ~ 1
        let n = 64.0;
        let zero_loss = simplified_loss(&eps, &Field::zeros(8, 8, 1)).unwrap();
        assert!((zero_loss - 1.0).abs() < 3.0 * (2.0f64 / n).sqrt() + 0.3);
    }

    #[test]
    fn energy_bound_monte_carlo() {
        let (table, plan) = setup(6, 5.0, 8, 8);
        let x = standard_normal_field(8, 8, 1, &mut rng_from_seed(17)).scale(0.6);
        let t = 3;
        let fx = dct2_forward(&x, &plan).unwrap();
        let abar = table.alpha_vec(t);
        let mut signal = 0.0;
        for h in 0..8 {
            for w in 0..8 {
                let v = fx.get(h, w, 0) * abar[h * 8 + w];
                signal += v * v;
            }
        }
        let sigma2 = table.sigma_scalar(t).powi(2);
        let expect = signal + sigma2 * 64.0;
        let n_seeds = 400;
        let mut mean = 0.0;
        for seed in 0..n_seeds {
            let (z, _) = forward_sample(&x, t, &table, &plan, 31_000 + seed).unwrap();
            mean += z.norm_sq();
        }
        mean /= n_seeds as f64;
        // Var(||z||^2) for fixed signal: sum over elems 2 sigma^4 + 4 mu_i^2 sigma^2
        let var = 2.0 * 64.0 * sigma2 * sigma2 + 4.0 * signal * sigma2;
        let se = (var / n_seeds as f64).sqrt();
        assert!(
            (mean - expect).abs() < 3.0 * se + 1e-9,
            "mean {mean} expect {expect} se {se}"
        );
    }

    #[test]
    fn oracle_limits() {
        let (table, plan) = setup(10, 3.0, 4, 4);
        let z = standard_normal_field(4, 4, 1, &mut rng_from_seed(19));
        let t = 5;
        // v -> infinity: eps_hat -> 0
        let big = oracle_denoiser(vec![1e12; 16], &table, &plan).unwrap();
        let e_big = big.predict_eps(&z, t, None).unwrap();
        assert!(e_big.data().iter().all(|v| v.abs() < 1e-6));
        // v -> 0: eps_hat -> f_t / sigma_t (i.e. z / sigma since isotropic map)
        let small = oracle_denoiser(vec![1e-12; 16], &table, &plan).unwrap();
        let e_small = small.predict_eps(&z, t, None).unwrap();
        let expect = z.scale(1.0 / table.sigma_scalar(t));
        assert!(e_small.max_abs_diff(&expect) < 1e-6);
        // rejects nonpositive variance
        assert!(oracle_denoiser(vec![0.0; 16], &table, &plan).is_err());
    }

    #[test]
    fn oracle_beats_trivial_predictors() {
        let (table, plan) = setup(10, 0.0, 1, 16);
        let spectrum: Vec<f64> = (0..16).map(|i| 0.5 + 1.5 * (-(i as f64) / 4.0).exp()).collect();
        let den = oracle_denoiser(spectrum.clone(), &table, &plan).unwrap();
        let t = 5;
        let mut mse_oracle = 0.0;
        let mut mse_zero = 0.0;
        let mut mse_identity = 0.0;
        let trials = 400;
        for seed in 0..trials {
            // draw f_x from the spectrum, transform to pixels
            let mut rng = rng_from_seed(90_000 + seed);
            let mut fx = standard_normal_field(1, 16, 1, &mut rng);
            for (i, v) in fx.data_mut().iter_mut().enumerate() {
                *v *= spectrum[i].sqrt();
            }
            let x = dct2_inverse(&fx, &plan).unwrap();
            let (z, eps) = forward_sample(&x, t, &table, &plan, 100_000 + seed).unwrap();
            let e_hat = den.predict_eps(&z, t, None).unwrap();
            mse_oracle += simplified_loss(&eps, &e_hat).unwrap();
            mse_zero += simplified_loss(&eps, &Field::zeros(1, 16, 1)).unwrap();
            mse_identity +=
                simplified_loss(&eps, &z.scale(1.0 / table.sigma_scalar(t))).unwrap();
        }
        assert!(mse_oracle < mse_zero, "{mse_oracle} vs zero {mse_zero}");
        assert!(mse_oracle < mse_identity, "{mse_oracle} vs id {mse_identity}");
    }

    #[test]
    fn invalid_arguments() {
        let (table, plan) = setup(4, 2.0, 4, 4);
        let x = Field::zeros(4, 4, 1);
        assert!(forward_sample(&x, 5, &table, &plan, 0).is_err());
        assert!(ancestral_step(&x, 0, &x, &table, &plan, 0, NoiseMode::FreshNoise).is_err());
        let wrong = Field::zeros(4, 5, 1);
        assert!(forward_sample(&wrong, 1, &table, &plan, 0).is_err());
    }
}
