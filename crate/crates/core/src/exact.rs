//! Closed-form travelling waves for `D_u = 0` and their `D_w -> 0` shock limit.
//!
//! For `0 < D_w < chi` the wave is
//!
//! ```text
//! u(z) = [s2 + s1 exp(-c z / D_w)]^(D_w / (D_w - chi))
//! w(z) = A exp(-c z / D_w) [s2 + s1 exp(-c z / D_w)]^(chi / (D_w - chi))
//! ```
//!
//! with `s1 = A K (chi - D_w) / c^2` and `s2 = u_r^((D_w - chi) / D_w)`. All
//! evaluation goes through `log(s2 + s1 exp(-c z / D_w))` so that very negative
//! `z` and very small `D_w` do not overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, SINGULAR_U_THRESHOLD};
use crate::profile::{uniform_grid, Construction, ProfileSample, WaveProfile};

/// Constants of the closed-form wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactWaveConstants {
    pub sigma1: f64,
    pub sigma2: f64,
    pub exponent_u: f64,
    pub exponent_w: f64,
}

impl ExactWaveConstants {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let p = params.validate_exact()?;
        let d = p.d_w();
        Ok(Self {
            sigma1: p.a * p.k * (p.chi - d) / (p.c * p.c),
            sigma2: p.u_r.powf((d - p.chi) / d),
            exponent_u: d / (d - p.chi),
            exponent_w: p.chi / (d - p.chi),
        })
    }
}

/// Values and first two derivatives of a wave at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveJet {
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
    pub w: f64,
    pub dw: f64,
    pub d2w: f64,
}

/// A wave profile that can be evaluated anywhere.
pub trait TravellingWave {
    fn value(&self, z: f64) -> Result<(f64, f64)>;

    /// Analytic derivatives, when the wave provides them.
    fn jet(&self, _z: f64) -> Option<Result<WaveJet>> {
        None
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// The closed-form wave for `D_u = 0`, with `D_w = params.eps`.
///
/// `params.mu` is ignored: the closed form exists only without attractant
/// diffusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactWave {
    params: ModelParams,
    consts: ExactWaveConstants,
    ln_sigma1: f64,
    ln_sigma2: f64,
}

impl ExactWave {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let consts = ExactWaveConstants::new(params)?;
        let d = params.d_w();
        Ok(Self {
            params: *params,
            consts,
            ln_sigma1: consts.sigma1.ln(),
            // ln of u_r^((d - chi)/d), computed without the intermediate power.
            ln_sigma2: (d - params.chi) / d * params.u_r.ln(),
        })
    }

    pub fn constants(&self) -> &ExactWaveConstants {
        &self.consts
    }

    /// Returns `(ln S, q)` where `S = s2 + s1 e^{-cz/D}` and `q = s1 e^{-cz/D} / S`.
    fn log_sum(&self, z: f64) -> (f64, f64) {
        let ln_tail = self.ln_sigma1 - self.params.c * z / self.params.d_w();
        let ln_s = log_add_exp(self.ln_sigma2, ln_tail);
        (ln_s, (ln_tail - ln_s).exp())
    }

    fn check_z(z: f64) -> Result<()> {
        if z.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("z = {z} is not finite")))
        }
    }

    pub fn eval(&self, z: f64) -> Result<(f64, f64)> {
        Self::check_z(z)?;
        let (ln_s, _) = self.log_sum(z);
        let p = &self.params;
        let u = (self.consts.exponent_u * ln_s).exp();
        let w = (p.a.ln() - p.c * z / p.d_w() + self.consts.exponent_w * ln_s).exp();
        Ok((u, w))
    }

    pub fn eval_jet(&self, z: f64) -> Result<WaveJet> {
        let (u, w) = self.eval(z)?;
        let (_, q) = self.log_sum(z);
        let p = &self.params;
        let d = p.d_w();
        let rate = p.c / d;
        // u'/u = kappa q and w'/w = g, with q' = -rate q (1 - q).
        let kappa = p.c / (p.chi - d);
        let dq = -rate * q * (1.0 - q);
        let du = kappa * q * u;
        let d2u = kappa * u * (dq + kappa * q * q);
        let g = -rate * (1.0 + self.consts.exponent_w * q);
        let dg = -rate * self.consts.exponent_w * dq;
        Ok(WaveJet {
            u,
            du,
            d2u,
            w,
            dw: g * w,
            d2w: (dg + g * g) * w,
        })
    }
}

impl TravellingWave for ExactWave {
    fn value(&self, z: f64) -> Result<(f64, f64)> {
        self.eval(z)
    }

    fn jet(&self, z: f64) -> Option<Result<WaveJet>> {
        Some(self.eval_jet(z))
    }
}

/// Closed-form wave at `z` (see [`ExactWave`]).
pub fn exact_wave(z: f64, params: &ModelParams) -> Result<(f64, f64)> {
    ExactWave::new(params)?.eval(z)
}

/// The `D_w -> 0` limit profile with a shock in `w` at `z = 0`.
///
/// The left branch applies at `z = 0` itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitWave {
    params: ModelParams,
}

impl LimitWave {
    pub fn new(params: &ModelParams) -> Self {
        Self { params: *params }
    }

    pub fn eval(&self, z: f64) -> (f64, f64) {
        let ModelParams { chi, k, c, u_r, .. } = self.params;
        if z <= 0.0 {
            let e = (c * z / chi).exp();
            (u_r * e, c * c * u_r / (k * chi) * e)
        } else {
            (u_r, 0.0)
        }
    }
}

impl TravellingWave for LimitWave {
    fn value(&self, z: f64) -> Result<(f64, f64)> {
        Ok(self.eval(z))
    }

    fn jet(&self, z: f64) -> Option<Result<WaveJet>> {
        let (u, w) = self.eval(z);
        let jet = if z <= 0.0 {
            let r = self.params.c / self.params.chi;
            WaveJet {
                u,
                du: r * u,
                d2u: r * r * u,
                w,
                dw: r * w,
                d2w: r * r * w,
            }
        } else {
            WaveJet {
                u,
                du: 0.0,
                d2u: 0.0,
                w,
                dw: 0.0,
                d2w: 0.0,
            }
        };
        Some(Ok(jet))
    }
}

/// Limit profile at `z` (see [`LimitWave`]).
pub fn limit_wave(z: f64, params: &ModelParams) -> (f64, f64) {
    LimitWave::new(params).eval(z)
}

/// A spatially constant state, e.g. the background `(u_r, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantWave {
    pub u: f64,
    pub w: f64,
}

impl TravellingWave for ConstantWave {
    fn value(&self, _z: f64) -> Result<(f64, f64)> {
        Ok((self.u, self.w))
    }

    fn jet(&self, _z: f64) -> Option<Result<WaveJet>> {
        Some(Ok(WaveJet {
            u: self.u,
            du: 0.0,
            d2u: 0.0,
            w: self.w,
            dw: 0.0,
            d2w: 0.0,
        }))
    }
}

/// How derivatives are obtained for the residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivatives {
    Analytic,
    /// Central differences with step `h`; `None` selects `max(1e-5, 1e-5 |z|)`.
    Central(Option<f64>),
}

/// Default central-difference step at `z`.
pub fn default_step(z: f64) -> f64 {
    f64::max(1e-5, 1e-5 * z.abs())
}

fn central_jet(wave: &dyn TravellingWave, z: f64, h: f64) -> Result<WaveJet> {
    let (u0, w0) = wave.value(z)?;
    let (um, wm) = wave.value(z - h)?;
    let (up, wp) = wave.value(z + h)?;
    Ok(WaveJet {
        u: u0,
        du: (up - um) / (2.0 * h),
        d2u: (up - 2.0 * u0 + um) / (h * h),
        w: w0,
        dw: (wp - wm) / (2.0 * h),
        d2w: (wp - 2.0 * w0 + wm) / (h * h),
    })
}

/// Residuals `(r_u, r_w)` of the travelling-wave equations given a jet:
///
/// ```text
/// r_u = -c u' - D_u u'' + K w
/// r_w = -c w' - D_w w'' + (chi w u' / u)'
/// ```
pub fn residual_from_jet(jet: &WaveJet, params: &ModelParams) -> Result<(f64, f64)> {
    if !(jet.u > SINGULAR_U_THRESHOLD) {
        return Err(Error::SingularState { u: jet.u });
    }
    let ModelParams { chi, k, c, .. } = *params;
    let log_du = jet.du / jet.u;
    let taxis = chi * (jet.dw * log_du + jet.w * (jet.d2u / jet.u - log_du * log_du));
    let r_u = -c * jet.du - params.d_u() * jet.d2u + k * jet.w;
    let r_w = -c * jet.dw - params.d_w() * jet.d2w + taxis;
    Ok((r_u, r_w))
}

/// Residuals of the travelling-wave equations for `wave` at `z`.
pub fn tw_ode_residual(
    wave: &dyn TravellingWave,
    z: f64,
    params: &ModelParams,
    derivatives: Derivatives,
) -> Result<(f64, f64)> {
    let jet = match derivatives {
        Derivatives::Analytic => wave
            .jet(z)
            .ok_or_else(|| Error::InvalidArgument("wave has no analytic derivatives".into()))??,
        Derivatives::Central(h) => {
            let h = h.unwrap_or_else(|| default_step(z));
            if !(h > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "step h = {h} must be positive"
                )));
            }
            central_jet(wave, z, h)?
        }
    };
    residual_from_jet(&jet, params)
}

/// Limit of `w / u` as `z -> -inf`: `c^2 / (K (chi - D_w))`.
pub fn asymptotic_ratio(params: &ModelParams) -> Result<f64> {
    let p = params.validate()?;
    if p.d_w() >= p.chi {
        return Err(Error::DiffusionExceedsChi {
            d_w: p.d_w(),
            chi: p.chi,
        });
    }
    Ok(p.c * p.c / (p.k * (p.chi - p.d_w())))
}

/// Uniformly samples the exact or limit profile on `[z_min, z_max]`.
pub fn sample_profile(
    construction: Construction,
    z_min: f64,
    z_max: f64,
    n: usize,
    params: &ModelParams,
) -> Result<WaveProfile> {
    let zs = uniform_grid(z_min, z_max, n)?;
    let samples: Vec<ProfileSample> = match construction {
        Construction::Exact => {
            let wave = ExactWave::new(params)?;
            zs.iter()
                .map(|&z| wave.eval(z).map(|(u, w)| ProfileSample { z, u, w }))
                .collect::<Result<_>>()?
        }
        Construction::Limit => {
            let wave = LimitWave::new(&params.validate()?);
            zs.iter()
                .map(|&z| {
                    let (u, w) = wave.eval(z);
                    ProfileSample { z, u, w }
                })
                .collect()
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "`{}` profiles are not closed-form",
                other.as_str()
            )))
        }
    };
    WaveProfile::new(samples, construction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn fig(d_w: f64) -> ModelParams {
        ModelParams::reference().with_mu(0.0).with_eps(d_w)
    }

    #[test]
    fn constants_at_unit_diffusion() {
        let c = ExactWaveConstants::new(&fig(1.0)).unwrap();
        assert_eq!(c.sigma1, 1.0);
        assert_eq!(c.sigma2, 1.0);
        assert_eq!(c.exponent_u, -1.0);
        assert_eq!(c.exponent_w, -2.0);
    }

    #[test]
    fn hand_value_at_origin() {
        let (u, w) = exact_wave(0.0, &fig(1.0)).unwrap();
        assert_relative_eq!(u, 0.5, max_relative = 1e-15);
        assert_relative_eq!(w, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn far_right_reaches_end_state() {
        let (u, w) = exact_wave(100.0, &fig(1.0)).unwrap();
        assert_abs_diff_eq!(u, 1.0, epsilon = 1e-12);
        assert!(w < 1e-8);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn matches_high_precision_oracle() {
        // Reference values from a 50-digit evaluation of the closed form.
        let cases = [
            (
                1.0,
                -10.0,
                2.0611536181902035814e-9,
                8.2446144557673973746e-9,
            ),
            (1.0, 3.0, 0.99752737684336522567, 0.0098660371654401912732),
            (
                0.05,
                -10.0,
                3.4535109439759396768e-5,
                7.0841250132839788242e-5,
            ),
            (0.05, 3.0, 1.0, 3.067059229488799853e-52),
            (
                0.25,
                -40.0,
                1.29365433719506769e-20,
                2.9569241993030118627e-20,
            ),
        ];
        for (d_w, z, u_ref, w_ref) in cases {
            let (u, w) = exact_wave(z, &fig(d_w)).unwrap();
            assert_relative_eq!(u, u_ref, max_relative = 1e-12);
            assert_relative_eq!(w, w_ref, max_relative = 1e-12);
        }
    }

    #[test]
    fn invalid_diffusion_is_an_error() {
        assert!(matches!(
            exact_wave(0.0, &fig(2.0)),
            Err(Error::DiffusionExceedsChi { .. })
        ));
        assert_eq!(exact_wave(0.0, &fig(0.0)), Err(Error::DiffusionZero));
        assert!(exact_wave(f64::INFINITY, &fig(1.0)).is_err());
    }

    #[test]
    fn limit_wave_hand_values() {
        let p = fig(0.0);
        assert_eq!(limit_wave(0.0, &p), (1.0, 2.0));
        assert_eq!(limit_wave(5.0, &p), (1.0, 0.0));
        let (u, w) = limit_wave(-1.0, &p);
        assert_relative_eq!(u, (-1f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(w, 2.0 * (-1f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn analytic_residual_vanishes_on_exact_wave() {
        let p = fig(1.0);
        let wave = ExactWave::new(&p).unwrap();
        for z in [-5.0, -1.0, 0.0, 1.0, 5.0] {
            let (ru, rw) = tw_ode_residual(&wave, z, &p, Derivatives::Analytic).unwrap();
            assert!(ru.abs() < 1e-10 && rw.abs() < 1e-10, "z = {z}: {ru} {rw}");
        }
    }

    #[test]
    fn analytic_jet_matches_central_differences() {
        let p = fig(0.25);
        let wave = ExactWave::new(&p).unwrap();
        for z in [-3.0, -0.2, 0.0, 0.4] {
            let a = wave.eval_jet(z).unwrap();
            let n = central_jet(&wave, z, 1e-4).unwrap();
            assert_relative_eq!(a.du, n.du, max_relative = 1e-6);
            assert_relative_eq!(a.dw, n.dw, max_relative = 1e-6);
            assert_relative_eq!(a.d2u, n.d2u, max_relative = 1e-4);
            assert_relative_eq!(a.d2w, n.d2w, max_relative = 1e-4);
        }
    }

    #[test]
    fn background_state_has_zero_residual() {
        let p = ModelParams::reference();
        let bg = ConstantWave { u: p.u_r, w: 0.0 };
        for d in [Derivatives::Analytic, Derivatives::Central(None)] {
            assert_eq!(tw_ode_residual(&bg, 0.3, &p, d).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn limit_wave_solves_the_zero_diffusion_equations() {
        let p = fig(0.0);
        let (ru, rw) =
            tw_ode_residual(&LimitWave::new(&p), -1.0, &p, Derivatives::Analytic).unwrap();
        assert_abs_diff_eq!(ru, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rw, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn residual_rejects_singular_states() {
        let p = fig(1.0);
        let zero = ConstantWave { u: 0.0, w: 1.0 };
        assert!(matches!(
            tw_ode_residual(&zero, 0.0, &p, Derivatives::Analytic),
            Err(Error::SingularState { .. })
        ));
    }

    #[test]
    fn central_residual_is_second_order() {
        let p = fig(1.0);
        let wave = ExactWave::new(&p).unwrap();
        let z = -0.5;
        let hs = [0.08, 0.04, 0.02, 0.01];
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let (ru, rw) =
                    tw_ode_residual(&wave, z, &p, Derivatives::Central(Some(h))).unwrap();
                ru.abs().max(rw.abs())
            })
            .collect();
        for pair in errs.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!((order - 2.0).abs() < 0.2, "observed order {order}");
        }
    }

    #[test]
    fn asymptotic_ratio_values() {
        assert_eq!(asymptotic_ratio(&fig(1.0)).unwrap(), 4.0);
        assert_eq!(asymptotic_ratio(&fig(0.0)).unwrap(), 2.0);
        assert!(asymptotic_ratio(&fig(2.0)).is_err());

        let lim = LimitWave::new(&fig(0.0));
        for z in [-7.0, -1.0, 0.0] {
            let (u, w) = lim.eval(z);
            assert_relative_eq!(w / u, 2.0, max_relative = 1e-15);
        }

        let (u, w) = exact_wave(-40.0, &fig(1.0)).unwrap();
        assert_abs_diff_eq!(w / u, 4.0, epsilon = 1e-6);
    }

    #[test]
    fn exact_u_is_strictly_increasing() {
        for d_w in [1.0, 0.25, 0.05] {
            let prof = sample_profile(Construction::Exact, -20.0, 3.0, 1000, &fig(d_w)).unwrap();
            for pair in prof.samples().windows(2) {
                // Strict until u saturates at u_r in floating point.
                assert!(pair[1].u >= pair[0].u);
                if pair[1].u < 1.0 - 1e-12 {
                    assert!(pair[1].u > pair[0].u);
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_across_resolutions() {
        let p = fig(0.25);
        let coarse = sample_profile(Construction::Exact, -10.0, 5.0, 301, &p).unwrap();
        let fine = sample_profile(Construction::Exact, -10.0, 5.0, 601, &p).unwrap();
        for (i, s) in coarse.samples().iter().enumerate() {
            let f = fine.samples()[2 * i];
            assert_eq!(s.z, f.z);
            assert_abs_diff_eq!(s.u, f.u, epsilon = 1e-14);
            assert_abs_diff_eq!(s.w, f.w, epsilon = 1e-14);
        }
        let two = sample_profile(Construction::Limit, -10.0, 5.0, 2, &p).unwrap();
        assert_eq!(two.len(), 2);
        assert!(sample_profile(Construction::Pde, -1.0, 1.0, 3, &p).is_err());
    }

    fn gaps(d_w: f64, zs: &[f64]) -> Vec<(f64, f64)> {
        let p = fig(d_w);
        zs.iter()
            .map(|&z| {
                let (u, w) = exact_wave(z, &p).unwrap();
                let (ul, wl) = limit_wave(z, &p);
                ((u - ul).abs(), (w - wl).abs())
            })
            .collect()
    }

    #[test]
    fn pointwise_convergence_away_from_the_shock() {
        let zs = uniform_grid(-10.0, 5.0, 301).unwrap();
        let all: Vec<_> = [0.5, 0.25, 0.1, 0.05, 0.01]
            .iter()
            .map(|&d| gaps(d, &zs))
            .collect();
        for pair in all.windows(2) {
            for (i, &z) in zs.iter().enumerate() {
                if z.abs() < 0.5 {
                    continue;
                }
                let (a, b) = (pair[0][i], pair[1][i]);
                assert!(b.0 <= a.0 && b.1 <= a.1, "z = {z}: {a:?} -> {b:?}");
            }
        }
    }

    #[test]
    fn w_gap_just_left_of_the_shock_is_not_monotone() {
        // Near z = -0.25 the w-gap grows slightly from D_w = 0.1 to 0.05
        // before shrinking again; u converges monotonically there.
        let z = [-0.25];
        let (a, b, c) = (gaps(0.1, &z)[0], gaps(0.05, &z)[0], gaps(0.01, &z)[0]);
        assert!(b.1 > a.1);
        assert!(c.1 < b.1);
        assert!(b.0 < a.0 && c.0 < b.0);
    }

    #[test]
    fn sup_gap_on_the_figure_grid_decreases() {
        let zs = uniform_grid(-10.0, 5.0, 301).unwrap();
        let sup: Vec<f64> = [0.5, 0.25, 0.1, 0.05]
            .iter()
            .map(|&d| {
                gaps(d, &zs)
                    .iter()
                    .map(|g| g.0.max(g.1))
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(sup.windows(2).all(|p| p[1] < p[0]), "{sup:?}");
    }
}
