//! The `0 < eps << 1` wave: slow manifolds, heteroclinic shooting and
//! convergence towards the singular orbit.
//!
//! Both slow manifolds are rays in phase space and are known in closed form:
//!
//! ```text
//! S_r,eps(ut) = ( ut (chi - eps) / (c (chi - eps (1 - mu))),
//!                 ut / (chi - eps (1 - mu)),
//!                 c ut / (K (chi - eps)),
//!                 ut )
//! S_a,eps(ut) = S_a(ut)
//! ```
//!
//! The reported end state is the landing point on `S_a` of the trajectory that
//! leaves `S_r,eps` at `u_tilde = c u_r`; for `eps = 0` it is `u_r` itself.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fast_rhs, ModelParams, PhasePoint};
use crate::ode::{integrate, Direction, Event, IntegratorSettings, Termination, Tolerances};
use crate::profile::{uniform_grid, Construction, ProfileSample, WaveProfile};
use crate::singular::{unstable_direction, Branch};

/// Coefficients `(u, v, w) / u_tilde` of a slow manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedBranch {
    pub branch: Branch,
    pub eps: f64,
    pub slope_u: f64,
    pub slope_v: f64,
    pub slope_w: f64,
}

impl PerturbedBranch {
    pub fn new(branch: Branch, params: &ModelParams) -> Result<Self> {
        let ModelParams {
            chi, k, c, mu, eps, ..
        } = *params;
        let (slope_u, slope_v, slope_w) = match branch {
            Branch::Attracting => (1.0 / c, 0.0, 0.0),
            Branch::Repelling => {
                let d_w = chi - eps;
                let d_v = chi - eps * (1.0 - mu);
                if !(d_w > 0.0) {
                    return Err(Error::DegenerateDenominator("chi - eps"));
                }
                if !(d_v > 0.0) {
                    return Err(Error::DegenerateDenominator("chi - eps (1 - mu)"));
                }
                (d_w / (c * d_v), 1.0 / d_v, c / (k * d_w))
            }
        };
        Ok(Self {
            branch,
            eps,
            slope_u,
            slope_v,
            slope_w,
        })
    }

    pub fn point(&self, u_tilde: f64) -> Result<PhasePoint> {
        if !(u_tilde >= 0.0) {
            return Err(Error::NegativeUTilde(u_tilde));
        }
        Ok(PhasePoint::new(
            self.slope_u * u_tilde,
            self.slope_v * u_tilde,
            self.slope_w * u_tilde,
            u_tilde,
        ))
    }

    /// `d(point)/d(u_tilde)`.
    pub fn tangent(&self) -> PhasePoint {
        PhasePoint::new(self.slope_u, self.slope_v, self.slope_w, 1.0)
    }
}

/// Point of the slow manifold of `branch` at `u_tilde`, for `eps = params.eps`.
pub fn perturbed_point(branch: Branch, u_tilde: f64, params: &ModelParams) -> Result<PhasePoint> {
    PerturbedBranch::new(branch, params)?.point(u_tilde)
}

/// Defect of the slow system at `point` against a manifold with the given
/// `tangent` (derivative with respect to `u_tilde`).
///
/// Along the manifold `u_tilde_z = K w`, so invariance means
///
/// ```text
/// mu eps u'(ut) K w = ut - c u
/// mu eps v'(ut) K w = -c v + K w
///    eps w'(ut) K w = -c w + chi v w / u
/// ```
///
/// Each equation is compared in this multiplied-out form and normalized by
/// the magnitude of its terms; the largest relative defect is returned.
pub fn point_invariance_residual(
    point: &PhasePoint,
    tangent: &PhasePoint,
    params: &ModelParams,
) -> Result<f64> {
    let ModelParams {
        chi, k, c, mu, eps, ..
    } = *params;
    let PhasePoint { u, v, w, u_tilde } = *point;
    if !(u > crate::model::SINGULAR_U_THRESHOLD) {
        return Err(Error::SingularState { u });
    }
    let rate = k * w;
    let taxis = chi * v * w / u;
    let eqs = [
        (mu * eps * tangent.u * rate, [u_tilde, -c * u]),
        (mu * eps * tangent.v * rate, [-c * v, k * w]),
        (eps * tangent.w * rate, [-c * w, taxis]),
    ];
    let mut worst = 0f64;
    for (lhs, rhs) in eqs {
        let defect = lhs - (rhs[0] + rhs[1]);
        let scale = lhs.abs() + rhs[0].abs() + rhs[1].abs();
        if scale > 0.0 {
            worst = worst.max(defect.abs() / scale);
        }
    }
    Ok(worst)
}

/// Invariance defect of the closed-form slow manifold at `u_tilde`.
pub fn invariance_residual(branch: Branch, u_tilde: f64, params: &ModelParams) -> Result<f64> {
    let b = PerturbedBranch::new(branch, params)?;
    point_invariance_residual(&b.point(u_tilde)?, &b.tangent(), params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootSettings {
    /// Where the slow part of the profile starts; defaults to `c u_r / 2`.
    pub u_tilde_start: Option<f64>,
    /// Offset along the unstable direction; defaults to `1e-8 |S_r,eps(c u_r)|`.
    pub delta: Option<f64>,
    /// Landing when `|v|` and `|w|` are both below this.
    pub landing_tol: f64,
    /// Largest fast time `y` before giving up.
    pub y_max: f64,
    pub integrator: IntegratorSettings,
    /// Samples on the slow segment of the profile.
    pub slow_samples: usize,
    /// Length (in `z`) of the constant tail appended after landing.
    pub tail_length: f64,
}

impl Default for ShootSettings {
    fn default() -> Self {
        Self {
            u_tilde_start: None,
            delta: None,
            landing_tol: 1e-9,
            y_max: 1e4,
            integrator: IntegratorSettings {
                tol: Tolerances::new(1e-10, 1e-12),
                max_steps: 10_000_000,
                ..Default::default()
            },
            slow_samples: 200,
            tail_length: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroclinicResult {
    pub epsilon: f64,
    /// `(u, w)` in the slow coordinate, shifted so the maximum of `w` is at 0.
    pub profile: WaveProfile,
    /// The fast segment in `y`, from the kicked start to the landing point.
    pub fast_segment: Vec<(f64, PhasePoint)>,
    pub u_end: f64,
    pub end_state_gap: f64,
    /// Speed change `c gap / u_r` equivalent to the end-state change.
    pub speed_offset: f64,
    pub delta: f64,
}

/// Cap on `w` beyond which a shot counts as escaped.
pub fn blow_up_cap(params: &ModelParams) -> f64 {
    10.0 * params.c * params.c * params.u_r / (params.chi * params.k)
}

/// Shoots the heteroclinic orbit for `eps = params.eps`.
///
/// The slow part of the wave lies on the invariant ray `S_r,eps`, where
/// `u_tilde_z = c u_tilde / (chi - eps)` integrates exactly; it is sampled in
/// closed form from `u_tilde_start` up to `c u_r`. There the state is kicked
/// by `delta` along the unstable layer direction and the fast system is
/// integrated until it lands on `S_a`.
pub fn shoot_heteroclinic(
    params: &ModelParams,
    settings: &ShootSettings,
) -> Result<HeteroclinicResult> {
    let params = params.validate()?;
    if !(params.mu > 0.0) {
        return Err(Error::NonPositiveParameter("mu"));
    }
    let ModelParams {
        chi, c, u_r, eps, ..
    } = params;
    let jump = c * u_r;
    let start_ut = settings.u_tilde_start.unwrap_or(0.5 * jump);
    if !(start_ut > 0.0 && start_ut < jump) {
        return Err(Error::InvalidArgument(format!(
            "u_tilde_start = {start_ut} must lie in (0, {jump})"
        )));
    }
    let manifold = PerturbedBranch::new(Branch::Repelling, &params)?;
    let base = manifold.point(jump)?;
    let dir = unstable_direction(&base, &params)?;
    let delta = settings.delta.unwrap_or(1e-8 * base.norm());
    let kicked = [
        base.u + delta * dir[0],
        base.v + delta * dir[1],
        base.w + delta * dir[2],
        base.u_tilde,
    ];

    let tol = settings.landing_tol;
    let cap = blow_up_cap(&params);
    let events = [
        Event::new(
            move |_y, s: &[f64; 4]| s[1].abs().max(s[2].abs()) - tol,
            Direction::Falling,
            true,
        ),
        Event::new(move |_y, s: &[f64; 4]| s[2] - cap, Direction::Rising, true),
    ];
    let traj = integrate(
        |_y, s: &[f64; 4]| fast_rhs(&PhasePoint::from_array(*s), &params).map(PhasePoint::to_array),
        0.0,
        kicked,
        settings.y_max,
        &settings.integrator,
        &events,
    )?;
    match traj.termination {
        Termination::Event(0) => {}
        Termination::Event(_) => {
            return Err(Error::BlowUp {
                w: traj.last().1[2],
                cap,
            })
        }
        Termination::SpanEnd => {
            return Err(Error::NoLanding {
                t_max: settings.y_max,
            })
        }
    }
    let fast_segment: Vec<(f64, PhasePoint)> = traj
        .samples
        .iter()
        .map(|&(y, s)| (y, PhasePoint::from_array(s)))
        .collect();
    let landed = fast_segment.last().expect("non-empty trajectory").1;

    // Slow segment: u_tilde(z) = c u_r exp(c z / (chi - eps)) for z < 0.
    let rate = c / (chi - eps);
    let z_start = (start_ut / jump).ln() / rate;
    let n_slow = settings.slow_samples.max(2);
    let mut samples: Vec<ProfileSample> = uniform_grid(z_start, 0.0, n_slow + 1)?
        .into_iter()
        .take(n_slow)
        .map(|z| {
            let p = manifold.point(jump * (rate * z).exp())?;
            Ok(ProfileSample { z, u: p.u, w: p.w })
        })
        .collect::<Result<_>>()?;
    if eps > 0.0 {
        samples.extend(fast_segment.iter().map(|&(y, p)| ProfileSample {
            z: eps * y,
            u: p.u,
            w: p.w,
        }));
    } else {
        samples.push(ProfileSample {
            z: 0.0,
            u: base.u,
            w: base.w,
        });
    }
    let z_land = samples.last().map(|s| s.z).unwrap_or(0.0);
    let n_tail = 20;
    for i in 1..=n_tail {
        samples.push(ProfileSample {
            z: z_land + settings.tail_length * i as f64 / n_tail as f64,
            u: landed.u,
            w: landed.w,
        });
    }
    let raw = WaveProfile::new(samples, Construction::Shooting)?;
    let profile = raw.shifted(-raw.argmax_w());

    let u_end = landed.u;
    let gap = (u_end - u_r).abs();
    Ok(HeteroclinicResult {
        epsilon: eps,
        profile,
        fast_segment,
        u_end,
        end_state_gap: gap,
        speed_offset: c * gap / u_r,
        delta,
    })
}

/// Sup-norm distance from a profile to the singular orbit seen as a curve in
/// `(z, u, w)`: the slow segment on `z <= 0`, the vertical jump at `z = 0`
/// from `w = c^2 u_r / (chi K)` down to 0, and the rest state on `z > 0`.
///
/// The profile is used as given; align it first (e.g. maximum of `w` at 0).
pub fn singular_distance(profile: &WaveProfile, params: &ModelParams) -> f64 {
    let limit = crate::exact::LimitWave::new(params);
    let w_jump = params.c * params.c * params.u_r / (params.chi * params.k);
    profile
        .samples()
        .iter()
        .map(|s| {
            let (u0, w0) = limit.eval(s.z);
            let graph = (s.u - u0).abs().max((s.w - w0).abs());
            let w_out = if s.w < 0.0 {
                -s.w
            } else if s.w > w_jump {
                s.w - w_jump
            } else {
                0.0
            };
            let jump = s.z.abs().max((s.u - params.u_r).abs()).max(w_out);
            graph.min(jump)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub u_end: f64,
    pub end_state_gap: f64,
    pub speed_offset: f64,
    pub singular_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln gap` against `ln eps`.
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
}

/// Least-squares line through `(x, y)`: `(slope, intercept, slope standard error)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(Error::FitIllConditioned(format!(
            "need at least two points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::FitIllConditioned("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if n > 2 {
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, intercept, se))
}

/// Shoots at every `eps` and fits the order of `end_state_gap` in `eps`.
///
/// Needs at least three distinct values spanning a decade. Shots run in
/// parallel; rows come back in input order.
pub fn convergence_study(
    params: &ModelParams,
    epsilons: &[f64],
    settings: &ShootSettings,
) -> Result<ConvergenceTable> {
    let mut distinct: Vec<f64> = epsilons.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::FitIllConditioned(format!(
            "need at least 3 distinct eps values, got {}",
            distinct.len()
        )));
    }
    if distinct[0] <= 0.0 {
        return Err(Error::FitIllConditioned(
            "eps values must be positive".into(),
        ));
    }
    if distinct[distinct.len() - 1] / distinct[0] < 10.0 {
        return Err(Error::FitIllConditioned(
            "eps values must span at least one decade".into(),
        ));
    }
    let rows = epsilons
        .par_iter()
        .map(|&eps| {
            let shot = shoot_heteroclinic(&params.with_eps(eps), settings)?;
            Ok(ConvergenceRow {
                epsilon: eps,
                u_end: shot.u_end,
                end_state_gap: shot.end_state_gap,
                speed_offset: shot.speed_offset,
                singular_distance: singular_distance(&shot.profile, params),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let floor = 100.0 * settings.integrator.tol.rel * params.u_r;
    if let Some(row) = rows.iter().find(|r| !(r.end_state_gap > floor)) {
        return Err(Error::FitIllConditioned(format!(
            "gap {} at eps = {} is at the integration noise floor {floor}",
            row.end_state_gap, row.epsilon
        )));
    }
    let x: Vec<f64> = rows.iter().map(|r| r.epsilon.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.end_state_gap.ln()).collect();
    let (slope, intercept, slope_std_error) = fit_line(&x, &y)?;
    Ok(ConvergenceTable {
        rows,
        slope,
        intercept,
        slope_std_error,
    })
}
