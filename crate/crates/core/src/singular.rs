//! The `eps = 0` skeleton of the wave.
//!
//! The critical manifold (the equilibria of the layer problem) has two branches
//! meeting at the origin:
//!
//! ```text
//! S_a(ut) = (ut / c, 0,        0,                 ut)   attracting
//! S_r(ut) = (ut / c, ut / chi, c ut / (chi K),    ut)   repelling
//! ```
//!
//! The singular orbit leaves the origin along the reduced flow on `S_r`, jumps
//! at `u_tilde = c u_r` along a fast fibre of the layer problem, and ends at the
//! rest point `(u_r, 0, 0, c u_r)` on `S_a`.

use nalgebra::{Complex, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{eigenvalues3, layer_jacobian, ModelParams, PhasePoint};
use crate::ode::{integrate, Direction, Event, IntegratorSettings, Termination};
use crate::profile::{uniform_grid, Construction, ProfileSample, WaveProfile};

/// A branch of the critical manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `S_a`, the line of background states.
    Attracting,
    /// `S_r`, carrying the slow part of the front.
    Repelling,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Attracting => "S_a",
            Branch::Repelling => "S_r",
        }
    }
}

/// Point of `branch` at the slow coordinate `u_tilde`.
pub fn branch_point(branch: Branch, u_tilde: f64, params: &ModelParams) -> Result<PhasePoint> {
    if !(u_tilde >= 0.0) {
        return Err(Error::NegativeUTilde(u_tilde));
    }
    let ModelParams { chi, k, c, .. } = *params;
    Ok(match branch {
        Branch::Attracting => PhasePoint::new(u_tilde / c, 0.0, 0.0, u_tilde),
        Branch::Repelling => {
            PhasePoint::new(u_tilde / c, u_tilde / chi, c * u_tilde / (chi * k), u_tilde)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Attracting,
    Repelling,
    NonHyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// Layer-problem eigenvalues, sorted by descending real part.
    pub eigenvalues: [Complex<f64>; 3],
    pub stability: Stability,
}

/// Linear stability of `branch` at `u_tilde` under the layer flow.
pub fn classify_branch(
    branch: Branch,
    u_tilde: f64,
    params: &ModelParams,
) -> Result<StabilityReport> {
    if u_tilde == 0.0 {
        return Err(Error::OnIntersection);
    }
    let point = branch_point(branch, u_tilde, params)?;
    let eigenvalues = eigenvalues3(&layer_jacobian(&point, params)?);
    let stability = if eigenvalues.iter().all(|e| e.re < 0.0) {
        Stability::Attracting
    } else if eigenvalues.iter().any(|e| e.re > 0.0) {
        Stability::Repelling
    } else {
        Stability::NonHyperbolic
    };
    Ok(StabilityReport {
        eigenvalues,
        stability,
    })
}

/// Unit eigenvector of the real eigenvalue `lambda` of `m`, from the null space
/// of `m - lambda I`.
pub(crate) fn real_eigenvector(m: &Matrix3<f64>, lambda: f64) -> Vector3<f64> {
    let shifted = m - Matrix3::identity() * lambda;
    let rows = [
        shifted.row(0).transpose(),
        shifted.row(1).transpose(),
        shifted.row(2).transpose(),
    ];
    let candidates = [
        rows[0].cross(&rows[1]),
        rows[0].cross(&rows[2]),
        rows[1].cross(&rows[2]),
    ];
    let best = candidates
        .iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .copied()
        .unwrap_or_else(Vector3::zeros);
    best / best.norm()
}

/// Unstable direction of the layer flow at `point`, oriented so that `w`
/// decreases (towards the attracting branch).
pub fn unstable_direction(point: &PhasePoint, params: &ModelParams) -> Result<Vector3<f64>> {
    let jac = layer_jacobian(point, params)?;
    let lead = eigenvalues3(&jac)[0];
    if !(lead.re > 0.0) || lead.im != 0.0 {
        return Err(Error::InvalidArgument(
            "layer flow has no real unstable direction at this point".into(),
        ));
    }
    let e = real_eigenvector(&jac, lead.re);
    Ok(if e[2] > 0.0 { -e } else { e })
}

/// Phase shift `z* = chi ln(c u_r) / c` that pins the jump at `z = 0`.
pub fn z_star(params: &ModelParams) -> f64 {
    params.chi * (params.c * params.u_r).ln() / params.c
}

/// Reduced flow on `S_r`, `u_tilde(z) = exp(c (z + z*) / chi)`.
///
/// Evaluated as `u = u_r exp(c z / chi)` so that `(u, w)` coincides bit for bit
/// with the limit profile on `z <= 0`.
pub fn reduced_flow_on_sr(z: f64, params: &ModelParams) -> PhasePoint {
    let ModelParams { chi, k, c, u_r, .. } = *params;
    let e = (c * z / chi).exp();
    let u = u_r * e;
    let w = c * c * u_r / (k * chi) * e;
    let u_tilde = c * u;
    PhasePoint::new(u, u_tilde / chi, w, u_tilde)
}

/// Closed-form fast fibre of the layer problem for `mu = 0`:
///
/// ```text
/// u = ut / c,   v = K ut / (chi K + beta e^{c y}),   w = c ut / (chi K + beta e^{c y})
/// ```
///
/// `beta = chi K` puts the midpoint of the fibre at `y = 0`.
pub fn fibre_mu0(y: f64, u_tilde: f64, beta: f64, params: &ModelParams) -> Result<PhasePoint> {
    if !(u_tilde >= 0.0) {
        return Err(Error::NegativeUTilde(u_tilde));
    }
    if !(beta > 0.0) {
        return Err(Error::NonPositiveBeta(beta));
    }
    let ModelParams { chi, k, c, .. } = *params;
    let denom = chi * k + beta * (c * y).exp();
    Ok(PhasePoint::new(
        u_tilde / c,
        k * u_tilde / denom,
        c * u_tilde / denom,
        u_tilde,
    ))
}

/// The `(v, w)` layer equations for `mu = 0`, where `v = K w / c` is slaved:
/// `w_y = -c w + chi K w^2 / (c u)`.
pub fn layer_w_rhs_mu0(w: f64, u: f64, params: &ModelParams) -> f64 {
    let ModelParams { chi, k, c, .. } = *params;
    -c * w + chi * k * w * w / (c * u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FibreSettings {
    /// Offset from `S_r` along the unstable direction.
    pub delta: f64,
    pub y_max: f64,
    /// Landing when `|v|` and `|w|` are both below this.
    pub landing_tol: f64,
    pub integrator: IntegratorSettings,
}

impl Default for FibreSettings {
    fn default() -> Self {
        Self {
            delta: 1e-6,
            y_max: 200.0,
            landing_tol: 1e-8,
            integrator: IntegratorSettings::default(),
        }
    }
}

/// A computed fast fibre, sampled in the fast coordinate `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fibre {
    pub samples: Vec<(f64, PhasePoint)>,
}

impl Fibre {
    pub fn start(&self) -> PhasePoint {
        self.samples[0].1
    }

    pub fn end(&self) -> PhasePoint {
        self.samples[self.samples.len() - 1].1
    }
}

/// Integrates the fast fibre from `S_r(u_tilde)` to `S_a(u_tilde)` for `mu > 0`.
///
/// `u = u_tilde / c` is frozen, so only `(v, w)` evolve. A negative `delta`
/// starts on the other side of `S_r`; that trajectory escapes and the call
/// fails with `NoLanding`.
pub fn fibre_numeric(
    u_tilde: f64,
    params: &ModelParams,
    settings: &FibreSettings,
) -> Result<Fibre> {
    if !(u_tilde > 0.0) {
        return Err(if u_tilde == 0.0 {
            Error::OnIntersection
        } else {
            Error::NegativeUTilde(u_tilde)
        });
    }
    if !(params.mu > 0.0) {
        return Err(Error::NonPositiveParameter("mu"));
    }
    let ModelParams { chi, k, c, mu, .. } = *params;
    let on_sr = branch_point(Branch::Repelling, u_tilde, params)?;
    let dir = unstable_direction(&on_sr, params)?;
    let u = on_sr.u;
    let start = [
        on_sr.v + settings.delta * dir[1],
        on_sr.w + settings.delta * dir[2],
    ];
    let tol = settings.landing_tol;
    let cap = 10.0 * on_sr.w;
    let events = [
        Event::new(
            move |_y, s: &[f64; 2]| s[0].abs().max(s[1].abs()) - tol,
            Direction::Falling,
            true,
        ),
        Event::new(move |_y, s: &[f64; 2]| s[1] - cap, Direction::Rising, true),
    ];
    let traj = integrate(
        |_y, s: &[f64; 2]| {
            Ok([
                (-c * s[0] + k * s[1]) / mu,
                -c * s[1] + chi * s[0] * s[1] / u,
            ])
        },
        0.0,
        start,
        settings.y_max,
        &settings.integrator,
        &events,
    )?;
    if traj.termination != Termination::Event(0) {
        return Err(Error::NoLanding {
            t_max: settings.y_max,
        });
    }
    let samples = traj
        .samples
        .iter()
        .map(|&(y, s)| (y, PhasePoint::new(u, s[0], s[1], u_tilde)))
        .collect();
    Ok(Fibre { samples })
}

/// The concatenated `eps = 0` orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularOrbit {
    pub params: ModelParams,
    /// Reduced flow on `S_r` for `z` in `[z_min, 0]`.
    pub slow_segment: WaveProfile,
    pub jump_z: f64,
    /// Fast fibre in `y`, from `S_r(c u_r)` to `S_a(c u_r)`.
    pub fibre: Fibre,
    pub rest_point: PhasePoint,
}

impl SingularOrbit {
    /// The `(u, w)` trace of the orbit in the slow coordinate.
    pub fn trace(&self, z: f64) -> (f64, f64) {
        if z <= self.jump_z {
            let p = reduced_flow_on_sr(z - self.jump_z, &self.params);
            (p.u, p.w)
        } else {
            (self.rest_point.u, self.rest_point.w)
        }
    }

    /// Samples the trace on the given strictly increasing coordinates.
    pub fn trace_profile(&self, zs: &[f64]) -> Result<WaveProfile> {
        let samples = zs
            .iter()
            .map(|&z| {
                let (u, w) = self.trace(z);
                ProfileSample { z, u, w }
            })
            .collect();
        WaveProfile::new(samples, Construction::Singular)
    }

    /// `S_r` point where the fast jump starts.
    pub fn jump_point(&self) -> PhasePoint {
        reduced_flow_on_sr(0.0, &self.params)
    }
}

/// Assembles the singular orbit with `n_slow` samples on the slow segment.
///
/// The fibre is the closed form (with `beta = chi K`, sampled on `y` in
/// `[-20, 20]`) when `mu = 0`, and computed numerically otherwise.
pub fn assemble_singular_orbit(
    params: &ModelParams,
    z_min: f64,
    n_slow: usize,
) -> Result<SingularOrbit> {
    let params = params.validate()?;
    if !(z_min < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "z_min = {z_min} must be negative"
        )));
    }
    let zs = uniform_grid(z_min, 0.0, n_slow)?;
    let slow = zs
        .iter()
        .map(|&z| {
            let p = reduced_flow_on_sr(z, &params);
            ProfileSample { z, u: p.u, w: p.w }
        })
        .collect();
    let slow_segment = WaveProfile::new(slow, Construction::Singular)?;
    let u_tilde = params.c * params.u_r;
    let fibre = if params.mu > 0.0 {
        fibre_numeric(u_tilde, &params, &FibreSettings::default())?
    } else {
        let beta = params.chi * params.k;
        let samples = uniform_grid(-20.0, 20.0, 401)?
            .into_iter()
            .map(|y| fibre_mu0(y, u_tilde, beta, &params).map(|p| (y, p)))
            .collect::<Result<_>>()?;
        Fibre { samples }
    };
    Ok(SingularOrbit {
        params,
        slow_segment,
        jump_z: 0.0,
        fibre,
        rest_point: branch_point(Branch::Attracting, u_tilde, &params)?,
    })
}
