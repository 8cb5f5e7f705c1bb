//! Method-of-lines simulation of the full Keller-Segel system
//!
//! ```text
//! u_t = D_u u_xx - K w
//! w_t = D_w w_xx - (chi w u_x / u)_x
//! ```
//!
//! on a uniform cell-centred grid with zero-flux ends. Diffusion uses the
//! three-point stencil, the chemotactic flux is upwinded on the face velocity
//! `chi u_x / u`, and time stepping is explicit Euler.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ExactWave, LimitWave};
use crate::model::ModelParams;
use crate::perturbed::fit_line;
use crate::profile::{Construction, ProfileSample, WaveProfile};

/// Relative floor applied to `u`: `u >= U_FLOOR_REL * u_r`.
pub const U_FLOOR_REL: f64 = 1e-10;
/// Safety factor on the explicit stability limits.
pub const CFL_SAFETY: f64 = 0.4;
/// Stand-in for zero diffusivity in the diffusive limit.
pub const MIN_DIFFUSIVITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::InvalidArgument(format!(
                "grid needs x_min < x_max (got [{x_min}, {x_max}])"
            )));
        }
        if n_cells < 16 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 16 cells (got {n_cells})"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }
}

/// Cell values of `u` and `w` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field1D {
    pub grid: Grid1D,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
}

impl Field1D {
    pub fn new(grid: Grid1D, u: Vec<f64>, w: Vec<f64>, t: f64) -> Result<Self> {
        if u.len() != grid.n_cells || w.len() != grid.n_cells {
            return Err(Error::InvalidArgument(format!(
                "field length mismatch: {} cells, {} u values, {} w values",
                grid.n_cells,
                u.len(),
                w.len()
            )));
        }
        Ok(Self { grid, u, w, t })
    }

    /// Total mass `sum(w) dx`.
    pub fn mass(&self) -> f64 {
        self.w.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn max_w(&self) -> f64 {
        self.w.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_profile(&self) -> Result<WaveProfile> {
        let samples = (0..self.grid.n_cells)
            .map(|i| ProfileSample {
                z: self.grid.center(i),
                u: self.u[i],
                w: self.w[i],
            })
            .collect();
        WaveProfile::new(samples, Construction::Pde)
    }
}

pub fn u_floor(params: &ModelParams) -> f64 {
    U_FLOOR_REL * params.u_r
}

/// Chemotactic velocity `chi u_x / u` at each interior face.
pub fn face_velocities(field: &Field1D, params: &ModelParams) -> Vec<f64> {
    let dx = field.grid.dx();
    let floor = u_floor(params);
    field
        .u
        .windows(2)
        .map(|p| {
            let u_face = (0.5 * (p[0] + p[1])).max(floor);
            params.chi * (p[1] - p[0]) / (dx * u_face)
        })
        .collect()
}

/// Upwinded chemotactic flux of `w` at each interior face (`n_cells - 1` values).
pub fn chemotaxis_flux(field: &Field1D, params: &ModelParams) -> Vec<f64> {
    face_velocities(field, params)
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let upwind = if a > 0.0 { field.w[i] } else { field.w[i + 1] };
            a * upwind
        })
        .collect()
}

fn max_speed(velocities: &[f64]) -> f64 {
    velocities.iter().map(|a| a.abs()).fold(0.0, f64::max)
}

/// Largest time step the explicit scheme tolerates:
/// `dt (2 D / dx^2 + max|a| / dx) <= 1`.
pub fn stability_limit(field: &Field1D, params: &ModelParams) -> f64 {
    let dx = field.grid.dx();
    let d = params.d_u().max(params.d_w()).max(MIN_DIFFUSIVITY);
    let a = max_speed(&face_velocities(field, params));
    1.0 / (2.0 * d / (dx * dx) + a / dx)
}

/// Time step used by [`simulate`]:
/// `0.4 min(dx^2 / (2 D), dx / max|a|)`.
pub fn stable_dt(field: &Field1D, params: &ModelParams) -> f64 {
    let dx = field.grid.dx();
    let d = params.d_u().max(params.d_w()).max(MIN_DIFFUSIVITY);
    let a = max_speed(&face_velocities(field, params));
    let diffusive = dx * dx / (2.0 * d);
    let advective = if a > 0.0 { dx / a } else { f64::INFINITY };
    CFL_SAFETY * diffusive.min(advective)
}

fn laplacian(f: &[f64], i: usize, dx2: f64) -> f64 {
    let n = f.len();
    let left = if i == 0 { f[0] } else { f[i - 1] };
    let right = if i + 1 == n { f[n - 1] } else { f[i + 1] };
    (left - 2.0 * f[i] + right) / dx2
}

/// One explicit Euler step without the stability check.
fn advance(field: &Field1D, params: &ModelParams, dt: f64) -> Result<Field1D> {
    let n = field.grid.n_cells;
    let dx = field.grid.dx();
    let dx2 = dx * dx;
    let (d_u, d_w, k) = (params.d_u(), params.d_w(), params.k);
    let flux = chemotaxis_flux(field, params);
    let floor = u_floor(params);
    let mut u = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let f_left = if i == 0 { 0.0 } else { flux[i - 1] };
        let f_right = if i + 1 == n { 0.0 } else { flux[i] };
        let du = d_u * laplacian(&field.u, i, dx2) - k * field.w[i];
        let dw = d_w * laplacian(&field.w, i, dx2) - (f_right - f_left) / dx;
        u.push((field.u[i] + dt * du).max(floor));
        w.push((field.w[i] + dt * dw).max(0.0));
    }
    let t = field.t + dt;
    if u.iter().chain(w.iter()).any(|x| !x.is_finite()) {
        return Err(Error::UnstableStep { t });
    }
    Field1D::new(field.grid, u, w, t)
}

/// Advances `field` by `dt`, rejecting steps beyond the stability limit.
pub fn step(field: &Field1D, params: &ModelParams, dt: f64) -> Result<Field1D> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step {dt} must be positive"
        )));
    }
    let limit = stability_limit(field, params);
    if dt > limit {
        return Err(Error::CflViolation { dt, limit });
    }
    advance(field, params, dt)
}

/// Initial data for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// Closed-form `D_u = 0` wave with `D_w = eps`, front at `x0`.
    Exact { x0: f64 },
    /// Shock-limit profile with the jump at `x0`, ramped over three cells.
    Limit { x0: f64 },
    /// Logistic step in `u` of the given width with `w` proportional to `u`
    /// behind it.
    SmoothStep { x0: f64, width: f64 },
    /// Constant background `(u_star, 0)`.
    Background { u_star: f64 },
}

/// Cell values of an initial condition.
pub fn initialize(
    initial: &InitialCondition,
    grid: Grid1D,
    params: &ModelParams,
) -> Result<Field1D> {
    let params = params.validate()?;
    let xs = grid.centers();
    let floor = u_floor(&params);
    let (u, w): (Vec<f64>, Vec<f64>) = match *initial {
        InitialCondition::Exact { x0 } => {
            let wave = ExactWave::new(&params)?;
            xs.iter()
                .map(|&x| wave.eval(x - x0).map(|(u, w)| (u.max(floor), w)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip()
        }
        InitialCondition::Limit { x0 } => {
            let wave = LimitWave::new(&params);
            let dx = grid.dx();
            let w_left = params.c * params.c * params.u_r / (params.k * params.chi);
            xs.iter()
                .map(|&x| {
                    let (u, _) = wave.eval(x - x0);
                    let ramp = (0.5 - (x - x0) / (3.0 * dx)).clamp(0.0, 1.0);
                    let w = w_left * (params.c * (x - x0) / params.chi).exp() * ramp;
                    (u.max(floor), w)
                })
                .unzip()
        }
        InitialCondition::SmoothStep { x0, width } => {
            if !(width > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "step width {width} must be positive"
                )));
            }
            let ratio = params.c * params.c / (params.k * params.chi);
            xs.iter()
                .map(|&x| {
                    let s = 1.0 / (1.0 + (-(x - x0) / width).exp());
                    let u = (params.u_r * s).max(floor);
                    (u, ratio * u * (1.0 - s))
                })
                .unzip()
        }
        InitialCondition::Background { u_star } => {
            if !(u_star > 0.0) {
                return Err(Error::NonPositiveParameter("u_star"));
            }
            (vec![u_star; grid.n_cells], vec![0.0; grid.n_cells])
        }
    };
    Field1D::new(grid, u, w, 0.0)
}

/// Steps from `initial` to `t_end`, recording the initial field, a snapshot
/// every `snapshot_every` time units, and the final field.
pub fn simulate(
    initial: Field1D,
    params: &ModelParams,
    t_end: f64,
    snapshot_every: f64,
) -> Result<Vec<Field1D>> {
    let params = params.validate()?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_end = {t_end} must be positive"
        )));
    }
    if !(snapshot_every > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "snapshot interval {snapshot_every} must be positive"
        )));
    }
    let t0 = initial.t;
    let mut snapshots = vec![initial.clone()];
    let mut field = initial;
    let mut k = 1usize;
    loop {
        let target = (t0 + k as f64 * snapshot_every).min(t0 + t_end);
        while field.t < target {
            let dt = stable_dt(&field, &params).min(target - field.t);
            field = advance(&field, &params, dt)?;
            if target - field.t < 1e-12 * target.abs().max(1.0) {
                field.t = target;
            }
        }
        snapshots.push(field.clone());
        if target >= t0 + t_end {
            return Ok(snapshots);
        }
        k += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub speed: f64,
    /// Standard error of the fitted slope.
    pub uncertainty: f64,
    /// `(t, x)` of the tracked level crossing in each snapshot.
    pub positions: Vec<(f64, f64)>,
}

/// Position where `u` first rises through `level * u_r`, by linear interpolation.
pub fn front_position(field: &Field1D, level: f64, params: &ModelParams) -> Result<f64> {
    let target = level * params.u_r;
    let g = &field.grid;
    for i in 0..g.n_cells - 1 {
        let (a, b) = (field.u[i], field.u[i + 1]);
        if a < target && b >= target {
            let x = g.center(i) + (target - a) / (b - a) * g.dx();
            let margin = 0.1 * g.length();
            if x < g.x_min + margin || x > g.x_max - margin {
                return Err(Error::FrontLeftDomain { x, t: field.t });
            }
            return Ok(x);
        }
    }
    Err(Error::LevelNotCrossed { level, t: field.t })
}

/// Front speed from a least-squares line through the tracked positions.
pub fn measure_wave_speed(
    snapshots: &[Field1D],
    level: f64,
    params: &ModelParams,
) -> Result<SpeedEstimate> {
    if snapshots.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 snapshots, got {}",
            snapshots.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level {level} must lie in (0, 1)"
        )));
    }
    let positions = snapshots
        .iter()
        .map(|f| front_position(f, level, params).map(|x| (f.t, x)))
        .collect::<Result<Vec<_>>>()?;
    let ts: Vec<f64> = positions.iter().map(|p| p.0).collect();
    let xs: Vec<f64> = positions.iter().map(|p| p.1).collect();
    let (speed, _, uncertainty) = fit_line(&ts, &xs)?;
    Ok(SpeedEstimate {
        speed,
        uncertainty,
        positions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileComparison {
    /// Shift `s` such that the snapshot at `x` is compared with the reference at `x - s`.
    pub shift: f64,
    pub l2_u: f64,
    pub l2_w: f64,
    pub sup_u: f64,
    pub sup_w: f64,
}

/// Reference value at `z`, held constant beyond its sampled range.
fn reference_at(reference: &WaveProfile, z: f64) -> (f64, f64) {
    let (lo, hi) = reference.z_range();
    let s = reference.samples();
    if z <= lo {
        (s[0].u, s[0].w)
    } else if z >= hi {
        let last = s[s.len() - 1];
        (last.u, last.w)
    } else {
        reference.interpolate(z).expect("inside range")
    }
}

fn mismatch(snapshot: &Field1D, reference: &WaveProfile, shift: f64) -> f64 {
    (0..snapshot.grid.n_cells)
        .map(|i| {
            let (u, w) = reference_at(reference, snapshot.grid.center(i) - shift);
            (snapshot.u[i] - u).powi(2) + (snapshot.w[i] - w).powi(2)
        })
        .sum()
}

/// Aligns `reference` to `snapshot` by the shift minimizing the L2 distance
/// and reports the aligned errors.
///
/// Shifts are searched over every placement where the reference range
/// overlaps the grid (or within `search` when given), first on a coarse scan
/// and then by golden-section refinement.
pub fn compare_profile(
    snapshot: &Field1D,
    reference: &WaveProfile,
    search: Option<(f64, f64)>,
) -> Result<ProfileComparison> {
    let g = &snapshot.grid;
    let (z_lo, z_hi) = reference.z_range();
    let (mut s_lo, mut s_hi) = (g.x_min - z_hi, g.x_max - z_lo);
    if let Some((a, b)) = search {
        s_lo = s_lo.max(a);
        s_hi = s_hi.min(b);
    }
    if !(s_lo <= s_hi) {
        return Err(Error::NoOverlap);
    }

    let f = |s: f64| mismatch(snapshot, reference, s);
    let n_scan = 400;
    let h = (s_hi - s_lo) / n_scan as f64;
    let mut best = (s_lo, f(s_lo));
    for i in 1..=n_scan {
        let s = s_lo + i as f64 * h;
        let v = f(s);
        if v < best.1 {
            best = (s, v);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(s_lo), (best.0 + h).min(s_hi));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-10 * (1.0 + best.0.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let shift = if f(mid) <= best.1 { mid } else { best.0 };

    let dx = g.dx();
    let (mut l2_u, mut l2_w, mut sup_u, mut sup_w) = (0.0, 0.0, 0f64, 0f64);
    for i in 0..g.n_cells {
        let (u, w) = reference_at(reference, g.center(i) - shift);
        let (eu, ew) = ((snapshot.u[i] - u).abs(), (snapshot.w[i] - w).abs());
        l2_u += eu * eu * dx;
        l2_w += ew * ew * dx;
        sup_u = sup_u.max(eu);
        sup_w = sup_w.max(ew);
    }
    Ok(ProfileComparison {
        shift,
        l2_u: l2_u.sqrt(),
        l2_w: l2_w.sqrt(),
        sup_u,
        sup_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fig(eps: f64) -> ModelParams {
        ModelParams::reference().with_eps(eps)
    }

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(-10.0, 10.0, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(0.0, 1.0, 15).is_err());
        assert!(Grid1D::new(1.0, 0.0, 100).is_err());
        let g = Grid1D::new(-30.0, 30.0, 3000).unwrap();
        assert_abs_diff_eq!(g.dx(), 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(g.center(0), -29.99, epsilon = 1e-12);
    }

    #[test]
    fn flux_vanishes_without_gradient_or_mass() {
        let p = fig(0.1);
        let g = grid(64);
        let flat =
            Field1D::new(g, vec![0.7; 64], (0..64).map(|i| i as f64).collect(), 0.0).unwrap();
        assert!(chemotaxis_flux(&flat, &p).iter().all(|&f| f == 0.0));
        let empty = Field1D::new(
            g,
            g.centers().iter().map(|x| x.exp()).collect(),
            vec![0.0; 64],
            0.0,
        )
        .unwrap();
        assert!(chemotaxis_flux(&empty, &p).iter().all(|&f| f == 0.0));
    }

    #[test]
    fn flux_on_exponential_is_second_order() {
        let p = fig(0.1);
        let err = |n: usize| {
            let g = grid(n);
            let u = g
                .centers()
                .iter()
                .map(|x| (p.c * x / p.chi).exp())
                .collect();
            let f = Field1D::new(g, u, vec![1.5; n], 0.0).unwrap();
            chemotaxis_flux(&f, &p)
                .iter()
                .map(|fl| (fl - p.c * 1.5).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 < 1e-2);
        assert_abs_diff_eq!((e1 / e2).log2(), 2.0, epsilon = 0.05);
    }

    #[test]
    fn background_is_a_bitwise_fixed_point() {
        let p = fig(0.05);
        for u_star in [1.0, 0.37, 123.0] {
            let f = initialize(&InitialCondition::Background { u_star }, grid(64), &p).unwrap();
            let next = step(&f, &p, stable_dt(&f, &p)).unwrap();
            assert_eq!(next.u, f.u);
            assert_eq!(next.w, f.w);
        }
    }

    #[test]
    fn single_step_from_exact_wave_is_small() {
        let p = fig(0.25).with_mu(0.0);
        let f = initialize(&InitialCondition::Exact { x0: 0.0 }, grid(400), &p).unwrap();
        let dt = stable_dt(&f, &p);
        let next = step(&f, &p, dt).unwrap();
        let change =
            f.w.iter()
                .zip(&next.w)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
        // The wave moves by c dt; the change is bounded by that translation.
        assert!(change < 10.0 * p.c * dt * f.max_w(), "change {change}");
        assert!(next.w.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn oversized_step_is_rejected() {
        let p = fig(0.5);
        let f = initialize(
            &InitialCondition::SmoothStep {
                x0: 0.0,
                width: 0.5,
            },
            grid(200),
            &p,
        )
        .unwrap();
        let limit = stability_limit(&f, &p);
        assert!(matches!(
            step(&f, &p, 2.0 * limit),
            Err(Error::CflViolation { .. })
        ));
        assert!(step(&f, &p, stable_dt(&f, &p)).is_ok());
    }

    #[test]
    fn unchecked_oversized_steps_go_unstable() {
        let p = fig(0.5).with_mu(1.0);
        let g = grid(200);
        let u: Vec<f64> = (0..200)
            .map(|i| 1.0 + 0.1 * if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let mut f = Field1D::new(g, u, vec![0.0; 200], 0.0).unwrap();
        let dt = 3.0 * stability_limit(&f, &p);
        let mut outcome = Ok(());
        for _ in 0..2000 {
            match advance(&f, &p, dt) {
                Ok(next) => f = next,
                Err(e) => {
                    outcome = Err(e);
                    break;
                }
            }
        }
        assert!(matches!(outcome, Err(Error::UnstableStep { .. })));
    }

    #[test]
    fn interior_flux_conserves_mass() {
        let p = fig(0.2);
        let mut f = initialize(
            &InitialCondition::SmoothStep {
                x0: 0.0,
                width: 1.0,
            },
            grid(256),
            &p,
        )
        .unwrap();
        for _ in 0..200 {
            let m0 = f.mass();
            f = step(&f, &p, stable_dt(&f, &p)).unwrap();
            assert!(((f.mass() - m0) / m0).abs() < 1e-12);
            assert!(f.w.iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn u_decreases_where_cells_are_present_without_u_diffusion() {
        let p = fig(0.2).with_mu(0.0);
        let mut f = initialize(
            &InitialCondition::SmoothStep {
                x0: 0.0,
                width: 1.0,
            },
            grid(128),
            &p,
        )
        .unwrap();
        for _ in 0..100 {
            let next = step(&f, &p, stable_dt(&f, &p)).unwrap();
            for i in 0..128 {
                if f.w[i] > 0.0 {
                    assert!(next.u[i] <= f.u[i]);
                }
            }
            f = next;
        }
    }

    #[test]
    fn limit_initialization_ramps_over_three_cells() {
        let p = fig(0.05);
        let g = Grid1D::new(-5.0, 5.0, 100).unwrap();
        let f = initialize(&InitialCondition::Limit { x0: 0.0 }, g, &p).unwrap();
        let partial =
            f.w.iter()
                .zip(g.centers())
                .filter(|(&w, x)| {
                    let full = 2.0 * (p.c * x / p.chi).exp();
                    w > 0.0 && (w - full).abs() > 1e-12
                })
                .count();
        assert!((1..=3).contains(&partial));
        assert_eq!(*f.w.last().unwrap(), 0.0);
    }

    #[test]
    fn background_simulation_stays_put() {
        let p = fig(0.05);
        let f = initialize(&InitialCondition::Background { u_star: 1.0 }, grid(64), &p).unwrap();
        let snaps = simulate(f.clone(), &p, 1.0, 0.25).unwrap();
        assert_eq!(snaps.len(), 5);
        for s in &snaps {
            assert_eq!(s.u, f.u);
            assert_eq!(s.w, f.w);
        }
        assert_eq!(snaps.last().unwrap().t, 1.0);
    }

    fn translate(n_snap: usize, speed: f64) -> (ModelParams, Vec<Field1D>) {
        let p = fig(0.25).with_mu(0.0);
        let g = Grid1D::new(-20.0, 20.0, 800).unwrap();
        let wave = ExactWave::new(&p).unwrap();
        let snaps = (0..n_snap)
            .map(|k| {
                let t = k as f64 * 0.5;
                let (u, w) = g
                    .centers()
                    .iter()
                    .map(|&x| wave.eval(x + 5.0 - speed * t).unwrap())
                    .unzip();
                Field1D::new(g, u, w, t).unwrap()
            })
            .collect();
        (p, snaps)
    }

    #[test]
    fn speed_of_a_constructed_translate() {
        let (p, snaps) = translate(6, 2.0);
        let est = measure_wave_speed(&snaps, 0.5, &p).unwrap();
        assert_abs_diff_eq!(est.speed, 2.0, epsilon = 1e-3);
        assert!(est.uncertainty < 1e-3);
        assert!(measure_wave_speed(&snaps[..2], 0.5, &p).is_err());
    }

    #[test]
    fn front_near_the_boundary_is_flagged() {
        let (p, snaps) = translate(3, 2.0);
        // Front inside the right 10% margin.
        let g = snaps[0].grid;
        let u = g
            .centers()
            .iter()
            .map(|x| 1.0 / (1.0 + (-(x - 18.0) / 0.2).exp()))
            .collect();
        let shifted = Field1D::new(g, u, vec![0.0; 800], 0.0).unwrap();
        assert!(matches!(
            front_position(&shifted, 0.99, &p),
            Err(Error::FrontLeftDomain { .. })
        ));
        let flat = Field1D::new(snaps[0].grid, vec![1.0; 800], vec![0.0; 800], 0.0).unwrap();
        assert!(matches!(
            front_position(&flat, 0.5, &p),
            Err(Error::LevelNotCrossed { .. })
        ));
    }

    #[test]
    fn comparing_a_snapshot_with_itself() {
        let (_, snaps) = translate(1, 0.0);
        let prof = snaps[0].to_profile().unwrap();
        let cmp = compare_profile(&snaps[0], &prof, None).unwrap();
        assert_abs_diff_eq!(cmp.shift, 0.0, epsilon = 1e-6);
        assert!(cmp.sup_u < 1e-6 && cmp.sup_w < 1e-6);
    }

    #[test]
    fn comparison_recovers_a_known_shift() {
        let (p, snaps) = translate(1, 0.0);
        let reference =
            crate::exact::sample_profile(Construction::Exact, -15.0, 15.0, 6001, &p).unwrap();
        let cmp = compare_profile(&snaps[0], &reference, None).unwrap();
        assert_abs_diff_eq!(cmp.shift, -5.0, epsilon = 1e-4);
        assert!(cmp.sup_w < 1e-3);
        assert_eq!(
            compare_profile(&snaps[0], &reference, Some((100.0, 200.0))),
            Err(Error::NoOverlap)
        );
    }
}
