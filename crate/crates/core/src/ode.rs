//! Adaptive Dormand-Prince 5(4) integrator with dense output and event location.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerances {
    pub const fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::new(1e-10, 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub tol: Tolerances,
    pub max_steps: usize,
    /// Initial step magnitude; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    /// Upper bound on the step magnitude.
    pub max_step: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            max_steps: 10_000_000,
            initial_step: None,
            max_step: f64::INFINITY,
        }
    }
}

/// Which sign changes of an event function count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

impl Direction {
    fn accepts(self, g0: f64, g1: f64) -> bool {
        let rising = g0 < 0.0 && g1 >= 0.0;
        let falling = g0 > 0.0 && g1 <= 0.0;
        match self {
            Direction::Rising => rising,
            Direction::Falling => falling,
            Direction::Either => rising || falling,
        }
    }
}

/// Tolerance on `|g|` at a located event.
pub const EVENT_TOLERANCE: f64 = 1e-10;

type EventFn<'a, const N: usize> = Box<dyn Fn(f64, &[f64; N]) -> f64 + Send + Sync + 'a>;

/// A scalar function of `(t, y)` whose sign changes are located.
pub struct Event<'a, const N: usize> {
    func: EventFn<'a, N>,
    pub direction: Direction,
    pub terminal: bool,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(
        func: impl Fn(f64, &[f64; N]) -> f64 + Send + Sync + 'a,
        direction: Direction,
        terminal: bool,
    ) -> Self {
        Self {
            func: Box::new(func),
            direction,
            terminal,
        }
    }

    pub fn eval(&self, t: f64, y: &[f64; N]) -> f64 {
        (self.func)(t, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    pub index: usize,
    pub t: f64,
    pub y: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// A terminal event fired.
    Event(usize),
    /// The end of the requested span was reached.
    SpanEnd,
}

/// Accepted steps plus located event points.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub samples: Vec<(f64, [f64; N])>,
    pub events: Vec<EventHit<N>>,
    pub termination: Termination,
    pub steps: usize,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        *self
            .samples
            .last()
            .expect("trajectory holds the start point")
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Fourth-order continuous extension over one accepted step.
struct DenseStep<const N: usize> {
    t0: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.r;
        std::array::from_fn(|i| {
            r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])))
        })
    }
}

fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|x| x.is_finite())
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end` (either direction).
///
/// `rhs` may fail; its error aborts the integration. Terminal events stop the
/// integration at the located crossing, which becomes the last sample.
pub fn integrate<const N: usize, F>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    settings: &IntegratorSettings,
    events: &[Event<'_, N>],
) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    if !(t0.is_finite() && t_end.is_finite()) || t0 == t_end {
        return Err(Error::InvalidArgument(format!(
            "integration span [{t0}, {t_end}] must be finite and non-empty"
        )));
    }
    if !all_finite(&y0) {
        return Err(Error::InvalidArgument("initial state is not finite".into()));
    }
    let dir = (t_end - t0).signum();
    let tol = settings.tol;
    let scale =
        |a: &[f64; N], b: &[f64; N], i: usize| tol.abs + tol.rel * a[i].abs().max(b[i].abs());
    let err_norm = |e: &[f64; N], a: &[f64; N], b: &[f64; N]| -> f64 {
        let s: f64 = (0..N).map(|i| (e[i] / scale(a, b, i)).powi(2)).sum();
        (s / N as f64).sqrt()
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;
    let span = (t_end - t0).abs();
    let max_step = settings.max_step.min(span);

    let mut h = match settings.initial_step {
        Some(h) => h.abs().min(max_step),
        None => {
            // Hairer's starting-step heuristic.
            let d0 = err_norm(&y, &y, &y).max(0.0);
            let d1 = err_norm(&k1, &y, &y);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            };
            let h0 = h0.min(max_step);
            let y1 = combo(&y, dir * h0, &[(1.0, &k1)]);
            let k2 = rhs(t + dir * h0, &y1)?;
            let diff: [f64; N] = std::array::from_fn(|i| k2[i] - k1[i]);
            let d2 = err_norm(&diff, &y, &y) / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            };
            (100.0 * h0).min(h1).min(max_step)
        }
    };

    let mut samples = vec![(t, y)];
    let mut hits = Vec::new();
    let mut g_prev: Vec<f64> = events.iter().map(|e| e.eval(t, &y)).collect();
    let mut steps = 0usize;
    let mut reject_streak = 0usize;

    loop {
        if steps >= settings.max_steps {
            return Err(Error::MaxStepsExceeded(settings.max_steps));
        }
        let remaining = (t_end - t) * dir;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h <= 1e-14 * t.abs().max(1.0) && !last {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let hs = dir * h;

        let k2 = rhs(t + C2 * hs, &combo(&y, hs, &[(A21, &k1)]))?;
        let k3 = rhs(t + C3 * hs, &combo(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = rhs(
            t + C4 * hs,
            &combo(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        )?;
        let k5 = rhs(
            t + C5 * hs,
            &combo(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = rhs(
            t + hs,
            &combo(
                &y,
                hs,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        )?;
        let y_new = combo(
            &y,
            hs,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let t_new = if last { t_end } else { t + hs };
        let k7 = rhs(t_new, &y_new)?;
        steps += 1;

        let err_vec: [f64; N] = std::array::from_fn(|i| {
            hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let err = if all_finite(&y_new) {
            err_norm(&err_vec, &y, &y_new)
        } else {
            f64::INFINITY
        };

        if !(err <= 1.0) {
            reject_streak += 1;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= fac;
            if reject_streak > 100 || h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t, h });
            }
            continue;
        }
        reject_streak = 0;

        let dense = DenseStep {
            t0: t,
            h: hs,
            r: {
                let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
                let bspl: [f64; N] = std::array::from_fn(|i| hs * k1[i] - ydiff[i]);
                [
                    y,
                    ydiff,
                    bspl,
                    std::array::from_fn(|i| ydiff[i] - hs * k7[i] - bspl[i]),
                    std::array::from_fn(|i| {
                        hs * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i])
                    }),
                ]
            },
        };

        // Event detection over the accepted step.
        let g_new: Vec<f64> = events.iter().map(|e| e.eval(t_new, &y_new)).collect();
        let mut first: Option<EventHit<N>> = None;
        let mut step_hits = Vec::new();
        for (idx, ev) in events.iter().enumerate() {
            if !ev.direction.accepts(g_prev[idx], g_new[idx]) {
                continue;
            }
            let hit = locate(ev, &dense, t, t_new, g_prev[idx], g_new[idx], idx)?;
            if ev.terminal {
                let earlier = first.is_none_or(|f| (hit.t - f.t) * dir < 0.0);
                if earlier {
                    first = Some(hit);
                }
            }
            step_hits.push(hit);
        }
        if let Some(stop) = first {
            step_hits.retain(|h| (h.t - stop.t) * dir <= 0.0);
        }
        step_hits.sort_by(|a, b| ((a.t - b.t) * dir).total_cmp(&0.0));
        for hit in &step_hits {
            if hit.t != t && hit.t != t_new {
                samples.push((hit.t, hit.y));
            }
        }
        hits.extend(step_hits.iter().copied());

        if let Some(stop) = first {
            if stop.t == t_new {
                samples.push((t_new, y_new));
            }
            return Ok(Trajectory {
                samples,
                events: hits,
                termination: Termination::Event(stop.index),
                steps,
            });
        }

        samples.push((t_new, y_new));
        t = t_new;
        y = y_new;
        k1 = k7;
        g_prev = g_new;

        if last {
            return Ok(Trajectory {
                samples,
                events: hits,
                termination: Termination::SpanEnd,
                steps,
            });
        }

        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * fac).min(max_step);
    }
}

/// Locates a sign change of `ev` on the dense interpolant with the Illinois
/// variant of regula falsi.
fn locate<const N: usize>(
    ev: &Event<'_, N>,
    dense: &DenseStep<N>,
    ta: f64,
    tb: f64,
    ga: f64,
    gb: f64,
    index: usize,
) -> Result<EventHit<N>> {
    if gb == 0.0 || gb.abs() <= EVENT_TOLERANCE && ga.abs() > EVENT_TOLERANCE {
        let y = dense.eval(tb);
        return Ok(EventHit { index, t: tb, y });
    }
    let (mut a, mut b, mut fa, mut fb) = (ta, tb, ga, gb);
    let mut side = 0i8;
    for _ in 0..200 {
        let t = if fa == fb {
            0.5 * (a + b)
        } else {
            (a * fb - b * fa) / (fb - fa)
        };
        let y = dense.eval(t);
        let g = ev.eval(t, &y);
        if g.abs() <= EVENT_TOLERANCE || a == b || t == a || t == b {
            return Ok(EventHit { index, t, y });
        }
        if (g > 0.0) == (fb > 0.0) {
            b = t;
            fb = g;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = t;
            fa = g;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::EventNotBracketed { t0: ta, t1: tb })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn decay(c: f64) -> impl FnMut(f64, &[f64; 1]) -> Result<[f64; 1]> {
        move |_t, y| Ok([-c * y[0]])
    }

    #[test]
    fn exponential_decay() {
        let traj = integrate(
            decay(2.0),
            0.0,
            [1.0],
            1.0,
            &IntegratorSettings::default(),
            &[],
        )
        .unwrap();
        let (t, y) = traj.last();
        assert_eq!(t, 1.0);
        assert_abs_diff_eq!(y[0], (-2f64).exp(), epsilon = 1e-9);
        assert_eq!(traj.termination, Termination::SpanEnd);
    }

    #[test]
    fn backward_integration() {
        let traj = integrate(
            decay(2.0),
            1.0,
            [(-2f64).exp()],
            0.0,
            &IntegratorSettings::default(),
            &[],
        )
        .unwrap();
        assert_abs_diff_eq!(traj.last().1[0], 1.0, epsilon = 1e-9);
        assert!(traj.samples.windows(2).all(|p| p[1].0 < p[0].0));
    }

    #[test]
    fn error_shrinks_with_tolerance() {
        let err = |rel: f64| {
            let s = IntegratorSettings {
                tol: Tolerances::new(rel, rel * 1e-2),
                ..Default::default()
            };
            let y = integrate(decay(2.0), 0.0, [1.0], 3.0, &s, &[])
                .unwrap()
                .last()
                .1[0];
            (y - (-6f64).exp()).abs()
        };
        let (coarse, fine) = (err(1e-5), err(1e-7));
        assert!(coarse / fine >= 10.0, "{coarse} vs {fine}");
    }

    #[test]
    fn oscillator_events_are_located() {
        // x'' = -x: zeros of x at t = pi/2 + k pi.
        let events = [Event::new(
            |_t, y: &[f64; 2]| y[0],
            Direction::Either,
            false,
        )];
        let traj = integrate(
            |_t, y: &[f64; 2]| Ok([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            10.0,
            &IntegratorSettings::default(),
            &events,
        )
        .unwrap();
        assert_eq!(traj.events.len(), 3);
        for (k, hit) in traj.events.iter().enumerate() {
            let expect = std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI;
            assert_abs_diff_eq!(hit.t, expect, epsilon = 1e-8);
            assert!(hit.y[0].abs() <= EVENT_TOLERANCE);
        }
    }

    #[test]
    fn terminal_event_stops_and_respects_direction() {
        let events = [Event::new(|_t, y: &[f64; 2]| y[0], Direction::Rising, true)];
        let traj = integrate(
            |_t, y: &[f64; 2]| Ok([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            10.0,
            &IntegratorSettings::default(),
            &events,
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::Event(0));
        let (t, y) = traj.last();
        assert_abs_diff_eq!(t, 1.5 * std::f64::consts::PI, epsilon = 1e-8);
        assert!(y[0].abs() <= EVENT_TOLERANCE);
    }

    #[test]
    fn step_budget_is_enforced() {
        let s = IntegratorSettings {
            max_steps: 3,
            ..Default::default()
        };
        let err = integrate(decay(50.0), 0.0, [1.0], 10.0, &s, &[]).unwrap_err();
        assert_eq!(err, Error::MaxStepsExceeded(3));
    }

    #[test]
    fn finite_time_blowup_underflows() {
        // y' = y^2 from y(0) = 1 blows up at t = 1.
        let err = integrate(
            |_t, y: &[f64; 1]| Ok([y[0] * y[0]]),
            0.0,
            [1.0],
            2.0,
            &IntegratorSettings::default(),
            &[],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::StepSizeUnderflow { .. } | Error::MaxStepsExceeded(_)
        ));
    }

    #[test]
    fn rhs_errors_propagate() {
        let err = integrate(
            |_t, _y: &[f64; 1]| Err(Error::SingularState { u: 0.0 }),
            0.0,
            [1.0],
            1.0,
            &IntegratorSettings::default(),
            &[],
        )
        .unwrap_err();
        assert_eq!(err, Error::SingularState { u: 0.0 });
    }
}
