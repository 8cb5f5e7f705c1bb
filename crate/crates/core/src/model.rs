//! Model parameters and the right-hand sides of the travelling-wave systems.
//!
//! The PDE is
//!
//! ```text
//! u_t = D_u u_xx - K w
//! w_t = D_w w_xx - (chi w u_x / u)_x
//! ```
//!
//! with `D_u = mu * eps` and `D_w = eps`. In the comoving frame `z = x - c t`
//! and with the slow variable `u_tilde = mu eps u_z + c u` the wave equations
//! become a four-dimensional slow system in `z`, or equivalently a fast system
//! in `y = z / eps`.

use nalgebra::{Complex, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Left end state of every wave: the attractant is fully consumed at `z -> -inf`.
pub const U_LEFT: f64 = 0.0;

/// States with `u` at or below this value are treated as the singular point `u = 0`.
pub const SINGULAR_U_THRESHOLD: f64 = 1e-300;

/// Value of the auxiliary slow variables `v_tilde` and `w_tilde`.
///
/// Both are first integrals of the slow system. Their fluxes vanish at
/// `z -> +-inf` on any front that satisfies the far-field conditions, so they
/// are zero on every wave.
pub const AUX_SLOW_CONSTANT: f64 = 0.0;

/// Physical and perturbation parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Chemotactic sensitivity.
    pub chi: f64,
    /// Consumption rate of the attractant.
    pub k: f64,
    /// Wave speed.
    pub c: f64,
    /// Right end state of the attractant.
    pub u_r: f64,
    /// Integration constant of the closed-form wave (a horizontal shift).
    pub a: f64,
    /// Diffusivity ratio, `D_u = mu * eps`.
    pub mu: f64,
    /// Perturbation parameter, `D_w = eps`.
    pub eps: f64,
}

impl ModelParams {
    /// Parameter set used for the classical shock-forming figure:
    /// `chi = 2, K = 1, c = 2, A = 4, u_r = 1`, with `mu = 1` and `eps = 0.1`.
    pub const fn reference() -> Self {
        Self {
            chi: 2.0,
            k: 1.0,
            c: 2.0,
            u_r: 1.0,
            a: 4.0,
            mu: 1.0,
            eps: 0.1,
        }
    }

    pub fn with_eps(self, eps: f64) -> Self {
        Self { eps, ..self }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn d_u(&self) -> f64 {
        self.mu * self.eps
    }

    pub fn d_w(&self) -> f64 {
        self.eps
    }

    /// Checks the sign constraints on every field.
    pub fn validate(self) -> Result<Self> {
        let positive = [
            ("chi", self.chi),
            ("K", self.k),
            ("c", self.c),
            ("u_r", self.u_r),
            ("A", self.a),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveParameter(name));
            }
        }
        for (name, value) in [("mu", self.mu), ("eps", self.eps)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::NegativeParameter(name));
            }
        }
        Ok(self)
    }

    /// Like [`validate`](Self::validate), and additionally requires `0 < D_w < chi`
    /// as needed by the closed-form wave.
    pub fn validate_exact(self) -> Result<Self> {
        let p = self.validate()?;
        if p.d_w() == 0.0 {
            return Err(Error::DiffusionZero);
        }
        if p.d_w() >= p.chi {
            return Err(Error::DiffusionExceedsChi {
                d_w: p.d_w(),
                chi: p.chi,
            });
        }
        Ok(p)
    }
}

/// A point `(u, v, w, u_tilde)` of the slow/fast phase space, where `v = u_z`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub u_tilde: f64,
}

impl PhasePoint {
    pub const ORIGIN: Self = Self::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(u: f64, v: f64, w: f64, u_tilde: f64) -> Self {
        Self { u, v, w, u_tilde }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.u, self.v, self.w, self.u_tilde]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_regular(u: f64) -> Result<()> {
    if u.is_nan() || u <= SINGULAR_U_THRESHOLD {
        Err(Error::SingularState { u })
    } else {
        Ok(())
    }
}

fn check_mu(params: &ModelParams) -> Result<()> {
    if params.mu > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter("mu"))
    }
}

/// Fast system in `y = z / eps`:
///
/// ```text
/// mu u_y       = u_tilde - c u
/// mu v_y       = -c v + K w
///    w_y       = -c w + chi v w / u
///    u_tilde_y = eps K w
/// ```
pub fn fast_rhs(state: &PhasePoint, params: &ModelParams) -> Result<PhasePoint> {
    check_regular(state.u)?;
    check_mu(params)?;
    let ModelParams {
        chi, k, c, mu, eps, ..
    } = *params;
    let PhasePoint { u, v, w, u_tilde } = *state;
    Ok(PhasePoint::new(
        (u_tilde - c * u) / mu,
        (-c * v + k * w) / mu,
        -c * w + chi * v * w / u,
        eps * k * w,
    ))
}

/// The balance-law system in the slow coordinate `z`, with the auxiliary slow
/// variables `v_tilde` and `w_tilde` kept as free constants.
///
/// Returns `(u_z, v_z, w_z, u_tilde_z)`; the equations for `v_tilde` and `w_tilde`
/// themselves are trivial (`v_tilde_z = w_tilde_z = 0`). Requires `mu, eps > 0`.
pub fn balance_law_rhs(
    state: &PhasePoint,
    v_tilde: f64,
    w_tilde: f64,
    params: &ModelParams,
) -> Result<PhasePoint> {
    check_regular(state.u)?;
    check_mu(params)?;
    if params.eps <= 0.0 {
        return Err(Error::NonPositiveParameter("eps"));
    }
    let ModelParams {
        chi, k, c, mu, eps, ..
    } = *params;
    let PhasePoint { u, v, w, u_tilde } = *state;
    Ok(PhasePoint::new(
        (u_tilde - c * u) / (mu * eps),
        (v_tilde - c * v + k * w) / (mu * eps),
        (w_tilde - c * w + chi * v * w / u) / eps,
        k * w,
    ))
}

/// The four-dimensional slow system in `z`.
pub fn slow_rhs(state: &PhasePoint, params: &ModelParams) -> Result<PhasePoint> {
    balance_law_rhs(state, AUX_SLOW_CONSTANT, AUX_SLOW_CONSTANT, params)
}

/// Jacobian of the layer problem with respect to `(u, v, w)`, `u_tilde` frozen.
pub fn layer_jacobian(state: &PhasePoint, params: &ModelParams) -> Result<Matrix3<f64>> {
    check_regular(state.u)?;
    check_mu(params)?;
    let ModelParams { chi, k, c, mu, .. } = *params;
    let PhasePoint { u, v, w, .. } = *state;
    #[rustfmt::skip]
    let jac = Matrix3::new(
        -c / mu,               0.0,          0.0,
        0.0,                   -c / mu,      k / mu,
        -chi * v * w / (u * u), chi * w / u, -c + chi * v / u,
    );
    Ok(jac)
}

/// Eigenvalues of a 3x3 real matrix, sorted by descending real part.
pub fn eigenvalues3(m: &Matrix3<f64>) -> [Complex<f64>; 3] {
    let ev = m.complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2]];
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fig() -> ModelParams {
        ModelParams::reference()
    }

    #[test]
    fn reference_parameters_validate() {
        assert_eq!(fig().validate(), Ok(fig()));
        assert!(fig().validate_exact().is_ok());
    }

    #[test]
    fn zero_chi_is_rejected() {
        let p = ModelParams { chi: 0.0, ..fig() };
        assert_eq!(p.validate(), Err(Error::NonPositiveParameter("chi")));
    }

    #[test]
    fn diffusion_above_chi_is_rejected_for_exact_waves() {
        let p = fig().with_eps(2.5);
        assert!(p.validate().is_ok());
        assert_eq!(
            p.validate_exact(),
            Err(Error::DiffusionExceedsChi { d_w: 2.5, chi: 2.0 })
        );
        assert_eq!(
            fig().with_eps(0.0).validate_exact(),
            Err(Error::DiffusionZero)
        );
    }

    #[test]
    fn negative_mu_is_rejected() {
        let p = fig().with_mu(-1.0);
        assert_eq!(p.validate(), Err(Error::NegativeParameter("mu")));
    }

    #[test]
    fn fast_rhs_hand_values() {
        let p = fig();
        let on_sa = fast_rhs(&PhasePoint::new(1.0, 0.0, 0.0, 2.0), &p).unwrap();
        assert_eq!(on_sa, PhasePoint::ORIGIN);

        let on_sr = fast_rhs(&PhasePoint::new(1.0, 1.0, 2.0, 2.0), &p).unwrap();
        assert_abs_diff_eq!(on_sr.u, 0.0);
        assert_abs_diff_eq!(on_sr.v, 0.0);
        assert_abs_diff_eq!(on_sr.w, 0.0);
        assert_abs_diff_eq!(on_sr.u_tilde, 0.2, epsilon = 1e-15);

        let off = fast_rhs(&PhasePoint::new(1.0, 0.0, 1.0, 2.0), &p).unwrap();
        assert_abs_diff_eq!(off.u, 0.0);
        assert_abs_diff_eq!(off.v, 1.0);
        assert_abs_diff_eq!(off.w, -2.0);
        assert_abs_diff_eq!(off.u_tilde, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn singular_state_is_an_error() {
        let p = fig();
        for u in [0.0, -1.0, 1e-301, f64::NAN] {
            let err = fast_rhs(&PhasePoint::new(u, 0.0, 1.0, 1.0), &p).unwrap_err();
            assert!(matches!(err, Error::SingularState { .. }));
        }
        assert!(layer_jacobian(&PhasePoint::new(0.0, 0.0, 0.0, 0.0), &p).is_err());
        assert!(fast_rhs(&PhasePoint::new(1e-299, 0.0, 0.0, 0.0), &p).is_ok());
    }

    #[test]
    fn fast_rhs_requires_positive_mu() {
        let p = fig().with_mu(0.0);
        let err = fast_rhs(&PhasePoint::new(1.0, 0.0, 0.0, 2.0), &p).unwrap_err();
        assert_eq!(err, Error::NonPositiveParameter("mu"));
    }

    #[test]
    fn slow_system_is_fast_system_rescaled() {
        let p = fig();
        let s = PhasePoint::new(0.7, 0.3, 1.1, 1.9);
        let slow = slow_rhs(&s, &p).unwrap().to_array();
        let fast = fast_rhs(&s, &p).unwrap().to_array();
        for i in 0..4 {
            assert_abs_diff_eq!(slow[i], fast[i] / p.eps, epsilon = 1e-12);
        }
    }

    #[test]
    fn vanishing_aux_constants_reproduce_slow_system() {
        let p = fig();
        let s = PhasePoint::new(0.4, -0.2, 0.9, 1.3);
        let six = balance_law_rhs(&s, 0.0, 0.0, &p).unwrap();
        // Slow system written out term by term.
        let expected = PhasePoint::new(
            (s.u_tilde - p.c * s.u) / (p.mu * p.eps),
            (-p.c * s.v + p.k * s.w) / (p.mu * p.eps),
            (-p.c * s.w + p.chi * s.v * s.w / s.u) / p.eps,
            p.k * s.w,
        );
        assert_eq!(six, expected);
        assert_eq!(slow_rhs(&s, &p).unwrap(), expected);
        // Nonzero constants do change the flow.
        let shifted = balance_law_rhs(&s, 0.1, 0.0, &p).unwrap();
        assert!((shifted.v - expected.v).abs() > 0.1);
    }

    #[test]
    fn jacobian_spectra_at_reference_points() {
        let p = fig();
        let sa = eigenvalues3(&layer_jacobian(&PhasePoint::new(1.0, 0.0, 0.0, 2.0), &p).unwrap());
        for ev in sa {
            assert_abs_diff_eq!(ev.re, -2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ev.im, 0.0, epsilon = 1e-12);
        }
        let sr = eigenvalues3(&layer_jacobian(&PhasePoint::new(1.0, 1.0, 2.0, 2.0), &p).unwrap());
        let root5 = 5f64.sqrt();
        assert_abs_diff_eq!(sr[0].re, -1.0 + root5, epsilon = 1e-12);
        assert_abs_diff_eq!(sr[1].re, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sr[2].re, -1.0 - root5, epsilon = 1e-12);

        // Doubling u_tilde along the ray leaves the spectrum unchanged.
        let sr2 = eigenvalues3(&layer_jacobian(&PhasePoint::new(2.0, 2.0, 4.0, 4.0), &p).unwrap());
        for (a, b) in sr.iter().zip(sr2.iter()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
        }
    }

    #[test]
    fn u_tilde_is_monotone_for_nonnegative_w() {
        let p = fig();
        for w in [0.0, 1e-8, 0.5, 10.0] {
            let d = fast_rhs(&PhasePoint::new(1.0, 0.3, w, 2.0), &p).unwrap();
            assert!(d.u_tilde >= 0.0);
        }
    }
}
