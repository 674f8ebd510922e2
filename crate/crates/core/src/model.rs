//! The driven pendulum
//!
//! H(p, q; t) = p²/2 − (γ₊/2) cos(q + t) − (γ₋/2) cos(q − t)
//!
//! on the cylinder q ∈ [−π, π), with drive period τ = 2π. For γ₊ = γ₋ the
//! potential collapses to −γ cos q cos t, which is even in q and in t.

use core::f64::consts::PI;
use num_traits::Float;


use crate::error::{Error, Result};

/// Drive period. Every quasienergy zone and rotation number assumes this value.
pub const TAU: f64 = 2.0 * PI;

/// Physical configuration of the driven pendulum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub hbar: f64,
}

impl SystemParams {
    pub fn new(gamma_plus: f64, gamma_minus: f64, hbar: f64) -> Result<Self> {
        crate::error::ensure_finite(&[gamma_plus, gamma_minus, hbar], "SystemParams")?;
        if gamma_plus < 0.0 || gamma_minus < 0.0 {
            return Err(Error::InvalidParameter("couplings must be non-negative"));
        }
        if hbar <= 0.0 {
            return Err(Error::InvalidParameter("hbar must be positive"));
        }
        Ok(Self {
            gamma_plus,
            gamma_minus,
            hbar,
        })
    }

    /// γ₊ = γ₋ = γ, the time-reversal symmetric configuration.
    pub fn symmetric(gamma: f64, hbar: f64) -> Result<Self> {
        Self::new(gamma, gamma, hbar)
    }

    /// Parameters for purely classical work, where ħ plays no role.
    pub fn classical(gamma: f64) -> Result<Self> {
        Self::symmetric(gamma, 1.0)
    }

    pub fn with_hbar(self, hbar: f64) -> Result<Self> {
        Self::new(self.gamma_plus, self.gamma_minus, hbar)
    }

    pub const fn tau(&self) -> f64 {
        TAU
    }

    pub fn symmetric_mode(&self) -> bool {
        self.gamma_plus == self.gamma_minus
    }

    /// Coefficients (a, b) of the potential written as
    /// V(q, t) = −a cos q cos t + b sin q sin t.
    pub(crate) fn potential_coefficients(&self) -> (f64, f64) {
        (
            0.5 * (self.gamma_plus + self.gamma_minus),
            0.5 * (self.gamma_plus - self.gamma_minus),
        )
    }
}

/// Reduce an angle into [−π, π).
pub fn wrap_angle(q: f64) -> f64 {
    let mut r = (q + PI) % TAU;
    if r < 0.0 {
        r += TAU;
    }
    // r + TAU can round up to exactly TAU for tiny negative remainders
    let r = r - PI;
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

/// Signed difference a − b taken on the circle, in [−π, π).
pub fn angle_difference(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// A point (p, q) of the cylinder with q kept in [−π, π).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseSpacePoint {
    pub p: f64,
    pub q: f64,
}

impl PhaseSpacePoint {
    pub fn new(p: f64, q: f64) -> Self {
        Self { p, q: wrap_angle(q) }
    }

    /// Distance with the angle difference measured on the circle.
    pub fn distance(&self, other: &PhaseSpacePoint) -> f64 {
        let dp = self.p - other.p;
        let dq = angle_difference(self.q, other.q);
        (dp * dp + dq * dq).sqrt()
    }

    /// Image under p → −p (the time-reversal partner at t = 0).
    pub fn reflected(&self) -> Self {
        Self::new(-self.p, self.q)
    }
}

/// Which of the two symmetry-related islands a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IslandFrame {
    /// Island near p = +1, co-moving with q̃ = q − t.
    Upper,
    /// Island near p = −1, co-moving with q̃ = q + t.
    Lower,
}

impl IslandFrame {
    pub fn sign(self) -> f64 {
        match self {
            IslandFrame::Upper => 1.0,
            IslandFrame::Lower => -1.0,
        }
    }
}

pub fn hamiltonian(params: &SystemParams, x: &PhaseSpacePoint, t: f64) -> f64 {
    0.5 * x.p * x.p
        - 0.5 * params.gamma_plus * (x.q + t).cos()
        - 0.5 * params.gamma_minus * (x.q - t).cos()
}

/// Hamilton's equations, returned as (dp/dt, dq/dt).
pub fn equations_of_motion(params: &SystemParams, x: &PhaseSpacePoint, t: f64) -> (f64, f64) {
    (force(params, x.q, t), x.p)
}

/// −∂V/∂q
#[inline]
pub(crate) fn force(params: &SystemParams, q: f64, t: f64) -> f64 {
    -0.5 * params.gamma_plus * (q + t).sin() - 0.5 * params.gamma_minus * (q - t).sin()
}

/// Integrable pendulum approximating one island, evaluated in its co-moving
/// frame. `x.q` is the co-moving angle q̃.
pub fn h0(params: &SystemParams, x: &PhaseSpacePoint, frame: IslandFrame) -> f64 {
    match frame {
        IslandFrame::Upper => {
            0.5 * (x.p - 1.0) * (x.p - 1.0) - 0.5 * params.gamma_minus * x.q.cos()
        }
        IslandFrame::Lower => {
            0.5 * (x.p + 1.0) * (x.p + 1.0) - 0.5 * params.gamma_plus * x.q.cos()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::FRAC_PI_2;
    use proptest::prelude::*;

    fn sym(g: f64) -> SystemParams {
        SystemParams::symmetric(g, 0.1).unwrap()
    }

    #[test]
    fn hamiltonian_values() {
        assert_eq!(hamiltonian(&sym(0.0), &PhaseSpacePoint::new(1.0, 0.0), 0.0), 0.5);
        assert_relative_eq!(
            hamiltonian(&sym(0.72), &PhaseSpacePoint::new(0.0, 0.0), 0.0),
            -0.72,
            epsilon = 1e-15
        );
        let x = PhaseSpacePoint::new(0.8, 1.3);
        assert_relative_eq!(hamiltonian(&sym(0.5), &x, FRAC_PI_2), 0.32, epsilon = 1e-15);
    }

    #[test]
    fn equations_of_motion_values() {
        assert_eq!(
            equations_of_motion(&sym(0.0), &PhaseSpacePoint::new(2.0, 1.0), 0.0),
            (0.0, 2.0)
        );
        let (dp, dq) = equations_of_motion(&sym(0.3), &PhaseSpacePoint::new(0.7, 0.0), 0.0);
        assert_eq!((dp, dq), (0.0, 0.7));
        let (dp, _) = equations_of_motion(&sym(0.72), &PhaseSpacePoint::new(0.1, FRAC_PI_2), 0.0);
        assert_relative_eq!(dp, -0.72, epsilon = 1e-15);
    }

    #[test]
    fn h0_values() {
        let p = sym(0.72);
        assert_relative_eq!(
            h0(&p, &PhaseSpacePoint::new(1.0, FRAC_PI_2), IslandFrame::Upper),
            0.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            h0(&p, &PhaseSpacePoint::new(1.0, 0.0), IslandFrame::Upper),
            -0.36,
            epsilon = 1e-15
        );
        // hyperbolic point of the pendulum sits at +γ/2
        let x = PhaseSpacePoint { p: 1.0, q: PI };
        assert_relative_eq!(h0(&sym(0.1), &x, IslandFrame::Upper), 0.05, epsilon = 1e-15);
        let y = PhaseSpacePoint { p: -1.0, q: PI };
        assert_relative_eq!(h0(&sym(0.1), &y, IslandFrame::Lower), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(SystemParams::new(-0.1, 0.1, 0.1).is_err());
        assert!(SystemParams::new(0.1, 0.1, 0.0).is_err());
        assert!(SystemParams::new(f64::NAN, 0.1, 0.1).is_err());
        assert!(sym(0.4).symmetric_mode());
        assert!(!SystemParams::new(0.4, 0.3, 0.1).unwrap().symmetric_mode());
    }

    #[test]
    fn wrap_angle_interval() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!(wrap_angle(-1e-18) < PI);
        assert_relative_eq!(wrap_angle(3.0 * TAU + 0.25), 0.25, epsilon = 1e-13);
    }

    proptest! {
        #[test]
        fn time_reversal_symmetry(g in 0.0f64..1.5, p in -3.0f64..3.0, q in -4.0f64..4.0, t in -7.0f64..7.0) {
            let params = sym(g);
            let a = hamiltonian(&params, &PhaseSpacePoint::new(p, q), t);
            let b = hamiltonian(&params, &PhaseSpacePoint::new(-p, q), -t);
            prop_assert!((a - b).abs() < 1e-14);
        }

        #[test]
        fn periodic_in_q_and_t(gp in 0.0f64..1.0, gm in 0.0f64..1.0, p in -3.0f64..3.0, q in -3.0f64..3.0, t in -7.0f64..7.0) {
            let params = SystemParams::new(gp, gm, 0.1).unwrap();
            let h = hamiltonian(&params, &PhaseSpacePoint { p, q }, t);
            let hq = hamiltonian(&params, &PhaseSpacePoint { p, q: q + TAU }, t);
            let ht = hamiltonian(&params, &PhaseSpacePoint { p, q }, t + TAU);
            prop_assert!((h - hq).abs() < 1e-13);
            prop_assert!((h - ht).abs() < 1e-13);
        }

        #[test]
        fn equations_match_finite_differences(gp in 0.05f64..1.0, gm in 0.05f64..1.0, p in -3.0f64..3.0, q in -3.0f64..3.0, t in -7.0f64..7.0) {
            let params = SystemParams::new(gp, gm, 0.1).unwrap();
            let h = 1e-5;
            let x = PhaseSpacePoint { p, q };
            let dh_dq = (hamiltonian(&params, &PhaseSpacePoint { p, q: q + h }, t)
                - hamiltonian(&params, &PhaseSpacePoint { p, q: q - h }, t)) / (2.0 * h);
            let dh_dp = (hamiltonian(&params, &PhaseSpacePoint { p: p + h, q }, t)
                - hamiltonian(&params, &PhaseSpacePoint { p: p - h, q }, t)) / (2.0 * h);
            let (dp, dq) = equations_of_motion(&params, &x, t);
            prop_assert!((dp + dh_dq).abs() <= 1e-8 * dh_dq.abs().max(1.0));
            prop_assert!((dq - dh_dp).abs() <= 1e-8 * dh_dp.abs().max(1.0));
        }
    }
}
