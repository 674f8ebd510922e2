//! Fixed-step fourth-order splitting integrator for the driven pendulum.
//!
//! The flow is split into a drift (q += p h, t += h) and a kick
//! (p += F(q, t) h) and composed with the Yoshida triple-jump weights.
//! The tangent map of the discrete scheme is propagated alongside, so
//! Jacobians are exact derivatives of the numerical map.

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{ensure_finite, Error, Result};
use crate::model::{PhaseSpacePoint, SystemParams, TAU};

/// Default number of integration steps per drive period.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 256;

const CBRT2: f64 = 1.259_921_049_894_873_2;
const W1: f64 = 1.0 / (2.0 - CBRT2);
const W0: f64 = -CBRT2 / (2.0 - CBRT2);

/// Drift and kick weights of one fourth-order step.
const DRIFTS: [f64; 4] = [0.5 * W1, 0.5 * (W0 + W1), 0.5 * (W0 + W1), 0.5 * W1];
const KICKS: [f64; 3] = [W1, W0, W1];

/// 2×2 real matrix in row-major order, ((∂p'/∂p, ∂p'/∂q), (∂q'/∂p, ∂q'/∂q)).
pub type Jacobian = [[f64; 2]; 2];

pub const IDENTITY: Jacobian = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat_mul(a: &Jacobian, b: &Jacobian) -> Jacobian {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn det(a: &Jacobian) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn trace(a: &Jacobian) -> f64 {
    a[0][0] + a[1][1]
}

/// State carried through the integration: momentum, unwrapped angle, time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub p: f64,
    /// Angle without reduction modulo 2π, so net windings can be read off.
    pub q: f64,
    pub t: f64,
}

impl Trajectory {
    pub fn point(&self) -> PhaseSpacePoint {
        PhaseSpacePoint::new(self.p, self.q)
    }
}

/// Kick coefficients for one period starting at t = 0: the force at kick k
/// is −(a_k sin q + b_k cos q), with the step length already folded in.
#[derive(Debug, Clone)]
struct PeriodTable {
    a: Vec<f64>,
    b: Vec<f64>,
    drift: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SplittingIntegrator {
    params: SystemParams,
    steps_per_period: usize,
    table: PeriodTable,
}

impl SplittingIntegrator {
    pub fn new(params: SystemParams, steps_per_period: usize) -> Self {
        assert!(steps_per_period > 0, "steps_per_period must be positive");
        let h = TAU / steps_per_period as f64;
        let (ca, cb) = params.potential_coefficients();
        let mut a = Vec::with_capacity(3 * steps_per_period);
        let mut b = Vec::with_capacity(3 * steps_per_period);
        let mut drift = Vec::with_capacity(4 * steps_per_period);
        for step in 0..steps_per_period {
            let mut t = step as f64 * h;
            for k in 0..3 {
                drift.push(DRIFTS[k] * h);
                t += DRIFTS[k] * h;
                let (s, c) = t.sin_cos();
                a.push(ca * c * KICKS[k] * h);
                b.push(cb * s * KICKS[k] * h);
            }
            drift.push(DRIFTS[3] * h);
        }
        Self {
            params,
            steps_per_period,
            table: PeriodTable { a, b, drift },
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn steps_per_period(&self) -> usize {
        self.steps_per_period
    }

    /// Propagate from `t0` to `t1` (t1 ≥ t0) with steps of at most τ/steps_per_period.
    pub fn integrate(&self, x0: &PhaseSpacePoint, t0: f64, t1: f64) -> Result<PhaseSpacePoint> {
        Ok(self
            .integrate_trajectory(Trajectory { p: x0.p, q: x0.q, t: t0 }, t1)?
            .point())
    }

    pub fn integrate_trajectory(&self, start: Trajectory, t1: f64) -> Result<Trajectory> {
        ensure_finite(&[start.p, start.q, start.t, t1], "integrate")?;
        if t1 < start.t {
            return Err(Error::InvalidParameter("t1 must not precede t0"));
        }
        let span = t1 - start.t;
        if span == 0.0 {
            return Ok(start);
        }
        let n = ((span / TAU * self.steps_per_period as f64).ceil() as usize).max(1);
        let h = span / n as f64;
        let mut s = start;
        let t_start = start.t;
        for step in 0..n {
            s.t = t_start + step as f64 * h;
            for k in 0..3 {
                s.q += DRIFTS[k] * h * s.p;
                s.t += DRIFTS[k] * h;
                s.p += KICKS[k] * h * crate::model::force(&self.params, s.q, s.t);
            }
            s.q += DRIFTS[3] * h * s.p;
        }
        s.t = t1;
        Ok(s)
    }

    /// One drive period starting at a stroboscopic time (multiple of τ).
    /// Returns the momentum and the unwrapped angle.
    #[inline]
    pub fn period(&self, p: f64, q: f64) -> (f64, f64) {
        let (mut p, mut q) = (p, q);
        let t = &self.table;
        for step in 0..self.steps_per_period {
            for k in 0..3 {
                q += t.drift[4 * step + k] * p;
                let (s, c) = q.sin_cos();
                p -= t.a[3 * step + k] * s + t.b[3 * step + k] * c;
            }
            q += t.drift[4 * step + 3] * p;
        }
        (p, q)
    }

    /// One period together with its exact tangent map.
    pub fn period_with_jacobian(&self, p: f64, q: f64) -> ((f64, f64), Jacobian) {
        let (x, col_p) = self.period_with_tangent(p, q, [1.0, 0.0]);
        let (_, col_q) = self.period_with_tangent(p, q, [0.0, 1.0]);
        (x, [[col_p[0], col_q[0]], [col_p[1], col_q[1]]])
    }

    /// Propagate a tangent vector (δp, δq) along one period.
    #[inline]
    pub fn period_with_tangent(&self, p: f64, q: f64, tangent: [f64; 2]) -> ((f64, f64), [f64; 2]) {
        let (mut p, mut q) = (p, q);
        let [mut vp, mut vq] = tangent;
        let t = &self.table;
        for step in 0..self.steps_per_period {
            for k in 0..3 {
                let h = t.drift[4 * step + k];
                q += h * p;
                vq += h * vp;
                let (s, c) = q.sin_cos();
                let (a, b) = (t.a[3 * step + k], t.b[3 * step + k]);
                p -= a * s + b * c;
                vp -= (a * c - b * s) * vq;
            }
            let h = t.drift[4 * step + 3];
            q += h * p;
            vq += h * vp;
        }
        ((p, q), [vp, vq])
    }
}

/// Double the step count until one stroboscopic period, evaluated at the
/// probe points, changes by less than `tol`.
pub fn calibrate_steps(
    params: &SystemParams,
    probes: &[PhaseSpacePoint],
    tol: f64,
    max_steps: usize,
) -> usize {
    let mut steps = DEFAULT_STEPS_PER_PERIOD;
    let mut coarse = SplittingIntegrator::new(*params, steps);
    while steps < max_steps {
        let fine = SplittingIntegrator::new(*params, 2 * steps);
        let change = probes
            .iter()
            .map(|x| {
                let (p0, q0) = coarse.period(x.p, x.q);
                let (p1, q1) = fine.period(x.p, x.q);
                (p0 - p1).abs().max((q0 - q1).abs())
            })
            .fold(0.0, f64::max);
        if change < tol {
            return steps;
        }
        steps *= 2;
        coarse = fine;
    }
    steps
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    #[test]
    fn drift_and_kick_weights_are_consistent() {
        assert_relative_eq!(DRIFTS.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(KICKS.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn free_drift() {
        let params = SystemParams::classical(0.0).unwrap();
        let integ = SplittingIntegrator::new(params, 64);
        let x = integ.integrate(&PhaseSpacePoint::new(0.3, 0.1), 0.5, 4.0).unwrap();
        assert_relative_eq!(x.p, 0.3, epsilon = 1e-15);
        assert_relative_eq!(x.q, 0.1 + 0.3 * 3.5, epsilon = 1e-13);
        let (p, q) = integ.period(1.0, 0.25);
        assert_eq!(p, 1.0);
        assert_relative_eq!(q - TAU, 0.25, epsilon = 1e-12);
        let (_, q) = integ.period(0.5, 0.25);
        assert_relative_eq!(q, 0.25 + PI, epsilon = 1e-12);
    }

    #[test]
    fn reversible() {
        let params = SystemParams::classical(0.72).unwrap();
        let integ = SplittingIntegrator::new(params, 256);
        let start = Trajectory { p: 0.4, q: 0.9, t: 0.0 };
        let fwd = integ.integrate_trajectory(start, TAU).unwrap();
        // integrate backwards in time by mirroring: (p, q, t) → (−p, q, −t)
        // is a symmetry of the symmetric drive
        let back = integ
            .integrate_trajectory(Trajectory { p: -fwd.p, q: fwd.q, t: -TAU }, 0.0)
            .unwrap();
        assert_relative_eq!(-back.p, start.p, epsilon = 1e-10);
        assert_relative_eq!(back.q, start.q, epsilon = 1e-10);
    }

    #[test]
    fn table_period_matches_generic_integration() {
        let params = SystemParams::new(0.5, 0.3, 1.0).unwrap();
        let integ = SplittingIntegrator::new(params, 128);
        let generic = integ
            .integrate_trajectory(Trajectory { p: 0.7, q: -0.4, t: 0.0 }, TAU)
            .unwrap();
        let (p, q) = integ.period(0.7, -0.4);
        assert_relative_eq!(p, generic.p, epsilon = 1e-12);
        assert_relative_eq!(q, generic.q, epsilon = 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences_and_is_symplectic() {
        let params = SystemParams::new(0.72, 0.6, 1.0).unwrap();
        let integ = SplittingIntegrator::new(params, 128);
        let (p0, q0) = (1.1, 0.3);
        let ((p, q), jac) = integ.period_with_jacobian(p0, q0);
        assert_eq!((p, q), integ.period(p0, q0));
        let h = 1e-6;
        let fp = |dp: f64, dq: f64| integ.period(p0 + dp, q0 + dq);
        let (a, b) = (fp(h, 0.0), fp(-h, 0.0));
        let (c, d) = (fp(0.0, h), fp(0.0, -h));
        assert_relative_eq!(jac[0][0], (a.0 - b.0) / (2.0 * h), epsilon = 1e-6);
        assert_relative_eq!(jac[1][0], (a.1 - b.1) / (2.0 * h), epsilon = 1e-6);
        assert_relative_eq!(jac[0][1], (c.0 - d.0) / (2.0 * h), epsilon = 1e-6);
        assert_relative_eq!(jac[1][1], (c.1 - d.1) / (2.0 * h), epsilon = 1e-6);
        assert_relative_eq!(det(&jac), 1.0, epsilon = 1e-12);
        let (_, v) = integ.period_with_tangent(p0, q0, [0.3, -0.2]);
        assert_relative_eq!(v[0], 0.3 * jac[0][0] - 0.2 * jac[0][1], epsilon = 1e-12);
        assert_relative_eq!(v[1], 0.3 * jac[1][0] - 0.2 * jac[1][1], epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let integ = SplittingIntegrator::new(SystemParams::classical(0.3).unwrap(), 16);
        assert!(integ.integrate(&PhaseSpacePoint { p: f64::NAN, q: 0.0 }, 0.0, 1.0).is_err());
        assert!(integ.integrate(&PhaseSpacePoint::new(0.0, 0.0), 1.0, 0.0).is_err());
    }
}
