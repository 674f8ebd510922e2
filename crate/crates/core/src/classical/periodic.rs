//! Periodic orbits of the ℓ-fold stroboscopic map by Newton iteration.

use alloc::vec::Vec;
use num_traits::Float;


use super::integrator::{det, trace, Jacobian};
use super::StrobeMap;
use crate::error::{Error, Result};
use crate::model::{angle_difference, PhaseSpacePoint, TAU};

const MAX_NEWTON_ITERATIONS: usize = 50;
const NEWTON_TOL: f64 = 1e-12;
const MAX_NEWTON_STEP: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    /// Fixed point of the ℓ-fold map.
    pub anchor: PhaseSpacePoint,
    pub period_multiplier: usize,
    /// Number of turns about the reference center completed in ℓ periods
    /// (about the origin of q when no center is given).
    pub winding: i64,
    /// Net angle advance of the continuous trajectory over ℓ periods, in turns.
    pub q_winding: i64,
    pub residual: f64,
    pub monodromy: Jacobian,
    pub trace: f64,
}

impl PeriodicOrbit {
    pub fn is_stable(&self) -> bool {
        self.trace.abs() < 2.0
    }

    pub fn is_unstable(&self) -> bool {
        self.trace.abs() > 2.0
    }

    /// The ℓ points of the orbit, starting at the anchor.
    pub fn points(&self, map: &StrobeMap) -> Vec<PhaseSpacePoint> {
        let mut out = Vec::with_capacity(self.period_multiplier);
        let mut x = self.anchor;
        for _ in 0..self.period_multiplier {
            out.push(x);
            x = map.apply(&x);
        }
        out
    }

    /// Unstable eigenvalue and unit eigenvector of the monodromy matrix.
    pub fn unstable_direction(&self) -> Option<(f64, [f64; 2])> {
        if !self.is_unstable() {
            return None;
        }
        let tr = self.trace;
        let lambda = 0.5 * (tr + tr.signum() * (tr * tr - 4.0).sqrt());
        let m = &self.monodromy;
        // (M − λ) v = 0, taking the better conditioned row
        let v = if m[0][1].abs() + (m[0][0] - lambda).abs() > m[1][0].abs() + (m[1][1] - lambda).abs() {
            [m[0][1], lambda - m[0][0]]
        } else {
            [lambda - m[1][1], m[1][0]]
        };
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        Some((lambda, [v[0] / n, v[1] / n]))
    }
}

/// Residual of M^ℓ(x) − x with the angle difference taken on the circle.
fn residual_vector(map: &StrobeMap, x: &PhaseSpacePoint, ell: usize) -> ([f64; 2], Jacobian, f64) {
    let (y, jac, advance) = map.iterate_with_jacobian(x, ell);
    ([y.p - x.p, angle_difference(y.q, x.q)], jac, advance)
}

/// Newton iteration on M^ℓ(x) − x. `center` sets the reference point for
/// the winding number.
pub fn find_periodic_orbit(
    map: &StrobeMap,
    guess: &PhaseSpacePoint,
    ell: usize,
    center: Option<&PhaseSpacePoint>,
) -> Result<PeriodicOrbit> {
    if ell == 0 {
        return Err(Error::InvalidParameter("ell must be positive"));
    }
    crate::error::ensure_finite(&[guess.p, guess.q], "find_periodic_orbit")?;
    let mut x = *guess;
    let mut norm = f64::INFINITY;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let (f, jac, _) = residual_vector(map, &x, ell);
        norm = f[0].abs().max(f[1].abs());
        if !norm.is_finite() {
            break;
        }
        if norm < NEWTON_TOL {
            return Ok(finish(map, x, ell, center));
        }
        let a = [[jac[0][0] - 1.0, jac[0][1]], [jac[1][0], jac[1][1] - 1.0]];
        let d = det(&a);
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if d.abs() < 1e-12 * scale * scale {
            return Err(Error::SingularJacobian(d));
        }
        let mut dp = -(a[1][1] * f[0] - a[0][1] * f[1]) / d;
        let mut dq = -(-a[1][0] * f[0] + a[0][0] * f[1]) / d;
        let step = (dp * dp + dq * dq).sqrt();
        if step > MAX_NEWTON_STEP {
            dp *= MAX_NEWTON_STEP / step;
            dq *= MAX_NEWTON_STEP / step;
        }
        x = PhaseSpacePoint::new(x.p + dp, x.q + dq);
    }
    // a last check absorbs the round-off floor of long orbits
    let (f, _, _) = residual_vector(map, &x, ell);
    let last = f[0].abs().max(f[1].abs());
    if last < 1e-10 {
        return Ok(finish(map, x, ell, center));
    }
    Err(Error::NoConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        residual: norm.min(last),
    })
}

fn finish(map: &StrobeMap, x: PhaseSpacePoint, ell: usize, center: Option<&PhaseSpacePoint>) -> PeriodicOrbit {
    let (f, jac, advance) = residual_vector(map, &x, ell);
    let q_winding = (advance / TAU).round() as i64;
    let winding = match center {
        Some(c) => turns_about(map, &x, ell, c),
        None => q_winding,
    };
    PeriodicOrbit {
        anchor: x,
        period_multiplier: ell,
        winding,
        q_winding,
        residual: f[0].abs().max(f[1].abs()),
        monodromy: jac,
        trace: trace(&jac),
    }
}

/// Turns about `center` made by the closed stroboscopic orbit through `x`,
/// counting each step as the angle increment in [0, 2π).
fn turns_about(map: &StrobeMap, x: &PhaseSpacePoint, ell: usize, center: &PhaseSpacePoint) -> i64 {
    let angle = |y: &PhaseSpacePoint| (y.p - center.p).atan2(angle_difference(y.q, center.q));
    let mut total = 0.0;
    let mut y = *x;
    let mut prev = angle(&y);
    for _ in 0..ell {
        y = map.apply(&y);
        let a = angle(&y);
        let mut d = (a - prev) % TAU;
        if d < 0.0 {
            d += TAU;
        }
        total += d;
        prev = a;
    }
    let turns = (total / TAU).round() as i64;
    // sense of rotation does not matter: report the smaller of s and ℓ − s
    turns.min(ell as i64 - turns)
}

/// Locate the periodic orbits of an s:ℓ chain around `center` by Newton
/// iterations seeded on a circle of the given radius (scaled to the local
/// island aspect). Distinct orbits are returned once each, stable first.
pub fn find_chain_orbits(
    map: &StrobeMap,
    center: &PhaseSpacePoint,
    ell: usize,
    radius_p: f64,
    radius_q: f64,
    n_guesses: usize,
) -> Vec<PeriodicOrbit> {
    let mut found: Vec<(PeriodicOrbit, Vec<PhaseSpacePoint>)> = Vec::new();
    for k in 0..n_guesses {
        let phi = TAU * k as f64 / n_guesses as f64;
        let guess = PhaseSpacePoint::new(center.p + radius_p * phi.sin(), center.q + radius_q * phi.cos());
        let orbit = match find_periodic_orbit(map, &guess, ell, Some(center)) {
            Ok(o) => o,
            Err(_) => continue,
        };
        // reject the center itself and sub-harmonics of shorter period
        let pts = orbit.points(map);
        let minimal = (1..ell)
            .filter(|d| ell % d == 0)
            .all(|d| pts[d].distance(&orbit.anchor) > 1e-6);
        if !minimal || orbit.anchor.distance(center) < 1e-6 {
            continue;
        }
        // Newton may wander to an unrelated orbit; chain points stay near the seeding ellipse
        let near_ring = pts.iter().all(|x| {
            let u = (x.p - center.p) / radius_p;
            let v = angle_difference(x.q, center.q) / radius_q;
            (0.4..=1.6).contains(&(u * u + v * v).sqrt())
        });
        if !near_ring {
            continue;
        }
        let duplicate = found
            .iter()
            .any(|(_, other)| other.iter().any(|y| y.distance(&orbit.anchor) < 1e-7));
        if !duplicate {
            found.push((orbit, pts));
        }
    }
    let mut out: Vec<PeriodicOrbit> = found.into_iter().map(|(o, _)| o).collect();
    out.sort_by(|a, b| b.is_stable().cmp(&a.is_stable()));
    out
}

/// The chain point closest to the line q = `q_ref`, used as the
/// representative cell of an eroded chain.
pub fn point_nearest_q(map: &StrobeMap, orbit: &PeriodicOrbit, q_ref: f64) -> PhaseSpacePoint {
    orbit
        .points(map)
        .into_iter()
        .min_by(|a, b| {
            angle_difference(a.q, q_ref)
                .abs()
                .total_cmp(&angle_difference(b.q, q_ref).abs())
        })
        .unwrap_or(orbit.anchor)
}

/// Half-turn guard used when folding rotation numbers.
pub(crate) fn fold_rotation(rho: f64) -> f64 {
    let r = rho - rho.floor();
    r.min(1.0 - r)
}
