//! Inner and outer separatrices of a resonance chain.
//!
//! Primary method: unstable-manifold tracing from a hyperbolic chain point.
//! A fundamental domain x_h + σ δ λ^u v (u ∈ [0, 1)) is iterated with the
//! ℓ-fold map until each seed passes its closest approach to a neighbouring
//! chain point; single-period images then supply the remaining ℓ − 1 arcs.
//! Fallback: the two invariant curves bracketing the chain, located by
//! bisection on the rotation number.

use alloc::vec::Vec;
use num_traits::Float;


use super::island::rotation_profile;
use super::periodic::PeriodicOrbit;
use super::{classify_orbit, rotation_number, star_polygon_area, ClassifierSettings, OrbitClass, StrobeMap};
use crate::error::{Error, Result};
use crate::model::PhaseSpacePoint;

/// An area-preserving map of the plane or cylinder.
pub trait PlanarMap {
    fn apply(&self, x: &PhaseSpacePoint) -> PhaseSpacePoint;

    fn iterate(&self, x: &PhaseSpacePoint, n: usize) -> PhaseSpacePoint {
        let mut y = *x;
        for _ in 0..n {
            y = self.apply(&y);
        }
        y
    }
}

impl PlanarMap for StrobeMap {
    fn apply(&self, x: &PhaseSpacePoint) -> PhaseSpacePoint {
        StrobeMap::apply(self, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SeparatrixMethod {
    ManifoldTracing,
    BracketingCurves,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeparatrixAreas {
    pub s_outer: f64,
    pub s_inner: f64,
    pub method: SeparatrixMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracingSettings {
    /// Initial offset along the unstable direction.
    pub delta: f64,
    /// Seeds per fundamental domain.
    pub seeds: usize,
    /// Upper bound on ℓ-fold iterations per seed.
    pub max_iterations: usize,
    /// Tracing fails when a point strays farther than this factor times the
    /// chain radius from the island center.
    pub escape_factor: f64,
}

impl Default for TracingSettings {
    fn default() -> Self {
        Self {
            delta: 1e-8,
            seeds: 64,
            max_iterations: 400,
            escape_factor: 2.0,
        }
    }
}

fn radius2(x: &PhaseSpacePoint, center: &PhaseSpacePoint) -> f64 {
    let dq = crate::model::angle_difference(x.q, center.q);
    let dp = x.p - center.p;
    dp * dp + dq * dq
}

/// Trace one unstable branch from `chain[0]`; returns the collected points.
fn trace_branch<M: PlanarMap>(
    map: &M,
    center: &PhaseSpacePoint,
    chain: &[PhaseSpacePoint],
    ell: usize,
    lambda: f64,
    direction: [f64; 2],
    sign: f64,
    settings: &TracingSettings,
) -> Result<Vec<PhaseSpacePoint>> {
    let x_h = chain[0];
    // a reflecting saddle swaps branches every ℓ periods
    let (fold, stretch) = if lambda < 0.0 { (2 * ell, lambda * lambda) } else { (ell, lambda) };
    let chain_r2 = chain.iter().map(|x| radius2(x, center)).fold(0.0, f64::max);
    let escape_r2 = settings.escape_factor * settings.escape_factor * chain_r2;
    let spacing = chain
        .iter()
        .skip(1)
        .map(|x| x.distance(&x_h))
        .fold(f64::INFINITY, f64::min);
    let near = 0.25 * spacing;
    let others = &chain[1..];
    let nearest = |x: &PhaseSpacePoint| others.iter().map(|y| x.distance(y)).fold(f64::INFINITY, f64::min);

    let mut out = Vec::new();
    for k in 0..settings.seeds {
        let u = k as f64 / settings.seeds as f64;
        let r = sign * settings.delta * stretch.powf(u);
        let mut x = PhaseSpacePoint::new(x_h.p + r * direction[0], x_h.q + r * direction[1]);
        let mut best = nearest(&x);
        let mut arrived = false;
        for _ in 0..settings.max_iterations {
            let y = map.iterate(&x, fold);
            if radius2(&y, center) > escape_r2 || !y.p.is_finite() {
                return Err(Error::ManifoldEscape);
            }
            let d = nearest(&y);
            if best < near && d > best {
                arrived = true;
                break;
            }
            best = best.min(d);
            out.push(y);
            x = y;
        }
        if !arrived {
            return Err(Error::ManifoldEscape);
        }
    }
    Ok(out)
}

/// Trace both unstable branches of the chain through `chain[0]` and return
/// the enclosed areas (outer, inner). `chain` lists the ℓ hyperbolic points
/// in map order; `lambda`, `direction` are the unstable eigenpair of the
/// ℓ-fold map at `chain[0]`.
pub fn trace_separatrices<M: PlanarMap>(
    map: &M,
    center: &PhaseSpacePoint,
    chain: &[PhaseSpacePoint],
    lambda: f64,
    direction: [f64; 2],
    settings: &TracingSettings,
) -> Result<(f64, f64)> {
    let ell = chain.len();
    if ell < 2 {
        return Err(Error::InvalidParameter("a chain needs at least two cells"));
    }
    let mut areas = [0.0; 2];
    for (area, sign) in areas.iter_mut().zip([1.0, -1.0]) {
        let branch = trace_branch(map, center, chain, ell, lambda, direction, sign, settings)?;
        let mut closed: Vec<PhaseSpacePoint> = Vec::with_capacity(branch.len() * ell + ell);
        closed.extend_from_slice(chain);
        let mut arc = branch;
        for _ in 0..ell {
            closed.extend_from_slice(&arc);
            arc = arc.iter().map(|x| map.apply(x)).collect();
        }
        *area = star_polygon_area(&closed, center);
    }
    // both loops pass through the chain, so the outer one encloses the inner
    let (outer, inner) = (areas[0].max(areas[1]), areas[0].min(areas[1]));
    if outer <= inner {
        return Err(Error::ManifoldEscape);
    }
    Ok((outer, inner))
}

/// Areas enclosed by the invariant curves just inside and just outside the
/// chain with rotation frequency `target` (folded, turns per period),
/// searched along the ray p = center.p − r.
pub fn bracketing_areas(
    map: &StrobeMap,
    center: &PhaseSpacePoint,
    target: f64,
    max_radius: f64,
    n_iter: usize,
) -> Result<(f64, f64)> {
    let profile = rotation_profile(map, center, 60, max_radius, n_iter);
    let crossing = profile
        .windows(2)
        .position(|w| (w[0].omega - target) * (w[1].omega - target) <= 0.0)
        .ok_or(Error::NoIsland("rotation profile does not reach the resonance"))?;
    let settings = ClassifierSettings {
        n_iter: n_iter.max(400),
        ..ClassifierSettings::default()
    };
    let tol = 2e-3;
    let below = profile[crossing].omega < target;
    // side of the chain a radius lies on: Some(true) inner, Some(false) outer
    let side = |r: f64| -> (Option<bool>, f64) {
        let seed = PhaseSpacePoint::new(center.p - r, center.q);
        let mut points = Vec::with_capacity(settings.n_iter + 1);
        if classify_orbit(map, &seed, &settings, Some(&mut points)) != OrbitClass::Regular {
            return (None, 0.0);
        }
        let omega = super::periodic::fold_rotation(rotation_number(&points, center));
        let area = star_polygon_area(&points, center);
        if (omega - target).abs() < tol {
            (None, area)
        } else {
            (Some((omega < target) == below), area)
        }
    };
    let bisect = |mut lo: f64, mut hi: f64, inner: bool| -> f64 {
        // lo is on the wanted side, hi is not
        let mut area = side(lo).1;
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            let (s, a) = side(mid);
            if s == Some(inner) {
                lo = mid;
                area = a;
            } else {
                hi = mid;
            }
            if (hi - lo) < 1e-5 {
                break;
            }
        }
        area
    };
    let r_in = profile[crossing].radius;
    let r_out = profile[crossing + 1].radius;
    let mid = 0.5 * (r_in + r_out);
    let inner = bisect(r_in, mid, true);
    let outer = bisect(r_out, mid, false);
    if !(outer > inner && inner > 0.0) {
        return Err(Error::ManifoldEscape);
    }
    Ok((outer, inner))
}

/// Separatrix areas of the chain of hyperbolic orbit `orbit` about `center`,
/// tracing from the chain cell nearest q = 0. Falls back to bracketing
/// invariant curves when tracing fails.
pub fn separatrix_areas(
    map: &StrobeMap,
    center: &PhaseSpacePoint,
    orbit: &PeriodicOrbit,
    settings: &TracingSettings,
) -> Result<SeparatrixAreas> {
    let ell = orbit.period_multiplier;
    let start = super::periodic::point_nearest_q(map, orbit, center.q);
    let traced = (|| {
        let anchored = super::periodic::find_periodic_orbit(map, &start, ell, Some(center))?;
        let (lambda, v) = anchored
            .unstable_direction()
            .ok_or(Error::InvalidParameter("chain orbit is not hyperbolic"))?;
        let chain = anchored.points(map);
        trace_separatrices(map, center, &chain, lambda, [v[0], v[1]], settings)
    })();
    match traced {
        Ok((s_outer, s_inner)) => Ok(SeparatrixAreas {
            s_outer,
            s_inner,
            method: SeparatrixMethod::ManifoldTracing,
        }),
        Err(_) => {
            let radius = 1.5 * center.distance(&start);
            let target = super::periodic::fold_rotation(orbit.winding as f64 / ell as f64);
            let (s_outer, s_inner) = bracketing_areas(map, center, target, radius, 1000)?;
            Ok(SeparatrixAreas {
                s_outer,
                s_inner,
                method: SeparatrixMethod::BracketingCurves,
            })
        }
    }
}
