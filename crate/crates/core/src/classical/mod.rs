//! Classical stroboscopic dynamics: Poincaré sections, periodic orbits,
//! island geometry and the parameters of nonlinear resonance chains.

pub mod integrator;
pub mod island;
pub mod periodic;
pub mod resonance;
pub mod separatrix;

use alloc::vec::Vec;
use num_traits::Float;


pub use integrator::{Jacobian, SplittingIntegrator, DEFAULT_STEPS_PER_PERIOD};
pub use island::{
    island_area, island_center_and_frequency, rotation_profile, AreaSettings, IslandCenter, IslandData,
    ProfileSample,
};
pub use resonance::{extract_resonance, resonance_parameters, ExtractionSettings, ResonanceData, ResonanceExtraction};
pub use separatrix::{separatrix_areas, PlanarMap, SeparatrixAreas, SeparatrixMethod, TracingSettings};
pub use periodic::{find_chain_orbits, find_periodic_orbit, PeriodicOrbit};

use crate::error::Result;
use crate::model::{wrap_angle, PhaseSpacePoint, SystemParams, TAU};

/// Stroboscopic map x(t = 0) ↦ x(t = τ).
#[derive(Debug, Clone)]
pub struct StrobeMap {
    integrator: SplittingIntegrator,
}

impl StrobeMap {
    pub fn new(params: SystemParams, steps_per_period: usize) -> Self {
        Self {
            integrator: SplittingIntegrator::new(params, steps_per_period),
        }
    }

    /// Step count doubled from the default until one period changes by less
    /// than `tol` at a handful of probe points spread over both islands and
    /// the chaotic sea.
    pub fn calibrated(params: SystemParams, tol: f64) -> Self {
        let probes = [
            PhaseSpacePoint::new(1.2, 0.0),
            PhaseSpacePoint::new(-1.2, 0.0),
            PhaseSpacePoint::new(0.0, 3.0),
            PhaseSpacePoint::new(1.6, 1.0),
            PhaseSpacePoint::new(0.5, -2.0),
        ];
        let steps = integrator::calibrate_steps(&params, &probes, tol, 1 << 14);
        Self::new(params, steps)
    }

    pub fn params(&self) -> &SystemParams {
        self.integrator.params()
    }

    pub fn steps_per_period(&self) -> usize {
        self.integrator.steps_per_period()
    }

    pub fn integrator(&self) -> &SplittingIntegrator {
        &self.integrator
    }

    pub fn apply(&self, x: &PhaseSpacePoint) -> PhaseSpacePoint {
        let (p, q) = self.integrator.period(x.p, x.q);
        PhaseSpacePoint::new(p, q)
    }

    /// `n`-fold map with its Jacobian and the net angle advance (unwrapped q
    /// displacement) of the continuous trajectory.
    pub fn iterate_with_jacobian(&self, x: &PhaseSpacePoint, n: usize) -> (PhaseSpacePoint, Jacobian, f64) {
        let (mut p, mut q) = (x.p, x.q);
        let mut jac = integrator::IDENTITY;
        let mut advance = 0.0;
        for _ in 0..n {
            let ((p1, q1), j) = self.integrator.period_with_jacobian(p, q);
            jac = integrator::mat_mul(&j, &jac);
            advance += q1 - q;
            p = p1;
            q = wrap_angle(q1);
        }
        (PhaseSpacePoint::new(p, q), jac, advance)
    }

    pub fn iterate(&self, x: &PhaseSpacePoint, n: usize) -> PhaseSpacePoint {
        let (mut p, mut q) = (x.p, x.q);
        for _ in 0..n {
            let (p1, q1) = self.integrator.period(p, q);
            p = p1;
            q = wrap_angle(q1);
        }
        PhaseSpacePoint::new(p, q)
    }

    pub fn orbit(&self, seed: &PhaseSpacePoint, n: usize) -> Vec<PhaseSpacePoint> {
        let mut out = Vec::with_capacity(n + 1);
        let mut x = *seed;
        out.push(x);
        for _ in 0..n {
            x = self.apply(&x);
            out.push(x);
        }
        out
    }
}

/// One period of the stroboscopic map with the default integrator.
pub fn strobe_map(params: &SystemParams, x: &PhaseSpacePoint) -> Result<PhaseSpacePoint> {
    crate::error::ensure_finite(&[x.p, x.q], "strobe_map")?;
    Ok(StrobeMap::new(*params, DEFAULT_STEPS_PER_PERIOD).apply(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrbitClass {
    Regular,
    Chaotic,
    Escaped,
}

impl OrbitClass {
    pub fn as_str(self) -> &'static str {
        match self {
            OrbitClass::Regular => "regular",
            OrbitClass::Chaotic => "chaotic",
            OrbitClass::Escaped => "escaped",
        }
    }
}

/// Finite-time divergence test. A seed is chaotic when an infinitesimal
/// separation grows by more than `growth_threshold` within `n_iter` periods
/// (1e-9 → 1e-3 by default), escaped when |p| exceeds `p_escape`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierSettings {
    pub n_iter: usize,
    pub growth_threshold: f64,
    pub p_escape: f64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        Self {
            n_iter: 2000,
            growth_threshold: 1e6,
            p_escape: 4.0,
        }
    }
}

/// Classify a seed, optionally collecting its stroboscopic points. Iteration
/// stops as soon as the class is decided.
pub fn classify_orbit(
    map: &StrobeMap,
    seed: &PhaseSpacePoint,
    settings: &ClassifierSettings,
    mut points: Option<&mut Vec<PhaseSpacePoint>>,
) -> OrbitClass {
    let log_threshold = settings.growth_threshold.ln();
    let (mut p, mut q) = (seed.p, seed.q);
    let mut v = [core::f64::consts::FRAC_1_SQRT_2; 2];
    let mut log_growth = 0.0;
    let mut class = OrbitClass::Regular;
    if let Some(pts) = points.as_deref_mut() {
        pts.push(*seed);
    }
    for _ in 0..settings.n_iter {
        let ((p1, q1), v1) = map.integrator().period_with_tangent(p, q, v);
        p = p1;
        q = wrap_angle(q1);
        let norm = (v1[0] * v1[0] + v1[1] * v1[1]).sqrt();
        log_growth += norm.ln();
        v = [v1[0] / norm, v1[1] / norm];
        if let Some(pts) = points.as_deref_mut() {
            pts.push(PhaseSpacePoint { p, q });
        }
        if !p.is_finite() || p.abs() > settings.p_escape {
            class = OrbitClass::Escaped;
            break;
        }
        if log_growth > log_threshold {
            class = OrbitClass::Chaotic;
            break;
        }
    }
    class
}

#[derive(Debug, Clone, PartialEq)]
pub struct StroboscopicOrbit {
    pub seed: PhaseSpacePoint,
    pub points: Vec<PhaseSpacePoint>,
    pub classification: OrbitClass,
}

/// Iterate every seed `n_iter` times and classify the resulting orbits.
pub fn poincare_section(
    map: &StrobeMap,
    seeds: &[PhaseSpacePoint],
    n_iter: usize,
    p_escape: f64,
) -> Vec<StroboscopicOrbit> {
    let settings = ClassifierSettings {
        n_iter: n_iter.max(1),
        p_escape,
        ..ClassifierSettings::default()
    };
    seeds
        .iter()
        .map(|seed| {
            let mut points = Vec::with_capacity(settings.n_iter + 1);
            let classification = classify_orbit(map, seed, &settings, Some(&mut points));
            if classification == OrbitClass::Chaotic {
                let mut x = *points.last().unwrap_or(seed);
                while points.len() <= settings.n_iter && x.p.abs() <= p_escape {
                    x = map.apply(&x);
                    points.push(x);
                }
            }
            StroboscopicOrbit {
                seed: *seed,
                points,
                classification,
            }
        })
        .collect()
}

/// Phase-space area enclosed by a closed polygon (shoelace).
pub fn polygon_area(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let (x0, y0) = points[i];
        let (x1, y1) = points[(i + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    0.5 * twice.abs()
}

/// Area enclosed by a star-shaped cloud of points around `center`: the
/// points are sorted by polar angle and joined into a polygon.
pub fn star_polygon_area(points: &[PhaseSpacePoint], center: &PhaseSpacePoint) -> f64 {
    let mut rel: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|x| {
            let dq = crate::model::angle_difference(x.q, center.q);
            let dp = x.p - center.p;
            (dp.atan2(dq), dq, dp)
        })
        .collect();
    rel.sort_by(|a, b| a.0.total_cmp(&b.0));
    let poly: Vec<(f64, f64)> = rel.iter().map(|r| (r.1, r.2)).collect();
    polygon_area(&poly)
}

/// Rotation number ρ ∈ [0, 1) of an orbit around `center`: mean angle
/// increment per iteration, each increment taken in [0, 2π).
pub fn rotation_number(points: &[PhaseSpacePoint], center: &PhaseSpacePoint) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let angle = |x: &PhaseSpacePoint| {
        (x.p - center.p).atan2(crate::model::angle_difference(x.q, center.q))
    };
    let mut total = 0.0;
    let mut prev = angle(&points[0]);
    for x in &points[1..] {
        let a = angle(x);
        let mut d = (a - prev) % TAU;
        if d < 0.0 {
            d += TAU;
        }
        total += d;
        prev = a;
    }
    total / (TAU * (points.len() - 1) as f64)
}
