//! Effective-pendulum parameters of an s:ℓ resonance,
//! H = (I − I₀)²/(2m₀) + 2V₀ cos(ℓθ), from classical data.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;


use super::island::{action_at_frequency, rotation_profile, ProfileSample};
use super::periodic::{find_chain_orbits, fold_rotation, PeriodicOrbit};
use super::separatrix::{separatrix_areas, SeparatrixAreas, TracingSettings};
use super::StrobeMap;
use crate::error::{Error, Result};
use crate::model::{PhaseSpacePoint, TAU};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResonanceData {
    pub s: usize,
    pub ell: usize,
    pub s_outer: f64,
    pub s_inner: f64,
    pub i0: f64,
    pub m0: f64,
    pub v0: f64,
    pub trace_stable: f64,
    /// Small-oscillation frequency of the chain cells, ℓ√(2V₀/m₀).
    pub omega_res: f64,
    /// Number of full turns added to the principal arccos branch.
    pub branch: i64,
}

/// Solve 16√(2m₀V₀) = S_outer − S_inner together with
/// ω_res ℓ τ = ±arccos(tr/2) + 2πk, ω_res = ℓ√(2V₀/m₀).
///
/// The branch is the one whose ω_res lies closest to `omega_hint`; without a
/// hint the principal value is used.
pub fn resonance_parameters(
    s_outer: f64,
    s_inner: f64,
    trace_stable: f64,
    s: usize,
    ell: usize,
    tau: f64,
    omega_hint: Option<f64>,
) -> Result<ResonanceData> {
    crate::error::ensure_finite(&[s_outer, s_inner, trace_stable, tau], "resonance_parameters")?;
    if !(trace_stable.abs() < 2.0) {
        return Err(Error::TraceOutOfDomain(trace_stable));
    }
    if ell == 0 || tau <= 0.0 {
        return Err(Error::InvalidParameter("ell and tau must be positive"));
    }
    if !(s_outer > s_inner && s_inner > 0.0) {
        return Err(Error::InvalidParameter("separatrix areas must satisfy S_outer > S_inner > 0"));
    }
    let l = ell as f64;
    let base = (0.5 * trace_stable).acos();
    let phase_to_omega = |phase: f64| phase / (l * tau);
    let (omega_res, branch) = match omega_hint {
        None => (phase_to_omega(base), 0),
        Some(hint) => {
            let k_center = (hint * l * tau / TAU).round() as i64;
            let mut best = (f64::INFINITY, 0i64, f64::NAN);
            for k in (k_center - 2).max(0)..=k_center + 2 {
                for phase in [TAU * k as f64 + base, TAU * k as f64 - base] {
                    if phase <= 0.0 {
                        continue;
                    }
                    let w = phase_to_omega(phase);
                    let miss = (w - hint).abs();
                    if miss < best.0 {
                        best = (miss, k, w);
                    }
                }
            }
            (best.2, best.1)
        }
    };
    let root = (s_outer - s_inner) / 16.0; // √(2m₀V₀)
    let per_cell = omega_res / l; // √(2V₀/m₀)
    let m0 = root / per_cell;
    let v0 = 0.5 * root * per_cell;
    Ok(ResonanceData {
        s,
        ell,
        s_outer,
        s_inner,
        i0: (s_outer + s_inner) / (4.0 * PI),
        m0,
        v0,
        trace_stable,
        omega_res,
        branch,
    })
}

/// Slope dω/dI of the profile near `action`, excluding samples locked to
/// the resonance (|ω − target| < `lock_tol`).
pub fn profile_slope(profile: &[ProfileSample], action: f64, target: f64, lock_tol: f64) -> Option<f64> {
    let mut free: Vec<&ProfileSample> = profile.iter().filter(|s| (s.omega - target).abs() > lock_tol).collect();
    free.sort_by(|a, b| (a.action - action).abs().total_cmp(&(b.action - action).abs()));
    let below: Vec<&&ProfileSample> = free.iter().filter(|s| s.action < action).take(2).collect();
    let above: Vec<&&ProfileSample> = free.iter().filter(|s| s.action > action).take(2).collect();
    let (a, b) = (below.first()?, above.first()?);
    if b.action == a.action {
        return None;
    }
    Some((b.omega - a.omega) / (b.action - a.action))
}

/// Settings of the full extraction pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionSettings {
    pub profile_samples: usize,
    pub profile_iterations: usize,
    /// Largest distance from the center probed by the profile.
    pub max_radius: f64,
    pub newton_guesses: usize,
    pub tracing: TracingSettings,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        Self {
            profile_samples: 80,
            profile_iterations: 600,
            max_radius: 0.7,
            newton_guesses: 0,
            tracing: TracingSettings::default(),
        }
    }
}

/// Intermediate and final products of a resonance extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceExtraction {
    pub data: ResonanceData,
    pub stable: PeriodicOrbit,
    pub unstable: PeriodicOrbit,
    pub separatrices: SeparatrixAreas,
    pub profile: Vec<ProfileSample>,
}

/// Island center → rotation profile → chain orbits → separatrices →
/// pendulum parameters for the s:ℓ chain around `center`.
pub fn extract_resonance(
    map: &StrobeMap,
    center: &PhaseSpacePoint,
    s: usize,
    ell: usize,
    settings: &ExtractionSettings,
) -> Result<ResonanceExtraction> {
    if s == 0 || ell < 2 || 2 * s > ell {
        return Err(Error::InvalidParameter("need 0 < s ≤ ℓ/2"));
    }
    let target = s as f64 / ell as f64;
    let profile = rotation_profile(
        map,
        center,
        settings.profile_samples,
        settings.max_radius,
        settings.profile_iterations,
    );
    let action = action_at_frequency(&profile, target).ok_or(Error::NoIsland("resonance not inside the island"))?;
    let radius = profile
        .windows(2)
        .find_map(|w| {
            ((w[0].action - action) * (w[1].action - action) <= 0.0).then(|| 0.5 * (w[0].radius + w[1].radius))
        })
        .unwrap_or(settings.max_radius);
    // q-extent of the invariant curve at that radius sets the ellipse aspect
    let aspect = {
        let seed = PhaseSpacePoint::new(center.p - radius, center.q);
        let pts = map.orbit(&seed, 200);
        let q_extent = pts
            .iter()
            .map(|x| crate::model::angle_difference(x.q, center.q).abs())
            .fold(0.0, f64::max);
        (q_extent / radius).clamp(0.2, 5.0)
    };
    let n_guesses = if settings.newton_guesses > 0 { settings.newton_guesses } else { 6 * ell };
    let mut stable = None;
    let mut unstable = None;
    for scale in [1.0, 0.97, 1.03, 0.93, 1.07] {
        let r = radius * scale;
        for orbit in find_chain_orbits(map, center, ell, r, r * aspect, n_guesses) {
            if orbit.winding as usize != s {
                continue;
            }
            if orbit.is_stable() && stable.is_none() {
                stable = Some(orbit);
            } else if orbit.is_unstable() && unstable.is_none() {
                unstable = Some(orbit);
            }
        }
        if stable.is_some() && unstable.is_some() {
            break;
        }
    }
    let stable = stable.ok_or(Error::NoConvergence { iterations: 0, residual: f64::NAN })?;
    let unstable = unstable.ok_or(Error::NoConvergence { iterations: 0, residual: f64::NAN })?;
    let separatrices = separatrix_areas(map, center, &unstable, &settings.tracing)?;
    let delta_s = separatrices.s_outer - separatrices.s_inner;
    let i0 = (separatrices.s_outer + separatrices.s_inner) / (4.0 * PI);
    let hint = profile_slope(&profile, i0, target, 1e-3).map(|slope| ell as f64 * delta_s / 16.0 * slope.abs());
    let data = resonance_parameters(
        separatrices.s_outer,
        separatrices.s_inner,
        stable.trace,
        s,
        ell,
        TAU,
        hint,
    )?;
    Ok(ResonanceExtraction {
        data,
        stable,
        unstable,
        separatrices,
        profile,
    })
}

/// Folded rotation frequency of an s:ℓ chain.
pub fn chain_frequency(s: usize, ell: usize) -> f64 {
    fold_rotation(s as f64 / ell as f64)
}
