//! Island geometry: the central period-one orbit, the regular area around
//! it and the rotation-number profile along a ray.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;


use super::periodic::{find_periodic_orbit, fold_rotation, PeriodicOrbit};
use super::{classify_orbit, rotation_number, star_polygon_area, ClassifierSettings, OrbitClass, StrobeMap};
use crate::error::{Error, Result};
use crate::model::{angle_difference, PhaseSpacePoint, TAU};

/// Central orbit of a regular island and its small-oscillation frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct IslandCenter {
    pub center: PhaseSpacePoint,
    pub orbit: PeriodicOrbit,
    /// arccos(tr/2)/τ, in radians per unit time.
    pub omega0: f64,
}

/// Island center, area and chaos-border action.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IslandData {
    pub center: PhaseSpacePoint,
    pub area_a: f64,
    /// Always `area_a / 2π`.
    pub i_c: f64,
    pub omega0_center: f64,
    pub cells_inside: usize,
    pub cell_area: f64,
}

/// Find the stable period-one orbit near (p_hint, 0).
pub fn island_center_and_frequency(map: &StrobeMap, p_hint: f64) -> Result<IslandCenter> {
    let orbit = find_periodic_orbit(map, &PhaseSpacePoint::new(p_hint, 0.0), 1, None)?;
    if !orbit.is_stable() {
        return Err(Error::NoIsland("central orbit is not elliptic"));
    }
    if (orbit.trace - 2.0).abs() < 1e-9 {
        return Err(Error::NoIsland("central orbit is parabolic"));
    }
    let omega0 = (0.5 * orbit.trace).acos() / TAU;
    Ok(IslandCenter {
        center: orbit.anchor,
        orbit,
        omega0,
    })
}

/// Grid and classifier settings for [`island_area`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaSettings {
    /// Cells along q, spanning the full circle.
    pub cells_q: usize,
    /// Cells along p, spanning center.p ± half_height.
    pub cells_p: usize,
    pub half_height: f64,
    pub classifier: ClassifierSettings,
    /// Integration steps per period used for the grid scan.
    pub steps_per_period: usize,
    /// Largest angular gap (about the center) an orbit may leave and still
    /// count as encircling it.
    pub max_angle_gap: f64,
}

impl Default for AreaSettings {
    fn default() -> Self {
        Self {
            cells_q: 128,
            cells_p: 64,
            half_height: 0.9,
            classifier: ClassifierSettings {
                n_iter: 1000,
                ..ClassifierSettings::default()
            },
            steps_per_period: 64,
            max_angle_gap: core::f64::consts::FRAC_PI_2,
        }
    }
}

/// Largest gap between the polar angles of the points about `center`.
fn max_angle_gap(points: &[PhaseSpacePoint], center: &PhaseSpacePoint) -> f64 {
    let mut angles: Vec<f64> = points
        .iter()
        .map(|x| (x.p - center.p).atan2(angle_difference(x.q, center.q)))
        .collect();
    if angles.len() < 2 {
        return TAU;
    }
    angles.sort_by(f64::total_cmp);
    let mut gap = angles[0] + TAU - angles[angles.len() - 1];
    for w in angles.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap
}

/// Phase-space area of the island around `center`.
///
/// A cell belongs to the island's interior candidate set when its orbit is
/// regular and winds around the center. The exterior is flood-filled from
/// the two p-edges of the grid through all other cells; the island is the
/// connected component of the remaining cells that contains the center.
/// Interior chaotic layers and sub-island chains therefore stay inside.
pub fn island_area(map: &StrobeMap, center: &PhaseSpacePoint, settings: &AreaSettings) -> Result<IslandData> {
    let (nq, np) = (settings.cells_q, settings.cells_p);
    if nq < 4 || np < 4 || settings.half_height <= 0.0 {
        return Err(Error::InvalidParameter("area grid too small"));
    }
    let scan = StrobeMap::new(*map.params(), settings.steps_per_period);
    let dq = TAU / nq as f64;
    let dp = 2.0 * settings.half_height / np as f64;
    let cell_center = |i: usize, j: usize| {
        PhaseSpacePoint::new(
            center.p - settings.half_height + (j as f64 + 0.5) * dp,
            center.q - core::f64::consts::PI + (i as f64 + 0.5) * dq,
        )
    };
    let idx = |i: usize, j: usize| j * nq + i;

    // exterior flood fill; island cells are classified only when reached
    let mut state = vec![0u8; nq * np]; // 0 unknown, 1 exterior, 2 island wall
    let mut queue = VecDeque::new();
    for i in 0..nq {
        for j in [0, np - 1] {
            queue.push_back((i, j));
        }
    }
    let mut points = Vec::with_capacity(settings.classifier.n_iter + 1);
    while let Some((i, j)) = queue.pop_front() {
        let k = idx(i, j);
        if state[k] != 0 {
            continue;
        }
        points.clear();
        let x = cell_center(i, j);
        let class = classify_orbit(&scan, &x, &settings.classifier, Some(&mut points));
        let encircles = class == OrbitClass::Regular && max_angle_gap(&points, center) < settings.max_angle_gap;
        if encircles {
            state[k] = 2;
            continue;
        }
        state[k] = 1;
        let left = (i + nq - 1) % nq;
        let right = (i + 1) % nq;
        for (a, b) in [(left, j), (right, j)] {
            if state[idx(a, b)] == 0 {
                queue.push_back((a, b));
            }
        }
        if j > 0 && state[idx(i, j - 1)] == 0 {
            queue.push_back((i, j - 1));
        }
        if j + 1 < np && state[idx(i, j + 1)] == 0 {
            queue.push_back((i, j + 1));
        }
    }

    // component of non-exterior cells containing the center
    let ci = nq / 2;
    let cj = np / 2;
    let start = [(ci, cj), (ci - 1, cj), (ci, cj - 1), (ci - 1, cj - 1)]
        .into_iter()
        .find(|&(i, j)| state[idx(i, j)] != 1)
        .ok_or(Error::NoIsland("center cell is connected to the exterior"))?;
    let mut inside = vec![false; nq * np];
    let mut stack = vec![start];
    let mut count = 0usize;
    let mut touches_edge = false;
    while let Some((i, j)) = stack.pop() {
        let k = idx(i, j);
        if inside[k] || state[k] == 1 {
            continue;
        }
        inside[k] = true;
        count += 1;
        if j == 0 || j + 1 == np {
            touches_edge = true;
        }
        let left = (i + nq - 1) % nq;
        let right = (i + 1) % nq;
        stack.push((left, j));
        stack.push((right, j));
        if j > 0 {
            stack.push((i, j - 1));
        }
        if j + 1 < np {
            stack.push((i, j + 1));
        }
    }
    if touches_edge {
        return Err(Error::GridTooCoarse);
    }
    let cell_area = dq * dp;
    let area_a = count as f64 * cell_area;
    let omega0_center = island_center_and_frequency(map, center.p)
        .map(|c| c.omega0)
        .unwrap_or(f64::NAN);
    Ok(IslandData {
        center: *center,
        area_a,
        i_c: area_a / TAU,
        omega0_center,
        cells_inside: count,
        cell_area,
    })
}

/// One seed of a rotation profile.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProfileSample {
    /// Distance of the seed from the center along the ray.
    pub radius: f64,
    /// Enclosed action, loop area / 2π.
    pub action: f64,
    /// Rotation frequency about the center, folded into [0, 1/2] turns per
    /// period (radians per unit time for τ = 2π).
    pub omega: f64,
    /// Unfolded rotation number in [0, 1).
    pub rho: f64,
}

/// Rotation frequency and enclosed action of stroboscopic orbits seeded at
/// p = center.p − r on the symmetry line, r = max_radius·k/n_samples.
/// Seeds that are not regular are skipped.
pub fn rotation_profile(
    map: &StrobeMap,
    center: &PhaseSpacePoint,
    n_samples: usize,
    max_radius: f64,
    n_iter: usize,
) -> Vec<ProfileSample> {
    let settings = ClassifierSettings {
        n_iter: n_iter.max(400),
        ..ClassifierSettings::default()
    };
    let mut out = Vec::with_capacity(n_samples);
    let mut points = Vec::with_capacity(settings.n_iter + 1);
    for k in 1..=n_samples {
        let radius = max_radius * k as f64 / n_samples as f64;
        let seed = PhaseSpacePoint::new(center.p - radius, center.q);
        points.clear();
        if classify_orbit(map, &seed, &settings, Some(&mut points)) != OrbitClass::Regular {
            continue;
        }
        let rho = rotation_number(&points, center);
        out.push(ProfileSample {
            radius,
            action: star_polygon_area(&points, center) / TAU,
            omega: fold_rotation(rho),
            rho,
        });
    }
    out
}

/// Action at which the profile first crosses the folded frequency `omega`,
/// by linear interpolation between neighbouring samples.
pub fn action_at_frequency(profile: &[ProfileSample], omega: f64) -> Option<f64> {
    profile.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if (a.omega - omega) * (b.omega - omega) <= 0.0 && a.omega != b.omega {
            let t = (omega - a.omega) / (b.omega - a.omega);
            Some(a.action + t * (b.action - a.action))
        } else {
            None
        }
    })
}

/// Frequency of the profile at action `action`, linearly interpolated.
pub fn frequency_at_action(profile: &[ProfileSample], action: f64) -> Option<f64> {
    profile.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if (a.action - action) * (b.action - action) <= 0.0 && a.action != b.action {
            let t = (action - a.action) / (b.action - a.action);
            Some(a.omega + t * (b.omega - a.omega))
        } else {
            None
        }
    })
}
