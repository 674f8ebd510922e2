//! Classical analyses with stage-tagged failures, shared by the CLI and
//! the overlay.

use crate::sweep::{RatInputs, RatSpec};
use pendulum_core::classical::{
    extract_resonance, island_area, island_center_and_frequency, AreaSettings, ExtractionSettings, IslandCenter,
    IslandData, ResonanceData, SeparatrixAreas, StrobeMap,
};
use pendulum_core::model::angle_difference;
use pendulum_core::{Error, PhaseSpacePoint, SystemParams};
use serde::{Deserialize, Serialize};

/// Integration steps per period of the classical map.
pub const CLASSICAL_STEPS: usize = 256;
/// Momentum guess for the Newton search of the upper island centre.
pub const CENTER_HINT: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("[{stage}] {source}")]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

fn at(stage: &'static str) -> impl Fn(Error) -> StageError {
    move |source| StageError { stage, source }
}

pub fn strobe_map(gamma: f64) -> Result<StrobeMap, StageError> {
    Ok(StrobeMap::new(SystemParams::classical(gamma).map_err(at("parameters"))?, CLASSICAL_STEPS))
}

pub fn island_center(map: &StrobeMap) -> Result<IslandCenter, StageError> {
    island_center_and_frequency(map, CENTER_HINT).map_err(at("center"))
}

pub fn island(gamma: f64) -> Result<(IslandCenter, IslandData), StageError> {
    let map = strobe_map(gamma)?;
    let center = island_center(&map)?;
    let data = island_area(&map, &center.center, &AreaSettings::default()).map_err(at("area"))?;
    Ok((center, data))
}

/// Everything reported about one resonance chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub gamma: f64,
    pub center: PhaseSpacePoint,
    pub omega0: f64,
    pub data: ResonanceData,
    pub stable_anchor: PhaseSpacePoint,
    pub unstable_anchor: PhaseSpacePoint,
    pub stable_trace: f64,
    pub unstable_trace: f64,
    /// Distinct points visited by the stable chain orbit in ℓ periods.
    pub chain_points: usize,
    pub separatrices: SeparatrixAreas,
}

fn extraction_stage(e: &Error) -> &'static str {
    match e {
        Error::NoIsland(_) | Error::InvalidParameter(_) => "profile",
        Error::NoConvergence { .. } | Error::SingularJacobian(_) => "chain",
        Error::ManifoldEscape | Error::GridTooCoarse => "separatrices",
        _ => "parameters",
    }
}

fn distinct_points(map: &StrobeMap, seed: &PhaseSpacePoint, n: usize) -> usize {
    let pts = map.orbit(seed, n.saturating_sub(1));
    let mut kept: Vec<PhaseSpacePoint> = Vec::new();
    for p in pts {
        if kept.iter().all(|k| (k.p - p.p).abs() + angle_difference(k.q, p.q).abs() > 1e-6) {
            kept.push(p);
        }
    }
    kept.len()
}

pub fn resonance(gamma: f64, s: usize, ell: usize) -> Result<ResonanceReport, StageError> {
    let map = strobe_map(gamma)?;
    let center = island_center(&map)?;
    let ex = extract_resonance(&map, &center.center, s, ell, &ExtractionSettings::default())
        .map_err(|e| StageError { stage: extraction_stage(&e), source: e })?;
    Ok(ResonanceReport {
        gamma,
        center: center.center,
        omega0: center.omega0,
        chain_points: distinct_points(&map, &ex.stable.anchor, ell),
        data: ex.data,
        stable_anchor: ex.stable.anchor,
        unstable_anchor: ex.unstable.anchor,
        stable_trace: ex.stable.trace,
        unstable_trace: ex.unstable.trace,
        separatrices: ex.separatrices,
    })
}

/// Classical inputs of the overlay for the given chains.
pub fn rat_inputs(
    gamma: f64,
    chains: &[(usize, usize)],
    omega_pn: f64,
) -> Result<(RatInputs, Vec<ResonanceReport>, IslandData), StageError> {
    let (_, island) = island(gamma)?;
    let reports = chains.iter().map(|&(s, l)| resonance(gamma, s, l)).collect::<Result<Vec<_>, _>>()?;
    let spec = match reports.as_slice() {
        [one] => RatSpec::Single(one.data.clone()),
        [a, b] => {
            let (inner, outer) = if a.data.i0 <= b.data.i0 { (a, b) } else { (b, a) };
            RatSpec::TwoStage { inner: inner.data.clone(), outer: outer.data.clone() }
        }
        _ => {
            return Err(StageError { stage: "overlay", source: Error::InvalidParameter("one or two chains are supported") })
        }
    };
    let inputs = RatInputs { spec, i_c: island.i_c, area: island.area_a, omega_pn };
    Ok((inputs, reports, island))
}
