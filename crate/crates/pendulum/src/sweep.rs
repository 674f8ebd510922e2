//! Parameter sweeps over 1/ħ at fixed coupling.
//!
//! Every grid point is analysed independently (basis, propagator, spectrum,
//! probe, doublet) and results are merged in grid order, so the output does
//! not depend on scheduling.

use pendulum_core::classical::{island_center_and_frequency, StrobeMap};
use pendulum_core::floquet::{
    circle_offset, convergence_audit, floquet_spectrum, ConvergenceReport, FloquetSpectrum, MomentumBasis, Parity,
    PropagatorSettings, SplitScheme, DEFAULT_QUANTUM_STEPS, MIN_QUANTUM_STEPS,
};
use pendulum_core::phase_space::{
    coherent_vector, overlaps, pair_doublets, select_doublet, select_doublet_from, CoherentState, DoubletRecord,
};
use pendulum_core::rat::{pn_estimate, predict_single, predict_two_stage, Mechanism, RatPrediction};
use pendulum_core::classical::ResonanceData;
use pendulum_core::{PhaseSpacePoint, SystemParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Two members of a level pair closer than this fraction of ħ count as a doublet.
pub const DOUBLET_GAP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

mod scheme_name {
    use pendulum_core::floquet::SplitScheme;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &SplitScheme, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(s.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<SplitScheme, D::Error> {
        let name = String::deserialize(de)?;
        SplitScheme::parse(&name).ok_or_else(|| serde::de::Error::custom(format!("unknown scheme `{name}`")))
    }
}

/// Everything that determines a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma: f64,
    pub inv_hbar_min: f64,
    pub inv_hbar_max: f64,
    /// Linear grid including both ends.
    pub count: usize,
    pub sigma_filter: f64,
    /// Basis covers |p| ≤ p_bound.
    pub p_bound: f64,
    pub steps_per_period: usize,
    #[serde(with = "scheme_name")]
    pub scheme: SplitScheme,
    /// Probe centre override; the classical island centre when absent.
    pub probe_p: Option<f64>,
    pub probe_q: Option<f64>,
    /// Run the convergence audit at every point.
    pub audit: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gamma: 0.72,
            inv_hbar_min: 5.0,
            inv_hbar_max: 45.0,
            count: 200,
            sigma_filter: 7e-3,
            p_bound: 4.0,
            steps_per_period: DEFAULT_QUANTUM_STEPS,
            scheme: SplitScheme::Order4,
            probe_p: None,
            probe_q: None,
            audit: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(invalid(format!("gamma must be finite and non-negative, got {}", self.gamma)));
        }
        if !(self.inv_hbar_min.is_finite() && self.inv_hbar_min > 0.0 && self.inv_hbar_max.is_finite()) {
            return Err(invalid("inverse-hbar range must be finite and positive"));
        }
        if self.count == 0 {
            return Err(invalid("grid needs at least one point"));
        }
        if self.count > 1 && self.inv_hbar_max <= self.inv_hbar_min {
            return Err(invalid("inverse-hbar grid must be strictly increasing"));
        }
        if !(self.sigma_filter > 0.0 && self.sigma_filter < 1.0) {
            return Err(invalid(format!("sigma filter must lie in (0, 1), got {}", self.sigma_filter)));
        }
        if !(self.p_bound.is_finite() && self.p_bound > 0.0) {
            return Err(invalid("p-bound must be positive"));
        }
        if self.steps_per_period < MIN_QUANTUM_STEPS {
            return Err(invalid(format!("at least {MIN_QUANTUM_STEPS} steps per period are required")));
        }
        if self.probe_p.is_some() != self.probe_q.is_some() {
            return Err(invalid("probe override needs both p and q"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.inv_hbar_min];
        }
        let step = (self.inv_hbar_max - self.inv_hbar_min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.inv_hbar_max } else { self.inv_hbar_min + step * i as f64 })
            .collect()
    }

    pub fn settings(&self) -> PropagatorSettings {
        PropagatorSettings { steps_per_period: self.steps_per_period, scheme: self.scheme }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSource {
    Override,
    /// Stable period-one orbit of the classical map.
    Classical,
    /// p = 1, q = 0: centre of the unperturbed resonance, used when no island exists.
    Unperturbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub p: f64,
    pub q: f64,
    pub source: ProbeSource,
}

impl Probe {
    pub fn point(&self) -> PhaseSpacePoint {
        PhaseSpacePoint::new(self.p, self.q)
    }
}

pub fn resolve_probe(config: &SweepConfig) -> Probe {
    if let (Some(p), Some(q)) = (config.probe_p, config.probe_q) {
        return Probe { p, q, source: ProbeSource::Override };
    }
    let center = SystemParams::classical(config.gamma)
        .ok()
        .and_then(|params| island_center_and_frequency(&StrobeMap::new(params, 256), 1.1).ok());
    match center {
        Some(c) => Probe { p: c.center.p, q: c.center.q, source: ProbeSource::Classical },
        None => Probe { p: 1.0, q: 0.0, source: ProbeSource::Unperturbed },
    }
}

/// One row of a splitting curve. Failed points carry NaN values and the message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingRecord {
    pub index: usize,
    pub inv_hbar: f64,
    pub hbar: f64,
    pub n_max: usize,
    pub steps_per_period: usize,
    pub delta_eps0: f64,
    pub eps_plus: f64,
    pub eps_minus: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub sigma_third: f64,
    /// States with σ ≥ σ_filter.
    pub retained: usize,
    pub labelled: bool,
    pub ambiguous: bool,
    pub audited: bool,
    pub certified: bool,
    pub drift: f64,
    pub error: String,
}

impl SplittingRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_empty()
    }

    /// Certified, unambiguous and error-free.
    pub fn is_clean(&self) -> bool {
        self.is_ok() && self.certified && !self.ambiguous
    }
}

/// A state kept by the overlap filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub state: usize,
    /// ε_m − ε₀ on the quasienergy circle, in (−ħ/2, ħ/2].
    pub relative: f64,
    pub sigma: f64,
    pub parity: Option<Parity>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelDynamicsRecord {
    pub index: usize,
    pub inv_hbar: f64,
    pub levels: Vec<LevelEntry>,
    /// Near-degenerate pairs among the retained states, the tunnelling pair included.
    pub doublets: Vec<LevelDoublet>,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelDoublet {
    pub relative: f64,
    pub delta: f64,
    pub sigma: f64,
}

/// Full analysis of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointAnalysis {
    pub splitting: SplittingRecord,
    pub levels: LevelDynamicsRecord,
    pub audit: Option<ConvergenceReport>,
}

fn failed_point(index: usize, inv_hbar: f64, config: &SweepConfig, err: String) -> PointAnalysis {
    let nan = f64::NAN;
    let n_max = MomentumBasis::for_bound(1.0 / inv_hbar, config.p_bound).map(|b| b.n_max).unwrap_or(0);
    PointAnalysis {
        splitting: SplittingRecord {
            index,
            inv_hbar,
            hbar: 1.0 / inv_hbar,
            n_max,
            steps_per_period: config.steps_per_period,
            delta_eps0: nan,
            eps_plus: nan,
            eps_minus: nan,
            sigma_plus: nan,
            sigma_minus: nan,
            sigma_third: nan,
            retained: 0,
            labelled: false,
            ambiguous: false,
            audited: false,
            certified: false,
            drift: nan,
            error: err.clone(),
        },
        levels: LevelDynamicsRecord { index, inv_hbar, levels: Vec::new(), doublets: Vec::new(), error: err },
        audit: None,
    }
}

fn doublet_of(spectrum: &FloquetSpectrum, probe: &PhaseSpacePoint) -> pendulum_core::Result<DoubletRecord> {
    select_doublet(spectrum, &CoherentState::new(probe.p, probe.q, spectrum.hbar))
}

fn analyze(config: &SweepConfig, probe: &Probe, index: usize, inv_hbar: f64) -> pendulum_core::Result<PointAnalysis> {
    let hbar = 1.0 / inv_hbar;
    let params = SystemParams::symmetric(config.gamma, hbar)?;
    let basis = MomentumBasis::for_bound(hbar, config.p_bound)?;
    let settings = config.settings();
    let spectrum = floquet_spectrum(&params, &basis, &settings)?;
    let z = coherent_vector(&basis, &CoherentState::new(probe.p, probe.q, hbar))?;
    let sigma = overlaps(&spectrum, &z)?;
    let doublet = select_doublet_from(&spectrum, &z, &sigma)?;
    let audit = if config.audit {
        let point = probe.point();
        Some(convergence_audit(&params, &basis, &settings, Some(doublet.delta), |s| {
            doublet_of(s, &point).map(|d| d.delta)
        })?)
    } else {
        None
    };
    let eps0 = doublet.center(hbar);
    let levels: Vec<LevelEntry> = (0..spectrum.len())
        .filter(|&m| sigma[m] >= config.sigma_filter)
        .map(|m| LevelEntry {
            state: m,
            relative: circle_offset(spectrum.quasienergies[m], eps0, hbar),
            sigma: sigma[m],
            parity: spectrum.parities[m],
        })
        .collect();
    let doublets = pair_doublets(&spectrum, &sigma, config.sigma_filter, DOUBLET_GAP * hbar)
        .into_iter()
        .map(|d| LevelDoublet { relative: circle_offset(d.eps, eps0, hbar), delta: d.delta, sigma: d.sigma })
        .collect();
    let splitting = SplittingRecord {
        index,
        inv_hbar,
        hbar,
        n_max: basis.n_max,
        steps_per_period: settings.steps_per_period,
        delta_eps0: doublet.delta,
        eps_plus: doublet.eps_plus,
        eps_minus: doublet.eps_minus,
        sigma_plus: doublet.sigma_plus,
        sigma_minus: doublet.sigma_minus,
        sigma_third: doublet.sigma_third,
        retained: levels.len(),
        labelled: doublet.labelled,
        ambiguous: doublet.ambiguous,
        audited: audit.is_some(),
        certified: audit.map(|a| a.certified).unwrap_or(false),
        drift: audit.map(|a| a.drift).unwrap_or(f64::NAN),
        error: String::new(),
    };
    Ok(PointAnalysis {
        splitting,
        levels: LevelDynamicsRecord { index, inv_hbar, levels, doublets, error: String::new() },
        audit,
    })
}

/// Analyse one grid point, turning failures into a flagged row.
pub fn analyze_point(config: &SweepConfig, probe: &Probe, index: usize, inv_hbar: f64) -> PointAnalysis {
    analyze(config, probe, index, inv_hbar).unwrap_or_else(|e| failed_point(index, inv_hbar, config, e.to_string()))
}

/// Analyse the whole grid in the current rayon pool, in grid order.
pub fn sweep(config: &SweepConfig) -> Result<(Probe, Vec<PointAnalysis>), ConfigError> {
    config.validate()?;
    let probe = resolve_probe(config);
    let points = config
        .grid()
        .into_par_iter()
        .enumerate()
        .map(|(i, k)| analyze_point(config, &probe, i, k))
        .collect();
    Ok((probe, points))
}

pub fn splitting_sweep(config: &SweepConfig) -> Result<Vec<SplittingRecord>, ConfigError> {
    Ok(sweep(config)?.1.into_iter().map(|p| p.splitting).collect())
}

pub fn level_dynamics(config: &SweepConfig) -> Result<Vec<LevelDynamicsRecord>, ConfigError> {
    Ok(sweep(config)?.1.into_iter().map(|p| p.levels).collect())
}

/// Long-format row of a level-dynamics dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub index: usize,
    pub inv_hbar: f64,
    pub state: Option<usize>,
    pub relative: f64,
    pub relative_over_hbar: f64,
    pub sigma: f64,
    pub parity: Option<String>,
    pub error: String,
}

pub fn level_rows(records: &[LevelDynamicsRecord]) -> Vec<LevelRow> {
    let mut rows = Vec::new();
    for r in records {
        if !r.error.is_empty() {
            rows.push(LevelRow {
                index: r.index,
                inv_hbar: r.inv_hbar,
                state: None,
                relative: f64::NAN,
                relative_over_hbar: f64::NAN,
                sigma: f64::NAN,
                parity: None,
                error: r.error.clone(),
            });
            continue;
        }
        for l in &r.levels {
            rows.push(LevelRow {
                index: r.index,
                inv_hbar: r.inv_hbar,
                state: Some(l.state),
                relative: l.relative,
                relative_over_hbar: l.relative * r.inv_hbar,
                sigma: l.sigma,
                parity: l.parity.map(parity_name),
                error: String::new(),
            });
        }
    }
    rows
}

pub fn parity_name(p: Parity) -> String {
    match p {
        Parity::Even => "even".into(),
        Parity::Odd => "odd".into(),
    }
}

/// Classical inputs of a resonance-assisted prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RatSpec {
    Single(ResonanceData),
    /// Inner chain bridged to the outer one; below the validity threshold the
    /// outer chain acts alone.
    TwoStage { inner: ResonanceData, outer: ResonanceData },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatInputs {
    pub spec: RatSpec,
    /// Island action A/2π.
    pub i_c: f64,
    /// Island area A, for the area-only estimate.
    pub area: f64,
    /// Frequency scale Ω of the area-only estimate.
    pub omega_pn: f64,
}

impl RatInputs {
    pub fn predict(&self, hbar: f64) -> pendulum_core::Result<RatPrediction> {
        match &self.spec {
            RatSpec::Single(r) => predict_single(r, self.i_c, hbar),
            RatSpec::TwoStage { inner, outer } => predict_two_stage(inner, outer, self.i_c, hbar),
        }
    }
}

/// Quantum splitting next to its resonance-assisted and area-only predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRecord {
    pub index: usize,
    pub inv_hbar: f64,
    pub delta_eps0: f64,
    pub certified: bool,
    pub ambiguous: bool,
    pub k_c: usize,
    /// Signed; ±∞ at a pole.
    pub v_eff: f64,
    pub rat_mean: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    /// band_hi / band_lo.
    pub band_ratio: f64,
    pub mechanism: String,
    pub inside_band: bool,
    /// v_eff changed sign since the previous row of the same mechanism.
    pub divergence: bool,
    pub pn: f64,
    pub pn_n: f64,
    pub pn_branch: String,
    pub error: String,
}

pub fn overlay_records(records: &[SplittingRecord], inputs: &RatInputs) -> Vec<OverlayRecord> {
    let mut out: Vec<OverlayRecord> = Vec::with_capacity(records.len());
    let mut previous: Option<(Mechanism, f64)> = None;
    for r in records {
        let mut row = OverlayRecord {
            index: r.index,
            inv_hbar: r.inv_hbar,
            delta_eps0: r.delta_eps0,
            certified: r.certified,
            ambiguous: r.ambiguous,
            k_c: 0,
            v_eff: f64::NAN,
            rat_mean: f64::NAN,
            band_lo: f64::NAN,
            band_hi: f64::NAN,
            band_ratio: f64::NAN,
            mechanism: String::new(),
            inside_band: false,
            divergence: false,
            pn: f64::NAN,
            pn_n: f64::NAN,
            pn_branch: String::new(),
            error: r.error.clone(),
        };
        let mut errors = Vec::new();
        match inputs.predict(r.hbar) {
            Ok(p) => {
                row.k_c = p.k_c;
                row.v_eff = p.v_eff;
                row.rat_mean = p.band.mean;
                row.band_lo = p.band.band_lo;
                row.band_hi = p.band.band_hi;
                row.band_ratio = p.band.band_hi / p.band.band_lo;
                row.mechanism = p.mechanism.as_str().into();
                row.inside_band = r.delta_eps0.is_finite() && p.band.contains(r.delta_eps0);
                if let Some((m, v)) = previous {
                    row.divergence = m == p.mechanism && (v.signum() != p.v_eff.signum() || p.v_eff.is_infinite());
                }
                previous = Some((p.mechanism, p.v_eff));
            }
            Err(e) => {
                errors.push(format!("rat: {e}"));
                previous = None;
            }
        }
        match pn_estimate(inputs.area, r.hbar, inputs.omega_pn) {
            Ok(pn) => {
                row.pn = pn.value;
                row.pn_n = pn.n;
                row.pn_branch = pn.branch.as_str().into();
            }
            Err(e) => errors.push(format!("pn: {e}")),
        }
        if !errors.is_empty() {
            if !row.error.is_empty() {
                errors.insert(0, row.error.clone());
            }
            row.error = errors.join("; ");
        }
        out.push(row);
    }
    out
}

/// Sweep and overlay in one go.
pub fn rat_overlay(config: &SweepConfig, inputs: &RatInputs) -> Result<Vec<OverlayRecord>, ConfigError> {
    Ok(overlay_records(&splitting_sweep(config)?, inputs))
}

/// Geometric mean of the positive finite entries.
pub fn geometric_mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .filter(|v| v.is_finite() && *v > 0.0)
        .fold((0.0, 0usize), |(s, n), v| (s + v.ln(), n + 1));
    (n > 0).then(|| (sum / n as f64).exp())
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}
