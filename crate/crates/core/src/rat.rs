//! Resonance-assisted tunnelling: perturbative coupling chains through
//! s:ℓ resonances, the statistical splitting scale and the area-only
//! estimate it is compared against.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use num_traits::Float;


use crate::classical::ResonanceData;
use crate::error::{Error, Result};
use crate::special::{gamma_q, tanh_sinh};

/// I_n = ħ(n + 1/2).
pub fn quantized_action(n: usize, hbar: f64) -> f64 {
    hbar * (n as f64 + 0.5)
}

/// E_n = (I_n − I₀)²/(2m₀) in the frame co-rotating with the resonance.
pub fn unperturbed_energy(n: usize, res: &ResonanceData, hbar: f64) -> f64 {
    let d = quantized_action(n, hbar) - res.i0;
    d * d / (2.0 * res.m0)
}

/// Smallest k ≥ 1 with I_{kℓ} > I_c.
pub fn chain_length_kc(res: &ResonanceData, i_c: f64, hbar: f64) -> usize {
    let ell = res.ell.max(1);
    let mut k = 1;
    while quantized_action(k * ell, hbar) <= i_c {
        k += 1;
    }
    k
}

/// E₀ − E_{kℓ}, rejecting exact degeneracies.
fn denominator(res: &ResonanceData, hbar: f64, k: usize) -> Result<f64> {
    let e0 = unperturbed_energy(0, res, hbar);
    let ek = unperturbed_energy(k * res.ell, res, hbar);
    let d = e0 - ek;
    if d == 0.0 || d.abs() <= 1e-15 * e0.abs().max(ek.abs()) {
        return Err(Error::PoleAtDegeneracy { k });
    }
    Ok(d)
}

/// Coefficients of |kℓ⟩, k = 0..k_c−1, in the perturbed central state
/// (unnormalized, coefficient of |0⟩ equal to 1).
pub fn perturbed_central_state(res: &ResonanceData, i_c: f64, hbar: f64) -> Result<Vec<f64>> {
    let kc = chain_length_kc(res, i_c, hbar);
    let mut out = Vec::with_capacity(kc);
    let mut c = 1.0;
    out.push(c);
    for k in 1..kc {
        c *= res.v0 / denominator(res, hbar, k)?;
        out.push(c);
    }
    Ok(out)
}

/// V_eff = V₀ Π_{k=1}^{k_c−1} V₀/(E₀ − E_{kℓ}).
pub fn veff_single(res: &ResonanceData, i_c: f64, hbar: f64) -> Result<f64> {
    let chain = perturbed_central_state(res, i_c, hbar)?;
    Ok(res.v0 * chain[chain.len() - 1])
}

/// Two-step coupling through an inner resonance `a` and an outer one `b`:
/// V₀^a/(E₀^a − E_{ℓa}^a) · V₀^b. Requires I_{ℓa} < I₀^b.
pub fn veff_two(res_a: &ResonanceData, res_b: &ResonanceData, hbar: f64) -> Result<f64> {
    if !(quantized_action(res_a.ell, hbar) < res_b.i0) {
        return Err(Error::InvalidRegime);
    }
    Ok(res_a.v0 / denominator(res_a, hbar, 1)? * res_b.v0)
}

/// 1/ħ at which the first excited rung of `a` reaches I₀ of `b`.
pub fn two_resonance_threshold(res_a: &ResonanceData, res_b: &ResonanceData) -> f64 {
    (res_a.ell as f64 + 0.5) / res_b.i0
}

/// The chain with the larger V₀ dominates a single-step prediction.
pub fn dominant_resonance(candidates: &[ResonanceData]) -> Option<&ResonanceData> {
    candidates.iter().max_by(|a, b| a.v0.total_cmp(&b.v0))
}

/// Geometric-mean splitting and its e^{±π/2} band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingBand {
    pub mean: f64,
    pub band_lo: f64,
    pub band_hi: f64,
}

impl SplittingBand {
    pub fn contains(&self, x: f64) -> bool {
        self.band_lo <= x && x <= self.band_hi
    }
}

/// mean = 2πV_eff²/ħ, band = mean·e^{∓π/2}.
pub fn mean_splitting(v_eff: f64, hbar: f64) -> SplittingBand {
    let mean = 2.0 * PI * v_eff * v_eff / hbar;
    SplittingBand {
        mean,
        band_lo: mean * (-FRAC_PI_2).exp(),
        band_hi: mean * FRAC_PI_2.exp(),
    }
}

/// One-sided Cauchy density (2/π)·s/(x² + s²) on x ≥ 0.
pub fn cauchy_splitting_pdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    2.0 / PI * scale / (x * x + scale * scale)
}

pub fn cauchy_splitting_cdf(x: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    2.0 / PI * (x / scale).atan()
}

/// Mean and variance of ln Δ under the one-sided Cauchy law, in closed
/// form and by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMoments {
    pub log_mean: f64,
    pub log_variance: f64,
    pub quadrature_log_mean: f64,
    pub quadrature_log_variance: f64,
}

pub fn log_moments(scale: f64) -> LogMoments {
    // x = s·tan θ maps the density to the uniform 2/π dθ on (0, π/2)
    let ln_s = scale.ln();
    let mean = tanh_sinh(|t| 2.0 / PI * (ln_s + t.tan().ln()), 0.0, FRAC_PI_2, 1e-13);
    let var = tanh_sinh(
        |t| {
            let d = ln_s + t.tan().ln() - mean;
            2.0 / PI * d * d
        },
        0.0,
        FRAC_PI_2,
        1e-13,
    );
    LogMoments {
        log_mean: ln_s,
        log_variance: PI * PI / 4.0,
        quadrature_log_mean: mean,
        quadrature_log_variance: var,
    }
}

/// Which expression produced an area-only estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PnBranch {
    IncompleteGamma,
    Asymptotic,
}

impl PnBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            PnBranch::IncompleteGamma => "incomplete_gamma",
            PnBranch::Asymptotic => "asymptotic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnEstimate {
    pub value: f64,
    /// N = A/(2πħ).
    pub n: f64,
    pub branch: PnBranch,
}

/// ħΩ Γ(2N, 4N)/Γ(2N + 1) with the upper incomplete Γ.
pub fn pn_incomplete_gamma(n: f64, hbar: f64, omega: f64) -> f64 {
    let a = 2.0 * n;
    // Γ(a, x)/Γ(a + 1) = Q(a, x)/a
    hbar * omega * gamma_q(a, 4.0 * n) / a
}

/// ħΩ/(16πN³) e^{−2(1 − ln 2)N}.
pub fn pn_asymptotic(n: f64, hbar: f64, omega: f64) -> f64 {
    hbar * omega / (16.0 * PI * n * n * n) * (-2.0 * (1.0 - 2f64.ln()) * n).exp()
}

/// Area-only splitting estimate; asymptotic form for N > 3.
pub fn pn_estimate(area: f64, hbar: f64, omega: f64) -> Result<PnEstimate> {
    crate::error::ensure_finite(&[area, hbar, omega], "pn_estimate")?;
    if area <= 0.0 || hbar <= 0.0 {
        return Err(Error::InvalidParameter("area and hbar must be positive"));
    }
    let n = area / (2.0 * PI * hbar);
    Ok(if n > 3.0 {
        PnEstimate { value: pn_asymptotic(n, hbar, omega), n, branch: PnBranch::Asymptotic }
    } else {
        PnEstimate { value: pn_incomplete_gamma(n, hbar, omega), n, branch: PnBranch::IncompleteGamma }
    })
}

/// ln of the incomplete-Γ form over the asymptotic form.
pub fn pn_log_ratio(n: f64) -> f64 {
    (pn_incomplete_gamma(n, 1.0, 1.0) / pn_asymptotic(n, 1.0, 1.0)).ln()
}

/// Mechanism behind a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    Single,
    TwoResonance,
    PnEstimate,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Single => "single",
            Mechanism::TwoResonance => "two_resonance",
            Mechanism::PnEstimate => "pn_estimate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatPrediction {
    pub hbar: f64,
    pub k_c: usize,
    /// +∞ marks a pole of the perturbative chain.
    pub v_eff: f64,
    pub band: SplittingBand,
    pub mechanism: Mechanism,
}

fn at_pole(r: Result<f64>) -> Result<f64> {
    match r {
        Err(Error::PoleAtDegeneracy { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Single-resonance prediction; poles become +∞ rather than errors.
pub fn predict_single(res: &ResonanceData, i_c: f64, hbar: f64) -> Result<RatPrediction> {
    let v_eff = at_pole(veff_single(res, i_c, hbar))?;
    Ok(RatPrediction {
        hbar,
        k_c: chain_length_kc(res, i_c, hbar),
        v_eff,
        band: mean_splitting(v_eff, hbar),
        mechanism: Mechanism::Single,
    })
}

/// Single step through `outer` below the two-resonance threshold, two
/// steps through `inner` then `outer` above it.
pub fn predict_two_stage(inner: &ResonanceData, outer: &ResonanceData, i_c: f64, hbar: f64) -> Result<RatPrediction> {
    match veff_two(inner, outer, hbar) {
        Err(Error::InvalidRegime) => predict_single(outer, i_c, hbar),
        r => {
            let v_eff = at_pole(r)?;
            Ok(RatPrediction {
                hbar,
                k_c: 2,
                v_eff,
                band: mean_splitting(v_eff, hbar),
                mechanism: Mechanism::TwoResonance,
            })
        }
    }
}
