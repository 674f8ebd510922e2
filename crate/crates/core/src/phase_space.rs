//! Coherent-state probes, overlaps, doublet selection, Husimi fields and
//! the antiunitary symmetry of the momentum representation.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use num_complex::Complex64;

use crate::classical::ProfileSample;
use crate::error::{Error, Result};
use crate::floquet::{circle_distance, circle_offset, FloquetSpectrum, MomentumBasis, Parity};

/// Minimum-uncertainty probe with momentum width √(ħ/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentState {
    pub p0: f64,
    pub q0: f64,
    pub hbar: f64,
    /// Width multiplier; 1 is the unsqueezed ground width.
    pub squeeze: f64,
}

impl CoherentState {
    pub fn new(p0: f64, q0: f64, hbar: f64) -> Self {
        Self { p0, q0, hbar, squeeze: 1.0 }
    }

    pub fn width_p(&self) -> f64 {
        (0.5 * self.hbar).sqrt() * self.squeeze
    }

    /// Image under p → −p.
    pub fn mirrored(&self) -> Self {
        Self { p0: -self.p0, ..*self }
    }
}

fn same_hbar(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Unit-norm momentum components c_n ∝ exp(−(ħn − p₀)²/(4w²)) e^{−inq₀}.
pub fn coherent_vector(basis: &MomentumBasis, cs: &CoherentState) -> Result<Vec<Complex64>> {
    crate::error::ensure_finite(&[cs.p0, cs.q0, cs.hbar, cs.squeeze], "coherent_vector")?;
    if !same_hbar(basis.hbar, cs.hbar) {
        return Err(Error::InvalidParameter("coherent state and basis disagree on hbar"));
    }
    let w = cs.width_p();
    let denom = 4.0 * w * w;
    // log-weights avoid underflow far from p₀ before normalisation
    let logs: Vec<f64> = (0..basis.dim())
        .map(|i| {
            let d = basis.momentum(i) - cs.p0;
            -d * d / denom
        })
        .collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut v: Vec<Complex64> = logs
        .iter()
        .enumerate()
        .map(|(i, &l)| Complex64::from_polar((l - peak).exp(), -(basis.quantum_number(i) as f64) * cs.q0))
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in v.iter_mut() {
        *c /= norm;
    }
    Ok(v)
}

/// ⟨a|b⟩.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// σ_m = |⟨z|ψ_m⟩| in spectrum order.
pub fn overlaps(spectrum: &FloquetSpectrum, z: &[Complex64]) -> Result<Vec<f64>> {
    let v = &spectrum.eigenvectors;
    if z.len() != v.nrows() {
        return Err(Error::DimensionMismatch { expected: v.nrows(), found: z.len() });
    }
    Ok((0..v.ncols())
        .map(|m| inner(z, v.column(m).as_slice()).norm())
        .collect())
}

/// c'_n = conj(c_{−n}): complex conjugation in the position representation.
pub fn symmetry_conjugate(state: &[Complex64]) -> Vec<Complex64> {
    state.iter().rev().map(|c| c.conj()).collect()
}

/// Label of a symmetry-invariant state from the relative sign of its
/// projections on the two islands.
pub fn parity_label(state: &[Complex64], upper: &[Complex64]) -> Result<Parity> {
    if state.len() != upper.len() {
        return Err(Error::DimensionMismatch { expected: upper.len(), found: state.len() });
    }
    let image = symmetry_conjugate(state);
    // fix the global phase: ψ̃ = e^{iα/2}ψ with Tψ = e^{iα}ψ
    let alpha = inner(state, &image).arg();
    let rot = Complex64::from_polar(1.0, 0.5 * alpha);
    let fixed: Vec<Complex64> = state.iter().map(|c| c * rot).collect();
    let lower = symmetry_conjugate(upper);
    let a = inner(upper, &fixed);
    let b = inner(&lower, &fixed);
    if a.norm() < 1e-12 || b.norm() < 1e-12 {
        return Err(Error::Indeterminate);
    }
    Ok(if (a * b.conj()).re >= 0.0 { Parity::Even } else { Parity::Odd })
}

/// The selected tunnelling pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubletRecord {
    pub index_plus: usize,
    pub index_minus: usize,
    pub eps_plus: f64,
    pub eps_minus: f64,
    pub delta: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    /// Third-largest overlap, kept for the ambiguity test.
    pub sigma_third: f64,
    /// Whether the members carried opposite labels and were ordered by them.
    pub labelled: bool,
    /// Second and third overlaps within 10 % of each other.
    pub ambiguous: bool,
}

impl DoubletRecord {
    /// Midpoint of the pair on the quasienergy circle.
    pub fn center(&self, hbar: f64) -> f64 {
        crate::floquet::wrap_quasienergy(self.eps_minus + 0.5 * circle_offset(self.eps_plus, self.eps_minus, hbar), hbar)
    }
}

/// Indices of the largest entries, in decreasing order.
fn top_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// The two states of largest overlap with the upper-island probe.
pub fn select_doublet(spectrum: &FloquetSpectrum, upper: &CoherentState) -> Result<DoubletRecord> {
    if spectrum.gamma_plus != spectrum.gamma_minus {
        return Err(Error::NotSymmetric);
    }
    if spectrum.len() < 3 {
        return Err(Error::InvalidParameter("spectrum too small for a doublet"));
    }
    let z = coherent_vector(&spectrum.basis(), upper)?;
    let sigma = overlaps(spectrum, &z)?;
    select_doublet_from(spectrum, &z, &sigma)
}

/// As [`select_doublet`] with precomputed probe and overlaps.
pub fn select_doublet_from(spectrum: &FloquetSpectrum, z: &[Complex64], sigma: &[f64]) -> Result<DoubletRecord> {
    let top = top_indices(sigma, 3);
    let (mut a, mut b) = (top[0], top[1]);
    let sigma_third = sigma[top[2]];
    let label = |m: usize| -> Option<Parity> {
        spectrum.parities[m].or_else(|| parity_label(spectrum.eigenvectors.column(m).as_slice(), z).ok())
    };
    let (la, lb) = (label(a), label(b));
    let labelled = matches!((la, lb), (Some(x), Some(y)) if x != y);
    if labelled && la == Some(Parity::Odd) {
        core::mem::swap(&mut a, &mut b);
    }
    let hbar = spectrum.hbar;
    let second = sigma[top[1]];
    Ok(DoubletRecord {
        index_plus: a,
        index_minus: b,
        eps_plus: spectrum.quasienergies[a],
        eps_minus: spectrum.quasienergies[b],
        delta: circle_distance(spectrum.quasienergies[a], spectrum.quasienergies[b], hbar),
        sigma_plus: sigma[a],
        sigma_minus: sigma[b],
        sigma_third,
        labelled,
        ambiguous: second <= 0.0 || (second - sigma_third) / second < 0.1,
    })
}

/// Rectangular window of probe centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HusimiGrid {
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub n_q: usize,
}

impl HusimiGrid {
    pub fn p_at(&self, i: usize) -> f64 {
        lerp(self.p_min, self.p_max, i, self.n_p)
    }

    pub fn q_at(&self, j: usize) -> f64 {
        lerp(self.q_min, self.q_max, j, self.n_q)
    }
}

impl Default for HusimiGrid {
    fn default() -> Self {
        Self {
            p_min: -2.5,
            p_max: 2.5,
            n_p: 200,
            q_min: -core::f64::consts::PI,
            q_max: core::f64::consts::PI,
            n_q: 200,
        }
    }
}

fn lerp(a: f64, b: f64, i: usize, n: usize) -> f64 {
    if n <= 1 {
        a
    } else {
        a + (b - a) * i as f64 / (n - 1) as f64
    }
}

/// |⟨z(p, q)|ψ⟩|² on a grid, rows indexed by p. No global prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiField {
    pub grid: HusimiGrid,
    pub values: Vec<f64>,
}

impl HusimiField {
    pub fn at(&self, i_p: usize, j_q: usize) -> f64 {
        self.values[i_p * self.grid.n_q + j_q]
    }

    /// Grid cell of the largest intensity as (p, q, value).
    pub fn peak(&self) -> (f64, f64, f64) {
        let (k, v) = self
            .values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best });
        (self.grid.p_at(k / self.grid.n_q), self.grid.q_at(k % self.grid.n_q), v)
    }
}

pub fn husimi(state: &[Complex64], basis: &MomentumBasis, grid: &HusimiGrid) -> Result<HusimiField> {
    if state.len() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: state.len() });
    }
    let mut values = vec![0.0; grid.n_p * grid.n_q];
    let phases: Vec<Vec<Complex64>> = (0..grid.n_q)
        .map(|j| {
            let q = grid.q_at(j);
            (0..basis.dim())
                .map(|i| Complex64::from_polar(1.0, basis.quantum_number(i) as f64 * q))
                .collect()
        })
        .collect();
    for ip in 0..grid.n_p {
        let z = coherent_vector(basis, &CoherentState::new(grid.p_at(ip), 0.0, basis.hbar))?;
        // conj(z_n) at q₀ is |z_n| e^{inq₀}
        let weighted: Vec<Complex64> = z.iter().zip(state).map(|(a, c)| c * a.re).collect();
        for (jq, ph) in phases.iter().enumerate() {
            let amp: Complex64 = weighted.iter().zip(ph).map(|(w, e)| w * e).sum();
            values[ip * grid.n_q + jq] = amp.norm_sqr();
        }
    }
    Ok(HusimiField { grid: *grid, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicIndex {
    pub l: usize,
    /// Circle distance to the nearest ladder rung.
    pub residual: f64,
}

/// l minimizing the circle distance between `candidate` and ε₀ + lħω₀.
/// `omega0` carries the ladder direction: the island levels of this model
/// descend, so callers pass −ω₀ of the center orbit.
pub fn harmonic_index(eps0: f64, candidate: f64, omega0: f64, hbar: f64, l_max: usize) -> HarmonicIndex {
    best_rung(candidate, hbar, (0..=l_max).map(|l| (l, eps0 + l as f64 * hbar * omega0)))
}

/// As [`harmonic_index`] with the anharmonic ladder
/// ε_l = ε₀ − ∫ ω(I) dI over [ħ/2, ħ(l + 1/2)], ω(I) from a rotation profile.
pub fn anharmonic_index(eps0: f64, candidate: f64, profile: &[ProfileSample], hbar: f64, l_max: usize) -> Option<HarmonicIndex> {
    if profile.len() < 2 {
        return None;
    }
    let omega = |i: f64| -> f64 {
        let k = profile.partition_point(|s| s.action < i).clamp(1, profile.len() - 1);
        let (a, b) = (&profile[k - 1], &profile[k]);
        if b.action == a.action {
            return a.omega;
        }
        a.omega + (b.omega - a.omega) * (i - a.action) / (b.action - a.action)
    };
    let mut rungs = Vec::with_capacity(l_max + 1);
    let mut acc = 0.0;
    rungs.push((0, eps0));
    for l in 1..=l_max {
        // Simpson on each quantum step
        let (lo, hi) = (hbar * (l as f64 - 0.5), hbar * (l as f64 + 0.5));
        acc += hbar / 6.0 * (omega(lo) + 4.0 * omega(0.5 * (lo + hi)) + omega(hi));
        rungs.push((l, eps0 - acc));
    }
    Some(best_rung(candidate, hbar, rungs.into_iter()))
}

fn best_rung(candidate: f64, hbar: f64, rungs: impl Iterator<Item = (usize, f64)>) -> HarmonicIndex {
    rungs
        .map(|(l, e)| HarmonicIndex { l, residual: circle_distance(candidate, e, hbar) })
        .fold(HarmonicIndex { l: 0, residual: f64::INFINITY }, |best, h| if h.residual < best.residual { h } else { best })
}

/// A pair of near-degenerate states of comparable overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubletPair {
    pub first: usize,
    pub second: usize,
    /// Midpoint quasienergy.
    pub eps: f64,
    pub delta: f64,
    pub sigma: f64,
}

/// Group states with σ ≥ `min_sigma` into doublets: opposite parity (when
/// known), circle distance below `max_gap`, overlaps within a factor 2.
pub fn pair_doublets(spectrum: &FloquetSpectrum, sigma: &[f64], min_sigma: f64, max_gap: f64) -> Vec<DoubletPair> {
    let hbar = spectrum.hbar;
    let mut kept: Vec<usize> = (0..sigma.len()).filter(|&m| sigma[m] >= min_sigma).collect();
    kept.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let mut used = vec![false; sigma.len()];
    let mut out = Vec::new();
    for &a in &kept {
        if used[a] {
            continue;
        }
        let partner = kept
            .iter()
            .copied()
            .filter(|&b| b != a && !used[b])
            .filter(|&b| match (spectrum.parities[a], spectrum.parities[b]) {
                (Some(x), Some(y)) => x != y,
                _ => true,
            })
            .filter(|&b| sigma[b] > 0.5 * sigma[a])
            .map(|b| (b, circle_distance(spectrum.quasienergies[a], spectrum.quasienergies[b], hbar)))
            .filter(|&(_, d)| d < max_gap)
            .min_by(|x, y| x.1.total_cmp(&y.1));
        if let Some((b, d)) = partner {
            used[a] = true;
            used[b] = true;
            let ea = spectrum.quasienergies[a];
            out.push(DoubletPair {
                first: a,
                second: b,
                eps: crate::floquet::wrap_quasienergy(ea + 0.5 * circle_offset(spectrum.quasienergies[b], ea, hbar), hbar),
                delta: d,
                sigma: 0.5 * (sigma[a] + sigma[b]),
            });
        }
    }
    out
}
