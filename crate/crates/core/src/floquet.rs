//! One-period quantum evolution in the momentum basis of the cylinder and
//! its eigendecomposition.
//!
//! States are expanded in |n⟩, p = ħn, n = −n_max..n_max. The Hamiltonian is
//! truncated to this basis (no wrap-around coupling), so the potential is a
//! tridiagonal chain with the single time-dependent hopping
//! ⟨n+1|V|n⟩ = −(γ₊/4)e^{it} − (γ₋/4)e^{−it}. One split step applies the
//! exact kinetic phase and the exact chain exponential (Chebyshev series);
//! symmetric steps are composed to fourth or sixth order.
//!
//! For γ₊ = γ₋ the potential commutes with n → −n and each parity sector is
//! propagated and diagonalized on its own. Quasienergies of opposite parity
//! then never mix numerically, which keeps splittings far below the
//! eigensolver's absolute accuracy resolvable.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use num_traits::Float;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{SystemParams, TAU};
use crate::special::bessel_j_sequence;

/// Momentum lattice p_n = ħn, n = −n_max..n_max (Bloch angle 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumBasis {
    pub hbar: f64,
    pub n_max: usize,
}

impl MomentumBasis {
    pub fn new(hbar: f64, n_max: usize) -> Result<Self> {
        crate::error::ensure_finite(&[hbar], "MomentumBasis")?;
        if hbar <= 0.0 || n_max == 0 {
            return Err(Error::InvalidParameter("basis needs hbar > 0 and n_max ≥ 1"));
        }
        Ok(Self { hbar, n_max })
    }

    /// n_max = ⌈p_bound/ħ⌉.
    pub fn for_bound(hbar: f64, p_bound: f64) -> Result<Self> {
        crate::error::ensure_finite(&[p_bound], "MomentumBasis")?;
        if p_bound <= 0.0 {
            return Err(Error::InvalidParameter("p_bound must be positive"));
        }
        // guard against 4/(1/16) landing one ulp above an integer
        let ratio = p_bound / hbar;
        let n_max = if (ratio - ratio.round()).abs() < 1e-9 { ratio.round() } else { ratio.ceil() };
        Self::new(hbar, n_max as usize)
    }

    pub fn dim(&self) -> usize {
        2 * self.n_max + 1
    }

    /// Array index of momentum quantum number n.
    pub fn index(&self, n: i64) -> Option<usize> {
        let m = self.n_max as i64;
        (-m..=m).contains(&n).then(|| (n + m) as usize)
    }

    pub fn quantum_number(&self, index: usize) -> i64 {
        index as i64 - self.n_max as i64
    }

    pub fn momentum(&self, index: usize) -> f64 {
        self.hbar * self.quantum_number(index) as f64
    }
}

/// Composition used to build one period from symmetric split steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitScheme {
    /// Plain kinetic/potential/kinetic step, second order.
    Strang,
    /// Suzuki five-stage composition, fourth order.
    Order4,
    /// Yoshida seven-stage composition, sixth order.
    Order6,
}

impl SplitScheme {
    fn weights(self) -> Vec<f64> {
        match self {
            SplitScheme::Strang => vec![1.0],
            SplitScheme::Order4 => {
                let p = 1.0 / (4.0 - 4f64.powf(1.0 / 3.0));
                vec![p, p, 1.0 - 4.0 * p, p, p]
            }
            SplitScheme::Order6 => {
                let w1 = 0.784_513_610_477_560;
                let w2 = 0.235_573_213_359_357;
                let w3 = -1.177_679_984_178_87;
                let w0 = 1.0 - 2.0 * (w1 + w2 + w3);
                vec![w3, w2, w1, w0, w1, w2, w3]
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SplitScheme::Strang => "strang",
            SplitScheme::Order4 => "order4",
            SplitScheme::Order6 => "order6",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "strang" => Some(SplitScheme::Strang),
            "order4" => Some(SplitScheme::Order4),
            "order6" => Some(SplitScheme::Order6),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorSettings {
    pub steps_per_period: usize,
    pub scheme: SplitScheme,
}

pub const DEFAULT_QUANTUM_STEPS: usize = 512;
pub const MIN_QUANTUM_STEPS: usize = 128;

impl Default for PropagatorSettings {
    fn default() -> Self {
        Self {
            steps_per_period: DEFAULT_QUANTUM_STEPS,
            scheme: SplitScheme::Order4,
        }
    }
}

/// Invariant subspace used for propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    Full,
    /// |0⟩ and (|n⟩ + |−n⟩)/√2.
    Even,
    /// (|n⟩ − |−n⟩)/√2.
    Odd,
}

/// Chain representation of a sector: site j carries quantum number |n_j|
/// (or n_j in the full basis) and bond j joins sites j and j+1 with weight
/// `bonds[j]` times the hopping amplitude.
#[derive(Debug, Clone)]
struct Chain {
    numbers: Vec<i64>,
    bonds: Vec<f64>,
}

impl Chain {
    fn new(basis: &MomentumBasis, sector: Sector) -> Self {
        let m = basis.n_max as i64;
        match sector {
            Sector::Full => Chain {
                numbers: (-m..=m).collect(),
                bonds: vec![1.0; 2 * basis.n_max],
            },
            Sector::Even => {
                let mut bonds = vec![1.0; basis.n_max];
                bonds[0] = SQRT_2;
                Chain {
                    numbers: (0..=m).collect(),
                    bonds,
                }
            }
            Sector::Odd => Chain {
                numbers: (1..=m).collect(),
                bonds: vec![1.0; basis.n_max - 1],
            },
        }
    }

    fn len(&self) -> usize {
        self.numbers.len()
    }

    /// Upper bound on the spectral radius of the unit-hopping chain.
    fn spectral_bound(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|j| {
                let left = if j > 0 { self.bonds[j - 1] } else { 0.0 };
                let right = if j + 1 < n { self.bonds[j] } else { 0.0 };
                left + right
            })
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE)
    }

    /// Embed sector vectors (columns of `m`) into the full momentum basis.
    fn embed(&self, basis: &MomentumBasis, sector: Sector, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let dim = basis.dim();
        let mut out = DMatrix::zeros(dim, m.ncols());
        for c in 0..m.ncols() {
            for (j, &n) in self.numbers.iter().enumerate() {
                let a = m[(j, c)];
                match sector {
                    Sector::Full => out[(basis.index(n).unwrap(), c)] = a,
                    Sector::Even | Sector::Odd if n == 0 => out[(basis.index(0).unwrap(), c)] = a,
                    Sector::Even => {
                        out[(basis.index(n).unwrap(), c)] = a * FRAC_1_SQRT_2;
                        out[(basis.index(-n).unwrap(), c)] = a * FRAC_1_SQRT_2;
                    }
                    Sector::Odd => {
                        out[(basis.index(n).unwrap(), c)] = a * FRAC_1_SQRT_2;
                        out[(basis.index(-n).unwrap(), c)] = -a * FRAC_1_SQRT_2;
                    }
                }
            }
        }
        out
    }
}

/// Hopping amplitude ⟨n+1|V|n⟩ at time t.
fn hopping(params: &SystemParams, t: f64) -> Complex64 {
    let (s, c) = t.sin_cos();
    let gp = 0.25 * params.gamma_plus;
    let gm = 0.25 * params.gamma_minus;
    Complex64::new(-(gp + gm) * c, -(gp - gm) * s)
}

/// Working buffers for evolving a block of column vectors along a chain.
struct Evolver<'a> {
    chain: &'a Chain,
    len: usize,
    cols: usize,
    state: Vec<Complex64>,
    prev: Vec<Complex64>,
    cur: Vec<Complex64>,
    next: Vec<Complex64>,
    gauge: Vec<Complex64>,
}

impl<'a> Evolver<'a> {
    fn identity(chain: &'a Chain) -> Self {
        let len = chain.len();
        let mut state = vec![Complex64::new(0.0, 0.0); len * len];
        for j in 0..len {
            state[j * len + j] = Complex64::new(1.0, 0.0);
        }
        Self {
            chain,
            len,
            cols: len,
            prev: vec![Complex64::new(0.0, 0.0); len * len],
            cur: vec![Complex64::new(0.0, 0.0); len * len],
            next: vec![Complex64::new(0.0, 0.0); len * len],
            gauge: vec![Complex64::new(1.0, 0.0); len],
            state,
        }
    }

    fn apply_diagonal(&mut self, phases: &[Complex64]) {
        for col in self.state.chunks_exact_mut(self.len) {
            for (x, ph) in col.iter_mut().zip(phases) {
                *x *= ph;
            }
        }
    }

    /// y = X x / β for every column, X the unit-hopping chain.
    fn apply_chain(chain: &Chain, len: usize, scale: f64, x: &[Complex64], y: &mut [Complex64]) {
        for (xc, yc) in x.chunks_exact(len).zip(y.chunks_exact_mut(len)) {
            if len == 1 {
                yc[0] = Complex64::new(0.0, 0.0);
                continue;
            }
            yc[0] = xc[1] * (chain.bonds[0] * scale);
            for j in 1..len - 1 {
                yc[j] = xc[j - 1] * (chain.bonds[j - 1] * scale) + xc[j + 1] * (chain.bonds[j] * scale);
            }
            yc[len - 1] = xc[len - 2] * (chain.bonds[len - 2] * scale);
        }
    }

    /// state ← exp(−iθ X/β) state via the Chebyshev series of the
    /// rescaled chain (spectrum inside [−1, 1]).
    fn apply_chain_exponential(&mut self, theta: f64, beta: f64) {
        if theta == 0.0 {
            return;
        }
        let a = theta.abs();
        let sign = theta.signum();
        let js = bessel_j_sequence(a, (a as usize) + 40);
        let mut terms = js.len();
        for k in (a.ceil() as usize + 1)..js.len() {
            if js[k].abs() < 1e-18 {
                terms = k;
                break;
            }
        }
        let scale = 1.0 / beta;
        let n = self.len * self.cols;
        // T_0 = x, T_1 = X̃ x
        self.prev[..n].copy_from_slice(&self.state[..n]);
        Self::apply_chain(self.chain, self.len, scale, &self.prev, &mut self.cur);
        let minus_i = Complex64::new(0.0, -1.0);
        // coefficient of T_k is 2(−i)^k J_k(θ); J_k(−a) = (−1)^k J_k(a)
        let mut phase = minus_i * sign;
        let c1 = phase * (2.0 * js[1]);
        for i in 0..n {
            self.state[i] = self.prev[i] * js[0] + self.cur[i] * c1;
        }
        for k in 2..terms {
            Self::apply_chain(self.chain, self.len, 2.0 * scale, &self.cur, &mut self.next);
            phase *= minus_i * sign;
            let ck = phase * (2.0 * js[k]);
            for i in 0..n {
                let t = self.next[i] - self.prev[i];
                self.next[i] = t;
                self.state[i] += t * ck;
            }
            core::mem::swap(&mut self.prev, &mut self.cur);
            core::mem::swap(&mut self.cur, &mut self.next);
        }
    }

    /// state ← exp(−i V(t) h / ħ) state. The complex hopping v = |v| e^{iφ}
    /// is gauged to a real chain by D = diag(e^{ijφ}).
    fn apply_potential(&mut self, v: Complex64, h: f64, hbar: f64, beta: f64) {
        let mag = v.norm();
        if mag == 0.0 {
            return;
        }
        let phi = v.arg();
        if phi != 0.0 {
            for (j, g) in self.gauge.iter_mut().enumerate() {
                *g = Complex64::from_polar(1.0, -(j as f64) * phi);
            }
            let gauge = core::mem::take(&mut self.gauge);
            self.apply_diagonal(&gauge);
            self.gauge = gauge;
        }
        self.apply_chain_exponential(mag * beta * h / hbar, beta);
        if phi != 0.0 {
            for g in self.gauge.iter_mut() {
                *g = g.conj();
            }
            let gauge = core::mem::take(&mut self.gauge);
            self.apply_diagonal(&gauge);
            self.gauge = gauge;
        }
    }

    fn into_matrix(self) -> DMatrix<Complex64> {
        DMatrix::from_vec(self.len, self.cols, self.state)
    }
}

fn check_inputs(params: &SystemParams, basis: &MomentumBasis, settings: &PropagatorSettings) -> Result<()> {
    if (params.hbar - basis.hbar).abs() > 1e-15 * params.hbar {
        return Err(Error::InvalidParameter("basis and parameters disagree on hbar"));
    }
    if settings.steps_per_period < MIN_QUANTUM_STEPS {
        return Err(Error::InvalidParameter("steps_per_period below 128"));
    }
    Ok(())
}

fn propagate_chain(params: &SystemParams, basis: &MomentumBasis, chain: &Chain, settings: &PropagatorSettings) -> DMatrix<Complex64> {
    let hbar = basis.hbar;
    let beta = chain.spectral_bound();
    let h = TAU / settings.steps_per_period as f64;
    let weights = settings.scheme.weights();
    let kinetic = |dt: f64| -> Vec<Complex64> {
        chain
            .numbers
            .iter()
            .map(|&n| {
                let nf = n as f64;
                Complex64::from_polar(1.0, -0.5 * hbar * nf * nf * dt)
            })
            .collect()
    };
    // distinct half-drift lengths of the composed step
    let halves: Vec<Vec<Complex64>> = weights.iter().map(|w| kinetic(0.5 * w * h)).collect();
    let mut ev = Evolver::identity(chain);
    for step in 0..settings.steps_per_period {
        let mut t = step as f64 * h;
        for (w, half) in weights.iter().zip(&halves) {
            ev.apply_diagonal(half);
            let v = hopping(params, t + 0.5 * w * h);
            ev.apply_potential(v, w * h, hbar, beta);
            ev.apply_diagonal(half);
            t += w * h;
        }
    }
    ev.into_matrix()
}

/// U(τ, 0) in the full momentum basis.
pub fn build_propagator(
    params: &SystemParams,
    basis: &MomentumBasis,
    settings: &PropagatorSettings,
) -> Result<DMatrix<Complex64>> {
    check_inputs(params, basis, settings)?;
    Ok(propagate_chain(params, basis, &Chain::new(basis, Sector::Full), settings))
}

/// U(τ, 0) restricted to a parity sector, in the sector's own basis.
pub fn build_sector_propagator(
    params: &SystemParams,
    basis: &MomentumBasis,
    sector: Sector,
    settings: &PropagatorSettings,
) -> Result<DMatrix<Complex64>> {
    check_inputs(params, basis, settings)?;
    if sector != Sector::Full && !params.symmetric_mode() {
        return Err(Error::NotSymmetric);
    }
    Ok(propagate_chain(params, basis, &Chain::new(basis, sector), settings))
}

/// Reduce a quasienergy into the zone (−ħ/2, ħ/2].
pub fn wrap_quasienergy(e: f64, hbar: f64) -> f64 {
    let mut r = (e + 0.5 * hbar) % hbar;
    if r <= 0.0 {
        r += hbar;
    }
    r - 0.5 * hbar
}

/// ε with λ = exp(−iετ/ħ), in (−ħ/2, ħ/2].
pub fn quasienergy_from_eigenvalue(lambda: Complex64, hbar: f64) -> f64 {
    wrap_quasienergy(-hbar * lambda.arg() / TAU, hbar)
}

/// Distance on the quasienergy circle of circumference ħ.
pub fn circle_distance(e1: f64, e2: f64, hbar: f64) -> f64 {
    let d = (e1 - e2).abs() % hbar;
    d.min(hbar - d)
}

/// Signed offset e − reference on the circle, in (−ħ/2, ħ/2].
pub fn circle_offset(e: f64, reference: f64, hbar: f64) -> f64 {
    wrap_quasienergy(e - reference, hbar)
}

pub fn max_unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Parity {
    Even,
    Odd,
}

/// Quasienergies and eigenvectors of one Floquet operator.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetSpectrum {
    pub hbar: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub n_max: usize,
    pub steps_per_period: usize,
    /// In (−ħ/2, ħ/2], one per eigenvector.
    pub quasienergies: Vec<f64>,
    /// Columns are eigenvectors in the full momentum basis.
    pub eigenvectors: DMatrix<Complex64>,
    /// Parity under n → −n when the sectors were diagonalized separately.
    pub parities: Vec<Option<Parity>>,
}

impl FloquetSpectrum {
    pub fn len(&self) -> usize {
        self.quasienergies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quasienergies.is_empty()
    }

    pub fn basis(&self) -> MomentumBasis {
        MomentumBasis {
            hbar: self.hbar,
            n_max: self.n_max,
        }
    }

    pub fn state(&self, m: usize) -> Vec<Complex64> {
        self.eigenvectors.column(m).iter().copied().collect()
    }
}

fn schur_eigen(u: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let schur = nalgebra::Schur::try_new(u.clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let (q, t) = schur.unpack();
    let lambdas = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    Ok((lambdas, q))
}

/// Eigendecomposition of a unitary U given in the full momentum basis.
pub fn diagonalize(u: &DMatrix<Complex64>, basis: &MomentumBasis, params: &SystemParams, steps: usize) -> Result<FloquetSpectrum> {
    if u.nrows() != basis.dim() || u.ncols() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: u.nrows(),
        });
    }
    let defect = max_unitarity_defect(u);
    if !(defect < 1e-8) {
        return Err(Error::NonUnitaryInput(defect));
    }
    let (lambdas, vectors) = schur_eigen(u)?;
    Ok(FloquetSpectrum {
        hbar: basis.hbar,
        gamma_plus: params.gamma_plus,
        gamma_minus: params.gamma_minus,
        n_max: basis.n_max,
        steps_per_period: steps,
        quasienergies: lambdas.iter().map(|&l| quasienergy_from_eigenvalue(l, basis.hbar)).collect(),
        eigenvectors: vectors,
        parities: vec![None; basis.dim()],
    })
}

/// Full pipeline: propagate and diagonalize, sector by sector when the
/// drive is symmetric. Eigenpairs are ordered by increasing quasienergy.
pub fn floquet_spectrum(params: &SystemParams, basis: &MomentumBasis, settings: &PropagatorSettings) -> Result<FloquetSpectrum> {
    check_inputs(params, basis, settings)?;
    let spectrum = if params.symmetric_mode() {
        let mut energies = Vec::with_capacity(basis.dim());
        let mut parities = Vec::with_capacity(basis.dim());
        let mut blocks = Vec::with_capacity(2);
        for (sector, parity) in [(Sector::Even, Parity::Even), (Sector::Odd, Parity::Odd)] {
            let chain = Chain::new(basis, sector);
            let u = propagate_chain(params, basis, &chain, settings);
            let defect = max_unitarity_defect(&u);
            if !(defect < 1e-8) {
                return Err(Error::NonUnitaryInput(defect));
            }
            let (lambdas, q) = schur_eigen(&u)?;
            energies.extend(lambdas.iter().map(|&l| quasienergy_from_eigenvalue(l, basis.hbar)));
            parities.extend(core::iter::repeat(Some(parity)).take(lambdas.len()));
            blocks.push(chain.embed(basis, sector, &q));
        }
        let mut vectors = DMatrix::zeros(basis.dim(), basis.dim());
        let split = blocks[0].ncols();
        vectors.columns_mut(0, split).copy_from(&blocks[0]);
        vectors.columns_mut(split, blocks[1].ncols()).copy_from(&blocks[1]);
        FloquetSpectrum {
            hbar: basis.hbar,
            gamma_plus: params.gamma_plus,
            gamma_minus: params.gamma_minus,
            n_max: basis.n_max,
            steps_per_period: settings.steps_per_period,
            quasienergies: energies,
            eigenvectors: vectors,
            parities,
        }
    } else {
        let u = build_propagator(params, basis, settings)?;
        diagonalize(&u, basis, params, settings.steps_per_period)?
    };
    Ok(sorted(spectrum))
}

fn sorted(s: FloquetSpectrum) -> FloquetSpectrum {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.quasienergies[a].total_cmp(&s.quasienergies[b]));
    let mut vectors = DMatrix::zeros(s.eigenvectors.nrows(), s.len());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &s.eigenvectors.column(src));
    }
    FloquetSpectrum {
        quasienergies: order.iter().map(|&i| s.quasienergies[i]).collect(),
        parities: order.iter().map(|&i| s.parities[i]).collect(),
        eigenvectors: vectors,
        ..s
    }
}

/// Outcome of recomputing one quantity with a larger basis and finer steps.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    pub baseline: f64,
    pub refined_basis: f64,
    pub refined_steps: f64,
    pub n_max: usize,
    pub n_max_refined: usize,
    pub steps: usize,
    pub steps_refined: usize,
    /// Largest relative change of the two refinements.
    pub drift: f64,
    pub certified: bool,
}

/// Relative drift below which a value is certified.
pub const CERTIFY_DRIFT: f64 = 0.05;

fn relative_change(reference: f64, value: f64) -> f64 {
    if reference == value {
        0.0
    } else if reference == 0.0 {
        f64::INFINITY
    } else {
        ((value - reference) / reference).abs()
    }
}

/// Recompute `target` with n_max + 25 % and with twice the steps.
/// `baseline` skips the reference computation when already known.
pub fn convergence_audit<F>(
    params: &SystemParams,
    basis: &MomentumBasis,
    settings: &PropagatorSettings,
    baseline: Option<f64>,
    target: F,
) -> Result<ConvergenceReport>
where
    F: Fn(&FloquetSpectrum) -> Result<f64>,
{
    let baseline = match baseline {
        Some(b) => b,
        None => target(&floquet_spectrum(params, basis, settings)?)?,
    };
    let n_max_refined = (basis.n_max * 5).div_ceil(4).max(basis.n_max + 1);
    let wide = MomentumBasis::new(basis.hbar, n_max_refined)?;
    let refined_basis = target(&floquet_spectrum(params, &wide, settings)?)?;
    let fine = PropagatorSettings {
        steps_per_period: 2 * settings.steps_per_period,
        ..*settings
    };
    let refined_steps = target(&floquet_spectrum(params, basis, &fine)?)?;
    let drift = relative_change(baseline, refined_basis).max(relative_change(baseline, refined_steps));
    Ok(ConvergenceReport {
        baseline,
        refined_basis,
        refined_steps,
        n_max: basis.n_max,
        n_max_refined,
        steps: settings.steps_per_period,
        steps_refined: fine.steps_per_period,
        drift,
        certified: drift < CERTIFY_DRIFT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn settings(steps: usize) -> PropagatorSettings {
        PropagatorSettings { steps_per_period: steps, scheme: SplitScheme::Order4 }
    }

    #[test]
    fn free_propagator_is_closed_form() {
        let p = SystemParams::symmetric(0.0, 0.2).unwrap();
        let b = MomentumBasis::new(0.2, 10).unwrap();
        let u = build_propagator(&p, &b, &settings(128)).unwrap();
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                let n = b.quantum_number(i) as f64;
                let expected = if i == j {
                    Complex64::from_polar(1.0, -0.2 * n * n * TAU / 2.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((u[(i, j)] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn free_doublets_exactly_degenerate() {
        let p = SystemParams::symmetric(0.0, 0.1).unwrap();
        let b = MomentumBasis::new(0.1, 12).unwrap();
        let s = floquet_spectrum(&p, &b, &settings(128)).unwrap();
        assert_eq!(s.len(), b.dim());
        for n in 1..=12i64 {
            let p_n = 0.1 * n as f64;
            let e = wrap_quasienergy(0.5 * p_n * p_n, 0.1);
            let hits = s.quasienergies.iter().filter(|&&x| circle_distance(x, e, 0.1) < 1e-12).count();
            assert!(hits >= 2, "n = {n}");
        }
    }

    #[test]
    fn unitary_at_default_settings() {
        let p = SystemParams::symmetric(0.72, 1.0 / 16.0).unwrap();
        let b = MomentumBasis::for_bound(1.0 / 16.0, 4.0).unwrap();
        assert_eq!(b.n_max, 64);
        let u = build_sector_propagator(&p, &b, Sector::Even, &PropagatorSettings::default()).unwrap();
        assert!(max_unitarity_defect(&u) < 1e-10);
    }

    #[test]
    fn sectors_reproduce_full_spectrum() {
        let p = SystemParams::symmetric(0.4, 0.25).unwrap();
        let b = MomentumBasis::new(0.25, 12).unwrap();
        let full = build_propagator(&p, &b, &settings(128)).unwrap();
        let direct = sorted(diagonalize(&full, &b, &p, 128).unwrap());
        let split = floquet_spectrum(&p, &b, &settings(128)).unwrap();
        for (a, b) in direct.quasienergies.iter().zip(&split.quasienergies) {
            assert!(circle_distance(*a, *b, 0.25) < 1e-10);
        }
    }

    #[test]
    fn step_doubling_leaves_spectrum() {
        let p = SystemParams::symmetric(0.3, 0.2).unwrap();
        let b = MomentumBasis::new(0.2, 20).unwrap();
        let a = floquet_spectrum(&p, &b, &settings(256)).unwrap();
        let c = floquet_spectrum(&p, &b, &settings(512)).unwrap();
        for (x, y) in a.quasienergies.iter().zip(&c.quasienergies) {
            assert!(circle_distance(*x, *y, 0.2) < 1e-9);
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let p = SystemParams::symmetric(0.3, 0.2).unwrap();
        let b = MomentumBasis::new(0.2, 2).unwrap();
        let m = DMatrix::from_element(5, 5, Complex64::new(0.3, 0.0));
        assert!(matches!(diagonalize(&m, &b, &p, 128), Err(Error::NonUnitaryInput(_))));
        let small = DMatrix::identity(3, 3);
        assert!(matches!(diagonalize(&small, &b, &p, 128), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_coarse_steps_and_mismatched_hbar() {
        let p = SystemParams::symmetric(0.3, 0.2).unwrap();
        let b = MomentumBasis::new(0.2, 4).unwrap();
        assert!(build_propagator(&p, &b, &settings(64)).is_err());
        let other = MomentumBasis::new(0.1, 4).unwrap();
        assert!(build_propagator(&p, &other, &settings(128)).is_err());
        let asym = SystemParams::new(0.3, 0.2, 0.2).unwrap();
        assert!(matches!(build_sector_propagator(&asym, &b, Sector::Even, &settings(128)), Err(Error::NotSymmetric)));
    }

    #[test]
    fn circle_examples() {
        assert_relative_eq!(circle_distance(0.049, -0.049, 0.1), 0.002, epsilon = 1e-15);
        assert_eq!(circle_distance(0.03, 0.03, 0.1), 0.0);
        assert_relative_eq!(wrap_quasienergy(-0.05, 0.1), 0.05, epsilon = 1e-15);
        assert_relative_eq!(quasienergy_from_eigenvalue(Complex64::from_polar(1.0, -1.0), 0.1), 0.1 / TAU, epsilon = 1e-15);
    }

    #[test]
    fn cutoff_rule() {
        assert_eq!(MomentumBasis::for_bound(1.0 / 16.0, 4.0).unwrap().dim(), 129);
        assert_eq!(MomentumBasis::for_bound(1.0 / 45.0, 4.0).unwrap().n_max, 180);
        assert_eq!(MomentumBasis::for_bound(0.3, 4.0).unwrap().n_max, 14);
    }

    #[test]
    fn free_audit_has_zero_drift() {
        let p = SystemParams::symmetric(0.0, 0.25).unwrap();
        let b = MomentumBasis::new(0.25, 8).unwrap();
        let r = convergence_audit(&p, &b, &settings(128), None, |s| {
            Ok(circle_distance(s.quasienergies[0], s.quasienergies[1], s.hbar))
        })
        .unwrap();
        assert_eq!(r.drift, 0.0);
        assert!(r.certified);
        assert_eq!(r.n_max_refined, 10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn wrapped_into_zone(e in -10.0f64..10.0, hbar in 0.01f64..1.0) {
            let w = wrap_quasienergy(e, hbar);
            prop_assert!(w > -0.5 * hbar && w <= 0.5 * hbar + 1e-15);
            prop_assert!(circle_distance(w, e, hbar) < 1e-9);
        }

        #[test]
        fn distance_bounded(a in -0.5f64..0.5, b in -0.5f64..0.5) {
            let d = circle_distance(a, b, 1.0);
            prop_assert!((0.0..=0.5).contains(&d));
            prop_assert!((d - circle_distance(b, a, 1.0)).abs() < 1e-15);
        }
    }
}
