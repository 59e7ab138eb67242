//! Discrete phase-circle bases over a contiguous number window.
//!
//! A basis here is the family of `d` projected coherent states whose
//! amplitudes sit on the circle `α·e^{iqφ}`, `φ = 2π/d`, restricted to the
//! number window `[n0, n0 + d − 1]`.  Those `d` states span exactly the same
//! space as the `d` number states of the window, and the change of basis is a
//! discrete Fourier transform weighted by the coherent-state coefficients
//! `αⁿ/√(n!)`.
//!
//! Numerical ground rules, applied throughout:
//! * every norm is carried in log space (`ln g_n²`, `ln g_Q²`), so windows far
//!   from the Poisson peak and amplitudes up to `|α|² = 10³` neither overflow
//!   nor flush to zero;
//! * every DFT phase `e^{iqnφ}` is looked up from a precomputed table of the
//!   `d`-th roots of unity with the exponent reduced modulo `d` as an integer,
//!   so phases stay exact even when `q·n` is large.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::C64;

/// Hard cap on the number of phases in one basis.
pub const MAX_PHASES: usize = 2048;

/// Hard cap on `|α|²`; the log-space arithmetic is sized for this range.
pub const MAX_ALPHA_SQR: f64 = 1.0e3;

/// Cap on the number of modes accepted by [`total_number_norm`].
pub const MAX_TOTAL_NORM_MODES: usize = 4;

/// Cap on the largest total occupation enumerated by [`total_number_norm`].
pub const MAX_TOTAL_NORM_OCCUPATION: usize = 128;

/// Which coefficient convention a [`CpsState`] uses.
///
/// The two conventions describe the same physical vector: expanding over
/// *normalized* basis members uses coefficients `Ψ_q`, expanding over the raw
/// projected coherent states uses `ψ_q = Ψ_q / g_Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Coefficients multiply unit-norm basis members.
    NormalizedBasis,
    /// Coefficients multiply the unnormalized projected coherent states.
    UnnormalizedBasis,
}

/// A single-mode phase-circle basis with its precomputed norms and Gram
/// matrix.  Immutable after construction; share via `Arc` for cheap reuse.
#[derive(Debug, Clone)]
pub struct CpsBasis {
    d: usize,
    n0: usize,
    alpha: C64,
    /// `ln g_n²` for `n = n0 … n_m`, `g_n² = |α|^{2n}/n!`.
    log_gn2: Vec<f64>,
    /// `ln g_Q²` with `g_Q² = Σ_n g_n²`.
    log_gq2: f64,
    /// Normalized window weights `g_n²/g_Q²`; these sum to 1 and are the
    /// Gram-matrix spectrum up to a factor `d`.
    weights: Vec<f64>,
    /// `e^{i·2πk/d}` for `k = 0 … d−1`.
    roots: Vec<C64>,
    /// Gram matrix of the *normalized* basis members (unit diagonal).
    gram: Array2<C64>,
}

/// Construct the basis for `d` phases on the window `[n0, n0 + d − 1]` around
/// the reference amplitude `alpha`.
///
/// Rejects `alpha = 0` (the phase circle degenerates) and sizes outside the
/// supported caps.
pub fn make_basis(d: usize, n0: usize, alpha: C64) -> Result<CpsBasis> {
    if d == 0 {
        return Err(Error::invalid("phase count d must be at least 1"));
    }
    if d > MAX_PHASES {
        return Err(Error::invalid(format!(
            "phase count {d} exceeds the cap {MAX_PHASES}"
        )));
    }
    if alpha == C64::new(0.0, 0.0) {
        return Err(Error::invalid(
            "alpha = 0 leaves the phase circle undefined",
        ));
    }
    if alpha.norm_sqr() > MAX_ALPHA_SQR {
        return Err(Error::invalid(format!(
            "|alpha|² = {} exceeds the cap {MAX_ALPHA_SQR}",
            alpha.norm_sqr()
        )));
    }
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::invalid("alpha must be finite"));
    }

    let ln_alpha_sqr = alpha.norm_sqr().ln();
    let log_gn2: Vec<f64> = (n0..n0 + d)
        .map(|n| n as f64 * ln_alpha_sqr - numeric::ln_factorial(n))
        .collect();
    // log-sum-exp against the window maximum: immune to overflow for any
    // window position.
    let peak = log_gn2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = log_gn2.iter().map(|&l| (l - peak).exp()).collect();
    let log_gq2 = peak + numeric::pairwise_sum(&shifted).ln();
    let weights: Vec<f64> = log_gn2.iter().map(|&l| (l - log_gq2).exp()).collect();

    let roots = numeric::unit_roots(d);

    // Circulant profile prof[Δ] = Σ_n w_n e^{iΔnφ}; the upper half is filled
    // by conjugation so the stored matrix is Hermitian by construction.
    let mut profile = vec![C64::new(0.0, 0.0); d];
    for delta in 0..=d / 2 {
        let mut terms = Vec::with_capacity(d);
        for (j, &w) in weights.iter().enumerate() {
            let n = (n0 + j) as i64;
            terms.push(numeric::root_pow(&roots, delta as i64 * n) * w);
        }
        profile[delta] = numeric::pairwise_sum_c64(&terms);
        if delta != 0 && delta * 2 != d {
            profile[d - delta] = profile[delta].conj();
        }
    }
    let mut gram = Array2::zeros((d, d));
    for q1 in 0..d {
        for q2 in 0..d {
            gram[(q1, q2)] = profile[(d + q2 - q1) % d];
        }
    }

    Ok(CpsBasis {
        d,
        n0,
        alpha,
        log_gn2,
        log_gq2,
        weights,
        roots,
        gram,
    })
}

impl CpsBasis {
    /// Number of phases (= window width).
    pub fn d(&self) -> usize {
        self.d
    }

    /// Lowest occupation of the window.
    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Highest occupation of the window, `n_m = n0 + d − 1`.
    pub fn n_max(&self) -> usize {
        self.n0 + self.d - 1
    }

    /// Reference amplitude.
    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    /// Phase step `φ = 2π/d`.
    pub fn phi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.d as f64
    }

    /// Amplitude of basis member `q`: `α·e^{iqφ}`.
    pub fn alpha_q(&self, q: usize) -> C64 {
        self.alpha * self.roots[q % self.d]
    }

    /// `ln g_n²` over the window, indexed by `n − n0`.
    pub fn log_gn2(&self) -> &[f64] {
        &self.log_gn2
    }

    /// `ln g_Q²`.
    pub fn log_gq2(&self) -> f64 {
        self.log_gq2
    }

    /// Projected norm `g_Q` (finite for the supported `|α|²` range).
    pub fn g_q(&self) -> f64 {
        (self.log_gq2 / 2.0).exp()
    }

    /// Per-number norm `g_n`, indexed by `n − n0`.
    pub fn g_n(&self, offset: usize) -> f64 {
        (self.log_gn2[offset] / 2.0).exp()
    }

    /// Normalized window weights `g_n²/g_Q²` (sum to 1), indexed by `n − n0`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Gram matrix `M` of the normalized basis members.
    pub fn gram(&self) -> &Array2<C64> {
        &self.gram
    }

    /// Table of the `d`-th roots of unity used for all DFT phases.
    pub fn roots(&self) -> &[C64] {
        &self.roots
    }

    /// `e^{i·k·φ}` with the exponent reduced modulo `d` exactly.
    pub fn phase(&self, k: i64) -> C64 {
        numeric::root_pow(&self.roots, k)
    }

    /// Eigenvalues of the Gram matrix in closed form: the DFT vectors
    /// `(e^{iqnφ})_q/√d` diagonalize any circulant, giving spectrum
    /// `{d·w_n : n ∈ window}`.  Sorted ascending.
    pub fn gram_eigenvalues(&self) -> Vec<f64> {
        let mut eigs: Vec<f64> = self.weights.iter().map(|w| w * self.d as f64).collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).expect("weights are finite"));
        eigs
    }

    /// Wrap in an `Arc` for attaching states.
    pub fn into_shared(self) -> Arc<CpsBasis> {
        Arc::new(self)
    }
}

/// Structural identity of two bases: same window, same reference amplitude.
pub fn same_basis(a: &CpsBasis, b: &CpsBasis) -> bool {
    a.d == b.d && a.n0 == b.n0 && a.alpha == b.alpha
}

/// A vector expanded over a phase-circle basis.
#[derive(Debug, Clone)]
pub struct CpsState {
    /// The basis the coefficients refer to.
    pub basis: Arc<CpsBasis>,
    /// Expansion coefficients, length `d`.
    pub coeffs: Array1<C64>,
    /// Which basis normalization the coefficients multiply.
    pub convention: Convention,
}

impl CpsState {
    /// Attach coefficients to a basis, checking the length.
    pub fn new(
        basis: Arc<CpsBasis>,
        coeffs: Array1<C64>,
        convention: Convention,
    ) -> Result<Self> {
        if coeffs.len() != basis.d() {
            return Err(Error::DimensionMismatch {
                expected: basis.d(),
                got: coeffs.len(),
            });
        }
        Ok(CpsState {
            basis,
            coeffs,
            convention,
        })
    }

    /// The same physical vector re-expressed in the other coefficient
    /// convention (`Ψ_q = g_Q·ψ_q`).
    pub fn to_convention(&self, convention: Convention) -> CpsState {
        if convention == self.convention {
            return self.clone();
        }
        let g_q = self.basis.g_q();
        let coeffs = match convention {
            Convention::NormalizedBasis => self.coeffs.mapv(|c| c * g_q),
            Convention::UnnormalizedBasis => self.coeffs.mapv(|c| c / g_q),
        };
        CpsState {
            basis: Arc::clone(&self.basis),
            coeffs,
            convention,
        }
    }

    /// Physical squared norm `Ψ†MΨ`.  Real up to rounding; the real part is
    /// returned.
    pub fn physical_norm_sqr(&self) -> f64 {
        let normalized = self.to_convention(Convention::NormalizedBasis);
        let m_psi = normalized.basis.gram().dot(&normalized.coeffs);
        let norm: C64 = normalized
            .coeffs
            .iter()
            .zip(m_psi.iter())
            .map(|(c, v)| c.conj() * v)
            .sum();
        norm.re
    }

    /// Serialize to the interchange JSON document
    /// `{d, n0, alpha, coeffs, convention}`.
    pub fn to_json(&self) -> Result<String> {
        let doc = StateDocument {
            d: self.basis.d(),
            n0: self.basis.n0(),
            alpha: [self.basis.alpha().re, self.basis.alpha().im],
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            convention: self.convention,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Rebuild a state (and its basis) from the interchange document.
    pub fn from_json(text: &str) -> Result<CpsState> {
        let doc: StateDocument = serde_json::from_str(text)?;
        let basis = make_basis(doc.d, doc.n0, C64::new(doc.alpha[0], doc.alpha[1]))?;
        let coeffs: Array1<C64> = doc
            .coeffs
            .iter()
            .map(|c| C64::new(c[0], c[1]))
            .collect::<Vec<_>>()
            .into();
        CpsState::new(basis.into_shared(), coeffs, doc.convention)
    }
}

#[derive(Serialize, Deserialize)]
struct StateDocument {
    d: usize,
    n0: usize,
    alpha: [f64; 2],
    coeffs: Vec<[f64; 2]>,
    convention: Convention,
}

/// Product of independent single-mode bases, one per mode.
#[derive(Debug, Clone)]
pub struct CpsProductBasis {
    /// Per-mode bases, mode 0 first.
    pub modes: Vec<Arc<CpsBasis>>,
}

impl CpsProductBasis {
    /// Bundle per-mode bases; at least one mode required.
    pub fn new(modes: Vec<Arc<CpsBasis>>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::invalid("product basis needs at least one mode"));
        }
        Ok(CpsProductBasis { modes })
    }

    /// Total flattened dimension `Π d_i`.
    pub fn total_dim(&self) -> usize {
        self.modes.iter().map(|m| m.d()).product()
    }
}

/// Projected norm `g_Q` for the zero-based window `[0, n_m]` from the
/// incomplete-gamma closed form `g_Q² = e^{|α|²}·Q(n_m+1, |α|²)`.
///
/// Where the regularized `Q` underflows (window far below the Poisson peak)
/// the evaluation falls back to the equivalent log-space window sum, keeping
/// the result finite and accurate over the full supported range.
pub fn norm_gq_gamma(alpha: C64, n_m: usize) -> f64 {
    let x = alpha.norm_sqr();
    let q = numeric::upper_gamma_regularized(n_m as f64 + 1.0, x);
    if q > 0.0 {
        ((x + q.ln()) / 2.0).exp()
    } else {
        let ln_x = x.ln();
        let log_gn2: Vec<f64> = (0..=n_m)
            .map(|n| n as f64 * ln_x - numeric::ln_factorial(n))
            .collect();
        let peak = log_gn2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = log_gn2.iter().map(|&l| (l - peak).exp()).sum();
        ((peak + sum.ln()) / 2.0).exp()
    }
}

/// Expand a number-window vector over the phase basis:
/// `ψ_q = Σ_n ψ_n·√(n!)/(d·(α^{(q)})ⁿ)`.
///
/// `psi_n` is indexed by `n − n0` and must have length `d`.  The result uses
/// the unnormalized-basis convention (that is what the formula produces);
/// convert with [`CpsState::to_convention`] if needed.
pub fn fock_to_cps(basis: &Arc<CpsBasis>, psi_n: &Array1<C64>) -> Result<CpsState> {
    let d = basis.d();
    if psi_n.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: psi_n.len(),
        });
    }
    let arg = basis.alpha().arg();
    // Per-n factor √(n!)/αⁿ = e^{−L_n/2}·e^{−i n·arg α} with L_n = ln g_n².
    let prepared: Vec<C64> = psi_n
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let n = basis.n0() + j;
            c * C64::from_polar((-basis.log_gn2()[j] / 2.0).exp(), -(n as f64) * arg)
        })
        .collect();
    let mut coeffs = Array1::zeros(d);
    let mut terms = Vec::with_capacity(d);
    for q in 0..d {
        terms.clear();
        for (j, &p) in prepared.iter().enumerate() {
            let n = (basis.n0() + j) as i64;
            terms.push(p * basis.phase(-(q as i64) * n));
        }
        coeffs[q] = numeric::pairwise_sum_c64(&terms) / d as f64;
    }
    CpsState::new(Arc::clone(basis), coeffs, Convention::UnnormalizedBasis)
}

/// Collapse a phase-basis state back to number-window coefficients:
/// `c_n = (αⁿ/√(n!))·Σ_q ψ_q·e^{iqnφ}`, indexed by `n − n0`.
pub fn cps_to_fock(state: &CpsState) -> Array1<C64> {
    let basis = &state.basis;
    let d = basis.d();
    let plain = state.to_convention(Convention::UnnormalizedBasis);
    let arg = basis.alpha().arg();
    let mut out = Array1::zeros(d);
    let mut terms = Vec::with_capacity(d);
    for j in 0..d {
        let n = basis.n0() + j;
        terms.clear();
        for q in 0..d {
            terms.push(plain.coeffs[q] * basis.phase(q as i64 * n as i64));
        }
        let dft = numeric::pairwise_sum_c64(&terms);
        out[j] = dft * C64::from_polar((basis.log_gn2()[j] / 2.0).exp(), n as f64 * arg);
    }
    out
}

/// Physical inner product `Ψ₁†MΨ₂` of two states over the same basis.
pub fn gram_inner(state1: &CpsState, state2: &CpsState) -> Result<C64> {
    if !same_basis(&state1.basis, &state2.basis) {
        return Err(Error::BasisMismatch(
            "gram_inner requires both states on the same basis".into(),
    ));
    }
    let a = state1.to_convention(Convention::NormalizedBasis);
    let b = state2.to_convention(Convention::NormalizedBasis);
    let m_b = a.basis.gram().dot(&b.coeffs);
    Ok(a.coeffs
        .iter()
        .zip(m_b.iter())
        .map(|(c, v)| c.conj() * v)
        .sum())
}

/// Expand the projection of a coherent state at a *different* amplitude `α̃`
/// over this basis, via the geometric sum
/// `ψ_q = (1/d)·(1 − z_q^d)/(1 − z_q)`, `z_q = α̃/α^{(q)}`.
///
/// Requires `n0 = 0` (the geometric sum starts at the vacuum).  With
/// `normalize` set, the coefficients are divided by the projected norm
/// `g_Q(α̃)` of the re-expanded state, making its physical norm 1.
pub fn reexpand_coherent(
    basis: &Arc<CpsBasis>,
    alpha_tilde: C64,
    normalize: bool,
) -> Result<CpsState> {
    if basis.n0() != 0 {
        return Err(Error::invalid(
            "coherent re-expansion is defined for zero-based windows only",
        ));
    }
    let d = basis.d();
    let mut coeffs = Array1::zeros(d);
    for q in 0..d {
        let z = alpha_tilde / basis.alpha_q(q);
        coeffs[q] = numeric::geometric_phase_sum(z, d) / d as f64;
    }
    if normalize {
        // Window norm of the re-expanded coherent state, in log space.
        let scale = norm_gq_gamma(alpha_tilde, basis.n_max());
        coeffs.mapv_inplace(|c| c / scale);
    }
    CpsState::new(Arc::clone(basis), coeffs, Convention::UnnormalizedBasis)
}

/// Wirtinger gradient of the log-norm with respect to the reference
/// amplitude: `∂_α ln g_Q = (α̅/2)·[1 + (g_{n0−1}² − g_{n_m}²)/g_Q²]`,
/// with `g_{n0−1} ≡ 0` for a zero-based window.
///
/// This is the correction term that separates moving-reference evolution from
/// plain coefficient evolution; it vanishes when the window comfortably
/// contains the Poisson peak.
pub fn log_norm_gradient(basis: &CpsBasis) -> C64 {
    let below = if basis.n0() == 0 {
        0.0
    } else {
        let n = basis.n0() - 1;
        let l = n as f64 * basis.alpha().norm_sqr().ln() - numeric::ln_factorial(n);
        (l - basis.log_gq2()).exp()
    };
    let top = *basis.weights().last().expect("window is non-empty");
    basis.alpha().conj() * 0.5 * (1.0 + below - top)
}

/// Norm of a multimode projection onto a set `S` of *total* occupations:
/// `g_N = √( Σ_{Σnᵢ ∈ S} Π |αᵢ|^{2nᵢ}/nᵢ! )`, by direct enumeration of all
/// occupation tuples with total ≤ `n_total_max`.
///
/// `select` picks which totals belong to `S`; totals above `n_total_max` are
/// outside the enumerated range, which is how an unbounded `S` is rejected:
/// the caller must state the bound.
pub fn total_number_norm<F>(alphas: &[C64], n_total_max: usize, select: F) -> Result<f64>
where
    F: Fn(usize) -> bool,
{
    if alphas.is_empty() || alphas.len() > MAX_TOTAL_NORM_MODES {
        return Err(Error::invalid(format!(
            "total-number norm supports 1..={MAX_TOTAL_NORM_MODES} modes"
        )));
    }
    if n_total_max > MAX_TOTAL_NORM_OCCUPATION {
        return Err(Error::invalid(format!(
            "total occupation bound {n_total_max} exceeds the cap {MAX_TOTAL_NORM_OCCUPATION}"
        )));
    }
    // Per-mode factors |α|^{2n}/n!, evaluated once.
    let factors: Vec<Vec<f64>> = alphas
        .iter()
        .map(|a| {
            let ln_sqr = a.norm_sqr().ln();
            (0..=n_total_max)
                .map(|n| {
                    if a.norm_sqr() == 0.0 {
                        if n == 0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        (n as f64 * ln_sqr - numeric::ln_factorial(n)).exp()
                    }
                })
                .collect()
        })
        .collect();

    fn accumulate<F: Fn(usize) -> bool>(
        factors: &[Vec<f64>],
        mode: usize,
        used: usize,
        product: f64,
        budget: usize,
        select: &F,
        sum: &mut f64,
    ) {
        if mode == factors.len() {
            if select(used) {
                *sum += product;
            }
            return;
        }
        for n in 0..=(budget - used) {
            accumulate(
                factors,
                mode + 1,
                used + n,
                product * factors[mode][n],
                budget,
                select,
                sum,
            );
        }
    }

    let mut sum = 0.0;
    accumulate(&factors, 0, 0, 1.0, n_total_max, &select, &mut sum);
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{fock, linalg};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Tiny deterministic complex sequence for reproducible "random" inputs.
    fn pseudo_random_vector(len: usize, seed: u64) -> Array1<C64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        Array1::from_iter((0..len).map(|_| C64::new(next(), next())))
    }

    #[test]
    fn qubit_norm_and_orthogonality() {
        let basis = make_basis(2, 0, c(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(basis.g_q(), 2.0_f64.sqrt(), epsilon = 1e-14);
        // |α|² = n0 + d/2 = 1 puts the two members at exact right angles.
        assert!(basis.gram()[(0, 1)].norm() < 1e-14);
        assert!(basis.gram()[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn gram_matches_direct_summation() {
        let alpha = c(6.0_f64.sqrt(), 0.0);
        let basis = make_basis(12, 0, alpha).unwrap();
        let g_q2 = basis.g_q().powi(2);
        let phi = basis.phi();
        for q1 in 0..12 {
            for q2 in 0..12 {
                // Direct 12-term sum with naive phases and factorials.
                let mut sum = c(0.0, 0.0);
                let mut fact = 1.0;
                for n in 0..12 {
                    if n > 0 {
                        fact *= n as f64;
                    }
                    let magnitude = alpha.norm_sqr().powi(n) / fact;
                    sum += C64::from_polar(magnitude, (q2 as f64 - q1 as f64) * n as f64 * phi);
                }
                let expected = sum / g_q2;
                assert!(
                    (basis.gram()[(q1, q2)] - expected).norm() < 1e-12,
                    "entry ({q1},{q2})"
                );
            }
        }
    }

    #[test]
    fn gram_is_circulant_hermitian_unit_diagonal_psd() {
        let basis = make_basis(9, 2, c(1.4, 0.9)).unwrap();
        let m = basis.gram();
        for q1 in 0..9 {
            assert!((m[(q1, q1)] - c(1.0, 0.0)).norm() < 1e-12);
            for q2 in 0..9 {
                // circulant: entry depends on (q2 − q1) mod d only
                assert_eq!(m[(q1, q2)], m[((q1 + 1) % 9, (q2 + 1) % 9)]);
                // Hermitian
                assert_eq!(m[(q1, q2)], m[(q2, q1)].conj());
            }
        }
        // PSD two ways: closed-form spectrum d·w_n, and a dense eigensolve.
        let closed = basis.gram_eigenvalues();
        assert!(closed[0] >= 0.0);
        let (eigs, _) = linalg::eigh(m).unwrap();
        assert!(eigs[0] > -1e-10);
        for (a, b) in closed.iter().zip(eigs.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_form_norm_matches_direct_sum() {
        assert_abs_diff_eq!(norm_gq_gamma(c(0.0, 0.0), 5), 1.0, epsilon = 1e-15);

        let alpha = c(2.0, 0.0);
        let direct: f64 = (0..=8)
            .map(|n| {
                alpha.norm_sqr().powi(n)
                    / (1..=n as usize).map(|k| k as f64).product::<f64>()
            })
            .sum();
        let closed = norm_gq_gamma(alpha, 8);
        assert_abs_diff_eq!(closed, direct.sqrt(), epsilon = 1e-12 * direct.sqrt());

        // Large window limit: full-space coherent norm e^{|α|²/2}.
        let full = (alpha.norm_sqr() / 2.0).exp();
        assert_abs_diff_eq!(
            norm_gq_gamma(alpha, 60) / full,
            1.0,
            epsilon = 1e-10
        );

        // Deep lower tail where the regularized gamma underflows: the
        // log-space fallback must still match make_basis.
        let far = c(30.0, 0.0);
        let window = make_basis(11, 0, far).unwrap();
        assert_abs_diff_eq!(
            norm_gq_gamma(far, 10) / window.g_q(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn number_state_maps_to_uniform_magnitudes() {
        let alpha = C64::from_polar(1.3, 0.4);
        for n0 in [0_usize, 2] {
            let basis = make_basis(8, n0, alpha).unwrap().into_shared();
            let pick = n0 + 2;
            let mut psi_n: Array1<C64> = Array1::zeros(8);
            psi_n[pick - n0] = c(1.0, 0.0);
            let state = fock_to_cps(&basis, &psi_n).unwrap();
            // ψ_q = √(n!)/(d·αⁿ)·e^{−iqnφ}: equal magnitude for every q.
            let expected_mag = (-basis.log_gn2()[pick - n0] / 2.0).exp() / 8.0;
            for q in 0..8 {
                assert_abs_diff_eq!(state.coeffs[q].norm(), expected_mag, epsilon = 1e-13);
                let expected = C64::from_polar(expected_mag, 0.0)
                    * basis.phase(-(q as i64) * pick as i64)
                    * C64::from_polar(1.0, -(pick as f64) * alpha.arg());
                assert!((state.coeffs[q] - expected).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn basis_member_maps_to_kronecker_delta() {
        let basis = make_basis(6, 0, c(1.1, -0.7)).unwrap().into_shared();
        // Window coefficients of the projected coherent state at α itself.
        let psi_n: Array1<C64> = (0..6)
            .map(|j| {
                let n = basis.n0() + j;
                C64::from_polar(basis.g_n(j), n as f64 * basis.alpha().arg())
            })
            .collect::<Vec<_>>()
            .into();
        let state = fock_to_cps(&basis, &psi_n).unwrap();
        for q in 0..6 {
            let expected = if q == 0 { 1.0 } else { 0.0 };
            assert!(
                (state.coeffs[q] - c(expected, 0.0)).norm() < 1e-12,
                "q = {q}: {}",
                state.coeffs[q]
            );
        }
    }

    #[test]
    fn dft_round_trip_is_identity() {
        for n0 in [0_usize, 3] {
            let basis = make_basis(8, n0, c(0.9, 1.7)).unwrap().into_shared();
            let psi_n = pseudo_random_vector(8, 42 + n0 as u64);
            let round = cps_to_fock(&fock_to_cps(&basis, &psi_n).unwrap());
            for j in 0..8 {
                assert!(
                    (round[j] - psi_n[j]).norm() < 1e-12,
                    "n0 = {n0}, component {j}"
                );
            }
        }
    }

    #[test]
    fn qubit_fock_images() {
        let basis = make_basis(2, 0, c(1.0, 0.0)).unwrap().into_shared();
        let member0 = CpsState::new(
            Arc::clone(&basis),
            Array1::from(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            Convention::UnnormalizedBasis,
        )
        .unwrap();
        let f0 = cps_to_fock(&member0);
        assert!((f0[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((f0[1] - c(1.0, 0.0)).norm() < 1e-14);

        let member1 = CpsState::new(
            Arc::clone(&basis),
            Array1::from(vec![c(0.0, 0.0), c(1.0, 0.0)]),
            Convention::UnnormalizedBasis,
        )
        .unwrap();
        let f1 = cps_to_fock(&member1);
        assert!((f1[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((f1[1] - c(-1.0, 0.0)).norm() < 1e-14);

        // Uniform coefficients collapse to the lowest window state when
        // n0 ≡ 0 (mod d): the DFT of a constant.
        let uniform = CpsState::new(
            Arc::clone(&basis),
            Array1::from(vec![c(0.5, 0.0), c(0.5, 0.0)]),
            Convention::UnnormalizedBasis,
        )
        .unwrap();
        let fu = cps_to_fock(&uniform);
        assert!((fu[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(fu[1].norm() < 1e-14);
    }

    #[test]
    fn gram_inner_agrees_with_fock_oracle() {
        let basis = make_basis(8, 0, c(1.2, 0.5)).unwrap().into_shared();

        // A basis member with itself: unit norm.
        let mut member: Array1<C64> = Array1::zeros(8);
        member[3] = c(1.0, 0.0);
        let member = CpsState::new(Arc::clone(&basis), member, Convention::NormalizedBasis)
            .unwrap();
        let self_inner = gram_inner(&member, &member).unwrap();
        assert!((self_inner - c(1.0, 0.0)).norm() < 1e-13);

        // Random pair: must equal the plain Fock inner product of the images.
        let s1 = CpsState::new(
            Arc::clone(&basis),
            pseudo_random_vector(8, 7),
            Convention::NormalizedBasis,
        )
        .unwrap();
        let s2 = CpsState::new(
            Arc::clone(&basis),
            pseudo_random_vector(8, 13),
            Convention::NormalizedBasis,
        )
        .unwrap();
        let via_gram = gram_inner(&s1, &s2).unwrap();
        let f1 = cps_to_fock(&s1);
        let f2 = cps_to_fock(&s2);
        let via_fock: C64 = f1.iter().zip(f2.iter()).map(|(a, b)| a.conj() * b).sum();
        assert!(
            (via_gram - via_fock).norm() < 1e-12,
            "gram {via_gram} vs fock {via_fock}"
        );

        // Orthogonal qubit pair.
        let qubit = make_basis(2, 0, c(1.0, 0.0)).unwrap().into_shared();
        let e0 = CpsState::new(
            Arc::clone(&qubit),
            Array1::from(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            Convention::NormalizedBasis,
        )
        .unwrap();
        let e1 = CpsState::new(
            Arc::clone(&qubit),
            Array1::from(vec![c(0.0, 0.0), c(1.0, 0.0)]),
            Convention::NormalizedBasis,
        )
        .unwrap();
        assert!(gram_inner(&e0, &e1).unwrap().norm() < 1e-13);

        // Mismatched bases are rejected.
        let other = make_basis(8, 0, c(1.2, 0.6)).unwrap().into_shared();
        let s3 = CpsState::new(
            other,
            pseudo_random_vector(8, 21),
            Convention::NormalizedBasis,
        )
        .unwrap();
        assert!(matches!(
            gram_inner(&s1, &s3),
            Err(Error::BasisMismatch(_))
        ));
    }

    #[test]
    fn reexpansion_special_cases() {
        let basis = make_basis(5, 0, c(0.8, 0.3)).unwrap().into_shared();

        // At a basis member's own amplitude the expansion is a delta.
        let member = reexpand_coherent(&basis, basis.alpha_q(2), false).unwrap();
        for q in 0..5 {
            let expected = if q == 2 { 1.0 } else { 0.0 };
            assert!(
                (member.coeffs[q] - c(expected, 0.0)).norm() < 1e-12,
                "q = {q}"
            );
        }

        // The vacuum is the uniform superposition.
        let vacuum = reexpand_coherent(&basis, c(0.0, 0.0), false).unwrap();
        for q in 0..5 {
            assert!((vacuum.coeffs[q] - c(0.2, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn reexpansion_matches_truncated_coherent_vector() {
        let alpha = c(1.6, -0.4);
        let basis = make_basis(4, 0, alpha).unwrap().into_shared();
        let tilde = alpha * 0.5;
        let state = reexpand_coherent(&basis, tilde, false).unwrap();
        let image = cps_to_fock(&state);
        let oracle = fock::coherent_vector(tilde, 4, false).unwrap();
        for n in 0..4 {
            assert!(
                (image[n] - oracle[n]).norm() < 1e-12,
                "n = {n}: {} vs {}",
                image[n],
                oracle[n]
            );
        }

        // Normalized flag: physical norm 1.
        let normalized = reexpand_coherent(&basis, tilde, true).unwrap();
        assert_abs_diff_eq!(normalized.physical_norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn log_norm_gradient_limits_and_finite_difference() {
        // d = 1: the single-member norm is constant in phase space direction? No —
        // g_Q² = g_{n0}² depends on α, but the formula collapses: w_top = 1.
        let single = make_basis(1, 0, c(0.7, 0.2)).unwrap();
        assert!(log_norm_gradient(&single).norm() < 1e-15);

        // Window much wider than the Poisson peak: gradient → α̅/2.
        let wide = make_basis(40, 0, c(1.0, 0.0)).unwrap();
        assert!((log_norm_gradient(&wide) - c(0.5, 0.0)).norm() < 1e-10);

        // Central finite difference of ln g_Q along both Wirtinger axes.
        let alpha = c(2.0, 0.0);
        for n0 in [0_usize, 2] {
            let basis = make_basis(6, n0, alpha).unwrap();
            let grad = log_norm_gradient(&basis);
            let h = 1e-5;
            let ln_gq = |a: C64| make_basis(6, n0, a).unwrap().log_gq2() / 2.0;
            let fd_re = (ln_gq(alpha + c(h, 0.0)) - ln_gq(alpha - c(h, 0.0))) / (2.0 * h);
            let fd_im = (ln_gq(alpha + c(0.0, h)) - ln_gq(alpha - c(0.0, h))) / (2.0 * h);
            // ln g_Q depends on |α|² alone, so ∂_α ln g_Q = f'·α̅ and the
            // real/imag parts of the FD derivatives recover it as
            // Re = fd_re/2, Im = −fd_im/2.
            assert_abs_diff_eq!(grad.re, fd_re / 2.0, epsilon = 1e-8);
            assert_abs_diff_eq!(grad.im, -fd_im / 2.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn total_number_norm_cases() {
        // Only the all-vacuum tuple: norm 1.
        let norm0 = total_number_norm(&[c(1.0, 0.0), c(2.0, 0.0)], 0, |n| n == 0).unwrap();
        assert_abs_diff_eq!(norm0, 1.0, epsilon = 1e-15);

        // Single mode, n ≤ 8: the incomplete-gamma closed form.
        let alpha = c(2.0, 0.0);
        let one_mode = total_number_norm(&[alpha], 8, |n| n <= 8).unwrap();
        assert_abs_diff_eq!(one_mode, norm_gq_gamma(alpha, 8), epsilon = 1e-12);

        // Two unit modes, total exactly 2: 1/2! + 1·1 + 1/2! = 2.
        let two = total_number_norm(&[c(1.0, 0.0), c(1.0, 0.0)], 2, |n| n == 2).unwrap();
        assert_abs_diff_eq!(two, 2.0_f64.sqrt(), epsilon = 1e-14);

        // Guards.
        assert!(total_number_norm(&[], 2, |_| true).is_err());
        assert!(total_number_norm(&[c(1.0, 0.0); 5], 2, |_| true).is_err());
        assert!(total_number_norm(&[c(1.0, 0.0)], 1000, |_| true).is_err());
    }

    #[test]
    fn state_json_round_trip() {
        let basis = make_basis(5, 1, c(0.8, -1.1)).unwrap().into_shared();
        let state = CpsState::new(
            basis,
            pseudo_random_vector(5, 99),
            Convention::NormalizedBasis,
        )
        .unwrap();
        let text = state.to_json().unwrap();
        let reloaded = CpsState::from_json(&text).unwrap();
        assert_eq!(reloaded.basis.d(), 5);
        assert_eq!(reloaded.basis.n0(), 1);
        assert_eq!(reloaded.convention, Convention::NormalizedBasis);
        for q in 0..5 {
            let rel = (reloaded.coeffs[q] - state.coeffs[q]).norm()
                / state.coeffs[q].norm().max(1.0);
            assert!(rel < 1e-15, "coefficient {q}");
        }
        assert!(same_basis(&reloaded.basis, &state.basis));
    }

    #[test]
    fn physical_norm_matches_fock_norm() {
        let basis = make_basis(7, 0, c(1.5, 0.8)).unwrap().into_shared();
        let state = CpsState::new(
            basis,
            pseudo_random_vector(7, 3),
            Convention::NormalizedBasis,
        )
        .unwrap();
        let image = cps_to_fock(&state);
        let fock_norm: f64 = image.iter().map(|x| x.norm_sqr()).sum();
        assert_abs_diff_eq!(state.physical_norm_sqr(), fock_norm, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_window_weight_approximation() {
        // Near the Poisson peak the per-number weight follows the Gaussian
        //   g_n² ≈ e^{|α|²}·(2π|α|²)^{−1/2}·e^{−(n−|α|²)²/(2|α|²)}.
        // At |α|² = n = 100 the Stirling correction ≈ 1/(12·100), i.e. a
        // relative error well under 0.5%.
        let alpha_sqr: f64 = 100.0;
        let n = 100;
        let exact_ln = n as f64 * alpha_sqr.ln() - numeric::ln_factorial(n);
        let gauss_ln = alpha_sqr - 0.5 * (2.0 * std::f64::consts::PI * alpha_sqr).ln();
        let rel = (gauss_ln - exact_ln).exp() - 1.0;
        assert!(rel.abs() < 0.005, "relative error {rel}");
    }

    #[test]
    fn construction_guards() {
        assert!(make_basis(0, 0, c(1.0, 0.0)).is_err());
        assert!(make_basis(4, 0, c(0.0, 0.0)).is_err());
        assert!(make_basis(MAX_PHASES + 1, 0, c(1.0, 0.0)).is_err());
        assert!(make_basis(4, 0, c(40.0, 0.0)).is_err()); // |α|² > 10³
        let basis = make_basis(3, 0, c(1.0, 0.0)).unwrap().into_shared();
        assert!(CpsState::new(
            basis,
            Array1::zeros(4),
            Convention::NormalizedBasis
        )
        .is_err());
    }
}
