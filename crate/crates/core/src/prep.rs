//! Projected P-representations and the boson-sampling correlation estimator.
//!
//! A density matrix supported on a number window has an *exact* expansion
//! over outer products of projected coherent states taken on the phase
//! circle: `ρ = Σ_{q⃗,q⃗′} p_{q⃗q⃗′}·λ̂_{q⃗q⃗′}` with
//! `λ̂_{qq'} = ‖α^{(q)}⟩⟨(β^{(q')})*‖` per mode.  Because the phase sets are
//! complete DFT frames over the window, the coefficients `p` exist for every
//! such ρ and the expansion inverts exactly — no quasi-distribution
//! regularization is involved.
//!
//! The β side carries its own circle, rotating opposite to the α side
//! (`β^{(q')} = β·e^{−iq'φ}`), which is what makes `p_{qq'} = conj(p_{q'q})`
//! hold for Hermitian ρ whenever `β = α*`.
//!
//! The boson-sampling estimator works in the analytic small-radius limit of
//! qubit (`d = 2`) P-functions: the circle radius appears only as `r^{2N}`
//! factors that cancel between the P-function normalization and the output
//! moment factors, so it is stripped symbolically and never enters the
//! floating-point arithmetic.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::CpsBasis;
use crate::error::{Error, Result};
use crate::numeric;
use crate::C64;

/// Dense-coefficient guard: number of modes at full `d^{2M}` storage.
pub const MAX_PFUNC_MODES: usize = 3;

/// Dense-coefficient guard: flattened per-side dimension `Π dⱼ`.
pub const MAX_PFUNC_TOTAL_DIM: usize = 512;

/// Exact boson-sampling enumeration guard (`4^N` sign configurations).
pub const MAX_EXACT_PHOTONS: usize = 12;

/// Coefficient convention of a [`CpsPFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PfuncConvention {
    /// Coefficients `p` multiplying unnormalized pair projectors.
    Unnormalized,
    /// Coefficients `P = p·G`, with the pair normalization absorbed.
    Normalized,
}

/// Discrete P-function of a window-projected density matrix.
#[derive(Debug, Clone)]
pub struct CpsPFunction {
    /// Per-mode α-side bases, mode 0 first.
    pub modes: Vec<Arc<CpsBasis>>,
    /// Per-mode β-side reference amplitudes (default `α*`).
    pub betas: Vec<C64>,
    /// Coefficients indexed by flattened `(q⃗, q⃗′)`, mode 0 slowest.
    pub coeffs: Array2<C64>,
    /// Which convention `coeffs` uses.
    pub convention: PfuncConvention,
}

/// Per-mode pair normalizations `G_{qq'} = Σ_{n∈window}(β^{(q')}α^{(q)})ⁿ/n!`.
#[derive(Debug, Clone)]
pub struct PairNormalization {
    /// One `d×d` table per mode.
    pub per_mode: Vec<Array2<C64>>,
}

impl PairNormalization {
    /// Product `Π_j G_j[q_j, q'_j]` for a flattened index pair.
    fn factor(&self, modes: &[Arc<CpsBasis>], row: usize, col: usize) -> C64 {
        let q = split_index(modes, row);
        let qp = split_index(modes, col);
        let mut product = C64::new(1.0, 0.0);
        for (j, table) in self.per_mode.iter().enumerate() {
            product *= table[(q[j], qp[j])];
        }
        product
    }
}

/// β-side member amplitude `β·e^{−iqφ}` (opposite orientation to the α side).
pub fn beta_q(basis: &CpsBasis, beta: C64, q: usize) -> C64 {
    beta * basis.phase(-(q as i64))
}

/// Mixed-radix digits of a flattened phase multi-index, mode 0 slowest.
fn split_index(modes: &[Arc<CpsBasis>], mut idx: usize) -> Vec<usize> {
    let mut digits = vec![0usize; modes.len()];
    for (j, m) in modes.iter().enumerate().rev() {
        digits[j] = idx % m.d();
        idx /= m.d();
    }
    digits
}

fn check_modes(modes: &[Arc<CpsBasis>], betas: &[C64]) -> Result<usize> {
    if modes.is_empty() || modes.len() > MAX_PFUNC_MODES {
        return Err(Error::invalid(format!(
            "P-function supports 1..={MAX_PFUNC_MODES} modes at full density"
        )));
    }
    if betas.len() != modes.len() {
        return Err(Error::DimensionMismatch {
            expected: modes.len(),
            got: betas.len(),
        });
    }
    if betas.iter().any(|b| *b == C64::new(0.0, 0.0)) {
        return Err(Error::invalid("beta = 0 leaves the pair circle undefined"));
    }
    let total: usize = modes.iter().map(|m| m.d()).product();
    if total > MAX_PFUNC_TOTAL_DIM {
        return Err(Error::invalid(format!(
            "flattened dimension {total} exceeds the cap {MAX_PFUNC_TOTAL_DIM}"
        )));
    }
    Ok(total)
}

impl CpsPFunction {
    /// Wrap raw coefficients, checking shapes and guards.
    pub fn new(
        modes: Vec<Arc<CpsBasis>>,
        betas: Vec<C64>,
        coeffs: Array2<C64>,
        convention: PfuncConvention,
    ) -> Result<Self> {
        let total = check_modes(&modes, &betas)?;
        if coeffs.nrows() != total || coeffs.ncols() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: coeffs.nrows().max(coeffs.ncols()),
            });
        }
        Ok(CpsPFunction {
            modes,
            betas,
            coeffs,
            convention,
        })
    }

    /// Flattened per-side dimension `Π dⱼ`.
    pub fn total_dim(&self) -> usize {
        self.modes.iter().map(|m| m.d()).product()
    }

    /// Pair normalizations for the current mode/β configuration.
    pub fn pair_normalization(&self) -> PairNormalization {
        let per_mode = self
            .modes
            .iter()
            .zip(self.betas.iter())
            .map(|(basis, &beta)| {
                let d = basis.d();
                let mut table = Array2::zeros((d, d));
                for q in 0..d {
                    for qp in 0..d {
                        let product = basis.alpha_q(q) * beta_q(basis, beta, qp);
                        table[(q, qp)] = pair_sum(product, basis.n0(), basis.n_max());
                    }
                }
                table
            })
            .collect();
        PairNormalization { per_mode }
    }

    /// The same P-function in the other convention (`P = p·G` entrywise).
    pub fn to_convention(&self, convention: PfuncConvention) -> CpsPFunction {
        if convention == self.convention {
            return self.clone();
        }
        let norm = self.pair_normalization();
        let total = self.total_dim();
        let mut coeffs = self.coeffs.clone();
        for row in 0..total {
            for col in 0..total {
                let g = norm.factor(&self.modes, row, col);
                coeffs[(row, col)] = match convention {
                    PfuncConvention::Normalized => coeffs[(row, col)] * g,
                    PfuncConvention::Unnormalized => coeffs[(row, col)] / g,
                };
            }
        }
        CpsPFunction {
            modes: self.modes.clone(),
            betas: self.betas.clone(),
            coeffs,
            convention,
        }
    }

    /// `Tr ρ` of the represented density matrix: the zero-order moment.
    pub fn trace(&self) -> C64 {
        self.moment(&vec![0; self.modes.len()], &vec![0; self.modes.len()])
            .expect("zero-order moment is always in range")
    }

    /// Normally ordered moment `⟨Π_j (â†_j)^{m_j}(â_j)^{k_j}⟩`.
    ///
    /// Each mode contributes the exact window-truncated pair factor
    /// `T(m,k; a,b) = b^m·a^k·Σ_l (ab)^l/l!` with `l` restricted so that both
    /// ladder images stay inside the window — no large-cutoff shortcut.  For
    /// `m = k = 1` this reduces to the `𝒜 = α·∂_α ln G` weight times `G`.
    pub fn moment(&self, creators: &[usize], annihilators: &[usize]) -> Result<C64> {
        if creators.len() != self.modes.len() || annihilators.len() != self.modes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.modes.len(),
                got: creators.len().max(annihilators.len()),
            });
        }
        for (j, basis) in self.modes.iter().enumerate() {
            if creators[j] > basis.n_max() || annihilators[j] > basis.n_max() {
                return Err(Error::invalid(format!(
                    "mode {j}: ladder order exceeds the window top {}",
                    basis.n_max()
                )));
            }
        }
        let plain = self.to_convention(PfuncConvention::Unnormalized);
        // Per-mode factor tables T(m,k; α^{(q)}, β^{(q')}).
        let tables: Vec<Array2<C64>> = plain
            .modes
            .iter()
            .zip(plain.betas.iter())
            .enumerate()
            .map(|(j, (basis, &beta))| {
                let d = basis.d();
                let mut table = Array2::zeros((d, d));
                for q in 0..d {
                    for qp in 0..d {
                        table[(q, qp)] = pair_moment_factor(
                            creators[j],
                            annihilators[j],
                            basis.alpha_q(q),
                            beta_q(basis, beta, qp),
                            basis.n0(),
                            basis.n_max(),
                        );
                    }
                }
                table
            })
            .collect();

        let total = plain.total_dim();
        let mut terms = Vec::with_capacity(total * total);
        for row in 0..total {
            let q = split_index(&plain.modes, row);
            for col in 0..total {
                let qp = split_index(&plain.modes, col);
                let mut factor = plain.coeffs[(row, col)];
                for (j, table) in tables.iter().enumerate() {
                    factor *= table[(q[j], qp[j])];
                }
                terms.push(factor);
            }
        }
        Ok(numeric::pairwise_sum_c64(&terms))
    }
}

/// Window-truncated exponential sum `Σ_{n=n0}^{n_m} xⁿ/n!`.
fn pair_sum(x: C64, n0: usize, n_m: usize) -> C64 {
    ladder_shifted_sum(x, n0 as i64, n_m as i64)
}

/// `Σ_{l=lo}^{hi} x^l/l!` with empty ranges giving 0 and `lo` clamped at 0.
fn ladder_shifted_sum(x: C64, lo: i64, hi: i64) -> C64 {
    let lo = lo.max(0);
    if hi < lo {
        return C64::new(0.0, 0.0);
    }
    // First term x^lo/lo! via logs to dodge overflow, then the stable
    // multiplicative recursion.
    let magnitude = (lo as f64 * x.norm().max(f64::MIN_POSITIVE).ln()
        - numeric::ln_factorial(lo as usize))
    .exp();
    let mut term = if x.norm() == 0.0 {
        if lo == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    } else {
        C64::from_polar(magnitude, x.arg() * lo as f64)
    };
    let mut terms = Vec::with_capacity((hi - lo + 1) as usize);
    for l in lo..=hi {
        terms.push(term);
        term = term * x / (l + 1) as f64;
    }
    numeric::pairwise_sum_c64(&terms)
}

/// Exact pair moment factor
/// `T(m,k;a,b) = ⟨b*‖(â†)^m(â)^k‖a⟩ = b^m·a^k·Σ_l (ab)^l/l!`
/// with `l` running over `max(0, n0−min(m,k)) ..= n_m−max(m,k)`.
pub fn pair_moment_factor(
    m: usize,
    k: usize,
    a: C64,
    b: C64,
    n0: usize,
    n_m: usize,
) -> C64 {
    let lo = n0 as i64 - m.min(k) as i64;
    let hi = n_m as i64 - m.max(k) as i64;
    b.powi(m as i32) * a.powi(k as i32) * ladder_shifted_sum(a * b, lo, hi)
}

/// The number-moment weight `𝒜 = a·∂_a ln G` of a pair `(a, b)` on a window;
/// approaches `a·b` once the window dwarfs `|ab|`.
pub fn pair_number_weight(a: C64, b: C64, n0: usize, n_m: usize) -> C64 {
    pair_moment_factor(1, 1, a, b, n0, n_m) / pair_sum(a * b, n0, n_m)
}

/// Exact P-function of a window-supported density matrix:
/// `p_{q⃗q⃗′} = Σ_{m⃗,n⃗} ρ_{m⃗n⃗}·Π_j √(m_j!n_j!)/(d_j²·(α^{(q_j)})^{m_j}·(β^{(q'_j)})^{n_j})`.
///
/// `rho` is indexed by flattened window offsets (mode 0 slowest); `betas`
/// defaults to the conjugate amplitudes `α*`, the choice that maps Hermitian
/// ρ to Hermitian-symmetric coefficients.
pub fn pfunc_from_rho(
    rho: &Array2<C64>,
    modes: &[Arc<CpsBasis>],
    betas: Option<&[C64]>,
) -> Result<CpsPFunction> {
    let default_betas: Vec<C64> = modes.iter().map(|m| m.alpha().conj()).collect();
    let betas: Vec<C64> = match betas {
        Some(b) => b.to_vec(),
        None => default_betas,
    };
    let total = check_modes(modes, &betas)?;
    if rho.nrows() != total || rho.ncols() != total {
        return Err(Error::DimensionMismatch {
            expected: total,
            got: rho.nrows().max(rho.ncols()),
        });
    }

    // Per-mode kernels K_α[q, j] = √(n!)/(d·(α^{(q)})ⁿ), n = n0 + j, and the
    // β-side analogue; the existence sum is then a two-sided kernel product.
    let mut alpha_kernels = Vec::with_capacity(modes.len());
    let mut beta_kernels = Vec::with_capacity(modes.len());
    for (basis, &beta) in modes.iter().zip(betas.iter()) {
        let d = basis.d();
        let mut ka = Array2::zeros((d, d));
        let mut kb = Array2::zeros((d, d));
        for q in 0..d {
            let a = basis.alpha_q(q);
            let b = beta_q(basis, beta, q);
            for j in 0..d {
                let n = basis.n0() + j;
                let root_fact = (numeric::ln_factorial(n) / 2.0).exp();
                ka[(q, j)] = root_fact / (a.powi(n as i32) * d as f64);
                kb[(q, j)] = root_fact / (b.powi(n as i32) * d as f64);
            }
        }
        alpha_kernels.push(ka);
        beta_kernels.push(kb);
    }

    let mut coeffs = Array2::zeros((total, total));
    for row in 0..total {
        let q = split_index(modes, row);
        for col in 0..total {
            let qp = split_index(modes, col);
            let mut terms = Vec::with_capacity(total * total);
            for mrow in 0..total {
                let mdig = split_index(modes, mrow);
                for ncol in 0..total {
                    let ndig = split_index(modes, ncol);
                    let mut value = rho[(mrow, ncol)];
                    if value == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for j in 0..modes.len() {
                        value *= alpha_kernels[j][(q[j], mdig[j])]
                            * beta_kernels[j][(qp[j], ndig[j])];
                    }
                    terms.push(value);
                }
            }
            coeffs[(row, col)] = numeric::pairwise_sum_c64(&terms);
        }
    }
    CpsPFunction::new(
        modes.to_vec(),
        betas,
        coeffs,
        PfuncConvention::Unnormalized,
    )
}

/// Reconstruct the density matrix:
/// `ρ_{m⃗n⃗} = Σ_{q⃗q⃗′} p_{q⃗q⃗′}·Π_j (α^{(q_j)})^{m_j}(β^{(q'_j)})^{n_j}/√(m_j!n_j!)`.
pub fn rho_from_pfunc(pfunc: &CpsPFunction) -> Array2<C64> {
    let plain = pfunc.to_convention(PfuncConvention::Unnormalized);
    let total = plain.total_dim();

    let mut alpha_kernels = Vec::with_capacity(plain.modes.len());
    let mut beta_kernels = Vec::with_capacity(plain.modes.len());
    for (basis, &beta) in plain.modes.iter().zip(plain.betas.iter()) {
        let d = basis.d();
        let mut ka = Array2::zeros((d, d));
        let mut kb = Array2::zeros((d, d));
        for q in 0..d {
            let a = basis.alpha_q(q);
            let b = beta_q(basis, beta, q);
            for j in 0..d {
                let n = basis.n0() + j;
                let inv_root_fact = (-numeric::ln_factorial(n) / 2.0).exp();
                ka[(q, j)] = a.powi(n as i32) * inv_root_fact;
                kb[(q, j)] = b.powi(n as i32) * inv_root_fact;
            }
        }
        alpha_kernels.push(ka);
        beta_kernels.push(kb);
    }

    let mut rho = Array2::zeros((total, total));
    for mrow in 0..total {
        let mdig = split_index(&plain.modes, mrow);
        for ncol in 0..total {
            let ndig = split_index(&plain.modes, ncol);
            let mut terms = Vec::with_capacity(total * total);
            for row in 0..total {
                let q = split_index(&plain.modes, row);
                for col in 0..total {
                    let qp = split_index(&plain.modes, col);
                    let mut value = plain.coeffs[(row, col)];
                    for j in 0..plain.modes.len() {
                        value *= alpha_kernels[j][(q[j], mdig[j])]
                            * beta_kernels[j][(qp[j], ndig[j])];
                    }
                    terms.push(value);
                }
            }
            rho[(mrow, ncol)] = numeric::pairwise_sum_c64(&terms);
        }
    }
    rho
}

/// Coefficients of a single pair projector `λ̂(α̃, β̃)` over a target
/// zero-based pair basis, via two independent geometric sums:
/// `p̃_{qq'} = (1/d²)·Σ_n z_qⁿ·Σ_n ζ_{q'}ⁿ` with `z_q = α̃/α^{(q)}`,
/// `ζ_{q'} = β̃/β^{(q')}`.
pub fn pfunc_reexpand(
    basis: &Arc<CpsBasis>,
    beta: C64,
    alpha_tilde: C64,
    beta_tilde: C64,
) -> Result<Array2<C64>> {
    if basis.n0() != 0 {
        return Err(Error::invalid(
            "pair re-expansion is defined for zero-based windows only",
        ));
    }
    if beta == C64::new(0.0, 0.0) {
        return Err(Error::invalid("beta = 0 leaves the pair circle undefined"));
    }
    let d = basis.d();
    let mut alpha_side = Array1::zeros(d);
    let mut beta_side = Array1::zeros(d);
    for q in 0..d {
        alpha_side[q] = numeric::geometric_phase_sum(alpha_tilde / basis.alpha_q(q), d);
        beta_side[q] = numeric::geometric_phase_sum(beta_tilde / beta_q(basis, beta, q), d);
    }
    let mut coeffs = Array2::zeros((d, d));
    for q in 0..d {
        for qp in 0..d {
            coeffs[(q, qp)] = alpha_side[q] * beta_side[qp] / (d * d) as f64;
        }
    }
    Ok(coeffs)
}

/// How a boson-sampling correlation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Enumerate all `4^N` sign configurations.
    Exact,
    /// Uniform Monte Carlo over sign-configuration pairs.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Outcome of [`boson_sampling_correlation`], serializable as the result
/// document `{value, stderr, method, samples, seed}`.
#[derive(Debug, Clone, Serialize)]
pub struct BosonSamplingResult {
    /// Estimated (or exact) output coincidence moment.
    pub value: f64,
    /// Standard error of the mean (Monte Carlo only).
    pub stderr: Option<f64>,
    /// `"exact"` or `"mc"`.
    pub method: String,
    /// Configurations enumerated or samples drawn.
    pub samples: usize,
    /// RNG seed (Monte Carlo only).
    pub seed: Option<u64>,
}

/// Largest absolute entry of `U†U − 1`, the unitarity residual.
pub fn unitarity_residual(u: &Array2<C64>) -> f64 {
    let m = u.nrows();
    let mut worst = 0.0_f64;
    for i in 0..m {
        for j in 0..m {
            let mut entry = C64::new(0.0, 0.0);
            for k in 0..m {
                entry += u[(k, i)].conj() * u[(k, j)];
            }
            if i == j {
                entry -= 1.0;
            }
            worst = worst.max(entry.norm());
        }
    }
    worst
}

/// N-fold output coincidence `⟨Π_{k∈outputs} n̂_k⟩` of a linear-optical
/// network fed with single photons on `inputs`.
///
/// Each occupied input carries the two-point (`d = 2`) phase P-function of
/// `|1⟩⟨1|`; unoccupied inputs carry exact vacuum.  The circle radius
/// `nominal_radius` is validated but stripped analytically — the `r^{−2N}`
/// of the P-function cancels the `r^{2N}` of the output moment — so results
/// are bit-identical for any admissible radius.  The α-side configuration is
/// pushed through `U`, the β side through `U*`, and the correlation is the
/// `4^N` double sum over sign configurations
/// `(1/4^N)·Σ_{s,s'} A₀(s)·B₀(s')` with
/// `A₀(s) = (Π_j s_j)·Π_{k∈outputs}(U[out,in]·s)_k`, which equals
/// `|Perm(U[outputs, inputs])|²`.
pub fn boson_sampling_correlation(
    u: &Array2<C64>,
    inputs: &[usize],
    outputs: &[usize],
    nominal_radius: f64,
    mode: SamplingMode,
) -> Result<BosonSamplingResult> {
    let m = u.nrows();
    if u.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: u.ncols(),
        });
    }
    let residual = unitarity_residual(u);
    if residual > 1e-10 {
        return Err(Error::NotUnitary { residual });
    }
    let n = inputs.len();
    if n == 0 || outputs.len() != n {
        return Err(Error::invalid(
            "inputs and outputs must be non-empty sets of equal size",
        ));
    }
    for set in [inputs, outputs] {
        let mut seen = vec![false; m];
        for &idx in set {
            if idx >= m {
                return Err(Error::invalid(format!("mode index {idx} out of range")));
            }
            if seen[idx] {
                return Err(Error::invalid(format!("duplicate mode index {idx}")));
            }
            seen[idx] = true;
        }
    }
    if !(nominal_radius.is_finite() && nominal_radius > 0.0) {
        return Err(Error::invalid("nominal radius must be finite and positive"));
    }

    // Submatrix V = U[outputs, inputs] (α side) and its conjugate (β side).
    let mut v = Array2::zeros((n, n));
    for (r, &out) in outputs.iter().enumerate() {
        for (c, &inp) in inputs.iter().enumerate() {
            v[(r, c)] = u[(out, inp)];
        }
    }

    // A₀ over all 2^N sign configurations (bit b of `cfg` = sign of input b).
    let side_table = |mat: &Array2<C64>| -> Vec<C64> {
        (0..1usize << n)
            .map(|cfg| {
                let mut parity = 1.0;
                let mut product = C64::new(1.0, 0.0);
                for row in 0..n {
                    let mut amp = C64::new(0.0, 0.0);
                    for colbit in 0..n {
                        let sign = if cfg >> colbit & 1 == 1 { -1.0 } else { 1.0 };
                        amp += mat[(row, colbit)] * sign;
                    }
                    product *= amp;
                }
                for colbit in 0..n {
                    if cfg >> colbit & 1 == 1 {
                        parity = -parity;
                    }
                }
                product * parity
            })
            .collect()
    };
    let a0 = side_table(&v);
    let b0 = side_table(&v.mapv(|x| x.conj()));
    let norm = 1.0 / 4.0_f64.powi(n as i32);

    match mode {
        SamplingMode::Exact => {
            if n > MAX_EXACT_PHOTONS {
                return Err(Error::invalid(format!(
                    "exact enumeration supports N ≤ {MAX_EXACT_PHOTONS} photons"
                )));
            }
            let mut total = C64::new(0.0, 0.0);
            for &a in &a0 {
                let mut row_sum = C64::new(0.0, 0.0);
                for &b in &b0 {
                    row_sum += b;
                }
                total += a * row_sum;
            }
            Ok(BosonSamplingResult {
                value: (total * norm).re,
                stderr: None,
                method: "exact".into(),
                samples: 1 << (2 * n),
                seed: None,
            })
        }
        SamplingMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::invalid("sample count must be at least 1"));
            }
            let mask = (1usize << n) - 1;
            let scale = (1usize << (2 * n)) as f64 * norm; // = 1: uniform weights
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for index in 0..samples {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(index as u64);
                let bits: u64 = rng.gen();
                let cfg_a = bits as usize & mask;
                let cfg_b = (bits >> n) as usize & mask;
                let draw = (a0[cfg_a] * b0[cfg_b]).re * scale;
                sum += draw;
                sum_sq += draw * draw;
            }
            let mean = sum / samples as f64;
            let stderr = if samples > 1 {
                let variance = (sum_sq - samples as f64 * mean * mean)
                    / (samples as f64 - 1.0);
                (variance.max(0.0) / samples as f64).sqrt()
            } else {
                0.0
            };
            Ok(BosonSamplingResult {
                value: mean,
                stderr: Some(stderr),
                method: "mc".into(),
                samples,
                seed: Some(seed),
            })
        }
    }
}

/// Haar-random unitary: complex Ginibre matrix orthonormalized by modified
/// Gram–Schmidt (whose R has positive diagonal, which is exactly the phase
/// convention that makes the distribution Haar).
pub fn haar_unitary(dim: usize, seed: u64) -> Array2<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<Array1<C64>> = (0..dim)
        .map(|_| {
            Array1::from_iter((0..dim).map(|_| {
                let re: f64 = rng.sample(rand_distr::StandardNormal);
                let im: f64 = rng.sample(rand_distr::StandardNormal);
                C64::new(re, im)
            }))
        })
        .collect();
    for k in 0..dim {
        // Two orthogonalization passes for numerical safety.
        for _pass in 0..2 {
            for j in 0..k {
                let proj: C64 = columns[j]
                    .iter()
                    .zip(columns[k].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let prev = columns[j].clone();
                columns[k].zip_mut_with(&prev, |x, y| *x -= proj * y);
            }
        }
        let norm: f64 = columns[k].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        columns[k].mapv_inplace(|x| x / norm);
    }
    let mut u = Array2::zeros((dim, dim));
    for (j, col) in columns.iter().enumerate() {
        for i in 0..dim {
            u[(i, j)] = col[i];
        }
    }
    u
}

#[derive(Deserialize)]
struct UnitaryDocument {
    m: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// Parse the interchange unitary document `{"m": M, "re": [[…]], "im": [[…]]}`
/// and check unitarity.
pub fn unitary_from_json(text: &str) -> Result<Array2<C64>> {
    let doc: UnitaryDocument = serde_json::from_str(text)?;
    let m = doc.m;
    if doc.re.len() != m
        || doc.im.len() != m
        || doc.re.iter().any(|row| row.len() != m)
        || doc.im.iter().any(|row| row.len() != m)
    {
        return Err(Error::invalid("unitary document has inconsistent shape"));
    }
    let mut u = Array2::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            u[(i, j)] = C64::new(doc.re[i][j], doc.im[i][j]);
        }
    }
    let residual = unitarity_residual(&u);
    if residual > 1e-10 {
        return Err(Error::NotUnitary { residual });
    }
    Ok(u)
}

/// Serialize a unitary to the interchange document.
pub fn unitary_to_json(u: &Array2<C64>) -> Result<String> {
    #[derive(Serialize)]
    struct Out {
        m: usize,
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    }
    let m = u.nrows();
    let out = Out {
        m,
        re: (0..m)
            .map(|i| (0..m).map(|j| u[(i, j)].re).collect())
            .collect(),
        im: (0..m)
            .map(|i| (0..m).map(|j| u[(i, j)].im).collect())
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&out)?)
}
