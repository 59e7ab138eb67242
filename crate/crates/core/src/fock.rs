//! Brute-force truncated number-basis reference implementation.
//!
//! Everything in this module works with dense matrices over the number states
//! `|0⟩ … |D−1⟩` and is deliberately unclever: ladder operators are written
//! down entry by entry, closed-system evolution goes through a full
//! eigendecomposition, open-system evolution through a dense `D² × D²`
//! superoperator exponential, and quadrature distributions come from the
//! harmonic-oscillator eigenfunction recursion.  The point is not speed — it
//! is to have an independent ground truth against which the phase-basis
//! routines elsewhere in the crate are validated.
//!
//! All functions return freshly allocated, immutable results and hold no
//! internal state, so oracle objects can be shared freely between concurrent
//! test workers.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::C64;

/// Dense state vector over the number states `|0⟩ … |D−1⟩`.
pub type FockVector = Array1<C64>;

/// Dense operator on the truncated number basis.
pub type FockOperator = Array2<C64>;

/// Dense density matrix on the truncated number basis.
pub type FockDensity = Array2<C64>;

/// Hard cap on the truncated dimension.  The oracle is a validation tool,
/// not a production-scale solver, and dense storage past this point stops
/// being "brute force" and starts being a liability.
pub const MAX_DIM: usize = 256;

/// Cap on the dimension accepted by [`lindblad_evolve_exact`], whose dense
/// superoperator costs `O(D⁶)` to exponentiate.
pub const MAX_LINDBLAD_DIM: usize = 64;

/// Cap on the matrix size accepted by [`permanent`] (`O(2ᴺ·N)` cost).
pub const MAX_PERMANENT_DIM: usize = 30;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("Fock dimension must be at least 1"));
    }
    if dim > MAX_DIM {
        return Err(Error::invalid(format!(
            "Fock dimension {dim} exceeds the oracle cap {MAX_DIM}"
        )));
    }
    Ok(())
}

/// Annihilation, creation, and number operators on a `dim`-state truncation.
///
/// `a|n⟩ = √n|n−1⟩` and `a†|n⟩ = √(n+1)|n+1⟩`, cut off at `|D−1⟩`.  The
/// number operator is built directly as `diag(0, 1, …, D−1)` so its entries
/// are exact integers rather than rounded products `√n·√n`.
pub fn ladder_ops(dim: usize) -> Result<(FockOperator, FockOperator, FockOperator)> {
    check_dim(dim)?;
    let mut a: FockOperator = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a_dag = linalg::adjoint(&a);
    let mut n_op: FockOperator = Array2::zeros((dim, dim));
    for n in 0..dim {
        n_op[(n, n)] = C64::new(n as f64, 0.0);
    }
    Ok((a, a_dag, n_op))
}

/// Coherent-state coefficient vector `αⁿ/√(n!)` for `n < dim`.
///
/// Built by the stable recursion `c[n] = c[n−1]·α/√n`, which never forms
/// `αⁿ` or `n!` separately.  With `normalized` set, the vector is divided by
/// the *full-space* norm `e^{|α|²/2}`; at small `dim` the result is then a
/// strict truncation of the normalized state, not a unit vector.
pub fn coherent_vector(alpha: C64, dim: usize, normalized: bool) -> Result<FockVector> {
    check_dim(dim)?;
    let mut coeffs: FockVector = Array1::zeros(dim);
    coeffs[0] = C64::new(1.0, 0.0);
    for n in 1..dim {
        let prev = coeffs[n - 1];
        coeffs[n] = prev * alpha / C64::new((n as f64).sqrt(), 0.0);
    }
    if normalized {
        let scale = (-alpha.norm_sqr() / 2.0).exp();
        coeffs.mapv_inplace(|c| c * scale);
    }
    Ok(coeffs)
}

/// Diagonal 0/1 projector together with its rank, so callers can detect the
/// empty-selection case without rescanning the matrix.
#[derive(Debug, Clone)]
pub struct Projector {
    /// Dense diagonal matrix with entries 0 or 1.
    pub matrix: FockOperator,
    /// Number of basis states selected.
    pub rank: usize,
}

impl Projector {
    /// True when the selector matched nothing.  A zero projector is legal but
    /// almost always a caller mistake, so it is surfaced as a warning status
    /// rather than an error.
    pub fn is_empty(&self) -> bool {
        self.rank == 0
    }
}

/// Projector onto the number states `n ∈ 0..dim` satisfying `select`.
pub fn number_projector<F>(dim: usize, select: F) -> Result<Projector>
where
    F: Fn(usize) -> bool,
{
    check_dim(dim)?;
    let mut matrix: FockOperator = Array2::zeros((dim, dim));
    let mut rank = 0;
    for n in 0..dim {
        if select(n) {
            matrix[(n, n)] = C64::new(1.0, 0.0);
            rank += 1;
        }
    }
    Ok(Projector { matrix, rank })
}

/// Projector on a product of truncated modes keeping the states whose *total*
/// occupation satisfies `select`.
///
/// Mode 0 is the slowest-varying index of the flattened product space,
/// matching the ordering of [`linalg::kron`].  The product dimension is
/// subject to the same cap as a single mode.
pub fn total_number_projector<F>(dims: &[usize], select: F) -> Result<Projector>
where
    F: Fn(usize) -> bool,
{
    if dims.is_empty() {
        return Err(Error::invalid("total_number_projector needs at least one mode"));
    }
    let mut total: usize = 1;
    for &d in dims {
        if d == 0 {
            return Err(Error::invalid("Fock dimension must be at least 1"));
        }
        total = total.saturating_mul(d);
    }
    check_dim(total)?;
    let mut matrix: FockOperator = Array2::zeros((total, total));
    let mut rank = 0;
    for idx in 0..total {
        // Mixed-radix digits of `idx`, mode 0 slowest.
        let mut rem = idx;
        let mut occupation = 0;
        for &d in dims.iter().rev() {
            occupation += rem % d;
            rem /= d;
        }
        if select(occupation) {
            matrix[(idx, idx)] = C64::new(1.0, 0.0);
            rank += 1;
        }
    }
    Ok(Projector { matrix, rank })
}

/// `exp(−iHt)|ψ⟩` through a full eigendecomposition of the Hermitian `h`.
///
/// Non-Hermitian input (residual above `1e-12` relative to the matrix scale)
/// is rejected.  Unitarity of the eigenvector route keeps the norm of the
/// result within `1e-12` of the input's.
pub fn evolve_exact(psi: &FockVector, h: &FockOperator, t: f64) -> Result<FockVector> {
    if h.nrows() != psi.len() || h.ncols() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: psi.len(),
            got: h.nrows().max(h.ncols()),
        });
    }
    linalg::evolve_eigh(h, t, psi)
}

/// Integrate the single-mode master equation with Hamiltonian
/// `H = ω·n̂ + (κ/2)·n̂²`, dephasing `γ_p(2n̂ρn̂ − n̂²ρ − ρn̂²)` and loss
/// `γ_a(2âρ↠− n̂ρ − ρn̂)` over time `t`.
///
/// The generator is assembled as a dense `D² × D²` matrix acting on the
/// row-major vectorization of `ρ` (using `vec(AρB) = (A ⊗ Bᵀ)vec(ρ)`) and
/// exponentiated once for the step `t/steps`; the resulting propagator is
/// then applied `steps` times.  Since the exponential is computed to full
/// precision, `steps` only controls how the work is split, not the accuracy.
pub fn lindblad_evolve_exact(
    rho: &FockDensity,
    omega: f64,
    kappa: f64,
    gamma_p: f64,
    gamma_a: f64,
    t: f64,
    steps: usize,
) -> Result<FockDensity> {
    let dim = rho.nrows();
    if rho.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: rho.ncols(),
        });
    }
    check_dim(dim)?;
    if dim > MAX_LINDBLAD_DIM {
        return Err(Error::invalid(format!(
            "dimension {dim} exceeds the dense-superoperator cap {MAX_LINDBLAD_DIM}"
        )));
    }
    if gamma_p < 0.0 || gamma_a < 0.0 {
        return Err(Error::invalid("decoherence rates must be non-negative"));
    }
    if steps == 0 {
        return Err(Error::invalid("step count must be at least 1"));
    }

    let (a, a_dag, n_op) = ladder_ops(dim)?;
    let n_sq = n_op.dot(&n_op);
    let h = n_op.mapv(|x| x * omega) + n_sq.mapv(|x| x * kappa / 2.0);
    let id: FockOperator = Array2::eye(dim);

    // Row-major vectorization: vec(AρB) = (A ⊗ Bᵀ) vec(ρ).
    let left = |op: &FockOperator| linalg::kron(op, &id);
    let right = |op: &FockOperator| linalg::kron(&id, &op.t().to_owned());
    let sandwich =
        |l: &FockOperator, r: &FockOperator| linalg::kron(l, &r.t().to_owned());

    let minus_i = C64::new(0.0, -1.0);
    let mut gen = (left(&h) - right(&h)).mapv(|x| x * minus_i);
    if gamma_p > 0.0 {
        let d_p = sandwich(&n_op, &n_op).mapv(|x| x * 2.0) - left(&n_sq) - right(&n_sq);
        gen = gen + d_p.mapv(|x| x * gamma_p);
    }
    if gamma_a > 0.0 {
        let d_a = sandwich(&a, &a_dag).mapv(|x| x * 2.0) - left(&n_op) - right(&n_op);
        gen = gen + d_a.mapv(|x| x * gamma_a);
    }

    let dt = t / steps as f64;
    let propagator = linalg::expm(&gen.mapv(|x| x * dt))?;

    let mut vec_rho: Array1<C64> = Array1::from_iter(rho.iter().cloned());
    for _ in 0..steps {
        vec_rho = propagator.dot(&vec_rho);
    }
    let evolved = Array2::from_shape_vec((dim, dim), vec_rho.to_vec())
        .expect("vectorized density has dim² entries");
    Ok(evolved)
}

/// Quadrature distribution `P(p) = |Σ_n ψ_n ⟨p|n⟩|²` on the given grid, for
/// the quadrature `p̂ = (â − â†)/(i√2)`.
///
/// `⟨p|n⟩ = (−i)ⁿ hₙ(p)` with `hₙ` the normalized harmonic-oscillator
/// eigenfunctions, evaluated by the three-term recursion
/// `h_{n+1} = √(2/(n+1))·p·hₙ − √(n/(n+1))·h_{n−1}` that never forms a
/// factorial.
pub fn quadrature_density(psi: &FockVector, p_grid: &[f64]) -> Vec<f64> {
    let h0_scale = std::f64::consts::PI.powf(-0.25);
    p_grid
        .iter()
        .map(|&p| {
            let mut h_prev = 0.0_f64;
            let mut h = h0_scale * (-p * p / 2.0).exp();
            let mut phase = C64::new(1.0, 0.0);
            let mut amp = C64::new(0.0, 0.0);
            for (n, &coeff) in psi.iter().enumerate() {
                amp += coeff * phase * h;
                phase *= C64::new(0.0, -1.0);
                let next_idx = (n + 1) as f64;
                let h_next =
                    (2.0 / next_idx).sqrt() * p * h - (n as f64 / next_idx).sqrt() * h_prev;
                h_prev = h;
                h = h_next;
            }
            amp.norm_sqr()
        })
        .collect()
}

/// Matrix permanent by Ryser's inclusion–exclusion with Gray-code subset
/// updates: `O(2ᴺ·N)` instead of the naive `O(N!·N)`.
///
/// `perm(A) = Σ_{S⊆cols, S≠∅} (−1)^{N−|S|} Π_i Σ_{j∈S} A_{ij}`.
pub fn permanent(m: &Array2<C64>) -> Result<C64> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    if n > MAX_PERMANENT_DIM {
        return Err(Error::invalid(format!(
            "permanent of a {n}×{n} matrix exceeds the 2ᴺ cost guard (N ≤ {MAX_PERMANENT_DIM})"
        )));
    }
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    let mut prev_gray: u64 = 0;
    for k in 1..(1u64 << n) {
        let gray = k ^ (k >> 1);
        let flipped = gray ^ prev_gray;
        let col = flipped.trailing_zeros() as usize;
        if gray & flipped != 0 {
            for (i, sum) in row_sums.iter_mut().enumerate() {
                *sum += m[(i, col)];
            }
        } else {
            for (i, sum) in row_sums.iter_mut().enumerate() {
                *sum -= m[(i, col)];
            }
        }
        let mut prod = C64::new(1.0, 0.0);
        for sum in &row_sums {
            prod *= *sum;
        }
        // (−1)^{N−|S|} with |S| = popcount of the Gray word.
        if (n as u32 - gray.count_ones()) % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
        prev_gray = gray;
    }
    Ok(total)
}

/// `⟨ψ|Ô|ψ⟩` for a pure state.
pub fn expval_state(psi: &FockVector, op: &FockOperator) -> C64 {
    let applied = op.dot(psi);
    psi.iter()
        .zip(applied.iter())
        .map(|(c, v)| c.conj() * v)
        .sum()
}

/// `Tr(ρÔ)`.
pub fn expval_density(rho: &FockDensity, op: &FockOperator) -> C64 {
    rho.dot(op).diag().sum()
}

/// `|ψ⟩⟨ψ|` as a dense density matrix.
pub fn pure_density(psi: &FockVector) -> FockDensity {
    let dim = psi.len();
    let mut rho: FockDensity = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            rho[(i, j)] = psi[i] * psi[j].conj();
        }
    }
    rho
}
