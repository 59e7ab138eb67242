//! Time evolution of CPS states and P-functions.
//!
//! Four propagation styles live here:
//!
//! * **Direct stepping** — exponentiate the phase-basis Hamiltonian once and
//!   reuse the propagator for every step and every initial state.
//! * **Hybrid picture** — factor `H = ω(t)·n̂ + (κ/2)·n̂²` into a moving
//!   coherent reference (`dα/dt = −iω(t)α`, handled analytically) and an
//!   α-independent nonlinear propagator acting on the discrete phase
//!   indices.  Because every term is diagonal in `n̂` the factorization is
//!   exact for any `ω(t)`, including time-dependent frequencies.
//! * **Phase-noise ensembles** — momentum fringes of a prepared cat state
//!   averaged over a Gaussian accumulated phase, by Monte Carlo with
//!   counter-based per-sample RNG streams or by deterministic Gauss–Hermite
//!   quadrature.
//! * **Master equation** — Markovian loss and dephasing acting on the
//!   discrete P-function coefficients through left/right phase-basis
//!   matrices, exactly equivalent to the number-basis Lindblad generator on
//!   a zero-based window.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{make_basis, same_basis, Convention, CpsBasis, CpsState};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, expm, kron};
use crate::numeric;
use crate::operators::{
    assemble_hamiltonian, expectation, op_annihilation, op_number_power, CpsOperatorMatrix,
};
use crate::prep::{CpsPFunction, PfuncConvention};
use crate::C64;

/// Gauss–Hermite node count for the quadrature noise method.
pub const GH_NODES: usize = 64;

/// Samples per Monte Carlo work unit; partial sums are reduced in batch
/// order so results do not depend on the worker count.
const MC_BATCH: usize = 512;

/// Which factorization a propagation plan uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    /// One propagator `exp(−iℋΔt)` on a fixed basis.
    Direct,
    /// Moving reference amplitude plus nonlinear index evolution.
    Hybrid,
}

/// A complete description of a unitary propagation run.
#[derive(Debug, Clone)]
pub struct EvolutionPlan {
    /// Generator of the evolution, in the phase basis.
    pub hamiltonian: CpsOperatorMatrix,
    /// Total evolution time.
    pub t_max: f64,
    /// Number of equal steps; states are recorded at every step boundary.
    pub steps: usize,
    /// Factorization choice.
    pub picture: Picture,
}

impl EvolutionPlan {
    /// Validate step count and time range.
    pub fn new(
        hamiltonian: CpsOperatorMatrix,
        t_max: f64,
        steps: usize,
        picture: Picture,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("evolution needs at least one step"));
        }
        if !(t_max.is_finite() && t_max >= 0.0) {
            return Err(Error::invalid("t_max must be finite and non-negative"));
        }
        Ok(EvolutionPlan {
            hamiltonian,
            t_max,
            steps,
            picture,
        })
    }
}

/// States recorded at the step boundaries of a fixed-basis run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Times `k·Δt`, `k = 0..=steps`.
    pub times: Vec<f64>,
    /// The state at each recorded time, on the plan's fixed basis.
    pub states: Vec<CpsState>,
}

/// Observable record extracted from a trajectory, one entry per time.
#[derive(Debug, Clone)]
pub struct TrajectoryObservables {
    /// Recorded times.
    pub times: Vec<f64>,
    /// Coherent amplitude `⟨â⟩` (norm-weighted).
    pub amplitude: Vec<C64>,
    /// Mean occupation `⟨n̂⟩`.
    pub number: Vec<f64>,
    /// Physical squared norm `Ψ†MΨ` at each time.
    pub norm: Vec<f64>,
}

impl TrajectoryObservables {
    /// Absolute norm change relative to the initial record.
    pub fn norm_drift(&self) -> Vec<f64> {
        let base = self.norm.first().copied().unwrap_or(1.0);
        self.norm.iter().map(|n| (n - base).abs()).collect()
    }
}

fn observables_on_fixed_basis(
    basis: &Arc<CpsBasis>,
    times: &[f64],
    coeff_rows: impl Iterator<Item = Array1<C64>>,
    frame_phases: Option<&[f64]>,
) -> Result<TrajectoryObservables> {
    let op_a = op_annihilation(basis)?;
    let op_n = op_number_power(basis, 1)?;
    let mut amplitude = Vec::with_capacity(times.len());
    let mut number = Vec::with_capacity(times.len());
    let mut norm = Vec::with_capacity(times.len());
    for (k, coeffs) in coeff_rows.enumerate() {
        let state = CpsState::new(Arc::clone(basis), coeffs, Convention::NormalizedBasis)?;
        let nrm = state.physical_norm_sqr();
        let mut a_mean = expectation(&op_a, &state)? / nrm;
        if let Some(phases) = frame_phases {
            // Moving reference: â picks up the accumulated rotation.
            a_mean *= C64::from_polar(1.0, -phases[k]);
        }
        amplitude.push(a_mean);
        number.push((expectation(&op_n, &state)? / nrm).re);
        norm.push(nrm);
    }
    Ok(TrajectoryObservables {
        times: times.to_vec(),
        amplitude,
        number,
        norm,
    })
}

impl Trajectory {
    /// Amplitude, occupation, and norm at every recorded time.
    ///
    /// Requires a zero-based window (the annihilation matrix is only defined
    /// there).
    pub fn observables(&self) -> Result<TrajectoryObservables> {
        let basis = &self.states[0].basis;
        observables_on_fixed_basis(
            basis,
            &self.times,
            self.states
                .iter()
                .map(|s| s.to_convention(Convention::NormalizedBasis).coeffs),
            None,
        )
    }
}

/// Step every recorded state of a run with one cached propagator.
///
/// The propagator `exp(−iℋΔt)` is exponentiated once — it does not depend on
/// the initial state — and applied repeatedly.  The physical norm `Ψ†MΨ` is
/// conserved by the exact flow because `ℋ` is self-adjoint in the M-metric;
/// the matrix exponential preserves it to within rounding.
pub fn propagate_unitary(state: &CpsState, plan: &EvolutionPlan) -> Result<Trajectory> {
    if plan.picture != Picture::Direct {
        return Err(Error::invalid(
            "plan requests the hybrid picture; use hybrid_evolve",
        ));
    }
    if !same_basis(&state.basis, &plan.hamiltonian.basis) {
        return Err(Error::BasisMismatch(
            "state and Hamiltonian use different bases".into(),
        ));
    }
    let dt = plan.t_max / plan.steps as f64;
    let generator = plan.hamiltonian.entries.mapv(|h| h * C64::new(0.0, -dt));
    let propagator = expm(&generator)?;

    let mut current = state.to_convention(Convention::NormalizedBasis);
    let mut times = Vec::with_capacity(plan.steps + 1);
    let mut states = Vec::with_capacity(plan.steps + 1);
    times.push(0.0);
    states.push(current.clone());
    for k in 1..=plan.steps {
        current = CpsState::new(
            Arc::clone(&current.basis),
            propagator.dot(&current.coeffs),
            Convention::NormalizedBasis,
        )?;
        times.push(dt * k as f64);
        states.push(current.clone());
    }
    Ok(Trajectory { times, states })
}

/// Trajectory of a hybrid-picture run: discrete coefficients on a fixed
/// index basis plus a moving coherent reference.
#[derive(Debug, Clone)]
pub struct HybridTrajectory {
    /// Times `k·Δt`.
    pub times: Vec<f64>,
    /// Basis at the initial reference amplitude.
    pub basis0: Arc<CpsBasis>,
    /// Normalized-convention coefficients at each time.
    pub coeffs: Vec<Array1<C64>>,
    /// Accumulated rotation `θ(t) = ∫ω dt'` at each time.
    pub ref_phases: Vec<f64>,
    /// Moving reference `α(t) = α₀·e^{−iθ(t)}` at each time.
    pub ref_amplitudes: Vec<C64>,
}

impl HybridTrajectory {
    /// The physical state at record `k`, expressed on the basis at the
    /// moving reference amplitude (built on demand).
    pub fn state_at(&self, k: usize) -> Result<CpsState> {
        let basis = make_basis(self.basis0.d(), self.basis0.n0(), self.ref_amplitudes[k])?;
        CpsState::new(
            basis.into_shared(),
            self.coeffs[k].clone(),
            Convention::NormalizedBasis,
        )
    }

    /// Amplitude, occupation, and norm at every recorded time.
    ///
    /// All quadratic forms are evaluated on the fixed initial basis — the
    /// Gram matrix and the number/annihilation matrices depend on the
    /// reference only through `|α|` and the window, both invariant under the
    /// rotation — and `⟨â⟩` is rotated into the lab frame by `e^{−iθ(t)}`.
    pub fn observables(&self) -> Result<TrajectoryObservables> {
        observables_on_fixed_basis(
            &self.basis0,
            &self.times,
            self.coeffs.iter().cloned(),
            Some(&self.ref_phases),
        )
    }
}

/// Gauss–Legendre 3-point increment of `∫ω` over one step.
fn frequency_increment(omega_of_t: &impl Fn(f64) -> f64, t0: f64, dt: f64) -> f64 {
    const NODE: f64 = 0.774596669241483_4; // √(3/5)
    const W_EDGE: f64 = 5.0 / 9.0;
    const W_MID: f64 = 8.0 / 9.0;
    let half = dt / 2.0;
    let mid = t0 + half;
    half * (W_EDGE * omega_of_t(mid - half * NODE)
        + W_MID * omega_of_t(mid)
        + W_EDGE * omega_of_t(mid + half * NODE))
}

/// Evolve under `H = ω(t)·n̂ + (κ/2)·n̂²` in the factorized picture.
///
/// The reference amplitude integrates `dα/dt = −iω(t)·α` (the frequency
/// integral is taken per step by 3-point Gauss–Legendre, exact for smooth
/// `ω`), while the coefficients evolve under the α-independent quadratic
/// propagator `exp(−i(κ/2)·𝒪^{[2]}·Δt)`, exponentiated once and cached.
/// Because `n̂` and `n̂²` commute the split is exact: the state at time `t`
/// on the basis at `α(t)` equals the direct evolution on the fixed basis.
pub fn hybrid_evolve(
    state: &CpsState,
    omega_of_t: impl Fn(f64) -> f64,
    kappa: f64,
    t_max: f64,
    steps: usize,
) -> Result<HybridTrajectory> {
    if steps == 0 {
        return Err(Error::invalid("evolution needs at least one step"));
    }
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::invalid("t_max must be finite and non-negative"));
    }
    if !kappa.is_finite() {
        return Err(Error::invalid("kappa must be finite"));
    }
    let basis = Arc::clone(&state.basis);
    let dt = t_max / steps as f64;
    let quadratic = op_number_power(&basis, 2)?;
    let generator = quadratic
        .entries
        .mapv(|h| h * C64::new(0.0, -0.5 * kappa * dt));
    let index_step = expm(&generator)?;

    let mut coeffs = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    let mut ref_phases = Vec::with_capacity(steps + 1);
    let mut ref_amplitudes = Vec::with_capacity(steps + 1);
    let mut current = state.to_convention(Convention::NormalizedBasis).coeffs;
    let mut theta = 0.0;
    times.push(0.0);
    coeffs.push(current.clone());
    ref_phases.push(0.0);
    ref_amplitudes.push(basis.alpha());
    for k in 1..=steps {
        let t0 = dt * (k - 1) as f64;
        theta += frequency_increment(&omega_of_t, t0, dt);
        current = index_step.dot(&current);
        times.push(dt * k as f64);
        coeffs.push(current.clone());
        ref_phases.push(theta);
        ref_amplitudes.push(basis.alpha() * C64::from_polar(1.0, -theta));
    }
    Ok(HybridTrajectory {
        times,
        basis0: basis,
        coeffs,
        ref_phases,
        ref_amplitudes,
    })
}

/// Full-space mean coherent amplitude of the anharmonic oscillator,
/// `⟨â⟩(t) = α·exp[|α|²(e^{−iκt} − 1) − i(ω + κ/2)t]`.
pub fn anharmonic_analytic(alpha: C64, omega: f64, kappa: f64, t: f64) -> C64 {
    let phase = C64::new(0.0, -kappa * t).exp() - 1.0;
    alpha * (phase * alpha.norm_sqr() + C64::new(0.0, -(omega + kappa / 2.0) * t)).exp()
}

/// How a phase-noise ensemble is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMethod {
    /// Gaussian draws with counter-based per-sample RNG streams.
    MonteCarlo,
    /// Deterministic Gauss–Hermite quadrature over the phase distribution.
    GaussHermite,
}

/// Gaussian accumulated-phase noise specification.
#[derive(Debug, Clone, Copy)]
pub struct PhaseNoiseModel {
    /// Standard deviation of the accumulated phase, radians.
    pub sigma: f64,
    /// Monte Carlo sample count.
    pub samples: usize,
    /// Monte Carlo base seed.
    pub seed: u64,
    /// Averaging method.
    pub method: NoiseMethod,
}

/// Parameters echoed alongside a fringe curve.
#[derive(Debug, Clone, Serialize)]
pub struct FringeMeta {
    /// Cat amplitude.
    pub alpha: f64,
    /// Phase-set size used for the evolution.
    pub d: usize,
    /// Phase-noise standard deviation.
    pub sigma: f64,
    /// Samples drawn (MC) or quadrature nodes used.
    pub samples: usize,
    /// RNG seed (MC only).
    pub seed: Option<u64>,
    /// `"noise-free"`, `"gauss-hermite"`, or `"monte-carlo"`.
    pub method: String,
}

/// Momentum fringe curve, optionally with per-point standard errors.
///
/// For a grid covering the envelope (the default `[−4, 4]`), the density is
/// non-negative and its Simpson integral is 1 to within the grid resolution.
#[derive(Debug, Clone)]
pub struct FringeResult {
    /// Momentum grid.
    pub p_grid: Vec<f64>,
    /// Ensemble-averaged momentum density `P(p)`.
    pub density: Vec<f64>,
    /// Standard error of the mean per grid point (Monte Carlo only).
    pub stderr: Option<Vec<f64>>,
    /// Run parameters.
    pub meta: FringeMeta,
}

/// Default phase-set size for a cat evolution: `2⌈α²⌉`, which is even and
/// comfortably contains the Poisson peak at `|α|²`.
pub fn default_cat_dimension(alpha: f64) -> usize {
    (2.0 * alpha.powi(2).ceil()).max(2.0) as usize
}

/// Closed-form noise-free fringe `P(p) = e^{−p²}/√π·[1 − sin(2√2·α·p)]`.
pub fn cat_fringe_closed_form(alpha: f64, p: f64) -> f64 {
    (-p * p).exp() / PI.sqrt() * (1.0 - (2.0 * 2.0_f64.sqrt() * alpha * p).sin())
}

/// Harmonic-oscillator momentum wavefunctions `h_n(p)` (real), as a `d×P`
/// table over the grid.  Stable three-term recursion:
/// `h_0 = π^{−1/4}e^{−p²/2}`,
/// `h_{n+1} = √(2/(n+1))·p·h_n − √(n/(n+1))·h_{n−1}`.
fn hermite_table(d: usize, p_grid: &[f64]) -> Array2<f64> {
    let mut table = Array2::zeros((d, p_grid.len()));
    for (ip, &p) in p_grid.iter().enumerate() {
        let mut prev = 0.0;
        let mut cur = PI.powf(-0.25) * (-p * p / 2.0).exp();
        for n in 0..d {
            table[(n, ip)] = cur;
            let next = (2.0 / (n as f64 + 1.0)).sqrt() * p * cur
                - (n as f64 / (n as f64 + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
    }
    table
}

/// Per-harmonic damping factors `η(k) ≈ E[cos(kθ)]`, `θ ~ N(0, σ²)`,
/// for `k = 0..=k_max`; exact value `e^{−σ²k²/2}`.
///
/// A single Gauss–Hermite rule loses accuracy once the integrand oscillates
/// faster than the node spacing, so the variance is split into
/// `J = ⌈(√2·σ·k_max/10)²⌉` independent stages — keeping each stage's
/// largest phase-frequency argument at or below ~10, where the 64-node rule
/// is accurate to near machine precision — and the factors are composed as
/// `η(k) = η_stage(k)^J` (the characteristic function of a sum of
/// independent Gaussians is the product of the factors).
pub fn gauss_hermite_damping(sigma: f64, k_max: usize) -> Result<Vec<f64>> {
    if sigma < 0.0 {
        return Err(Error::invalid("sigma must be non-negative"));
    }
    if sigma == 0.0 {
        return Ok(vec![1.0; k_max + 1]);
    }
    let stages = ((2.0_f64.sqrt() * sigma * k_max as f64 / 10.0).powi(2))
        .ceil()
        .max(1.0) as i32;
    let stage_sigma = sigma / (stages as f64).sqrt();
    let (nodes, weights) = numeric::gauss_hermite(GH_NODES)?;
    // The kernel is an expectation over a probability measure, so η(0) = 1
    // must hold exactly; normalize away the ~1e-15 weight-sum rounding,
    // which the `^stages` composition would otherwise amplify.
    let total: f64 = weights.iter().sum();
    Ok((0..=k_max)
        .map(|k| {
            let b = k as f64 * 2.0_f64.sqrt() * stage_sigma;
            let stage: f64 = nodes
                .iter()
                .zip(weights.iter())
                .map(|(&x, &w)| w * (b * x).cos())
                .sum();
            (stage / total).powi(stages)
        })
        .collect())
}

/// Momentum fringes of a phase-diffused cat state.
///
/// A coherent state on a zero-based window of even size `d` is driven by the
/// quadratic propagator to the two-component superposition time
/// `t_c = π/(2Ω)` with `Ω = κ/2` (the prepared phase `e^{−iπn²/2}` is
/// κ-independent).  The momentum density of the cat, with its reference
/// rotated by an accumulated phase `θ`, is then averaged over
/// `θ ~ N(0, σ²)` by the requested method.
pub fn cat_fringe(
    alpha: f64,
    noise: &PhaseNoiseModel,
    p_grid: &[f64],
    d: usize,
) -> Result<FringeResult> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha must be positive"));
    }
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::invalid(
            "phase-set size must be even so that −α is a member",
        ));
    }
    if noise.sigma < 0.0 || !noise.sigma.is_finite() {
        return Err(Error::invalid("sigma must be finite and non-negative"));
    }
    if noise.samples == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if p_grid.is_empty() || p_grid.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("momentum grid must be non-empty and finite"));
    }

    // Prepare the cat: drive the coherent member through the quadratic
    // propagator at the superposition time, then read off its window
    // amplitudes.
    let basis = make_basis(d, 0, C64::new(alpha, 0.0))?.into_shared();
    let quadratic = op_number_power(&basis, 2)?;
    let prep = expm(&quadratic.entries.mapv(|h| h * C64::new(0.0, -PI / 2.0)))?;
    let mut member = Array1::zeros(d);
    member[0] = C64::new(1.0, 0.0);
    let cat = CpsState::new(
        Arc::clone(&basis),
        prep.dot(&member),
        Convention::NormalizedBasis,
    )?;
    let mut fock = crate::basis::cps_to_fock(&cat);
    let norm = fock.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    fock.mapv_inplace(|c| c / norm);

    // Momentum-representation coefficients: ⟨p|n⟩ = (−i)ⁿ·h_n(p); fold the
    // (−i)ⁿ into the state so the Hermite table stays real.
    let minus_i = C64::new(0.0, -1.0);
    let mut phase = C64::new(1.0, 0.0);
    let g: Array1<C64> = fock
        .iter()
        .map(|&f| {
            let value = f * phase;
            phase *= minus_i;
            value
        })
        .collect();
    let h_table = hermite_table(d, p_grid);
    let n_p = p_grid.len();

    if noise.sigma == 0.0 {
        // Single deterministic shot.
        let mut density = vec![0.0; n_p];
        for (ip, slot) in density.iter_mut().enumerate() {
            let mut amp = C64::new(0.0, 0.0);
            for n in 0..d {
                amp += g[n] * h_table[(n, ip)];
            }
            *slot = amp.norm_sqr();
        }
        return Ok(FringeResult {
            p_grid: p_grid.to_vec(),
            density,
            stderr: None,
            meta: FringeMeta {
                alpha,
                d,
                sigma: 0.0,
                samples: 1,
                seed: None,
                method: "noise-free".into(),
            },
        });
    }

    match noise.method {
        NoiseMethod::GaussHermite => {
            let eta = gauss_hermite_damping(noise.sigma, d - 1)?;
            let stages = ((2.0_f64.sqrt() * noise.sigma * (d - 1) as f64 / 10.0).powi(2))
                .ceil()
                .max(1.0) as usize;
            let mut density = vec![0.0; n_p];
            for (ip, slot) in density.iter_mut().enumerate() {
                // c_n = g_n·h_n(p);  P = Σ_{n,m} c_n c̄_m η(n−m).
                let column: Vec<C64> = (0..d).map(|n| g[n] * h_table[(n, ip)]).collect();
                let mut total = eta[0] * column.iter().map(|c| c.norm_sqr()).sum::<f64>();
                for k in 1..d {
                    let mut cross = C64::new(0.0, 0.0);
                    for n in 0..d - k {
                        cross += column[n] * column[n + k].conj();
                    }
                    total += 2.0 * eta[k] * cross.re;
                }
                *slot = total.max(0.0);
            }
            Ok(FringeResult {
                p_grid: p_grid.to_vec(),
                density,
                stderr: None,
                meta: FringeMeta {
                    alpha,
                    d,
                    sigma: noise.sigma,
                    samples: GH_NODES * stages,
                    seed: None,
                    method: "gauss-hermite".into(),
                },
            })
        }
        NoiseMethod::MonteCarlo => {
            let h_complex = h_table.mapv(|x| C64::new(x, 0.0));
            let n_batches = noise.samples.div_ceil(MC_BATCH);
            // Each batch accumulates its own partial sums in sample order;
            // batches are reduced in index order afterwards, so the result
            // is independent of how rayon schedules them.
            let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n_batches)
                .into_par_iter()
                .map(|batch| {
                    let start = batch * MC_BATCH;
                    let count = MC_BATCH.min(noise.samples - start);
                    let mut rows = Array2::zeros((count, d));
                    for j in 0..count {
                        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
                        rng.set_stream((start + j) as u64);
                        let z: f64 = rng.sample(rand_distr::StandardNormal);
                        let theta = noise.sigma * z;
                        let rot = C64::from_polar(1.0, -theta);
                        let mut power = C64::new(1.0, 0.0);
                        for n in 0..d {
                            rows[(j, n)] = g[n] * power;
                            power *= rot;
                        }
                    }
                    let amplitudes = rows.dot(&h_complex);
                    let mut sum = vec![0.0; n_p];
                    let mut sum_sq = vec![0.0; n_p];
                    for j in 0..count {
                        for ip in 0..n_p {
                            let p_val = amplitudes[(j, ip)].norm_sqr();
                            sum[ip] += p_val;
                            sum_sq[ip] += p_val * p_val;
                        }
                    }
                    (sum, sum_sq)
                })
                .collect();

            let n = noise.samples as f64;
            let mut density = vec![0.0; n_p];
            let mut stderr = vec![0.0; n_p];
            let mut scratch = vec![0.0; n_batches];
            for ip in 0..n_p {
                for (b, part) in partials.iter().enumerate() {
                    scratch[b] = part.0[ip];
                }
                let total = numeric::pairwise_sum(&scratch);
                for (b, part) in partials.iter().enumerate() {
                    scratch[b] = part.1[ip];
                }
                let total_sq = numeric::pairwise_sum(&scratch);
                let mean = total / n;
                density[ip] = mean;
                stderr[ip] = if noise.samples > 1 {
                    (((total_sq - n * mean * mean) / (n - 1.0)).max(0.0) / n).sqrt()
                } else {
                    0.0
                };
            }
            Ok(FringeResult {
                p_grid: p_grid.to_vec(),
                density,
                stderr: Some(stderr),
                meta: FringeMeta {
                    alpha,
                    d,
                    sigma: noise.sigma,
                    samples: noise.samples,
                    seed: Some(noise.seed),
                    method: "monte-carlo".into(),
                },
            })
        }
    }
}

/// Michelson visibility `(max − min)/(max + min)` of a fringe curve.
pub fn michelson_visibility(density: &[f64]) -> f64 {
    let max = density.iter().copied().fold(f64::MIN, f64::max);
    let min = density.iter().copied().fold(f64::MAX, f64::min);
    if max + min <= 0.0 || density.is_empty() {
        return 0.0;
    }
    (max - min) / (max + min)
}

/// Height difference between the brightest and darkest central fringe,
/// `(P(p₋) − P(p₊))/2` at the first fringe extrema `p± = ±π/(4√2·α)`
/// (snapped to the nearest grid points).  1/√π·e^{−p₊²} for a noise-free
/// cat; collapses toward 0 as phase noise washes the fringes out.
pub fn central_fringe_amplitude(p_grid: &[f64], density: &[f64], alpha: f64) -> f64 {
    let target = PI / (4.0 * 2.0_f64.sqrt() * alpha);
    let nearest = |value: f64| -> usize {
        let mut best = 0;
        let mut best_dist = f64::MAX;
        for (i, &p) in p_grid.iter().enumerate() {
            let dist = (p - value).abs();
            if dist < best_dist {
                best_dist = dist;
                best = i;
            }
        }
        best
    };
    (density[nearest(-target)] - density[nearest(target)]) / 2.0
}

/// Evolve a single-mode P-function under the Markovian master equation
/// `ρ̇ = −i[H,ρ] + γ_a𝒟[â]ρ + γ_p𝒟[n̂]ρ`, `H = ω·n̂ + (κ/2)·n̂²`,
/// `𝒟[L]ρ = 2LρL† − L†Lρ − ρL†L`.
///
/// Left products act through the phase-basis matrices on the α side; right
/// products act on the β side as `(𝒪†_{β*})†` — the conjugated matrices the
/// pair structure requires.  On a zero-based window every Lindblad term maps
/// the window into itself, so the evolution is exactly the number-basis
/// generator in a different linear representation.
pub fn master_evolve_cps(
    pfunc: &CpsPFunction,
    omega: f64,
    kappa: f64,
    gamma_p: f64,
    gamma_a: f64,
    t: f64,
    steps: usize,
) -> Result<CpsPFunction> {
    if pfunc.modes.len() != 1 {
        return Err(Error::invalid("master evolution is single-mode"));
    }
    let basis = Arc::clone(&pfunc.modes[0]);
    if basis.n0() != 0 {
        return Err(Error::invalid(
            "master evolution needs a zero-based window so loss stays inside it",
        ));
    }
    if gamma_p < 0.0 || gamma_a < 0.0 {
        return Err(Error::invalid("decay rates must be non-negative"));
    }
    if steps == 0 {
        return Err(Error::invalid("evolution needs at least one step"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("time must be finite and non-negative"));
    }
    let d = basis.d();
    let beta = pfunc.betas[0];

    // β-side matrices live on the basis at β* (for the default β = α* this
    // is the α basis itself).
    let beta_basis = if beta == basis.alpha().conj() {
        Arc::clone(&basis)
    } else {
        make_basis(d, 0, beta.conj())?.into_shared()
    };

    let h_left = assemble_hamiltonian(&basis, omega, kappa)?.entries;
    let n_left = op_number_power(&basis, 1)?.entries;
    let n2_left = op_number_power(&basis, 2)?.entries;
    let a_left = op_annihilation(&basis)?.entries;

    // Right-multiplication matrix of an operator X: adjoint of the β*-basis
    // phase matrix of X† (here X† = X for H, n̂, n̂², and (â†)† = â).
    let h_right = adjoint(&assemble_hamiltonian(&beta_basis, omega, kappa)?.entries);
    let n_right = adjoint(&op_number_power(&beta_basis, 1)?.entries);
    let n2_right = adjoint(&op_number_power(&beta_basis, 2)?.entries);
    let adag_right = adjoint(&op_annihilation(&beta_basis)?.entries);

    // Row-major vec(p): left product A·p ↦ (A⊗1)·vec, right product
    // p·B ↦ (1⊗Bᵀ)·vec.
    let eye: Array2<C64> = Array2::eye(d);
    let lift_left = |m: &Array2<C64>| kron(m, &eye);
    let lift_right = |m: &Array2<C64>| kron(&eye, &m.t().to_owned());
    let sandwich = |l: &Array2<C64>, r: &Array2<C64>| kron(l, &r.t().to_owned());

    let minus_i = C64::new(0.0, -1.0);
    let mut generator = (lift_left(&h_left) - lift_right(&h_right)).mapv(|x| x * minus_i);
    if gamma_a > 0.0 {
        let mut loss = sandwich(&a_left, &adag_right).mapv(|x| x * 2.0);
        loss = loss - lift_left(&n_left) - lift_right(&n_right);
        generator = generator + loss.mapv(|x| x * gamma_a);
    }
    if gamma_p > 0.0 {
        let mut dephase = sandwich(&n_left, &n_right).mapv(|x| x * 2.0);
        dephase = dephase - lift_left(&n2_left) - lift_right(&n2_right);
        generator = generator + dephase.mapv(|x| x * gamma_p);
    }

    let dt = t / steps as f64;
    let propagator = expm(&generator.mapv(|x| x * dt))?;

    let plain = pfunc.to_convention(PfuncConvention::Unnormalized);
    let mut vec_p: Array1<C64> = Array1::from_iter(plain.coeffs.iter().copied());
    for _ in 0..steps {
        vec_p = propagator.dot(&vec_p);
    }
    let coeffs = Array2::from_shape_vec((d, d), vec_p.to_vec())
        .expect("square reshape of evolved coefficients");
    let evolved = CpsPFunction::new(
        plain.modes.clone(),
        plain.betas.clone(),
        coeffs,
        PfuncConvention::Unnormalized,
    )?;
    Ok(evolved.to_convention(pfunc.convention))
}
