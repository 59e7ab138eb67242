//! Property-based invariants: structural facts that must hold for every
//! admissible parameter draw, not only at the pinned acceptance points.
//!
//! Everything here is deterministic mathematics (no statistical gates), so
//! the tolerances are set two or more orders above the observed roundoff
//! and failures shrink to reproducible counterexamples.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use cpskit::basis::{cps_to_fock, fock_to_cps, make_basis, Convention, CpsState};
use cpskit::evolution::{anharmonic_analytic, propagate_unitary, EvolutionPlan, Picture};
use cpskit::fock;
use cpskit::linalg;
use cpskit::operators::{assemble_hamiltonian, op_from_fock_matrix};
use cpskit::prep::{
    boson_sampling_correlation, haar_unitary, pfunc_from_rho, rho_from_pfunc, SamplingMode,
};
use cpskit::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Complex draw from an annulus: radius in `[lo, hi)`, uniform angle.
fn arb_alpha(lo: f64, hi: f64) -> impl Strategy<Value = C64> {
    (lo..hi, 0.0..(2.0 * PI)).prop_map(|(r, th)| C64::from_polar(r, th))
}

/// Complex coefficient vector with entries in the unit square.
fn arb_coeffs(len: usize) -> impl Strategy<Value = Array1<C64>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
        .prop_map(|v| Array1::from_iter(v.into_iter().map(|(re, im)| c(re, im))))
}

/// Dense complex matrix with entries in the unit square.
fn arb_matrix(dim: usize) -> impl Strategy<Value = Array2<C64>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim * dim).prop_map(move |v| {
        Array2::from_shape_vec((dim, dim), v.into_iter().map(|(re, im)| c(re, im)).collect())
            .expect("shape")
    })
}

fn max_abs(v: &Array1<C64>) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

proptest! {
    /// Number-window coefficients and phase-basis coefficients are two
    /// coordinates for the same vector: the round trip through both maps is
    /// the identity for every admissible basis.
    #[test]
    fn dft_round_trip_is_identity(
        (d, n0, alpha, coeffs) in (1usize..=32, 0usize..=4, arb_alpha(0.1, 8.0))
            .prop_flat_map(|(d, n0, alpha)| {
                (Just(d), Just(n0), Just(alpha), arb_coeffs(d))
            })
    ) {
        let basis = make_basis(d, n0, alpha).expect("basis").into_shared();
        let state = CpsState::new(Arc::clone(&basis), coeffs.clone(), Convention::UnnormalizedBasis)
            .expect("state");
        let back = fock_to_cps(&basis, &cps_to_fock(&state)).expect("round trip");
        let scale = max_abs(&coeffs).max(1.0);
        for q in 0..d {
            let diff = (back.coeffs[q] - coeffs[q]).norm();
            prop_assert!(
                diff <= 1e-12 * scale,
                "component {q}: |diff| = {diff:.3e} at d={d}, n0={n0}, alpha={alpha}"
            );
        }
    }

    /// The Gram matrix is Hermitian with unit diagonal, circulant in
    /// `(q' − q) mod d`, and positive semidefinite with the closed-form
    /// spectrum returned by `gram_eigenvalues`.
    #[test]
    fn gram_matrix_structure(
        d in 1usize..=24,
        n0 in 0usize..=3,
        alpha in arb_alpha(0.3, 6.0),
    ) {
        let basis = make_basis(d, n0, alpha).expect("basis");
        let m = basis.gram();
        for q in 0..d {
            prop_assert!((m[(q, q)] - c(1.0, 0.0)).norm() <= 1e-13, "diagonal at {q}");
            for qp in 0..d {
                prop_assert!(
                    (m[(q, qp)] - m[(qp, q)].conj()).norm() <= 1e-14,
                    "hermiticity at ({q},{qp})"
                );
                // Circulant: the entry depends only on the phase separation.
                let shift = m[(0, (qp + d - q) % d)];
                prop_assert!(
                    (m[(q, qp)] - shift).norm() <= 1e-14,
                    "circulant structure at ({q},{qp})"
                );
            }
        }
        let closed: Vec<f64> = {
            let mut v = basis.gram_eigenvalues();
            v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            v
        };
        let (numeric, _) = linalg::eigh(m).expect("eigh");
        for (a, b) in closed.iter().zip(numeric.iter()) {
            prop_assert!((a - b).abs() <= 1e-10, "spectrum: closed {a} vs eigh {b}");
            prop_assert!(*b >= -1e-12, "negative eigenvalue {b}");
        }
    }

    /// States survive a JSON round trip bit-exactly (shortest-round-trip
    /// float formatting), including convention and basis parameters.
    #[test]
    fn state_json_round_trip(
        (d, n0, alpha, coeffs, normalized) in
            (1usize..=16, 0usize..=3, arb_alpha(0.2, 6.0), any::<bool>())
            .prop_flat_map(|(d, n0, alpha, normalized)| {
                (Just(d), Just(n0), Just(alpha), arb_coeffs(d), Just(normalized))
            })
    ) {
        let basis = make_basis(d, n0, alpha).expect("basis").into_shared();
        let convention = if normalized {
            Convention::NormalizedBasis
        } else {
            Convention::UnnormalizedBasis
        };
        let state = CpsState::new(basis, coeffs, convention).expect("state");
        let reloaded = CpsState::from_json(&state.to_json().expect("serialize"))
            .expect("deserialize");
        prop_assert_eq!(reloaded.convention, state.convention);
        prop_assert_eq!(reloaded.basis.d(), d);
        prop_assert_eq!(reloaded.basis.n0(), n0);
        prop_assert_eq!(reloaded.basis.alpha(), alpha);
        for q in 0..d {
            prop_assert_eq!(reloaded.coeffs[q], state.coeffs[q], "coefficient {}", q);
        }
    }

    /// The permanent is linear in each row: replacing row `i` by `u + λv`
    /// splits the permanent into the two row-substituted permanents.
    #[test]
    fn permanent_is_multilinear_in_rows(
        (n, m, u, v, i, lambda) in (2usize..=5)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    arb_matrix(n),
                    arb_coeffs(n),
                    arb_coeffs(n),
                    0..n,
                    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| c(re, im)),
                )
            })
    ) {
        let substitute = |row: &Array1<C64>| {
            let mut a = m.clone();
            for j in 0..n {
                a[(i, j)] = row[j];
            }
            fock::permanent(&a).expect("permanent")
        };
        let combined = Array1::from_iter((0..n).map(|j| u[j] + lambda * v[j]));
        let lhs = substitute(&combined);
        let rhs = substitute(&u) + lambda * substitute(&v);
        let scale = (substitute(&u).norm() + (lambda * substitute(&v)).norm()).max(1.0);
        prop_assert!(
            (lhs - rhs).norm() <= 1e-10 * scale,
            "row {i}: |lhs - rhs| = {:.3e}", (lhs - rhs).norm()
        );
    }

    /// The discrete P-function determines the window density matrix exactly:
    /// expansion and reconstruction invert each other for any Hermitian input
    /// (moderate radii keep the inversion kernel √(n!)/rⁿ well conditioned).
    #[test]
    fn pfunc_round_trip_reconstructs_rho(
        (d, n0, alpha, beta, raw) in (2usize..=6, 0usize..=2, arb_alpha(1.0, 2.2), arb_alpha(1.0, 2.2))
            .prop_flat_map(|(d, n0, alpha, beta)| {
                (Just(d), Just(n0), Just(alpha), Just(beta), arb_matrix(d))
            })
    ) {
        let basis = make_basis(d, n0, alpha).expect("basis").into_shared();
        let rho = {
            let h = &raw + &linalg::adjoint(&raw);
            h.mapv(|x| x / 2.0)
        };
        let pfunc = pfunc_from_rho(&rho, &[Arc::clone(&basis)], Some(&[beta]))
            .expect("p-function");
        let back = rho_from_pfunc(&pfunc);
        let worst = back
            .iter()
            .zip(rho.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-12, "round-trip residual {worst:.3e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Unitary propagation conserves the physical norm `Ψ†MΨ` for any
    /// Hermitian window Hamiltonian, not just the anharmonic one.
    #[test]
    fn unitary_evolution_conserves_norm(
        (d, n0, alpha, raw, coeffs) in (2usize..=10, 0usize..=2, arb_alpha(1.2, 3.0))
            .prop_flat_map(|(d, n0, alpha)| {
                (Just(d), Just(n0), Just(alpha), arb_matrix(d), arb_coeffs(d))
            })
    ) {
        let basis = make_basis(d, n0, alpha).expect("basis").into_shared();
        let h_fock = {
            let h = &raw + &linalg::adjoint(&raw);
            h.mapv(|x| x / 2.0)
        };
        let h = op_from_fock_matrix(&basis, &h_fock, "random hermitian").expect("operator");
        let state = {
            let trial = CpsState::new(Arc::clone(&basis), coeffs, Convention::NormalizedBasis)
                .expect("state");
            let norm = trial.physical_norm_sqr();
            // Reject accidental near-null draws: the basis is non-orthogonal,
            // so a coefficient vector can have tiny physical length.
            prop_assume!(norm > 1e-6);
            CpsState::new(
                Arc::clone(&basis),
                trial.coeffs.mapv(|x| x / norm.sqrt()),
                Convention::NormalizedBasis,
            )
            .expect("normalized state")
        };
        let plan = EvolutionPlan::new(h, 0.7, 20, Picture::Direct).expect("plan");
        let trajectory = propagate_unitary(&state, &plan).expect("propagation");
        let base = trajectory.states[0].physical_norm_sqr();
        for (k, s) in trajectory.states.iter().enumerate() {
            let drift = (s.physical_norm_sqr() - base).abs();
            prop_assert!(drift <= 1e-10, "step {k}: norm drift {drift:.3e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The sampling estimator's circle radius is a bookkeeping parameter:
    /// it cancels analytically, so results are bit-identical across radii,
    /// in both exact and Monte Carlo modes.
    #[test]
    fn sampling_radius_is_inert(
        m in 2usize..=4,
        seed in 0u64..1000,
        r1 in 0.05..20.0f64,
        r2 in 0.05..20.0f64,
    ) {
        let u = haar_unitary(m, seed);
        let inputs = [0usize];
        let outputs = [m - 1];
        let exact_1 = boson_sampling_correlation(&u, &inputs, &outputs, r1, SamplingMode::Exact)
            .expect("exact");
        let exact_2 = boson_sampling_correlation(&u, &inputs, &outputs, r2, SamplingMode::Exact)
            .expect("exact");
        prop_assert_eq!(exact_1.value, exact_2.value);

        let mc = SamplingMode::MonteCarlo { samples: 200, seed };
        let mc_1 = boson_sampling_correlation(&u, &inputs, &outputs, r1, mc).expect("mc");
        let mc_2 = boson_sampling_correlation(&u, &inputs, &outputs, r2, mc).expect("mc");
        prop_assert_eq!(mc_1.value, mc_2.value);
        prop_assert_eq!(mc_1.stderr, mc_2.stderr);
    }
}

/// The window truncation error of the anharmonic run can only shrink as the
/// cutoff grows: enlarging the window adds Poisson weight it previously
/// clipped.
#[test]
fn cutoff_error_non_increasing_in_d() {
    let alpha = c(4.0, 0.0);
    let mut previous = f64::INFINITY;
    for d in [32usize, 40, 48] {
        let basis = make_basis(d, 0, alpha).expect("basis").into_shared();
        let mut coeffs = Array1::zeros(d);
        coeffs[0] = c(1.0, 0.0);
        let state = CpsState::new(Arc::clone(&basis), coeffs, Convention::NormalizedBasis)
            .expect("member state");
        let h = assemble_hamiltonian(&basis, 0.5, 1.0).expect("hamiltonian");
        let plan = EvolutionPlan::new(h, 4.0 * PI, 500, Picture::Direct).expect("plan");
        let obs = propagate_unitary(&state, &plan)
            .expect("propagation")
            .observables()
            .expect("observables");
        let deviation = obs
            .times
            .iter()
            .zip(obs.amplitude.iter())
            .map(|(&t, a)| {
                (a.norm() - anharmonic_analytic(alpha, 0.5, 1.0, t).norm()).abs()
            })
            .fold(0.0, f64::max);
        assert!(
            deviation <= previous,
            "deviation grew from {previous:.3e} to {deviation:.3e} at d = {d}"
        );
        previous = deviation;
    }
}
