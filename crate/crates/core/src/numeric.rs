//! Small numerical helpers shared across modules: log-factorials,
//! incomplete-gamma wrappers, deterministic summation, quadrature rules and
//! DFT phase tables.

use crate::{C64, Error, Result};
use statrs::function::gamma::{gamma_ur, ln_gamma};

/// ln(n!) through the log-gamma function; exact enough for n up to 10^6.
pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x)/Γ(a).
///
/// For integer a = n+1 this equals the truncated Poisson sum
/// e^{−x} Σ_{k=0}^{n} x^k/k!, the quantity behind projected-state norms.
pub fn upper_gamma_regularized(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    gamma_ur(a, x)
}

/// Pairwise (cascade) summation over a slice. The reduction tree depends
/// only on element order, so results are reproducible regardless of how the
/// values were produced, and rounding error grows like O(log n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Pairwise summation for complex values.
pub fn pairwise_sum_c64(values: &[C64]) -> C64 {
    match values.len() {
        0 => C64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum_c64(&values[..mid]) + pairwise_sum_c64(&values[mid..])
        }
    }
}

/// Composite Simpson rule over uniformly spaced samples.
///
/// Handles an even sample count by finishing with one Simpson-3/8 panel, so
/// any grid with at least four points integrates at fourth order.
pub fn simpson(values: &[f64], dx: f64) -> Result<f64> {
    let n = values.len();
    if n < 4 {
        return Err(Error::invalid("simpson: need at least 4 samples"));
    }
    // With an odd number of points the 1/3 rule covers everything; otherwise
    // stop three intervals early and close with a 3/8 panel.
    let (end13, tail) = if n % 2 == 1 { (n - 1, 0.0) } else { (n - 4, 0.0) };
    let mut sum = values[0] + values[end13];
    let mut i = 1;
    while i < end13 {
        sum += 4.0 * values[i];
        if i + 1 < end13 {
            sum += 2.0 * values[i + 1];
        }
        i += 2;
    }
    let mut total = sum * dx / 3.0 + tail;
    if n.is_multiple_of(2) {
        let m = n - 4;
        total += dx * 3.0 / 8.0
            * (values[m] + 3.0 * values[m + 1] + 3.0 * values[m + 2] + values[m + 3]);
    }
    Ok(total)
}

/// `n` evenly spaced points covering `[a, b]` inclusive; `n = 1` gives `[a]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

/// Table of the d-th roots of unity, `roots[j] = exp(i·2πj/d)` for j in 0..d.
///
/// All DFT phases in the crate are taken from this table with the integer
/// exponent reduced mod d first, so `φ·d = 2π` holds exactly and large q·n
/// products never reach the trig functions.
pub fn unit_roots(d: usize) -> Vec<C64> {
    let phi = 2.0 * std::f64::consts::PI / d as f64;
    (0..d)
        .map(|j| C64::from_polar(1.0, phi * j as f64))
        .collect()
}

/// Looks up exp(i·2π·k/d) from a root table, for any signed integer k.
#[inline]
pub fn root_pow(roots: &[C64], k: i64) -> C64 {
    let d = roots.len() as i64;
    roots[(k.rem_euclid(d)) as usize]
}

/// Σ_{n=0}^{d−1} z^n, the geometric sum behind coherent re-expansion.
///
/// Uses the closed form (1 − z^d)/(1 − z) away from z = 1 and falls back to
/// direct summation inside |1 − z| < 1e−8, where the ratio loses precision
/// (the singularity is removable: the sum tends to d).
pub fn geometric_phase_sum(z: C64, d: usize) -> C64 {
    if (C64::new(1.0, 0.0) - z).norm() < 1e-8 {
        let mut acc = C64::new(0.0, 0.0);
        let mut zp = C64::new(1.0, 0.0);
        for _ in 0..d {
            acc += zp;
            zp *= z;
        }
        acc
    } else {
        (C64::new(1.0, 0.0) - z.powu(d as u32)) / (C64::new(1.0, 0.0) - z)
    }
}

/// Gauss–Hermite nodes and weights for ∫ e^{−x²} f(x) dx ≈ Σ w_i f(x_i).
///
/// Golub–Welsch: eigenvalues of the symmetric tridiagonal Jacobi matrix with
/// off-diagonals √(k/2); weights √π times the squared first components of
/// the eigenvectors.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("gauss_hermite: need n >= 1"));
    }
    let mut jac = ndarray::Array2::<C64>::zeros((n, n));
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jac[(k - 1, k)] = C64::new(b, 0.0);
        jac[(k, k - 1)] = C64::new(b, 0.0);
    }
    let (vals, vecs) = crate::linalg::eigh(&jac)?;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let weights: Vec<f64> = (0..n).map(|i| sqrt_pi * vecs[(0, i)].norm_sqr()).collect();
    Ok((vals, weights))
}
