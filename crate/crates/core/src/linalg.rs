//! Dense complex linear algebra: matrix exponential by scaling-and-squaring,
//! a cyclic Jacobi eigensolver for Hermitian matrices, and small utilities
//! (Kronecker products, linear solves, norms).
//!
//! The crate deliberately keeps two independent routes to `exp(−iHt)`: the
//! Padé path below drives production evolution, while the Jacobi
//! eigendecomposition drives the Fock-space oracle, so agreement between the
//! two is a meaningful cross-check rather than a tautology.

use crate::{C64, Error, Result};
use ndarray::{Array1, Array2};

/// Maximum 1-norm for the order-13 Padé approximant before scaling kicks in.
const THETA_13: f64 = 5.371920351148152;

/// Padé-13 numerator coefficients for the matrix exponential.
const PADE_COEFFS: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Maximum column sum of absolute values (the induced 1-norm).
pub fn matrix_1_norm(a: &Array2<C64>) -> f64 {
    let (rows, cols) = a.dim();
    (0..cols)
        .map(|j| (0..rows).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Conjugate transpose.
pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Largest |a_ij − conj(a_ji)|, zero for an exactly Hermitian matrix.
pub fn hermitian_residual(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let r = (a[(i, j)] - a[(j, i)].conj()).norm();
            if r > worst {
                worst = r;
            }
        }
    }
    worst
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Solves A·X = B by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.nrows() });
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let m = x.ncols();
    for col in 0..n {
        // partial pivot on the largest magnitude in this column
        let mut pivot_row = col;
        let mut pivot_mag = lu[(col, col)].norm();
        for row in (col + 1)..n {
            let mag = lu[(row, col)].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag == 0.0 {
            return Err(Error::NoConvergence("solve_linear: singular matrix".into()));
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap((col, j), (pivot_row, j));
            }
            for j in 0..m {
                x.swap((col, j), (pivot_row, j));
            }
        }
        let pivot = lu[(col, col)];
        for row in (col + 1)..n {
            let factor = lu[(row, col)] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in col..n {
                let v = lu[(col, j)];
                lu[(row, j)] -= factor * v;
            }
            for j in 0..m {
                let v = x[(col, j)];
                x[(row, j)] -= factor * v;
            }
        }
    }
    // back substitution
    for col in (0..n).rev() {
        let pivot = lu[(col, col)];
        for j in 0..m {
            let mut acc = x[(col, j)];
            for k in (col + 1)..n {
                acc -= lu[(col, k)] * x[(k, j)];
            }
            x[(col, j)] = acc / pivot;
        }
    }
    Ok(x)
}

/// Matrix exponential by order-13 Padé approximation with scaling and
/// squaring (Higham's method). Accurate to machine precision for any
/// well-scaled dense matrix; cost grows with log₂ of the norm.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    let norm = matrix_1_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / (2f64.powi(s as i32)));
    let eye = Array2::<C64>::eye(n);

    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let b = &PADE_COEFFS;
    let u_inner = a6.mapv(|z| z * b[13]) + a4.mapv(|z| z * b[11]) + a2.mapv(|z| z * b[9]);
    let u_poly = a6.dot(&u_inner)
        + a6.mapv(|z| z * b[7])
        + a4.mapv(|z| z * b[5])
        + a2.mapv(|z| z * b[3])
        + eye.mapv(|z| z * b[1]);
    let u = scaled.dot(&u_poly);

    let v_inner = a6.mapv(|z| z * b[12]) + a4.mapv(|z| z * b[10]) + a2.mapv(|z| z * b[8]);
    let v = a6.dot(&v_inner)
        + a6.mapv(|z| z * b[6])
        + a4.mapv(|z| z * b[4])
        + a2.mapv(|z| z * b[2])
        + eye.mapv(|z| z * b[0]);

    let mut result = solve_linear(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        result = result.dot(&result);
    }
    Ok(result)
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. Fails if `a` is not Hermitian to 1e−12 (scaled)
/// or if the sweep limit is exhausted (which does not happen for Hermitian
/// input: each rotation strictly reduces the off-diagonal norm).
pub fn eigh(a: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    let scale = matrix_1_norm(a).max(1.0);
    let herm_res = hermitian_residual(a);
    if herm_res > 1e-12 * scale {
        return Err(Error::NotHermitian { residual: herm_res });
    }
    let mut m = a.clone();
    // symmetrize exactly so rounding in the input cannot bias the iteration
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let mut vecs = Array2::<C64>::eye(n);
    let fro: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tol = 1e-15 * fro.max(f64::MIN_POSITIVE);

    for _sweep in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= tol / (n as f64) {
                    continue;
                }
                // phase that makes the pivot real, then a real Givens angle
                let phase = apq / mag; // e^{iφ}
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // column update: M ← M·J with J[p,p]=c, J[q,p]=−s·conj(phase),
                // J[p,q]=s, J[q,q]=c·conj(phase)
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * c - miq * phase.conj() * s;
                    m[(i, q)] = mip * s + miq * phase.conj() * c;
                }
                // row update: M ← J†·M
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = mpj * c - mqj * phase * s;
                    m[(q, j)] = mpj * s + mqj * phase * c;
                }
                // keep the diagonal exactly real against rounding drift
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                // accumulate eigenvectors: V ← V·J
                for i in 0..n {
                    let vip = vecs[(i, p)];
                    let viq = vecs[(i, q)];
                    vecs[(i, p)] = vip * c - viq * phase.conj() * s;
                    vecs[(i, q)] = vip * s + viq * phase.conj() * c;
                }
            }
        }
    }
    let off: f64 = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].norm_sqr())
        .sum::<f64>()
        .sqrt();
    if off > tol * 100.0 {
        return Err(Error::NoConvergence(format!(
            "jacobi eigensolver: off-diagonal norm {off:.3e} after sweep limit"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut sorted_vecs = Array2::<C64>::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[(i, new_col)] = vecs[(i, old_col)];
        }
    }
    Ok((vals, sorted_vecs))
}

/// exp(−i·H·t)·ψ through the eigendecomposition of Hermitian H.
pub fn evolve_eigh(h: &Array2<C64>, t: f64, psi: &Array1<C64>) -> Result<Array1<C64>> {
    let (vals, vecs) = eigh(h)?;
    let vh = adjoint(&vecs);
    let mut coeffs = vh.dot(psi);
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= C64::from_polar(1.0, -vals[k] * t);
    }
    Ok(vecs.dot(&coeffs))
}
