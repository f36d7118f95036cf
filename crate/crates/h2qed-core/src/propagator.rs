//! Matrix exponentials for the step unitary.
//!
//! The production route (`expm_doubling`) never forms `exp(M)` directly while
//! squaring. It tracks `T = exp(M) - I` through the doubling identity
//! `exp(2x) - I = 2(exp(x) - I) + (exp(x) - I)^2`, seeded by a short Taylor
//! polynomial of `exp(M / 2^m) - I`, and adds the identity once at the end.
//! Keeping the shifted form avoids the cancellation that plain squaring
//! suffers when `M / 2^m` is far below the floating-point epsilon of 1.
//!
//! The reference route (`unitary_eig`) diagonalizes a Hermitian generator and
//! exponentiates its spectrum. The two routes are kept independent on
//! purpose; tests cross-check one against the other.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::{Error, Result};

/// Knobs for the doubling exponential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExpmConfig {
    /// Number of halvings/doublings `m`; the Taylor seed runs at `M / 2^m`.
    pub squarings: u32,
    /// Number of Taylor terms in the seed (order of the truncated series).
    pub taylor_order: u32,
}

impl Default for ExpmConfig {
    fn default() -> Self {
        ExpmConfig {
            squarings: 20,
            taylor_order: 4,
        }
    }
}

/// `exp(M)` for an arbitrary square complex matrix, by shifted repeated
/// doubling.
pub fn expm_doubling(m: &Array2<Complex64>, cfg: &ExpmConfig) -> Array2<Complex64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm needs a square matrix");
    let scale = Complex64::new((0.5_f64).powi(cfg.squarings as i32), 0.0);
    let ms = m.mapv(|z| z * scale);

    // Taylor seed for exp(ms) - I: sum of ms^j / j!.
    let mut term = ms.clone();
    let mut t = ms.clone();
    for j in 2..=cfg.taylor_order.max(1) {
        term = term.dot(&ms).mapv(|z| z / f64::from(j));
        t += &term;
    }

    // Doubling: exp(2x) - I = 2(exp(x) - I) + (exp(x) - I)^2.
    for _ in 0..cfg.squarings {
        let sq = t.dot(&t);
        t.mapv_inplace(|z| z * 2.0);
        t += &sq;
    }

    for i in 0..n {
        t[(i, i)] += Complex64::new(1.0, 0.0);
    }
    t
}

/// Step unitary `exp(-i dt / hbar * H)` via the doubling exponential.
pub fn unitary_doubling(
    h: &Array2<Complex64>,
    dt: f64,
    hbar: f64,
    cfg: &ExpmConfig,
) -> Array2<Complex64> {
    let factor = Complex64::new(0.0, -dt / hbar);
    expm_doubling(&h.mapv(|z| z * factor), cfg)
}

/// Largest elementwise deviation of `h` from its conjugate transpose.
pub fn hermitian_deviation(h: &Array2<Complex64>) -> f64 {
    let n = h.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Largest column residual `max_j ||H v_j - lambda_j v_j||_inf`.
fn eigvec_residual(h: &Array2<Complex64>, v: &Array2<Complex64>, evals: &[f64]) -> f64 {
    let hv = h.dot(v);
    let mut worst = 0.0_f64;
    for j in 0..evals.len() {
        for i in 0..h.nrows() {
            worst = worst.max((hv[(i, j)] - v[(i, j)] * evals[j]).norm());
        }
    }
    worst
}

/// Hermitian eigendecomposition with the eigenvectors verified in place.
///
/// Some LAPACK wrappers hand a row-major buffer to a column-major routine,
/// which for complex Hermitian input silently decomposes the conjugate
/// matrix. The spectrum is identical either way, but the eigenvectors come
/// out conjugated, so both orientations are residual-tested and the one that
/// actually satisfies `H v = lambda v` is returned.
fn eigh_verified(h: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    let scale = h.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let dev = hermitian_deviation(h);
    if dev > 1e-12 * scale {
        return Err(Error::NotHermitian {
            deviation: dev,
            tol: 1e-12 * scale,
        });
    }
    let (evals, evecs) = h
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Lapack(e.to_string()))?;
    let evals = evals.to_vec();
    let tol = 1e-10 * scale * h.nrows() as f64;
    if eigvec_residual(h, &evecs, &evals) <= tol {
        return Ok((evals, evecs));
    }
    let conj = evecs.mapv(|z| z.conj());
    if eigvec_residual(h, &conj, &evals) <= tol {
        return Ok((evals, conj));
    }
    Err(Error::Lapack(
        "eigenvectors failed verification in both orientations".into(),
    ))
}

/// Step unitary `exp(-i dt / hbar * H)` through diagonalization of a
/// Hermitian `H`. Rejects visibly non-Hermitian input, since the spectral
/// route silently returns garbage for it.
pub fn unitary_eig(h: &Array2<Complex64>, dt: f64, hbar: f64) -> Result<Array2<Complex64>> {
    let (evals, evecs) = eigh_verified(h)?;
    let mut w = evecs.clone();
    for (j, lambda) in evals.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda * dt / hbar);
        w.column_mut(j).mapv_inplace(|z| z * phase);
    }
    let vdag = evecs.t().mapv(|z| z.conj());
    Ok(w.dot(&vdag))
}

/// Hermitian eigendecomposition, exposed for positivity spot checks.
pub fn eigvals_hermitian(h: &Array2<Complex64>) -> Result<Vec<f64>> {
    let (evals, _) = h
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Lapack(e.to_string()))?;
    Ok(evals.to_vec())
}
