//! Dense complex matrix kernel: Pauli operators, Kronecker embedding into an
//! N-spin Hilbert space, and the Hermitian matrix exponential.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Default cap on the spin count (2^10 = 4096-dimensional Hilbert space).
pub const MAX_SPINS: usize = 10;

pub const HERMITICITY_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Standard 2x2 Pauli matrix for axis 0=x, 1=y, 2=z.
pub fn pauli(i: usize) -> Result<Matrix2<Complex64>> {
    match i {
        0 => Ok(Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))),
        1 => Ok(Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))),
        2 => Ok(Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))),
        _ => Err(Error::InvalidAxis(i)),
    }
}

pub fn identity(dim: usize) -> ComplexMatrix {
    DMatrix::identity(dim, dim)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Embeds a 2x2 operator at `site` of an N-spin register:
/// I (x) ... (x) op (x) ... (x) I.
pub fn embed(op: &Matrix2<Complex64>, site: usize, n: usize) -> Result<ComplexMatrix> {
    embed_capped(op, site, n, MAX_SPINS)
}

pub fn embed_capped(
    op: &Matrix2<Complex64>,
    site: usize,
    n: usize,
    max_spins: usize,
) -> Result<ComplexMatrix> {
    if n > max_spins {
        return Err(Error::TooManySpins(n, max_spins));
    }
    if site >= n {
        return Err(Error::SiteOutOfRange { site, n });
    }
    let op_d: ComplexMatrix = DMatrix::from_iterator(2, 2, op.iter().cloned());
    let mut out = identity(1);
    for k in 0..n {
        out = if k == site { kron(&out, &op_d) } else { kron(&out, &identity(2)) };
    }
    Ok(out)
}

pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    let adj = m.adjoint();
    (m - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// U = exp(-i H t) for Hermitian H, via eigendecomposition.
///
/// Eigendecomposition rather than scaling-and-squaring keeps U unitary to
/// rounding for every Hermitian input.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let dev = hermiticity_deviation(h);
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian(dev));
    }
    // Symmetrize so the decomposition sees an exactly Hermitian matrix.
    let hs = (h + h.adjoint()) * c(0.5, 0.0);
    let eig = hs.symmetric_eigen();
    let dim = h.nrows();
    let mut phases = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let phi = -eig.eigenvalues[k] * t;
        phases[(k, k)] = Complex64::from_polar(1.0, phi);
    }
    Ok(&eig.eigenvectors * phases * eig.eigenvectors.adjoint())
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn eigvals_hermitian(h: &ComplexMatrix) -> Result<Vec<f64>> {
    let dev = hermiticity_deviation(h);
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let hs = (h + h.adjoint()) * c(0.5, 0.0);
    let eig = hs.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals)
}

/// Largest singular value (operator norm). All matrices here are small, so a
/// power iteration on M^dagger M is sufficient.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    let gram = m.adjoint() * m;
    // gram is Hermitian PSD; its largest eigenvalue is the squared norm.
    let eig = gram.symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
}
