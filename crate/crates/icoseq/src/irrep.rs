//! Irreducible decomposition of a rank-2 spin-spin coupling tensor into
//! isotropic (alpha), antisymmetric (beta, 3 components), and symmetric
//! traceless (gamma, 5 components) parts, and the corresponding two-spin
//! operators.
//!
//! The gamma wire order is fixed as [S11, S22, S12, S13, S23] of the
//! symmetric traceless matrix S; every consumer of a 5-vector in this crate
//! uses that order.

use nalgebra::{Matrix3, SVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix};

pub type Vector5 = SVector<f64, 5>;

/// Raw 3x3 coupling matrix T for one spin pair (angular frequency units).
#[derive(Clone, Debug)]
pub struct CouplingMatrix {
    pub t: Matrix3<f64>,
}

/// Coefficient-level Hamiltonian for a pair: T = alpha*I + antisym(beta) + M(gamma).
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct IrreducibleForm {
    pub alpha: f64,
    pub beta: [f64; 3],
    pub gamma: [f64; 5],
}

impl IrreducibleForm {
    pub fn new(alpha: f64, beta: [f64; 3], gamma: [f64; 5]) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn zero() -> Self {
        Self { alpha: 0.0, beta: [0.0; 3], gamma: [0.0; 5] }
    }

    pub fn beta_vec(&self) -> Vector3<f64> {
        Vector3::from(self.beta)
    }

    pub fn gamma_vec(&self) -> Vector5 {
        Vector5::from(self.gamma)
    }
}

/// Builds the symmetric traceless matrix M(gamma) =
/// [[g1,g3,g4],[g3,g2,g5],[g4,g5,-g1-g2]].
pub fn gamma_matrix(g: &Vector5) -> Matrix3<f64> {
    Matrix3::new(
        g[0], g[2], g[3],
        g[2], g[1], g[4],
        g[3], g[4], -g[0] - g[1],
    )
}

/// Extracts the 5 independent coordinates of a symmetric traceless matrix.
pub fn gamma_coords(s: &Matrix3<f64>) -> Vector5 {
    Vector5::new(s[(0, 0)], s[(1, 1)], s[(0, 1)], s[(0, 2)], s[(1, 2)])
}

/// Splits T into alpha = Tr(T)/3, beta_k = (1/2) eps_ijk T_ij, and gamma from
/// the symmetric traceless part.
pub fn decompose(t: &Matrix3<f64>) -> IrreducibleForm {
    let alpha = t.trace() / 3.0;
    // beta_k = 1/2 eps_ijk T_ij
    let beta = [
        0.5 * (t[(1, 2)] - t[(2, 1)]),
        0.5 * (t[(2, 0)] - t[(0, 2)]),
        0.5 * (t[(0, 1)] - t[(1, 0)]),
    ];
    let sym = (t + t.transpose()) * 0.5 - Matrix3::identity() * alpha;
    let g = gamma_coords(&sym);
    IrreducibleForm { alpha, beta, gamma: g.into() }
}

/// Inverse of [`decompose`]: T = alpha*I + antisym(beta) + M(gamma).
pub fn reconstruct(f: &IrreducibleForm) -> Matrix3<f64> {
    let b = f.beta;
    let antisym = Matrix3::new(
        0.0, b[2], -b[1],
        -b[2], 0.0, b[0],
        b[1], -b[0], 0.0,
    );
    Matrix3::identity() * f.alpha + antisym + gamma_matrix(&f.gamma_vec())
}

/// Embedded two-site operator sigma_i^(a) sigma_j^(b) in the N-spin space.
fn sigma_pair(i: usize, j: usize, a: usize, b: usize, n: usize) -> Result<ComplexMatrix> {
    let si = numerics::pauli(i)?;
    let sj = numerics::pauli(j)?;
    Ok(numerics::embed(&si, a, n)? * numerics::embed(&sj, b, n)?)
}

/// alpha sigma.sigma + beta.lambda1 + gamma.lambda2 for pair (a, b), embedded
/// in the N-spin Hilbert space.
pub fn pair_operator(f: &IrreducibleForm, a: usize, b: usize, n: usize) -> Result<ComplexMatrix> {
    if a >= b || b >= n {
        return Err(Error::BadPairIndices { a, b, n });
    }
    let dim = 1usize << n;
    let mut out = ComplexMatrix::zeros(dim, dim);
    let cr = |x: f64| Complex64::new(x, 0.0);

    // isotropic part
    for i in 0..3 {
        out += sigma_pair(i, i, a, b, n)? * cr(f.alpha);
    }
    // lambda1: antisymmetric combinations (yz - zy, zx - xz, xy - yx)
    let l1 = [(1, 2), (2, 0), (0, 1)];
    for (k, &(i, j)) in l1.iter().enumerate() {
        if f.beta[k] != 0.0 {
            let op = sigma_pair(i, j, a, b, n)? - sigma_pair(j, i, a, b, n)?;
            out += op * cr(f.beta[k]);
        }
    }
    // lambda2: (xx - zz, yy - zz, xy + yx, xz + zx, yz + zy)
    let zz = sigma_pair(2, 2, a, b, n)?;
    let l2_terms: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    for k in 0..2 {
        if f.gamma[k] != 0.0 {
            let op = sigma_pair(k, k, a, b, n)? - &zz;
            out += op * cr(f.gamma[k]);
        }
    }
    for (k, &(i, j)) in l2_terms.iter().enumerate() {
        let g = f.gamma[k + 2];
        if g != 0.0 {
            let op = sigma_pair(i, j, a, b, n)? + sigma_pair(j, i, a, b, n)?;
            out += op * cr(g);
        }
    }
    Ok(out)
}

/// Direct double-sum form of the same operator, sum_ij T_ij sigma_i sigma_j.
/// Independent of the irreducible path; used as an oracle in tests and the
/// verifier.
pub fn coupling_operator_direct(
    t: &Matrix3<f64>,
    a: usize,
    b: usize,
    n: usize,
) -> Result<ComplexMatrix> {
    if a >= b || b >= n {
        return Err(Error::BadPairIndices { a, b, n });
    }
    let dim = 1usize << n;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for i in 0..3 {
        for j in 0..3 {
            if t[(i, j)] != 0.0 {
                out += sigma_pair(i, j, a, b, n)? * Complex64::new(t[(i, j)], 0.0);
            }
        }
    }
    Ok(out)
}

/// One-spin term n.sigma embedded at `site`.
pub fn one_spin_operator(nvec: &Vector3<f64>, site: usize, n: usize) -> Result<ComplexMatrix> {
    let dim = 1usize << n;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for i in 0..3 {
        if nvec[i] != 0.0 {
            out += numerics::embed(&numerics::pauli(i)?, site, n)? * Complex64::new(nvec[i], 0.0);
        }
    }
    Ok(out)
}
