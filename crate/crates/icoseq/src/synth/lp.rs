//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Solves max c.y subject to E y = f, y >= 0. The constraint systems here
//! are tiny (at most ~9 rows by ~61 columns) and heavily degenerate, so a
//! dense tableau with Bland's rule is both sufficient and deterministic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;

pub struct SimplexOutcome {
    pub y: DVector<f64>,
    pub objective: f64,
}

/// max obj.y s.t. eq * y = rhs, y >= 0.
pub fn simplex_maximize(
    eq: &DMatrix<f64>,
    rhs: &DVector<f64>,
    obj: &DVector<f64>,
) -> Result<SimplexOutcome> {
    let m = eq.nrows();
    let n = eq.ncols();
    assert_eq!(rhs.len(), m);
    assert_eq!(obj.len(), n);

    // Flip rows so the right-hand side is nonnegative, then append one
    // artificial variable per row.
    let mut a = DMatrix::zeros(m, n + m);
    let mut b = DVector::zeros(m);
    for i in 0..m {
        let sign = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            a[(i, j)] = sign * eq[(i, j)];
        }
        a[(i, n + i)] = 1.0;
        b[i] = sign * rhs[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let mut phase1_obj = DVector::zeros(n + m);
    for j in n..n + m {
        phase1_obj[j] = -1.0;
    }
    run_simplex(&mut a, &mut b, &phase1_obj, &mut basis, n + m)?;
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|&(_, &j)| j >= n)
        .map(|(i, _)| b[i])
        .sum();
    if infeas > 1e-8 {
        return Err(Error::Infeasible(String::new()));
    }
    // Drive any degenerate artificials out of the basis.
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| a[(i, j)].abs() > PIVOT_TOL) {
                pivot(&mut a, &mut b, i, j);
                basis[i] = j;
            }
            // A row with no real-variable entries is redundant; its
            // artificial stays basic at zero, which is harmless.
        }
    }

    // Phase 2: original objective; artificial columns are frozen out.
    let mut phase2_obj = DVector::zeros(n + m);
    for j in 0..n {
        phase2_obj[j] = obj[j];
    }
    run_simplex(&mut a, &mut b, &phase2_obj, &mut basis, n)?;

    let mut y = DVector::zeros(n);
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            y[j] = b[i];
        }
    }
    Ok(SimplexOutcome { objective: obj.dot(&y), y })
}

/// Bland's rule iterations in place. Columns >= `usable` are excluded from
/// entering.
fn run_simplex(
    a: &mut DMatrix<f64>,
    b: &mut DVector<f64>,
    obj: &DVector<f64>,
    basis: &mut [usize],
    usable: usize,
) -> Result<()> {
    let m = a.nrows();
    loop {
        // reduced costs: obj_j - obj_B . B^-1 A_j; the tableau keeps B^-1 A,
        // so compute them directly from the current rows.
        let mut entering = None;
        for j in 0..usable {
            if basis.contains(&j) {
                continue;
            }
            let mut red = obj[j];
            for i in 0..m {
                red -= obj[basis[i]] * a[(i, j)];
            }
            if red > PIVOT_TOL {
                entering = Some(j);
                break; // Bland: lowest improving index
            }
        }
        let Some(j) = entering else { return Ok(()) };

        // ratio test; ties broken by lowest basic-variable index (Bland)
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if a[(i, j)] > PIVOT_TOL {
                let ratio = b[i] / a[(i, j)];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - PIVOT_TOL
                            || ((ratio - lr).abs() <= PIVOT_TOL && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, _)) = leave else { return Err(Error::Unbounded) };
        pivot(a, b, i, j);
        basis[i] = j;
    }
}

fn pivot(a: &mut DMatrix<f64>, b: &mut DVector<f64>, row: usize, col: usize) {
    let p = a[(row, col)];
    for j in 0..a.ncols() {
        a[(row, j)] /= p;
    }
    b[row] /= p;
    for i in 0..a.nrows() {
        if i != row {
            let f = a[(i, col)];
            if f != 0.0 {
                for j in 0..a.ncols() {
                    a[(i, j)] -= f * a[(row, j)];
                }
                b[i] -= f * b[row];
            }
        }
    }
}
