//! Finite rotation groups: Rodrigues rotations, closure enumeration, the
//! reduced 5x5 representation acting on symmetric-traceless coordinates, and
//! SU(2) pulse unitaries.

use nalgebra::{Matrix2, Matrix3, SMatrix, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irrep::{gamma_coords, gamma_matrix, Vector5};

pub type Matrix5 = SMatrix<f64, 5, 5>;

pub const GROUP_TOL: f64 = 1e-9;
pub const CLOSURE_CAP: usize = 200;

/// Golden ratio, parameterizing the icosahedral axes.
pub const PHI: f64 = 1.618033988749894848204586834365638118;

/// One element of a finite rotation group: the 3x3 rotation, its reduced 5x5
/// representation, the recovered axis-angle, and the SU(2) unitary.
#[derive(Clone, Debug)]
pub struct RotationElement {
    pub r3: Matrix3<f64>,
    pub r5: Matrix5,
    pub axis: Vector3<f64>,
    pub angle: f64,
    pub su2: Matrix2<Complex64>,
}

impl RotationElement {
    pub fn from_r3(r3: Matrix3<f64>) -> Result<Self> {
        check_rotation(&r3)?;
        let (axis, angle) = axis_angle_from_matrix(&r3);
        Ok(Self {
            r5: rep5(&r3)?,
            su2: spin_unitary(&axis, angle)?,
            r3,
            axis,
            angle,
        })
    }

    pub fn identity() -> Self {
        Self::from_r3(Matrix3::identity()).unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupName {
    Clifford,
    Icosahedral,
    Custom,
}

#[derive(Clone, Debug)]
pub struct RotationGroup {
    pub name: GroupName,
    pub elements: Vec<RotationElement>,
}

fn check_unit_axis(axis: &Vector3<f64>) -> Result<()> {
    let norm = axis.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitAxis(norm));
    }
    Ok(())
}

fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    let dev = (r.transpose() * r - Matrix3::identity()).norm();
    if dev > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 {
        return Err(Error::NotARotation);
    }
    Ok(())
}

/// Rodrigues rotation: R = I + sin(theta) K + (1 - cos(theta)) K^2 with K the
/// cross-product matrix of the axis.
pub fn axis_angle_matrix(axis: &Vector3<f64>, angle: f64) -> Result<Matrix3<f64>> {
    check_unit_axis(axis)?;
    let k = Matrix3::new(
        0.0, -axis[2], axis[1],
        axis[2], 0.0, -axis[0],
        -axis[1], axis[0], 0.0,
    );
    Ok(Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos()))
}

/// Recovers (axis, angle in [0, 2pi)) from a proper rotation. Angles near pi
/// are handled through the symmetric part of R (the +1 eigenvector), where
/// the antisymmetric extraction loses the axis.
pub fn axis_angle_from_matrix(r: &Matrix3<f64>) -> (Vector3<f64>, f64) {
    let cos_t = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let v0 = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    // atan2 keeps full precision near angle pi, where acos of the trace
    // loses ~sqrt(eps).
    let angle = (v0.norm() / 2.0).atan2(cos_t);
    if angle < 1e-12 {
        return (Vector3::z(), 0.0);
    }
    if angle < std::f64::consts::PI - 1e-6 {
        let v = Vector3::new(
            r[(2, 1)] - r[(1, 2)],
            r[(0, 2)] - r[(2, 0)],
            r[(1, 0)] - r[(0, 1)],
        );
        let axis = v / (2.0 * angle.sin());
        (axis.normalize(), angle)
    } else {
        // R ~ 2 n n^T - I: read the axis off the dominant column of R + I.
        let m = r + Matrix3::identity();
        let col = (0..3)
            .map(|j| m.column(j).into_owned())
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .unwrap();
        let mut axis = col.normalize();
        // fix the sign from the antisymmetric residue if any survives
        let v = Vector3::new(
            r[(2, 1)] - r[(1, 2)],
            r[(0, 2)] - r[(2, 0)],
            r[(1, 0)] - r[(0, 1)],
        );
        if v.norm() > 1e-12 && axis.dot(&v) < 0.0 {
            axis = -axis;
        }
        (axis, angle)
    }
}

/// Reduced 5x5 representation: column k is gamma_coords(R M(e_k) R^T), so the
/// symmetric-traceless coordinates transform the same way the matrix S does
/// under S -> R S R^T.
pub fn rep5(r3: &Matrix3<f64>) -> Result<Matrix5> {
    check_rotation(r3)?;
    let mut out = Matrix5::zeros();
    for k in 0..5 {
        let mut e = Vector5::zeros();
        e[k] = 1.0;
        let m = gamma_matrix(&e);
        let col = gamma_coords(&(r3 * m * r3.transpose()));
        out.set_column(k, &col);
    }
    Ok(out)
}

/// U = exp(-i (theta/2) n.sigma).
///
/// Conjugation contract (frozen by test): U^dag (v.sigma) U = (R v).sigma
/// where R = axis_angle_matrix(n, -theta). Equivalently U (v.sigma) U^dag
/// rotates v by +theta.
pub fn spin_unitary(axis: &Vector3<f64>, angle: f64) -> Result<Matrix2<Complex64>> {
    check_unit_axis(axis)?;
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let i = Complex64::i();
    // cos(t/2) I - i sin(t/2) (n_x sx + n_y sy + n_z sz)
    Ok(Matrix2::new(
        Complex64::new(c, 0.0) - i * s * axis[2],
        -i * s * axis[0] - s * axis[1] * Complex64::new(1.0, 0.0),
        -i * s * axis[0] + s * axis[1] * Complex64::new(1.0, 0.0),
        Complex64::new(c, 0.0) + i * s * axis[2],
    ))
}

/// Closure of a generating set under multiplication, deduplicated by
/// Frobenius distance.
pub fn generate_group(generators: &[Matrix3<f64>], tol: f64) -> Result<RotationGroup> {
    for g in generators {
        check_rotation(g)?;
    }
    let mut elems: Vec<Matrix3<f64>> = vec![Matrix3::identity()];
    let mut frontier: Vec<Matrix3<f64>> = vec![Matrix3::identity()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for f in &frontier {
            for g in generators {
                let p = f * g;
                if !elems.iter().any(|e| (e - p).norm() < tol) {
                    if elems.len() >= CLOSURE_CAP {
                        return Err(Error::ClosureCapExceeded(CLOSURE_CAP));
                    }
                    elems.push(p);
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    let elements = elems
        .into_iter()
        .map(RotationElement::from_r3)
        .collect::<Result<Vec<_>>>()?;
    Ok(RotationGroup { name: GroupName::Custom, elements })
}

/// The 24 proper rotations of the octahedron, generated by pi/2 rotations
/// about x and z.
pub fn clifford_group() -> RotationGroup {
    let gens = [
        axis_angle_matrix(&Vector3::x(), std::f64::consts::FRAC_PI_2).unwrap(),
        axis_angle_matrix(&Vector3::z(), std::f64::consts::FRAC_PI_2).unwrap(),
    ];
    let mut g = generate_group(&gens, GROUP_TOL).unwrap();
    g.name = GroupName::Clifford;
    g
}

/// The 60 proper rotations of the icosahedron. Generated by a 2pi/5 rotation
/// about the vertex axis (0, 1, phi) and a pi rotation about z. The edge
/// axis must not be perpendicular to the vertex axis, or the closure stops
/// at the dihedral subgroup of order 10.
pub fn icosahedral_group() -> RotationGroup {
    let v = Vector3::new(0.0, 1.0, PHI).normalize();
    let gens = [
        axis_angle_matrix(&v, 2.0 * std::f64::consts::PI / 5.0).unwrap(),
        axis_angle_matrix(&Vector3::z(), std::f64::consts::PI).unwrap(),
    ];
    let mut g = generate_group(&gens, GROUP_TOL).unwrap();
    g.name = GroupName::Icosahedral;
    g
}

impl RotationGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Index of the element closest to `r`, if within `tol`.
    pub fn find(&self, r: &Matrix3<f64>, tol: f64) -> Option<usize> {
        self.elements
            .iter()
            .enumerate()
            .map(|(i, e)| (i, (e.r3 - r).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .filter(|&(_, d)| d < tol)
            .map(|(i, _)| i)
    }

    /// Checks closure, identity, and inverses at `tol`.
    pub fn check_axioms(&self, tol: f64) -> bool {
        if self.find(&Matrix3::identity(), tol).is_none() {
            return false;
        }
        for a in &self.elements {
            if self.find(&a.r3.transpose(), tol).is_none() {
                return false;
            }
            for b in &self.elements {
                if self.find(&(a.r3 * b.r3), tol).is_none() {
                    return false;
                }
            }
        }
        true
    }
}

/// Serialization form for a group dump: {axis, angle, r3 row-major}.
#[derive(Serialize, Deserialize)]
pub struct ElementDump {
    pub axis: [f64; 3],
    pub angle: f64,
    pub r3: [f64; 9],
}

pub fn dump_group(g: &RotationGroup) -> Vec<ElementDump> {
    g.elements
        .iter()
        .map(|e| ElementDump {
            axis: e.axis.into(),
            angle: e.angle,
            r3: std::array::from_fn(|k| e.r3[(k / 3, k % 3)]),
        })
        .collect()
}

/// Max |entry| of rep5 coupling the {gamma1, gamma2} block to {gamma3..5}.
pub fn block_coupling(r5: &Matrix5) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 2..5 {
            m = m.max(r5[(i, j)].abs()).max(r5[(j, i)].abs());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_axis(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        loop {
            let v = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if v.norm() > 0.1 {
                return v.normalize();
            }
        }
    }

    #[test]
    fn rodrigues_basics() {
        let r = axis_angle_matrix(&Vector3::z(), FRAC_PI_2).unwrap();
        let expect = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((r - expect).norm() < 1e-14);

        let r0 = axis_angle_matrix(&random_axis(&mut ChaCha8Rng::seed_from_u64(1)), 0.0).unwrap();
        assert!((r0 - Matrix3::identity()).norm() < 1e-14);

        let r = axis_angle_matrix(&Vector3::x(), 2.0 * PI / 5.0).unwrap();
        assert_abs_diff_eq!(r[(1, 1)], 0.309017, epsilon = 1e-6);
        assert_abs_diff_eq!(r[(2, 1)], 0.951057, epsilon = 1e-6);

        assert!(axis_angle_matrix(&Vector3::new(1.0, 1.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn rep5_identity_and_z_quarter_turn() {
        assert!((rep5(&Matrix3::identity()).unwrap() - Matrix5::identity()).norm() < 1e-14);

        let r = axis_angle_matrix(&Vector3::z(), FRAC_PI_2).unwrap();
        let m = rep5(&r).unwrap();
        // e1 -> e2, e2 -> e1, e3 -> -e3, e4 -> e5, e5 -> -e4
        let mut expect = Matrix5::zeros();
        expect[(1, 0)] = 1.0;
        expect[(0, 1)] = 1.0;
        expect[(2, 2)] = -1.0;
        expect[(4, 3)] = 1.0;
        expect[(3, 4)] = -1.0;
        assert!((m - expect).norm() < 1e-13);
    }

    #[test]
    fn rep5_homomorphism_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let r1 = axis_angle_matrix(&random_axis(&mut rng), rng.gen_range(0.0..6.28)).unwrap();
            let r2 = axis_angle_matrix(&random_axis(&mut rng), rng.gen_range(0.0..6.28)).unwrap();
            let lhs = rep5(&(r1 * r2)).unwrap();
            let rhs = rep5(&r1).unwrap() * rep5(&r2).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn clifford_order_24() {
        let g = clifford_group();
        assert_eq!(g.order(), 24);
        assert!(g.check_axioms(GROUP_TOL));
    }

    #[test]
    fn cyclic_z_order_4() {
        let gens = [axis_angle_matrix(&Vector3::z(), FRAC_PI_2).unwrap()];
        let g = generate_group(&gens, GROUP_TOL).unwrap();
        assert_eq!(g.order(), 4);
    }

    #[test]
    fn icosahedral_order_60() {
        let g = icosahedral_group();
        assert_eq!(g.order(), 60);
        assert!(g.check_axioms(GROUP_TOL));
    }

    #[test]
    fn clifford_block_structure() {
        for e in &clifford_group().elements {
            assert!(block_coupling(&e.r5) < 1e-12);
        }
        let coupled = icosahedral_group()
            .elements
            .iter()
            .map(|e| block_coupling(&e.r5))
            .fold(0.0f64, f64::max);
        assert!(coupled > 0.1);
    }

    #[test]
    fn axis_angle_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let axis = random_axis(&mut rng);
            let angle = rng.gen_range(0.01..PI - 0.01);
            let r = axis_angle_matrix(&axis, angle).unwrap();
            let (a2, t2) = axis_angle_from_matrix(&r);
            let r2 = axis_angle_matrix(&a2, t2).unwrap();
            assert!((r - r2).norm() < 1e-10);
        }
        // near-pi branch
        for axis in [Vector3::x(), Vector3::new(0.0, 1.0, PHI).normalize()] {
            let r = axis_angle_matrix(&axis, PI).unwrap();
            let (a2, t2) = axis_angle_from_matrix(&r);
            let r2 = axis_angle_matrix(&a2, t2).unwrap();
            assert!((r - r2).norm() < 1e-10);
        }
    }

    #[test]
    fn every_group_element_recovers() {
        for g in [clifford_group(), icosahedral_group()] {
            for e in &g.elements {
                let r = axis_angle_matrix(&e.axis, e.angle).unwrap();
                assert!((r - e.r3).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn spin_unitary_conventions() {
        // 2pi about z is -I
        let u = spin_unitary(&Vector3::z(), 2.0 * PI).unwrap();
        assert!((u + Matrix2::identity()).norm() < 1e-14);

        // pi about x is -i sx, conjugates sz to -sz
        let u = spin_unitary(&Vector3::x(), PI).unwrap();
        let sx = crate::numerics::pauli(0).unwrap();
        assert!((u - sx * Complex64::new(0.0, -1.0)).norm() < 1e-14);
        let sz = crate::numerics::pauli(2).unwrap();
        let conj = u.adjoint() * sz * u;
        assert!((conj + sz).norm() < 1e-14);
    }

    #[test]
    fn spin_unitary_conjugation_contract() {
        // U^dag (v.sigma) U = (R(n, -theta) v).sigma — the frozen convention.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..25 {
            let axis = random_axis(&mut rng);
            let theta = rng.gen_range(0.0..6.28);
            let u = spin_unitary(&axis, theta).unwrap();
            let r = axis_angle_matrix(&axis, -theta).unwrap();
            for k in 0..3 {
                let mut v = Vector3::zeros();
                v[k] = 1.0;
                let sig = crate::numerics::pauli(k).unwrap();
                let lhs = u.adjoint() * sig * u;
                let rv = r * v;
                let mut rhs = Matrix2::zeros();
                for j in 0..3 {
                    rhs += crate::numerics::pauli(j).unwrap() * Complex64::new(rv[j], 0.0);
                }
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn closure_cap_signals_bad_generators() {
        // An irrational-angle generator never closes.
        let gens = [axis_angle_matrix(&Vector3::z(), 1.0).unwrap()];
        assert!(matches!(
            generate_group(&gens, GROUP_TOL),
            Err(Error::ClosureCapExceeded(_))
        ));
    }
}
