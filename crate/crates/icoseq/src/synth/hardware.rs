//! Lowering of abstract rotations to hardware-realizable pulses: composite
//! products of xy-plane rotations, and off-resonant drive parameters.

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::rotgroup::{axis_angle_from_matrix, axis_angle_matrix, spin_unitary};

const PLANE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubPulse {
    pub axis: [f64; 3],
    pub angle_rad: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HardwareRealization {
    /// Product of xy-plane rotations, listed in application order.
    Composite { sub_pulses: Vec<SubPulse> },
    /// Detuned Rabi drive along x or y.
    OffResonant {
        rabi_hz: f64,
        detuning_hz: f64,
        drive_axis: [f64; 3],
        duration_s: f64,
    },
}

impl HardwareRealization {
    /// The SU(2) unitary this realization produces in the instantaneous /
    /// control-only limit.
    pub fn realized_unitary(&self) -> Matrix2<Complex64> {
        match self {
            HardwareRealization::Composite { sub_pulses } => {
                let mut u = Matrix2::identity();
                for sp in sub_pulses {
                    let axis = Vector3::from(sp.axis);
                    u = spin_unitary(&axis, sp.angle_rad).unwrap() * u;
                }
                u
            }
            HardwareRealization::OffResonant {
                rabi_hz,
                detuning_hz,
                drive_axis,
                duration_s,
            } => {
                let drive = Vector3::from(*drive_axis);
                let gen_vec = drive * *rabi_hz + Vector3::z() * *detuning_hz;
                let eff = gen_vec.norm();
                let angle = 2.0 * PI * eff * duration_s;
                spin_unitary(&(gen_vec / eff), angle).unwrap()
            }
        }
    }
}

fn in_xy(axis: &Vector3<f64>) -> bool {
    axis[2].abs() < PLANE_TOL
}

fn in_xz(axis: &Vector3<f64>) -> bool {
    axis[1].abs() < PLANE_TOL
}

fn in_yz(axis: &Vector3<f64>) -> bool {
    axis[0].abs() < PLANE_TOL
}

fn planar(axis: &Vector3<f64>) -> bool {
    in_xy(axis) || in_xz(axis) || in_yz(axis)
}

fn sub(axis: Vector3<f64>, angle: f64) -> SubPulse {
    // keep angles positive by flipping the axis
    if angle < 0.0 {
        SubPulse { axis: (-axis).into(), angle_rad: -angle }
    } else {
        SubPulse { axis: axis.into(), angle_rad: angle }
    }
}

/// Composite decomposition of one planar-axis rotation into three xy-plane
/// sub-pulses (application order). Axes already in the xy plane pass through
/// with identity wrappers.
fn composite_planar(axis: &Vector3<f64>, angle: f64) -> Result<Vec<SubPulse>> {
    if in_xy(axis) {
        return Ok(vec![
            sub(Vector3::x(), 0.0),
            sub(*axis, angle),
            sub(Vector3::x(), 0.0),
        ]);
    }
    if in_xz(axis) {
        // exp(-i t/2 (n1 sx + n2 sz)) =
        //   exp(-i pi/4 sx) exp(-i t/2 (n1 sx + n2 sy)) exp(+i pi/4 sx)
        let (n1, n2) = (axis[0], axis[2]);
        return Ok(vec![
            sub(Vector3::x(), -FRAC_PI_2),
            sub(Vector3::new(n1, n2, 0.0), angle),
            sub(Vector3::x(), FRAC_PI_2),
        ]);
    }
    if in_yz(axis) {
        // exp(-i t/2 (n1 sy + n2 sz)) =
        //   exp(+i pi/4 sy) exp(-i t/2 (n2 sx + n1 sy)) exp(-i pi/4 sy)
        let (n1, n2) = (axis[1], axis[2]);
        return Ok(vec![
            sub(Vector3::y(), FRAC_PI_2),
            sub(Vector3::new(n2, n1, 0.0), angle),
            sub(Vector3::y(), -FRAC_PI_2),
        ]);
    }
    Err(Error::NotRepresentable)
}

/// Splits a rotation with a non-planar axis into two planar-axis rotations,
/// R = R_a * R_b with R_b a z rotation and R_a's axis in the x-z or y-z
/// plane. The split angle is found by a sign-change scan plus bisection on
/// the relevant antisymmetric component of R * Rz(-chi).
fn split_planar(r: &Matrix3<f64>) -> Result<[(Vector3<f64>, f64); 2]> {
    // component index 0: zero x of axis (target y-z plane);
    // component index 1: zero y of axis (target x-z plane)
    for comp in [0usize, 1] {
        let f = |chi: f64| -> f64 {
            let q = r * axis_angle_matrix(&Vector3::z(), -chi).unwrap();
            match comp {
                0 => q[(2, 1)] - q[(1, 2)],
                _ => q[(0, 2)] - q[(2, 0)],
            }
        };
        let samples = 2048;
        let mut prev = f(0.0);
        for i in 1..=samples {
            let chi = 2.0 * PI * i as f64 / samples as f64;
            let cur = f(chi);
            if prev == 0.0 || prev.signum() != cur.signum() {
                // bisect
                let (mut lo, mut hi) = (2.0 * PI * (i - 1) as f64 / samples as f64, chi);
                let (mut flo, _) = (prev, cur);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm == 0.0 || (flo.signum() == fm.signum()) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                let chi0 = 0.5 * (lo + hi);
                let ra = r * axis_angle_matrix(&Vector3::z(), -chi0).unwrap();
                let (axis_a, angle_a) = axis_angle_from_matrix(&ra);
                // a vanishing antisymmetric part can also mean angle pi with
                // an arbitrary axis; verify planarity of the actual axis
                let planar_ok = match comp {
                    0 => in_yz(&axis_a) || angle_a < 1e-9,
                    _ => in_xz(&axis_a) || angle_a < 1e-9,
                };
                if planar_ok {
                    let recomposed = axis_angle_matrix(&axis_a, angle_a).unwrap()
                        * axis_angle_matrix(&Vector3::z(), chi0).unwrap();
                    if (recomposed - r).norm() < 1e-10 {
                        return Ok([(axis_a, angle_a), (Vector3::z(), chi0)]);
                    }
                }
            }
            prev = cur;
        }
    }
    Err(Error::NotRepresentable)
}

/// Decomposes a rotation into xy-plane sub-pulses whose SU(2) product equals
/// `spin_unitary(axis, angle)` up to global phase. Planar axes yield three
/// sub-pulses; other axes are first split into two planar rotations and
/// yield six.
pub fn decompose_composite(axis: &Vector3<f64>, angle: f64) -> Result<Vec<SubPulse>> {
    let norm = axis.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitAxis(norm));
    }
    if planar(axis) {
        return composite_planar(axis, angle);
    }
    let r = axis_angle_matrix(axis, angle)?;
    let [(axis_a, angle_a), (axis_b, angle_b)] = split_planar(&r)?;
    // R = R_a R_b: R_b applied first
    let mut pulses = composite_planar(&axis_b, angle_b)?;
    pulses.extend(composite_planar(&axis_a, angle_a)?);
    Ok(pulses)
}

/// Off-resonant drive parameters realizing `spin_unitary(axis, angle)` with
/// Rabi frequency `rabi_hz` on the control-only propagator. The drive axis is
/// the normalized xy-plane projection of the rotation axis, the detuning is
/// delta = (n_z / |n_xy|) Omega, and the duration is theta / (2 pi Omega_eff);
/// only pure-z axes are unrealizable.
pub fn off_resonant_params(
    axis: &Vector3<f64>,
    angle: f64,
    rabi_hz: f64,
) -> Result<HardwareRealization> {
    let norm = axis.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitAxis(norm));
    }
    if rabi_hz <= 0.0 {
        return Err(Error::InvalidInput("Rabi frequency must be positive".into()));
    }
    let n_xy = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
    if n_xy < 1e-12 {
        return Err(Error::PureZAxis);
    }
    let drive = Vector3::new(axis[0] / n_xy, axis[1] / n_xy, 0.0);
    let detuning = axis[2] / n_xy * rabi_hz;
    let eff = (rabi_hz * rabi_hz + detuning * detuning).sqrt();
    // wrap the angle into [0, 2pi) so the drive duration is positive
    let angle = angle.rem_euclid(2.0 * PI);
    Ok(HardwareRealization::OffResonant {
        rabi_hz,
        detuning_hz: detuning,
        drive_axis: drive.into(),
        duration_s: angle / (2.0 * PI * eff),
    })
}

/// Max-entry distance between two SU(2) matrices up to global phase.
pub fn su2_distance_up_to_phase(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> f64 {
    let inner = (a.adjoint() * b).trace();
    let phase = if inner.norm() > 1e-12 {
        inner / inner.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    (a * phase - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
