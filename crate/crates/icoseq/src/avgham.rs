//! Toggling frames and the first-order average Hamiltonian, computed two
//! independent ways: coefficient-level through the S1/S2 transform matrices,
//! and operator-level through the duration-weighted conjugation sum. The
//! agreement of the two paths is the crate's core verification oracle.

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irrep::IrreducibleForm;
use crate::numerics::ComplexMatrix;
use crate::rotgroup::{axis_angle_from_matrix, rep5, spin_unitary, Matrix5};
use crate::synth::PulseSequence;

/// One toggling frame: the accumulated frame rotation and its dwell time.
#[derive(Clone, Debug)]
pub struct Frame {
    pub rotation: Matrix3<f64>,
    pub duration_s: f64,
}

#[derive(Clone, Debug)]
pub struct ToggledFrameSet {
    pub frames: Vec<Frame>,
    pub total_s: f64,
}

/// Convex combinations S1 = sum (tau_k/T) R_k^(3x3) and
/// S2 = sum (tau_k/T) R_k^(5x5).
#[derive(Clone, Debug)]
pub struct EngineeredTransform {
    pub s1: Matrix3<f64>,
    pub s2: Matrix5,
}

/// A full coefficient-level Hamiltonian: one 3-vector per spin and one
/// irreducible form per ordered pair (a < b).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientHamiltonian {
    pub one_spin: Vec<[f64; 3]>,
    pub pairs: Vec<PairTerm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairTerm {
    pub a: usize,
    pub b: usize,
    pub form: IrreducibleForm,
}

impl CoefficientHamiltonian {
    pub fn spin_count(&self) -> usize {
        self.one_spin.len()
    }

    /// Builds the 2^N x 2^N operator (same frequency units as the
    /// coefficients).
    pub fn to_operator(&self) -> Result<ComplexMatrix> {
        let n = self.spin_count();
        let dim = 1usize << n;
        let mut h = ComplexMatrix::zeros(dim, dim);
        for (site, nv) in self.one_spin.iter().enumerate() {
            h += crate::irrep::one_spin_operator(&Vector3::from(*nv), site, n)?;
        }
        for p in &self.pairs {
            h += crate::irrep::pair_operator(&p.form, p.a, p.b, n)?;
        }
        Ok(h)
    }
}

/// The 2x2 unitary whose conjugation (U^dag . U) rotates Pauli coefficients
/// by exactly `r`.
pub fn frame_unitary_2x2(r: &Matrix3<f64>) -> Matrix2<Complex64> {
    let (axis, angle) = axis_angle_from_matrix(r);
    // spin_unitary(n, theta) conjugates by R(n, -theta); flip the angle.
    spin_unitary(&axis, -angle).unwrap()
}

/// N-spin tensor power of [`frame_unitary_2x2`].
pub fn frame_unitary(r: &Matrix3<f64>, n: usize) -> ComplexMatrix {
    let u2 = frame_unitary_2x2(r);
    let u2d: ComplexMatrix = ComplexMatrix::from_iterator(2, 2, u2.iter().cloned());
    let mut out = crate::numerics::identity(1);
    for _ in 0..n {
        out = crate::numerics::kron(&out, &u2d);
    }
    out
}

/// Derives the toggling frames of a cyclic sequence: frame k is the ordered
/// product of the pulse rotations applied before it, and its duration is the
/// spacing to the next pulse. Zero-duration frames are retained.
pub fn toggling_frames(seq: &PulseSequence) -> Result<ToggledFrameSet> {
    seq.check_cyclic(1e-9)?;
    let t_total = seq.cycle_time_s;
    let mut frames = Vec::with_capacity(seq.pulses.len() + 1);
    let mut r = Matrix3::<f64>::identity();
    let mut t_prev = 0.0;
    for p in &seq.pulses {
        if p.time_s < t_prev - 1e-15 || p.time_s > t_total + 1e-15 {
            return Err(Error::InvalidInput(format!(
                "pulse time {} outside cycle or out of order",
                p.time_s
            )));
        }
        frames.push(Frame { rotation: r, duration_s: p.time_s - t_prev });
        r *= p.rotation();
        t_prev = p.time_s;
    }
    frames.push(Frame { rotation: r, duration_s: t_total - t_prev });
    Ok(ToggledFrameSet { frames, total_s: t_total })
}

pub fn engineered_transform(frames: &ToggledFrameSet) -> EngineeredTransform {
    let mut s1 = Matrix3::zeros();
    let mut s2 = Matrix5::zeros();
    for f in &frames.frames {
        let w = f.duration_s / frames.total_s;
        if w == 0.0 {
            continue;
        }
        s1 += f.rotation * w;
        s2 += rep5(&f.rotation).unwrap() * w;
    }
    EngineeredTransform { s1, s2 }
}

/// Coefficient-level engineered Hamiltonian: n -> S1 n, beta -> S1 beta,
/// gamma -> S2 gamma, alpha unchanged.
pub fn average_coefficients(
    h: &CoefficientHamiltonian,
    t: &EngineeredTransform,
) -> CoefficientHamiltonian {
    CoefficientHamiltonian {
        one_spin: h
            .one_spin
            .iter()
            .map(|nv| (t.s1 * Vector3::from(*nv)).into())
            .collect(),
        pairs: h
            .pairs
            .iter()
            .map(|p| PairTerm {
                a: p.a,
                b: p.b,
                form: IrreducibleForm {
                    alpha: p.form.alpha,
                    beta: (t.s1 * p.form.beta_vec()).into(),
                    gamma: (t.s2 * p.form.gamma_vec()).into(),
                },
            })
            .collect(),
    }
}

/// Operator-level first-order average: sum_k (tau_k/T) V_k^dag H V_k with
/// V_k the N-spin frame unitary.
pub fn average_operator(
    h: &ComplexMatrix,
    frames: &ToggledFrameSet,
    n: usize,
) -> Result<ComplexMatrix> {
    let dim = 1usize << n;
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, expected {dim}x{dim}",
            h.nrows(),
            h.ncols()
        )));
    }
    let mut out = ComplexMatrix::zeros(dim, dim);
    for f in &frames.frames {
        let w = f.duration_s / frames.total_s;
        if w == 0.0 {
            continue;
        }
        let v = frame_unitary(&f.rotation, n);
        out += v.adjoint() * h * v * Complex64::new(w, 0.0);
    }
    Ok(out)
}

/// Operator norm of the second Magnus term,
/// (1/2T) sum_{k<l} tau_k tau_l [H_k, H_l] over frame Hamiltonians.
/// Reported for diagnostics.
pub fn next_magnus_norm(h: &ComplexMatrix, frames: &ToggledFrameSet, n: usize) -> Result<f64> {
    let dim = 1usize << n;
    if h.nrows() != dim {
        return Err(Error::DimensionMismatch("operator/frames size".into()));
    }
    let toggled: Vec<(f64, ComplexMatrix)> = frames
        .frames
        .iter()
        .filter(|f| f.duration_s > 0.0)
        .map(|f| {
            let v = frame_unitary(&f.rotation, n);
            (f.duration_s, v.adjoint() * h * &v)
        })
        .collect();
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for k in 0..toggled.len() {
        for l in (k + 1)..toggled.len() {
            let (tk, hk) = &toggled[k];
            let (tl, hl) = &toggled[l];
            let comm = hk * hl - hl * hk;
            acc += comm * Complex64::new(tk * tl, 0.0);
        }
    }
    Ok(crate::numerics::operator_norm(&acc) / (2.0 * frames.total_s))
}

/// Per-pair before/after coefficient report, serialized by the CLI.
#[derive(Serialize, Deserialize)]
pub struct CoefficientReport {
    pub before: CoefficientHamiltonian,
    pub after: CoefficientHamiltonian,
    /// Max entry deviation between the operator-level average and the
    /// operator rebuilt from the coefficient-level average.
    pub two_path_deviation: f64,
}

/// Runs both verification paths and reports the discrepancy.
pub fn verify_two_paths(
    h: &CoefficientHamiltonian,
    seq: &PulseSequence,
) -> Result<CoefficientReport> {
    let frames = toggling_frames(seq)?;
    let t = engineered_transform(&frames);
    let after = average_coefficients(h, &t);
    let n = h.spin_count();
    let op_avg = average_operator(&h.to_operator()?, &frames, n)?;
    let coeff_op = after.to_operator()?;
    let dev = (op_avg - coeff_op).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(CoefficientReport { before: h.clone(), after, two_path_deviation: dev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irrep::Vector5;
    use crate::presets::nv_coefficient_hamiltonian;
    use crate::synth::Pulse;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn pulse(axis: Vector3<f64>, angle: f64, time: f64) -> Pulse {
        Pulse { axis: axis.into(), angle_rad: angle, time_s: time, realization: None }
    }

    fn wahuha(tau: f64) -> PulseSequence {
        crate::presets::wahuha_sequence(6.0 * tau)
    }

    #[test]
    fn empty_sequence_single_identity_frame() {
        let seq = PulseSequence { cycle_time_s: 2.0, pulses: vec![] };
        let frames = toggling_frames(&seq).unwrap();
        assert_eq!(frames.frames.len(), 1);
        assert_abs_diff_eq!(frames.frames[0].duration_s, 2.0, epsilon = 1e-15);
        let t = engineered_transform(&frames);
        assert!((t.s1 - Matrix3::identity()).norm() < 1e-14);
        assert!((t.s2 - Matrix5::identity()).norm() < 1e-14);
    }

    #[test]
    fn zero_spacing_pulses_merge_to_net_rotation() {
        let seq = PulseSequence {
            cycle_time_s: 1.0,
            pulses: vec![
                pulse(Vector3::z(), FRAC_PI_2, 0.5),
                pulse(Vector3::z(), FRAC_PI_2, 0.5),
                pulse(Vector3::z(), std::f64::consts::PI, 1.0),
            ],
        };
        let frames = toggling_frames(&seq).unwrap();
        assert_eq!(frames.frames.len(), 4);
        assert_abs_diff_eq!(frames.frames[1].duration_s, 0.0, epsilon = 1e-15);
        // third frame is the net pi rotation about z
        let expect = crate::rotgroup::axis_angle_matrix(&Vector3::z(), std::f64::consts::PI).unwrap();
        assert!((frames.frames[2].rotation - expect).norm() < 1e-12);
    }

    #[test]
    fn non_cyclic_rejected() {
        let seq = PulseSequence {
            cycle_time_s: 1.0,
            pulses: vec![pulse(Vector3::x(), FRAC_PI_2, 0.5)],
        };
        assert!(matches!(toggling_frames(&seq), Err(Error::NotCyclic(_))));
    }

    #[test]
    fn wahuha_frames_cycle_z_axis() {
        let frames = toggling_frames(&wahuha(1.0)).unwrap();
        assert_eq!(frames.frames.len(), 5);
        let images: Vec<Vector3<f64>> = frames
            .frames
            .iter()
            .map(|f| f.rotation * Vector3::z())
            .collect();
        assert!((images[0] - Vector3::z()).norm() < 1e-12);
        assert!((images[4] - Vector3::z()).norm() < 1e-12);
        // middle frames cover the two transverse axes
        let durations: Vec<f64> = frames.frames.iter().map(|f| f.duration_s).collect();
        assert_abs_diff_eq!(durations[2], 2.0, epsilon = 1e-12);
        let s1z: Vector3<f64> = frames
            .frames
            .iter()
            .map(|f| f.rotation * Vector3::z() * (f.duration_s / 6.0))
            .sum();
        assert!((s1z - Vector3::new(1.0, 1.0, 1.0) / 3.0).norm() < 1e-12);
    }

    #[test]
    fn wahuha_decouples_nv_gamma() {
        let frames = toggling_frames(&wahuha(1.0)).unwrap();
        let t = engineered_transform(&frames);
        let gamma_in = Vector5::new(2.0 / 3.0, 2.0 / 3.0, 0.0, 0.0, 0.0);
        assert!((t.s2 * gamma_in).norm() < 1e-12);
        assert!((t.s1 * Vector3::z() - Vector3::new(1.0, 1.0, 1.0) / 3.0).norm() < 1e-12);
    }

    #[test]
    fn wahuha_operator_average_matches_fig_2a() {
        // 2-spin NV H averaged under WAHUHA: (omega/3) sigma.sigma +
        // (gBz/3) sum_i (sx + sy + sz)
        let (omega, gbz) = (1.3, 0.7);
        let h = nv_coefficient_hamiltonian(2, &[(0, 1, omega)], gbz);
        let report = verify_two_paths(&h, &wahuha(1.0)).unwrap();
        assert!(report.two_path_deviation < 1e-10);
        let after = &report.after;
        assert_abs_diff_eq!(after.pairs[0].form.alpha, omega / 3.0, epsilon = 1e-12);
        assert!(after.pairs[0].form.gamma.iter().all(|g| g.abs() < 1e-12));
        for site in 0..2 {
            for c in 0..3 {
                assert_abs_diff_eq!(after.one_spin[site][c], gbz / 3.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn isotropic_part_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = CoefficientHamiltonian {
            one_spin: vec![[0.0; 3]; 2],
            pairs: vec![PairTerm {
                a: 0,
                b: 1,
                form: IrreducibleForm::new(0.77, [0.0; 3], [0.0; 5]),
            }],
        };
        for _ in 0..5 {
            let seq = random_cyclic_sequence(&mut rng, 4);
            let report = verify_two_paths(&h, &seq).unwrap();
            assert_abs_diff_eq!(report.after.pairs[0].form.alpha, 0.77, epsilon = 1e-15);
            assert!(report.two_path_deviation < 1e-10);
        }
    }

    pub(crate) fn random_cyclic_sequence(rng: &mut ChaCha8Rng, n_pulses: usize) -> PulseSequence {
        let mut pulses = Vec::new();
        let mut acc = Matrix3::<f64>::identity();
        let dt = 1.0 / (n_pulses + 1) as f64;
        for i in 0..n_pulses {
            let axis = loop {
                let v = Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                if v.norm() > 0.1 {
                    break v.normalize();
                }
            };
            let angle = rng.gen_range(0.1..std::f64::consts::PI);
            pulses.push(pulse(axis, angle, dt * (i + 1) as f64));
            acc *= crate::rotgroup::axis_angle_matrix(&axis, angle).unwrap();
        }
        // closing pulse restores the identity
        let (axis, angle) = crate::synth::pulse_from_rotation_step(&acc, &Matrix3::identity());
        if angle > 1e-12 {
            pulses.push(pulse(axis, angle, 1.0));
        }
        PulseSequence { cycle_time_s: 1.0, pulses }
    }

    #[test]
    fn path_equivalence_random_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let n = if rng.gen_bool(0.5) { 2 } else { 3 };
            let mut pairs = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    pairs.push(PairTerm {
                        a,
                        b,
                        form: IrreducibleForm {
                            alpha: rng.gen_range(-1.0..1.0),
                            beta: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)),
                            gamma: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)),
                        },
                    });
                }
            }
            let h = CoefficientHamiltonian {
                one_spin: (0..n)
                    .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
                    .collect(),
                pairs,
            };
            let n_pulses = rng.gen_range(2..6);
            let seq = random_cyclic_sequence(&mut rng, n_pulses);
            let report = verify_two_paths(&h, &seq).unwrap();
            assert!(report.two_path_deviation < 1e-10, "dev = {}", report.two_path_deviation);
        }
    }

    #[test]
    fn transform_contractivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..10 {
            let seq = random_cyclic_sequence(&mut rng, 5);
            let frames = toggling_frames(&seq).unwrap();
            let t = engineered_transform(&frames);
            let v = Vector3::new(rng.gen(), rng.gen(), rng.gen());
            assert!((t.s1 * v).norm() <= v.norm() + 1e-12);
            let w = Vector5::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            // S2 is a convex combination of rep5 matrices; rep5 is not an
            // isometry of the raw coordinates, so compare through the
            // rotation-invariant Frobenius norm of M(gamma).
            let before = crate::irrep::gamma_matrix(&w).norm();
            let after = crate::irrep::gamma_matrix(&(t.s2 * w)).norm();
            assert!(after <= before + 1e-12);
        }
    }

    #[test]
    fn palindromic_frames_time_symmetric() {
        // a palindromic frame set has the same transform as its reverse
        let g = crate::rotgroup::icosahedral_group();
        let p = crate::synth::build_lp(
            &g,
            &[0.0, 0.0, 1.0, 2.0 / 3.0, 2.0 / 3.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            crate::synth::LpMode::MaxScale,
        )
        .unwrap();
        let sol = crate::synth::solve_lp(&p).unwrap();
        let seq = crate::synth::assemble_sequence(&g, &sol, 1.0, true).unwrap();
        let frames = toggling_frames(&seq).unwrap();
        let rev = ToggledFrameSet {
            frames: frames.frames.iter().rev().cloned().collect(),
            total_s: frames.total_s,
        };
        let (a, b) = (engineered_transform(&frames), engineered_transform(&rev));
        assert!((a.s1 - b.s1).norm() < 1e-12);
        assert!((a.s2 - b.s2).norm() < 1e-12);
    }

    #[test]
    fn magnus_norm_zero_cases() {
        let seq = PulseSequence { cycle_time_s: 1.0, pulses: vec![] };
        let frames = toggling_frames(&seq).unwrap();
        let h = nv_coefficient_hamiltonian(2, &[(0, 1, 1.0)], 0.5).to_operator().unwrap();
        assert_abs_diff_eq!(next_magnus_norm(&h, &frames, 2).unwrap(), 0.0, epsilon = 1e-15);

        // commuting frame Hamiltonians: all frames rotations about z, H = sz
        let seq = PulseSequence {
            cycle_time_s: 1.0,
            pulses: vec![
                pulse(Vector3::z(), FRAC_PI_2, 0.3),
                pulse(Vector3::z(), 3.0 * FRAC_PI_2, 0.7),
            ],
        };
        let frames = toggling_frames(&seq).unwrap();
        let hz = CoefficientHamiltonian { one_spin: vec![[0.0, 0.0, 1.0]], pairs: vec![] }
            .to_operator()
            .unwrap();
        assert!(next_magnus_norm(&hz, &frames, 1).unwrap() < 1e-12);
    }

    #[test]
    fn symmetrization_reduces_second_magnus_term() {
        let g = crate::rotgroup::icosahedral_group();
        let p = crate::synth::build_lp(
            &g,
            &[0.0, 0.0, 1.0, 2.0 / 3.0, 2.0 / 3.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            crate::synth::LpMode::MaxScale,
        )
        .unwrap();
        let sol = crate::synth::solve_lp(&p).unwrap();
        let h = nv_coefficient_hamiltonian(2, &[(0, 1, 1.0)], 0.9).to_operator().unwrap();
        let norms: Vec<f64> = [false, true]
            .iter()
            .map(|&sym| {
                let seq = crate::synth::assemble_sequence(&g, &sol, 1.0, sym).unwrap();
                let frames = toggling_frames(&seq).unwrap();
                next_magnus_norm(&h, &frames, 2).unwrap()
            })
            .collect();
        assert!(norms[1] < norms[0], "symmetrized {} vs plain {}", norms[1], norms[0]);
    }
}
