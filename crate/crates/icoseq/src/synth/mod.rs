//! Sequence synthesis: map a rotation group and an initial/target coefficient
//! pair onto a linear program, solve it for toggling-frame durations, and
//! assemble the result into a symmetrized cyclic pulse sequence with
//! hardware-realizable pulses.

pub mod hardware;
pub mod lp;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotgroup::{axis_angle_from_matrix, axis_angle_matrix, RotationGroup};

pub use hardware::{decompose_composite, off_resonant_params, HardwareRealization, SubPulse};

/// Durations below this are structural zeros of the LP solution.
pub const DURATION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpMode {
    /// Maximize the coefficient c in A x = c * b_dir.
    MaxScale,
    /// Feasibility only: all designated rows driven to zero.
    PureDecouple,
}

/// The Hamiltonian-engineering linear program. Column k of `a` is the stacked
/// effect of group element k on the input coefficient vector.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub a: DMatrix<f64>,
    pub b_dir: DVector<f64>,
    /// Row indices constrained to exactly zero. Rows neither here nor
    /// carrying a nonzero b_dir component are left free.
    pub zero_rows: Vec<usize>,
    pub mode: LpMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    /// Duration fraction per group element; nonnegative, sums to 1.
    pub x: DVector<f64>,
    /// Achieved target coefficient.
    pub scale: f64,
    pub status: LpStatus,
}

/// Stacked block structure of the input vector: dimension 8 splits into a
/// 3-vector (one-spin or beta) under R^(3x3) and a 5-vector (gamma) under
/// R^(5x5); dimension 6 splits into two 3-vectors, both under R^(3x3).
pub fn build_lp(
    group: &RotationGroup,
    v_in: &[f64],
    target_dir: &[f64],
    mode: LpMode,
) -> Result<LpProblem> {
    let dim = v_in.len();
    if dim != 8 && dim != 6 {
        return Err(Error::DimensionMismatch(format!(
            "stacked input must have dimension 8 (3+5) or 6 (3+3), got {dim}"
        )));
    }
    if target_dir.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "target dimension {} does not match input dimension {dim}",
            target_dir.len()
        )));
    }
    let m = group.order();
    let mut a = DMatrix::zeros(dim, m);
    for (k, e) in group.elements.iter().enumerate() {
        let head = e.r3 * Vector3::new(v_in[0], v_in[1], v_in[2]);
        for i in 0..3 {
            a[(i, k)] = head[i];
        }
        if dim == 8 {
            let tail = e.r5 * crate::irrep::Vector5::from_column_slice(&v_in[3..8]);
            for i in 0..5 {
                a[(3 + i, k)] = tail[i];
            }
        } else {
            let tail = e.r3 * Vector3::new(v_in[3], v_in[4], v_in[5]);
            for i in 0..3 {
                a[(3 + i, k)] = tail[i];
            }
        }
    }
    let b_dir = DVector::from_column_slice(target_dir);
    let zero_rows = (0..dim).filter(|&i| target_dir[i] == 0.0).collect();
    Ok(LpProblem { a, b_dir, zero_rows, mode })
}

/// Solves the engineering LP. In max-scale mode, maximizes c subject to
/// A x = c * b_dir on target rows, A x = 0 on zero rows, x >= 0, sum x = 1.
/// An optimum with c below threshold means the target direction is
/// unreachable from the input and is reported as infeasible.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    let m = p.a.ncols();
    let target_rows: Vec<usize> = (0..p.b_dir.len())
        .filter(|&i| p.b_dir[i] != 0.0)
        .collect();
    let nvars = if p.mode == LpMode::MaxScale { m + 1 } else { m };
    let nrows = target_rows.len() + p.zero_rows.len() + 1;
    let mut eq = DMatrix::zeros(nrows, nvars);
    let mut rhs = DVector::zeros(nrows);
    let mut row = 0;
    for &i in &target_rows {
        for k in 0..m {
            eq[(row, k)] = p.a[(i, k)];
        }
        if p.mode == LpMode::MaxScale {
            eq[(row, m)] = -p.b_dir[i];
        } else {
            rhs[row] = p.b_dir[i];
        }
        row += 1;
    }
    for &i in &p.zero_rows {
        for k in 0..m {
            eq[(row, k)] = p.a[(i, k)];
        }
        row += 1;
    }
    for k in 0..m {
        eq[(row, k)] = 1.0;
    }
    rhs[row] = 1.0;

    let mut obj = DVector::zeros(nvars);
    if p.mode == LpMode::MaxScale {
        obj[m] = 1.0;
    }
    let out = match lp::simplex_maximize(&eq, &rhs, &obj) {
        Ok(o) => o,
        Err(Error::Infeasible(_)) => {
            return Ok(LpSolution {
                x: DVector::zeros(m),
                scale: 0.0,
                status: LpStatus::Infeasible,
            })
        }
        Err(e) => return Err(e),
    };
    let x = DVector::from_fn(m, |k, _| out.y[k]);
    let scale = if p.mode == LpMode::MaxScale { out.y[m] } else { 1.0 };
    let status = if p.mode == LpMode::MaxScale && scale < 1e-9 {
        LpStatus::Infeasible
    } else {
        LpStatus::Optimal
    };
    Ok(LpSolution { x, scale, status })
}

/// Names the components of an 8-row problem, for infeasibility reports.
pub fn component_name(dim: usize, row: usize) -> String {
    if dim == 8 {
        match row {
            0..=2 => format!("n{}", ["x", "y", "z"][row]),
            _ => format!("gamma{}", row - 2),
        }
    } else {
        format!("row {row}")
    }
}

// ---------------------------------------------------------------------------
// Pulse sequences
// ---------------------------------------------------------------------------

/// One pulse: a toggling-frame step rotation at a time within the cycle.
///
/// The stored (axis, angle) is the frame step P_k = R_{k-1}^{-1} R_k. The
/// unitary physically applied to the spins is `spin_unitary(-axis, angle)`
/// (see [`Pulse::kick_axis_angle`]); hardware realizations attached to the
/// pulse realize that kick.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Pulse {
    pub axis: [f64; 3],
    pub angle_rad: f64,
    pub time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub realization: Option<HardwareRealization>,
}

impl Pulse {
    pub fn axis_vec(&self) -> Vector3<f64> {
        Vector3::from(self.axis)
    }

    /// Axis and angle of the unitary kick applied to every spin.
    pub fn kick_axis_angle(&self) -> (Vector3<f64>, f64) {
        (-self.axis_vec(), self.angle_rad)
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        axis_angle_matrix(&self.axis_vec(), self.angle_rad).expect("pulse axis is unit")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PulseSequence {
    pub cycle_time_s: f64,
    pub pulses: Vec<Pulse>,
}

impl PulseSequence {
    /// Max deviation of the ordered pulse product from the identity.
    pub fn cyclic_deviation(&self) -> f64 {
        let mut r = Matrix3::<f64>::identity();
        for p in &self.pulses {
            r *= p.rotation();
        }
        (r - Matrix3::identity()).norm()
    }

    pub fn check_cyclic(&self, tol: f64) -> Result<()> {
        let dev = self.cyclic_deviation();
        if dev > tol {
            return Err(Error::NotCyclic(dev));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Axis-angle of the frame step R_prev^-1 R_next. Identity steps return
/// angle 0.
pub fn pulse_from_rotation_step(
    r_prev: &Matrix3<f64>,
    r_next: &Matrix3<f64>,
) -> (Vector3<f64>, f64) {
    axis_angle_from_matrix(&(r_prev.transpose() * r_next))
}

/// Turns an LP solution into a cyclic pulse sequence.
///
/// Frames with nonzero duration are ordered by descending duration (ties by
/// group element index), optionally mirrored palindromically about the last
/// frame with halved durations, and joined by frame-step pulses. Opening and
/// closing pulses map the identity frame in and out so the pulse product is
/// the identity.
pub fn assemble_sequence(
    group: &RotationGroup,
    sol: &LpSolution,
    cycle_time_s: f64,
    symmetrize: bool,
) -> Result<PulseSequence> {
    assemble_sequence_ordered(group, sol, cycle_time_s, symmetrize, None)
}

/// Like [`assemble_sequence`] but with an explicit ordering of the selected
/// frames, for studying higher-order effects of frame permutations.
pub fn assemble_sequence_ordered(
    group: &RotationGroup,
    sol: &LpSolution,
    cycle_time_s: f64,
    symmetrize: bool,
    permutation: Option<&[usize]>,
) -> Result<PulseSequence> {
    let mut selected: Vec<(usize, f64)> = sol
        .x
        .iter()
        .enumerate()
        .filter(|&(_, &d)| d > DURATION_TOL)
        .map(|(k, &d)| (k, d))
        .collect();
    if selected.is_empty() {
        return Err(Error::EmptySolution);
    }
    selected.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    if let Some(perm) = permutation {
        if perm.len() != selected.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation length {} does not match {} selected frames",
                perm.len(),
                selected.len()
            )));
        }
        selected = perm.iter().map(|&i| selected[i]).collect();
    }

    // frame list: (rotation, duration fraction)
    let mut frames: Vec<(Matrix3<f64>, f64)> = Vec::new();
    if symmetrize && selected.len() > 1 {
        for &(k, d) in &selected[..selected.len() - 1] {
            frames.push((group.elements[k].r3, d / 2.0));
        }
        let &(k, d) = selected.last().unwrap();
        frames.push((group.elements[k].r3, d));
        for &(k, d) in selected[..selected.len() - 1].iter().rev() {
            frames.push((group.elements[k].r3, d / 2.0));
        }
    } else {
        for &(k, d) in &selected {
            frames.push((group.elements[k].r3, d));
        }
    }

    // pulses between frames, plus opening/closing steps to/from identity
    let mut pulses = Vec::new();
    let mut time = 0.0;
    let ident = Matrix3::identity();
    let push_step = |r_prev: &Matrix3<f64>, r_next: &Matrix3<f64>, t: f64, out: &mut Vec<Pulse>| {
        let (axis, angle) = pulse_from_rotation_step(r_prev, r_next);
        if angle > 1e-12 {
            out.push(Pulse { axis: axis.into(), angle_rad: angle, time_s: t, realization: None });
        }
    };
    push_step(&ident, &frames[0].0, 0.0, &mut pulses);
    for w in 0..frames.len() {
        time += frames[w].1 * cycle_time_s;
        let next = if w + 1 < frames.len() { frames[w + 1].0 } else { ident };
        push_step(&frames[w].0, &next, time, &mut pulses);
    }

    let seq = PulseSequence { cycle_time_s, pulses };
    seq.check_cyclic(1e-9)?;
    Ok(seq)
}

/// Attaches a hardware realization to every pulse in place. Each realization
/// reproduces the pulse's physical kick unitary.
pub fn lower_sequence(
    seq: &mut PulseSequence,
    off_resonant_rabi_hz: Option<f64>,
) -> Result<()> {
    for p in &mut seq.pulses {
        let (axis, angle) = p.kick_axis_angle();
        let realization = match off_resonant_rabi_hz {
            Some(rabi) => off_resonant_params(&axis, angle, rabi)?,
            None => HardwareRealization::Composite {
                sub_pulses: decompose_composite(&axis, angle)?,
            },
        };
        p.realization = Some(realization);
    }
    Ok(())
}
