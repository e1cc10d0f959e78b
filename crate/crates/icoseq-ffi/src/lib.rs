//! C ABI for the icoseq library.
//!
//! All objects cross the boundary as opaque handles. Functions return an
//! `IcoseqStatus` code; on failure the thread-local message from
//! `icoseq_last_error` describes the problem. Strings returned by the library
//! must be released with `icoseq_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use icoseq::avgham::verify_two_paths;
use icoseq::error::Error;
use icoseq::presets::{nv_coefficient_hamiltonian, synthesize_preset};
use icoseq::rotgroup::{clifford_group, icosahedral_group, RotationGroup};
use icoseq::sim::{evolve, plus_x_state, EnsembleSpec, PulseMode, Trajectory};
use icoseq::synth::{LpStatus, PulseSequence};

pub const ICOSEQ_OK: c_int = 0;
pub const ICOSEQ_ERR_INVALID: c_int = 1;
pub const ICOSEQ_ERR_INFEASIBLE: c_int = 2;
pub const ICOSEQ_ERR_NUMERIC: c_int = 3;
pub const ICOSEQ_ERR_PANIC: c_int = 4;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> c_int {
    match err {
        Error::Infeasible(_) => ICOSEQ_ERR_INFEASIBLE,
        Error::NotCyclic(_) | Error::NotHermitian(_) | Error::NoRotation => ICOSEQ_ERR_NUMERIC,
        _ => ICOSEQ_ERR_INVALID,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guarded<F: FnOnce() -> Result<(), (c_int, String)>>(f: F) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ICOSEQ_OK,
        Ok(Err((code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            ICOSEQ_ERR_PANIC
        }
    }
}

fn lib_err(e: Error) -> (c_int, String) {
    (status_of(&e), e.to_string())
}

unsafe fn cstr<'a>(p: *const c_char) -> Result<&'a str, (c_int, String)> {
    if p.is_null() {
        return Err((ICOSEQ_ERR_INVALID, "null string argument".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (ICOSEQ_ERR_INVALID, "string is not valid UTF-8".into()))
}

/// Most recent error message for this thread, or null. Owned by the library;
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn icoseq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(c) => c.as_ptr(),
        None => ptr::null(),
    })
}

#[no_mangle]
pub unsafe extern "C" fn icoseq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

pub struct IcoseqGroup(RotationGroup);
pub struct IcoseqSequence(PulseSequence);
pub struct IcoseqTrajectory(Trajectory);

/// Builds a named rotation group ("clifford" or "icosahedral").
#[no_mangle]
pub unsafe extern "C" fn icoseq_group_new(
    name: *const c_char,
    out: *mut *mut IcoseqGroup,
) -> c_int {
    guarded(|| {
        if out.is_null() {
            return Err((ICOSEQ_ERR_INVALID, "null output pointer".into()));
        }
        let group = match cstr(name)? {
            "clifford" => clifford_group(),
            "icosahedral" => icosahedral_group(),
            other => return Err((ICOSEQ_ERR_INVALID, format!("unknown group '{other}'"))),
        };
        *out = Box::into_raw(Box::new(IcoseqGroup(group)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn icoseq_group_order(group: *const IcoseqGroup) -> c_int {
    if group.is_null() {
        return -1;
    }
    (*group).0.order() as c_int
}

#[no_mangle]
pub unsafe extern "C" fn icoseq_group_free(group: *mut IcoseqGroup) {
    if !group.is_null() {
        drop(Box::from_raw(group));
    }
}

/// Synthesizes a named preset sequence with the given cycle time.
#[no_mangle]
pub unsafe extern "C" fn icoseq_synthesize_preset(
    name: *const c_char,
    cycle_time_s: c_double,
    out: *mut *mut IcoseqSequence,
) -> c_int {
    guarded(|| {
        if out.is_null() {
            return Err((ICOSEQ_ERR_INVALID, "null output pointer".into()));
        }
        let outcome = synthesize_preset(cstr(name)?, cycle_time_s).map_err(lib_err)?;
        if outcome.status == LpStatus::Infeasible {
            return Err((
                ICOSEQ_ERR_INFEASIBLE,
                format!("unreachable components: {}", outcome.unreachable.join(", ")),
            ));
        }
        *out = Box::into_raw(Box::new(IcoseqSequence(outcome.sequence)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn icoseq_sequence_from_json(
    json: *const c_char,
    out: *mut *mut IcoseqSequence,
) -> c_int {
    guarded(|| {
        if out.is_null() {
            return Err((ICOSEQ_ERR_INVALID, "null output pointer".into()));
        }
        let seq = PulseSequence::from_json(cstr(json)?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IcoseqSequence(seq)));
        Ok(())
    })
}

/// Serializes the sequence; caller frees the string with `icoseq_string_free`.
#[no_mangle]
pub unsafe extern "C" fn icoseq_sequence_to_json(
    seq: *const IcoseqSequence,
    out: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        if seq.is_null() || out.is_null() {
            return Err((ICOSEQ_ERR_INVALID, "null pointer".into()));
        }
        let json = (*seq).0.to_json().map_err(lib_err)?;
        let c = CString::new(json)
            .map_err(|_| (ICOSEQ_ERR_INVALID, "sequence JSON contains NUL".into()))?;
        *out = c.into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn icoseq_sequence_pulse_count(seq: *const IcoseqSequence) -> c_int {
    if seq.is_null() {
        return -1;
    }
    (*seq).0.pulses.len() as c_int
}

#[no_mangle]
pub unsafe extern "C" fn icoseq_sequence_cycle_time(seq: *const IcoseqSequence) -> c_double {
    if seq.is_null() {
        return f64::NAN;
    }
    (*seq).0.cycle_time_s
}

#[no_mangle]
pub unsafe extern "C" fn icoseq_sequence_free(seq: *mut IcoseqSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Verifies the engineered average along both derivation paths for an
/// NV-style Hamiltonian. `couplings` is `n_couplings` triples laid out as
/// (a, b, omega_hz) with a, b cast from integers.
#[no_mangle]
pub unsafe extern "C" fn icoseq_verify(
    seq: *const IcoseqSequence,
    n_spins: c_int,
    zeeman_hz: c_double,
    couplings: *const c_double,
    n_couplings: c_int,
    out_deviation: *mut c_double,
) -> c_int {
    guarded(|| {
        if seq.is_null() || out_deviation.is_null() {
            return Err((ICOSEQ_ERR_INVALID, "null pointer".into()));
        }
        if n_couplings > 0 && couplings.is_null() {
            return Err((ICOSEQ_ERR_INVALID, "null couplings with nonzero count".into()));
        }
        let triples: Vec<(usize, usize, f64)> = (0..n_couplings as usize)
            .map(|k| {
                let a = *couplings.add(3 * k);
                let b = *couplings.add(3 * k + 1);
                let w = *couplings.add(3 * k + 2);
                (a as usize, b as usize, w)
            })
            .collect();
        let h = nv_coefficient_hamiltonian(n_spins as usize, &triples, zeeman_hz);
        let report = verify_two_paths(&h, &(*seq).0).map_err(lib_err)?;
        *out_deviation = report.two_path_deviation;
        Ok(())
    })
}

/// Evolves all-plus-x spins through `cycles` repetitions of the sequence.
/// `couplings_hz` is a row-major n x n symmetric matrix. Mode: 0
/// instantaneous, 1 composite, 2 off-resonant (requires lowered sequence).
#[no_mangle]
pub unsafe extern "C" fn icoseq_simulate(
    seq: *const IcoseqSequence,
    n_spins: c_int,
    couplings_hz: *const c_double,
    bz_t: c_double,
    mode: c_int,
    cycles: c_int,
    out: *mut *mut IcoseqTrajectory,
) -> c_int {
    guarded(|| {
        if seq.is_null() || couplings_hz.is_null() || out.is_null() {
            return Err((ICOSEQ_ERR_INVALID, "null pointer".into()));
        }
        let n = n_spins as usize;
        let m: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..n).map(|b| *couplings_hz.add(a * n + b)).collect())
            .collect();
        let spec = EnsembleSpec::new(n, m, bz_t).map_err(lib_err)?;
        let mode = match mode {
            0 => PulseMode::Instantaneous,
            1 => PulseMode::Composite,
            2 => PulseMode::OffResonant,
            other => return Err((ICOSEQ_ERR_INVALID, format!("unknown mode {other}"))),
        };
        if cycles <= 0 {
            return Err((ICOSEQ_ERR_INVALID, "cycles must be positive".into()));
        }
        let initial = plus_x_state(n).map_err(lib_err)?;
        let traj =
            evolve(&spec, &(*seq).0, mode, cycles as usize, &initial, None).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IcoseqTrajectory(traj)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn icoseq_trajectory_len(traj: *const IcoseqTrajectory) -> c_int {
    if traj.is_null() {
        return -1;
    }
    (*traj).0.times_s.len() as c_int
}

/// Borrowed pointer into the trajectory's time series; valid until the
/// trajectory is freed.
#[no_mangle]
pub unsafe extern "C" fn icoseq_trajectory_times(traj: *const IcoseqTrajectory) -> *const c_double {
    if traj.is_null() {
        return ptr::null();
    }
    (*traj).0.times_s.as_ptr()
}

#[no_mangle]
pub unsafe extern "C" fn icoseq_trajectory_fidelity(
    traj: *const IcoseqTrajectory,
) -> *const c_double {
    if traj.is_null() {
        return ptr::null();
    }
    (*traj).0.fidelity.as_ptr()
}

#[no_mangle]
pub unsafe extern "C" fn icoseq_trajectory_free(traj: *mut IcoseqTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    #[test]
    fn group_round_trip() {
        let name = CString::new("icosahedral").unwrap();
        let mut g: *mut IcoseqGroup = ptr::null_mut();
        unsafe {
            assert_eq!(icoseq_group_new(name.as_ptr(), &mut g), ICOSEQ_OK);
            assert_eq!(icoseq_group_order(g), 60);
            icoseq_group_free(g);
        }
    }

    #[test]
    fn unknown_group_sets_error() {
        let name = CString::new("hexagonal").unwrap();
        let mut g: *mut IcoseqGroup = ptr::null_mut();
        unsafe {
            assert_eq!(icoseq_group_new(name.as_ptr(), &mut g), ICOSEQ_ERR_INVALID);
            let msg = icoseq_last_error();
            assert!(!msg.is_null());
            assert!(CStr::from_ptr(msg).to_str().unwrap().contains("hexagonal"));
        }
    }

    #[test]
    fn preset_synthesis_verify_and_simulate() {
        let name = CString::new("wahuha").unwrap();
        let mut s: *mut IcoseqSequence = ptr::null_mut();
        unsafe {
            assert_eq!(icoseq_synthesize_preset(name.as_ptr(), 6e-4, &mut s), ICOSEQ_OK);
            assert_eq!(icoseq_sequence_pulse_count(s), 4);
            assert!((icoseq_sequence_cycle_time(s) - 6e-4).abs() < 1e-15);

            let couplings = [0.0, 1.0, 60.0];
            let mut dev = f64::NAN;
            assert_eq!(
                icoseq_verify(s, 2, 56.0, couplings.as_ptr(), 1, &mut dev),
                ICOSEQ_OK
            );
            assert!(dev < 1e-8, "dev = {dev}");

            let w = [0.0, 60.0, 60.0, 0.0];
            let mut t: *mut IcoseqTrajectory = ptr::null_mut();
            assert_eq!(
                icoseq_simulate(s, 2, w.as_ptr(), 2e-9, 0, 10, &mut t),
                ICOSEQ_OK
            );
            assert_eq!(icoseq_trajectory_len(t), 10);
            let fid = icoseq_trajectory_fidelity(t);
            assert!((0.0..=1.0).contains(&*fid.add(9)));
            icoseq_trajectory_free(t);

            let mut json: *mut c_char = ptr::null_mut();
            assert_eq!(icoseq_sequence_to_json(s, &mut json), ICOSEQ_OK);
            let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
            assert!(text.contains("cycle_time_s"));
            icoseq_string_free(json);

            let json_in = CString::new(text).unwrap();
            let mut s2: *mut IcoseqSequence = ptr::null_mut();
            assert_eq!(icoseq_sequence_from_json(json_in.as_ptr(), &mut s2), ICOSEQ_OK);
            assert_eq!(icoseq_sequence_pulse_count(s2), 4);
            icoseq_sequence_free(s2);
            icoseq_sequence_free(s);
        }
    }

    #[test]
    fn infeasible_preset_maps_to_code_2() {
        let name = CString::new("sigmaxy-clifford").unwrap();
        let mut s: *mut IcoseqSequence = ptr::null_mut();
        unsafe {
            assert_eq!(
                icoseq_synthesize_preset(name.as_ptr(), 1e-4, &mut s),
                ICOSEQ_ERR_INFEASIBLE
            );
        }
    }
}
