//! C ABI for the transmission-system laboratory.
//!
//! Conventions:
//! - Every fallible entry point returns a [`DegenwaveStatus`]; `OK` is 0.
//! - On failure, a thread-local message is readable through
//!   [`degenwave_last_error_message`] until the next failure on the same
//!   thread.
//! - Handles (`DegenwaveSystem`, `DegenwaveTrace`) are opaque; free them with
//!   their `_free` function exactly once. `_free(NULL)` is a no-op.
//! - All entry points catch panics and report them as `PANIC` instead of
//!   unwinding across the ABI.
//!
//! Safety contract, shared by every `unsafe extern "C"` function here:
//! pointer arguments must be null or valid for the access their type implies
//! (reads for `*const`, writes for `*mut`, `len` elements for array
//! pointers), and handles must come from this library and not be used after
//! `_free`. Null handles are rejected or treated as no-ops, never
//! dereferenced.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use degenwave::analysis::{
    fit_decay, resolvent_growth, resolvent_growth_refined, resolvent_norm, spectral_abscissa,
    DecayKind,
};
use degenwave::coefficients::{check_hypotheses, CoefficientModel, DegeneracyClass};
use degenwave::discretization::{
    DiscretizationParams, GeneratorSystem, InitialPreset, TransmissionParams,
};
use degenwave::evolution::{run_simulation, EvolutionParams, SimulationTrace};
use degenwave::kernel::MemoryKernel;
use degenwave::Error;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenwaveStatus {
    /// Success.
    Ok = 0,
    /// A pointer, range, or hypothesis precondition was violated.
    InvalidArgument = 1,
    /// The computation broke down numerically (singular or near-singular
    /// system, non-positive energy in a log fit).
    NumericalFailure = 2,
    /// An internal invariant failed; the library state is still consistent.
    Panic = 3,
}

/// Initial-data presets for [`degenwave_simulate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenwavePreset {
    /// Identically zero state.
    Zero = 0,
    /// Plucked wave displacement, zero elsewhere.
    Pluck = 1,
    /// Thermal bump, zero wave data.
    Thermal = 2,
}

/// Decay laws for [`degenwave_fit_decay`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenwaveDecayKind {
    /// E(t) ≈ amplitude · t^(−rate).
    Polynomial = 0,
    /// E(t) ≈ amplitude · exp(−rate · t).
    Exponential = 1,
}

/// Degeneracy classification of the wave coefficient a.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenwaveDegeneracyClass {
    /// a bounded away from zero.
    NonDegenerate = 0,
    /// Degeneracy exponent K_a in (0, 1).
    WeaklyDegenerate = 1,
    /// Degeneracy exponent K_a in [1, 2).
    StronglyDegenerate = 2,
    /// Degeneracy exponent K_a ≥ 2: outside the supported theory.
    Unsupported = 3,
}

/// Construction parameters for [`degenwave_system_new`].
///
/// Non-positive `wave_grading` selects the class-based default (2 for
/// degenerate coefficients, 1 otherwise); non-positive `eps_tail` selects
/// 1e−8.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DegenwaveSystemParams {
    /// Exponent of a(x) = x^p, p ≥ 0.
    pub a_exponent: f64,
    /// Amplitude of b(x) = c_b·x^q.
    pub b_amplitude: f64,
    /// Exponent of b(x) = c_b·x^q, q ≥ 0.
    pub b_exponent: f64,
    /// Memory-kernel decay rate k > 0.
    pub kernel_rate: f64,
    /// Thermal conductivity c > 0.
    pub conductivity: f64,
    /// Memory weight m in [0, 1].
    pub memory_weight: f64,
    /// Wave mesh grading exponent (≥ 1), or ≤ 0 for the default.
    pub wave_grading: f64,
    /// History truncation tail mass in (0, 1), or ≤ 0 for 1e−8.
    pub eps_tail: f64,
    /// Wave cells, ≥ 2.
    pub wave_cells: usize,
    /// Heat cells, ≥ 2.
    pub heat_cells: usize,
    /// History slices, ≥ 2.
    pub history_nodes: usize,
}

/// Coefficient-hypothesis verdict (see [`degenwave_check_hypotheses`]).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DegenwaveHypothesisVerdict {
    /// Degeneracy exponent K_a of a near x = 0.
    pub k_a: f64,
    /// First drift functional M₁.
    pub drift_m1: f64,
    /// Second drift functional M₂.
    pub drift_m2: f64,
    /// Classification of a.
    pub class: DegenwaveDegeneracyClass,
    /// Whether b/a is integrable near the degenerate endpoint.
    pub b_over_a_integrable: bool,
    /// The drift smallness condition M₁ < 1 + K_a/2, M₂ < 1 − K_a/2.
    pub condition1_holds: bool,
}

/// Fitted decay law (see [`degenwave_fit_decay`]).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DegenwaveDecayFit {
    /// Decay rate (exponential) or exponent magnitude (polynomial).
    pub rate: f64,
    /// Fitted amplitude at the window origin.
    pub amplitude: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    /// Number of samples inside the fit window.
    pub samples: usize,
}

/// Opaque discretized transmission system.
pub struct DegenwaveSystem {
    inner: GeneratorSystem,
}

/// Opaque simulation trace: sampled times, energies, and dissipations.
pub struct DegenwaveTrace {
    inner: SimulationTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> DegenwaveStatus {
    match err {
        Error::SingularSystem(_) | Error::NearSingular(_) | Error::NonPositiveEnergy(_) => {
            DegenwaveStatus::NumericalFailure
        }
        _ => DegenwaveStatus::InvalidArgument,
    }
}

fn fail(err: &Error) -> DegenwaveStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn invalid(message: &str) -> DegenwaveStatus {
    set_error(message);
    DegenwaveStatus::InvalidArgument
}

/// Run `f` with a panic guard so unwinding never crosses the ABI.
fn guarded(f: impl FnOnce() -> DegenwaveStatus) -> DegenwaveStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic; see stderr for details");
            DegenwaveStatus::Panic
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn degenwave_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on the calling thread. The pointer
/// stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn degenwave_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Fill `out` with the weakly degenerate default configuration
/// (a = x^0.5, b = 0.2·x^0.5, k = c = 1, m = ½, 64/64/64 mesh).
#[no_mangle]
pub unsafe extern "C" fn degenwave_system_params_default(
    out: *mut DegenwaveSystemParams,
) -> DegenwaveStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out params pointer is null");
        }
        unsafe {
            out.write(DegenwaveSystemParams {
                a_exponent: 0.5,
                b_amplitude: 0.2,
                b_exponent: 0.5,
                kernel_rate: 1.0,
                conductivity: 1.0,
                memory_weight: 0.5,
                wave_grading: 0.0,
                eps_tail: 0.0,
                wave_cells: 64,
                heat_cells: 64,
                history_nodes: 64,
            });
        }
        DegenwaveStatus::Ok
    })
}

/// Assemble a discretized system. On success `*out` owns the handle; release
/// it with [`degenwave_system_free`].
#[no_mangle]
pub unsafe extern "C" fn degenwave_system_new(
    params: *const DegenwaveSystemParams,
    out: *mut *mut DegenwaveSystem,
) -> DegenwaveStatus {
    guarded(|| {
        if params.is_null() {
            return invalid("params pointer is null");
        }
        if out.is_null() {
            return invalid("out handle pointer is null");
        }
        let p = unsafe { params.read() };
        if !(0.0..=1.0).contains(&p.memory_weight) || !p.memory_weight.is_finite() {
            return invalid("memory_weight must lie in [0, 1]");
        }
        let conductivity_valid = p.conductivity.is_finite() && p.conductivity > 0.0;
        if !conductivity_valid {
            return invalid("conductivity must be positive and finite");
        }
        let model = match CoefficientModel::power_law(p.a_exponent, p.b_amplitude, p.b_exponent) {
            Ok(m) => m,
            Err(e) => return fail(&e),
        };
        let kernel = match MemoryKernel::exponential(p.kernel_rate) {
            Ok(k) => k,
            Err(e) => return fail(&e),
        };
        let disc = DiscretizationParams {
            wave_cells: p.wave_cells,
            heat_cells: p.heat_cells,
            history_nodes: p.history_nodes,
            eps_tail: if p.eps_tail > 0.0 { p.eps_tail } else { 1e-8 },
            wave_grading: (p.wave_grading > 0.0).then_some(p.wave_grading),
        };
        let trans = TransmissionParams {
            conductivity: p.conductivity,
            memory_weight: p.memory_weight,
        };
        match GeneratorSystem::assemble(&model, &kernel, &disc, &trans) {
            Ok(inner) => {
                unsafe { out.write(Box::into_raw(Box::new(DegenwaveSystem { inner }))) };
                DegenwaveStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a system handle. `NULL` is ignored.
#[no_mangle]
pub unsafe extern "C" fn degenwave_system_free(system: *mut DegenwaveSystem) {
    if !system.is_null() {
        drop(unsafe { Box::from_raw(system) });
    }
}

/// Total number of unknowns, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn degenwave_system_dim(system: *const DegenwaveSystem) -> usize {
    if system.is_null() {
        return 0;
    }
    unsafe { &*system }.inner.dim()
}

/// Stability-scaled default time step, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn degenwave_system_default_dt(system: *const DegenwaveSystem) -> f64 {
    if system.is_null() {
        return 0.0;
    }
    unsafe { &*system }.inner.default_dt()
}

/// Energy ½‖U‖²_M of a state vector of length [`degenwave_system_dim`].
#[no_mangle]
pub unsafe extern "C" fn degenwave_system_energy(
    system: *const DegenwaveSystem,
    state: *const f64,
    len: usize,
    out_energy: *mut f64,
) -> DegenwaveStatus {
    guarded(|| {
        if system.is_null() || state.is_null() || out_energy.is_null() {
            return invalid("system, state, and out_energy must be non-null");
        }
        let sys = &unsafe { &*system }.inner;
        if len != sys.dim() {
            return invalid("state length does not match the system dimension");
        }
        let state = unsafe { std::slice::from_raw_parts(state, len) };
        unsafe { out_energy.write(sys.energy(state)) };
        DegenwaveStatus::Ok
    })
}

/// Validate the coefficient hypotheses for a power-law pair.
#[no_mangle]
pub unsafe extern "C" fn degenwave_check_hypotheses(
    a_exponent: f64,
    b_amplitude: f64,
    b_exponent: f64,
    out: *mut DegenwaveHypothesisVerdict,
) -> DegenwaveStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out verdict pointer is null");
        }
        let model = match CoefficientModel::power_law(a_exponent, b_amplitude, b_exponent) {
            Ok(m) => m,
            Err(e) => return fail(&e),
        };
        match check_hypotheses(&model) {
            Ok(report) => {
                let class = match report.coefficients.class {
                    DegeneracyClass::NonDegenerate => DegenwaveDegeneracyClass::NonDegenerate,
                    DegeneracyClass::WeaklyDegenerate => DegenwaveDegeneracyClass::WeaklyDegenerate,
                    DegeneracyClass::StronglyDegenerate => {
                        DegenwaveDegeneracyClass::StronglyDegenerate
                    }
                    DegeneracyClass::Unsupported => DegenwaveDegeneracyClass::Unsupported,
                };
                unsafe {
                    out.write(DegenwaveHypothesisVerdict {
                        k_a: report.coefficients.degeneracy,
                        drift_m1: report.coefficients.drift_m1,
                        drift_m2: report.coefficients.drift_m2,
                        class,
                        b_over_a_integrable: report.b_over_a_integrable,
                        condition1_holds: report.condition1_holds,
                    });
                }
                DegenwaveStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Integrate the semigroup by Crank–Nicolson. Non-positive `dt` selects the
/// system default. On success `*out` owns the trace handle; release it with
/// [`degenwave_trace_free`].
#[no_mangle]
pub unsafe extern "C" fn degenwave_simulate(
    system: *const DegenwaveSystem,
    preset: DegenwavePreset,
    dt: f64,
    t_final: f64,
    record_stride: usize,
    out: *mut *mut DegenwaveTrace,
) -> DegenwaveStatus {
    guarded(|| {
        if system.is_null() || out.is_null() {
            return invalid("system and out must be non-null");
        }
        let sys = &unsafe { &*system }.inner;
        let preset = match preset {
            DegenwavePreset::Zero => InitialPreset::Zero,
            DegenwavePreset::Pluck => InitialPreset::Pluck,
            DegenwavePreset::Thermal => InitialPreset::Thermal,
        };
        let params = EvolutionParams {
            dt: if dt > 0.0 { dt } else { sys.default_dt() },
            t_final,
            sample_stride: record_stride.max(1),
        };
        let initial = sys.project_initial_data(preset);
        match run_simulation(sys, &initial, &params) {
            Ok((trace, _)) => {
                unsafe { out.write(Box::into_raw(Box::new(DegenwaveTrace { inner: trace }))) };
                DegenwaveStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a trace handle. `NULL` is ignored.
#[no_mangle]
pub unsafe extern "C" fn degenwave_trace_free(trace: *mut DegenwaveTrace) {
    if !trace.is_null() {
        drop(unsafe { Box::from_raw(trace) });
    }
}

/// Number of recorded samples, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn degenwave_trace_len(trace: *const DegenwaveTrace) -> usize {
    if trace.is_null() {
        return 0;
    }
    unsafe { &*trace }.inner.times.len()
}

/// Sampled times; valid while the trace handle lives. `NULL` for a null
/// handle.
#[no_mangle]
pub unsafe extern "C" fn degenwave_trace_times(trace: *const DegenwaveTrace) -> *const f64 {
    if trace.is_null() {
        return std::ptr::null();
    }
    unsafe { &*trace }.inner.times.as_ptr()
}

/// Sampled energies E(tₙ); same lifetime as the handle.
#[no_mangle]
pub unsafe extern "C" fn degenwave_trace_energy(trace: *const DegenwaveTrace) -> *const f64 {
    if trace.is_null() {
        return std::ptr::null();
    }
    unsafe { &*trace }.inner.energy.as_ptr()
}

/// Sampled dissipation functionals D(tₙ); same lifetime as the handle.
#[no_mangle]
pub unsafe extern "C" fn degenwave_trace_dissipation(trace: *const DegenwaveTrace) -> *const f64 {
    if trace.is_null() {
        return std::ptr::null();
    }
    unsafe { &*trace }.inner.dissipation.as_ptr()
}

/// Dense spectral certificate: abscissa and distance of the spectrum to the
/// imaginary axis.
#[no_mangle]
pub unsafe extern "C" fn degenwave_spectral_abscissa(
    system: *const DegenwaveSystem,
    out_abscissa: *mut f64,
    out_axis_distance: *mut f64,
) -> DegenwaveStatus {
    guarded(|| {
        if system.is_null() || out_abscissa.is_null() || out_axis_distance.is_null() {
            return invalid("system and out pointers must be non-null");
        }
        match spectral_abscissa(&unsafe { &*system }.inner) {
            Ok(report) => {
                unsafe {
                    out_abscissa.write(report.abscissa);
                    out_axis_distance.write(report.axis_distance);
                }
                DegenwaveStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Resolvent norm ‖(iλ − A)⁻¹‖ in the energy norm.
#[no_mangle]
pub unsafe extern "C" fn degenwave_resolvent_norm(
    system: *const DegenwaveSystem,
    lambda: f64,
    out_norm: *mut f64,
) -> DegenwaveStatus {
    guarded(|| {
        if system.is_null() || out_norm.is_null() {
            return invalid("system and out_norm must be non-null");
        }
        match resolvent_norm(&unsafe { &*system }.inner, lambda) {
            Ok(norm) => {
                unsafe { out_norm.write(norm) };
                DegenwaveStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Fit the resolvent growth exponent over a log-spaced sweep of
/// λ ∈ [lambda_min, lambda_max]. With `refined` set, each grid point also
/// samples the nearest located resonance inside its grid cell.
#[no_mangle]
pub unsafe extern "C" fn degenwave_resolvent_growth(
    system: *const DegenwaveSystem,
    lambda_min: f64,
    lambda_max: f64,
    points: usize,
    refined: bool,
    out_exponent: *mut f64,
    out_r_squared: *mut f64,
) -> DegenwaveStatus {
    guarded(|| {
        if system.is_null() || out_exponent.is_null() || out_r_squared.is_null() {
            return invalid("system and out pointers must be non-null");
        }
        let sys = &unsafe { &*system }.inner;
        let growth = if refined {
            resolvent_growth_refined(sys, lambda_min, lambda_max, points)
        } else {
            resolvent_growth(sys, lambda_min, lambda_max, points)
        };
        match growth {
            Ok(g) => {
                unsafe {
                    out_exponent.write(g.exponent);
                    out_r_squared.write(g.r_squared);
                }
                DegenwaveStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Fit a decay law to (time, energy) samples over the window
/// [t_lo, t_hi].
#[no_mangle]
pub unsafe extern "C" fn degenwave_fit_decay(
    times: *const f64,
    energies: *const f64,
    len: usize,
    kind: DegenwaveDecayKind,
    t_lo: f64,
    t_hi: f64,
    out: *mut DegenwaveDecayFit,
) -> DegenwaveStatus {
    guarded(|| {
        if times.is_null() || energies.is_null() || out.is_null() {
            return invalid("times, energies, and out must be non-null");
        }
        let times = unsafe { std::slice::from_raw_parts(times, len) };
        let energies = unsafe { std::slice::from_raw_parts(energies, len) };
        let kind = match kind {
            DegenwaveDecayKind::Polynomial => DecayKind::Polynomial,
            DegenwaveDecayKind::Exponential => DecayKind::Exponential,
        };
        match fit_decay(times, energies, kind, t_lo, t_hi) {
            Ok(fit) => {
                unsafe {
                    out.write(DegenwaveDecayFit {
                        rate: fit.rate,
                        amplitude: fit.amplitude,
                        r_squared: fit.r_squared,
                        samples: fit.samples,
                    });
                }
                DegenwaveStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
