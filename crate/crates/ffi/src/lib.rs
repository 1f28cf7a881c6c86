//! C ABI for the eqbundle toolkit.
//!
//! Scenarios are loaded into opaque [`EqbScenario`] handles. Every fallible
//! call returns an [`EqbStatus`]; the message of the last failure on the
//! calling thread is available from [`eqb_last_error`]. Strings returned by
//! the library are owned by the caller and released with
//! [`eqb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eqbundle::cli::{self, Command, Flags};
use eqbundle::holonomy::equivariant_holonomy;
use eqbundle::report::Format;
use eqbundle::scenario::{bundled_text, Model};
use eqbundle::solvers::Verdict;
use eqbundle::Error;

/// Status codes. `EQB_STATUS_OK` is zero; everything else is a failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqbStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    Semantic = 4,
    InvalidInput = 5,
    Numerical = 6,
    Geometry = 7,
    Consistency = 8,
    CocycleViolation = 9,
    Solver = 10,
    Io = 11,
    Panic = 12,
}

/// Outcome of the obstruction pipeline.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqbVerdict {
    Cancels = 0,
    Obstructed = 2,
    Inconclusive = 3,
}

/// A parsed and validated scenario.
pub struct EqbScenario {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EqbStatus {
    match e {
        Error::Syntax { .. } => EqbStatus::Syntax,
        Error::Semantic { .. } => EqbStatus::Semantic,
        Error::InvalidInput(_) | Error::InvalidCharacter(_) => EqbStatus::InvalidInput,
        Error::Evaluation { .. } | Error::Domain { .. } | Error::Resolution { .. } | Error::Conditioning { .. } => {
            EqbStatus::Numerical
        }
        Error::Composition { .. } | Error::NotInCPhi { .. } => EqbStatus::Geometry,
        Error::Consistency(_) | Error::NotFlat { .. } | Error::LocalityDeclaration(_) => EqbStatus::Consistency,
        Error::CocycleViolation { .. } => EqbStatus::CocycleViolation,
        Error::Precondition(_) | Error::AssumptionViolation(_) => EqbStatus::Solver,
        Error::Stage { source, .. } => status_of(source),
        Error::Io(_) => EqbStatus::Io,
    }
}

fn fail(e: Error) -> EqbStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn guarded(f: impl FnOnce() -> EqbStatus) -> EqbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            EqbStatus::Panic
        }
    }
}

/// # Safety
/// `s` is null or a valid NUL-terminated string.
unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, EqbStatus> {
    if s.is_null() {
        set_error("null argument");
        return Err(EqbStatus::NullArgument);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        EqbStatus::InvalidUtf8
    })
}

/// # Safety
/// `s` is null or a valid NUL-terminated string.
unsafe fn optional_text<'a>(s: *const c_char) -> Result<Option<&'a str>, EqbStatus> {
    if s.is_null() {
        Ok(None)
    } else {
        text(s).map(Some)
    }
}

fn store_handle(model: Model, out: *mut *mut EqbScenario) -> EqbStatus {
    let h = Box::into_raw(Box::new(EqbScenario { model }));
    // SAFETY: callers check `out` for null before building the model.
    unsafe { *out = h };
    EqbStatus::Ok
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn eqb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eqb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses scenario text and builds the bundle.
///
/// # Safety
/// `source` is a NUL-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn eqb_scenario_load(source: *const c_char, out: *mut *mut EqbScenario) -> EqbStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return EqbStatus::NullArgument;
        }
        let src = match text(source) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match Model::load(src) {
            Ok(m) => store_handle(m, out),
            Err(e) => fail(e),
        }
    })
}

/// Loads one of the scenarios shipped with the library by name.
///
/// # Safety
/// `name` is a NUL-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn eqb_scenario_load_bundled(name: *const c_char, out: *mut *mut EqbScenario) -> EqbStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return EqbStatus::NullArgument;
        }
        let n = match text(name) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let Some(src) = bundled_text(n) else {
            return fail(Error::InvalidInput(format!("no bundled scenario `{n}`")));
        };
        match Model::load(src) {
            Ok(m) => store_handle(m, out),
            Err(e) => fail(e),
        }
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `scenario` is NULL or a handle from a load call, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eqb_scenario_free(scenario: *mut EqbScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Dimension of the parameter space.
///
/// # Safety
/// `scenario` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqb_scenario_dimension(scenario: *const EqbScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.model.bundle.dimension())
}

/// Equivariant holonomy of `word` along a named path (`unit` or a path
/// from the scenario), in `section` (NULL for the reference section).
///
/// # Safety
/// Pointers are live; strings are NUL-terminated; `out_value` is writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_holonomy(
    scenario: *const EqbScenario,
    word: *const c_char,
    path: *const c_char,
    section: *const c_char,
    out_value: *mut f64,
) -> EqbStatus {
    guarded(|| {
        let (Some(s), false) = (scenario.as_ref(), out_value.is_null()) else {
            set_error("null argument");
            return EqbStatus::NullArgument;
        };
        let (w, p, sec) = match (text(word), text(path), optional_text(section)) {
            (Ok(w), Ok(p), Ok(sec)) => (w, p, sec),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return e,
        };
        let m = &s.model;
        let r = m.parse_word(w).and_then(|word| {
            let gamma = m.path(p, &word)?;
            let section = m.section(sec)?;
            equivariant_holonomy(&m.bundle, &m.connection, &section, &word, &gamma, p)
        });
        match r {
            Ok(h) => {
                *out_value = h.value.value();
                EqbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Largest cocycle-law residual over words up to `word_length` at `probes`
/// seeded points.
///
/// # Safety
/// `scenario` is a live handle; `out_residual` is writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_check_cocycle(
    scenario: *const EqbScenario,
    word_length: usize,
    probes: usize,
    seed: u64,
    out_residual: *mut f64,
) -> EqbStatus {
    guarded(|| {
        let (Some(s), false) = (scenario.as_ref(), out_residual.is_null()) else {
            set_error("null argument");
            return EqbStatus::NullArgument;
        };
        match s.model.bundle.check_cocycle(word_length, probes, seed) {
            Ok(r) => {
                *out_residual = r.max_residual;
                EqbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Runs the obstruction pipeline (`local` selects the lattice pipeline).
///
/// # Safety
/// `scenario` is a live handle; `out_verdict` is writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_scenario_verdict(
    scenario: *const EqbScenario,
    local: bool,
    seed: u64,
    out_verdict: *mut EqbVerdict,
) -> EqbStatus {
    guarded(|| {
        let (Some(s), false) = (scenario.as_ref(), out_verdict.is_null()) else {
            set_error("null argument");
            return EqbStatus::NullArgument;
        };
        let mut config = s.model.config.clone();
        config.seed = seed;
        let r = if local {
            s.model.verdict_local(&config)
        } else {
            s.model.verdict(&config)
        };
        match r {
            Ok(v) => {
                *out_verdict = match v.verdict {
                    Verdict::Cancels => EqbVerdict::Cancels,
                    Verdict::Obstructed => EqbVerdict::Obstructed,
                    Verdict::Inconclusive => EqbVerdict::Inconclusive,
                };
                EqbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Runs a CLI command (`check-cocycle`, `anomaly`, `curvature`, `verdict`,
/// `verdict-local`, `selftest`) and returns the JSON report.
///
/// `scenario` is a file path or bundled name (may be NULL for `selftest`).
/// The report is written to `out_json` (free with [`eqb_string_free`]) and
/// the CLI exit code to `out_exit`. Command-level failures are reported
/// inside the JSON with exit code 1, not as a status.
///
/// # Safety
/// Strings are NUL-terminated or NULL where allowed; outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn eqb_run(
    command: *const c_char,
    scenario: *const c_char,
    seed: u64,
    out_json: *mut *mut c_char,
    out_exit: *mut i32,
) -> EqbStatus {
    guarded(|| {
        if out_json.is_null() || out_exit.is_null() {
            set_error("null output pointer");
            return EqbStatus::NullArgument;
        }
        let (c, sc) = match (text(command), optional_text(scenario)) {
            (Ok(c), Ok(s)) => (c, s),
            (Err(e), _) | (_, Err(e)) => return e,
        };
        let cmd = match c {
            "check-cocycle" => Command::CheckCocycle,
            "anomaly" => Command::Anomaly { section: None },
            "curvature" => Command::Curvature { section: None },
            "verdict" => Command::Verdict { local: false },
            "verdict-local" => Command::Verdict { local: true },
            "selftest" => Command::Selftest,
            other => return fail(Error::InvalidInput(format!("unknown command `{other}`"))),
        };
        let flags = Flags {
            seed: Some(seed),
            ..Flags::default()
        };
        let report = cli::run(&cmd, sc, &flags);
        match CString::new(report.render(Format::JsonLike)) {
            Ok(s) => {
                *out_json = s.into_raw();
                *out_exit = report.exit_code;
                EqbStatus::Ok
            }
            Err(_) => fail(Error::InvalidInput("report contains a NUL byte".into())),
        }
    })
}

/// Releases a string returned by the library. NULL is ignored.
///
/// # Safety
/// `s` is NULL or a string from [`eqb_run`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eqb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
