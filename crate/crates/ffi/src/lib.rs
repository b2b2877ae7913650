//! C interface to the planner.
//!
//! Every function returns a [`RollerStatus`]. On failure a message is kept
//! per thread and can be read with [`roller_last_error`]. Handles are created
//! by `*_new`/`*_load` functions and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::time::Duration;

use roller::grounding::{ground_task, GroundTask};
use roller::pddl;
use roller::policy::DckBundle;
use roller::search::{self, Algorithm, DckSource, SearchConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RollerStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Io = 4,
    InvalidArgument = 5,
    NoPlan = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RollerAlgorithm {
    DfPolicy = 0,
    LookaheadBfs = 1,
    LookaheadBfsHa = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RollerDckSource {
    Trees = 0,
    FfOrder = 1,
    None = 2,
}

/// Grounded planning task.
pub struct RollerTask {
    task: GroundTask,
}

/// Learned trees; may be empty.
pub struct RollerDck {
    bundle: DckBundle,
}

/// Search outcome: plan in IPC syntax plus counters.
pub struct RollerPlan {
    actions: Vec<CString>,
    evaluated: u64,
    expanded: u64,
    seconds: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

type Res<T> = Result<T, (RollerStatus, String)>;

fn guard(f: impl FnOnce() -> Res<()>) -> RollerStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RollerStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            RollerStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err((RollerStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RollerStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn check_out<T>(out: *mut *mut T) -> Res<()> {
    if out.is_null() {
        Err((RollerStatus::NullArgument, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn roller_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses and grounds a domain and problem given as PDDL text.
///
/// # Safety
/// `domain` and `problem` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roller_task_new(
    domain: *const c_char,
    problem: *const c_char,
    out: *mut *mut RollerTask,
) -> RollerStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let d = pddl::parse_domain(text(domain, "domain")?).map_err(|e| (RollerStatus::Parse, e.diagnostic("domain")))?;
        let p = pddl::parse_problem(text(problem, "problem")?, &d)
            .map_err(|e| (RollerStatus::Parse, e.diagnostic("problem")))?;
        *out = Box::into_raw(Box::new(RollerTask {
            task: ground_task(&d, &p),
        }));
        Ok(())
    })
}

/// # Safety
/// `task` must come from [`roller_task_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn roller_task_free(task: *mut RollerTask) {
    if !task.is_null() {
        drop(Box::from_raw(task));
    }
}

/// Number of ground actions, 0 for a null handle.
///
/// # Safety
/// `task` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn roller_task_num_actions(task: *const RollerTask) -> usize {
    task.as_ref().map_or(0, |t| t.task.actions.len())
}

/// Number of ground facts, 0 for a null handle.
///
/// # Safety
/// `task` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn roller_task_num_facts(task: *const RollerTask) -> usize {
    task.as_ref().map_or(0, |t| t.task.num_facts())
}

/// A bundle with no trees.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roller_dck_empty(out: *mut *mut RollerDck) -> RollerStatus {
    guard(|| {
        check_out(out)?;
        *out = Box::into_raw(Box::new(RollerDck {
            bundle: DckBundle::default(),
        }));
        Ok(())
    })
}

/// Loads `<domain>-ops.tree` and `<domain>-<op>.tree` files from `dir`, using
/// the domain name and operators of `task`.
///
/// # Safety
/// `task` must be a live handle, `dir` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn roller_dck_load(
    task: *const RollerTask,
    dir: *const c_char,
    out: *mut *mut RollerDck,
) -> RollerStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let t = task
            .as_ref()
            .ok_or((RollerStatus::NullArgument, "task is null".to_string()))?;
        let dir = text(dir, "dir")?;
        let bundle = DckBundle::load_dir(Path::new(dir), &t.task.domain_name, &t.task.operator_names).map_err(|e| {
            let s = match e {
                roller::policy::DckError::Io { .. } => RollerStatus::Io,
                _ => RollerStatus::Parse,
            };
            (s, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(RollerDck { bundle }));
        Ok(())
    })
}

/// Whether the bundle has no operator tree; true for null.
///
/// # Safety
/// `dck` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn roller_dck_is_empty(dck: *const RollerDck) -> bool {
    dck.as_ref().map_or(true, |d| d.bundle.is_empty())
}

/// # Safety
/// `dck` must come from a `roller_dck_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn roller_dck_free(dck: *mut RollerDck) {
    if !dck.is_null() {
        drop(Box::from_raw(dck));
    }
}

/// Runs one search. `dck` may be null for no trees. A non-positive
/// `time_bound` means unbounded. Returns [`RollerStatus::NoPlan`] and leaves
/// `*out` null when no plan is found.
///
/// # Safety
/// `task` must be a live handle, `dck` live or null, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn roller_plan(
    task: *const RollerTask,
    dck: *const RollerDck,
    algorithm: RollerAlgorithm,
    source: RollerDckSource,
    horizon: u32,
    time_bound: f64,
    out: *mut *mut RollerPlan,
) -> RollerStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let t = task
            .as_ref()
            .ok_or((RollerStatus::NullArgument, "task is null".to_string()))?;
        if time_bound.is_nan() {
            return Err((RollerStatus::InvalidArgument, "time bound is NaN".into()));
        }
        let empty = DckBundle::default();
        let bundle = dck.as_ref().map_or(&empty, |d| &d.bundle);
        let cfg = SearchConfig {
            algorithm: match algorithm {
                RollerAlgorithm::DfPolicy => Algorithm::DfPolicy,
                RollerAlgorithm::LookaheadBfs => Algorithm::LookaheadBfs,
                RollerAlgorithm::LookaheadBfsHa => Algorithm::LookaheadBfsHa,
            },
            dck_source: match source {
                RollerDckSource::Trees => DckSource::Trees,
                RollerDckSource::FfOrder => DckSource::FfOrder,
                RollerDckSource::None => DckSource::None,
            },
            horizon,
            time_bound: (time_bound > 0.0).then(|| Duration::from_secs_f64(time_bound)),
            ..SearchConfig::default()
        };
        let r = search::search(&t.task, bundle, &cfg);
        let Some(plan) = &r.plan else {
            return Err((RollerStatus::NoPlan, "no plan found".into()));
        };
        *out = Box::into_raw(Box::new(RollerPlan {
            actions: plan
                .iter()
                .map(|&a| CString::new(t.task.action(a).ipc_name()).expect("names have no NUL"))
                .collect(),
            evaluated: r.stats.evaluated,
            expanded: r.stats.expanded,
            seconds: r.stats.time.as_secs_f64(),
        }));
        Ok(())
    })
}

/// Plan length, 0 for null.
///
/// # Safety
/// `plan` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn roller_plan_len(plan: *const RollerPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.actions.len())
}

/// The `i`-th action as `(name arg ...)`, or null when out of range. The
/// string lives as long as the plan.
///
/// # Safety
/// `plan` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn roller_plan_action(plan: *const RollerPlan, i: usize) -> *const c_char {
    plan.as_ref()
        .and_then(|p| p.actions.get(i))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Heuristic evaluations spent by the search.
///
/// # Safety
/// `plan` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn roller_plan_evaluations(plan: *const RollerPlan) -> u64 {
    plan.as_ref().map_or(0, |p| p.evaluated)
}

/// Nodes expanded by the search.
///
/// # Safety
/// `plan` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn roller_plan_expanded(plan: *const RollerPlan) -> u64 {
    plan.as_ref().map_or(0, |p| p.expanded)
}

/// Wall time of the search in seconds.
///
/// # Safety
/// `plan` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn roller_plan_seconds(plan: *const RollerPlan) -> f64 {
    plan.as_ref().map_or(0.0, |p| p.seconds)
}

/// # Safety
/// `plan` must come from [`roller_plan`] or be null.
#[no_mangle]
pub unsafe extern "C" fn roller_plan_free(plan: *mut RollerPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}
