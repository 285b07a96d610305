//! C interface to the solver.
//!
//! Objects are opaque heap handles created by `*_new` and released by the
//! matching `*_free`. Every fallible call returns a status code; on failure the
//! message is available from [`boltzmann_last_error`] on the same thread.
//! Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use boltzmann_core::collision::{CollisionOperator, CollisionWorkspace};
use boltzmann_core::config::parse_config;
use boltzmann_core::moments::compute_moments;
use boltzmann_core::run::{RunRecord, Simulation};
use boltzmann_core::scenarios::maxwellian;
use boltzmann_core::weights::{generate_table, load_table, save_table, KernelSpec, DEFAULT_QUADRATURE_NODES};
use boltzmann_core::{Error, VelocityGrid};

pub const BOLTZMANN_OK: i32 = 0;
/// A required pointer was null or a string was not UTF-8.
pub const BOLTZMANN_ERR_NULL: i32 = 1;
pub const BOLTZMANN_ERR_CONFIG: i32 = 2;
pub const BOLTZMANN_ERR_IO: i32 = 3;
pub const BOLTZMANN_ERR_WEIGHT_CACHE: i32 = 4;
pub const BOLTZMANN_ERR_NUMERICAL: i32 = 5;
pub const BOLTZMANN_ERR_COMMUNICATION: i32 = 6;
pub const BOLTZMANN_ERR_INVALID_INPUT: i32 = 7;
/// The call needs state that is not there yet, such as results before a run.
pub const BOLTZMANN_ERR_STATE: i32 = 8;
pub const BOLTZMANN_ERR_PANIC: i32 = 9;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.category().code(), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(BOLTZMANN_ERR_NULL, format!("{what} is null"))
}

/// Runs `body`, mapping errors and panics to status codes.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => BOLTZMANN_OK,
        Ok(Err(Failure(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            BOLTZMANN_ERR_PANIC
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(BOLTZMANN_ERR_NULL, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut_arg<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(found: usize, expected: usize) -> Result<(), Failure> {
    if found != expected {
        return Err(Error::ShapeMismatch { expected, found }.into());
    }
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn boltzmann_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn boltzmann_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Velocity lattice of `n^3` nodes on `[-half_width, half_width)^3`.
pub struct BoltzmannGrid {
    grid: VelocityGrid,
}

/// Macroscopic moments of one distribution.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoltzmannMoments {
    pub rho: f64,
    pub velocity: [f64; 3],
    pub temperature: f64,
    pub energy: f64,
    /// `sum f log f` over positive nodes.
    pub h: f64,
}

#[no_mangle]
pub unsafe extern "C" fn boltzmann_grid_new(n: usize, half_width: f64, out: *mut *mut BoltzmannGrid) -> i32 {
    guard(|| {
        let grid = VelocityGrid::new(n, half_width)?;
        put(out, BoltzmannGrid { grid })
    })
}

#[no_mangle]
pub unsafe extern "C" fn boltzmann_grid_free(grid: *mut BoltzmannGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of lattice nodes, `n^3`; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_grid_len(grid: *const BoltzmannGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.grid.len())
}

/// Writes the `n` one-dimensional node values into `out`.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_grid_nodes(grid: *const BoltzmannGrid, out: *mut f64, len: usize) -> i32 {
    guard(|| {
        let g = &grid.as_ref().ok_or_else(|| null("grid"))?.grid;
        check_len(len, g.n())?;
        slice_mut_arg(out, len, "out")?.copy_from_slice(g.nodes());
        Ok(())
    })
}

/// Samples `rho / (2 pi T)^{3/2} exp(-|v - V|^2 / (2T))` on the lattice.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_maxwellian(
    grid: *const BoltzmannGrid,
    rho: f64,
    velocity: *const f64,
    temperature: f64,
    out: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let g = &grid.as_ref().ok_or_else(|| null("grid"))?.grid;
        let v = slice_arg(velocity, 3, "velocity")?;
        check_len(len, g.len())?;
        let f = maxwellian(g, rho, [v[0], v[1], v[2]], temperature)?;
        slice_mut_arg(out, len, "out")?.copy_from_slice(&f);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn boltzmann_moments(
    grid: *const BoltzmannGrid,
    f: *const f64,
    len: usize,
    out: *mut BoltzmannMoments,
) -> i32 {
    guard(|| {
        let g = &grid.as_ref().ok_or_else(|| null("grid"))?.grid;
        check_len(len, g.len())?;
        let m = compute_moments(g, slice_arg(f, len, "f")?);
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = BoltzmannMoments {
            rho: m.rho,
            velocity: m.velocity,
            temperature: m.temperature,
            energy: m.energy,
            h: m.h,
        };
        Ok(())
    })
}

/// Conservative collision operator with its weight table and scratch space.
pub struct BoltzmannOperator {
    operator: CollisionOperator,
    workspace: CollisionWorkspace,
}

fn new_operator(grid: &VelocityGrid, table: boltzmann_core::weights::WeightTable) -> Result<BoltzmannOperator, Failure> {
    let operator = CollisionOperator::new(grid.clone(), Arc::new(table))?;
    let workspace = operator.workspace();
    Ok(BoltzmannOperator { operator, workspace })
}

/// Builds the operator for kernel exponent `lambda`, generating weights.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_operator_new(
    grid: *const BoltzmannGrid,
    lambda: f64,
    out: *mut *mut BoltzmannOperator,
) -> i32 {
    guard(|| {
        let g = &grid.as_ref().ok_or_else(|| null("grid"))?.grid;
        let kernel = KernelSpec::for_grid(lambda, g)?;
        let op = new_operator(g, generate_table(g, &kernel)?)?;
        put(out, op)
    })
}

/// Builds the operator from a weight cache file written for the same grid and kernel.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_operator_load(
    grid: *const BoltzmannGrid,
    lambda: f64,
    path: *const c_char,
    out: *mut *mut BoltzmannOperator,
) -> i32 {
    guard(|| {
        let g = &grid.as_ref().ok_or_else(|| null("grid"))?.grid;
        let path = str_arg(path, "path")?;
        let kernel = KernelSpec::for_grid(lambda, g)?;
        let table = load_table(Path::new(path), g, &kernel, DEFAULT_QUADRATURE_NODES)?;
        put(out, new_operator(g, table)?)
    })
}

/// Writes the operator's weight table to `path`.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_operator_save(op: *const BoltzmannOperator, path: *const c_char) -> i32 {
    guard(|| {
        let op = op.as_ref().ok_or_else(|| null("operator"))?;
        let path = str_arg(path, "path")?;
        save_table(op.operator.table(), Path::new(path))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn boltzmann_operator_free(op: *mut BoltzmannOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// `out = (1 / epsilon) * conservative collision term of f`.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_operator_collide(
    op: *mut BoltzmannOperator,
    f: *const f64,
    epsilon: f64,
    out: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let op = op.as_mut().ok_or_else(|| null("operator"))?;
        check_len(len, op.operator.grid().len())?;
        let f = slice_arg(f, len, "f")?;
        let out = slice_mut_arg(out, len, "out")?;
        op.operator.collide_into(&mut op.workspace, f, epsilon, out)?;
        Ok(())
    })
}

/// A configured run and, after [`boltzmann_simulation_run`], its record.
pub struct BoltzmannSimulation {
    simulation: Simulation,
    record: Option<RunRecord>,
}

/// One row of the moment table.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoltzmannMomentRow {
    pub t: f64,
    pub x_center: f64,
    pub dx: f64,
    pub rho: f64,
    pub v1: f64,
    pub temperature: f64,
    pub h: f64,
}

/// Parses config text (`key = value` lines) and prepares the weights.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_simulation_new(
    config_text: *const c_char,
    out: *mut *mut BoltzmannSimulation,
) -> i32 {
    guard(|| {
        let config = parse_config(str_arg(config_text, "config_text")?)?;
        let simulation = Simulation::new(config)?;
        put(out, BoltzmannSimulation { simulation, record: None })
    })
}

#[no_mangle]
pub unsafe extern "C" fn boltzmann_simulation_free(sim: *mut BoltzmannSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Runs to the configured end time, replacing any earlier record.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_simulation_run(sim: *mut BoltzmannSimulation) -> i32 {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("simulation"))?;
        sim.record = sim.simulation.run()?;
        Ok(())
    })
}

unsafe fn record<'a>(sim: *const BoltzmannSimulation) -> Result<&'a RunRecord, Failure> {
    let sim = sim.as_ref().ok_or_else(|| null("simulation"))?;
    sim.record
        .as_ref()
        .ok_or_else(|| Failure(BOLTZMANN_ERR_STATE, "simulation has not been run".into()))
}

/// Number of moment rows in the record; 0 before a run.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_simulation_moment_count(sim: *const BoltzmannSimulation) -> usize {
    record(sim).map_or(0, |r| r.moments.len())
}

/// Copies up to `capacity` moment rows into `out` and stores the count copied.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_simulation_moments(
    sim: *const BoltzmannSimulation,
    out: *mut BoltzmannMomentRow,
    capacity: usize,
    written: *mut usize,
) -> i32 {
    guard(|| {
        let rec = record(sim)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = rec.moments.len().min(capacity);
        let out = std::slice::from_raw_parts_mut(out, n);
        for (slot, r) in out.iter_mut().zip(&rec.moments) {
            *slot = BoltzmannMomentRow {
                t: r.t,
                x_center: r.x_center,
                dx: r.dx,
                rho: r.rho,
                v1: r.v1,
                temperature: r.temperature,
                h: r.h,
            };
        }
        if let Some(w) = written.as_mut() {
            *w = n;
        }
        Ok(())
    })
}

/// Largest relative mass-balance residual over the recorded output times.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_simulation_mass_residual(sim: *const BoltzmannSimulation, out: *mut f64) -> i32 {
    guard(|| {
        let rec = record(sim)?;
        *out.as_mut().ok_or_else(|| null("out"))? = rec.max_mass_residual();
        Ok(())
    })
}

/// Writes the CSV tables and run summary into directory `dir`.
#[no_mangle]
pub unsafe extern "C" fn boltzmann_simulation_write(sim: *const BoltzmannSimulation, dir: *const c_char) -> i32 {
    guard(|| {
        let rec = record(sim)?;
        rec.write(Path::new(str_arg(dir, "dir")?))?;
        Ok(())
    })
}
