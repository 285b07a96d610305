use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use boltzmann_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(boltzmann_last_error()) }.to_string_lossy().into_owned()
}

fn grid(n: usize, l: f64) -> *mut BoltzmannGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { boltzmann_grid_new(n, l, &mut g) }, BOLTZMANN_OK);
    g
}

#[test]
fn grid_lifecycle_and_nodes() {
    let g = grid(8, 4.0);
    unsafe {
        assert_eq!(boltzmann_grid_len(g), 512);
        let mut nodes = [0.0; 8];
        assert_eq!(boltzmann_grid_nodes(g, nodes.as_mut_ptr(), 8), BOLTZMANN_OK);
        assert_eq!(nodes[0], -4.0);
        assert_eq!(nodes[4], 0.0);
        assert_eq!(boltzmann_grid_nodes(g, nodes.as_mut_ptr(), 7), BOLTZMANN_ERR_INVALID_INPUT);
        boltzmann_grid_free(g);
        boltzmann_grid_free(ptr::null_mut());
    }
}

#[test]
fn invalid_grid_reports_category_and_message() {
    let mut g = ptr::null_mut();
    let status = unsafe { boltzmann_grid_new(7, 4.0, &mut g) };
    assert_eq!(status, BOLTZMANN_ERR_INVALID_INPUT);
    assert!(g.is_null());
    assert!(last_error().contains("even"), "{}", last_error());
}

#[test]
fn null_arguments_rejected() {
    unsafe {
        assert_eq!(boltzmann_grid_new(8, 4.0, ptr::null_mut()), BOLTZMANN_ERR_NULL);
        let mut m = BoltzmannMoments::default();
        assert_eq!(boltzmann_moments(ptr::null(), ptr::null(), 0, &mut m), BOLTZMANN_ERR_NULL);
        assert_eq!(boltzmann_simulation_run(ptr::null_mut()), BOLTZMANN_ERR_NULL);
        assert_eq!(boltzmann_grid_len(ptr::null()), 0);
    }
}

#[test]
fn collide_conserves_moments_through_the_abi() {
    let g = grid(8, 4.0);
    unsafe {
        let mut f = vec![0.0; 512];
        let v = [0.5, 0.0, 0.0];
        assert_eq!(boltzmann_maxwellian(g, 1.0, v.as_ptr(), 0.7, f.as_mut_ptr(), 512), BOLTZMANN_OK);
        // A second, shifted bump so the collision term is not trivially small.
        let mut f2 = vec![0.0; 512];
        let w = [-1.0, 0.0, 0.0];
        assert_eq!(boltzmann_maxwellian(g, 0.5, w.as_ptr(), 0.4, f2.as_mut_ptr(), 512), BOLTZMANN_OK);
        for (a, b) in f.iter_mut().zip(&f2) {
            *a += b;
        }
        let mut op = ptr::null_mut();
        assert_eq!(boltzmann_operator_new(g, 1.0, &mut op), BOLTZMANN_OK);
        let mut q = vec![0.0; 512];
        assert_eq!(boltzmann_operator_collide(op, f.as_ptr(), 1.0, q.as_mut_ptr(), 512), BOLTZMANN_OK);
        let mut m = BoltzmannMoments::default();
        assert_eq!(boltzmann_moments(g, q.as_ptr(), 512, &mut m), BOLTZMANN_OK);
        let scale = q.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(scale > 1e-3);
        assert!(m.rho.abs() < 1e-12 && m.energy.abs() < 1e-12, "{m:?}");
        assert_eq!(
            boltzmann_operator_collide(op, f.as_ptr(), 0.0, q.as_mut_ptr(), 512),
            BOLTZMANN_ERR_INVALID_INPUT
        );
        boltzmann_operator_free(op);
        boltzmann_grid_free(g);
    }
}

#[test]
fn operator_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("w.bin").to_str().unwrap()).unwrap();
    let g = grid(6, 3.0);
    unsafe {
        let mut op = ptr::null_mut();
        assert_eq!(boltzmann_operator_new(g, 0.0, &mut op), BOLTZMANN_OK);
        assert_eq!(boltzmann_operator_save(op, path.as_ptr()), BOLTZMANN_OK);
        let mut loaded = ptr::null_mut();
        assert_eq!(boltzmann_operator_load(g, 0.0, path.as_ptr(), &mut loaded), BOLTZMANN_OK);
        let mut wrong = ptr::null_mut();
        assert_eq!(boltzmann_operator_load(g, 1.0, path.as_ptr(), &mut wrong), BOLTZMANN_ERR_WEIGHT_CACHE);
        boltzmann_operator_free(loaded);
        boltzmann_operator_free(op);
        boltzmann_grid_free(g);
    }
}

#[test]
fn simulation_runs_and_reports() {
    let text = CString::new("N=6\nL=4\nlambda=1\nscenario=sudden_heating\ndomain_length=3\nend_time=0.2\noutput_interval=2").unwrap();
    unsafe {
        let mut sim = ptr::null_mut();
        assert_eq!(boltzmann_simulation_new(text.as_ptr(), &mut sim), BOLTZMANN_OK);
        let mut rows = vec![BoltzmannMomentRow::default(); 4];
        let mut written = 0usize;
        assert_eq!(
            boltzmann_simulation_moments(sim, rows.as_mut_ptr(), rows.len(), &mut written),
            BOLTZMANN_ERR_STATE
        );
        assert_eq!(boltzmann_simulation_run(sim), BOLTZMANN_OK);
        let count = boltzmann_simulation_moment_count(sim);
        assert!(count > 0);
        rows.resize(count, BoltzmannMomentRow::default());
        assert_eq!(boltzmann_simulation_moments(sim, rows.as_mut_ptr(), count, &mut written), BOLTZMANN_OK);
        assert_eq!(written, count);
        assert_eq!(rows[0].t, 0.0);
        assert!(rows[0].rho > 0.9);
        let mut residual = f64::NAN;
        assert_eq!(boltzmann_simulation_mass_residual(sim, &mut residual), BOLTZMANN_OK);
        assert!(residual < 1e-12);
        let dir = tempfile::tempdir().unwrap();
        let out = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(boltzmann_simulation_write(sim, out.as_ptr()), BOLTZMANN_OK);
        assert!(dir.path().join("moments.csv").exists());
        boltzmann_simulation_free(sim);
    }
}

#[test]
fn bad_config_is_a_config_error() {
    let text = CString::new("N=6\nscenario=relaxation").unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { boltzmann_simulation_new(text.as_ptr(), &mut sim) }, BOLTZMANN_ERR_CONFIG);
    assert!(last_error().contains("lambda"), "{}", last_error());
}

#[test]
fn version_is_nonempty() {
    let v = unsafe { CStr::from_ptr(boltzmann_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = root.join("include/boltzmann.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in ["boltzmann_grid_new", "boltzmann_operator_collide", "boltzmann_simulation_run", "BOLTZMANN_ERR_PANIC"] {
        assert!(text.contains(symbol), "{symbol} missing from header");
    }
    let out = tempfile::tempdir().unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-c"])
        .arg("-I")
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg("-o")
        .arg(out.path().join("smoke.o"))
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
}
