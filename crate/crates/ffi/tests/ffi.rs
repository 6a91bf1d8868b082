use std::ffi::{CStr, CString};
use std::ptr;

use shift_periodic::cli::problem_file::{COUPLED_EXAMPLE, PAPER_EXAMPLE};
use shift_periodic_ffi::*;

fn load_toml(text: &str) -> (SpStatus, *mut SpProblem) {
    let c = CString::new(text).unwrap();
    let mut h = ptr::null_mut();
    let s = unsafe { sp_problem_load_toml(c.as_ptr(), &mut h) };
    (s, h)
}

fn last_error() -> String {
    let p = sp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn paper_example_round_trip() {
    let (s, h) = load_toml(PAPER_EXAMPLE);
    assert_eq!(s, SpStatus::Ok);
    unsafe {
        assert_eq!(sp_problem_dimension(h), 2);
        let mut m = [0.0; 4];
        assert_eq!(sp_problem_monodromy(h, m.as_mut_ptr(), 4), SpStatus::Ok);
        assert_eq!(m, [2.0, 0.0, 0.0, 2.0]);

        let mut rep = SpConditionReport::default();
        assert_eq!(sp_problem_check(h, &mut rep), SpStatus::Ok);
        assert_eq!(rep.r, 1.0);
        assert_eq!(rep.contraction_constant, 0.375);
        assert!(rep.contraction_ok && rep.noncritical);

        let n = sp_problem_window_len(h) * 2;
        let mut x = vec![1.0; n];
        let mut info = SpSolveInfo::default();
        assert_eq!(sp_problem_solve(h, 0.0, 0, x.as_mut_ptr(), n, &mut info), SpStatus::Ok);
        assert!(x.iter().all(|v| *v == 0.0));
        assert_eq!(info.iterations, 1);
        assert!(info.differential_residual <= 1e-10);
        sp_problem_free(h);
    }
}

#[test]
fn bundled_names_load() {
    let name = CString::new("coupled").unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(sp_problem_load_path(name.as_ptr(), &mut h), SpStatus::Ok);
        let n = sp_problem_window_len(h) * sp_problem_dimension(h);
        let mut x = vec![0.0; n];
        let mut info = SpSolveInfo::default();
        assert_eq!(sp_problem_solve(h, 1e-12, 10_000, x.as_mut_ptr(), n, &mut info), SpStatus::Ok);
        assert!(info.ratios_within_bound);
        assert!(info.integral_residual <= 1e-10);
        sp_problem_free(h);
    }
    let (s, h) = load_toml(COUPLED_EXAMPLE);
    assert_eq!(s, SpStatus::Ok);
    unsafe { sp_problem_free(h) };
}

#[test]
fn errors_map_to_cli_codes() {
    let (s, h) = load_toml("dimension = 1\nfunction_period = 2\ndelay = 0\nA = [[\"-2 *\"]]\nQ = [\"0\"]\nG = [\"1\"]\n[timescale]\nkind = \"integers\"\n");
    assert_eq!(s, SpStatus::Parse);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    let (s, _) = load_toml(&PAPER_EXAMPLE.replacen("delay = 2", "delay = 3", 1));
    assert_eq!(s, SpStatus::Invariant);

    let (s, h) = load_toml("dimension = 1\nfunction_period = 2\ndelay = 0\nA = [[\"-2\"]]\nQ = [\"0\"]\nG = [\"1\"]\n[timescale]\nkind = \"integers\"\n");
    assert_eq!(s, SpStatus::Ok);
    let mut rep = SpConditionReport::default();
    assert_eq!(unsafe { sp_problem_check(h, &mut rep) }, SpStatus::Critical);
    unsafe { sp_problem_free(h) };

    let name = CString::new("/nonexistent/problem.toml").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { sp_problem_load_path(name.as_ptr(), &mut h) }, SpStatus::Parse);
}

#[test]
fn argument_checks() {
    unsafe {
        assert_eq!(sp_problem_dimension(ptr::null()), 0);
        sp_problem_free(ptr::null_mut());
        let mut rep = SpConditionReport::default();
        assert_eq!(sp_problem_check(ptr::null(), &mut rep), SpStatus::NullArgument);
        assert_eq!(sp_problem_load_toml(ptr::null(), &mut ptr::null_mut()), SpStatus::NullArgument);

        let (_, h) = load_toml(PAPER_EXAMPLE);
        let mut m = [0.0; 3];
        assert_eq!(sp_problem_monodromy(h, m.as_mut_ptr(), 3), SpStatus::BufferTooSmall);
        assert!(last_error().contains("4"));
        sp_problem_free(h);
    }
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/shift_periodic.h")).unwrap();
    for name in [
        "sp_last_error_message",
        "sp_problem_load_path",
        "sp_problem_load_toml",
        "sp_problem_free",
        "sp_problem_dimension",
        "sp_problem_window_len",
        "sp_problem_monodromy",
        "sp_problem_check",
        "sp_problem_solve",
        "typedef struct SpProblem SpProblem",
        "SP_STATUS_MAX_ITERATIONS = 7",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
