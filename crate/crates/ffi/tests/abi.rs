//! The C ABI driven from Rust, plus a C compile-and-link smoke test.

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use eqbundle_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn load(name: &str) -> *mut EqbScenario {
    let mut h = ptr::null_mut();
    let st = unsafe { eqb_scenario_load_bundled(c(name).as_ptr(), &mut h) };
    assert_eq!(st, EqbStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let p = eqb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn holonomy_of_worked_example() {
    let h = load("z_on_r_half");
    let mut v = f64::NAN;
    let st = unsafe { eqb_holonomy(h, c("g").as_ptr(), c("unit").as_ptr(), ptr::null(), &mut v) };
    assert_eq!(st, EqbStatus::Ok);
    assert!((v - 0.5).abs() < 1e-8);
    assert_eq!(unsafe { eqb_scenario_dimension(h) }, 1);
    unsafe { eqb_scenario_free(h) };
}

#[test]
fn verdicts_map_to_exit_codes() {
    for (name, want) in [
        ("z_on_r_half", EqbVerdict::Cancels),
        ("rotation", EqbVerdict::Obstructed),
        ("z_on_r_periodic_candidates", EqbVerdict::Inconclusive),
    ] {
        let h = load(name);
        let mut v = EqbVerdict::Cancels;
        assert_eq!(unsafe { eqb_scenario_verdict(h, false, 7, &mut v) }, EqbStatus::Ok);
        assert_eq!(v, want, "{name}");
        assert_eq!(v as i32, if want == EqbVerdict::Cancels { 0 } else { want as i32 });
        unsafe { eqb_scenario_free(h) };
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut h = ptr::null_mut();
    let st = unsafe { eqb_scenario_load(c("schema_version = 1\n[space\n").as_ptr(), &mut h) };
    assert_eq!(st, EqbStatus::Syntax);
    assert!(h.is_null());
    assert!(last_error().contains("line"));

    let st = unsafe { eqb_scenario_load_bundled(c("z2_corrupted").as_ptr(), &mut h) };
    assert_eq!(st, EqbStatus::CocycleViolation, "{}", last_error());

    let st = unsafe { eqb_scenario_load(ptr::null(), &mut h) };
    assert_eq!(st, EqbStatus::NullArgument);

    let z = load("z_on_r_half");
    let mut v = 0.0;
    let st = unsafe { eqb_holonomy(z, c("g").as_ptr(), c("nowhere").as_ptr(), ptr::null(), &mut v) };
    assert_eq!(st, EqbStatus::InvalidInput);
    assert!(last_error().contains("nowhere"));
    let st = unsafe { eqb_check_cocycle(z, 1, 8, 7, &mut v) };
    assert_eq!(st, EqbStatus::InvalidInput);
    let st = unsafe { eqb_check_cocycle(z, 3, 16, 7, &mut v) };
    assert_eq!(st, EqbStatus::Ok);
    assert!(v < 1e-8);
    unsafe { eqb_scenario_free(z) };
    unsafe { eqb_scenario_free(ptr::null_mut()) };
}

#[test]
fn run_returns_a_json_report() {
    let mut json = ptr::null_mut();
    let mut code = -1;
    let st = unsafe { eqb_run(c("verdict").as_ptr(), c("rotation").as_ptr(), 7, &mut json, &mut code) };
    assert_eq!(st, EqbStatus::Ok);
    assert_eq!(code, 2);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { eqb_string_free(json) };
    assert!(text.contains("\"schema\": \"eqbundle.report/1\""));
    assert!(text.contains("OBSTRUCTED"));
    let st = unsafe { eqb_run(c("fly").as_ptr(), ptr::null(), 7, &mut json, &mut code) };
    assert_eq!(st, EqbStatus::InvalidInput);
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(eqb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("eqbundle.h")
}

#[test]
fn header_declares_the_abi() {
    let h = std::fs::read_to_string(header()).unwrap();
    for sym in [
        "eqb_scenario_load",
        "eqb_scenario_load_bundled",
        "eqb_scenario_free",
        "eqb_holonomy",
        "eqb_check_cocycle",
        "eqb_scenario_verdict",
        "eqb_run",
        "eqb_string_free",
        "eqb_last_error",
        "typedef struct eqb_scenario eqb_scenario;",
        "EQB_STATUS_COCYCLE_VIOLATION = 9",
        "EQB_VERDICT_OBSTRUCTED = 2",
    ] {
        assert!(h.contains(sym), "{sym}");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"eqbundle.h\"\nint main(void) {\n  eqb_scenario *s = 0;\n  \
         eqb_status st = eqb_scenario_load_bundled(\"trivial\", &s);\n  \
         eqb_scenario_free(s);\n  return (int)st;\n}\n",
    )
    .unwrap();
    let include = header().parent().unwrap().to_path_buf();
    for (cc, extra) in [("cc", vec!["-std=c99"]), ("c++", vec!["-x", "c++"])] {
        let out = Command::new(cc)
            .args(&extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(&include)
            .arg(&src)
            .output()
            .unwrap_or_else(|e| panic!("{cc}: {e}"));
        assert!(out.status.success(), "{cc}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let target = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let mut build = Command::new(cargo);
    build.args(["build", "-p", "eqbundle-ffi", "--lib"]);
    if target.file_name().is_some_and(|n| n == "release") {
        build.arg("--release");
    }
    let built = build.current_dir(env!("CARGO_MANIFEST_DIR")).status().unwrap();
    assert!(built.success());
    let lib = target.join("libeqbundle_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "eqbundle.h"
int main(void) {
  eqb_scenario *s = NULL;
  if (eqb_scenario_load_bundled("z_on_r_half", &s) != EQB_STATUS_OK) return 10;
  double h = 0.0;
  if (eqb_holonomy(s, "g^1", "unit", NULL, &h) != EQB_STATUS_OK) return 11;
  eqb_verdict v;
  if (eqb_scenario_verdict(s, false, 7, &v) != EQB_STATUS_OK) return 12;
  eqb_scenario_free(s);
  if (eqb_scenario_load_bundled("nope", &s) != EQB_STATUS_INVALID_INPUT) return 13;
  printf("%.12f %d %s\n", h, (int)v, eqb_last_error());
  return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let out = Command::new("cc")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.starts_with("0.500000000000 0 "), "{stdout}");
    assert!(stdout.contains("nope"), "{stdout}");
}
