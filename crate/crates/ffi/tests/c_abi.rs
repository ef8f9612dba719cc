use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use petricov_ffi::*;

const FORK: &str = "vars p0 p1
rules
  p0 >= 2 -> p0' = p0 - 1, p1' = p1 + 1;
  p0 >= 1 -> p0' = p0 - 1;
init p0 = 1, p1 = 0
target p1 >= 1
";

fn parse(text: &str) -> *mut PetricovInstance {
    let c = CString::new(text).unwrap();
    let mut inst = ptr::null_mut();
    let s = unsafe { petricov_instance_parse(c.as_ptr(), PetricovFormat::Mist, &mut inst) };
    assert_eq!(s, PetricovStatus::Ok);
    assert!(!inst.is_null());
    inst
}

#[test]
fn check_through_the_abi() {
    let inst = parse(FORK);
    unsafe {
        assert_eq!(petricov_instance_num_places(inst), 2);
        assert_eq!(petricov_instance_num_transitions(inst), 2);
        for (algo, want) in [
            (PetricovAlgorithm::Backward, PetricovVerdict::Safe),
            (PetricovAlgorithm::Qcover, PetricovVerdict::Safe),
            (PetricovAlgorithm::Trapcegar, PetricovVerdict::Unknown),
        ] {
            let mut v = PetricovVerdict::Unknown;
            let s = petricov_check(inst, algo, ptr::null(), &mut v, ptr::null_mut());
            assert_eq!(s, PetricovStatus::Ok);
            assert_eq!(v, want, "{algo:?}");
        }
        let mut v = PetricovVerdict::Unknown;
        let mut report = ptr::null_mut();
        let opts = petricov_options_default();
        assert_eq!(
            petricov_check(inst, PetricovAlgorithm::Qcover, &opts, &mut v, &mut report),
            PetricovStatus::Ok
        );
        let json = CStr::from_ptr(report).to_str().unwrap().to_owned();
        petricov_string_free(report);
        assert!(json.contains("\"verdict\": \"safe\""));

        let mut cov = true;
        assert_eq!(petricov_q_coverable(inst, [0u64, 1].as_ptr(), 2, &mut cov), PetricovStatus::Ok);
        assert!(!cov);
        assert_eq!(petricov_q_coverable(inst, [1u64, 0].as_ptr(), 2, &mut cov), PetricovStatus::Ok);
        assert!(cov);
        assert_eq!(
            petricov_q_coverable(inst, [1u64].as_ptr(), 1, &mut cov),
            PetricovStatus::DimensionMismatch
        );
        assert!(!petricov_last_error().is_null());

        let mut smt = ptr::null_mut();
        assert_eq!(petricov_emit_smt(inst, &mut smt), PetricovStatus::Ok);
        assert!(CStr::from_ptr(smt).to_str().unwrap().starts_with("(set-logic QF_LRA)"));
        petricov_string_free(smt);
        petricov_instance_free(inst);
    }
}

#[test]
fn errors_are_reported() {
    let bad = CString::new("vars p\nrules\n q >= 1 -> ;\ninit p = 0\ntarget p >= 1\n").unwrap();
    let mut inst = ptr::null_mut();
    unsafe {
        let s = petricov_instance_parse(bad.as_ptr(), PetricovFormat::Mist, &mut inst);
        assert_eq!(s, PetricovStatus::ParseError);
        assert!(inst.is_null());
        let msg = CStr::from_ptr(petricov_last_error()).to_str().unwrap();
        assert!(msg.contains('q'), "{msg}");
        assert_eq!(
            petricov_instance_parse(ptr::null(), PetricovFormat::Mist, &mut inst),
            PetricovStatus::NullArgument
        );
        let mut v = PetricovVerdict::Safe;
        assert_eq!(
            petricov_check(ptr::null(), PetricovAlgorithm::Qcover, ptr::null(), &mut v, ptr::null_mut()),
            PetricovStatus::NullArgument
        );
        petricov_instance_free(ptr::null_mut());
        petricov_string_free(ptr::null_mut());
        assert_eq!(CStr::from_ptr(petricov_version()).to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "petricov.h"

int main(void) {
    const char *text = "vars p0 p1\nrules\n p0 >= 2 -> p0' = p0 - 1, p1' = p1 + 1;\n p0 >= 1 -> p0' = p0 - 1;\ninit p0 = 1, p1 = 0\ntarget p1 >= 1\n";
    PetricovInstance *inst = NULL;
    if (petricov_instance_parse(text, PETRICOV_FORMAT_MIST, &inst) != PETRICOV_STATUS_OK) return 10;
    PetricovOptions opts = petricov_options_default();
    PetricovVerdict v;
    if (petricov_check(inst, PETRICOV_ALGORITHM_QCOVER, &opts, &v, NULL) != PETRICOV_STATUS_OK) return 11;
    if (v != PETRICOV_VERDICT_SAFE) return 12;
    if (petricov_check(inst, PETRICOV_ALGORITHM_TRAPCEGAR, &opts, &v, NULL) != PETRICOV_STATUS_OK) return 13;
    if (v != PETRICOV_VERDICT_UNKNOWN) return 14;
    petricov_instance_free(inst);
    if (petricov_instance_parse("vars", PETRICOV_FORMAT_MIST, &inst) != PETRICOV_STATUS_PARSE_ERROR) return 15;
    if (petricov_last_error() == NULL) return 16;
    printf("ok\n");
    return 0;
}
"#;

/// Compiles and runs a C client against the generated header and the static
/// library when a C compiler is around.
#[test]
fn c_client_links_against_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/petricov.h");
    assert!(header.exists(), "build script writes the header");
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libpetricov_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("client.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = tmp.path().join("client");
    let out = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "client exited with {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok\n");
}
