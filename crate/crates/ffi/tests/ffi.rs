use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use chorc_ffi::*;

fn s(text: &str) -> CString {
    CString::new(text).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    let out = CStr::from_ptr(p).to_str().unwrap().to_string();
    chorc_string_free(p);
    out
}

unsafe fn last_error() -> String {
    let p = chorc_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

#[test]
fn parse_print_round_trip() {
    unsafe {
        let mut c = ptr::null_mut();
        let src = s("p.x -> q.y; {q -> r[L], q -> s[R]}");
        assert_eq!(chorc_choreography_parse(src.as_ptr(), &mut c), ChorcStatus::Ok);
        assert!(chorc_last_error().is_null());
        let mut out = ptr::null_mut();
        assert_eq!(chorc_choreography_print(c, &mut out), ChorcStatus::Ok);
        assert_eq!(take(out), "p.x -> q.y;\n{q -> r[L], q -> s[R]}");
        chorc_choreography_free(c);
    }
}

#[test]
fn parse_error_reports_position() {
    unsafe {
        let mut c = ptr::null_mut();
        let src = s("p.x -> ");
        assert_eq!(chorc_choreography_parse(src.as_ptr(), &mut c), ChorcStatus::ParseError);
        assert!(c.is_null());
        assert!(last_error().contains("1:"));
    }
}

#[test]
fn null_and_utf8_arguments() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(chorc_choreography_parse(ptr::null(), &mut c), ChorcStatus::NullPointer);
        assert!(last_error().contains("src"));
        let src = s("0");
        assert_eq!(chorc_choreography_parse(src.as_ptr(), ptr::null_mut()), ChorcStatus::NullPointer);
        let bytes = [0xffu8, 0];
        assert_eq!(
            chorc_choreography_parse(bytes.as_ptr() as *const c_char, &mut c),
            ChorcStatus::InvalidUtf8
        );
        chorc_choreography_free(ptr::null_mut());
        chorc_string_free(ptr::null_mut());
    }
}

#[test]
fn check_returns_diagnostics() {
    unsafe {
        let mut c = ptr::null_mut();
        let src = s("{p.x -> q.x, p.y -> q.y}");
        assert_eq!(chorc_choreography_parse(src.as_ptr(), &mut c), ChorcStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(chorc_choreography_check(c, &mut out), ChorcStatus::IllFormed);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v[0]["kind"], "SameChannelClash");
        let mut trace = ptr::null_mut();
        assert_eq!(
            chorc_run(c, ptr::null(), CHORC_SEM_SEQ, 0, 10, &mut trace, ptr::null_mut()),
            ChorcStatus::IllFormed
        );
        chorc_choreography_free(c);
    }
}

#[test]
fn projection_errors_name_the_process() {
    unsafe {
        let mut c = ptr::null_mut();
        let src = s("if p.e then { p.e2 -> q.x } else { 0 }");
        chorc_choreography_parse(src.as_ptr(), &mut c);
        let mut n = ptr::null_mut();
        assert_eq!(chorc_choreography_project(c, &mut n), ChorcStatus::ProjectionError);
        assert!(n.is_null());
        assert!(last_error().contains("projecting q"));
        chorc_choreography_free(c);
    }
}

#[test]
fn run_and_simulate_agree() {
    unsafe {
        let mut c = ptr::null_mut();
        let mut st = ptr::null_mut();
        let src = s("{p.x -> q.u, q.x -> p.v}");
        let mem = s("p.x = 1\nq.x = 2");
        chorc_choreography_parse(src.as_ptr(), &mut c);
        assert_eq!(chorc_state_parse(mem.as_ptr(), &mut st), ChorcStatus::Ok);
        let mut finals = Vec::new();
        for sem in [CHORC_SEM_SEQ, CHORC_SEM_CONC] {
            let (mut trace, mut end) = (ptr::null_mut(), ptr::null_mut());
            assert_eq!(chorc_run(c, st, sem, 1, 100, &mut trace, &mut end), ChorcStatus::Ok);
            let v: serde_json::Value = serde_json::from_str(&take(trace)).unwrap();
            assert_eq!(v["status"], "terminated");
            let mut text = ptr::null_mut();
            chorc_state_print(end, &mut text);
            finals.push(take(text));
            chorc_state_free(end);
        }
        let mut n = ptr::null_mut();
        assert_eq!(chorc_choreography_project(c, &mut n), ChorcStatus::Ok);
        let (mut trace, mut end) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(chorc_simulate(n, st, 4, 100, &mut trace, &mut end), ChorcStatus::Ok);
        take(trace);
        let mut text = ptr::null_mut();
        chorc_state_print(end, &mut text);
        finals.push(take(text));
        assert!(finals.iter().all(|f| *f == finals[0]));
        assert!(finals[0].contains("q.u = 1") && finals[0].contains("p.v = 2"));
        let mut trace = ptr::null_mut();
        assert_eq!(
            chorc_run(c, st, 9, 0, 10, &mut trace, ptr::null_mut()),
            ChorcStatus::InvalidArgument
        );
        chorc_state_free(end);
        chorc_network_free(n);
        chorc_state_free(st);
        chorc_choreography_free(c);
    }
}

#[test]
fn network_round_trip() {
    unsafe {
        let mut n = ptr::null_mut();
        let src = s("p |> q!x | q |> p?y");
        assert_eq!(chorc_network_parse(src.as_ptr(), &mut n), ChorcStatus::Ok);
        let mut out = ptr::null_mut();
        chorc_network_print(n, &mut out);
        assert_eq!(take(out), "p |> q!x\n| q |> p?y");
        chorc_network_free(n);
    }
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let target = exe.parent().unwrap().parent().unwrap();
    let lib = target.join("libchorc_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let bin = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("chorc_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("q |> {p!x, p?u}"));
}
