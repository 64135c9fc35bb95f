//! Compiles and runs a C program against the generated header and the
//! static library. Skipped when no C compiler is on PATH.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "akv.h"

int main(void) {
    AkvScenario *s = NULL;
    AkvRun *r = NULL;
    AkvResponse status;
    uint32_t violated = 99;
    if (akv_scenario_builtin("nominal", &s) != AKV_STATUS_OK) return 10;
    if (akv_run(s, &r) != AKV_STATUS_OK) return 11;
    if (akv_run_status(r, &status) != AKV_STATUS_OK || status != AKV_RESPONSE_SUCCESS) return 12;
    if (akv_run_monitor(r, "all", &violated) != AKV_STATUS_OK || violated != 0) return 13;
    if (strncmp(akv_run_trace_jsonl(r), "{\"seq\":0", 8) != 0) return 14;
    akv_run_free(r);
    akv_scenario_free(s);
    if (akv_scenario_builtin("nope", &s) != AKV_STATUS_NOT_FOUND) return 15;
    printf("%s\n", akv_last_error());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let deps = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = deps.parent().unwrap().join("libakv_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).contains("nope"));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "clang", "gcc"]
        .into_iter()
        .find(|c| {
            Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
