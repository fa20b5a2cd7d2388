use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "hubbard_qsim.h"

int main(void) {
    HqsModel *m = NULL;
    double e = 0.0;
    if (hqs_model_new("chain:2", 1.0, 0.0, &m) != HQS_STATUS_OK) return 1;
    if (hqs_ground_energy(m, 1, &e) != HQS_STATUS_OK) return 2;
    hqs_model_free(m);
    if (hqs_model_new("bogus", 1.0, 0.0, &m) != HQS_STATUS_PARSE) return 3;
    char msg[128];
    hqs_last_error_message(msg, sizeof msg);
    printf("%.3f %s\n", e, msg);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links() {
    let lib = target_dir().join("libhubbard_qsim_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: static library or C compiler not available");
        return;
    }
    let dir = std::env::temp_dir().join(format!("hqs-c-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    let exe = dir.join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("-1.000 parse error"), "{text}");
    let _ = std::fs::remove_dir_all(dir);
}
