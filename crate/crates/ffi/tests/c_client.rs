// SPDX-License-Identifier: Apache-2.0

//! Compiles a C client against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_client_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler ({cc}); skipping");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // The static library built for this run sits next to the test binary in
    // target/<profile>/deps; the copy one level up is only refreshed by `cargo build`.
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().join("libgmon_control_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());

    let bin = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("gmon_smoke");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-o"])
        .arg(&bin)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");

    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains("tau_star=0.93"), "{stdout}");
}
