// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(gmon_control::cli::run_from(std::env::args_os()));
}
