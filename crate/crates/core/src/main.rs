// SPDX-License-Identifier: Apache-2.0

fn main() {
    let code = rtl_witness::cli::run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr());
    std::process::exit(code);
}
