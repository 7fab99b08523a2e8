use std::io::Write;

fn main() {
    let out = cbc_forcing_cli::run(std::env::args().skip(1));
    let mut stdout = std::io::stdout().lock();
    // a closed pipe is not worth a panic
    let _ = stdout.write_all(out.stdout.as_bytes());
    let _ = stdout.flush();
    std::process::exit(out.exit_code);
}
