use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let mut err = io::stderr();
    let code = capq_cli::run(std::env::args_os(), &mut out, &mut err);
    let code = if out.flush().is_err() {
        capq_cli::EXIT_FAILURE
    } else {
        code
    };
    ExitCode::from(code as u8)
}
