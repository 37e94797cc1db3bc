//! Command-line front end for the `capq` two-qubit simulator.

pub mod args;
pub mod commands;
pub mod csv;
pub mod keyfile;
pub mod verify;

use std::io::Write;

use args::{parse_args, Parsed};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Runs the program with `argv` (including the program name) and returns the
/// exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(Parsed::Run(cfg)) => cfg,
        Ok(Parsed::Display(text)) => {
            let _ = write!(out, "{text}");
            return EXIT_OK;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    match commands::execute(&cfg, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = out.flush();
            let _ = writeln!(err, "error: {}", e.0);
            EXIT_FAILURE
        }
    }
}
