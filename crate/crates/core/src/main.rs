use std::process::ExitCode;

fn main() -> ExitCode {
    ecgforge::cli::run(std::env::args_os())
}
