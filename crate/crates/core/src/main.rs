use std::process::ExitCode;

fn main() -> ExitCode {
    crossrumour::cli::run(std::env::args_os())
}
