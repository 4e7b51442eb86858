use std::process::ExitCode;

fn main() -> ExitCode {
    kaczlab_cli::run(std::env::args_os())
}
