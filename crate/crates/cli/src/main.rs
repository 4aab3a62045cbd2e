use std::process::ExitCode;

fn main() -> ExitCode {
    trajopt_cli::run(std::env::args_os())
}
