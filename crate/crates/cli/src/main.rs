use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(laakso_cli::run(std::env::args_os()))
}
