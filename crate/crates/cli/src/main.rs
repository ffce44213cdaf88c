use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(slag_cli::run(std::env::args_os()))
}
