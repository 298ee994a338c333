use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(madsmooth_cli::run(std::env::args_os()))
}
