use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(skewlab::cli::run(std::env::args_os()))
}
