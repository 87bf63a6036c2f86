use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(kickmind::cli::run(std::env::args_os()))
}
