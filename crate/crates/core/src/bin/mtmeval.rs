use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(mtmeval::cli::run(std::env::args_os()))
}
