use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(degenwave::cli::run())
}
