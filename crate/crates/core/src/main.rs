use std::process::ExitCode;

fn main() -> ExitCode {
    potstab::cli::main()
}
