use std::process::ExitCode;

fn main() -> ExitCode {
    cradon::cli::main()
}
