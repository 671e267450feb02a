use std::process::ExitCode;

fn main() -> ExitCode {
    decoymap::cli::main()
}
