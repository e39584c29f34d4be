use std::process::ExitCode;

fn main() -> ExitCode {
    succinct_fenwick::cli::run()
}
