fn main() -> std::process::ExitCode {
    mksc::cli::run_from(std::env::args_os())
}
