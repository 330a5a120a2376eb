fn main() -> std::process::ExitCode {
    sar_contrast_service::cli::main_with(std::env::args_os())
}
