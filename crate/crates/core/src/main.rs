fn main() {
    std::process::exit(nematic_wave::cli::run_cli(std::env::args_os()));
}
