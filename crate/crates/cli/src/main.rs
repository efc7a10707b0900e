fn main() {
    std::process::exit(rzbattery_cli::run_from_args(std::env::args_os()));
}
