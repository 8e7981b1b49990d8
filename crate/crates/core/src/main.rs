fn main() {
    std::process::exit(mapcoach::cli::run_from_args(std::env::args_os()));
}
