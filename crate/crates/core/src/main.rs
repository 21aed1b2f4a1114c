fn main() {
    std::process::exit(affordance::cli::run(std::env::args_os()));
}
