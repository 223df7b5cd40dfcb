fn main() {
    std::process::exit(starsplit::cli::run_from_env());
}
