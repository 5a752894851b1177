fn main() {
    std::process::exit(ttkit::cli::run_from_env());
}
