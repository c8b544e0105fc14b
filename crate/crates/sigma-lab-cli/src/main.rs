fn main() {
    std::process::exit(sigma_lab_cli::run(std::env::args()));
}
