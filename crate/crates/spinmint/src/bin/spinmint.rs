fn main() {
    std::process::exit(spinmint::cli::run());
}
