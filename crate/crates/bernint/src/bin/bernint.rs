fn main() {
    std::process::exit(bernint::cli::run(std::env::args().skip(1)));
}
