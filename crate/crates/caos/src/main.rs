fn main() {
    std::process::exit(caos::cli::run());
}
