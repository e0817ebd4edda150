fn main() {
    std::process::exit(rnms::cli::run());
}
