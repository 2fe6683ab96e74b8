fn main() {
    std::process::exit(divkmed::cli::run());
}
