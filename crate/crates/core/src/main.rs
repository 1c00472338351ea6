fn main() {
    std::process::exit(infoflow::cli::run());
}
