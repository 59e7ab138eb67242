fn main() {
    std::process::exit(cpskit::cli::main());
}
