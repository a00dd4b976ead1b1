fn main() {
    std::process::exit(refnav::cli::main());
}
