fn main() {
    std::process::exit(fastsweep::cli::main());
}
