fn main() {
    std::process::exit(pole_recovery::cli::main());
}
