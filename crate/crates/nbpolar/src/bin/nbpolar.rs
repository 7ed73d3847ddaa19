fn main() {
    std::process::exit(nbpolar::cli::main_from_env());
}
