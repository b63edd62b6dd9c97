fn main() {
    std::process::exit(stiefel_landing::cli::main_from_env());
}
