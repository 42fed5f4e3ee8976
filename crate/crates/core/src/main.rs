fn main() {
    std::process::exit(conemix::cli::main_with_env());
}
