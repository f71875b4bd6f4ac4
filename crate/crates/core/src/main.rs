fn main() {
    std::process::exit(nauticle::cli::main_with(std::env::args_os()));
}
