fn main() {
    std::process::exit(kgscatter::cli::main_with_args(std::env::args_os()));
}
