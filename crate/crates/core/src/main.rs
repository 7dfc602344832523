fn main() {
    std::process::exit(swarmclt::cli::main_with_args(std::env::args_os()));
}
