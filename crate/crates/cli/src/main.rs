fn main() {
    std::process::exit(bcldpc_cli::run(std::env::args_os()));
}
