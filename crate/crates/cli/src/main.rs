fn main() {
    let code = meanforce_cli::run(std::env::args_os());
    std::process::exit(code);
}
