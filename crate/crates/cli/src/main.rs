fn main() {
    let code = ecpp_cli::run(std::env::args_os());
    std::process::exit(code);
}
