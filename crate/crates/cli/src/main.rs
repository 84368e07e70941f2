fn main() {
    std::process::exit(toric_credit_cli::run(std::env::args_os()));
}
