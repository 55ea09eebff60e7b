fn main() {
    std::process::exit(cgesurv_cli::run_from(std::env::args_os()));
}
