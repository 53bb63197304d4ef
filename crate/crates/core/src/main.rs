fn main() {
    std::process::exit(hec_ensemble::cli::run(std::env::args_os()));
}
