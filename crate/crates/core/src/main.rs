fn main() {
    std::process::exit(endowment_hedge::cli::run(std::env::args_os()));
}
