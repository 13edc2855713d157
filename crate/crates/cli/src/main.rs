fn main() {
    std::process::exit(almost_iid_cli::run(std::env::args_os()));
}
