fn main() {
    std::process::exit(drinfeld::cli::run(std::env::args_os()));
}
