fn main() {
    std::process::exit(convinv::cli::run(std::env::args_os()));
}
