fn main() {
    std::process::exit(isofield_cli::run(std::env::args_os()));
}
