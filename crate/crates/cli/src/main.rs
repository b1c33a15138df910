fn main() {
    std::process::exit(fml_cli::run_cli(std::env::args_os()));
}
