fn main() {
    std::process::exit(cbdc_lab::cli::run(std::env::args_os()));
}
