fn main() {
    std::process::exit(halqp_io::cli::run(std::env::args_os()));
}
