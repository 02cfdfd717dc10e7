fn main() {
    env_logger::init();
    std::process::exit(prescurv_cli::run(std::env::args_os()));
}
