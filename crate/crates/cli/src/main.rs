fn main() {
    std::process::exit(gesture_cli::run(std::env::args_os()));
}
