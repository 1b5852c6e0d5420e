fn main() {
    std::process::exit(raylaunch_cli::run(std::env::args_os()));
}
