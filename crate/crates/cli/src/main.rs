fn main() {
    std::process::exit(ewd_cli::run(std::env::args_os()));
}
