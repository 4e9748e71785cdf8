fn main() {
    std::process::exit(wkb_disperse::cli::run(std::env::args_os()));
}
