fn main() {
    std::process::exit(qkdsim_cli::cli_main(std::env::args_os()));
}
