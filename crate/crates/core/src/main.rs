fn main() {
    std::process::exit(mrf_relax::cli::cli_main(std::env::args_os()));
}
