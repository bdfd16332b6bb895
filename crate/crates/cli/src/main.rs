fn main() {
    std::process::exit(rifs_quant_cli::run(std::env::args_os()));
}
