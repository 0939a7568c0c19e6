fn main() {
    let result = paratype::cli::run(std::env::args_os().skip(1));
    std::process::exit(result.exit_code);
}
