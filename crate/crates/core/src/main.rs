fn main() {
    std::process::exit(ainfty::cli::run(std::env::args_os()));
}
