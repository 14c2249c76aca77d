fn main() {
    std::process::exit(spectra_lease::cli::run(std::env::args_os()));
}
