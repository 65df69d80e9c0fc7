fn main() {
    std::process::exit(atom_excitation::cli::run(std::env::args_os()));
}
