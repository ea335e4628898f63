fn main() {
    std::process::exit(krylov_errest::harness::main_exit(std::env::args_os()));
}
