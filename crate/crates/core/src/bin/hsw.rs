fn main() {
    std::process::exit(hsw::harness::main(std::env::args_os()));
}
