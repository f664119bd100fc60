fn main() {
    let status = bvterm::driver::run_cli(std::env::args().collect());
    std::process::exit(status);
}
