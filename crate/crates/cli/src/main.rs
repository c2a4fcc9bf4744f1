fn main() {
    lskdet_cli::run();
}
