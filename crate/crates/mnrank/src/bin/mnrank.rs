fn main() {
    mnrank::cli::main();
}
