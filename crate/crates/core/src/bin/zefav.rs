fn main() -> std::process::ExitCode {
    zefav::cli::main()
}
