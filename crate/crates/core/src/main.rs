fn main() -> std::process::ExitCode {
    awesome::cli::main()
}
