fn main() {
    // panics are reported by `run` as a one-line internal error
    std::panic::set_hook(Box::new(|_| {}));
    let code = sbza::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
