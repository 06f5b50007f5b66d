fn main() {
    let out = mpfp_cli::run(std::env::args_os());
    print!("{}", out.stdout);
    std::process::exit(out.code);
}
