use std::io::Write;

fn main() {
    let exec = sumfree_cli::run(std::env::args_os());
    print!("{}", exec.rendered);
    eprint!("{}", exec.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(exec.status);
}
