use std::io;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let ctx = match litproc::Context::from_process() {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("litproc: {e}");
            std::process::exit(1);
        }
    };
    let mut stdin = io::stdin();
    let code = litproc::run(
        std::env::args_os(),
        &ctx,
        &mut stdin,
        &mut io::stdout().lock(),
        &mut io::stderr(),
    );
    std::process::exit(code);
}
