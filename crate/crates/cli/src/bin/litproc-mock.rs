//! Scripted fake interpreter: `litproc-mock SCRIPT`.

use std::io;

use litproc_core::mockinterp::{run_mock, MockScript};

fn main() {
    let Some(path) = std::env::args_os().nth(1) else {
        eprintln!("usage: litproc-mock SCRIPT");
        std::process::exit(2);
    };
    let script = match std::fs::read_to_string(&path)
        .map_err(|e| e.to_string())
        .and_then(|text| MockScript::parse(&text).map_err(|e| e.to_string()))
    {
        Ok(script) => script,
        Err(e) => {
            eprintln!("litproc-mock: {e}");
            std::process::exit(2);
        }
    };
    match run_mock(&script, io::stdin().lock(), io::stdout().lock()) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("litproc-mock: {e}");
            std::process::exit(1);
        }
    }
}
