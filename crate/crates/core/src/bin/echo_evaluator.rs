//! Reference evaluator for the line protocol: answers every request with
//! the value of the first configuration entry.
//!
//! Flags for exercising failure handling:
//! `--delay-ms N` sleeps before each reply, `--reply nan` answers `"nan"`,
//! `--reply garbage` answers a line that is not JSON, and `--negate`
//! replies with the negated value (a loss-style evaluator).

use std::io::{self, BufRead, Write};
use std::thread;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

#[derive(Clone, Copy, ValueEnum)]
enum Reply {
    Value,
    Nan,
    Garbage,
}

#[derive(Parser)]
struct Args {
    #[arg(long, default_value_t = 0)]
    delay_ms: u64,
    #[arg(long, value_enum, default_value_t = Reply::Value)]
    reply: Reply,
    #[arg(long)]
    negate: bool,
}

fn main() -> io::Result<()> {
    let args = Args::parse();
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        let req: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("echo evaluator: bad request: {e}");
                continue;
            }
        };
        let index = req["index"].clone();
        let first = req["config"]
            .as_object()
            .and_then(|m| m.values().next())
            .and_then(Value::as_f64)
            .unwrap_or(f64::NAN);
        if args.delay_ms > 0 {
            thread::sleep(Duration::from_millis(args.delay_ms));
        }
        let reply = match args.reply {
            Reply::Value => {
                let v = if args.negate { -first } else { first };
                json!({"index": index, "value": v}).to_string()
            }
            Reply::Nan => json!({"index": index, "value": "nan"}).to_string(),
            Reply::Garbage => "this is not json".to_string(),
        };
        writeln!(out, "{reply}")?;
        out.flush()?;
    }
    Ok(())
}
