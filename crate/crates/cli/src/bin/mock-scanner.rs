//! Test double for an external scanner: answers ScanRequest lines on stdin
//! with ScanResponse lines on stdout.

use std::io::{BufRead, Write};

use clap::Parser;
use ingredient_core::protocol::{ScanRequest, ScanResponse, WireScore};
use sha2::{Digest, Sha256};

#[derive(Parser)]
struct Args {
    /// Score every identifier with this value instead of a hash draw.
    #[arg(long)]
    constant: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exit without answering after this many requests.
    #[arg(long)]
    fail_after: Option<usize>,
}

fn draw(seed: u64, id: &str, name: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    h.update([0]);
    h.update(name.as_bytes());
    let d = h.finalize();
    let x = u64::from_be_bytes(d[..8].try_into().expect("8 bytes"));
    (x >> 11) as f64 / (1u64 << 53) as f64
}

fn main() {
    let args = Args::parse();
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    for (n, line) in stdin.lock().lines().enumerate() {
        if args.fail_after.is_some_and(|k| n >= k) {
            std::process::exit(1);
        }
        let line = line.expect("stdin");
        if line.trim().is_empty() {
            continue;
        }
        let req: ScanRequest = serde_json::from_str(&line).expect("scan request");
        let scores = req
            .identifiers
            .iter()
            .map(|i| WireScore {
                name: i.name.clone(),
                byte_offset: i.byte_offset,
                score: args.constant.unwrap_or_else(|| draw(args.seed, &req.id, &i.name)),
            })
            .collect();
        let resp = ScanResponse { id: req.id, scores };
        serde_json::to_writer(&mut out, &resp).expect("stdout");
        out.write_all(b"\n").expect("stdout");
        out.flush().expect("stdout");
    }
}
