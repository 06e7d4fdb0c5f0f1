//! Regenerates the bundled reference fixtures:
//!
//! ```text
//! cargo run -p abrlab-cli --example gen_fixtures [-- <dir>]
//! ```
//!
//! writes `rq/<id>.csv`, `contents/<id>.json` and `traces/<id>.csv` under
//! `<dir>` (default: this crate's `fixtures/`).

use std::fs;
use std::path::PathBuf;

use abrlab::scenario::{reference_contents, reference_traces};
use abrlab_cli::io::write_rq_csv;
use anyhow::Result;

fn main() -> Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    for sub in ["rq", "contents", "traces"] {
        fs::create_dir_all(root.join(sub))?;
    }
    for content in reference_contents() {
        fs::write(root.join("rq").join(format!("{}.csv", content.id)), write_rq_csv(&content.shots)?)?;
        let map = content.chunk_map()?;
        fs::write(root.join("contents").join(format!("{}.json", content.id)), map.to_json())?;
        println!(
            "{:>4}: {} shots, {:.1} s, {} rungs, {:.0}-{:.0} Kbps",
            content.id,
            content.shots.len(),
            content.duration(),
            map.n_streams(),
            map.streams[0].total_bits() as f64 / content.duration() / 1000.0,
            map.streams[map.n_streams() - 1].total_bits() as f64 / content.duration() / 1000.0,
        );
    }
    for trace in reference_traces()? {
        fs::write(root.join("traces").join(format!("{}.csv", trace.id())), trace.to_csv())?;
        let s = trace.stats();
        println!(
            "{:>4}: min {:.0} max {:.0} mean {:.0} std {:.0}",
            trace.id(),
            s.min_b,
            s.max_b,
            s.mean_b,
            s.std_b
        );
    }
    println!("fixtures written to {}", root.display());
    Ok(())
}
