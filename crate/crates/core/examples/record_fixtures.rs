//! Regenerates the replay transcripts under `tests/fixtures` from scripted
//! model answers.
//!
//!     cargo run -p lexiforge-core --example record_fixtures

#[path = "../tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;

use lexiforge::chain::{write_transcript, RecordingBackend};
use lexiforge::pipeline::{run, Resources};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scratch = std::env::temp_dir().join("lexiforge-record");
    for ex in common::EXAMPLES {
        let mut entries = BTreeMap::new();
        for &path in ex.paths {
            let cfg = common::example_config(&ex, path, &scratch);
            let res = Resources::load(&cfg)?;
            let recorder = RecordingBackend::new(common::ScriptedBackend);
            let outcome = run(&cfg, &res, &recorder)?;
            if !outcome.ledger.failures.is_empty() {
                return Err(
                    format!("{} {:?}: {:?}", ex.seed, path, outcome.ledger.failures).into(),
                );
            }
            for e in recorder.entries() {
                entries.insert(e.prompt.clone(), e);
            }
        }
        let out = common::fixture(ex.transcript);
        let list: Vec<_> = entries.into_values().collect();
        write_transcript(&out, &list)?;
        println!("{}: {} exchanges", out.display(), list.len());
    }
    Ok(())
}
