//! Regenerate the bundled fixture files.
//!
//! `cargo run -p hurricat-core --example gen_fixtures [DIR]`

use std::path::PathBuf;

fn main() -> hurricat::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    for p in hurricat::synth::write_fixture_files(&dir)? {
        println!("{}", p.display());
    }
    Ok(())
}
