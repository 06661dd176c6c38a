//! Rewrites the generated files under `assets/`: the bundled pulse library
//! and the deck the reference program compiles to.
//!
//! cargo run -p qpulse-cli --example regenerate_assets

use std::path::Path;

use qpulse_cli::asm::parse_program;
use qpulse_cli::backend::reference_library;

fn main() {
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    let lib = reference_library().expect("library builds");
    std::fs::write(assets.join("backend_library.json"), lib.to_json()).expect("write library");

    let text = std::fs::read_to_string(assets.join("reference_program.txt")).expect("read program");
    let program = parse_program("reference", &text).expect("program parses");
    let (deck, _) = qpulse::compiler::compile(&program, &lib).expect("program compiles");
    std::fs::write(assets.join("golden_deck.json"), deck.to_json()).expect("write deck");
    println!("wrote backend_library.json and golden_deck.json ({} entries)", deck.entries.len());
}
