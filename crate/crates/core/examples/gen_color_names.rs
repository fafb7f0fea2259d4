//! Regenerates `assets/color_names.bin`.
//!
//! cargo run -p fusiontrack --example gen_color_names -- crates/core/assets/color_names.bin

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "color_names.bin".into());
    let table = fusiontrack::features::ColorNameTable::generate();
    std::fs::write(&out, table.to_le_bytes()).expect("write table");
    println!("wrote {out}");
}
