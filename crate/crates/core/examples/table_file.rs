//! Writes a baseline agent function to the table file format, reads it
//! back and prints the human-readable rendering.

use learned_cc::cli::{baseline_function, parse_table_file, preset, render_table, table_file_text, Baseline};

fn main() {
    let w = preset("tpcc").unwrap().build();
    let f = baseline_function(&w.static_ops(), Baseline::TwoPl);
    let text = table_file_text(&f);
    println!("{} bytes, first lines:", text.len());
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    let back = parse_table_file(&text).expect("round trip");
    assert_eq!(table_file_text(&back), text);
    print!("{}", render_table(&back).lines().take(12).collect::<Vec<_>>().join("\n"));
    println!();
}
