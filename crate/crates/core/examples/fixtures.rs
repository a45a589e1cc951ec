//! Writes a synthetic dataset as CSV (label last) to stdout.
//!
//! ```text
//! cargo run -p contilearn-core --example fixtures -- xor > xor.csv
//! cargo run -p contilearn-core --example fixtures -- circle > circle.csv
//! ```

use contilearn_core::fixtures::{circle_rows, noisy_xor_rows, to_csv};

fn main() {
    let rows = match std::env::args().nth(1).as_deref() {
        Some("xor") => noisy_xor_rows(25, 5, 2),
        Some("circle") => circle_rows(200, 11),
        _ => {
            eprintln!("usage: fixtures <xor|circle>");
            std::process::exit(1);
        }
    };
    print!("x1,x2,label\n{}", to_csv(&rows));
}
