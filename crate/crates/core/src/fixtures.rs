//! Synthetic benchmark datasets with known nonlinear decision boundaries.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;

/// Raw `(label, input)` rows.
pub type RawRows = Vec<(u8, Vec<f64>)>;

/// The four XOR corners, each repeated `copies` times, with exactly
/// `flips` labels inverted at seeded random positions.
pub fn noisy_xor_rows(copies: usize, flips: usize, seed: u64) -> RawRows {
    let mut rows = Vec::with_capacity(4 * copies);
    for _ in 0..copies {
        for (a, b) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
            rows.push((a ^ b, vec![f64::from(a), f64::from(b)]));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in sample(&mut rng, rows.len(), flips.min(rows.len())) {
        rows[i].0 ^= 1;
    }
    rows
}

/// 100 XOR points with 5% label noise.
pub fn noisy_xor() -> Dataset {
    Dataset::from_raw(noisy_xor_rows(25, 5, 2)).expect("valid fixture")
}

/// Points uniform on `[-1.5, 1.5]²` labelled 1 inside the unit circle.
pub fn circle_rows(n: usize, seed: u64) -> RawRows {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(-1.5..1.5);
            let y: f64 = rng.random_range(-1.5..1.5);
            (u8::from(x * x + y * y <= 1.0), vec![x, y])
        })
        .collect()
}

/// 200-point circle dataset.
pub fn circle() -> Dataset {
    Dataset::from_raw(circle_rows(200, 11)).expect("valid fixture")
}

/// Renders rows as CSV, label last.
pub fn to_csv(rows: &RawRows) -> String {
    rows.iter()
        .map(|(label, x)| {
            let mut fields: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
            fields.push(label.to_string());
            fields.join(",") + "\n"
        })
        .collect()
}
