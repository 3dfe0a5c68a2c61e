//! Fixture arrangements shared by the benchmarks.

use arrmorse::Arrangement;

/// `m` real lines `y = s_i x + b_i` in general position.
pub fn generic_lines(m: usize) -> Arrangement {
    const SLOPES: [f64; 8] = [0.0, 1.0, -1.0, 2.0, -0.5, 3.0, -2.5, 0.25];
    const OFFSETS: [f64; 8] = [0.0, 1.0, 3.0, -2.0, 4.5, -3.5, 7.0, 1.75];
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| vec![SLOPES[i], -1.0, OFFSETS[i]])
        .collect();
    Arrangement::from_real_rows(2, &rows).expect("distinct lines")
}

/// `m` real points in `C^1` at `0, 1, ..., m - 1` with a spread.
pub fn points(m: usize) -> Arrangement {
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| vec![1.0, -((i * i) as f64) * 0.5 - i as f64])
        .collect();
    Arrangement::from_real_rows(1, &rows).expect("distinct points")
}
