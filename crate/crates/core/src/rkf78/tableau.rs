//! Fehlberg's 13-stage embedded 7(8) pair.

pub const STAGES: usize = 13;

pub const C: [f64; STAGES] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    0.5,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

pub const A: [[f64; 12]; STAGES] = [
    [0.0; 12],
    [2.0 / 27.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 36.0, 1.0 / 12.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 24.0, 0.0, 1.0 / 8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-25.0 / 108.0, 0.0, 0.0, 125.0 / 108.0, -65.0 / 27.0, 125.0 / 54.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0, 0.0, 0.0, 0.0, 0.0],
    [-91.0 / 108.0, 0.0, 0.0, 23.0 / 108.0, -976.0 / 135.0, 311.0 / 54.0, -19.0 / 60.0, 17.0 / 6.0, -1.0 / 12.0, 0.0, 0.0, 0.0],
    [
        2383.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -301.0 / 82.0, 2133.0 / 4100.0, 45.0 / 82.0,
        45.0 / 164.0, 18.0 / 41.0, 0.0, 0.0,
    ],
    [3.0 / 205.0, 0.0, 0.0, 0.0, 0.0, -6.0 / 41.0, -3.0 / 205.0, -3.0 / 41.0, 3.0 / 41.0, 6.0 / 41.0, 0.0, 0.0],
    [
        -1777.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -289.0 / 82.0, 2193.0 / 4100.0, 51.0 / 82.0,
        33.0 / 164.0, 12.0 / 41.0, 0.0, 1.0,
    ],
];

/// Eighth-order weights; these advance the solution.
pub const B8: [f64; STAGES] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

/// Seventh-order weights.
pub const B7: [f64; STAGES] = [
    41.0 / 840.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    41.0 / 840.0,
    0.0,
    0.0,
];

/// The two solutions differ only by `(41/840) h (k0 + k10 - k11 - k12)`.
pub const ERROR_WEIGHT: f64 = 41.0 / 840.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_sums_match_nodes() {
        for i in 0..STAGES {
            let s: f64 = A[i].iter().sum();
            assert!((s - C[i]).abs() < 1e-14, "row {i}");
        }
    }

    #[test]
    fn weights_are_consistent() {
        assert!((B8.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((B7.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..STAGES {
            let d = B7[i] - B8[i];
            let expected = match i {
                0 | 10 => ERROR_WEIGHT,
                11 | 12 => -ERROR_WEIGHT,
                _ => 0.0,
            };
            assert!((d - expected).abs() < 1e-17);
        }
    }

    #[test]
    fn quadrature_conditions() {
        // Σ b_i c_i^(q-1) = 1/q up to the order of each solution.
        for q in 1..=8 {
            let s8: f64 = (0..STAGES).map(|i| B8[i] * C[i].powi(q - 1)).sum();
            assert!((s8 - 1.0 / q as f64).abs() < 1e-14, "q = {q}");
        }
        for q in 1..=7 {
            let s7: f64 = (0..STAGES).map(|i| B7[i] * C[i].powi(q - 1)).sum();
            assert!((s7 - 1.0 / q as f64).abs() < 1e-14, "q = {q}");
        }
    }
}
