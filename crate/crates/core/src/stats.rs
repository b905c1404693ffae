//! Summary statistics over a kinematic series.

use std::cmp::Ordering;

/// Linear interpolation between order statistics at rank `h = (n - 1) p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty series");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Most frequent value after rounding to `decimals` places; ties go to the smallest.
pub fn rounded_mode(values: &[f64], decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    let mut keys: Vec<i64> = values.iter().map(|v| (v * scale).round() as i64).collect();
    keys.sort_unstable();
    let mut best = (keys[0], 0usize);
    let mut i = 0;
    while i < keys.len() {
        let j = keys[i..].iter().position(|k| *k != keys[i]).map_or(keys.len(), |off| i + off);
        if j - i > best.1 {
            best = (keys[i], j - i);
        }
        i = j;
    }
    best.0 as f64 / scale
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats8 {
    pub mean: f64,
    pub max: f64,
    pub mode: f64,
    pub min: f64,
    /// Population standard deviation.
    pub std: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Stats8 {
    pub const NAMES: [&'static str; 8] = ["mean", "max", "mode", "min", "std", "q1", "q2", "q3"];

    pub fn to_array(self) -> [f64; 8] {
        [self.mean, self.max, self.mode, self.min, self.std, self.q1, self.q2, self.q3]
    }
}

pub fn stats8(series: &[f64], mode_decimals: i32) -> Stats8 {
    assert!(!series.is_empty(), "statistics of an empty series");
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Stats8 {
        mean,
        max: sorted[sorted.len() - 1],
        mode: rounded_mode(series, mode_decimals),
        min: sorted[0],
        std: var.sqrt(),
        q1: quantile_sorted(&sorted, 0.25),
        q2: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series() {
        let s = stats8(&[2.5; 17], 1);
        assert_eq!(s.to_array(), [2.5, 2.5, 2.5, 2.5, 0.0, 2.5, 2.5, 2.5]);
    }

    #[test]
    fn quartiles_of_one_to_four() {
        let s = stats8(&[4.0, 1.0, 3.0, 2.0], 1);
        assert_eq!((s.q1, s.q2, s.q3), (1.75, 2.5, 3.25));
        assert_eq!((s.min, s.max, s.mean), (1.0, 4.0, 2.5));
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mode_rounds_and_prefers_smallest() {
        assert_eq!(rounded_mode(&[1.04, 0.96, 3.0, 3.01, 7.0], 1), 1.0);
        assert_eq!(rounded_mode(&[5.0, 2.0, 5.0, 2.0], 1), 2.0);
        assert_eq!(rounded_mode(&[-0.26, -0.34, 9.9], 1), -0.3);
    }
}
