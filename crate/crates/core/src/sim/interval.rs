use statrs::distribution::{ContinuousCDF, Normal};

/// Wilson score interval for `count` successes out of `reps` at confidence
/// `level`.
pub fn rejection_interval(count: usize, reps: usize, level: f64) -> (f64, f64) {
    assert!(count <= reps && reps > 0, "need 0 <= count <= reps, reps > 0");
    assert!(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let n = reps as f64;
    let p = count as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_count_starts_at_zero() {
        let (lo, hi) = rejection_interval(0, 100, 0.95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }

    #[test]
    fn half_is_symmetric() {
        let (lo, hi) = rejection_interval(50, 100, 0.95);
        assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn contains_the_proportion() {
        for count in [0, 1, 7, 25, 250, 499, 500] {
            let (lo, hi) = rejection_interval(count, 500, 0.99);
            let p = count as f64 / 500.0;
            assert!(lo <= p && p <= hi);
        }
    }
}
