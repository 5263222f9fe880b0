use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub n: usize,
    pub mean: f64,
    /// Half-width of the two-sided 95% Student-t interval; zero for `n < 2`.
    pub half_width: f64,
}

impl MeanCi {
    pub fn low(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn high(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn overlaps(&self, other: &MeanCi) -> bool {
        self.low() <= other.high() && other.low() <= self.high()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

fn t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("positive degrees of freedom")
        .inverse_cdf(p)
}

pub fn mean_ci95(xs: &[f64]) -> MeanCi {
    let n = xs.len();
    let m = mean(xs);
    let half_width = if n < 2 {
        0.0
    } else {
        t_quantile(0.975, (n - 1) as f64) * sample_sd(xs) / (n as f64).sqrt()
    };
    MeanCi {
        n,
        mean: m,
        half_width,
    }
}

/// One-sided paired t-test of `mean(a - b) > 0`; returns the p-value.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    if n < 2 {
        return 1.0;
    }
    let m = mean(&d);
    let sd = sample_sd(&d);
    if sd == 0.0 {
        return if m > 0.0 { 0.0 } else { 1.0 };
    }
    let t = m / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("n >= 2");
    1.0 - dist.cdf(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_matches_hand_computation() {
        // mean 3, sd sqrt(2.5), t(0.975, 4) = 2.776445
        let ci = mean_ci95(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(ci.mean, 3.0);
        assert!((ci.half_width - 2.776445 * 2.5f64.sqrt() / 5f64.sqrt()).abs() < 1e-5);
        assert_eq!(mean_ci95(&[7.0]).half_width, 0.0);
    }

    #[test]
    fn paired_test_direction() {
        let a = [10.0, 11.0, 12.0, 13.0, 12.5];
        let b = [9.0, 9.5, 11.0, 12.0, 11.0];
        assert!(paired_t_test(&a, &b) < 0.01);
        assert!(paired_t_test(&b, &a) > 0.99);
        assert_eq!(paired_t_test(&[2.0, 2.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn overlap() {
        let a = MeanCi { n: 3, mean: 1.0, half_width: 0.5 };
        let b = MeanCi { n: 3, mean: 2.0, half_width: 0.6 };
        let c = MeanCi { n: 3, mean: 3.0, half_width: 0.1 };
        assert!(a.overlaps(&b) && b.overlaps(&a));
        assert!(!a.overlaps(&c));
    }
}
