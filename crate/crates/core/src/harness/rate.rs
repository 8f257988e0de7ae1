use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// `(ln x, ln y)` pairs in input order.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub half_width: f64,
}

impl RateFit {
    pub fn covers(&self, slope: f64) -> bool {
        (self.slope - slope).abs() <= self.half_width
    }

    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Fits `y ~ C x^slope` by ordinary least squares in log-log coordinates.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!("rate fit needs at least 3 points, got {}", pairs.len())));
    }
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs finite positive pairs, got ({x}, {y})"
        )));
    }
    let points: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("rate fit needs at least two distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).max(0.0) } else { 1.0 };
    let dof = n - 2.0;
    let half_width = if dof > 0.0 {
        let t = StudentsT::new(0.0, 1.0, dof)
            .map_err(|e| Error::Numerical(format!("t distribution: {e}")))?
            .inverse_cdf(0.975);
        t * (sse / dof / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        points,
        slope,
        intercept,
        r_squared,
        half_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_power_laws() {
        let fit = fit_rate(&[(1.0, 3.0), (2.0, 12.0), (4.0, 48.0)]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.predict(3.0) - 27.0).abs() < 1e-9);
        let fit = fit_rate(&[(1e-4, 1e-2), (1e-3, 1e-3f64.sqrt()), (1e-2, 0.1)]).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noisy_regression_band_covers_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pairs: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let x = 10f64.powf(-4.0 + 3.0 * i as f64 / 11.0);
                let noise = 1.0 + 0.05 * (2.0 * rng.gen::<f64>() - 1.0);
                (x, 2.0 * x.powf(0.7) * noise)
            })
            .collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.slope - 0.7).abs() <= 0.05, "{}", fit.slope);
        assert!(fit.covers(0.7), "{} +- {}", fit.slope, fit.half_width);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (-2.0, 1.0), (3.0, 1.0)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
    }
}
