//! Least-squares fits in log-log coordinates.

use serde::Serialize;

/// Fitted line log y = slope·log x + intercept with the RMS residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Fits log|y| against log x. Returns `None` with fewer than two points or
/// when some y is zero or non-finite.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<LogFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if ys.iter().any(|y| !(y.abs() > 0.0 && y.is_finite())) || xs.iter().any(|x| !(*x > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    linear_fit(&lx, &ly)
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LogFit> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Some(LogFit { slope, intercept, residual: (ss / n).sqrt() })
}

/// Fit over all points; with at least six points, refit without the two
/// largest x and keep that fit when its residual is smaller. Returns the fit
/// and the number of points used (taken from the small-x end).
pub fn ladder_fit(xs: &[f64], ys: &[f64]) -> Option<(LogFit, usize)> {
    let full = loglog_fit(xs, ys)?;
    if xs.len() >= 6 {
        let n = xs.len() - 2;
        if let Some(trim) = loglog_fit(&xs[..n], &ys[..n]) {
            if trim.residual < full.residual {
                return Some((trim, n));
            }
        }
    }
    Some((full, xs.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn recovers_power_laws(p in -3.0f64..3.0, c in 0.1f64..10.0) {
            let xs: Vec<f64> = (0..6).map(|j| 0.01 * 2f64.powi(j)).collect();
            let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(p)).collect();
            let (f, _) = ladder_fit(&xs, &ys).unwrap();
            prop_assert!((f.slope - p).abs() < 1e-9);
            prop_assert!(f.residual < 1e-9);
        }
    }

    #[test]
    fn zeros_are_not_fitted() {
        assert!(loglog_fit(&[1.0, 2.0], &[0.0, 1.0]).is_none());
        assert!(loglog_fit(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn trims_when_the_top_bends() {
        let xs: Vec<f64> = (0..6).map(|j| 2f64.powi(j)).collect();
        let mut ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        ys[5] = 1.0;
        let (f, n) = ladder_fit(&xs, &ys).unwrap();
        assert_eq!(n, 4);
        assert!((f.slope - 2.0).abs() < 1e-12);
    }
}
