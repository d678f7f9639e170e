//! Ordinary least squares on log-transformed data, for extracting decay
//! rates and scaling exponents from experiment grids.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    /// Model: y = intercept + slope·x (y is already log-transformed by the
    /// caller).
    pub slope: f64,
    pub intercept: f64,
    pub stderr_slope: f64,
    pub stderr_intercept: f64,
    pub r2: f64,
    pub n: usize,
}

/// OLS fit of y against x; refuses fewer than 4 points.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<FitResult, String> {
    if x.len() != y.len() {
        return Err("x and y lengths differ".into());
    }
    let n = x.len();
    if n < 4 {
        return Err(format!("fit needs at least 4 points, got {n}"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err("degenerate abscissa".into());
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    let dof = (n - 2).max(1) as f64;
    let sigma2 = ss_res / dof;
    let stderr_slope = (sigma2 / sxx).sqrt();
    let stderr_intercept = (sigma2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    Ok(FitResult {
        slope,
        intercept,
        stderr_slope,
        stderr_intercept,
        r2,
        n,
    })
}

/// Best exponent p for the model y = a - b·eps^{-p}, by golden-section
/// search on the OLS residual. Used to verify which power of 1/ε the decay
/// actually follows.
pub fn best_exponent(eps: &[f64], y: &[f64], p_lo: f64, p_hi: f64) -> Result<f64, String> {
    if eps.len() < 4 {
        return Err("exponent search needs at least 4 points".into());
    }
    let sse = |p: f64| -> f64 {
        let x: Vec<f64> = eps.iter().map(|e| e.powf(-p)).collect();
        match fit_line(&x, y) {
            Ok(f) => {
                let mut acc = 0.0;
                for (xi, yi) in x.iter().zip(y) {
                    let r = yi - (f.intercept + f.slope * xi);
                    acc += r * r;
                }
                acc
            }
            Err(_) => f64::INFINITY,
        }
    };
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (p_lo, p_hi);
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = sse(d);
        }
        if (b - a).abs() < 1e-6 {
            break;
        }
    }
    Ok((a + b) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_known_line() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 - 1.7 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 1.7).abs() < 1e-12);
        assert!((f.intercept - 2.5).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_small_samples() {
        assert!(fit_line(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn exponent_search_finds_half() {
        let eps = [0.02f64, 0.03, 0.05, 0.08, 0.12];
        let y: Vec<f64> = eps.iter().map(|e| 1.0 - 2.0 * e.powf(-0.5)).collect();
        let p = best_exponent(&eps, &y, 0.2, 1.2).unwrap();
        assert!((p - 0.5).abs() < 1e-3, "p = {p}");
    }
}
