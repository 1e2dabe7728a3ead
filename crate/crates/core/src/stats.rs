//! Small statistics helpers shared by the experiment drivers.

/// Unweighted least-squares slope of log10(y) against log10(x).
/// Points with non-positive coordinates are rejected.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.log10()).collect();
    linear_slope(&lx, &ly)
}

pub fn linear_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Binomial standard error of a frequency estimate.
pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Total-variation distance between two count vectors, each normalized by its own total.
pub fn total_variation(a: &[u64], b: &[u64]) -> f64 {
    let ta: u64 = a.iter().sum();
    let tb: u64 = b.iter().sum();
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0);
    0.5 * (0..len)
        .map(|i| (get(a, i) as f64 / ta as f64 - get(b, i) as f64 / tb as f64).abs())
        .sum::<f64>()
}

/// Plug-in mutual information (bits) between two binary variables.
pub fn mutual_information_bits(pairs: impl IntoIterator<Item = (bool, bool)>) -> f64 {
    let mut c = [[0f64; 2]; 2];
    let mut n = 0f64;
    for (a, b) in pairs {
        c[a as usize][b as usize] += 1.0;
        n += 1.0;
    }
    if n == 0.0 {
        return 0.0;
    }
    let pa = [(c[0][0] + c[0][1]) / n, (c[1][0] + c[1][1]) / n];
    let pb = [(c[0][0] + c[1][0]) / n, (c[0][1] + c[1][1]) / n];
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let p = c[a][b] / n;
            if p > 0.0 {
                mi += p * (p / (pa[a] * pb[b])).log2();
            }
        }
    }
    mi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [0.01, 0.02, 0.05, 0.1];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&xs, &[0.0, 1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn tv_and_mi_limits() {
        assert_eq!(total_variation(&[5, 5], &[1, 1]), 0.0);
        assert_eq!(total_variation(&[5, 0], &[0, 7]), 1.0);
        let perfect = (0..1000).map(|i| (i % 2 == 0, i % 2 == 0));
        assert!((mutual_information_bits(perfect) - 1.0).abs() < 1e-12);
        let indep = (0..1000).map(|i| (i % 2 == 0, (i / 2) % 2 == 0));
        assert!(mutual_information_bits(indep).abs() < 1e-12);
    }
}
