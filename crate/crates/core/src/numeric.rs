//! Small numeric helpers shared across modules: compensated summation and
//! least-squares slopes.

/// Neumaier-compensated sum. Keeps the rounding error of long reductions at
/// the level of a single ulp, which the measure-mass identities rely on.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sample mean and standard error of the mean.
///
/// Returns `(mean, se)`; the standard error is 0 for a single sample.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty(), "mean of empty sample");
    let n = xs.len() as f64;
    let mean = neumaier_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = neumaier_sum(xs.iter().map(|&x| (x - mean) * (x - mean)));
    let var = ss / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ordinary least-squares fit `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points to fit a line");
    let n = x.len() as f64;
    let xbar = neumaier_sum(x.iter().copied()) / n;
    let ybar = neumaier_sum(y.iter().copied()) / n;
    let sxx = neumaier_sum(x.iter().map(|&xi| (xi - xbar) * (xi - xbar)));
    let sxy = neumaier_sum(x.iter().zip(y).map(|(&xi, &yi)| (xi - xbar) * (yi - ybar)));
    assert!(sxx > 0.0, "degenerate abscissae");
    let slope = sxy / sxx;
    (slope, ybar - slope * xbar)
}

/// Least-squares slope of a line through the origin.
pub fn slope_through_origin(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let sxy = neumaier_sum(x.iter().zip(y).map(|(&xi, &yi)| xi * yi));
    let sxx = neumaier_sum(x.iter().map(|&xi| xi * xi));
    assert!(sxx > 0.0, "degenerate abscissae");
    sxy / sxx
}

/// Slope of `ln y` against `ln x`; inputs must be strictly positive.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|&v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|&v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        // 1 + 1e-16 repeated: naive summation loses the small terms.
        let xs: Vec<f64> = std::iter::once(1.0)
            .chain(std::iter::repeat_n(1e-16, 10_000))
            .collect();
        let s = neumaier_sum(xs.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn exact_line_recovered() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|&v| 2.5 * v - 1.0).collect();
        let (m, b) = linear_fit(&x, &y);
        assert!((m - 2.5).abs() < 1e-14);
        assert!((b + 1.0).abs() < 1e-14);
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let x = [10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|&v| 3.0 / v).collect();
        assert!((loglog_slope(&x, &y) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn se_of_constant_sample_is_zero() {
        let (m, se) = mean_and_se(&[2.0, 2.0, 2.0]);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }
}
