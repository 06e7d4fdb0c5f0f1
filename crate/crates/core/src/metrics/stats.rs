use super::MetricsError;

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// 1-based ranks with ties given the mean of the ranks they span.
pub fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; NaN when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(x, y)?;
    if x.len() < 2 {
        return Err(MetricsError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(f64::NAN);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank-order correlation with fractional ranks for ties. Returns
/// NaN when either input is constant.
pub fn srocc(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(x, y)?;
    pearson(&fractional_ranks(x), &fractional_ranks(y))
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(pred, truth)?;
    if pred.is_empty() {
        return Err(MetricsError::TooShort(0));
    }
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Fraction of predictions further than twice the confidence half-width
/// from the ground-truth mean.
pub fn outage_rate(pred: &[f64], truth_mean: &[f64], truth_ci_halfwidth: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(pred, truth_mean)?;
    check_lengths(pred, truth_ci_halfwidth)?;
    if pred.is_empty() {
        return Err(MetricsError::TooShort(0));
    }
    let outside = pred
        .iter()
        .zip(truth_mean)
        .zip(truth_ci_halfwidth)
        .filter(|((p, m), ci)| (*p - *m).abs() > 2.0 * *ci)
        .count();
    Ok(outside as f64 / pred.len() as f64)
}
