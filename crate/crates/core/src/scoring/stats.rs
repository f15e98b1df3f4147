use super::ScoringError;

/// Default agreement threshold below which a response goes to calibration.
pub const CALIBRATION_THRESHOLD: f64 = 0.65;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample Pearson correlation.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<f64, ScoringError> {
    if x.len() != y.len() {
        return Err(ScoringError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(ScoringError::InsufficientData(format!("{} paired values", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(ScoringError::InvalidInput("non-finite value".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(ScoringError::DegenerateVector);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Strictly below `threshold` means the pair disagrees.
pub fn needs_calibration(pcc: f64, threshold: f64) -> bool {
    pcc < threshold
}

/// ICC(2,1): two-way random effects, absolute agreement, single rater.
/// `table[i][j]` is rater `j`'s score for target `i`.
pub fn icc(table: &[Vec<f64>]) -> Result<f64, ScoringError> {
    let n = table.len();
    let k = table.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(ScoringError::InsufficientData(format!("{n} targets x {k} raters")));
    }
    if table.iter().any(|row| row.len() != k) {
        return Err(ScoringError::InvalidInput("ragged rating table".into()));
    }
    if table.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ScoringError::InvalidInput("non-finite value".into()));
    }
    let (nf, kf) = (n as f64, k as f64);
    let grand = table.iter().flatten().sum::<f64>() / (nf * kf);
    let row_means: Vec<f64> = table.iter().map(|r| mean(r)).collect();
    let col_means: Vec<f64> = (0..k).map(|j| table.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let ss_rows = kf * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_cols = nf * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_total: f64 = table.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_err = (ss_total - ss_rows - ss_cols).max(0.0);
    let msr = ss_rows / (nf - 1.0);
    let msc = ss_cols / (kf - 1.0);
    let mse = ss_err / ((nf - 1.0) * (kf - 1.0));
    let denom = msr + (kf - 1.0) * mse + kf * (msc - mse) / nf;
    if denom == 0.0 {
        return Err(ScoringError::DegenerateVector);
    }
    Ok((msr - mse) / denom)
}
