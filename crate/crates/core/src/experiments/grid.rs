use crate::{Error, Result};

/// `points` values from `min` to `max`, evenly spaced.
pub fn linear_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    check(min, max, points)?;
    if points == 1 {
        return Ok(vec![min]);
    }
    let step = (max - min) / (points - 1) as f64;
    let mut v: Vec<f64> = (0..points).map(|k| min + step * k as f64).collect();
    v[points - 1] = max;
    Ok(v)
}

/// `points` values from `min` to `max`, evenly spaced in `log10`.
pub fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    check(min, max, points)?;
    if min <= 0.0 {
        return Err(Error::arg(format!(
            "a log grid needs a positive minimum, got {min}"
        )));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.log10(), max.log10());
    let step = (b - a) / (points - 1) as f64;
    let mut v: Vec<f64> = (0..points)
        .map(|k| 10f64.powf(a + step * k as f64))
        .collect();
    v[0] = min;
    v[points - 1] = max;
    Ok(v)
}

fn check(min: f64, max: f64, points: usize) -> Result<()> {
    if points == 0 {
        return Err(Error::arg("a grid needs at least one point"));
    }
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::arg("grid bounds must be finite"));
    }
    if max < min || (points > 1 && max == min) {
        return Err(Error::arg(format!("grid needs min < max, got {min}:{max}")));
    }
    Ok(())
}

/// Errors unless `values` is non-empty and strictly increasing.
pub fn check_sorted(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::arg(format!("{name} grid is empty")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::arg(format!("{name} grid contains NaN")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg(format!(
            "{name} grid must be strictly increasing"
        )));
    }
    Ok(())
}
