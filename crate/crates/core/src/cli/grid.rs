use crate::experiments::{linear_grid, log_grid};
use crate::{Error, Result};

/// Parses a grid specification:
///
/// * `min:max:points` (linear) or `min:max:points:log`;
/// * `inf`, selecting closed-form infinite-time limits;
/// * a comma-separated list such as `0.5,1,inf`.
///
/// The result is sorted and must be strictly increasing.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let bad = |why: &str| {
        Error::arg(format!("malformed grid {spec:?}: {why}; expected min:max:points[:log], inf, or a comma-separated list"))
    };
    if spec.is_empty() {
        return Err(bad("empty"));
    }
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad("wrong number of fields"));
        }
        let min: f64 = parts[0].parse().map_err(|_| bad("min is not a number"))?;
        let max: f64 = parts[1].parse().map_err(|_| bad("max is not a number"))?;
        let points: usize = parts[2]
            .parse()
            .map_err(|_| bad("points is not a positive integer"))?;
        match parts.get(3).map(|s| s.to_ascii_lowercase()) {
            None => linear_grid(min, max, points)?,
            Some(s) if s == "log" => log_grid(min, max, points)?,
            Some(s) if s == "lin" || s == "linear" => linear_grid(min, max, points)?,
            Some(_) => return Err(bad("the fourth field must be log or lin")),
        }
    } else {
        spec.split(',')
            .map(|s| parse_value(s.trim()).ok_or_else(|| bad(&format!("{s:?} is not a number"))))
            .collect::<Result<Vec<f64>>>()?
    };
    if values.iter().any(|v| v.is_nan()) {
        return Err(bad("NaN is not allowed"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("values must be strictly increasing"));
    }
    Ok(values)
}

fn parse_value(s: &str) -> Option<f64> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        _ => s.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse_grid("inf").unwrap(), vec![f64::INFINITY]);
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(
            parse_grid("0.5, 1,inf").unwrap(),
            vec![0.5, 1.0, f64::INFINITY]
        );
        let g = parse_grid("1e-3:1e3:7:log").unwrap();
        assert_eq!(g.len(), 7);
        for bad in [
            "",
            "1:2",
            "1:2:x",
            "1:2:3:cubic",
            "2,1",
            "a",
            "0:1:3:log",
            "1:1:3",
            "1:2:3:4:5",
            "nan",
        ] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }
}
