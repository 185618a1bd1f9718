//! Atom-number scaling: points and a least-squares line `N' = a N + b`.

use std::io::Read;

use rydwire::graphs::{scaling_point, ScalingRecord};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Reads `label,n,n_prime` rows.
pub fn read_points<R: Read>(input: R) -> Result<Vec<ScalingRecord>, CliError> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let r: ScalingRecord = row?;
        out.push(scaling_point(r.label, r.n, r.n_prime)?);
    }
    Ok(out)
}

pub fn points_csv(points: &[ScalingRecord]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Points(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Needs two distinct `N`.
pub fn fit(points: &[ScalingRecord]) -> Result<ScalingFit, CliError> {
    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.n as f64).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.n_prime as f64).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.n as f64 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.n as f64 - mean_x) * (p.n_prime as f64 - mean_y)).sum();
    if points.is_empty() || sxx == 0.0 {
        return Err(rydwire::Error::TooFewPoints.into());
    }
    let slope = sxy / sxx;
    Ok(ScalingFit { slope, intercept: mean_y - slope * mean_x, points: points.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rydwire::graphs::builtin_scaling_points;

    #[test]
    fn builtin_fit() {
        let pts = builtin_scaling_points();
        let f = fit(&pts).unwrap();
        // (4,6), (8,16), (6,18)
        assert!((f.slope - 2.5).abs() < 1e-12, "{f:?}");
        assert!((f.intercept + 5.0 / 3.0).abs() < 1e-9, "{f:?}");
    }

    #[test]
    fn repeated_point_is_too_few() {
        let pts = read_points("label,n,n_prime\na,4,6\nb,4,6\n".as_bytes()).unwrap();
        assert!(matches!(fit(&pts), Err(CliError::Core(rydwire::Error::TooFewPoints))));
        assert!(fit(&[]).is_err());
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let pts = builtin_scaling_points();
        let text = points_csv(&pts).unwrap();
        assert!(text.starts_with("label,n,n_prime\n"));
        assert_eq!(read_points(text.as_bytes()).unwrap(), pts);
        assert!(read_points("label,n,n_prime\nx,5,3\n".as_bytes()).is_err());
        assert!(read_points("label,n,n_prime\nx,five,3\n".as_bytes()).is_err());
    }
}
