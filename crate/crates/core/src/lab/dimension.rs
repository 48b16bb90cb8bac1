use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::SimParamsRecord;
use crate::spectral::{Sobolev, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub params: Option<SimParamsRecord>,
    pub seeds: Vec<u64>,
    pub samples: usize,
    /// Number of projection coordinates (0 for raw point clouds).
    pub rank: usize,
    pub s: f64,
    pub scales: Vec<f64>,
    /// Occupied boxes of side `ε` per scale.
    pub raw_counts: Vec<usize>,
    /// Running maximum of `raw_counts` towards small `ε`.
    pub counts: Vec<usize>,
    /// Least-squares slope of `log N` against `−log ε`.
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// `slope ± 2 se`
    pub band: [f64; 2],
    /// All samples coincide.
    pub degenerate: bool,
}

/// Coordinates of each sample on the `rank` lowest real degrees of freedom
/// (modes by increasing eigenvalue, then component, then real/imaginary
/// part), weighted by `√2 μ^{s/2}` so that distances are `‖A^{s/2}·‖`
/// restricted to the projection.
pub fn project_modes(samples: &[SpectralField], s: Sobolev, rank: usize) -> Result<Vec<Vec<f64>>> {
    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    let lat = first.lattice();
    if samples.iter().any(|u| !u.lattice().same_as(lat)) {
        return Err(Error::LatticeMismatch("samples live on different lattices".into()));
    }
    let mu = lat.eigenvalues();
    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.sort_by(|&a, &b| mu[a].total_cmp(&mu[b]));
    let coords: Vec<(usize, usize, bool, f64)> = order
        .iter()
        .flat_map(|&m| {
            let w = 2f64.sqrt() * mu[m].powf(s.0 / 2.0);
            (0..3).flat_map(move |c| [(m, c, false, w), (m, c, true, w)])
        })
        .take(rank)
        .collect();
    Ok(samples
        .iter()
        .map(|u| {
            coords
                .iter()
                .map(|&(m, c, im, w)| {
                    let x = u.coeffs()[m][c];
                    w * if im { x.im } else { x.re }
                })
                .collect()
        })
        .collect())
}

/// Box-counting dimension of samples projected with [`project_modes`].
pub fn box_counting_dimension(
    samples: &[SpectralField],
    s: Sobolev,
    scales: &[f64],
    rank: usize,
) -> Result<DimensionReport> {
    if rank == 0 {
        return Err(Error::config("projection rank must be positive"));
    }
    let pts = project_modes(samples, s, rank)?;
    let mut r = box_counting_points(&pts, scales)?;
    r.rank = rank;
    r.s = s.0;
    Ok(r)
}

/// Box-counting dimension of a point cloud: boxes of side `ε` anchored at the
/// origin, slope fitted over all scales.
pub fn box_counting_points(points: &[Vec<f64>], scales: &[f64]) -> Result<DimensionReport> {
    let mut bad = Vec::new();
    if points.len() < 2 {
        bad.push(format!("at least 2 samples are required (got {})", points.len()));
    }
    if scales.len() < 2 {
        bad.push("at least 2 scales are required".to_string());
    }
    if scales.iter().any(|&e| !(e > 0.0 && e.is_finite())) || scales.windows(2).any(|w| w[1] >= w[0]) {
        bad.push("scales must be positive and strictly decreasing".to_string());
    }
    if !bad.is_empty() {
        return Err(Error::Config(bad));
    }
    let degenerate = points.iter().all(|p| p == &points[0]);
    let raw_counts: Vec<usize> = scales
        .iter()
        .map(|&eps| {
            points
                .iter()
                .map(|p| p.iter().map(|x| (x / eps).floor() as i64).collect::<Vec<_>>())
                .collect::<HashSet<_>>()
                .len()
        })
        .collect();
    let mut counts = raw_counts.clone();
    for k in 1..counts.len() {
        counts[k] = counts[k].max(counts[k - 1]);
    }
    let (slope, intercept, se) = if degenerate {
        (0.0, 0.0, 0.0)
    } else {
        let x: Vec<f64> = scales.iter().map(|e| -e.ln()).collect();
        let y: Vec<f64> = counts.iter().map(|&n| (n as f64).ln()).collect();
        fit(&x, &y)
    };
    Ok(DimensionReport {
        params: None,
        seeds: Vec::new(),
        samples: points.len(),
        rank: 0,
        s: 0.0,
        scales: scales.to_vec(),
        raw_counts,
        counts,
        slope,
        intercept,
        slope_se: se,
        band: [slope - 2.0 * se, slope + 2.0 * se],
        degenerate,
    })
}

fn fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if x.len() > 2 {
        let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Complex64, Lattice};
    use std::f64::consts::PI;

    fn dyadic(from: f64, k: usize) -> Vec<f64> {
        (0..k).map(|i| from * 0.5f64.powi(i as i32)).collect()
    }

    #[test]
    fn circle_has_dimension_one() {
        let pts: Vec<Vec<f64>> = (0..20000)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 20000.0;
                vec![t.cos(), t.sin(), 0.3]
            })
            .collect();
        let r = box_counting_points(&pts, &dyadic(0.25, 6)).unwrap();
        assert!((r.slope - 1.0).abs() < 0.15, "{r:?}");
    }

    #[test]
    fn flat_torus_has_dimension_two() {
        let n = 200;
        let pts: Vec<Vec<f64>> = (0..n * n)
            .map(|k| {
                let (a, b) = ((k / n) as f64, (k % n) as f64);
                let (t, u) = (2.0 * PI * a / n as f64, 2.0 * PI * b / n as f64);
                vec![t.cos(), t.sin(), u.cos(), u.sin()]
            })
            .collect();
        let scales: Vec<f64> = (0..6).map(|i| 0.5 * 2f64.powf(-0.5 * i as f64)).collect();
        let r = box_counting_points(&pts, &scales).unwrap();
        assert!((r.slope - 2.0).abs() < 0.2, "{r:?}");
    }

    #[test]
    fn repeated_sample_is_degenerate() {
        let lat = Lattice::periodic(2).unwrap();
        let u = SpectralField::single_pair(&lat, [1, 1, 0], [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let r = box_counting_dimension(&vec![u; 5], Sobolev::H, &dyadic(1.0, 4), 24).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.slope, 0.0);
        assert!(r.counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn counts_are_monotone_and_scales_validated() {
        let pts = vec![vec![0.0, 0.0], vec![0.9, 0.1], vec![0.1, 0.5]];
        let r = box_counting_points(&pts, &[2.0, 1.0, 0.5, 0.25]).unwrap();
        assert!(r.counts.windows(2).all(|w| w[1] >= w[0]));
        assert!(box_counting_points(&pts, &[0.5, 1.0]).is_err());
        assert!(box_counting_points(&pts[..1], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn projection_weights_follow_the_metric() {
        let lat = Lattice::periodic(2).unwrap();
        let z = Complex64::new(0.0, 0.0);
        let u = SpectralField::single_pair(&lat, [1, 0, 0], [z, Complex64::new(0.3, -0.4), z]);
        let p = project_modes(std::slice::from_ref(&u), Sobolev::H52, 24).unwrap();
        let n: f64 = p[0].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - u.sobolev_norm(Sobolev::H52)).abs() < 1e-14);
    }
}
