use statrs::distribution::{ContinuousCDF, StudentsT};

/// Two-sided 95% Student-t quantile with `df` degrees of freedom.
pub fn t_quantile(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("df > 0")
        .inverse_cdf(0.975)
}

/// Contiguous batch boundaries of `n` items split into `batches` groups.
pub fn batch_ranges(n: usize, batches: usize) -> Vec<std::ops::Range<usize>> {
    (0..batches)
        .map(|b| (b * n / batches)..((b + 1) * n / batches))
        .collect()
}

/// Mean of per-item vectors and batch-means 95% half-widths.
///
/// `item(p, out)` adds the contribution of item `p` into `out`.
pub fn batch_means<F>(n: usize, width: usize, batches: usize, mut item: F) -> (Vec<f64>, Vec<f64>)
where
    F: FnMut(usize, &mut [f64]),
{
    let ranges = batch_ranges(n, batches);
    let mut means = vec![vec![0.0; width]; batches];
    for (b, r) in ranges.iter().enumerate() {
        for p in r.clone() {
            item(p, &mut means[b]);
        }
        let len = r.len().max(1) as f64;
        means[b].iter_mut().for_each(|v| *v /= len);
    }
    let mut mean = vec![0.0; width];
    for (b, r) in ranges.iter().enumerate() {
        for k in 0..width {
            mean[k] += means[b][k] * r.len() as f64;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n as f64);

    let bm: Vec<f64> = (0..width)
        .map(|k| means.iter().map(|m| m[k]).sum::<f64>() / batches as f64)
        .collect();
    let q = t_quantile(batches - 1);
    let half = (0..width)
        .map(|k| {
            let var = means.iter().map(|m| (m[k] - bm[k]).powi(2)).sum::<f64>() / (batches - 1) as f64;
            q * (var / batches as f64).sqrt()
        })
        .collect();
    (mean, half)
}

/// Least-squares slope and intercept of `ln y` against `ln x`, over the
/// points with positive `y`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Sample excess kurtosis `m₄/m₂² − 3` with centred moments; `None` when
/// the sample has no spread.
pub fn excess_kurtosis(x: impl Iterator<Item = f64> + Clone) -> Option<f64> {
    let n = x.clone().count() as f64;
    if n < 4.0 {
        return None;
    }
    let mean = x.clone().sum::<f64>() / n;
    let (m2, m4) = x.fold((0.0, 0.0), |(m2, m4), v| {
        let c = (v - mean) * (v - mean);
        (m2 + c, m4 + c * c)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    if m2 == 0.0 || m2 <= 1e-24 * mean * mean {
        return None;
    }
    Some(m4 / (m2 * m2) - 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_quantile_matches_tables() {
        assert!((t_quantile(19) - 2.093).abs() < 1e-3);
        assert!((t_quantile(1000) - 1.962).abs() < 1e-3);
    }

    #[test]
    fn batches_cover_range() {
        let r = batch_ranges(103, 20);
        assert_eq!(r[0].start, 0);
        assert_eq!(r.last().unwrap().end, 103);
        assert!(r.windows(2).all(|w| w[0].end == w[1].start));
    }

    #[test]
    fn batch_mean_of_constant_has_zero_width() {
        let (m, h) = batch_means(100, 2, 10, |_, o| {
            o[0] += 3.0;
            o[1] += -1.0;
        });
        assert_eq!(m, vec![3.0, -1.0]);
        assert_eq!(h, vec![0.0, 0.0]);
    }

    #[test]
    fn loglog_recovers_power() {
        let x = [1.0, 10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|t: &f64| 3.0 * t.powf(-0.5)).collect();
        let (s, c) = loglog_fit(&x, &y).unwrap();
        assert!((s + 0.5).abs() < 1e-12 && (c - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn kurtosis_of_two_point_law_is_minus_two() {
        let v = [1.0, -1.0, 1.0, -1.0];
        assert!((excess_kurtosis(v.iter().copied()).unwrap() + 2.0).abs() < 1e-14);
        assert!(excess_kurtosis([2.0; 8].iter().copied()).is_none());
    }
}
