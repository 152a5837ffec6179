use crate::series::RatioSeries;

fn window_points(series: &RatioSeries, window_s: u64) -> usize {
    ((window_s / series.grid.step_s) as usize).max(1)
}

/// Trailing mean over `(t - window_s, t]`. The first points average over the
/// shorter prefix that exists. Uses no sample after `t`.
pub fn smooth_causal(series: &RatioSeries, window_s: u64) -> RatioSeries {
    let k = window_points(series, window_s);
    let values = (0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(k);
            let w = &series.values[lo..=i];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect();
    RatioSeries::new(series.grid, values)
}

/// Centered mean over `window_s`, truncated at both ends. Looks into the
/// future, so only for offline plots.
pub fn smooth_centered(series: &RatioSeries, window_s: u64) -> RatioSeries {
    let k = window_points(series, window_s);
    let before = (k - 1) / 2;
    let after = k - 1 - before;
    let n = series.len();
    let values = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after).min(n.saturating_sub(1));
            let w = &series.values[lo..=hi];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect();
    RatioSeries::new(series.grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Grid;

    fn series(values: Vec<f64>) -> RatioSeries {
        RatioSeries::new(Grid::new(0, 60, values.len()), values)
    }

    #[test]
    fn constant_is_fixed_point() {
        let s = series(vec![0.625; 50]);
        let out = smooth_causal(&s, 1800);
        for v in out.values {
            assert!((v - 0.625).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_step_ramp() {
        // Step at index 3, window of four points.
        let s = series(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let out = smooth_causal(&s, 240);
        assert_eq!(out.values, vec![0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0]);
    }

    #[test]
    fn single_sample_window_is_identity() {
        let s = series(vec![0.1, 0.9, 0.3, 0.7]);
        assert_eq!(smooth_causal(&s, 60), s);
        assert_eq!(smooth_centered(&s, 60), s);
    }

    #[test]
    fn short_prefix_averaging() {
        let s = series(vec![1.0, 3.0, 5.0]);
        assert_eq!(smooth_causal(&s, 600).values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn centered_uses_both_sides() {
        let s = series(vec![0.0, 0.0, 3.0, 0.0, 0.0]);
        assert_eq!(
            smooth_centered(&s, 180).values,
            vec![0.0, 1.0, 1.0, 1.0, 0.0]
        );
    }
}
