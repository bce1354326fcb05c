//! Locating extrema and widths on sampled curves.

/// Indices of interior local minima (`y[i] < y[i-1]` and `y[i] <= y[i+1]`).
pub fn local_minima(y: &[f64]) -> Vec<usize> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] < y[i - 1] && y[i] <= y[i + 1])
        .collect()
}

/// Index of the largest sample.
pub fn argmax(y: &[f64]) -> Option<usize> {
    y.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

/// Vertex of the parabola through samples `i-1, i, i+1` (any spacing).
/// Falls back to the sample itself at the ends or when the points are
/// collinear.
pub fn parabolic_vertex(x: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= x.len() {
        return (x[i], y[i]);
    }
    // work relative to the middle sample to keep GHz-scale abscissae accurate
    let (x0, x2) = (x[i - 1] - x[i], x[i + 1] - x[i]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let d0 = (y0 - y1) / x0;
    let d2 = (y2 - y1) / x2;
    let curvature = (d2 - d0) / (x2 - x0);
    if curvature == 0.0 || !curvature.is_finite() {
        return (x[i], y[i]);
    }
    let slope = d0 - curvature * x0;
    let offset = -slope / (2.0 * curvature);
    let offset = offset.clamp(x0, x2);
    (x[i] + offset, y1 + slope * offset + curvature * offset * offset)
}

/// The `count` deepest local minima, refined by parabolic interpolation and
/// returned in order of position.
pub fn deepest_minima(x: &[f64], y: &[f64], count: usize) -> Vec<(f64, f64)> {
    let mut minima = local_minima(y);
    minima.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    minima.truncate(count);
    let mut out: Vec<(f64, f64)> = minima.into_iter().map(|i| parabolic_vertex(x, y, i)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Separation between the two deepest local minima of `y`, if there are two.
pub fn doublet_separation(x: &[f64], y: &[f64]) -> Option<f64> {
    match deepest_minima(x, y, 2).as_slice() {
        [a, b] => Some(b.0 - a.0),
        _ => None,
    }
}

/// Full width of the feature around sample `peak` at `level`, interpolating
/// linearly between samples. `above` selects whether the feature is a peak
/// (values above `level` inside) or a dip.
pub fn width_at_level(x: &[f64], y: &[f64], peak: usize, level: f64, above: bool) -> Option<f64> {
    let inside = |v: f64| if above { v >= level } else { v <= level };
    if !inside(y[peak]) {
        return None;
    }
    let cross = |a: usize, b: usize| {
        let t = (level - y[a]) / (y[b] - y[a]);
        x[a] + t * (x[b] - x[a])
    };
    let mut left = peak;
    while left > 0 && inside(y[left - 1]) {
        left -= 1;
    }
    if left == 0 {
        return None;
    }
    let mut right = peak;
    while right + 1 < y.len() && inside(y[right + 1]) {
        right += 1;
    }
    if right + 1 == y.len() {
        return None;
    }
    Some(cross(right, right + 1) - cross(left - 1, left))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_of_exact_parabola() {
        let x = [1.0, 2.5, 3.0];
        let f = |t: f64| 2.0 * (t - 2.2).powi(2) + 0.5;
        let y = x.map(f);
        let (xv, yv) = parabolic_vertex(&x, &y, 1);
        assert!((xv - 2.2).abs() < 1e-12);
        assert!((yv - 0.5).abs() < 1e-12);
    }

    #[test]
    fn finds_two_minima() {
        let x: Vec<f64> = (0..401).map(|i| i as f64 * 0.01 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|t| (t * t - 1.0).powi(2)).collect();
        let sep = doublet_separation(&x, &y).unwrap();
        assert!((sep - 2.0).abs() < 1e-3);
        let single: Vec<f64> = x.iter().map(|t| t * t).collect();
        assert_eq!(doublet_separation(&x, &single), None);
    }

    #[test]
    fn lorentzian_width() {
        let x: Vec<f64> = (0..2001).map(|i| i as f64 * 0.01 - 10.0).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 / (1.0 + t * t)).collect();
        let w = width_at_level(&x, &y, 1000, 0.5, true).unwrap();
        assert!((w - 2.0).abs() < 1e-3);
        // dip
        let d: Vec<f64> = y.iter().map(|v| 1.0 - v).collect();
        let w = width_at_level(&x, &d, 1000, 0.5, false).unwrap();
        assert!((w - 2.0).abs() < 1e-3);
        // truncated at the edge
        assert_eq!(width_at_level(&x, &y, 1000, 0.001, true), None);
    }
}
