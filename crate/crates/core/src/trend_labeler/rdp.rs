//! Ramer–Douglas–Peucker polyline simplification.

/// Perpendicular distance from `p` to the infinite line through `a` and `b`
/// (or to `a` itself when the two coincide).
pub fn perpendicular_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return (p.0 - a.0).hypot(p.1 - a.1);
    }
    ((p.0 - a.0) * dy - (p.1 - a.1) * dx).abs() / len
}

/// Indices of the points kept by RDP with tolerance `epsilon`. The first and
/// last index are always kept; a span is split at its farthest interior point
/// (first one on ties) only while that distance exceeds `epsilon`.
pub fn rdp_indices(xs: &[f64], ys: &[f64], epsilon: f64) -> Vec<usize> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 3 {
        return (0..n).collect();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let a = (xs[lo], ys[lo]);
        let b = (xs[hi], ys[hi]);
        let mut far = (lo, -1.0);
        for i in lo + 1..hi {
            let d = perpendicular_distance((xs[i], ys[i]), a, b);
            if d > far.1 {
                far = (i, d);
            }
        }
        if far.1 > epsilon {
            keep[far.0] = true;
            stack.push((far.0, hi));
            stack.push((lo, far.0));
        }
    }
    keep.iter()
        .enumerate()
        .filter_map(|(i, k)| k.then_some(i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_collapses() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 0.5, 1.0];
        for eps in [1e-9, 0.03, 0.2] {
            assert_eq!(rdp_indices(&xs, &ys, eps), vec![0, 2]);
        }
    }

    #[test]
    fn short_inputs_pass_through() {
        assert_eq!(rdp_indices(&[0.0], &[1.0], 0.1), vec![0]);
        assert_eq!(rdp_indices(&[0.0, 1.0], &[1.0, 0.0], 0.1), vec![0, 1]);
    }

    #[test]
    fn distance_to_line() {
        assert!((perpendicular_distance((1.0, 1.0), (0.0, 0.0), (2.0, 0.0)) - 1.0).abs() < 1e-15);
        assert_eq!(perpendicular_distance((3.0, 4.0), (0.0, 0.0), (0.0, 0.0)), 5.0);
    }
}
