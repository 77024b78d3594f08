use nalgebra::DMatrix;

/// Bartlett bandwidth `floor(4 (m / 100)^(2/9))`.
pub fn hac_lag(m: usize) -> usize {
    (4.0 * (m as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Long-run covariance of the rows of `g` (observations in rows) with
/// Bartlett weights `1 - j / (lag + 1)`. Rows are demeaned first.
pub fn hac_covariance(g: &DMatrix<f64>, lag: usize) -> DMatrix<f64> {
    let n = g.nrows();
    let k = g.ncols();
    let mean = g.row_mean();
    let mut centered = g.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let mut s = centered.transpose() * &centered / n as f64;
    for j in 1..=lag.min(n.saturating_sub(1)) {
        let w = 1.0 - j as f64 / (lag as f64 + 1.0);
        let head = centered.rows(j, n - j);
        let tail = centered.rows(0, n - j);
        let gamma_j = head.transpose() * tail / n as f64;
        s += (&gamma_j + gamma_j.transpose()) * w;
    }
    debug_assert_eq!(s.nrows(), k);
    s
}
