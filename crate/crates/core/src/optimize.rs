//! One-dimensional search routines shared by the calibration, likelihood and
//! kernel-difference code.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximiser of `f` on `[a, b]`, stopping when
/// the bracket is shorter than `tol`. Returns `(x, f(x))`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // keep the best point seen at the end of the search
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .filter(|(_, v)| !v.is_nan())
        .fold((x, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_max(|t| -f(t), a, b, tol);
    (x, -v)
}

/// `n` points spaced evenly in log scale over `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Result of a grid scan followed by golden-section refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanResult {
    pub x: f64,
    pub value: f64,
    /// The best grid value sat at one end of the grid.
    pub at_boundary: bool,
}

/// Maximises `f` over a sorted grid, then refines by golden section on the
/// bracket formed by the neighbours of the best grid point. Non-finite values
/// are treated as `-inf`.
pub fn scan_then_golden_max<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], tol: f64) -> ScanResult {
    assert!(grid.len() >= 2);
    let clean = |v: f64| if v.is_finite() { v } else { f64::NEG_INFINITY };
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        let v = clean(f(x));
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    let last = grid.len() - 1;
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(last)];
    let (x, v) = golden_max(|t| clean(f(t)), lo, hi, tol);
    let (x, value) = if v >= best_val { (x, v) } else { (grid[best], best_val) };
    ScanResult {
        x,
        value,
        at_boundary: best == 0 || best == last,
    }
}

pub fn scan_then_golden_min<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], tol: f64) -> ScanResult {
    let r = scan_then_golden_max(|t| -f(t), grid, tol);
    ScanResult {
        value: -r.value,
        ..r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_quadratic_peak() {
        let (x, v) = golden_max(|t| -(t - 0.3).powi(2) + 2.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scan_handles_multimodal() {
        // local max at 1, global at 4
        let f = |t: f64| (-(t - 1.0).powi(2)).exp() + 2.0 * (-(t - 4.0).powi(2)).exp();
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.06).collect();
        let r = scan_then_golden_max(f, &grid, 1e-9);
        assert!((r.x - 4.0).abs() < 1e-3);
        assert!(!r.at_boundary);
    }

    #[test]
    fn boundary_flag() {
        let r = scan_then_golden_min(|t| t, &log_space(1.0, 10.0, 20), 1e-6);
        assert!(r.at_boundary);
        assert!((r.x - 1.0).abs() < 1e-5);
    }
}
