//! Scalar minimization used by the Chernoff-type optimizations.

/// Minimize `f` on `[lo, hi]`: coarse grid scan (which also probes the
/// endpoints, where several of our objectives take their infimum as a limit)
/// followed by golden-section refinement around the best grid point.
pub fn grid_golden_min(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid_points: usize,
    tol: f64,
) -> (f64, f64) {
    let n = grid_points.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let x = lo + step * i as f64;
        let v = f(x);
        vals.push(v);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let (x, v) = golden_min(&f, a, b, tol);
    if v < best {
        (x, v)
    } else {
        (lo + step * best_i as f64, best)
    }
}

/// Golden-section search on a unimodal function.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
        let cur = fc.min(fd);
        if (last - cur).abs() < tol && (b - a).abs() < 1e-9 {
            break;
        }
        last = cur;
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
