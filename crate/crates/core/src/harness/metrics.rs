//! Relative error, logarithmic sampling and CPU time.

/// `eᵏ = (v(xᵏ) − v_min)/(v(x⁰) − v_min)` for one series.
///
/// Returns all zeros with `degenerate = true` when `v(x⁰) = v_min`.
pub fn relative_error(values: &[f64], v0: f64, v_min: f64) -> (Vec<f64>, bool) {
    let span = v0 - v_min;
    if !(span > 0.0) {
        return (vec![0.0; values.len()], true);
    }
    (values.iter().map(|v| (v - v_min) / span).collect(), false)
}

/// Iterations `1, 2, …, 10, 20, …, 100, 200, …` up to `max`.
pub fn log_samples(max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut step = 1;
    let mut k = 1;
    while k <= max {
        out.push(k);
        if k == 10 * step {
            step *= 10;
        }
        k += step;
    }
    out
}

pub fn is_log_sample(k: usize) -> bool {
    if k == 0 {
        return false;
    }
    let mut step = 1;
    while k > 10 * step {
        step *= 10;
    }
    k % step == 0
}

/// CPU time of the whole process, summed over threads.
pub fn process_cpu_seconds() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid out-pointer and the clock id is a constant.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn log_log_slope(points: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.into_iter().filter(|&(x, y)| x > 0.0 && y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_endpoints() {
        let (e, degenerate) = relative_error(&[3.0, 2.0, 1.0], 3.0, 1.0);
        assert_eq!(e, vec![1.0, 0.5, 0.0]);
        assert!(!degenerate);
        let (e, degenerate) = relative_error(&[1.0, 1.0], 1.0, 1.0);
        assert_eq!(e, vec![0.0, 0.0]);
        assert!(degenerate);
    }

    #[test]
    fn sampling_pattern() {
        assert_eq!(log_samples(35), vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30]);
        let s = log_samples(4000);
        assert_eq!(&s[s.len() - 5..], &[900, 1000, 2000, 3000, 4000]);
        for k in 1..=4000 {
            assert_eq!(is_log_sample(k), s.contains(&k), "{k}");
        }
    }

    #[test]
    fn slope_of_power_law() {
        let s = log_log_slope((1..100).map(|k| (k as f64, 3.0 / k as f64))).unwrap();
        assert!((s + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cpu_clock_advances() {
        let t0 = process_cpu_seconds();
        let mut x = 0.0f64;
        for i in 0..2_000_000 {
            x += (i as f64).sqrt();
        }
        assert!(x > 0.0);
        assert!(process_cpu_seconds() > t0);
    }
}
