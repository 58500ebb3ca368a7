//! Composite Simpson quadrature on uniform grids.

/// Integral of uniformly-sampled values with spacing `h`. Composite Simpson;
/// an odd interval count ends with a 3/8 panel.
pub fn simpson(samples: &[f64], h: f64) -> f64 {
    let n = samples.len();
    assert!(n >= 2, "need at least two samples");
    if n == 2 {
        return 0.5 * h * (samples[0] + samples[1]);
    }
    let intervals = n - 1;
    let (even_part, rest) = if intervals.is_multiple_of(2) {
        (intervals, 0)
    } else if intervals >= 3 {
        (intervals - 3, 3)
    } else {
        (0, intervals)
    };
    let mut acc = 0.0;
    let mut k = 0;
    while k + 2 <= even_part {
        acc += h / 3.0 * (samples[k] + 4.0 * samples[k + 1] + samples[k + 2]);
        k += 2;
    }
    if rest == 3 {
        let s = &samples[even_part..];
        acc += 3.0 * h / 8.0 * (s[0] + 3.0 * s[1] + 3.0 * s[2] + s[3]);
    }
    acc
}

/// Running integral F with F[0] = 0 at every sample point. Even nodes use
/// composite Simpson; odd nodes add a parabolic half-panel, so the result
/// stays fourth-order accurate throughout.
pub fn cumulative_simpson(samples: &[f64], h: f64) -> Vec<f64> {
    let n = samples.len();
    assert!(n >= 2, "need at least two samples");
    let mut out = vec![0.0; n];
    if n == 2 {
        out[1] = 0.5 * h * (samples[0] + samples[1]);
        return out;
    }
    for k in 1..n {
        if k.is_multiple_of(2) {
            out[k] = out[k - 2] + h / 3.0 * (samples[k - 2] + 4.0 * samples[k - 1] + samples[k]);
        } else if k + 1 < n {
            // integral over [t_{k-1}, t_k] of the parabola through k-1, k, k+1
            out[k] = out[k - 1]
                + h / 12.0 * (5.0 * samples[k - 1] + 8.0 * samples[k] - samples[k + 1]);
        } else {
            // last node, odd index: parabola through the final three samples
            out[k] = out[k - 1]
                + h / 12.0 * (-samples[k - 2] + 8.0 * samples[k - 1] + 5.0 * samples[k]);
        }
    }
    out
}
