use serde::{Deserialize, Serialize};

/// Fraction of samples dropped at each end before correlating.
pub const EDGE_FRACTION: f64 = 0.1;

/// Relation between the quadrature envelope and the in-phase derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DragReport {
    /// Pearson correlation of `u_y` with `du_x/dt` over the interior;
    /// `None` when either series is constant there.
    pub correlation: Option<f64>,
    /// Least-squares `c` in `u_y ~ c du_x/dt`.
    pub factor: Option<f64>,
    /// `-1/delta_1` for comparison (ns).
    pub minus_inverse_anharmonicity: f64,
    /// `-delta_1` for comparison (rad/ns).
    pub minus_anharmonicity: f64,
    /// Interior sample range `[start, end)`.
    pub interior: (usize, usize),
    pub note: Option<String>,
}

/// Central-difference derivative, one-sided at the ends.
pub fn derivative(u: &[f64], dt: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|k| match (k, n) {
            (_, 0 | 1) => 0.0,
            (0, _) => (u[1] - u[0]) / dt,
            (k, n) if k == n - 1 => (u[k] - u[k - 1]) / dt,
            (k, _) => (u[k + 1] - u[k - 1]) / (2.0 * dt),
        })
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let scale = x.iter().chain(y).fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = (1e-14 * scale).powi(2) * n;
    if sxx <= floor || syy <= floor {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Correlates `u_y` with the derivative of `u_x` away from the pulse edges.
/// `delta` is the anharmonicity of the driven transmon in rad/ns.
pub fn drag_analysis(ux: &[f64], uy: &[f64], dt: f64, delta: f64) -> DragReport {
    let n = ux.len().min(uy.len());
    let edge = (EDGE_FRACTION * n as f64).ceil() as usize;
    let (lo, hi) = (edge.min(n), n.saturating_sub(edge).max(edge.min(n)));
    let dx = derivative(&ux[..n], dt);
    let (x, y) = (&dx[lo..hi], &uy[lo..hi]);
    let correlation = pearson(x, y);
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let factor = (sxx > 0.0).then(|| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx);
    let note = correlation
        .is_none()
        .then(|| "correlation undefined: an envelope is constant on the interior".to_string());
    DragReport {
        correlation,
        factor,
        minus_inverse_anharmonicity: -1.0 / delta,
        minus_anharmonicity: -delta,
        interior: (lo, hi),
        note,
    }
}
