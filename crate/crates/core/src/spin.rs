//! Collective-spin squeezing helpers shared by the exact and Wigner engines.

/// Minimum variance of the spin over directions orthogonal to the mean spin.
///
/// `cov` is the symmetrized 3×3 covariance of (S_x, S_y, S_z). Returns `None`
/// when the mean spin vanishes.
pub fn min_orthogonal_variance(mean: [f64; 3], cov: [[f64; 3]; 3]) -> Option<f64> {
    let norm = dot(mean, mean).sqrt();
    if !(norm > 0.0) {
        return None;
    }
    let n = [mean[0] / norm, mean[1] / norm, mean[2] / norm];
    // pick the axis least aligned with n to seed the orthogonal frame
    let seed = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        [1.0, 0.0, 0.0]
    } else if n[1].abs() <= n[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = normalize(cross(n, seed));
    let e2 = cross(n, e1);
    let q = |u: [f64; 3], v: [f64; 3]| -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += u[i] * cov[i][j] * v[j];
            }
        }
        s
    };
    let a = q(e1, e1);
    let b = q(e1, e2);
    let d = q(e2, e2);
    let half_trace = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    Some(half_trace - disc)
}

/// ξ² = N ΔS²_min / |⟨S⟩|².
pub fn xi_squared(total_number: f64, mean: [f64; 3], cov: [[f64; 3]; 3]) -> Option<f64> {
    let m2 = dot(mean, mean);
    min_orthogonal_variance(mean, cov).map(|v| total_number * v / m2)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}
