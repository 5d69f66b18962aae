//! Independent time-domain integration of the seven-level rate equations.
//!
//! This is a verification route only: the simulator itself never integrates
//! in time. It is used to check that the algebraic steady state is the
//! long-time limit of the dynamics.

use crate::seven_level::{Matrix7, Vector7, N_LEVELS};

fn derivative(k: &Matrix7, n: &Vector7) -> Vector7 {
    let mut d = Vector7::zeros();
    for i in 0..N_LEVELS {
        let mut acc = 0.0;
        for j in 0..N_LEVELS {
            if j != i {
                acc += k[(j, i)] * n[j] - k[(i, j)] * n[i];
            }
        }
        d[i] = acc;
    }
    d
}

/// Integrate `dn_i/dt = sum_j (k_ji n_j - k_ij n_i)` from `n0` over
/// `horizon` seconds with classical RK4. `k` must already contain any MW
/// rates. The step is half the inverse of the largest total outflow, which
/// keeps every mode inside the RK4 stability region.
pub fn integrate_rate_equations(k: &Matrix7, n0: &Vector7, horizon: f64) -> Vector7 {
    let max_out = (0..N_LEVELS)
        .map(|i| (0..N_LEVELS).filter(|j| *j != i).map(|j| k[(i, j)]).sum::<f64>())
        .fold(0.0, f64::max);
    if max_out == 0.0 || horizon <= 0.0 {
        return *n0;
    }
    let steps = (horizon * max_out * 2.0).ceil() as usize;
    let dt = horizon / steps as f64;
    let mut n = *n0;
    for _ in 0..steps {
        let k1 = derivative(k, &n);
        let k2 = derivative(k, &(n + k1 * (dt / 2.0)));
        let k3 = derivative(k, &(n + k2 * (dt / 2.0)));
        let k4 = derivative(k, &(n + k3 * dt));
        n += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    n
}
