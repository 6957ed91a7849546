//! Crank–Nicolson solver for `u_t = D u_xx` with time-dependent Dirichlet data.

/// Advance `u` (grid values including both ends) over `span` in `sub` equal
/// steps. Boundary values move linearly from `left.0` to `left.1` (and
/// likewise on the right) across the interval.
pub(crate) fn crank_nicolson(
    u: &mut [f64],
    diffusivity: f64,
    dx: f64,
    span: f64,
    sub: usize,
    left: (f64, f64),
    right: (f64, f64),
) {
    let m = u.len() - 1;
    if m < 2 || sub == 0 {
        return;
    }
    let dt = span / sub as f64;
    let r = diffusivity * dt / (dx * dx);
    let interior = m - 1;
    let mut rhs = vec![0.0; interior];
    let mut c_prime = vec![0.0; interior];
    let mut d_prime = vec![0.0; interior];
    for step in 1..=sub {
        let w = step as f64 / sub as f64;
        let l_new = left.0 + w * (left.1 - left.0);
        let r_new = right.0 + w * (right.1 - right.0);
        for j in 1..m {
            rhs[j - 1] = u[j] + 0.5 * r * (u[j - 1] - 2.0 * u[j] + u[j + 1]);
        }
        rhs[0] += 0.5 * r * l_new;
        rhs[interior - 1] += 0.5 * r * r_new;
        // Thomas algorithm for the constant tridiagonal (-r/2, 1+r, -r/2)
        let (a, b) = (-0.5 * r, 1.0 + r);
        c_prime[0] = a / b;
        d_prime[0] = rhs[0] / b;
        for i in 1..interior {
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = a / denom;
            d_prime[i] = (rhs[i] - a * d_prime[i - 1]) / denom;
        }
        u[m - 1] = d_prime[interior - 1];
        for i in (0..interior - 1).rev() {
            u[i + 1] = d_prime[i] - c_prime[i] * u[i + 2];
        }
        u[0] = l_new;
        u[m] = r_new;
    }
}
