/// One classical Runge-Kutta step of `ẋ = f(τ, x)` where `τ ∈ [0, dt]` is the
/// offset from the start of the step.
pub(crate) fn rk4<const N: usize>(
    x: [f64; N],
    dt: f64,
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
) -> [f64; N] {
    let axpy = |a: f64, k: &[f64; N]| {
        let mut y = x;
        for i in 0..N {
            y[i] += a * k[i];
        }
        y
    };
    let k1 = f(0.0, &x);
    let k2 = f(0.5 * dt, &axpy(0.5 * dt, &k1));
    let k3 = f(0.5 * dt, &axpy(0.5 * dt, &k2));
    let k4 = f(dt, &axpy(dt, &k3));
    let mut out = x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}
