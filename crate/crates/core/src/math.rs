//! Shared numerical primitives: Gaussian special functions, quadrature and
//! small root-finding utilities used throughout the solvers.

/// 1/sqrt(2*pi)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_PI: f64 = 1.772_453_850_905_516;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Error function, double precision.
///
/// Small arguments use the all-positive-term confluent series
/// erf(x) = 2x/sqrt(pi) * exp(-x^2) * sum_k (2x^2)^k / (2k+1)!!,
/// large arguments the Laplace continued fraction for erfc.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x <= 3.0 {
        let x2 = 2.0 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0u32;
        loop {
            k += 1;
            term *= x2 / (2 * k + 1) as f64;
            sum += term;
            if term < sum * 1e-18 || k > 200 {
                break;
            }
        }
        2.0 * x / SQRT_PI * (-x * x).exp() * sum
    } else {
        1.0 - erfc(x)
    }
}

/// Complementary error function, double precision.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x <= 3.0 {
        return 1.0 - erf(x);
    }
    // Modified Lentz evaluation of
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let tiny = 1e-300;
    let mut f = tiny;
    let mut c = f;
    let mut d = 0.0;
    let mut n = 0u32;
    loop {
        let (a, b) = if n == 0 { (1.0, x) } else { (n as f64 / 2.0, x) };
        d = b + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 || n > 300 {
            break;
        }
        n += 1;
    }
    (-x * x).exp() / SQRT_PI * f
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Logistic sigmoid 1/(1+exp(-z)), overflow-safe on either tail.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Adaptive Simpson quadrature of `f` on [a, b] to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Bisection for a root of `f` inside [a, b]; requires a sign change.
/// Returns the midpoint of the final bracket after `iters` halvings.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, iters: u32) -> f64 {
    let mut fa = f(a);
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if (fa <= 0.0) == (fm <= 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Solve `A x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is row-major n*n. Returns None for (numerically) singular systems.
pub fn solve_linear(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[piv * n + col].abs() {
                piv = row;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Some(())
}

/// Damped Newton iteration with forward-difference Jacobian.
///
/// `f` returns None when evaluated outside its domain, which aborts the
/// current start. Steps are clamped to `max_step` in Euclidean norm.
/// Converges when the residual max-norm drops below `tol`.
pub fn newton<F>(f: &F, x0: &[f64], tol: f64, max_step: f64, max_iter: u32) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let fd_h = 1e-7;
    for _ in 0..max_iter {
        let f0 = f(&x)?;
        let res = f0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !res.is_finite() {
            return None;
        }
        if res < tol {
            return Some(x);
        }
        let mut jac = vec![0.0; n * n];
        for j in 0..n {
            let mut xh = x.clone();
            xh[j] += fd_h;
            let fh = f(&xh)?;
            for i in 0..n {
                jac[i * n + j] = (fh[i] - f0[i]) / fd_h;
            }
        }
        let mut step: Vec<f64> = f0.iter().map(|v| -v).collect();
        solve_linear(&mut jac, &mut step, n)?;
        let norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return None;
        }
        if norm > max_step {
            for v in &mut step {
                *v *= max_step / norm;
            }
        }
        for i in 0..n {
            x[i] += step[i];
        }
    }
    None
}

/// Adaptive Dormand-Prince 4(5) integration of dy/dt = f(t, y) from t0 to t1.
/// Returns the final state; `tol` controls the per-step error estimate.
pub fn ode_rk45<F>(f: &F, y0: &[f64], t0: f64, t1: f64, tol: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = ((t1 - t0) / 100.0).min(0.1).max(1e-6);
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    while t < t1 {
        h = h.min(t1 - t);
        k[0] = f(t, &y);
        for stage in 0..6 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..n {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[stage + 1] = f(t + C[stage] * h, &ys);
        }
        // 5th-order solution uses the last row of A (FSAL layout)
        let mut y5 = y.clone();
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut acc5 = 0.0;
            let mut acc4 = 0.0;
            for j in 0..7 {
                let w5 = if j < 6 { A[5][j] } else { 0.0 };
                acc5 += w5 * k[j][i];
                acc4 += B4[j] * k[j][i];
            }
            y5[i] += h * acc5;
            err = err.max((h * (acc5 - acc4)).abs());
        }
        if err <= tol || h <= 1e-12 {
            t += h;
            y = y5;
        }
        let scale = if err > 0.0 {
            0.9 * (tol / err).powf(0.2)
        } else {
            2.0
        };
        h *= scale.clamp(0.2, 5.0);
    }
    y
}

/// Cumulative trapezoid integral of `values` over `grid`, anchored so the
/// result is zero at index `anchor`.
pub fn cumtrapz_anchored(grid: &[f64], values: &[f64], anchor: usize) -> Vec<f64> {
    let n = grid.len();
    let mut out = vec![0.0; n];
    for i in 1..n {
        out[i] = out[i - 1] + 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    }
    let shift = out[anchor];
    for v in &mut out {
        *v -= shift;
    }
    out
}

/// Standard normal draw via Box-Muller (no caching, deterministic per seed).
pub fn standard_normal<R: rand::Rng>(rng: &mut R) -> f64 {
    let mut u1: f64 = rng.gen();
    while u1 <= 0.0 {
        u1 = rng.gen();
    }
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Trapezoid integral over an evenly-spaced or uneven grid.
pub fn trapz(grid: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..grid.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn erf_matches_reference_values() {
        // reference values from an independent implementation
        assert_relative_eq!(erf(0.1), 0.1124629160182849, max_relative = 1e-14);
        assert_relative_eq!(erf(0.5), 0.5204998778130465, max_relative = 1e-14);
        assert_relative_eq!(erf(1.0), 0.8427007929497148, max_relative = 1e-14);
        assert_relative_eq!(erf(2.0), 0.9953222650189527, max_relative = 1e-14);
        assert_relative_eq!(erf(2.9), 0.9999589021219005, max_relative = 1e-14);
        assert_relative_eq!(erfc(3.0), 2.2090496998585445e-5, max_relative = 1e-13);
        assert_relative_eq!(erfc(3.5), 7.430983723414129e-7, max_relative = 1e-13);
        assert_relative_eq!(erfc(5.0), 1.5374597944280347e-12, max_relative = 1e-13);
        assert_relative_eq!(erfc(8.0), 1.1224297172982928e-29, max_relative = 1e-13);
    }

    #[test]
    fn normal_cdf_matches_reference_values() {
        assert_relative_eq!(normal_cdf(0.3), 0.6179114221889526, max_relative = 1e-14);
        assert_relative_eq!(normal_cdf(0.7), 0.758036347776927, max_relative = 1e-14);
        assert_relative_eq!(normal_cdf(1.5), 0.9331927987311419, max_relative = 1e-14);
        assert_relative_eq!(normal_cdf(-3.0), 0.0013498980316300933, max_relative = 1e-13);
        assert_relative_eq!(normal_cdf(-1.0), 0.15865525393145707, max_relative = 1e-14);
        assert_relative_eq!(normal_cdf(0.0), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn cdf_is_quadrature_of_pdf() {
        // independent cross-check of the special functions against quadrature
        for &x in &[-2.0, -0.3, 0.0, 0.4, 1.3, 2.7] {
            let by_quad = 0.5 + integrate(&normal_pdf, 0.0, x, 1e-13);
            assert_relative_eq!(normal_cdf(x), by_quad, max_relative = 1e-10);
        }
    }

    #[test]
    fn logistic_is_safe_and_complementary() {
        assert_eq!(logistic(0.0), 0.5);
        assert_relative_eq!(logistic(1.0), 0.7310585786300049, max_relative = 1e-15);
        assert_eq!(logistic(2000.0), 1.0);
        assert_eq!(logistic(-2000.0), 0.0);
        for &z in &[-30.0, -2.5, 0.1, 7.0] {
            assert_relative_eq!(logistic(z) + logistic(-z), 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn integrate_polynomial_exactly() {
        let val = integrate(&|x: f64| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 1e-14);
        // antiderivative x^4/4 - x^2 + x
        assert_relative_eq!(val, (4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0), max_relative = 1e-12);
    }

    #[test]
    fn newton_solves_coupled_system() {
        // x^2 + y^2 = 4, x*y = 1
        let f = |v: &[f64]| Some(vec![v[0] * v[0] + v[1] * v[1] - 4.0, v[0] * v[1] - 1.0]);
        let root = newton(&f, &[2.0, 0.3], 1e-12, 1.0, 100).unwrap();
        assert_relative_eq!(root[0] * root[0] + root[1] * root[1], 4.0, epsilon = 1e-10);
        assert_relative_eq!(root[0] * root[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn solve_linear_small_system() {
        let mut a = vec![2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0];
        let mut b = vec![8.0, -11.0, -3.0];
        solve_linear(&mut a, &mut b, 3).unwrap();
        assert_relative_eq!(b[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(b[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(b[2], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(&|x: f64| x * x - 2.0, 0.0, 2.0, 80);
        assert_relative_eq!(r, SQRT_2, epsilon = 1e-12);
    }
}
