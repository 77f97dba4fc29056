//! Shared quadrature and scalar-minimization helpers.

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
///
/// Roots of the Legendre polynomial found by Newton iteration from the
/// Chebyshev initial guess; accurate to machine precision for n <= 512.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre quadrature of `f` on [a, b] with `n` nodes.
pub fn gl_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let d = 0.5 * (a + b);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(c * xi + d)).sum::<f64>() * c
}

// QK15: 15-point Kronrod nodes/weights with embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One QK15 panel on [a, b]; returns (integral, error estimate).
pub fn qk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (b - a);
    let d = 0.5 * (a + b);
    let fc = f(d);
    let mut res_k = WGK[7] * fc;
    let mut res_g = WG[3] * fc;
    for j in 0..7 {
        let x = c * XGK[j];
        let fsum = f(d - x) + f(d + x);
        res_k += WGK[j] * fsum;
        if j % 2 == 1 {
            res_g += WG[j / 2] * fsum;
        }
    }
    let integral = res_k * c;
    let err = ((res_k - res_g) * c).abs();
    (integral, err)
}

/// Adaptive Gauss-Kronrod quadrature on [a, b] by panel bisection.
pub fn adaptive_quad(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, e) = qk15(f, a, b);
        // the roundoff floor keeps panels that are converged to machine
        // precision from being split forever when tol is very small
        if e <= tol || e <= 1e-13 * v.abs() || depth >= 40 || (b - a).abs() < 1e-14 {
            return v;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    recurse(f, a, b, tol, 0)
}

/// Adaptive quadrature on [a, inf) via the substitution t = a + s/(1-s).
pub fn adaptive_quad_to_inf(f: &impl Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    let g = |s: f64| {
        let om = 1.0 - s;
        f(a + s / om) / (om * om)
    };
    adaptive_quad(&g, 0.0, 1.0 - 1e-12, tol)
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
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
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Logarithmic integral li(x) = int_0^x dt/ln(t) for 0 <= x < 1.
///
/// Negative on (0, 1). The integrand is finite on (0, x]: it vanishes at
/// t = 0, so plain adaptive quadrature applies.
pub fn li(x: f64) -> f64 {
    assert!((0.0..1.0).contains(&x), "li requires 0 <= x < 1, got {x}");
    if x == 0.0 {
        return 0.0;
    }
    let f = |t: f64| if t <= 0.0 { 0.0 } else { 1.0 / t.ln() };
    adaptive_quad(&f, 0.0, x, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gl_exact_on_polynomials() {
        // 16-point rule is exact up to degree 31
        let v = gl_integrate(|x| x.powi(10), -1.0, 1.0, 16);
        assert_relative_eq!(v, 2.0 / 11.0, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_mass() {
        let v = gl_integrate(
            |x| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            -10.0,
            10.0,
            200,
        );
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_exp_decay() {
        let v = adaptive_quad_to_inf(&|t: f64| (-t).exp(), 0.0, 1e-10);
        assert_relative_eq!(v, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn golden_finds_quadratic_min() {
        let (x, _) = golden_min(|x| (x - 1.3).powi(2), 0.0, 10.0, 1e-10);
        assert_relative_eq!(x, 1.3, epsilon = 1e-8);
    }

    #[test]
    fn li_matches_e1_identity() {
        // li(e^{-y}) = -E1(y); check against a direct quadrature of E1
        for &y in &[0.5, 1.0, 2.0] {
            let e1 = adaptive_quad_to_inf(&|t: f64| (-t).exp() / t, y, 1e-12);
            assert_relative_eq!(li((-y as f64).exp()), -e1, epsilon = 1e-8);
        }
    }
}
