//! Gauss-Legendre quadrature on arbitrary intervals.

use crate::scalar::Real;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Roots of P_n found by Newton iteration from the Chebyshev-like initial
/// guess cos(π(i - 1/4)/(n + 1/2)); exact for polynomials of degree 2n - 1.
pub fn gauss_legendre<F: Real>(n: usize) -> Vec<(F, F)> {
    assert!(n >= 1, "quadrature order must be at least 1");
    let nf = F::from_f64(n as f64);
    let tol = F::epsilon() * F::from_f64(8.0);
    let mut rule = Vec::with_capacity(n);
    // roots come in ± pairs; solve the upper half and mirror
    let half = n.div_ceil(2);
    for i in 1..=half {
        let theta = F::PI() * (F::from_f64(i as f64) - F::from_f64(0.25))
            / (nf + F::from_f64(0.5));
        let mut x = theta.cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= tol {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = F::from_f64(2.0) / ((F::one() - x * x) * dp * dp);
        rule.push((x, w));
        if !(n % 2 == 1 && i == half) {
            rule.push((-x, w));
        }
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_with_derivative<F: Real>(n: usize, x: F) -> (F, F) {
    let mut p_prev = F::one();
    let mut p = x;
    for k in 2..=n {
        let kf = F::from_f64(k as f64);
        let next = ((F::from_f64(2.0) * kf - F::one()) * x * p - (kf - F::one()) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    if n == 0 {
        return (F::one(), F::zero());
    }
    if n == 1 {
        return (x, F::one());
    }
    let nf = F::from_f64(n as f64);
    let d = nf * (x * p - p_prev) / (x * x - F::one());
    (p, d)
}

/// Integrate `f` over [a, b] with the n-point rule.
pub fn integrate<F: Real>(rule: &[(F, F)], a: F, b: F, mut f: impl FnMut(F) -> F) -> F {
    let half = (b - a) / F::from_f64(2.0);
    let mid = (a + b) / F::from_f64(2.0);
    let mut acc = F::zero();
    for &(x, w) in rule {
        acc += w * f(mid + half * x);
    }
    acc * half
}
