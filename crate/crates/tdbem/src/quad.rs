//! Quadrature rules on the reference triangle and on [0,1].
//!
//! The reference triangle is T = {(u,v) : 0 <= v <= u <= 1} with the chart
//! x(u,v) = a + u(b-a) + v(c-b) for a physical triangle (a,b,c).  All triangle
//! rules store weights normalized to sum to 1, so that
//! int_T f = |T| * sum_i w_i f(x(u_i, v_i)).

/// A quadrature rule on the reference triangle, weights summing to 1.
#[derive(Debug, Clone)]
pub struct TriRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

/// Classical 7-point degree-5 triangle rule.
pub fn tri_rule_deg5() -> TriRule {
    let s15 = 15.0_f64.sqrt();
    let w1 = (155.0 + s15) / 1200.0;
    let a1 = 0.059_715_871_789_77;
    let b1 = 0.470_142_064_105_115;
    let w2 = (155.0 - s15) / 1200.0;
    let a2 = 0.797_426_985_353_087;
    let b2 = 0.101_286_507_323_456;

    let mut points = vec![bary_to_ref(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)];
    let mut weights = vec![9.0 / 40.0];
    for (a, b, w) in [(a1, b1, w1), (a2, b2, w2)] {
        for p in [(a, b, b), (b, a, b), (b, b, a)] {
            points.push(bary_to_ref(p.0, p.1, p.2));
            weights.push(w);
        }
    }
    TriRule { points, weights }
}

/// Tensor Gauss rule collapsed onto the triangle (n^2 points); used as the
/// independent dense oracle in tests and for near-singular refinement.
pub fn tri_rule_tensor(n: usize) -> TriRule {
    let (x, w) = gauss_legendre_01(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            // (u, v) = (x_i, x_i * x_j), jacobian x_i; normalize by 2 so sum = 1
            points.push((x[i], x[i] * x[j]));
            weights.push(2.0 * w[i] * w[j] * x[i]);
        }
    }
    TriRule { points, weights }
}

/// Barycentric (l0, l1, l2) on vertices (a, b, c) to reference (u, v):
/// x = a + u(b-a) + v(c-b) means u = l1 + l2, v = l2.
fn bary_to_ref(_l0: f64, l1: f64, l2: f64) -> (f64, f64) {
    (l1 + l2, l2)
}

/// Gauss-Legendre nodes and weights on [0,1].
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one Gauss point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Newton iteration on P_n from the Chebyshev initial guess.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        nodes[n - 1 - k] = 0.5 * (x + 1.0);
        weights[n - 1 - k] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_ref_monomial(p: u32, q: u32) -> f64 {
        // int_T u^p v^q over {0<=v<=u<=1} = 1 / ((q+1)(p+q+2))
        1.0 / ((q as f64 + 1.0) * (p as f64 + q as f64 + 2.0))
    }

    fn rule_integral(rule: &TriRule, p: u32, q: u32) -> f64 {
        // reference triangle area is 1/2
        0.5 * rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(&(u, v), &w)| w * u.powi(p as i32) * v.powi(q as i32))
            .sum::<f64>()
    }

    #[test]
    fn deg5_rule_exact_to_degree_5() {
        let rule = tri_rule_deg5();
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for p in 0..=5u32 {
            for q in 0..=(5 - p) {
                let got = rule_integral(&rule, p, q);
                let want = exact_ref_monomial(p, q);
                assert!(
                    (got - want).abs() < 1e-14,
                    "monomial u^{p} v^{q}: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn tensor_rule_converges_on_high_degree() {
        let want = exact_ref_monomial(7, 6);
        let got = rule_integral(&tri_rule_tensor(8), 7, 6);
        assert!((got - want).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_01(6);
        for d in 0..=11u32 {
            let got: f64 = x
                .iter()
                .zip(&w)
                .map(|(&xi, &wi)| wi * xi.powi(d as i32))
                .sum();
            let want = 1.0 / (d as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "degree {d}");
        }
    }
}
