//! Gauss-Legendre quadrature on [0, 1] with node counts doubling from 8 to 256.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::sync::OnceLock;

/// Node counts tried by the adaptive integral factor extraction.
pub const NODE_LADDER: [usize; 6] = [8, 16, 32, 64, 128, 256];

/// Gauss-Legendre nodes and weights on [0, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `n` nodes, cached per node count.
    pub fn unit(n: usize) -> GaussLegendre {
        static CACHE: OnceLock<Mutex<BTreeMap<usize, GaussLegendre>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
        let mut guard = cache.lock().unwrap();
        guard.entry(n).or_insert_with(|| compute_unit_rule(n)).clone()
    }

    /// Integrates `f` over [0, 1].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Legendre roots on (-1, 1) by Newton iteration from the Chebyshev-like
/// initial guess, then mapped to [0, 1].
fn compute_unit_rule(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // initial guess for the k-th root of P_n
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map from [-1, 1] to [0, 1]
        nodes[n - 1 - k] = 0.5 * (x + 1.0);
        weights[n - 1 - k] = 0.5 * w;
    }
    GaussLegendre { nodes, weights }
}

/// Value and derivative of the Legendre polynomial P_n at x via the
/// three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // n-point Gauss-Legendre is exact through degree 2n-1
        let rule = GaussLegendre::unit(8);
        for d in 0..=15u32 {
            let got = rule.integrate(|t| t.powi(d as i32));
            let want = 1.0 / (d as f64 + 1.0);
            assert!(
                (got - want).abs() < 1e-14,
                "degree {d}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for &n in NODE_LADDER.iter() {
            let rule = GaussLegendre::unit(n);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn integrates_transcendental_to_machine_precision() {
        let rule = GaussLegendre::unit(32);
        let got = rule.integrate(f64::exp);
        assert!((got - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }
}
