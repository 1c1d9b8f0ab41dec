//! Chebyshev–Gauss–Lobatto collocation on [0,1]: nodes, barycentric
//! Lagrange evaluation and Clenshaw–Curtis weights. Also Gauss–Legendre
//! rules used by the group quadratures.

use std::f64::consts::PI;

/// Chebyshev–Gauss–Lobatto grid mapped affinely onto [0,1], ascending.
#[derive(Debug, Clone)]
pub struct ChebGrid {
    nodes: Vec<f64>,
    bary: Vec<f64>,
    cc_weights: Vec<f64>,
}

impl ChebGrid {
    /// `n` nodes, `n >= 2`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "a Lobatto grid needs at least two nodes");
        let deg = n - 1;
        let nodes: Vec<f64> = (0..n)
            .map(|k| {
                // 0.5*(1 - cos) computed as sin^2 for accuracy near 0
                let s = (k as f64 * PI / (2.0 * deg as f64)).sin();
                s * s
            })
            .collect();
        let bary = (0..n)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                if k == 0 || k == deg {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        let cc_weights = clenshaw_curtis(deg);
        ChebGrid {
            nodes,
            bary,
            cc_weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Clenshaw–Curtis weights for Lebesgue measure on [0,1]; they sum to 1.
    pub fn cc_weights(&self) -> &[f64] {
        &self.cc_weights
    }

    /// Values of all Lagrange cardinal polynomials at `y`, written into `out`.
    pub fn cardinals_into(&self, y: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.nodes.len());
        for (k, &xk) in self.nodes.iter().enumerate() {
            if y == xk {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[k] = 1.0;
                return;
            }
        }
        let mut denom = 0.0;
        for ((o, &xk), &wk) in out.iter_mut().zip(&self.nodes).zip(&self.bary) {
            let t = wk / (y - xk);
            *o = t;
            denom += t;
        }
        out.iter_mut().for_each(|v| *v /= denom);
    }

    pub fn cardinals(&self, y: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        self.cardinals_into(y, &mut out);
        out
    }

    /// `V[i][k] = T_k(2x_i − 1)`: Chebyshev coefficients to node values.
    pub fn chebyshev_vandermonde(&self) -> Vec<Vec<f64>> {
        let n = self.nodes.len();
        let deg = (n - 1) as f64;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| {
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        sign * (PI * (k * i) as f64 / deg).cos()
                    })
                    .collect()
            })
            .collect()
    }

    /// Inverse of [`Self::chebyshev_vandermonde`] (discrete cosine transform):
    /// `out[k][i]` maps node values to the coefficient of `T_k`.
    pub fn coefficient_transform(&self) -> Vec<Vec<f64>> {
        let n = self.nodes.len();
        let deg = (n - 1) as f64;
        (0..n)
            .map(|k| {
                let ck = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                (0..n)
                    .map(|i| {
                        let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                        2.0 / deg * ck * wi * sign * (PI * (k * i) as f64 / deg).cos()
                    })
                    .collect()
            })
            .collect()
    }

    /// Barycentric interpolation of real node values at `y`.
    pub fn interpolate(&self, values: &[f64], y: f64) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xk, &wk), &fk) in self.nodes.iter().zip(&self.bary).zip(values) {
            if y == xk {
                return fk;
            }
            let t = wk / (y - xk);
            num += t * fk;
            den += t;
        }
        num / den
    }
}

/// Clenshaw–Curtis weights on [0,1] for the ascending Lobatto grid of degree `deg`.
fn clenshaw_curtis(deg: usize) -> Vec<f64> {
    let n = deg;
    let mut w = vec![0.0; n + 1];
    if n == 1 {
        return vec![0.5, 0.5];
    }
    let theta: Vec<f64> = (0..=n).map(|k| k as f64 * PI / n as f64).collect();
    let inner: Vec<usize> = (1..n).collect();
    let mut v = vec![1.0; n - 1];
    if n % 2 == 0 {
        let c = 1.0 / ((n * n) as f64 - 1.0);
        w[0] = c;
        w[n] = c;
        for k in 1..n / 2 {
            for (vi, &i) in v.iter_mut().zip(&inner) {
                *vi -= 2.0 * (2.0 * k as f64 * theta[i]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (vi, &i) in v.iter_mut().zip(&inner) {
            *vi -= (n as f64 * theta[i]).cos() / ((n * n) as f64 - 1.0);
        }
    } else {
        let c = 1.0 / (n * n) as f64;
        w[0] = c;
        w[n] = c;
        for k in 1..=(n - 1) / 2 {
            for (vi, &i) in v.iter_mut().zip(&inner) {
                *vi -= 2.0 * (2.0 * k as f64 * theta[i]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for (vi, &i) in v.iter().zip(&inner) {
        w[i] = 2.0 * vi / n as f64;
    }
    // [-1,1] weights sum to 2; the map onto [0,1] halves them
    w.iter().map(|x| 0.5 * x).collect()
}

/// Gauss–Legendre nodes and weights on [-1,1] (Newton on the three-term recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
