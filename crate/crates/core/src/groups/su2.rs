//! SU(2) as unit quaternions and its irreducible representations on
//! homogeneous polynomials of degree m in two variables.
//!
//! A quaternion `(w, x, y, z)` stands for the matrix
//! `[[a, b], [-conj(b), conj(a)]]` with `a = w + iz`, `b = y + ix`,
//! i.e. `w·I + i(x σ1 + y σ2 + z σ3)`.

use num_complex::Complex64;

use crate::linalg::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Rescaled to unit norm.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        Quaternion::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// `exp(s·ξ)` for a unit direction `ξ = (n1, n2, n3)` of the Lie algebra:
    /// the unit-speed geodesic `cos s + sin s (n·σ)` of the round 3-sphere.
    pub fn exp(direction: [f64; 3], s: f64) -> Self {
        let nrm = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
        let (sn, cs) = s.sin_cos();
        Quaternion::new(
            cs,
            sn * direction[0] / nrm,
            sn * direction[1] / nrm,
            sn * direction[2] / nrm,
        )
    }

    /// Matrix entries `(a, b)` of the first row.
    pub fn ab(&self) -> (Complex64, Complex64) {
        (Complex64::new(self.w, self.z), Complex64::new(self.y, self.x))
    }

    pub fn from_ab(a: Complex64, b: Complex64) -> Self {
        Quaternion::new(a.re, b.im, b.re, a.im)
    }

    pub fn mul(&self, other: &Quaternion) -> Quaternion {
        let (a1, b1) = self.ab();
        let (a2, b2) = other.ab();
        Quaternion::from_ab(a1 * a2 - b1 * b2.conj(), a1 * b2 + b1 * a2.conj())
    }

    pub fn inverse(&self) -> Quaternion {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Class angle ϑ ∈ [0, π]: the eigenvalues are `e^{±iϑ}`.
    pub fn class_angle(&self) -> f64 {
        self.w.clamp(-1.0, 1.0).acos()
    }

    pub fn matrix(&self) -> CMatrix {
        let (a, b) = self.ab();
        CMatrix::from_row_slice(2, 2, &[a, b, -b.conj(), a.conj()])
    }
}

/// `χ_m = U_m(cos ϑ) = sin((m+1)ϑ)/sin ϑ`, evaluated by the Chebyshev recurrence
/// so that ϑ ∈ {0, π} needs no special casing.
pub fn character(m: u32, cos_theta: f64) -> f64 {
    let c = cos_theta.clamp(-1.0, 1.0);
    let mut u_prev = 1.0;
    if m == 0 {
        return u_prev;
    }
    let mut u = 2.0 * c;
    for _ in 1..m {
        let next = 2.0 * c * u - u_prev;
        u_prev = u;
        u = next;
    }
    u
}

/// All characters `χ_0..=χ_{m_max}` at one point.
pub fn characters_upto(m_max: u32, cos_theta: f64) -> Vec<f64> {
    let c = cos_theta.clamp(-1.0, 1.0);
    let mut out = Vec::with_capacity(m_max as usize + 1);
    out.push(1.0);
    if m_max >= 1 {
        out.push(2.0 * c);
    }
    for k in 2..=m_max as usize {
        out.push(2.0 * c * out[k - 1] - out[k - 2]);
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Unitary matrix of the spin-`m/2` representation, `(m+1) × (m+1)`.
///
/// Basis `e_j = z1^{m-j} z2^j / sqrt(j!(m-j)!)`, action `(π(g)f)(z) = f(z g)`;
/// this is a homomorphism with trace `χ_m`.
pub fn irrep_matrix(m: u32, g: &Quaternion) -> CMatrix {
    let m = m as usize;
    let (a, b) = g.ab();
    let c = -b.conj();
    let d = a.conj();
    let dim = m + 1;
    let norms: Vec<f64> = (0..dim).map(|j| (factorial(j) * factorial(m - j)).sqrt()).collect();
    let mut out = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        // (a z1 + c z2)^{m-k}: coefficient of z2^p
        let p1: Vec<Complex64> = (0..=m - k)
            .map(|p| a.powu((m - k - p) as u32) * c.powu(p as u32) * binomial(m - k, p))
            .collect();
        // (b z1 + d z2)^k: coefficient of z2^r
        let p2: Vec<Complex64> = (0..=k)
            .map(|r| b.powu((k - r) as u32) * d.powu(r as u32) * binomial(k, r))
            .collect();
        for (p, &u) in p1.iter().enumerate() {
            for (r, &v) in p2.iter().enumerate() {
                let j = p + r;
                out[(j, k)] += u * v * (norms[j] / norms[k]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(i: usize) -> Quaternion {
        let t = i as f64;
        Quaternion::new((0.3 * t).cos() + 0.2, (1.1 * t).sin(), 0.7 - 0.1 * t, (0.5 * t).cos()).normalized()
    }

    #[test]
    fn quaternion_product_matches_matrix_product() {
        for i in 0..6 {
            let (g, h) = (sample(i), sample(i + 3));
            let lhs = g.mul(&h).matrix();
            let rhs = g.matrix() * h.matrix();
            assert!((lhs - rhs).norm() < 1e-14);
            let e = g.mul(&g.inverse());
            assert!((e.w - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exp_is_one_parameter_subgroup() {
        let n = [0.3, -0.4, 1.2];
        let g = Quaternion::exp(n, 0.4).mul(&Quaternion::exp(n, 0.9));
        let h = Quaternion::exp(n, 1.3);
        assert!((g.w - h.w).abs() < 1e-14 && (g.x - h.x).abs() < 1e-14);
        assert!((Quaternion::exp(n, 0.7).class_angle() - 0.7).abs() < 1e-14);
    }

    #[test]
    fn character_limits_and_values() {
        for m in 0..12u32 {
            assert_eq!(character(m, 1.0), (m + 1) as f64);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert!((character(m, -1.0) - sign * (m + 1) as f64).abs() < 1e-12);
            let th = 0.77f64;
            let closed = ((m + 1) as f64 * th).sin() / th.sin();
            assert!((character(m, th.cos()) - closed).abs() < 1e-12);
        }
        // χ_1 at ϑ = π/2
        assert!(character(1, (std::f64::consts::FRAC_PI_2).cos()).abs() < 1e-15);
    }

    #[test]
    fn irrep_matrices_are_unitary_homomorphisms() {
        for m in 0..6u32 {
            for i in 0..4 {
                let (g, h) = (sample(i), sample(i + 5));
                let pg = irrep_matrix(m, &g);
                let ph = irrep_matrix(m, &h);
                let pgh = irrep_matrix(m, &g.mul(&h));
                assert!((&pg * &ph - &pgh).norm() < 1e-12, "m={m}");
                let id = CMatrix::identity((m + 1) as usize, (m + 1) as usize);
                assert!((&pg * pg.adjoint() - id).norm() < 1e-12);
                assert!((pg.trace().re - character(m, g.w)).abs() < 1e-12);
                assert!(pg.trace().im.abs() < 1e-12);
            }
        }
        // spin 1/2 is the defining representation up to equivalence (same trace)
        let g = sample(2);
        assert!((irrep_matrix(1, &g).trace() - g.matrix().trace()).norm() < 1e-14);
    }
}
