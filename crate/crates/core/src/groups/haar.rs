//! Quadrature rules for normalized Haar measure.

use std::f64::consts::TAU;

use super::{GroupModel, GroupPoint, Quaternion, TorusPoint};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Points and weights (summing to 1) for Haar measure.
///
/// Tori use the uniform `resolution^d` grid, exact for trigonometric
/// polynomials of degree `< resolution` in each angle. SU(2) and SO(3) use
/// Hopf coordinates `(cos η e^{iξ1}, sin η e^{iξ2})` with Gauss–Legendre in
/// `sin² η` and uniform grids in `ξ1, ξ2`; the rule integrates every product
/// of matrix coefficients of total spin degree `< resolution` exactly, so
/// `∫ χ_m conj(χ_m') = δ_{mm'}` holds whenever `m + m' < resolution`.
pub fn haar_quadrature(group: GroupModel, resolution: usize) -> Result<Vec<(GroupPoint, f64)>> {
    group.validate()?;
    if resolution == 0 {
        return Err(Error::InvalidInput("quadrature resolution must be positive".into()));
    }
    match group {
        GroupModel::Torus(d) => {
            let total = resolution
                .checked_pow(d as u32)
                .filter(|&n| n <= 1 << 26)
                .ok_or(Error::CapExceeded {
                    requested: (resolution as u128).pow(d as u32),
                    cap: 1 << 26,
                })?;
            let w = 1.0 / total as f64;
            let mut out = Vec::with_capacity(total);
            let mut angles = vec![0.0; d];
            for idx in 0..total {
                let mut rem = idx;
                for a in angles.iter_mut() {
                    *a = TAU * (rem % resolution) as f64 / resolution as f64;
                    rem /= resolution;
                }
                out.push((GroupPoint::Torus(TorusPoint::new(&angles)?), w));
            }
            Ok(out)
        }
        GroupModel::Su2 | GroupModel::So3 => {
            let (xs, ws) = gauss_legendre(resolution);
            let r2 = (resolution * resolution) as f64;
            let mut out = Vec::with_capacity(resolution.pow(3));
            for (x, wl) in xs.iter().zip(&ws) {
                let u = 0.5 * (1.0 + x);
                let (c, s) = ((1.0 - u).sqrt(), u.sqrt());
                for j1 in 0..resolution {
                    let (s1, c1) = (TAU * j1 as f64 / resolution as f64).sin_cos();
                    for j2 in 0..resolution {
                        let (s2, c2) = (TAU * j2 as f64 / resolution as f64).sin_cos();
                        let q = Quaternion::new(c * c1, s * s2, s * c2, c * s1);
                        out.push((GroupPoint::Su2(q), 0.5 * wl / r2));
                    }
                }
            }
            Ok(out)
        }
    }
}
