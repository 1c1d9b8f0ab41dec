//! Named maps, potentials, groups and skew functions for configuration files.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::dynamics::ExpandingMap;
use crate::error::{Error, Result};
use crate::groups::{GroupModel, GroupPoint, Quaternion};
use crate::thermo::Potential;
use crate::twisted::SkewFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Doubling,
    Triple,
    Linear { k: usize },
    PerturbedDoubling { eps: f64 },
}

impl MapSpec {
    pub fn build(&self) -> Result<ExpandingMap> {
        match *self {
            MapSpec::Doubling => Ok(ExpandingMap::doubling()),
            MapSpec::Triple => Ok(ExpandingMap::triple()),
            MapSpec::Linear { k } => ExpandingMap::linear(k),
            MapSpec::PerturbedDoubling { eps } => ExpandingMap::perturbed_doubling(eps),
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, MapSpec::PerturbedDoubling { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `−log |T'|`.
    Srb,
    /// `φ ≡ 0`; normalizing gives the measure of maximal entropy.
    Mme,
    Constant { value: f64 },
    /// `−log |T'| + amplitude · sin(2πx)`.
    SrbPlusSin { amplitude: f64 },
}

impl PotentialSpec {
    pub fn build(&self, map: &ExpandingMap) -> Result<Potential> {
        let phi = match *self {
            PotentialSpec::Srb => Potential::srb(map),
            PotentialSpec::Mme => Potential::constant(0.0),
            PotentialSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidInput(format!("constant potential must be finite, got {value}")));
                }
                Potential::constant(value)
            }
            PotentialSpec::SrbPlusSin { amplitude } => {
                if !amplitude.is_finite() {
                    return Err(Error::InvalidInput(format!("amplitude must be finite, got {amplitude}")));
                }
                Potential::srb(map).plus(&format!("{amplitude}·sin(2πx)"), move |x| amplitude * (TAU * x).sin())
            }
        };
        Ok(phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Torus { dim: usize },
    Su2,
    So3,
}

impl GroupSpec {
    pub fn build(&self) -> Result<GroupModel> {
        let g = match *self {
            GroupSpec::Torus { dim } => GroupModel::Torus(dim),
            GroupSpec::Su2 => GroupModel::Su2,
            GroupSpec::So3 => GroupModel::So3,
        };
        g.validate()?;
        Ok(g)
    }
}

fn default_xi1() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn default_xi2() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_a_slope() -> f64 {
    1.0
}

fn default_b_quadratic() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum TauSpec {
    Identity,
    /// Constant torus element with the given angles.
    TorusConstant { angles: Vec<f64> },
    /// `τ(x) = 2π (s_1 x, …, s_d x)`.
    TorusLinear { slopes: Vec<f64> },
    /// `τ(x) = exp(x ξ)`.
    Su2OneDirection { xi: [f64; 3] },
    /// `τ(x) = exp(2π a x · ξ1) exp(b x² · ξ2)`.
    Su2TwoDirection {
        #[serde(default = "default_xi1")]
        xi1: [f64; 3],
        #[serde(default = "default_xi2")]
        xi2: [f64; 3],
        #[serde(default = "default_a_slope")]
        a_slope: f64,
        #[serde(default = "default_b_quadratic")]
        b_quadratic: f64,
    },
}

impl TauSpec {
    /// The two-direction SU(2) skew with its default coefficients.
    pub fn su2_two_direction_default() -> Self {
        TauSpec::Su2TwoDirection {
            xi1: default_xi1(),
            xi2: default_xi2(),
            a_slope: default_a_slope(),
            b_quadratic: default_b_quadratic(),
        }
    }

    pub fn build(&self, group: GroupModel) -> Result<SkewFunction> {
        let tau = match self {
            TauSpec::Identity => SkewFunction::identity(group),
            TauSpec::TorusConstant { angles } => SkewFunction::torus_constant(angles)?,
            TauSpec::TorusLinear { slopes } => SkewFunction::torus_linear(slopes)?,
            TauSpec::Su2OneDirection { xi } => SkewFunction::su2_one_direction(*xi)?,
            TauSpec::Su2TwoDirection {
                xi1,
                xi2,
                a_slope,
                b_quadratic,
            } => {
                let (a, b) = (*a_slope, *b_quadratic);
                SkewFunction::su2_two_direction(
                    unit(xi1)?.0,
                    unit(xi2)?.0,
                    move |x| TAU * a * x,
                    move |x| b * x * x,
                    format!("exp(2π·{a}x ξ1)·exp({b}x² ξ2)"),
                )
            }
        };
        tau.with_group(group)
    }

    /// [`TauSpec::build`] with a gauge adapted to `map` attached.
    ///
    /// For a degree-`k` map, `θ = τ/(k−1)` turns a linear torus or
    /// one-direction skew into a cocycle that is constant on each branch of
    /// the linear maps; for the two-direction skew `θ(x) = exp(2πa x/k · ξ1)`
    /// cancels the drift of the first factor. Traces and spectra are
    /// unchanged while the collocation matrix needs far fewer nodes.
    pub fn build_gauged(&self, group: GroupModel, map: &ExpandingMap) -> Result<SkewFunction> {
        let tau = self.build(group)?;
        let k = map.k() as f64;
        Ok(match self {
            TauSpec::Identity | TauSpec::TorusConstant { .. } => tau,
            TauSpec::TorusLinear { slopes } => {
                let s: Vec<f64> = slopes.iter().map(|v| TAU * v / (k - 1.0)).collect();
                tau.with_gauge(move |x| {
                    let angles: Vec<f64> = s.iter().map(|si| si * x).collect();
                    GroupPoint::torus(&angles).expect("finite angles")
                })
            }
            TauSpec::Su2OneDirection { xi } => {
                let (xi, norm) = unit(xi)?;
                tau.with_gauge(move |x| GroupPoint::Su2(Quaternion::exp(xi, norm * x / (k - 1.0))))
            }
            TauSpec::Su2TwoDirection { xi1, a_slope, .. } => {
                let (xi1, _) = unit(xi1)?;
                let a = *a_slope;
                tau.with_gauge(move |x| GroupPoint::Su2(Quaternion::exp(xi1, TAU * a * x / k)))
            }
        })
    }
}

fn unit(v: &[f64; 3]) -> Result<([f64; 3], f64)> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidInput("direction must be a nonzero finite vector".into()));
    }
    Ok(([v[0] / n, v[1] / n, v[2] / n], n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Deserialize)]
    struct Wrapper {
        map: MapSpec,
        potential: PotentialSpec,
        group: GroupSpec,
        tau: TauSpec,
    }

    #[test]
    fn parse_and_build() {
        let w: Wrapper = toml::from_str(
            r#"
            map = { name = "perturbed_doubling", eps = 0.05 }
            potential = { name = "srb" }
            group = { kind = "su2" }
            tau = { name = "su2_two_direction" }
            "#,
        )
        .unwrap();
        let map = w.map.build().unwrap();
        assert_eq!(map.k(), 2);
        let phi = w.potential.build(&map).unwrap();
        assert!((phi.eval(0.0) + (2.0 + TAU * 0.05f64).ln()).abs() < 1e-12);
        let g = w.group.build().unwrap();
        assert_eq!(w.tau, TauSpec::su2_two_direction_default());
        assert_eq!(w.tau.build(g).unwrap().group(), GroupModel::Su2);
    }

    #[test]
    fn mismatches_are_rejected() {
        let tau = TauSpec::TorusLinear { slopes: vec![1.0] };
        assert!(tau.build(GroupModel::Su2).is_err());
        assert!(GroupSpec::Torus { dim: 0 }.build().is_err());
        assert!(MapSpec::Linear { k: 1 }.build().is_err());
        assert!(toml::from_str::<Wrapper>("map = { name = \"tent\" }").is_err());
    }
}
