//! Exact spectral data for the model pairs: flat tori `R^n / (2 pi Z)^n` with
//! coordinate subtori, and unit spheres with great or latitude subspheres.
//!
//! Torus levels are indexed by the integer `|j|^2`, sphere levels by the degree
//! `N` (eigenvalue `N` for the shifted square-root operator).

use crate::error::{invalid, LabError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Torus,
    Sphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub n: usize,
}

impl ManifoldSpec {
    pub fn torus(n: usize) -> Result<Self> {
        if n < 2 {
            return invalid(format!("torus dimension must be >= 2, got {n}"));
        }
        Ok(ManifoldSpec { kind: ManifoldKind::Torus, n })
    }

    pub fn sphere(n: usize) -> Result<Self> {
        if n < 2 {
            return invalid(format!("sphere dimension must be >= 2, got {n}"));
        }
        Ok(ManifoldSpec { kind: ManifoldKind::Sphere, n })
    }

    /// Riemannian volume: `(2 pi)^n` or `|S^n|`.
    pub fn volume(&self) -> f64 {
        match self.kind {
            ManifoldKind::Torus => (2.0 * PI).powi(self.n as i32),
            ManifoldKind::Sphere => unit_sphere_area(self.n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubmanifoldSpec {
    CoordinateSubtorus { d: usize },
    GreatSubsphere { d: usize },
    LatitudeSubsphere { d: usize, a: f64 },
    /// Great circle through the poles of the zonal axis on `S^2`.
    MeridianCircle,
}

impl SubmanifoldSpec {
    pub fn dim(&self) -> usize {
        match *self {
            SubmanifoldSpec::CoordinateSubtorus { d }
            | SubmanifoldSpec::GreatSubsphere { d }
            | SubmanifoldSpec::LatitudeSubsphere { d, .. } => d,
            SubmanifoldSpec::MeridianCircle => 1,
        }
    }

    /// Height of the latitude subsphere (`0` for great subspheres).
    pub fn height(&self) -> f64 {
        match *self {
            SubmanifoldSpec::LatitudeSubsphere { a, .. } => a,
            _ => 0.0,
        }
    }

    /// Radius of a subsphere, `sqrt(1 - a^2)`; `1` for subtori and great spheres.
    pub fn radius(&self) -> f64 {
        let a = self.height();
        (1.0 - a * a).sqrt()
    }
}

/// A validated ambient/submanifold pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPair {
    pub ambient: ManifoldSpec,
    pub sub: SubmanifoldSpec,
}

impl ModelPair {
    pub fn new(ambient: ManifoldSpec, sub: SubmanifoldSpec) -> Result<Self> {
        let n = ambient.n;
        let d = sub.dim();
        if d == 0 || d >= n {
            return invalid(format!("submanifold dimension {d} must lie in 1..={}", n - 1));
        }
        match (ambient.kind, sub) {
            (ManifoldKind::Torus, SubmanifoldSpec::CoordinateSubtorus { .. }) => {}
            (ManifoldKind::Sphere, SubmanifoldSpec::GreatSubsphere { .. }) => {}
            (ManifoldKind::Sphere, SubmanifoldSpec::LatitudeSubsphere { a, .. }) => {
                if !(0.0..1.0).contains(&a) {
                    return invalid(format!("latitude height must lie in [0, 1), got {a}"));
                }
            }
            (ManifoldKind::Sphere, SubmanifoldSpec::MeridianCircle) if n == 2 => {}
            _ => {
                return Err(LabError::Unsupported(format!(
                    "submanifold {sub:?} is not defined in {:?}({n})",
                    ambient.kind
                )))
            }
        }
        Ok(ModelPair { ambient, sub })
    }

    pub fn torus(n: usize, d: usize) -> Result<Self> {
        ModelPair::new(ManifoldSpec::torus(n)?, SubmanifoldSpec::CoordinateSubtorus { d })
    }

    pub fn great_sphere(n: usize, d: usize) -> Result<Self> {
        ModelPair::new(ManifoldSpec::sphere(n)?, SubmanifoldSpec::GreatSubsphere { d })
    }

    pub fn n(&self) -> usize {
        self.ambient.n
    }

    pub fn d(&self) -> usize {
        self.sub.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum LevelIndex {
    RadiusSquared(u64),
    Degree(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralLevel {
    pub value: f64,
    pub multiplicity: u64,
    pub index: LevelIndex,
}

/// Largest integer `k` with `sqrt(k) <= lambda`.
pub fn radius_squared_floor(lambda: f64) -> Result<u64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return invalid(format!("lambda must be finite and nonnegative, got {lambda}"));
    }
    let mut k = (lambda * lambda).floor() as u64;
    while ((k + 1) as f64).sqrt() <= lambda {
        k += 1;
    }
    while k > 0 && (k as f64).sqrt() > lambda {
        k -= 1;
    }
    Ok(k)
}

/// `r_n(k) = #{j in Z^n : |j|^2 = k}` for `k <= r2max`.
pub fn lattice_shell_counts(n: usize, r2max: u64) -> Result<Vec<u32>> {
    if n < 1 {
        return invalid("lattice dimension must be >= 1");
    }
    let len = usize::try_from(r2max).map_err(|_| LabError::OutOfRange("radius too large".into()))? + 1;
    let mut counts = vec![0u32; len];
    counts[0] = 1;
    for _ in 0..n {
        let mut next = vec![0u32; len];
        for (k, &ck) in counts.iter().enumerate() {
            if ck == 0 {
                continue;
            }
            next[k] += ck;
            let mut m = 1usize;
            while k + m * m < len {
                next[k + m * m] += 2 * ck;
                m += 1;
            }
        }
        counts = next;
    }
    Ok(counts)
}

/// Distinct torus eigenvalues `|j| <= lambda_max` in ascending order.
pub fn enumerate_torus_levels(n: usize, lambda_max: f64) -> Result<Vec<SpectralLevel>> {
    if n < 1 {
        return invalid(format!("dimension must be >= 1, got {n}"));
    }
    let r2max = radius_squared_floor(lambda_max)?;
    let counts = lattice_shell_counts(n, r2max)?;
    Ok(levels_from_counts(&counts))
}

pub(crate) fn levels_from_counts(counts: &[u32]) -> Vec<SpectralLevel> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| SpectralLevel {
            value: (k as f64).sqrt(),
            multiplicity: c as u64,
            index: LevelIndex::RadiusSquared(k as u64),
        })
        .collect()
}

fn binomial(k: u64, r: u64) -> Option<u128> {
    if r > k {
        return Some(0);
    }
    let r = r.min(k - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.checked_mul((k - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Dimension of degree-`big_n` spherical harmonics on `S^n`.
pub fn sphere_multiplicity(n: usize, big_n: u64) -> Result<u128> {
    if n < 1 {
        return invalid(format!("sphere dimension must be >= 1, got {n}"));
    }
    let n = n as u64;
    let top = binomial(big_n + n, n).ok_or_else(|| LabError::Numeric("multiplicity overflow".into()))?;
    let low = if big_n >= 2 {
        binomial(big_n + n - 2, n).ok_or_else(|| LabError::Numeric("multiplicity overflow".into()))?
    } else {
        0
    };
    Ok(top - low)
}

/// Sphere levels `N = 0..=n_max`.
pub fn sphere_levels(n: usize, n_max: u64) -> Result<Vec<SpectralLevel>> {
    (0..=n_max)
        .map(|deg| {
            let mult = sphere_multiplicity(n, deg)?;
            Ok(SpectralLevel {
                value: deg as f64,
                multiplicity: u64::try_from(mult)
                    .map_err(|_| LabError::Numeric("multiplicity overflow".into()))?,
                index: LevelIndex::Degree(deg),
            })
        })
        .collect()
}

/// Surface area of the unit `d`-sphere in `R^{d+1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    let mut area = if d.is_multiple_of(2) { 2.0 } else { 2.0 * PI };
    let mut k = if d.is_multiple_of(2) { 0 } else { 1 };
    while k < d {
        k += 2;
        area *= 2.0 * PI / (k as f64 - 1.0);
    }
    area
}

/// d-dimensional volume of the submanifold.
pub fn hausdorff_volume(sub: &SubmanifoldSpec, ambient: &ManifoldSpec) -> Result<f64> {
    ModelPair::new(*ambient, *sub)?;
    let d = sub.dim();
    Ok(match sub {
        SubmanifoldSpec::CoordinateSubtorus { .. } => (2.0 * PI).powi(d as i32),
        _ => sub.radius().powi(d as i32) * unit_sphere_area(d),
    })
}

/// Eigenvalue of a submanifold mode: `|k|` on a subtorus (argument `|k|^2`),
/// `M / r` on a subsphere of radius `r` (argument `M`).
pub fn submanifold_eigenvalue(sub: &SubmanifoldSpec, index: u64) -> f64 {
    match sub {
        SubmanifoldSpec::CoordinateSubtorus { .. } => (index as f64).sqrt(),
        _ => index as f64 / sub.radius(),
    }
}


/// Joint spectrum of a torus and its coordinate subtorus: pairs
/// `(|j|^2, |j'|^2)` with the number of lattice vectors realizing them.
#[derive(Clone, Debug)]
pub struct JointTorusSpectrum {
    pub n: usize,
    pub d: usize,
    pub r2max: u64,
    shell: Vec<u32>,
    tang: Vec<(u64, u32)>,
    normal: Vec<(u64, u32)>,
}

fn nonzero(counts: &[u32]) -> Vec<(u64, u32)> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (k as u64, c))
        .collect()
}

impl JointTorusSpectrum {
    pub fn new(n: usize, d: usize, lambda_max: f64) -> Result<Self> {
        let r2max = radius_squared_floor(lambda_max)?;
        let shell = lattice_shell_counts(n, r2max)?;
        Self::with_shell_counts(n, d, r2max, shell)
    }

    /// Build from precomputed ambient shell counts (for example a cache).
    pub fn with_shell_counts(n: usize, d: usize, r2max: u64, shell: Vec<u32>) -> Result<Self> {
        ModelPair::torus(n, d)?;
        if shell.len() as u64 != r2max + 1 {
            return invalid("shell count table has the wrong length");
        }
        let tang = nonzero(&lattice_shell_counts(d, r2max)?);
        let normal = nonzero(&lattice_shell_counts(n - d, r2max)?);
        Ok(JointTorusSpectrum { n, d, r2max, shell, tang, normal })
    }

    pub fn lambda_max(&self) -> f64 {
        (self.r2max as f64).sqrt()
    }

    /// `r_n(k)` for `k <= r2max`.
    pub fn shell_counts(&self) -> &[u32] {
        &self.shell
    }

    pub fn levels(&self) -> Vec<SpectralLevel> {
        levels_from_counts(&self.shell)
    }

    /// Nonzero `(|k|^2, r_d)` entries of the subtorus lattice.
    pub fn tangential(&self) -> &[(u64, u32)] {
        &self.tang
    }

    /// Nonzero `(|j''|^2, r_{n-d})` entries of the normal lattice.
    pub fn normal(&self) -> &[(u64, u32)] {
        &self.normal
    }

    /// Visit every `(lam2, mu2, count)` with `lam2 <= r2max`, ordered by `mu2`
    /// then `lam2`.
    pub fn for_each_pair(&self, mut f: impl FnMut(u64, u64, u64)) {
        for &(mu2, ct) in &self.tang {
            for &(q2, cn) in &self.normal {
                let lam2 = mu2 + q2;
                if lam2 > self.r2max {
                    break;
                }
                f(lam2, mu2, ct as u64 * cn as u64);
            }
        }
    }

    /// Visit pairs with `mu2` fixed and `lam2` in `[lo, hi]`.
    pub fn for_each_in_band(&self, mu2: u64, lo: u64, hi: u64, mut f: impl FnMut(u64, u64)) {
        let lo_q = lo.saturating_sub(mu2);
        let hi = hi.min(self.r2max);
        if hi < mu2 {
            return;
        }
        let hi_q = hi - mu2;
        let start = self.normal.partition_point(|&(q2, _)| q2 < lo_q);
        for &(q2, cn) in &self.normal[start..] {
            if q2 > hi_q {
                break;
            }
            f(mu2 + q2, cn as u64);
        }
    }

    /// Total lattice vectors with `|j|^2 <= r2max`.
    pub fn total_count(&self) -> u64 {
        self.shell.iter().map(|&c| c as u64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_torus_levels() {
        let lv = enumerate_torus_levels(2, 1.0).unwrap();
        assert_eq!(lv.len(), 2);
        assert_eq!((lv[0].value, lv[0].multiplicity), (0.0, 1));
        assert_eq!((lv[1].value, lv[1].multiplicity), (1.0, 4));
        let lv = enumerate_torus_levels(2, 2f64.sqrt()).unwrap();
        assert_eq!(lv[2].multiplicity, 4);
        assert_eq!(lv[2].index, LevelIndex::RadiusSquared(2));
        assert!(enumerate_torus_levels(0, 1.0).is_err());
    }

    #[test]
    fn sphere_dims() {
        for big_n in 0..50 {
            assert_eq!(sphere_multiplicity(2, big_n).unwrap(), 2 * big_n as u128 + 1);
        }
        for big_n in 1..20 {
            assert_eq!(sphere_multiplicity(1, big_n).unwrap(), 2);
        }
        assert_eq!(sphere_multiplicity(3, 2).unwrap(), 9);
        assert_eq!(sphere_multiplicity(3, 5).unwrap(), 36);
    }

    #[test]
    fn volumes() {
        let t2 = ManifoldSpec::torus(2).unwrap();
        let s2 = ManifoldSpec::sphere(2).unwrap();
        let circ = SubmanifoldSpec::CoordinateSubtorus { d: 1 };
        assert!((hausdorff_volume(&circ, &t2).unwrap() - 2.0 * PI).abs() < 1e-15);
        let great = SubmanifoldSpec::GreatSubsphere { d: 1 };
        assert!((hausdorff_volume(&great, &s2).unwrap() - 2.0 * PI).abs() < 1e-15);
        let lat = SubmanifoldSpec::LatitudeSubsphere { d: 1, a: 0.5 };
        let v = hausdorff_volume(&lat, &s2).unwrap();
        assert!((v - 2.0 * PI * 3f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!(hausdorff_volume(&circ, &s2).is_err());
    }

    #[test]
    fn joint_pairs_cover_the_ball() {
        let js = JointTorusSpectrum::new(3, 1, 6.0).unwrap();
        let mut total = 0;
        js.for_each_pair(|_, _, c| total += c);
        assert_eq!(total, js.total_count());
        let mut brute = 0u64;
        for a in -6i64..=6 {
            for b in -6i64..=6 {
                for c in -6i64..=6 {
                    if a * a + b * b + c * c <= 36 {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(total, brute);
    }

    #[test]
    fn radius_floor_is_exact_on_squares() {
        assert_eq!(radius_squared_floor(3.0).unwrap(), 9);
        assert_eq!(radius_squared_floor(2f64.sqrt()).unwrap(), 2);
        assert_eq!(radius_squared_floor(0.999).unwrap(), 0);
    }
}
