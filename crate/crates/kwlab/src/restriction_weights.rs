//! Eigenspace-aggregated squared Fourier coefficients of restricted
//! eigenfunctions.
//!
//! Normalization: eigenfunctions are orthonormal for the Riemannian volume on
//! both `M` and `H`. With this choice `sum_mu W(lambda, mu)` equals the
//! diagonal integral of the spectral projector over `H`.

use crate::error::{invalid, LabError, Result};
use crate::spectral_models::{
    sphere_multiplicity, unit_sphere_area, LevelIndex, ManifoldKind, ModelPair, SpectralLevel,
    SubmanifoldSpec,
};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// `(2 pi)^{d-n}` when the first `d` coordinates of `j` equal `k`, else `0`.
pub fn torus_mode_weight(j: &[i64], k: &[i64]) -> Result<f64> {
    let n = j.len();
    let d = k.len();
    if d == 0 || d >= n {
        return invalid(format!("tangential dimension {d} incompatible with ambient {n}"));
    }
    if j[..d] == *k {
        Ok((2.0 * PI).powi(d as i32 - n as i32))
    } else {
        Ok(0.0)
    }
}

/// `p_j = 4^{-j} C(2j, j)` in log form, plus Legendre/Gegenbauer evaluation.
#[derive(Clone, Debug)]
pub struct LegendreCatalog {
    ln_p: Vec<f64>,
}

impl LegendreCatalog {
    pub fn new(max_degree: usize) -> Self {
        let ln4 = 4f64.ln();
        let ln_p = (0..=max_degree)
            .map(|j| {
                if j == 0 {
                    0.0
                } else {
                    let jf = j as f64;
                    ln_gamma(2.0 * jf + 1.0) - 2.0 * ln_gamma(jf + 1.0) - jf * ln4
                }
            })
            .collect();
        LegendreCatalog { ln_p }
    }

    pub fn max_degree(&self) -> usize {
        self.ln_p.len() - 1
    }

    pub fn ln_p(&self, j: usize) -> f64 {
        self.ln_p[j]
    }

    pub fn p(&self, j: usize) -> f64 {
        match j {
            0 => 1.0,
            1 => 0.5,
            2 => 0.375,
            _ => self.ln_p[j].exp(),
        }
    }

    /// `p_{(N-m)/2} p_{(N+m)/2}`, the coefficient of `e^{i m phi}` in
    /// `P_N(cos phi)`; zero unless `|m| <= N` and `N - m` is even.
    pub fn cosine_product(&self, big_n: usize, m: i64) -> f64 {
        let n = big_n as i64;
        if m.abs() > n || (n - m).rem_euclid(2) != 0 {
            return 0.0;
        }
        let lo = ((n - m.abs()) / 2) as usize;
        let hi = ((n + m.abs()) / 2) as usize;
        if lo <= 2 && hi <= 2 {
            return self.p(lo) * self.p(hi);
        }
        (self.ln_p[lo] + self.ln_p[hi]).exp()
    }
}

/// `P_N(x)` by the three-term recurrence.
pub fn legendre_p(big_n: usize, x: f64) -> f64 {
    gegenbauer_normalized(big_n, 0.5, x)
}

/// `C_N^alpha(x) / C_N^alpha(1)` by the normalized three-term recurrence.
pub fn gegenbauer_normalized(big_n: usize, alpha: f64, x: f64) -> f64 {
    if big_n == 0 {
        return 1.0;
    }
    let mut g0 = 1.0;
    let mut g1 = x;
    for k in 2..=big_n {
        let kf = k as f64;
        let g2 = (2.0 * x * (kf + alpha - 1.0) * g1 - (kf - 1.0) * g0) / (kf + 2.0 * alpha - 1.0);
        g0 = g1;
        g1 = g2;
    }
    g1
}

/// `|a_m|^2` for the degree-`N` zonal harmonic on a meridian great circle.
/// Returned for `m = -N, -N+2, ..., N`.
pub fn zonal_meridian_profile(big_n: usize, catalog: &LegendreCatalog) -> Result<Vec<(i64, f64)>> {
    if big_n > catalog.max_degree() {
        return Err(LabError::OutOfRange(format!(
            "degree {big_n} beyond catalog {}",
            catalog.max_degree()
        )));
    }
    let scale = (2 * big_n + 1) as f64 / 2.0;
    let n = big_n as i64;
    Ok((0..=n)
        .map(|k| {
            let m = n - 2 * k;
            let c = catalog.cosine_product(big_n, m);
            (m, scale * c * c)
        })
        .collect())
}

/// Same profile by trapezoid quadrature of `int Y_N^0(phi) e^{-i m phi} / sqrt(2 pi)`.
pub fn zonal_meridian_quadrature(big_n: usize, nodes: usize) -> Result<Vec<(i64, f64)>> {
    if nodes < 2 * big_n + 2 {
        return Err(LabError::GridTooCoarse { nodes, degree: 2 * big_n });
    }
    let h = 2.0 * PI / nodes as f64;
    let norm = ((2 * big_n + 1) as f64 / (4.0 * PI)).sqrt();
    let vals: Vec<f64> = (0..nodes)
        .map(|q| norm * legendre_p(big_n, (q as f64 * h).cos()))
        .collect();
    let n = big_n as i64;
    Ok((-n..=n)
        .map(|m| {
            let (mut re, mut im) = (0.0, 0.0);
            for (q, v) in vals.iter().enumerate() {
                let ph = (q as i64 * m).rem_euclid(nodes as i64) as f64 * h;
                re += v * ph.cos();
                im -= v * ph.sin();
            }
            let s = h / (2.0 * PI).sqrt();
            (m, (re * s).powi(2) + (im * s).powi(2))
        })
        .collect())
}

/// Restricted `L^2` norm of the zonal harmonic on the meridian.
pub fn zonal_meridian_norm(big_n: usize, catalog: &LegendreCatalog) -> Result<f64> {
    Ok(zonal_meridian_profile(big_n, catalog)?.iter().map(|(_, v)| v).sum())
}

/// Projector-kernel integral `int_H int_H Pi_N(x,y) Pi_M^H(x,y)` for a latitude
/// circle (`d = 1`) of height `a` in `S^n`, with the default node count.
pub fn sphere_eigenspace_jump(n: usize, d: usize, big_n: u64, big_m: u64, a: f64) -> Result<f64> {
    let nodes = 2 * big_n as usize + 2;
    sphere_eigenspace_jump_with_nodes(n, d, big_n, big_m, a, nodes)
}

pub fn sphere_eigenspace_jump_with_nodes(
    n: usize,
    d: usize,
    big_n: u64,
    big_m: u64,
    a: f64,
    nodes: usize,
) -> Result<f64> {
    if big_m > big_n {
        return Ok(0.0);
    }
    let row = SphereJumpRow::compute(n, d, big_n, a, nodes, big_m)?;
    Ok(row.weights[big_m as usize])
}

/// All `W(N, M)` for `M = 0..=m_max` at fixed `N`.
#[derive(Clone, Debug)]
pub struct SphereJumpRow {
    pub degree: u64,
    pub weights: Vec<f64>,
}

impl SphereJumpRow {
    pub fn compute(n: usize, d: usize, big_n: u64, a: f64, nodes: usize, m_max: u64) -> Result<Self> {
        if d != 1 {
            return Err(LabError::Unsupported(format!(
                "eigenspace jump quadrature implemented for d = 1 only, got d = {d}"
            )));
        }
        if n < 2 {
            return invalid(format!("sphere dimension must be >= 2, got {n}"));
        }
        if !(0.0..1.0).contains(&a) {
            return invalid(format!("latitude height must lie in [0, 1), got {a}"));
        }
        let m_max = m_max.min(big_n);
        let degree = (big_n + m_max) as usize;
        if nodes <= degree {
            return Err(LabError::GridTooCoarse { nodes, degree });
        }
        let r2 = 1.0 - a * a;
        let r = r2.sqrt();
        let alpha = (n as f64 - 1.0) / 2.0;
        let mult = sphere_multiplicity(n, big_n)? as f64;
        let kscale = mult / unit_sphere_area(n);
        let h = 2.0 * PI / nodes as f64;
        // theta -> 2 pi - theta symmetry: only half the nodes are evaluated.
        let half = nodes / 2;
        let kern: Vec<f64> = (0..=half)
            .map(|q| kscale * gegenbauer_normalized(big_n as usize, alpha, r2 * (q as f64 * h).cos() + a * a))
            .collect();
        let cos_tab: Vec<f64> = (0..nodes).map(|q| (q as f64 * h).cos()).collect();
        let parity_zero = a == 0.0;
        let weights = (0..=m_max)
            .map(|m| {
                if parity_zero && (big_n + m) % 2 == 1 {
                    // theta -> theta + pi flips the sign of the integrand
                    return 0.0;
                }
                let mut acc = 0.0;
                for q in 0..nodes {
                    let kq = if q <= half { kern[q] } else { kern[nodes - q] };
                    acc += kq * cos_tab[(q as u64 * m % nodes as u64) as usize];
                }
                let factor = if m == 0 { 1.0 } else { 2.0 };
                r * factor * acc * h
            })
            .collect();
        Ok(SphereJumpRow { degree: big_n, weights })
    }
}

/// Closed form on `S^2` with a great circle:
/// `W(N, M) = (2N+1) p_{(N-M)/2} p_{(N+M)/2}` for `M >= 1`, half that at `M = 0`.
pub fn sphere2_great_circle_weight(big_n: u64, big_m: u64, catalog: &LegendreCatalog) -> f64 {
    if big_m > big_n || (big_n - big_m) % 2 == 1 {
        return 0.0;
    }
    let w = (2 * big_n + 1) as f64 * catalog.cosine_product(big_n as usize, big_m as i64);
    if big_m == 0 {
        w / 2.0
    } else {
        w
    }
}

/// `int_H Pi_lambda(x, x) dV_H` in closed form.
pub fn parseval_diag(pair: &ModelPair, level: &SpectralLevel) -> Result<f64> {
    let n = pair.n() as i32;
    let d = pair.d() as i32;
    match (pair.ambient.kind, level.index) {
        (ManifoldKind::Torus, LevelIndex::RadiusSquared(_)) => {
            Ok(level.multiplicity as f64 * (2.0 * PI).powi(d - n))
        }
        (ManifoldKind::Sphere, LevelIndex::Degree(deg)) => {
            let vol_h = match pair.sub {
                SubmanifoldSpec::MeridianCircle => 2.0 * PI,
                sub => sub.radius().powi(d) * unit_sphere_area(d as usize),
            };
            let mult = sphere_multiplicity(pair.n(), deg)? as f64;
            Ok(vol_h * mult / unit_sphere_area(pair.n()))
        }
        _ => invalid("level index does not match the model"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_values() {
        let cat = LegendreCatalog::new(600);
        assert_eq!(cat.p(0), 1.0);
        assert_eq!(cat.p(1), 0.5);
        assert_eq!(cat.p(2), 0.375);
        let mut p = 1.0;
        for j in 1..=600 {
            p *= (2 * j - 1) as f64 / (2 * j) as f64;
            assert!((cat.p(j) / p - 1.0).abs() < 1e-11, "j = {j}");
        }
    }

    #[test]
    fn legendre_matches_explicit_polynomials() {
        for &x in &[-0.9f64, -0.3, 0.0, 0.2, 0.77, 1.0] {
            let p2 = (3.0 * x * x - 1.0) / 2.0;
            let p3 = (5.0 * x * x * x - 3.0 * x) / 2.0;
            let p4 = (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0;
            assert!((legendre_p(2, x) - p2).abs() < 1e-14);
            assert!((legendre_p(3, x) - p3).abs() < 1e-14);
            assert!((legendre_p(4, x) - p4).abs() < 1e-14);
            // alpha = 1: Chebyshev U_N(x) / (N + 1)
            let u3 = 8.0 * x * x * x - 4.0 * x;
            assert!((gegenbauer_normalized(3, 1.0, x) - u3 / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn torus_weights() {
        let w = torus_mode_weight(&[3, 4], &[3]).unwrap();
        assert_eq!(w, 1.0 / (2.0 * PI));
        assert_eq!(torus_mode_weight(&[3, 4], &[4]).unwrap(), 0.0);
        assert_eq!(torus_mode_weight(&[0, 0], &[0]).unwrap(), 1.0 / (2.0 * PI));
        assert!(torus_mode_weight(&[1, 2], &[1, 2]).is_err());
    }

    #[test]
    fn zonal_n2_and_n0() {
        let cat = LegendreCatalog::new(10);
        assert_eq!(cat.cosine_product(2, 0), 0.25);
        assert_eq!(cat.cosine_product(2, 2), 0.375);
        assert_eq!(cat.cosine_product(2, 1), 0.0);
        let prof = zonal_meridian_profile(0, &cat).unwrap();
        assert_eq!(prof, vec![(0, 0.5)]);
    }

    #[test]
    fn grid_check() {
        assert!(matches!(
            sphere_eigenspace_jump_with_nodes(2, 1, 10, 4, 0.0, 14),
            Err(LabError::GridTooCoarse { .. })
        ));
        assert_eq!(sphere_eigenspace_jump(2, 1, 5, 9, 0.0).unwrap(), 0.0);
    }
}
