//! Bi-angle equation `G_H^{-s} o pi_H o G_M^{cs+t}(q, xi) = pi_H(q, xi)` on the
//! model pairs, analytic sojourn catalogs, a multistart solver, a cleanliness
//! probe, and the Clairaut return time on surfaces of revolution.
//!
//! Conventions: the M-geodesic has unit speed and runs for time `cs + t`; the
//! H-geodesic is traced backwards for arc length `s` at unit base speed.
//! Torus: `H = {x_{d..n} = 0}` in `R^n / (2 pi Z)^n`, `q` in angle coordinates.
//! Sphere: `S^n` in `R^{n+1}`, `H` = unit sphere of `span(e_0..e_d)`.

use crate::error::{invalid, LabError, Result};
use crate::spectral_models::{ManifoldKind, ModelPair, SubmanifoldSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scaled(v: &[f64], len: f64) -> Vec<f64> {
    let r = norm(v);
    v.iter().map(|x| x * len / r).collect()
}

/// Reduce an angle to `(-pi, pi]`.
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// A point of `S^c_H M`: base point on `H`, unit tangential direction and
/// normal covector part of length `sqrt(1 - c^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    /// Torus: `d` angles. Sphere: unit vector in `R^{d+1}`.
    pub q: Vec<f64>,
    /// Torus: unit `d`-vector. Sphere: unit vector in `R^{d+1}` orthogonal to `q`.
    pub eta_hat: Vec<f64>,
    /// Normal part, length `sqrt(1 - c^2)`.
    pub nu: Vec<f64>,
    pub c: f64,
}

impl ConePoint {
    /// Renormalizes `eta_hat` and `nu` (and `q` on the sphere).
    pub fn new(q: Vec<f64>, eta_hat: Vec<f64>, nu: Vec<f64>, c: f64, on_sphere: bool) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return invalid(format!("slope must lie in (0, 1), got {c}"));
        }
        if norm(&eta_hat) == 0.0 || norm(&nu) == 0.0 {
            return invalid("cone point needs nonzero tangential and normal parts");
        }
        let q = if on_sphere { scaled(&q, 1.0) } else { q };
        let mut eta = eta_hat;
        if on_sphere {
            let k = dot(&eta, &q);
            eta.iter_mut().zip(&q).for_each(|(e, qi)| *e -= k * qi);
        }
        let eta_hat = scaled(&eta, 1.0);
        let nu = scaled(&nu, (1.0 - c * c).sqrt());
        Ok(ConePoint { q, eta_hat, nu, c })
    }

    /// Full unit covector `xi = c eta_hat + nu` (tangential coordinates first).
    pub fn xi(&self) -> Vec<f64> {
        self.eta_hat.iter().map(|e| self.c * e).chain(self.nu.iter().cloned()).collect()
    }
}

/// The bi-angle problem for one model pair and slope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiangleModel {
    pub pair: ModelPair,
    pub c: f64,
}

impl BiangleModel {
    pub fn new(pair: ModelPair, c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return invalid(format!("slope must lie in (0, 1), got {c}"));
        }
        match pair.sub {
            SubmanifoldSpec::LatitudeSubsphere { a, .. } if a != 0.0 => {
                return Err(LabError::Unsupported("bi-angles on latitude subspheres with a != 0".into()))
            }
            _ => {}
        }
        Ok(BiangleModel { pair, c })
    }

    fn n(&self) -> usize {
        self.pair.n()
    }

    fn d(&self) -> usize {
        self.pair.d()
    }

    fn is_sphere(&self) -> bool {
        self.pair.ambient.kind == ManifoldKind::Sphere
    }

    /// Dimension of `S^c_H M`, `n + d - 2`.
    pub fn cone_dim(&self) -> usize {
        self.n() + self.d() - 2
    }

    /// Uniformly random cone point.
    pub fn random_point(&self, rng: &mut ChaCha8Rng) -> ConePoint {
        let gauss = |rng: &mut ChaCha8Rng, k: usize| -> Vec<f64> {
            loop {
                let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
                if norm(&v) > 1e-8 {
                    return v;
                }
            }
        };
        let (n, d) = (self.n(), self.d());
        let nu = gauss(rng, n - d);
        if self.is_sphere() {
            let q = gauss(rng, d + 1);
            let eta = gauss(rng, d + 1);
            ConePoint::new(q, eta, nu, self.c, true).expect("valid random point")
        } else {
            let q: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
            let eta = gauss(rng, d);
            ConePoint::new(q, eta, nu, self.c, false).expect("valid random point")
        }
    }

    /// Residual of the bi-angle equation; zero iff `(s, t, point)` is a bi-angle.
    pub fn residual(&self, p: &ConePoint, s: f64, t: f64) -> Vec<f64> {
        let big_t = self.c * s + t;
        if self.is_sphere() {
            self.sphere_residual(p, s, big_t)
        } else {
            // straight lines: normal displacement T nu, tangential T c eta_hat,
            // then the H-flow moves the base back by s eta_hat; pi_H xi is preserved
            let d = self.d();
            let mut r: Vec<f64> = p.nu.iter().map(|v| wrap(big_t * v)).collect();
            r.extend(p.eta_hat.iter().map(|e| wrap((self.c * big_t - s) * e)));
            r.extend(std::iter::repeat_n(0.0, d));
            r
        }
    }

    fn sphere_residual(&self, p: &ConePoint, s: f64, big_t: f64) -> Vec<f64> {
        let d = self.d();
        let xi = p.xi();
        let (st, ct) = big_t.sin_cos();
        // x(T) = cos T q + sin T xi, xi(T) = -sin T q + cos T xi
        let x: Vec<f64> = (0..xi.len())
            .map(|i| ct * p.q.get(i).copied().unwrap_or(0.0) + st * xi[i])
            .collect();
        let v: Vec<f64> = (0..xi.len())
            .map(|i| -st * p.q.get(i).copied().unwrap_or(0.0) + ct * xi[i])
            .collect();
        let mut r: Vec<f64> = x[d + 1..].to_vec();
        let px = &x[..=d];
        let pr = norm(px);
        let base: Vec<f64> = px.iter().map(|a| a / pr).collect();
        let pv = &v[..=d];
        let k = dot(pv, &base);
        let tang: Vec<f64> = pv.iter().zip(&base).map(|(a, b)| a - k * b).collect();
        let tl = norm(&tang);
        let u: Vec<f64> = if tl > 0.0 { tang.iter().map(|a| a / tl).collect() } else { tang.clone() };
        let (ss, cs) = s.sin_cos();
        for i in 0..=d {
            r.push(base[i] * cs - u[i] * ss - p.q[i]);
        }
        for i in 0..=d {
            r.push(self.c * (base[i] * ss + u[i] * cs) - self.c * p.eta_hat[i]);
        }
        r.push(tl - self.c);
        r
    }

    pub fn residual_norm(&self, p: &ConePoint, s: f64, t: f64) -> f64 {
        norm(&self.residual(p, s, t))
    }

    /// Local chart of `S^c_H M` around `base`: `zeta` has `cone_dim()` entries.
    pub fn chart(&self, base: &ConePoint, zeta: &[f64]) -> ConePoint {
        let (n, d) = (self.n(), self.d());
        let mut it = zeta.iter().copied();
        let nu0 = &base.nu;
        let nu_basis = complement_basis(std::slice::from_ref(nu0), n - d);
        let mut nu = nu0.clone();
        if self.is_sphere() {
            let q_basis = complement_basis(std::slice::from_ref(&base.q), d + 1);
            let mut q = base.q.clone();
            for b in &q_basis {
                let z = it.next().unwrap();
                q.iter_mut().zip(b).for_each(|(x, y)| *x += z * y);
            }
            let e_basis = complement_basis(&[base.q.clone(), base.eta_hat.clone()], d + 1);
            let mut eta = base.eta_hat.clone();
            for b in &e_basis {
                let z = it.next().unwrap();
                eta.iter_mut().zip(b).for_each(|(x, y)| *x += z * y);
            }
            for b in &nu_basis {
                let z = it.next().unwrap();
                nu.iter_mut().zip(b).for_each(|(x, y)| *x += z * y);
            }
            ConePoint::new(q, eta, nu, self.c, true).expect("chart point")
        } else {
            let mut q = base.q.clone();
            for x in q.iter_mut() {
                *x += it.next().unwrap();
            }
            let e_basis = complement_basis(std::slice::from_ref(&base.eta_hat), d);
            let mut eta = base.eta_hat.clone();
            for b in &e_basis {
                let z = it.next().unwrap();
                eta.iter_mut().zip(b).for_each(|(x, y)| *x += z * y);
            }
            for b in &nu_basis {
                let z = it.next().unwrap();
                nu.iter_mut().zip(b).for_each(|(x, y)| *x += z * y);
            }
            ConePoint::new(q, eta, nu, self.c, false).expect("chart point")
        }
    }
}

/// Orthonormal basis of the orthogonal complement of `vs` in `R^dim`.
fn complement_basis(vs: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for b in &basis {
            let k = dot(&w, b);
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= k * y);
        }
        let r = norm(&w);
        if r > 1e-12 {
            basis.push(w.iter().map(|x| x / r).collect());
        }
    }
    let fixed = basis.len();
    for i in 0..dim {
        let mut w = vec![0.0; dim];
        w[i] = 1.0;
        for b in &basis {
            let k = dot(&w, b);
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= k * y);
        }
        let r = norm(&w);
        if r > 1e-8 {
            basis.push(w.iter().map(|x| x / r).collect());
        }
    }
    basis.split_off(fixed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiAngleSolution {
    pub base: ConePoint,
    pub s: f64,
    pub t: f64,
    pub residual_norm: f64,
}

/// One entry of a sojourn catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SojournEntry {
    pub t: f64,
    pub s: f64,
    pub family: String,
    /// Predicted dimension of the solution component.
    pub dimension: usize,
    pub maximal: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SojournSet {
    pub entries: Vec<SojournEntry>,
}

impl SojournSet {
    /// Distinct sojourn times, ascending.
    pub fn times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.entries.iter().map(|e| e.t).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        ts
    }

    /// Nonzero `s` of maximal components with `t = 0` (the `s_j^m`).
    pub fn maximal_s_at_t0(&self) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.maximal && e.t.abs() < 1e-9)
            .map(|e| e.s)
            .collect()
    }

    /// Entries whose `s` lies in the open support of `w_hat`.
    pub fn visible(&self, ft: impl Fn(f64) -> f64) -> SojournSet {
        SojournSet { entries: self.entries.iter().filter(|e| ft(e.s) > 0.0).cloned().collect() }
    }

    fn sort(&mut self) {
        self.entries.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.s.total_cmp(&b.s)));
    }
}

/// Analytic sojourn catalog of a coordinate subtorus, `|s| <= s_max`, `|t| <= t_max`.
///
/// Generic-direction families: `d = n - 1` closes along `T = 2 pi m / w`;
/// `d = 1`, `n - d >= 2` forces `T = 0` and `s in 2 pi Z`; `n = 2, d = 1` has
/// the two-index lattice `s = 2 pi (c m2 / w - m1)`, `t = 2 pi (w m2 + c m1)`.
pub fn torus_sojourn_set(n: usize, d: usize, c: f64, s_max: f64, t_max: f64) -> Result<SojournSet> {
    ModelPair::torus(n, d)?;
    if !(c > 0.0 && c < 1.0) {
        return invalid(format!("slope must lie in (0, 1), got {c}"));
    }
    let w = (1.0 - c * c).sqrt();
    let dim = n + d - 2;
    let mut set = SojournSet::default();
    let mut push = |s: f64, t: f64, family: String| {
        if s.abs() <= s_max + 1e-9 && t.abs() <= t_max + 1e-9 {
            set.entries.push(SojournEntry { t, s, family, dimension: dim, maximal: true });
        }
    };
    if n == 2 {
        let m2_max = (w * (t_max + c * s_max) / (2.0 * PI)).ceil() as i64 + 1;
        for m2 in -m2_max..=m2_max {
            let m1_max = (c * (m2.abs() as f64) / w + s_max / (2.0 * PI)).ceil() as i64 + 1;
            for m1 in -m1_max..=m1_max {
                let s = 2.0 * PI * (c * m2 as f64 / w - m1 as f64);
                let t = 2.0 * PI * (w * m2 as f64 + c * m1 as f64);
                push(s, t, format!("lattice({m1},{m2})"));
            }
        }
    } else if n - d == 1 {
        let m_max = (t_max / (2.0 * PI * w)).ceil() as i64 + 1;
        for m in -m_max..=m_max {
            push(2.0 * PI * m as f64 * c / w, 2.0 * PI * m as f64 * w, format!("normal-closure({m})"));
        }
    } else if d == 1 {
        let m_max = (s_max / (2.0 * PI)).ceil() as i64 + 1;
        for m in -m_max..=m_max {
            push(2.0 * PI * m as f64, -2.0 * PI * m as f64 * c, format!("tangential-closure({m})"));
        }
    } else {
        push(0.0, 0.0, "principal".into());
    }
    set.sort();
    Ok(set)
}

/// Analytic catalog for a great circle (or great subsphere): `T = k pi`,
/// `s = j pi`, `j = k mod 2`, `t = k pi - c j pi`.
pub fn sphere_sojourn_set(c: f64, s_max: f64, t_max: f64, dimension: usize) -> Result<SojournSet> {
    if !(c > 0.0 && c < 1.0) {
        return invalid(format!("slope must lie in (0, 1), got {c}"));
    }
    let j_max = (s_max / PI).floor() as i64;
    let mut set = SojournSet::default();
    for j in -j_max..=j_max {
        let k_lo = ((-t_max + c * j as f64 * PI) / PI).ceil() as i64 - 1;
        let k_hi = ((t_max + c * j as f64 * PI) / PI).floor() as i64 + 1;
        for k in k_lo..=k_hi {
            if (k - j).rem_euclid(2) != 0 {
                continue;
            }
            let s = j as f64 * PI;
            let t = k as f64 * PI - c * s;
            if t.abs() <= t_max + 1e-9 {
                let family = if j.rem_euclid(2) == 0 { "even" } else { "antipodal" };
                set.entries.push(SojournEntry {
                    t,
                    s,
                    family: format!("{family}({j},{k})"),
                    dimension,
                    maximal: true,
                });
            }
        }
    }
    set.sort();
    Ok(set)
}

/// Multistart search settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub s_range: (f64, f64),
    pub t_range: (f64, f64),
    pub seeds_s: usize,
    pub seeds_t: usize,
    /// Random cone points per seed.
    pub points: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    /// Grouping radius in `(s, t)`.
    pub group_radius: f64,
    /// Samples per component for the dimension probe.
    pub probe_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            s_range: (-2.0 * PI, 2.0 * PI),
            t_range: (-2.0 * PI, 2.0 * PI),
            seeds_s: 24,
            seeds_t: 24,
            points: 2,
            seed: 7,
            tol: 1e-11,
            max_iter: 60,
            group_radius: 1e-6,
            probe_samples: 24,
        }
    }
}

/// Solutions sharing `(s, t)` up to the grouping radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub s: f64,
    pub t: f64,
    pub solutions: Vec<BiAngleSolution>,
    pub probe: Option<DimensionReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub components: Vec<Component>,
    pub converged: usize,
    pub failed: usize,
}

/// Damped Gauss-Newton in `(s, t)` at a fixed cone point.
pub fn newton_st(model: &BiangleModel, p: &ConePoint, s0: f64, t0: f64, tol: f64, max_iter: usize) -> Option<BiAngleSolution> {
    let (mut s, mut t) = (s0, t0);
    let mut r = model.residual(p, s, t);
    let mut rn = norm(&r);
    let h = 1e-7;
    for _ in 0..max_iter {
        if rn < tol {
            return Some(BiAngleSolution { base: p.clone(), s, t, residual_norm: rn });
        }
        let rs: Vec<f64> = model
            .residual(p, s + h, t)
            .iter()
            .zip(model.residual(p, s - h, t))
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        let rt: Vec<f64> = model
            .residual(p, s, t + h)
            .iter()
            .zip(model.residual(p, s, t - h))
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        let (a11, a12, a22) = (dot(&rs, &rs), dot(&rs, &rt), dot(&rt, &rt));
        let (b1, b2) = (dot(&rs, &r), dot(&rt, &r));
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-14 * (a11 * a22).max(1e-300) {
            return None;
        }
        let ds = -(a22 * b1 - a12 * b2) / det;
        let dt = -(a11 * b2 - a12 * b1) / det;
        let mut step = 1.0;
        loop {
            let (ns, nt) = (s + step * ds, t + step * dt);
            let nr = model.residual(p, ns, nt);
            let nn = norm(&nr);
            if nn < rn || step < 1e-6 {
                s = ns;
                t = nt;
                r = nr;
                rn = nn;
                break;
            }
            step *= 0.5;
        }
    }
    (rn < tol).then(|| BiAngleSolution { base: p.clone(), s, t, residual_norm: rn })
}

/// Multistart search over an `(s, t)` seed grid, grouped into components, each
/// annotated by the dimension probe.
pub fn solve_biangles(model: &BiangleModel, cfg: &SolverConfig) -> Result<SolveReport> {
    if cfg.seeds_s == 0 || cfg.seeds_t == 0 || cfg.points == 0 {
        return invalid("solver needs at least one seed and one point");
    }
    let seeds: Vec<(usize, f64, f64)> = (0..cfg.seeds_s)
        .flat_map(|i| (0..cfg.seeds_t).map(move |j| (i, j)))
        .enumerate()
        .map(|(k, (i, j))| {
            let fs = (i as f64 + 0.5) / cfg.seeds_s as f64;
            let ft = (j as f64 + 0.5) / cfg.seeds_t as f64;
            (
                k,
                cfg.s_range.0 + fs * (cfg.s_range.1 - cfg.s_range.0),
                cfg.t_range.0 + ft * (cfg.t_range.1 - cfg.t_range.0),
            )
        })
        .collect();
    let results: Vec<Vec<Option<BiAngleSolution>>> = seeds
        .par_iter()
        .map(|&(k, s0, t0)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(k as u64));
            (0..cfg.points)
                .map(|_| {
                    let p = model.random_point(&mut rng);
                    newton_st(model, &p, s0, t0, cfg.tol, cfg.max_iter)
                })
                .collect()
        })
        .collect();
    let mut converged = 0;
    let mut failed = 0;
    let mut comps: Vec<Component> = Vec::new();
    for sol in results.into_iter().flatten() {
        let Some(sol) = sol else {
            failed += 1;
            continue;
        };
        let inside = sol.s >= cfg.s_range.0 - 1e-9
            && sol.s <= cfg.s_range.1 + 1e-9
            && sol.t >= cfg.t_range.0 - 1e-9
            && sol.t <= cfg.t_range.1 + 1e-9;
        if !inside {
            failed += 1;
            continue;
        }
        converged += 1;
        match comps
            .iter_mut()
            .find(|c| (c.s - sol.s).hypot(c.t - sol.t) <= cfg.group_radius.max(1e-12) * (1.0 + c.s.abs() + c.t.abs()))
        {
            Some(c) => c.solutions.push(sol),
            None => comps.push(Component { s: sol.s, t: sol.t, solutions: vec![sol], probe: None }),
        }
    }
    comps.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.s.total_cmp(&b.s)));
    for (i, c) in comps.iter_mut().enumerate() {
        let base = &c.solutions[0];
        c.probe = Some(component_dimension_probe(
            model,
            &base.base,
            c.s,
            c.t,
            cfg.probe_samples,
            cfg.seed.wrapping_mul(31).wrapping_add(i as u64),
        ));
    }
    Ok(SolveReport { components: comps, converged, failed })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStatus {
    Clean,
    Unclean,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    /// Rank of the projected sample cloud, when enough samples converged.
    pub dimension: Option<usize>,
    /// Kernel dimension of the residual Jacobian in `(s, t, chart)`.
    pub fixed_dimension: usize,
    pub clean: Option<bool>,
    pub status: ProbeStatus,
    pub samples: usize,
    pub jacobian_singular_values: Vec<f64>,
    pub cloud_singular_values: Vec<f64>,
}

/// Minimum number of projected samples for a conclusive probe.
pub const MIN_PROBE_SAMPLES: usize = 20;
/// Relative singular-value cut for numerical rank.
pub const RANK_TOL: f64 = 1e-6;
/// Finite-difference step of the Jacobian.
pub const FD_STEP: f64 = 1e-5;

fn numerical_rank(sv: &[f64]) -> usize {
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        0
    } else {
        sv.iter().filter(|&&x| x > RANK_TOL * top).count()
    }
}

/// Richardson-refined central-difference Jacobian of `z -> F(z)`.
fn jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, z: &[f64]) -> DMatrix<f64> {
    let m = f(z).len();
    let mut jac = DMatrix::zeros(m, z.len());
    for k in 0..z.len() {
        let diff = |h: f64| -> Vec<f64> {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[k] += h;
            zm[k] -= h;
            f(&zp).iter().zip(f(&zm)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        };
        let d1 = diff(FD_STEP);
        let d2 = diff(FD_STEP / 2.0);
        for i in 0..m {
            jac[(i, k)] = (4.0 * d2[i] - d1[i]) / 3.0;
        }
    }
    jac
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Dimension of the component through `(base, s, t)`: kernel dimension of the
/// linearized equation versus PCA rank of Gauss-Newton-projected samples.
pub fn component_dimension_probe(
    model: &BiangleModel,
    base: &ConePoint,
    s: f64,
    t: f64,
    samples: usize,
    seed: u64,
) -> DimensionReport {
    let k = model.cone_dim();
    let f = |z: &[f64]| -> Vec<f64> { model.residual(&model.chart(base, &z[2..]), s + z[0], t + z[1]) };
    let z0 = vec![0.0; k + 2];
    let jac = jacobian(&f, &z0);
    let jsv = singular_values(&jac);
    let fixed_dimension = k + 2 - numerical_rank(&jsv);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1e-3;
    let mut cloud: Vec<Vec<f64>> = Vec::new();
    for _ in 0..samples {
        let mut z: Vec<f64> = (0..k + 2).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let mut ok = false;
        for _ in 0..30 {
            let r = f(&z);
            if norm(&r) < 1e-12 {
                ok = true;
                break;
            }
            // minimum-norm Gauss-Newton step
            let jz = jacobian(&f, &z);
            let rv = nalgebra::DVector::from_vec(r);
            let svd = jz.svd(true, true);
            let Ok(step) = svd.solve(&rv, RANK_TOL * svd.singular_values.max()) else {
                break;
            };
            z.iter_mut().zip(step.iter()).for_each(|(a, b)| *a -= b);
        }
        if ok {
            cloud.push(z);
        }
    }
    let n_ok = cloud.len();
    let (dimension, csv) = if n_ok >= MIN_PROBE_SAMPLES {
        let mean: Vec<f64> = (0..k + 2).map(|i| cloud.iter().map(|z| z[i]).sum::<f64>() / n_ok as f64).collect();
        let mat = DMatrix::from_fn(n_ok, k + 2, |r, c| cloud[r][c] - mean[c]);
        let sv = singular_values(&mat);
        (Some(numerical_rank(&sv)), sv)
    } else {
        (None, Vec::new())
    };
    let clean = dimension.map(|dm| dm == fixed_dimension);
    let status = match clean {
        Some(true) => ProbeStatus::Clean,
        Some(false) => ProbeStatus::Unclean,
        None => ProbeStatus::Inconclusive,
    };
    DimensionReport {
        dimension,
        fixed_dimension,
        clean,
        status,
        samples: n_ok,
        jacobian_singular_values: jsv,
        cloud_singular_values: csv,
    }
}

/// Surface of revolution about the `z` axis given implicitly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RevolutionProfile {
    /// Unit sphere.
    Sphere,
    /// `(x^2 + y^2) / a^2 + z^2 / b^2 = 1`.
    Spheroid { a: f64, b: f64 },
}

impl RevolutionProfile {
    fn axes(&self) -> (f64, f64) {
        match *self {
            RevolutionProfile::Sphere => (1.0, 1.0),
            RevolutionProfile::Spheroid { a, b } => (a, b),
        }
    }

    fn g(&self, x: &[f64; 3]) -> f64 {
        let (a, b) = self.axes();
        (x[0] * x[0] + x[1] * x[1]) / (a * a) + x[2] * x[2] / (b * b) - 1.0
    }

    fn grad(&self, x: &[f64; 3]) -> [f64; 3] {
        let (a, b) = self.axes();
        [2.0 * x[0] / (a * a), 2.0 * x[1] / (a * a), 2.0 * x[2] / (b * b)]
    }

    /// Point at reduced latitude `phi0` and longitude `theta`.
    fn point(&self, phi0: f64, theta: f64) -> [f64; 3] {
        let (a, b) = self.axes();
        [a * phi0.cos() * theta.cos(), a * phi0.cos() * theta.sin(), b * phi0.sin()]
    }
}

/// Return times from a latitude circle back to it, for both launch directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClairautReport {
    pub northbound: Vec<f64>,
    pub southbound: Vec<f64>,
    /// Max minus min over the samples of each branch.
    pub max_deviation_north: f64,
    pub max_deviation_south: f64,
    /// Largest relative drift of `p_theta` over one return.
    pub max_p_theta_drift: f64,
}

/// Drift of the Clairaut integral that aborts a sample.
pub const P_THETA_TOLERANCE: f64 = 1e-9;

fn add3(a: &[f64; 3], b: &[f64; 3], k: f64) -> [f64; 3] {
    [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// One RATTLE step for `H = |p|^2 / 2` on `{g = 0}`.
fn rattle_step(prof: &RevolutionProfile, x: &[f64; 3], p: &[f64; 3], h: f64) -> Result<([f64; 3], [f64; 3])> {
    let g0 = prof.grad(x);
    let free = add3(x, p, h);
    let mut lam = 0.0;
    let mut xn = free;
    let mut converged = false;
    for _ in 0..50 {
        xn = add3(&free, &g0, -0.5 * h * h * lam);
        let gv = prof.g(&xn);
        if gv.abs() < 1e-15 {
            converged = true;
            break;
        }
        let dg = -0.5 * h * h * dot3(&prof.grad(&xn), &g0);
        lam -= gv / dg;
    }
    if !converged && prof.g(&xn).abs() > 1e-13 {
        return Err(LabError::Numeric("RATTLE position constraint did not converge".into()));
    }
    let ph = add3(p, &g0, -0.5 * h * lam);
    let g1 = prof.grad(&xn);
    let mu = dot3(&g1, &ph) / dot3(&g1, &g1);
    let pn = add3(&ph, &g1, -mu);
    Ok((xn, pn))
}

/// First return time to the latitude circle at reduced latitude `phi0` for a
/// unit-speed geodesic with tangential component `c`, launched north (`+1`)
/// or south (`-1`) at longitude `theta`. Returns `(time, p_theta drift)`.
pub fn clairaut_return_time_single(
    prof: &RevolutionProfile,
    phi0: f64,
    c: f64,
    theta: f64,
    direction: f64,
    h: f64,
) -> Result<(f64, f64)> {
    let x0 = prof.point(phi0, theta);
    let rho = (x0[0] * x0[0] + x0[1] * x0[1]).sqrt();
    let e_theta = [-theta.sin(), theta.cos(), 0.0];
    let n = prof.grad(&x0);
    // meridian tangent: n x e_theta, oriented by direction in z
    let mut m = [
        n[1] * e_theta[2] - n[2] * e_theta[1],
        n[2] * e_theta[0] - n[0] * e_theta[2],
        n[0] * e_theta[1] - n[1] * e_theta[0],
    ];
    let ml = dot3(&m, &m).sqrt();
    m.iter_mut().for_each(|v| *v /= ml);
    if m[2] * direction < 0.0 {
        m.iter_mut().for_each(|v| *v = -*v);
    }
    let w = (1.0 - c * c).sqrt();
    let mut x = x0;
    let mut p = add3(&[c * e_theta[0], c * e_theta[1], 0.0], &m, w);
    let p_theta0 = x[0] * p[1] - x[1] * p[0];
    let z0 = x0[2];
    let mut drift: f64 = 0.0;
    let mut time = 0.0;
    let max_steps = (200.0 / h) as usize;
    for _ in 0..max_steps {
        let (xn, pn) = rattle_step(prof, &x, &p, h)?;
        let pt = xn[0] * pn[1] - xn[1] * pn[0];
        drift = drift.max((pt - p_theta0).abs() / rho.max(1e-300));
        if drift > P_THETA_TOLERANCE {
            return Err(LabError::Numeric(format!("p_theta drift {drift:.3e} exceeds {P_THETA_TOLERANCE:e}")));
        }
        let f0 = (x[2] - z0) * direction;
        let f1 = (xn[2] - z0) * direction;
        if time > 0.0 && f0 > 0.0 && f1 <= 0.0 {
            // cubic Hermite in z with slopes p_z, then bisection
            let (a0, a1, d0, d1) = (x[2] - z0, xn[2] - z0, p[2], pn[2]);
            let zf = |s: f64| {
                let s2 = s * s;
                let s3 = s2 * s;
                (2.0 * s3 - 3.0 * s2 + 1.0) * a0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * a1 + (s3 - s2) * h * d1
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if zf(mid) * direction > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok((time + 0.5 * (lo + hi) * h, drift));
        }
        x = xn;
        p = pn;
        time += h;
    }
    Err(LabError::Numeric("no return to the latitude circle within the time budget".into()))
}

/// Return times from `samples` launch longitudes in both directions.
pub fn clairaut_return_time(prof: &RevolutionProfile, phi0: f64, c: f64, samples: usize, h: f64) -> Result<ClairautReport> {
    if !(c > 0.0 && c < 1.0) {
        return invalid(format!("slope must lie in (0, 1), got {c}"));
    }
    if samples == 0 || !(h > 0.0) {
        return invalid("need at least one sample and a positive step");
    }
    let run = |dir: f64| -> Result<(Vec<f64>, f64)> {
        let out: Vec<(f64, f64)> = (0..samples)
            .into_par_iter()
            .map(|k| clairaut_return_time_single(prof, phi0, c, 2.0 * PI * k as f64 / samples as f64 + 0.1, dir, h))
            .collect::<Result<_>>()?;
        let drift = out.iter().map(|o| o.1).fold(0.0, f64::max);
        Ok((out.into_iter().map(|o| o.0).collect(), drift))
    };
    let (north, dn) = run(1.0)?;
    let (south, ds) = run(-1.0)?;
    let spread = |v: &[f64]| {
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    Ok(ClairautReport {
        max_deviation_north: spread(&north),
        max_deviation_south: spread(&south),
        northbound: north,
        southbound: south,
        max_p_theta_drift: dn.max(ds),
    })
}
