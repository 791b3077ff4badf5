//! Ladder sums over the joint spectrum `(lambda_j, mu_k)`:
//!
//! * sharp sums `sum_{lambda_j <= lambda} sum_{|mu_k - c lambda_j| <= eps} W`,
//! * fuzzy sums with a window `psi(mu_k - c lambda_j)`,
//! * jumps at a single level and the eps-staircase,
//! * the tapered trace `S(t) = sum W psi(mu - c lambda) e^{i t lambda}` and peak
//!   detection on `|S|`.
//!
//! Torus sums are accumulated as integer lattice counts per shell, so sharp
//! torus sums are exact multiples of `(2 pi)^{d-n}`.

use crate::arith::{ladder_member_exact, ladder_member_float, HalfWidth, Slope, Q};
use crate::error::{invalid, LabError, Result};
use crate::restriction_weights::{parseval_diag, sphere2_great_circle_weight, LegendreCatalog, SphereJumpRow};
use crate::spectral_models::{
    radius_squared_floor, sphere_levels, JointTorusSpectrum, LevelIndex, ManifoldKind, ModelPair,
    SpectralLevel, SubmanifoldSpec,
};
use crate::window_functions::{WindowFunction, WindowKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Relative truncation error accepted for fuzzy sums.
pub const FUZZY_TOLERANCE: f64 = 1e-6;

/// Slope `c` together with a window.
#[derive(Clone, Debug)]
pub struct LadderWindow {
    slope: Slope,
    window: WindowFunction,
    eps: Option<HalfWidth>,
}

impl LadderWindow {
    /// Requires `0 < c < 1`.
    pub fn new(slope: Slope, window: WindowFunction) -> Result<Self> {
        let c = slope.value();
        if !(c > 0.0 && c < 1.0) {
            return invalid(format!("ladder slope must lie in (0, 1), got {slope}"));
        }
        Self::any_slope(slope, window)
    }

    /// Any positive slope; used for forbidden-region probes with `c > 1`.
    pub fn any_slope(slope: Slope, window: WindowFunction) -> Result<Self> {
        let c = slope.value();
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("ladder slope must be positive, got {slope}"));
        }
        let eps = match window.kind() {
            WindowKind::SharpIndicator { eps } => Some(HalfWidth::new(*eps)?),
            _ => None,
        };
        Ok(LadderWindow { slope, window, eps })
    }

    pub fn sharp(slope: Slope, eps: f64) -> Result<Self> {
        Self::new(slope, WindowFunction::sharp(eps)?)
    }

    /// Sharp window with an exactly rational half-width such as `1/3`.
    pub fn sharp_rational(slope: Slope, eps: Q) -> Result<Self> {
        let hw = HalfWidth::rational(eps)?;
        let mut lw = Self::new(slope, WindowFunction::sharp(hw.value())?)?;
        lw.eps = Some(hw);
        Ok(lw)
    }

    pub fn slope(&self) -> &Slope {
        &self.slope
    }

    pub fn c(&self) -> f64 {
        self.slope.value()
    }

    pub fn window(&self) -> &WindowFunction {
        &self.window
    }

    pub fn is_sharp(&self) -> bool {
        self.eps.is_some()
    }

    fn radius(&self) -> f64 {
        match self.eps {
            Some(e) => e.value(),
            None => self.window.eval_radius(),
        }
    }

    /// Closed membership test `|mu - c lambda| <= eps` from squared values;
    /// exact when `c^2` and `eps` are rational. Returns (member, guard hit).
    fn member_sq(&self, mu2: u64, lam2: u64) -> (bool, bool) {
        let eps = self.eps.expect("sharp window");
        if let Ok(m) = i64::try_from(mu2) {
            if let Some(b) = ladder_member_exact(Q::from_integer(m), lam2 as i128, &self.slope, &eps) {
                return (b, false);
            }
        }
        ladder_member_float((mu2 as f64).sqrt(), (lam2 as f64).sqrt(), self.c(), eps.value())
    }

    fn member_real(&self, mu: f64, lambda: f64) -> (bool, bool) {
        ladder_member_float(mu, lambda, self.c(), self.eps.expect("sharp window").value())
    }
}

/// Free-form metadata attached to every series.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub model: String,
    pub window: String,
    pub slope: String,
    pub cutoff: f64,
    pub notes: BTreeMap<String, String>,
}

/// Real series over a lambda, epsilon or T grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderSeries {
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: SeriesMeta,
}

/// Ladder mass carried by each level `lambda_j <= cutoff`.
#[derive(Clone, Debug)]
pub struct LevelMasses {
    pub levels: Vec<SpectralLevel>,
    /// Window-weighted restriction mass of each level.
    pub masses: Vec<f64>,
    /// Exact lattice-pair counts (torus, sharp window).
    pub counts: Option<Vec<u64>>,
    /// Bound on the mass discarded by truncating the window.
    pub truncation_bound: f64,
    /// Floating membership decisions that fell inside the guard band.
    pub guard_hits: u64,
}

impl LevelMasses {
    /// Running sums at every level.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = Neumaier::default();
        self.masses
            .iter()
            .map(|m| {
                acc.add(*m);
                acc.value()
            })
            .collect()
    }

    /// Number of levels with `lambda_j <= lambda`.
    pub fn count_at_most(&self, lambda: f64) -> usize {
        let key = radius_squared_floor(lambda).unwrap_or(0);
        self.levels.partition_point(|lv| match lv.index {
            LevelIndex::RadiusSquared(k) => lambda >= 0.0 && k <= key,
            LevelIndex::Degree(deg) => (deg as f64) <= lambda,
        })
    }
}

/// Compensated summation with a fixed operation order.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Fuzzy sum with its certified truncation bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FuzzySum {
    pub value: f64,
    pub truncation_bound: f64,
}

#[derive(Clone, Debug)]
enum Source {
    Torus(JointTorusSpectrum),
    Sphere { n_max: u64, catalog: LegendreCatalog },
}

/// Spectral data of one model pair up to a cutoff, with ladder evaluators.
#[derive(Clone, Debug)]
pub struct LadderEngine {
    pair: ModelPair,
    source: Source,
}

impl LadderEngine {
    pub fn new(pair: ModelPair, lambda_max: f64) -> Result<Self> {
        if !(lambda_max.is_finite() && lambda_max >= 0.0) {
            return invalid(format!("lambda_max must be finite and nonnegative, got {lambda_max}"));
        }
        match pair.ambient.kind {
            ManifoldKind::Torus => {
                Ok(Self::from_joint(JointTorusSpectrum::new(pair.n(), pair.d(), lambda_max)?))
            }
            ManifoldKind::Sphere => {
                if pair.d() != 1 {
                    return Err(LabError::Unsupported(format!(
                        "sphere ladder sums are implemented for circles (d = 1), got d = {}",
                        pair.d()
                    )));
                }
                let n_max = lambda_max.floor() as u64;
                Ok(LadderEngine {
                    pair,
                    source: Source::Sphere { n_max, catalog: LegendreCatalog::new(n_max as usize + 1) },
                })
            }
        }
    }

    pub fn from_joint(js: JointTorusSpectrum) -> Self {
        let pair = ModelPair::torus(js.n, js.d).expect("validated joint spectrum");
        LadderEngine { pair, source: Source::Torus(js) }
    }

    pub fn pair(&self) -> &ModelPair {
        &self.pair
    }

    pub fn joint(&self) -> Option<&JointTorusSpectrum> {
        match &self.source {
            Source::Torus(js) => Some(js),
            Source::Sphere { .. } => None,
        }
    }

    pub fn lambda_max(&self) -> f64 {
        match &self.source {
            Source::Torus(js) => js.lambda_max(),
            Source::Sphere { n_max, .. } => *n_max as f64,
        }
    }

    pub fn levels(&self) -> Vec<SpectralLevel> {
        match &self.source {
            Source::Torus(js) => js.levels(),
            Source::Sphere { n_max, .. } => sphere_levels(self.pair.n(), *n_max).expect("validated sphere"),
        }
    }

    /// Mode weight of one torus lattice pair, `(2 pi)^{d-n}`.
    pub fn torus_unit(&self) -> f64 {
        (2.0 * PI).powi(self.pair.d() as i32 - self.pair.n() as i32)
    }

    pub fn describe(&self) -> String {
        let kind = match self.pair.ambient.kind {
            ManifoldKind::Torus => "T",
            ManifoldKind::Sphere => "S",
        };
        let sub = match self.pair.sub {
            SubmanifoldSpec::CoordinateSubtorus { d } => format!("coordinate T^{d}"),
            SubmanifoldSpec::GreatSubsphere { d } => format!("great S^{d}"),
            SubmanifoldSpec::LatitudeSubsphere { d, a } => format!("latitude S^{d} at a={a}"),
            SubmanifoldSpec::MeridianCircle => "meridian circle".into(),
        };
        format!("{kind}^{} / {sub}", self.pair.n())
    }

    fn check_range(&self, lambda: f64) -> Result<()> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return invalid(format!("lambda must be finite and nonnegative, got {lambda}"));
        }
        if lambda > self.lambda_max() * (1.0 + 1e-12) + 1e-12 {
            return Err(LabError::OutOfRange(format!(
                "lambda {lambda} beyond enumerated range {}",
                self.lambda_max()
            )));
        }
        Ok(())
    }

    fn radius_r(&self) -> f64 {
        self.pair.sub.radius()
    }

    /// `W(N, M)` for `M = m_lo..=m_hi` (clipped to `0..=N`).
    fn sphere_weights(&self, big_n: u64, m_lo: u64, m_hi: u64) -> Result<Vec<f64>> {
        let Source::Sphere { catalog, .. } = &self.source else {
            unreachable!("sphere weights on a torus")
        };
        let m_hi = m_hi.min(big_n);
        if m_lo > m_hi {
            return Ok(Vec::new());
        }
        let a = self.pair.sub.height();
        if self.pair.n() == 2 && a == 0.0 {
            return Ok((m_lo..=m_hi).map(|m| sphere2_great_circle_weight(big_n, m, catalog)).collect());
        }
        let nodes = 2 * big_n as usize + 2;
        let row = SphereJumpRow::compute(self.pair.n(), 1, big_n, a, nodes, m_hi)?;
        Ok(row.weights[m_lo as usize..=m_hi as usize].to_vec())
    }

    /// Candidate degrees `M` whose `mu = M / r` lies within `radius` of `c N`.
    fn sphere_band(&self, big_n: u64, c: f64, radius: f64) -> Option<(u64, u64)> {
        let r = self.radius_r();
        let center = c * big_n as f64;
        let lo = ((center - radius) * r - 1e-9).ceil().max(0.0);
        let hi = ((center + radius) * r + 1e-9).floor().min(big_n as f64);
        if hi < lo {
            None
        } else {
            Some((lo as u64, hi as u64))
        }
    }

    fn sphere_member(&self, lw: &LadderWindow, big_n: u64, m: u64) -> (bool, bool) {
        if self.pair.sub.height() == 0.0 {
            lw.member_sq(m * m, big_n * big_n)
        } else {
            lw.member_real(m as f64 / self.radius_r(), big_n as f64)
        }
    }

    /// Per-level masses for all levels with `lambda_j <= limit`.
    pub fn level_masses(&self, lw: &LadderWindow, limit: f64) -> Result<LevelMasses> {
        self.check_range(limit)?;
        match &self.source {
            Source::Torus(js) => self.torus_masses(js, lw, limit),
            Source::Sphere { .. } => self.sphere_masses(lw, limit),
        }
    }

    fn torus_masses(&self, js: &JointTorusSpectrum, lw: &LadderWindow, limit: f64) -> Result<LevelMasses> {
        let key_limit = radius_squared_floor(limit)?.min(js.r2max);
        let len = key_limit as usize + 1;
        let c = lw.c();
        let radius = lw.radius();
        let mut counts = vec![0u64; if lw.is_sharp() { len } else { 0 }];
        let mut dense = vec![0.0f64; if lw.is_sharp() { 0 } else { len }];
        let mut visited = 0u64;
        let mut guard_hits = 0u64;
        for &(mu2, ct) in js.tangential() {
            if mu2 > key_limit {
                break;
            }
            let mu = (mu2 as f64).sqrt();
            let lam_lo = ((mu - radius) / c).max(0.0) * (1.0 - 1e-12) - 1e-9;
            let lam_hi = (mu + radius) / c * (1.0 + 1e-12) + 1e-9;
            let lo2 = if lam_lo <= 0.0 { 0 } else { (lam_lo * lam_lo).floor() as u64 };
            let hi2 = (lam_hi * lam_hi).ceil();
            let hi2 = if hi2 >= key_limit as f64 { key_limit } else { hi2 as u64 };
            if lw.is_sharp() {
                js.for_each_in_band(mu2, lo2, hi2, |lam2, cn| {
                    let (inside, near) = lw.member_sq(mu2, lam2);
                    guard_hits += near as u64;
                    if inside {
                        counts[lam2 as usize] += ct as u64 * cn;
                    }
                });
            } else {
                let w = lw.window();
                js.for_each_in_band(mu2, lo2, hi2, |lam2, cn| {
                    let pairs = ct as u64 * cn;
                    visited += pairs;
                    dense[lam2 as usize] += pairs as f64 * w.eval(mu - c * (lam2 as f64).sqrt());
                });
            }
        }
        let unit = self.torus_unit();
        let shell = &js.shell_counts()[..len];
        let mut levels = Vec::new();
        let mut masses = Vec::new();
        let mut level_counts = Vec::new();
        for (k, &r) in shell.iter().enumerate() {
            if r == 0 {
                continue;
            }
            levels.push(SpectralLevel {
                value: (k as f64).sqrt(),
                multiplicity: r as u64,
                index: LevelIndex::RadiusSquared(k as u64),
            });
            if lw.is_sharp() {
                level_counts.push(counts[k]);
                masses.push(counts[k] as f64 * unit);
            } else {
                masses.push(dense[k] * unit);
            }
        }
        let truncation_bound = if lw.is_sharp() {
            0.0
        } else {
            let total: u64 = shell.iter().map(|&r| r as u64).sum();
            (total - visited.min(total)) as f64 * lw.window().truncation_sup() * unit
        };
        Ok(LevelMasses {
            levels,
            masses,
            counts: lw.is_sharp().then_some(level_counts),
            truncation_bound,
            guard_hits,
        })
    }

    fn sphere_masses(&self, lw: &LadderWindow, limit: f64) -> Result<LevelMasses> {
        let n_top = limit.floor() as u64;
        let c = lw.c();
        let radius = lw.radius();
        let r = self.radius_r();
        let levels = sphere_levels(self.pair.n(), n_top)?;
        let mut masses = Vec::with_capacity(levels.len());
        let mut guard_hits = 0u64;
        let mut truncation_bound = 0.0;
        let sup = if lw.is_sharp() { 0.0 } else { lw.window().truncation_sup() };
        for lv in &levels {
            let big_n = lv.value as u64;
            let mut acc = 0.0;
            if let Some((m_lo, m_hi)) = self.sphere_band(big_n, c, radius) {
                let ws = self.sphere_weights(big_n, m_lo, m_hi)?;
                for (i, w) in ws.iter().enumerate() {
                    let m = m_lo + i as u64;
                    if lw.is_sharp() {
                        let (inside, near) = self.sphere_member(lw, big_n, m);
                        guard_hits += near as u64;
                        if inside {
                            acc += w;
                        }
                    } else {
                        acc += w * lw.window().eval(m as f64 / r - c * big_n as f64);
                    }
                }
            }
            if sup > 0.0 {
                truncation_bound += sup * parseval_diag(&self.pair, lv)?;
            }
            masses.push(acc);
        }
        Ok(LevelMasses { levels, masses, counts: None, truncation_bound, guard_hits })
    }

    /// `sum_{lambda_j <= lambda} sum_{|mu_k - c lambda_j| <= eps} W(lambda_j, mu_k)`.
    pub fn sharp_ladder_sum(&self, lw: &LadderWindow, lambda: f64) -> Result<f64> {
        if !lw.is_sharp() {
            return invalid("sharp_ladder_sum needs a sharp indicator window");
        }
        let lm = self.level_masses(lw, lambda)?;
        let mut acc = Neumaier::default();
        lm.masses.iter().for_each(|m| acc.add(*m));
        Ok(acc.value())
    }

    /// Exact lattice-pair count behind a torus sharp sum.
    pub fn sharp_ladder_count(&self, lw: &LadderWindow, lambda: f64) -> Result<u64> {
        if self.joint().is_none() || !lw.is_sharp() {
            return invalid("pair counts exist for sharp torus sums only");
        }
        let lm = self.level_masses(lw, lambda)?;
        Ok(lm.counts.expect("sharp torus").iter().sum())
    }

    /// Sharp or fuzzy sums at each requested `lambda` from one pass over the levels.
    pub fn ladder_series(&self, lw: &LadderWindow, lambdas: &[f64]) -> Result<LadderSeries> {
        let top = lambdas.iter().cloned().fold(0.0, f64::max);
        let lm = self.level_masses(lw, top)?;
        let cum = lm.cumulative();
        let values = lambdas
            .iter()
            .map(|&l| {
                let k = lm.count_at_most(l);
                if k == 0 {
                    0.0
                } else {
                    cum[k - 1]
                }
            })
            .collect();
        Ok(LadderSeries {
            abscissa: lambdas.to_vec(),
            values,
            meta: self.meta(lw, top),
        })
    }

    pub fn meta(&self, lw: &LadderWindow, cutoff: f64) -> SeriesMeta {
        SeriesMeta {
            model: self.describe(),
            window: lw.window().kind().to_string(),
            slope: lw.slope().text().to_string(),
            cutoff,
            notes: BTreeMap::new(),
        }
    }

    /// `sum_{lambda_j <= lambda} sum_k psi(mu_k - c lambda_j) W` with certified truncation.
    pub fn fuzzy_ladder_sum(&self, lw: &LadderWindow, lambda: f64) -> Result<FuzzySum> {
        if lw.is_sharp() {
            return invalid("fuzzy_ladder_sum needs a smooth window");
        }
        let lm = self.level_masses(lw, lambda)?;
        let mut acc = Neumaier::default();
        lm.masses.iter().for_each(|m| acc.add(*m));
        let value = acc.value();
        if lm.truncation_bound > FUZZY_TOLERANCE * value.abs() {
            return Err(LabError::Tolerance(format!(
                "window truncation bound {:.3e} exceeds {FUZZY_TOLERANCE:e} of the sum {value:.6e}",
                lm.truncation_bound
            )));
        }
        Ok(FuzzySum { value, truncation_bound: lm.truncation_bound })
    }

    fn torus_shell_key(&self, lambda_j: f64) -> Result<u64> {
        let Source::Torus(js) = &self.source else { unreachable!() };
        let k = (lambda_j * lambda_j).round();
        if !(k >= 0.0) || (k.sqrt() - lambda_j).abs() > 1e-9 * lambda_j.max(1.0) {
            return Err(LabError::NotALevel(format!("{lambda_j} is not a lattice norm")));
        }
        let k = k as u64;
        if k > js.r2max {
            return Err(LabError::OutOfRange(format!("level {lambda_j} beyond {}", js.lambda_max())));
        }
        if js.shell_counts()[k as usize] == 0 {
            return Err(LabError::NotALevel(format!("no lattice vector has |j|^2 = {k}")));
        }
        Ok(k)
    }

    fn sphere_degree(&self, lambda_j: f64) -> Result<u64> {
        let Source::Sphere { n_max, .. } = &self.source else { unreachable!() };
        let deg = lambda_j.round();
        if !(deg >= 0.0) || (deg - lambda_j).abs() > 1e-9 {
            return Err(LabError::NotALevel(format!("{lambda_j} is not a sphere degree")));
        }
        if deg as u64 > *n_max {
            return Err(LabError::OutOfRange(format!("degree {deg} beyond {n_max}")));
        }
        Ok(deg as u64)
    }

    /// Lattice pairs on the shell `|j|^2 = k` passing a sharp window, by direct
    /// enumeration of the shell.
    pub fn jump_count(&self, lw: &LadderWindow, lambda_j: f64) -> Result<u64> {
        if !lw.is_sharp() || self.joint().is_none() {
            return invalid("jump counts exist for sharp torus windows only");
        }
        let k = self.torus_shell_key(lambda_j)?;
        let d = self.pair.d();
        let mut count = 0u64;
        for_each_on_shell(self.pair.n(), k, &mut |j| {
            let mu2: u64 = j[..d].iter().map(|x| (x * x) as u64).sum();
            if lw.member_sq(mu2, k).0 {
                count += 1;
            }
        });
        Ok(count)
    }

    /// `J(lambda_j) = sum_k w(mu_k - c lambda_j) W(lambda_j, mu_k)` over one level.
    pub fn jump_at(&self, lw: &LadderWindow, lambda_j: f64) -> Result<f64> {
        match &self.source {
            Source::Torus(_) => {
                if lw.is_sharp() {
                    return Ok(self.jump_count(lw, lambda_j)? as f64 * self.torus_unit());
                }
                let k = self.torus_shell_key(lambda_j)?;
                let d = self.pair.d();
                let lam = (k as f64).sqrt();
                let mut acc = Neumaier::default();
                for_each_on_shell(self.pair.n(), k, &mut |j| {
                    let mu2: i64 = j[..d].iter().map(|x| x * x).sum();
                    acc.add(lw.window().eval((mu2 as f64).sqrt() - lw.c() * lam));
                });
                Ok(acc.value() * self.torus_unit())
            }
            Source::Sphere { .. } => {
                let big_n = self.sphere_degree(lambda_j)?;
                let ws = self.sphere_weights(big_n, 0, big_n)?;
                let r = self.radius_r();
                let mut acc = 0.0;
                for (m, w) in ws.iter().enumerate() {
                    let m = m as u64;
                    let contrib = if lw.is_sharp() {
                        if self.sphere_member(lw, big_n, m).0 {
                            *w
                        } else {
                            0.0
                        }
                    } else {
                        w * lw.window().eval(m as f64 / r - lw.c() * big_n as f64)
                    };
                    acc += contrib;
                }
                Ok(acc)
            }
        }
    }

    /// Distinct gaps `|mu - c lambda_j|` carried by positive weight at one level,
    /// i.e. the only eps where `eps -> J_eps(lambda_j)` can jump.
    pub fn jump_locations(&self, slope: &Slope, lambda_j: f64) -> Result<Vec<f64>> {
        let c = slope.value();
        let mut gaps: Vec<f64> = Vec::new();
        match &self.source {
            Source::Torus(_) => {
                let k = self.torus_shell_key(lambda_j)?;
                let d = self.pair.d();
                let lam = (k as f64).sqrt();
                for_each_on_shell(self.pair.n(), k, &mut |j| {
                    let mu2: i64 = j[..d].iter().map(|x| x * x).sum();
                    gaps.push(((mu2 as f64).sqrt() - c * lam).abs());
                });
            }
            Source::Sphere { .. } => {
                let big_n = self.sphere_degree(lambda_j)?;
                let ws = self.sphere_weights(big_n, 0, big_n)?;
                let r = self.radius_r();
                for (m, w) in ws.iter().enumerate() {
                    if *w > 0.0 {
                        gaps.push((m as f64 / r - c * big_n as f64).abs());
                    }
                }
            }
        }
        gaps.sort_by(f64::total_cmp);
        gaps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.max(1.0));
        Ok(gaps)
    }

    /// `eps -> J_eps(lambda_j)` on a grid, with the jump locations of the level.
    pub fn epsilon_staircase(&self, slope: &Slope, lambda_j: f64, eps_grid: &[f64]) -> Result<Staircase> {
        let values = eps_grid
            .iter()
            .map(|&e| {
                let lw = LadderWindow::any_slope(slope.clone(), WindowFunction::sharp(e)?)?;
                self.jump_at(&lw, lambda_j)
            })
            .collect::<Result<Vec<_>>>()?;
        let jump_locations = self.jump_locations(slope, lambda_j)?;
        let mut notes = BTreeMap::new();
        notes.insert("level".into(), format!("{lambda_j}"));
        Ok(Staircase {
            series: LadderSeries {
                abscissa: eps_grid.to_vec(),
                values,
                meta: SeriesMeta {
                    model: self.describe(),
                    window: "sharp".into(),
                    slope: slope.text().to_string(),
                    cutoff: lambda_j,
                    notes,
                },
            },
            jump_locations,
        })
    }

    /// Tapered trace `S(t)` from the window masses of every level up to `lambda_max`.
    pub fn trace_profile(&self, lw: &LadderWindow, lambda_max: f64, grid: &TGrid, taper: Taper) -> Result<TraceProfile> {
        let lm = self.level_masses(lw, lambda_max)?;
        let mut prof = trace_from_masses(&lm, lambda_max, grid, taper)?;
        prof.meta = self.meta(lw, lambda_max);
        prof.meta.notes.insert("taper".into(), taper.describe());
        Ok(prof)
    }
}

/// Visit every `j in Z^n` with `|j|^2 = k`, in lexicographic order.
pub fn for_each_on_shell(n: usize, k: u64, f: &mut impl FnMut(&[i64])) {
    fn rec(j: &mut Vec<i64>, n: usize, rem: u64, f: &mut impl FnMut(&[i64])) {
        if j.len() + 1 == n {
            let r = rem.isqrt();
            if r * r == rem {
                if r == 0 {
                    j.push(0);
                    f(j);
                    j.pop();
                } else {
                    for v in [-(r as i64), r as i64] {
                        j.push(v);
                        f(j);
                        j.pop();
                    }
                }
            }
            return;
        }
        let b = rem.isqrt() as i64;
        for v in -b..=b {
            j.push(v);
            rec(j, n, rem - (v * v) as u64, f);
            j.pop();
        }
    }
    if n == 0 {
        return;
    }
    let mut j = Vec::with_capacity(n);
    rec(&mut j, n, k, f);
}

/// Sample points strictly between consecutive levels.
pub fn level_midpoints(levels: &[SpectralLevel]) -> Vec<f64> {
    levels
        .windows(2)
        .map(|w| 0.5 * (w[0].value + w[1].value))
        .collect()
}

/// eps-staircase at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Staircase {
    pub series: LadderSeries,
    pub jump_locations: Vec<f64>,
}

impl Staircase {
    /// Grid values that sit within `tol` of a jump location.
    pub fn ambiguous_samples(&self, tol: f64) -> Vec<f64> {
        self.series
            .abscissa
            .iter()
            .filter(|e| self.jump_locations.iter().any(|g| (*e - g).abs() <= tol))
            .cloned()
            .collect()
    }
}

/// Uniform grid `t_i = i * step`, `i = lo..=hi`; symmetric when `lo = -hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub step: f64,
    pub lo: i64,
    pub hi: i64,
}

impl TGrid {
    /// `[-t_max, t_max]` with spacing `step`.
    pub fn symmetric(t_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && t_max >= 0.0 && t_max.is_finite()) {
            return invalid(format!("bad t grid: t_max {t_max}, step {step}"));
        }
        let h = (t_max / step + 1e-9).floor() as i64;
        Ok(TGrid { step, lo: -h, hi: h })
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn t(&self, i: usize) -> f64 {
        (self.lo + i as i64) as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }
}

/// Frequency taper `chi(lambda / lambda_max)` applied to the trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Taper {
    /// `exp(1 - 1 / (1 - q^2))` on `[0, 1)`.
    Smooth,
    /// The same bump mapped onto `(low, 1)`; removes low frequencies too.
    Band { low: f64 },
}

impl Taper {
    pub fn weight(&self, q: f64) -> f64 {
        let bump = |z: f64| {
            if z.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - z * z)).exp()
            }
        };
        match *self {
            Taper::Smooth => bump(q),
            Taper::Band { low } => bump((2.0 * q - 1.0 - low) / (1.0 - low)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Taper::Smooth => "smooth bump exp(1-1/(1-q^2))".into(),
            Taper::Band { low } => format!("band bump on ({low}, 1)"),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Taper::Smooth => Ok(()),
            Taper::Band { low } if (0.0..1.0).contains(&low) => Ok(()),
            Taper::Band { low } => invalid(format!("band taper low edge must lie in [0, 1), got {low}")),
        }
    }
}

/// Complex trace samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceProfile {
    pub t: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub lambda_max: f64,
    pub step: f64,
    pub meta: SeriesMeta,
}

impl TraceProfile {
    pub fn abs(&self) -> Vec<f64> {
        self.re.iter().zip(&self.im).map(|(r, i)| r.hypot(*i)).collect()
    }
}

const TRACE_BLOCK: usize = 256;

/// `sum_k w_k e^{i t lambda_k}` on the grid; blocks of `t` run in parallel and
/// each sample is reduced over `k` in a fixed order.
pub fn trace_sum(lambdas: &[f64], weights: &[f64], grid: &TGrid) -> (Vec<f64>, Vec<f64>) {
    let idx: Vec<i64> = (grid.lo..=grid.hi).collect();
    let step = grid.step;
    let blocks: Vec<(Vec<f64>, Vec<f64>)> = idx
        .par_chunks(TRACE_BLOCK)
        .map(|chunk| {
            let mut re = vec![0.0; chunk.len()];
            let mut im = vec![0.0; chunk.len()];
            let t0 = chunk[0] as f64 * step;
            for (lam, w) in lambdas.iter().zip(weights) {
                if *w == 0.0 {
                    continue;
                }
                let (s0, c0) = (t0 * lam).sin_cos();
                let (sr, cr) = (step * lam).sin_cos();
                let (mut zr, mut zi) = (c0 * w, s0 * w);
                for i in 0..chunk.len() {
                    re[i] += zr;
                    im[i] += zi;
                    let nr = zr * cr - zi * sr;
                    zi = zr * sr + zi * cr;
                    zr = nr;
                }
            }
            (re, im)
        })
        .collect();
    let mut re = Vec::with_capacity(idx.len());
    let mut im = Vec::with_capacity(idx.len());
    for (r, i) in blocks {
        re.extend(r);
        im.extend(i);
    }
    (re, im)
}

/// Tapered trace from precomputed level masses.
pub fn trace_from_masses(lm: &LevelMasses, lambda_max: f64, grid: &TGrid, taper: Taper) -> Result<TraceProfile> {
    taper.validate()?;
    if !(lambda_max > 0.0) {
        return invalid("trace cutoff must be positive");
    }
    if grid.step >= PI / lambda_max {
        return invalid(format!(
            "t grid step {} is not finer than pi / lambda_max = {}",
            grid.step,
            PI / lambda_max
        ));
    }
    let lambdas: Vec<f64> = lm.levels.iter().map(|l| l.value).collect();
    let weights: Vec<f64> = lm
        .masses
        .iter()
        .zip(&lambdas)
        .map(|(m, l)| m * taper.weight(l / lambda_max))
        .collect();
    let (re, im) = if grid.lo == -grid.hi {
        // S(-t) = conj S(t): compute t >= 0 and mirror
        let half = TGrid { step: grid.step, lo: 0, hi: grid.hi };
        let (hr, hi_) = trace_sum(&lambdas, &weights, &half);
        let h = grid.hi as usize;
        let mut re = Vec::with_capacity(grid.len());
        let mut im = Vec::with_capacity(grid.len());
        for i in (1..=h).rev() {
            re.push(hr[i]);
            im.push(-hi_[i]);
        }
        re.extend_from_slice(&hr);
        im.extend_from_slice(&hi_);
        (re, im)
    } else {
        trace_sum(&lambdas, &weights, grid)
    };
    Ok(TraceProfile {
        t: grid.points(),
        re,
        im,
        lambda_max,
        step: grid.step,
        meta: SeriesMeta { cutoff: lambda_max, ..Default::default() },
    })
}

/// Threshold for peak detection: `max(median + k_mad * MAD, rel_floor * max)`,
/// with local maxima taken over `+- window` in `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub k_mad: f64,
    pub rel_floor: f64,
    pub window: f64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy { k_mad: 6.0, rel_floor: 0.01, window: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectedPeak {
    pub t: f64,
    pub value: f64,
    /// `(value - median) / MAD`.
    pub prominence: f64,
    pub half_width: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Background statistics `(median, MAD, threshold)` of `|S|`.
pub fn background_threshold(abs: &[f64], policy: &ThresholdPolicy) -> (f64, f64, f64) {
    let mut v = abs.to_vec();
    let med = median(&mut v);
    let mut dev: Vec<f64> = abs.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&mut dev);
    let top = abs.iter().cloned().fold(0.0, f64::max);
    (med, mad, (med + policy.k_mad * mad).max(policy.rel_floor * top))
}

/// Local maxima of `|S|` above the adaptive threshold.
pub fn detect_singular_support(profile: &TraceProfile, policy: &ThresholdPolicy) -> Vec<DetectedPeak> {
    let abs = profile.abs();
    let n = abs.len();
    if n == 0 {
        return Vec::new();
    }
    let (med, mad, thr) = background_threshold(&abs, policy);
    let step = if n > 1 { (profile.t[1] - profile.t[0]).abs() } else { 1.0 };
    let w = ((policy.window / step).round() as usize).max(1);
    let mut peaks = Vec::new();
    for i in 0..n {
        let v = abs[i];
        if v <= thr {
            continue;
        }
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(n - 1);
        // ties resolve to the leftmost sample
        let is_max = (lo..=hi).all(|j| if j < i { abs[j] < v } else { abs[j] <= v });
        if !is_max {
            continue;
        }
        let half = 0.5 * v;
        let mut l = i;
        while l > 0 && abs[l] > half {
            l -= 1;
        }
        let mut r = i;
        while r + 1 < n && abs[r] > half {
            r += 1;
        }
        peaks.push(DetectedPeak {
            t: profile.t[i],
            value: v,
            prominence: (v - med) / mad.max(f64::MIN_POSITIVE),
            half_width: 0.5 * (profile.t[r] - profile.t[l]),
        });
    }
    peaks
}
