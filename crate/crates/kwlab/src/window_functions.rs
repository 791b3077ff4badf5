//! Spectral windows: sharp indicators, squared inverse transforms of a smooth
//! bump (compactly supported Fourier transform), the mollifier `theta_T` and
//! the mollified indicators `psi_{T, eps} = theta_T * 1_[-eps, eps]`.
//!
//! Fourier convention: `w_hat(s) = int w(x) e^{-i s x} dx`.
//!
//! Everything derives from one universal table of the base bump
//! `b(u) = exp(-1/(1-u^2))`: its cosine transform `B(w) = int b(u) cos(w u) du`
//! and its autocorrelation `I(v) = int b(u) b(v-u) du`. For half-width `a`,
//! `phi_a(x) = (a / 2 pi) B(a x)`, `psi_a = phi_a^2` and
//! `psi_a_hat(s) = (a / 2 pi) I(s / a)`, supported in `[-2a, 2a]`.

use crate::error::{invalid, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Base bump shape recorded in experiment metadata.
pub const BUMP_SHAPE: &str = "exp(-1/(1-u^2)) on (-1,1)";

/// Relative tail mass discarded from `psi` tables (both sides together).
pub const TAIL_BUDGET: f64 = 1e-10;

/// Number of transform table nodes over `[0, 2a]`.
pub const FT_NODES: usize = 4096;

const OMEGA_STEP: f64 = 0.012;
const OMEGA_LIMIT: f64 = 200.0;

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

fn bump_deriv(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - u * u;
        bump(u) * (-2.0 * u / (q * q))
    }
}

#[inline]
fn hermite(f0: f64, f1: f64, d0: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * f0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * f1
        + (t3 - t2) * h * d1
}

#[inline]
fn hermite_deriv(f0: f64, f1: f64, d0: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    ((6.0 * t2 - 6.0 * t) * f0
        + (3.0 * t2 - 4.0 * t + 1.0) * h * d0
        + (-6.0 * t2 + 6.0 * t) * f1
        + (3.0 * t2 - 2.0 * t) * h * d1)
        / h
}

/// `int_0^t` of the Hermite cubic on a unit-scaled interval, times `h`.
#[inline]
fn hermite_integral(f0: f64, f1: f64, d0: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    h * ((t4 / 2.0 - t3 + t) * f0
        + (t4 / 4.0 - 2.0 * t3 / 3.0 + t2 / 2.0) * h * d0
        + (-t4 / 2.0 + t3) * f1
        + (t4 / 4.0 - t3 / 3.0) * h * d1)
}

/// Tabulated function on a uniform grid `x_k = k h` with exact derivatives.
#[derive(Clone, Debug)]
struct Table {
    h: f64,
    f: Vec<f64>,
    df: Vec<f64>,
}

impl Table {
    fn end(&self) -> f64 {
        self.h * (self.f.len() - 1) as f64
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !(x >= 0.0) || x > self.end() {
            return None;
        }
        let pos = x / self.h;
        let k = (pos.floor() as usize).min(self.f.len() - 2);
        Some((k, pos - k as f64))
    }

    fn value(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((k, t)) => hermite(self.f[k], self.f[k + 1], self.df[k], self.df[k + 1], self.h, t),
            None => 0.0,
        }
    }

    fn value_deriv(&self, x: f64) -> (f64, f64) {
        match self.locate(x) {
            Some((k, t)) => (
                hermite(self.f[k], self.f[k + 1], self.df[k], self.df[k + 1], self.h, t),
                hermite_deriv(self.f[k], self.f[k + 1], self.df[k], self.df[k + 1], self.h, t),
            ),
            None => (0.0, 0.0),
        }
    }
}

/// Universal bump tables, built once per process.
#[derive(Debug)]
pub struct BumpProfile {
    /// `B(w)` on `[0, OMEGA_LIMIT]`.
    cosine: Table,
    /// Cumulative `int_0^w B^2`, at the nodes of `cosine`.
    cum_sq: Vec<f64>,
    /// `I(v)` on `[0, 2]`.
    autocorr: Table,
    /// `int b^2 = I(0)`.
    pub l2_sq: f64,
    /// Smallest tabulated `w` with relative discarded mass below `TAIL_BUDGET`.
    pub omega_cut: f64,
    /// Relative mass of `B^2` beyond `omega_cut`.
    pub tail_mass: f64,
    /// `sup B^2` beyond `omega_cut`, relative to `B(0)^2`.
    pub tail_sup: f64,
    pub u_nodes: usize,
}

impl BumpProfile {
    pub fn get() -> &'static BumpProfile {
        static PROFILE: OnceLock<BumpProfile> = OnceLock::new();
        PROFILE.get_or_init(BumpProfile::build)
    }

    fn build() -> BumpProfile {
        // Trapezoid in u is accurate to about |b_hat(2 pi / h_u - w)|, so the
        // node spacing keeps 2 pi / h_u at least OMEGA_LIMIT + 1500.
        let half_nodes = ((OMEGA_LIMIT + 1500.0) / (2.0 * PI)).ceil() as usize + 1;
        let hu = 1.0 / half_nodes as f64;
        let b_nodes: Vec<(f64, f64)> = (1..half_nodes).map(|i| (i as f64 * hu, bump(i as f64 * hu))).collect();
        let b0 = bump(0.0);
        let count = (OMEGA_LIMIT / OMEGA_STEP).round() as usize + 1;
        let (f, df): (Vec<f64>, Vec<f64>) = (0..count)
            .into_par_iter()
            .map(|k| {
                let w = k as f64 * OMEGA_STEP;
                let mut c = b0;
                let mut s = 0.0;
                for &(u, bu) in &b_nodes {
                    let (sn, cs) = (w * u).sin_cos();
                    c += 2.0 * bu * cs;
                    s -= 2.0 * bu * u * sn;
                }
                (c * hu, s * hu)
            })
            .unzip();
        let cosine = Table { h: OMEGA_STEP, f, df };

        let mut cum_sq = vec![0.0; count];
        for k in 0..count - 1 {
            let (f0, f1) = (cosine.f[k].powi(2), cosine.f[k + 1].powi(2));
            let (d0, d1) = (2.0 * cosine.f[k] * cosine.df[k], 2.0 * cosine.f[k + 1] * cosine.df[k + 1]);
            cum_sq[k + 1] = cum_sq[k] + hermite_integral(f0, f1, d0, d1, OMEGA_STEP, 1.0);
        }

        let ft_h = 2.0 / (FT_NODES - 1) as f64;
        let inner = 2048usize;
        let (af, adf): (Vec<f64>, Vec<f64>) = (0..FT_NODES)
            .into_par_iter()
            .map(|k| {
                let v = (k as f64 * ft_h).min(2.0);
                let lo = v - 1.0;
                let len = 2.0 - v;
                if len <= 0.0 {
                    return (0.0, 0.0);
                }
                let h = len / inner as f64;
                let mut acc = 0.0;
                let mut dacc = 0.0;
                for i in 1..inner {
                    let u = lo + i as f64 * h;
                    acc += bump(u) * bump(v - u);
                    dacc += bump(u) * bump_deriv(v - u);
                }
                (acc * h, dacc * h)
            })
            .unzip();
        let autocorr = Table { h: ft_h, f: af, df: adf };
        let l2_sq = autocorr.f[0];

        // Full-line mass of B^2 is pi * int b^2; the table total is used so
        // that cumulative quantities close exactly.
        let total = cum_sq[count - 1];
        let mut cut = count - 1;
        while cut > 0 && (total - cum_sq[cut - 1]) / total < TAIL_BUDGET {
            cut -= 1;
        }
        let tail_mass = (total - cum_sq[cut]) / total;
        let b00 = cosine.f[0].powi(2);
        let tail_sup = cosine.f[cut..].iter().map(|v| v * v).fold(0.0, f64::max) / b00;
        BumpProfile {
            omega_cut: cut as f64 * OMEGA_STEP,
            cosine,
            cum_sq,
            autocorr,
            l2_sq,
            tail_mass,
            tail_sup,
            u_nodes: 2 * half_nodes + 1,
        }
    }

    /// `B(w)`, zero beyond the cut.
    pub fn cosine_transform(&self, w: f64) -> f64 {
        let w = w.abs();
        if w > self.omega_cut {
            0.0
        } else {
            self.cosine.value(w)
        }
    }

    fn cosine_transform_deriv(&self, w: f64) -> (f64, f64) {
        let aw = w.abs();
        if aw > self.omega_cut {
            return (0.0, 0.0);
        }
        let (v, d) = self.cosine.value_deriv(aw);
        (v, if w < 0.0 { -d } else { d })
    }

    /// `I(v)`, supported in `[-2, 2]`.
    pub fn autocorrelation(&self, v: f64) -> f64 {
        let v = v.abs();
        if v >= 2.0 {
            0.0
        } else {
            self.autocorr.value(v)
        }
    }

    /// Normalized cumulative `int_0^w B^2 / int_0^inf B^2`, odd in `w`.
    fn cumulative_sq(&self, w: f64) -> f64 {
        let total = self.cum_sq[self.cum_sq.len() - 1];
        let aw = w.abs();
        let frac = if aw > self.omega_cut {
            1.0
        } else {
            let (k, t) = self.cosine.locate(aw).expect("inside table");
            let c = &self.cosine;
            let (f0, f1) = (c.f[k].powi(2), c.f[k + 1].powi(2));
            let (d0, d1) = (2.0 * c.f[k] * c.df[k], 2.0 * c.f[k + 1] * c.df[k + 1]);
            (self.cum_sq[k] + hermite_integral(f0, f1, d0, d1, c.h, t)) / total
        };
        frac.copysign(w)
    }
}

/// Descriptor of a window; serialized in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowKind {
    SharpIndicator { eps: f64 },
    SmoothBumpSquare { a: f64, scale: f64 },
    /// `psi_a(x) |sum_k e^{i k spacing x}|^2`, `k < teeth`; transform supported
    /// near the multiples of `spacing` up to `(teeth-1) spacing`.
    ModulatedBumpSquare { a: f64, scale: f64, spacing: f64, teeth: usize },
    MollifiedIndicator { t: f64, eps: f64 },
    Mollifier { t: f64 },
}

impl WindowKind {
    /// Parse `sharp:<eps>`, `bump:<a>`, `comb:<a>,<spacing>,<teeth>`,
    /// `mollified:<T>,<eps>`, `mollifier:<T>`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            vec![]
        } else {
            args.split(',')
                .map(crate::experiment::parse_real)
                .collect::<Result<_>>()?
        };
        let want = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                invalid(format!("window `{name}` expects {k} argument(s), got `{s}`"))
            }
        };
        match name {
            "sharp" => {
                want(1)?;
                Ok(WindowKind::SharpIndicator { eps: nums[0] })
            }
            "bump" => {
                want(1)?;
                Ok(WindowKind::SmoothBumpSquare { a: nums[0], scale: 1.0 })
            }
            "comb" => {
                want(3)?;
                Ok(WindowKind::ModulatedBumpSquare {
                    a: nums[0],
                    scale: 1.0,
                    spacing: nums[1],
                    teeth: nums[2] as usize,
                })
            }
            "mollified" => {
                want(2)?;
                Ok(WindowKind::MollifiedIndicator { t: nums[0], eps: nums[1] })
            }
            "mollifier" => {
                want(1)?;
                Ok(WindowKind::Mollifier { t: nums[0] })
            }
            _ => invalid(format!("unknown window kind `{name}`")),
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowKind::SharpIndicator { eps } => write!(f, "sharp:{eps}"),
            WindowKind::SmoothBumpSquare { a, scale } if *scale == 1.0 => write!(f, "bump:{a}"),
            WindowKind::SmoothBumpSquare { a, scale } => write!(f, "bump:{a} x{scale}"),
            WindowKind::ModulatedBumpSquare { a, spacing, teeth, .. } => {
                write!(f, "comb:{a},{spacing},{teeth}")
            }
            WindowKind::MollifiedIndicator { t, eps } => write!(f, "mollified:{t},{eps}"),
            WindowKind::Mollifier { t } => write!(f, "mollifier:{t}"),
        }
    }
}

/// Mollifier constants: `theta_1 >= delta0` on `|x| < eps0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierBounds {
    pub delta0: f64,
    pub eps0: f64,
}

fn mollifier_bounds() -> MollifierBounds {
    let eps0 = 1.0;
    let delta0 = (0..=1000)
        .map(|k| theta1(k as f64 * eps0 / 1000.0))
        .fold(f64::INFINITY, f64::min);
    MollifierBounds { delta0, eps0 }
}

/// `theta_1(x) = B(x/2)^2 / (4 pi int b^2)`; unit mass, transform supported in `[-1, 1]`.
fn theta1(x: f64) -> f64 {
    let p = BumpProfile::get();
    p.cosine_transform(x / 2.0).powi(2) / (4.0 * PI * p.l2_sq)
}

/// Cumulative distribution of `theta_1`.
fn theta1_cdf(x: f64) -> f64 {
    0.5 + 0.5 * BumpProfile::get().cumulative_sq(x / 2.0)
}

/// `rho_1(s) = I(2s) / I(0)`, the transform of `theta_1`.
fn rho1(s: f64) -> f64 {
    let p = BumpProfile::get();
    p.autocorrelation(2.0 * s) / p.l2_sq
}

#[derive(Clone, Debug)]
enum Shape {
    Sharp { eps: f64 },
    Bump { a: f64, scale: f64 },
    Comb { a: f64, scale: f64, shifts: Arc<Vec<f64>> },
    Mollified { t: f64, eps: f64 },
    Mollifier { t: f64 },
}

/// An even window `w` with evaluators for `w` and `w_hat`.
#[derive(Clone, Debug)]
pub struct WindowFunction {
    kind: WindowKind,
    shape: Shape,
    bounds: Option<MollifierBounds>,
}

impl WindowFunction {
    pub fn new(kind: WindowKind) -> Result<Self> {
        let positive = |v: f64, what: &str| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                invalid(format!("{what} must be positive and finite, got {v}"))
            }
        };
        let shape = match kind {
            WindowKind::SharpIndicator { eps } => {
                if !(eps.is_finite() && eps >= 0.0) {
                    return invalid(format!("eps must be nonnegative, got {eps}"));
                }
                Shape::Sharp { eps }
            }
            WindowKind::SmoothBumpSquare { a, scale } => {
                positive(a, "bump half-width a")?;
                positive(scale, "scale")?;
                Shape::Bump { a, scale }
            }
            WindowKind::ModulatedBumpSquare { a, scale, spacing, teeth } => {
                positive(a, "bump half-width a")?;
                positive(scale, "scale")?;
                positive(spacing, "comb spacing")?;
                if teeth == 0 {
                    return invalid("comb needs at least one tooth");
                }
                let mut diffs: Vec<f64> = Vec::new();
                for k in 0..teeth {
                    for l in 0..teeth {
                        diffs.push((k as f64 - l as f64) * spacing);
                    }
                }
                Shape::Comb { a, scale, shifts: Arc::new(diffs) }
            }
            WindowKind::MollifiedIndicator { t, eps } => {
                positive(t, "T")?;
                positive(eps, "eps")?;
                Shape::Mollified { t, eps }
            }
            WindowKind::Mollifier { t } => {
                positive(t, "T")?;
                Shape::Mollifier { t }
            }
        };
        let bounds = match shape {
            Shape::Mollified { .. } | Shape::Mollifier { .. } => {
                static B: OnceLock<MollifierBounds> = OnceLock::new();
                Some(*B.get_or_init(mollifier_bounds))
            }
            _ => None,
        };
        Ok(WindowFunction { kind, shape, bounds })
    }

    pub fn bump(a: f64) -> Result<Self> {
        WindowFunction::new(WindowKind::SmoothBumpSquare { a, scale: 1.0 })
    }

    pub fn sharp(eps: f64) -> Result<Self> {
        WindowFunction::new(WindowKind::SharpIndicator { eps })
    }

    pub fn mollified(t: f64, eps: f64) -> Result<Self> {
        WindowFunction::new(WindowKind::MollifiedIndicator { t, eps })
    }

    pub fn kind(&self) -> &WindowKind {
        &self.kind
    }

    pub fn is_sharp(&self) -> bool {
        matches!(self.shape, Shape::Sharp { .. })
    }

    pub fn mollifier_bounds(&self) -> Option<MollifierBounds> {
        self.bounds
    }

    /// Same window multiplied by `alpha > 0` (smooth kinds only).
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        let kind = match self.kind.clone() {
            WindowKind::SmoothBumpSquare { a, scale } => WindowKind::SmoothBumpSquare { a, scale: scale * alpha },
            WindowKind::ModulatedBumpSquare { a, scale, spacing, teeth } => {
                WindowKind::ModulatedBumpSquare { a, scale: scale * alpha, spacing, teeth }
            }
            other => return invalid(format!("window {other} has no amplitude parameter")),
        };
        WindowFunction::new(kind)
    }

    /// `w(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Sharp { eps } => {
                if x.abs() <= *eps {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Bump { a, scale } => {
                let phi = a / (2.0 * PI) * BumpProfile::get().cosine_transform(a * x);
                scale * phi * phi
            }
            Shape::Comb { a, scale, shifts } => {
                let phi = a / (2.0 * PI) * BumpProfile::get().cosine_transform(a * x);
                let m: f64 = shifts.iter().map(|s| (s * x).cos()).sum();
                scale * phi * phi * m
            }
            Shape::Mollified { t, eps } => {
                (theta1_cdf(t * (x + eps)) - theta1_cdf(t * (x - eps))).max(0.0)
            }
            Shape::Mollifier { t } => t * theta1(t * x),
        }
    }

    /// `w(x)` and `w'(x)` for the smooth bump kinds.
    pub fn eval_with_deriv(&self, x: f64) -> (f64, f64) {
        match &self.shape {
            Shape::Bump { a, scale } => {
                let (b, db) = BumpProfile::get().cosine_transform_deriv(a * x);
                let k = a / (2.0 * PI);
                (scale * k * k * b * b, scale * k * k * 2.0 * b * db * a)
            }
            _ => {
                let h = 1e-6;
                (self.eval(x), (self.eval(x + h) - self.eval(x - h)) / (2.0 * h))
            }
        }
    }

    /// `w_hat(s)`.
    pub fn ft(&self, s: f64) -> f64 {
        let sinc2 = |eps: f64| -> f64 {
            if s == 0.0 {
                2.0 * eps
            } else {
                2.0 * (eps * s).sin() / s
            }
        };
        match &self.shape {
            Shape::Sharp { eps } => sinc2(*eps),
            Shape::Bump { a, scale } => scale * a / (2.0 * PI) * BumpProfile::get().autocorrelation(s / a),
            Shape::Comb { a, scale, shifts } => {
                let p = BumpProfile::get();
                scale * a / (2.0 * PI) * shifts.iter().map(|d| p.autocorrelation((s - d) / a)).sum::<f64>()
            }
            Shape::Mollified { t, eps } => rho1(s / t) * sinc2(*eps),
            Shape::Mollifier { t } => rho1(s / t),
        }
    }

    /// `int w = w_hat(0)`.
    pub fn mass(&self) -> f64 {
        self.ft(0.0)
    }

    /// Radius of the support of `w_hat` (infinite for the sharp indicator).
    pub fn ft_support_radius(&self) -> f64 {
        match &self.shape {
            Shape::Sharp { .. } => f64::INFINITY,
            Shape::Bump { a, .. } => 2.0 * a,
            Shape::Comb { a, shifts, .. } => 2.0 * a + shifts.iter().fold(0.0, |m: f64, d| m.max(d.abs())),
            Shape::Mollified { t, .. } | Shape::Mollifier { t } => *t,
        }
    }

    /// Beyond this `|x|` the evaluator returns exactly zero.
    pub fn eval_radius(&self) -> f64 {
        let cut = BumpProfile::get().omega_cut;
        match &self.shape {
            Shape::Sharp { eps } => *eps,
            Shape::Bump { a, .. } | Shape::Comb { a, .. } => cut / a,
            Shape::Mollified { t, eps } => eps + 2.0 * cut / t,
            Shape::Mollifier { t } => 2.0 * cut / t,
        }
    }

    /// Bound on `|w(x)|` for `|x| > eval_radius()`.
    pub fn truncation_sup(&self) -> f64 {
        let p = BumpProfile::get();
        match &self.shape {
            Shape::Sharp { .. } => 0.0,
            Shape::Bump { .. } => p.tail_sup * self.eval(0.0),
            // the modulation peaks at x = 0, where it equals teeth^2
            Shape::Comb { .. } => p.tail_sup * self.eval(0.0),
            Shape::Mollified { .. } => p.tail_mass,
            Shape::Mollifier { t } => p.tail_sup * t * theta1(0.0),
        }
    }

    /// Relative mass discarded beyond `eval_radius()`.
    pub fn tail_mass(&self) -> f64 {
        match &self.shape {
            Shape::Sharp { .. } => 0.0,
            _ => BumpProfile::get().tail_mass,
        }
    }

    /// `int |w - 1_[-eps, eps]|` for the mollified indicator.
    pub fn l1_distance_to_sharp(&self) -> Option<f64> {
        let Shape::Mollified { t, eps } = self.shape else {
            return None;
        };
        let r = self.eval_radius();
        let steps = 200_000usize;
        let h = r / steps as f64;
        let mut acc = 0.0;
        for k in 0..steps {
            let x = (k as f64 + 0.5) * h;
            let ind = if x <= eps { 1.0 } else { 0.0 };
            acc += (self.eval(x) - ind).abs();
        }
        let _ = t;
        Some(2.0 * acc * h)
    }

    /// True when `w_hat` vanishes at every nonzero `s` in the list.
    pub fn support_is_sufficiently_small(&self, s_values: &[f64]) -> bool {
        let r = self.ft_support_radius();
        s_values.iter().filter(|s| s.abs() > 1e-12).all(|s| s.abs() >= r)
    }
}
