//! Predicted main terms, calibration of the universal constant, log-log
//! growth fits, and the mollifier smoothing-error scan.
//!
//! Main-term convention: `N(lambda) ~ C_{n,d} a lambda^{n-1}` with
//! `a = eps c^{d-1} (1 - c^2)^{(n-d-2)/2} vol(H)` for the sharp window. For a
//! smooth window `eps` is replaced by `(1/2) sum_j psi_hat(s_j)`, so that the
//! indicator of `[-eps, eps]` (transform `2 eps` at `0`) gives back `eps`.

use crate::arith::Slope;
use crate::error::{invalid, LabError, Result};
use crate::ladder_sums::{LadderEngine, LadderSeries, LadderWindow};
use crate::window_functions::{WindowFunction, WindowKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `C_{2,1}` from the torus lattice identity.
pub const C21_REFERENCE: f64 = 2.0 / (PI * PI);

/// Relative drift across the fitted decade that flags a calibration.
pub const CALIBRATION_DRIFT_LIMIT: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainTermPrediction {
    pub n: usize,
    pub d: usize,
    pub c: f64,
    pub window: String,
    pub vol_h: f64,
    /// Coefficient without the universal constant.
    pub base: f64,
    pub exponent: i32,
    pub s_values: Vec<f64>,
}

impl MainTermPrediction {
    /// `base * lambda^exponent` (no universal constant).
    pub fn eval(&self, lambda: f64) -> f64 {
        self.base * lambda.powi(self.exponent)
    }
}

/// Leading coefficient for a ladder sum with the given window and the `s`
/// values of the maximal components at `t = 0`.
pub fn leading_coeff(
    n: usize,
    d: usize,
    c: f64,
    window: &WindowFunction,
    vol_h: f64,
    s_values: &[f64],
) -> Result<MainTermPrediction> {
    if !(c > 0.0 && c < 1.0) {
        return invalid(format!("slope must lie in (0, 1), got {c}"));
    }
    if d == 0 || d >= n {
        return invalid(format!("dimensions n = {n}, d = {d} are not a valid pair"));
    }
    let geom = c.powi(d as i32 - 1) * (1.0 - c * c).powf((n as f64 - d as f64 - 2.0) / 2.0) * vol_h;
    let weight = match window.kind() {
        WindowKind::SharpIndicator { eps } => *eps,
        _ => {
            if s_values.is_empty() {
                return invalid("smooth window main term needs at least the s = 0 component");
            }
            0.5 * s_values.iter().map(|s| window.ft(*s)).sum::<f64>()
        }
    };
    Ok(MainTermPrediction {
        n,
        d,
        c,
        window: window.kind().to_string(),
        vol_h,
        base: weight * geom,
        exponent: n as i32 - 1,
        s_values: s_values.to_vec(),
    })
}

/// Least-squares line in log-log coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub slope: f64,
    pub intercept: f64,
    /// Bootstrap 95% half-width of the slope.
    pub ci_half_width: f64,
    pub residual_norm: f64,
    pub range: (f64, f64),
    pub points: usize,
}

/// Minimum points and span for a growth-exponent fit.
pub const MIN_FIT_POINTS: usize = 8;
pub const MIN_FIT_SPAN: f64 = 10.0;

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let res = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        .sqrt();
    (slope, intercept, res)
}

/// Log-log fit without the point-count and span guards; bootstrap with a
/// fixed seed so the report is reproducible.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<FitReport> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("log-log fit needs two or more paired points");
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return invalid("log-log fit needs positive finite values");
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (slope, intercept, residual_norm) = line_fit(&lx, &ly);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let m = lx.len();
    let mut slopes = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let (mut bx, mut by) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for _ in 0..m {
            let i = rng.random_range(0..m);
            bx.push(lx[i]);
            by.push(ly[i]);
        }
        slopes.push(line_fit(&bx, &by).0);
    }
    slopes.sort_by(f64::total_cmp);
    let ci_half_width = 0.5 * (slopes[974] - slopes[25]);
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(0.0, f64::max);
    Ok(FitReport { slope, intercept, ci_half_width, residual_norm, range: (lo, hi), points: m })
}

/// Growth exponent on at least eight points spanning a decade.
pub fn fit_growth_exponent(x: &[f64], y: &[f64]) -> Result<FitReport> {
    if x.len() < MIN_FIT_POINTS {
        return invalid(format!("growth fit needs {MIN_FIT_POINTS} points, got {}", x.len()));
    }
    if y.iter().any(|v| !(*v > 0.0)) {
        return invalid("growth fit needs positive values");
    }
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < MIN_FIT_SPAN * (1.0 - 1e-12) {
        return invalid(format!("growth fit range [{lo}, {hi}] spans less than a decade"));
    }
    loglog_fit(x, y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub estimate: f64,
    /// `|C(upper half) - C(lower half)| / C` across the decade.
    pub drift: f64,
    pub unstable: bool,
    pub fit: FitReport,
    pub range: (f64, f64),
}

/// `C = mean(value / (base lambda^exponent))` over the top decade of the series.
pub fn calibrate_universal_constant(series: &LadderSeries, pred: &MainTermPrediction) -> Result<Calibration> {
    calibrate_universal_constant_over(series, pred, DEFAULT_FIT_SPAN)
}

/// Fitted range for calibrations: `[top / span, top]`.
pub const DEFAULT_FIT_SPAN: f64 = 10.0;

/// Calibration over `[top / span, top]`, `span >= 10`.
pub fn calibrate_universal_constant_over(series: &LadderSeries, pred: &MainTermPrediction, span: f64) -> Result<Calibration> {
    if !(span >= MIN_FIT_SPAN) {
        return invalid(format!("calibration span must be at least {MIN_FIT_SPAN}, got {span}"));
    }
    let top = series.abscissa.iter().cloned().fold(0.0, f64::max);
    let lo = top / span;
    let first = series.abscissa.iter().cloned().filter(|x| *x > 0.0).fold(f64::INFINITY, f64::min);
    if !(top > 0.0) || first > lo {
        return invalid(format!("series must span a factor {span} below its largest abscissa"));
    }
    let pts: Vec<(f64, f64)> = series
        .abscissa
        .iter()
        .zip(&series.values)
        .filter(|(x, _)| **x >= lo)
        .map(|(x, v)| (*x, v / pred.eval(*x)))
        .collect();
    if pts.len() < 2 {
        return invalid("too few points in the calibration decade");
    }
    let mean = |v: &[(f64, f64)]| v.iter().map(|p| p.1).sum::<f64>() / v.len() as f64;
    let estimate = mean(&pts);
    let split = (lo * top).sqrt();
    let lower: Vec<(f64, f64)> = pts.iter().cloned().filter(|p| p.0 < split).collect();
    let upper: Vec<(f64, f64)> = pts.iter().cloned().filter(|p| p.0 >= split).collect();
    let drift = if lower.is_empty() || upper.is_empty() {
        0.0
    } else {
        (mean(&upper) - mean(&lower)).abs() / estimate.abs()
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .abscissa
        .iter()
        .zip(&series.values)
        .filter(|(x, v)| **x >= lo && **v > 0.0)
        .map(|(x, v)| (*x, *v))
        .unzip();
    let fit = loglog_fit(&xs, &ys)?;
    Ok(Calibration { estimate, drift, unstable: drift > CALIBRATION_DRIFT_LIMIT, fit, range: (lo, top) })
}

/// Result of the mollifier scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingScan {
    pub series: LadderSeries,
    pub sharp_value: f64,
    pub fit: FitReport,
}

/// `|N_eps(lambda) - N_{psi_{T,eps}}(lambda)|` for each `T`, with the log-log
/// slope in `T`.
pub fn smoothing_error_scan(
    engine: &LadderEngine,
    slope: &Slope,
    eps: f64,
    lambda: f64,
    t_grid: &[f64],
) -> Result<SmoothingScan> {
    let sharp = LadderWindow::sharp(slope.clone(), eps)?;
    let sharp_value = engine.sharp_ladder_sum(&sharp, lambda)?;
    let errors = t_grid
        .iter()
        .map(|&t| {
            let lw = LadderWindow::new(slope.clone(), WindowFunction::mollified(t, eps)?)?;
            Ok((engine.fuzzy_ladder_sum(&lw, lambda)?.value - sharp_value).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let fit = loglog_fit(t_grid, &errors).map_err(|e| LabError::Numeric(format!("smoothing fit: {e}")))?;
    let mut meta = engine.meta(&sharp, lambda);
    meta.window = format!("mollified:T,{eps}");
    meta.notes.insert("sharp_value".into(), format!("{sharp_value:.17e}"));
    Ok(SmoothingScan {
        series: LadderSeries { abscissa: t_grid.to_vec(), values: errors, meta },
        sharp_value,
        fit,
    })
}

/// One checked claim: measured value against prediction with a tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub claim: String,
    pub anchor: String,
    pub measured: f64,
    pub predicted: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl VerdictRow {
    /// Pass when `|measured / predicted - 1| <= tolerance`.
    pub fn relative(claim: &str, anchor: &str, measured: f64, predicted: f64, tolerance: f64) -> Self {
        let pass = (measured / predicted - 1.0).abs() <= tolerance;
        VerdictRow {
            claim: claim.into(),
            anchor: anchor.into(),
            measured,
            predicted,
            tolerance,
            pass,
            detail: String::new(),
        }
    }

    /// Pass when `|measured - predicted| <= tolerance`.
    pub fn absolute(claim: &str, anchor: &str, measured: f64, predicted: f64, tolerance: f64) -> Self {
        let pass = (measured - predicted).abs() <= tolerance;
        VerdictRow {
            claim: claim.into(),
            anchor: anchor.into(),
            measured,
            predicted,
            tolerance,
            pass,
            detail: String::new(),
        }
    }

    /// Pass when `lo <= measured <= hi`; `predicted` holds the midpoint.
    pub fn within(claim: &str, anchor: &str, measured: f64, lo: f64, hi: f64) -> Self {
        VerdictRow {
            claim: claim.into(),
            anchor: anchor.into(),
            measured,
            predicted: 0.5 * (lo + hi),
            tolerance: 0.5 * (hi - lo),
            pass: (lo..=hi).contains(&measured),
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}
