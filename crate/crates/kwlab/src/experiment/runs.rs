//! The registered experiments.

use super::cache;
use super::config::ExperimentConfig;
use super::output::{Cell, Outputs, Table, SCHEMA_VERSION, SOJOURN_COLUMNS, STAIRCASE_COLUMNS, TRACE_COLUMNS, WEYL_SUM_COLUMNS};
use crate::arith::Slope;
use crate::asymptotics_lab::{
    calibrate_universal_constant_over, fit_growth_exponent, leading_coeff, loglog_fit, smoothing_error_scan,
    MainTermPrediction, VerdictRow, C21_REFERENCE, CALIBRATION_DRIFT_LIMIT,
};
use crate::biangle_geometry::{
    clairaut_return_time, solve_biangles, sphere_sojourn_set, torus_sojourn_set, BiangleModel, ProbeStatus,
    RevolutionProfile, SojournSet, SolverConfig,
};
use crate::error::{invalid, LabError, Result};
use crate::ladder_sums::{
    detect_singular_support, level_midpoints, DetectedPeak, LadderEngine, LadderSeries, LadderWindow, TGrid, Taper,
    ThresholdPolicy,
};
use crate::restriction_weights::{
    sphere2_great_circle_weight, sphere_eigenspace_jump, zonal_meridian_norm, zonal_meridian_profile,
    zonal_meridian_quadrature, LegendreCatalog,
};
use crate::spectral_models::{hausdorff_volume, ManifoldKind, ModelPair};
use crate::window_functions::{WindowFunction, WindowKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

pub(super) fn dispatch(name: &str, cfg: &ExperimentConfig) -> Result<Outputs> {
    match name {
        "torus-weyl" => torus_weyl(cfg),
        "torus-fuzzy-components" => torus_fuzzy_components(cfg),
        "sphere-jump-scaling" => sphere_jump_scaling(cfg),
        "zonal-meridian" => zonal_meridian(cfg),
        "sojourn-detect" => sojourn_detect(cfg),
        "epsilon-staircase" => epsilon_staircase(cfg),
        "tauberian-smoothing" => tauberian_smoothing(cfg),
        "forbidden-decay" => forbidden_decay(cfg),
        "biangle-solve" => biangle_solve(cfg),
        "clairaut-return" => clairaut_return(cfg),
        other => Err(LabError::UnknownExperiment(other.to_string())),
    }
}

fn pair_for(model: &str) -> Result<ModelPair> {
    match model {
        "torus2" => ModelPair::torus(2, 1),
        "torus3" => ModelPair::torus(3, 1),
        "sphere2" => ModelPair::great_sphere(2, 1),
        "sphere3" => ModelPair::great_sphere(3, 1),
        other => invalid(format!("experiment needs a single model, got `{other}`")),
    }
}

fn require(cfg: &ExperimentConfig, allowed: &[&str]) -> Result<ModelPair> {
    if !allowed.contains(&cfg.model.as_str()) {
        return Err(LabError::Unsupported(format!(
            "{} supports models {:?}, got `{}`",
            cfg.experiment, allowed, cfg.model
        )));
    }
    pair_for(&cfg.model)
}

fn window_for(cfg: &ExperimentConfig, spec: &str) -> Result<WindowFunction> {
    if spec.trim() == "sharp" {
        WindowFunction::sharp(cfg.epsilon)
    } else {
        WindowFunction::new(WindowKind::parse(spec)?)
    }
}

fn taper_for(spec: &str) -> Result<Taper> {
    match spec.split_once(':') {
        None if spec == "smooth" => Ok(Taper::Smooth),
        Some(("band", low)) => Ok(Taper::Band { low: super::parse_real(low)? }),
        _ => invalid(format!("unknown taper `{spec}`")),
    }
}

fn is_torus(pair: &ModelPair) -> bool {
    pair.ambient.kind == ManifoldKind::Torus
}

/// Log-spaced sample points from just below `lambda_max / span` to
/// `lambda_max`, moved to the midpoint of the surrounding levels;
/// `lambda_max` itself closes the grid.
fn lambda_grid(pair: &ModelPair, lambda_max: f64, span: f64, count: usize) -> Vec<f64> {
    if lambda_max <= 0.0 {
        return vec![0.0];
    }
    // the first midpoint must not land above lambda_max / span
    let lo = lambda_max / span - 1.0;
    let mut grid: Vec<f64> = (0..count)
        .map(|k| {
            let l = lo * (lambda_max / lo).powf(k as f64 / (count - 1) as f64);
            if is_torus(pair) {
                ((l * l).floor() + 0.5).sqrt()
            } else {
                l.floor() + 0.5
            }
        })
        .filter(|l| *l < lambda_max)
        .collect();
    grid.push(lambda_max);
    grid.dedup();
    grid
}

/// `s` of the maximal components at `t = 0` seen by `w_hat`, always including `0`.
fn component_s_values(pair: &ModelPair, c: f64, w: &WindowFunction) -> Result<Vec<f64>> {
    if w.is_sharp() || !(c > 0.0 && c < 1.0) {
        return Ok(vec![0.0]);
    }
    let s_max = w.ft_support_radius();
    let set = if is_torus(pair) {
        torus_sojourn_set(pair.n(), pair.d(), c, s_max, 0.0)?
    } else {
        sphere_sojourn_set(c, s_max, 0.0, pair.n() + pair.d() - 2)?
    };
    let mut s: Vec<f64> = set.visible(|s| w.ft(s)).maximal_s_at_t0();
    if !s.iter().any(|v| v.abs() < 1e-9) {
        s.push(0.0);
    }
    s.sort_by(f64::total_cmp);
    s.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(s)
}

fn weyl_table(series: &LadderSeries, pred: impl Fn(f64) -> f64) -> Result<Vec<u8>> {
    let mut t = Table::new(&WEYL_SUM_COLUMNS)?;
    for (l, v) in series.abscissa.iter().zip(&series.values) {
        let p = pred(*l);
        let residual = v - p;
        t.nums(&[*l, *v, p, residual, residual / p])?;
    }
    t.finish()
}

fn prediction(pair: &ModelPair, c: f64, w: &WindowFunction) -> Result<MainTermPrediction> {
    let vol = hausdorff_volume(&pair.sub, &pair.ambient)?;
    leading_coeff(pair.n(), pair.d(), c, w, vol, &component_s_values(pair, c, w)?)
}

fn torus_weyl(cfg: &ExperimentConfig) -> Result<Outputs> {
    let pair = pair_for(&cfg.model)?;
    let slope = Slope::parse(&cfg.c)?;
    let lw = LadderWindow::new(slope.clone(), window_for(cfg, &cfg.window)?)?;
    let engine = cache::engine(pair, cfg.lambda_max)?;
    let grid = lambda_grid(&pair, cfg.lambda_max, cfg.fit_span, 160);
    let series = engine.ladder_series(&lw, &grid)?;
    let pred = prediction(&pair, slope.value(), lw.window())?;
    let reference = is_torus(&pair) && pair.n() == 2 && pair.d() == 1;
    let calibration = if cfg.lambda_max > 0.0 {
        Some(calibrate_universal_constant_over(&series, &pred, cfg.fit_span)?)
    } else {
        None
    };
    let constant = if reference {
        Some(C21_REFERENCE)
    } else {
        calibration.as_ref().map(|c| c.estimate)
    };
    let mut out = Outputs::default();
    out.add("weyl_sum.csv", weyl_table(&series, |l| constant.map_or(f64::NAN, |k| k * pred.eval(l)))?);

    let zero_mode = engine.level_masses(&lw, 0.0)?.masses[0];
    let top = *series.values.last().expect("nonempty grid");
    let summary = format!(
        "{}; value at lambda_max {top:.17e}, without the constant mode {:.17e}",
        engine.describe(),
        top - zero_mode
    );
    if cfg.lambda_max == 0.0 {
        out.verdict(
            VerdictRow::absolute("only the constant mode below lambda = 0+", "constant eigenfunction pair", top, zero_mode, 0.0)
                .with_detail(summary),
        );
        return Ok(out);
    }
    let anchor = "lattice-count identity and the 8 eps (1 - c^2)^(-1/2) lambda asymptote";
    if reference {
        if let WindowKind::SharpIndicator { eps } = *lw.window().kind() {
            let asymptote = 8.0 * eps * cfg.lambda_max / (2.0 * PI * slope.cosine_complement());
            out.verdict(
                VerdictRow::relative("sharp sum over its lattice asymptote at lambda_max", anchor, top, asymptote, 0.03)
                    .with_detail(summary.clone()),
            );
        }
    }
    if let Some(cal) = &calibration {
        let range = format!("fitted on [{:.6}, {:.6}], log-log slope {:.4}", cal.range.0, cal.range.1, cal.fit.slope);
        if reference {
            out.verdict(
                VerdictRow::relative(
                    "calibrated C_{2,1} against 2/pi^2",
                    "universal constant fixed by the torus lattice identity",
                    cal.estimate,
                    C21_REFERENCE,
                    0.05,
                )
                .with_detail(range.clone()),
            );
        }
        out.verdict(
            VerdictRow::absolute(
                &format!("calibration drift across the fitted range (C = {:.6})", cal.estimate),
                "universal constant C_{n,d}",
                cal.drift,
                0.0,
                CALIBRATION_DRIFT_LIMIT,
            )
            .with_detail(range),
        );
        if !is_torus(&pair) && lw.is_sharp() {
            // sphere exclusion: the calibrated constant must move with eps
            let half = LadderWindow::new(slope.clone(), WindowFunction::sharp(cfg.epsilon / 2.0)?)?;
            let s2 = engine.ladder_series(&half, &grid)?;
            let p2 = prediction(&pair, slope.value(), half.window())?;
            let c2 = calibrate_universal_constant_over(&s2, &p2, cfg.fit_span)?;
            let dev = (cal.estimate / c2.estimate - 1.0).abs();
            out.verdict(
                VerdictRow::within(
                    "sphere sharp calibration depends on eps (excluded from universal-constant calibration)",
                    "only the principal component may be maximal for universal asymptotics",
                    dev,
                    0.05,
                    f64::INFINITY,
                )
                .with_detail(format!("C(eps) = {:.6}, C(eps/2) = {:.6}", cal.estimate, c2.estimate)),
            );
        }
    }
    Ok(out)
}

fn torus_fuzzy_components(cfg: &ExperimentConfig) -> Result<Outputs> {
    let pair = require(cfg, &["torus2"])?;
    let slope = Slope::parse(&cfg.c)?;
    let c = slope.value();
    let wide = LadderWindow::new(slope.clone(), window_for(cfg, &cfg.window)?)?;
    let narrow = LadderWindow::new(slope.clone(), window_for(cfg, &cfg.reference_window)?)?;
    if wide.is_sharp() || narrow.is_sharp() {
        return invalid("torus-fuzzy-components compares two smooth windows");
    }
    let engine = cache::engine(pair, cfg.lambda_max)?;
    let grid = lambda_grid(&pair, cfg.lambda_max, cfg.fit_span, 40);
    let vol = hausdorff_volume(&pair.sub, &pair.ambient)?;
    let mut out = Outputs::default();
    let mut coeff = Vec::new();
    for (lw, file) in [(&wide, "weyl_sum.csv"), (&narrow, "weyl_sum_reference.csv")] {
        engine.fuzzy_ladder_sum(lw, cfg.lambda_max)?;
        let series = engine.ladder_series(lw, &grid)?;
        let full = prediction(&pair, c, lw.window())?;
        let principal = leading_coeff(2, 1, c, lw.window(), vol, &[0.0])?;
        let cal = calibrate_universal_constant_over(&series, &principal, cfg.fit_span)?;
        out.add(file, weyl_table(&series, |l| C21_REFERENCE * full.eval(l))?);
        coeff.push((cal.estimate * principal.base, full, principal, cal));
    }
    let (mw, pw, p0w, _) = &coeff[0];
    let (mn, pn, _, _) = &coeff[1];
    let measured = mw / mn;
    let predicted = pw.base / pn.base;
    let anchor = "main coefficient proportional to the sum of psi_hat over maximal components";
    out.verdict(
        VerdictRow::relative("wide over narrow main coefficient", anchor, measured, predicted, 0.10).with_detail(format!(
            "wide s-values {:?}, narrow s-values {:?}",
            pw.s_values, pn.s_values
        )),
    );
    let w = wide.window();
    let others: f64 = pw.s_values.iter().filter(|s| s.abs() > 1e-9).map(|s| w.ft(*s)).sum();
    if others > 0.0 {
        let alpha = (measured * pn.base / p0w.base * w.ft(0.0) - w.ft(0.0)) / others;
        out.verdict(
            VerdictRow::relative(
                "nonprincipal component coefficient relative to the principal one",
                "each maximal component carries the principal coefficient",
                alpha,
                1.0,
                0.10,
            )
            .with_detail("measured, not absorbed: (ratio * sum_n - psi_hat_w(0)) / sum_{s != 0} psi_hat_w(s)"),
        );
    }
    for (k, label) in [(0usize, "wide"), (1, "narrow")] {
        let (mcoef, full, _, cal) = &coeff[k];
        out.verdict(
            VerdictRow::relative(
                &format!("C_{{2,1}} from the {label} window with its component sum"),
                "universal constant fixed by the torus lattice identity",
                mcoef / full.base,
                C21_REFERENCE,
                0.05,
            )
            .with_detail(format!("drift {:.4}", cal.drift)),
        );
    }
    Ok(out)
}

fn sphere_jump_scaling(cfg: &ExperimentConfig) -> Result<Outputs> {
    let slope = Slope::parse(&cfg.c)?;
    let lw = LadderWindow::new(slope.clone(), WindowFunction::sharp(cfg.epsilon)?)?;
    let mut degrees = cfg.degrees.clone();
    degrees.sort_unstable();
    degrees.dedup();
    if degrees.len() < 2 {
        return invalid("sphere-jump-scaling needs at least two degrees");
    }
    let top = *degrees.last().expect("nonempty");
    let s2 = LadderEngine::new(ModelPair::great_sphere(2, 1)?, top as f64 + 1.0)?;
    let s3_degrees: Vec<u64> = degrees.iter().cloned().filter(|&n| (64..=1024).contains(&n)).collect();
    let s3 = LadderEngine::new(ModelPair::great_sphere(3, 1)?, s3_degrees.last().cloned().unwrap_or(0) as f64)?;
    let catalog = LegendreCatalog::new(top as usize + 1);

    let j2: Vec<f64> = degrees.iter().map(|&n| s2.jump_at(&lw, n as f64)).collect::<Result<_>>()?;
    let j3: Vec<f64> = s3_degrees.iter().map(|&n| s3.jump_at(&lw, n as f64)).collect::<Result<_>>()?;
    let c = slope.value();
    let single = |n: u64| -> Result<Option<f64>> {
        let m = c * n as f64;
        if m.fract() != 0.0 || (n as i64 - m as i64) % 2 != 0 {
            return Ok(None);
        }
        Ok(zonal_meridian_profile(n as usize, &catalog)?.iter().find(|(k, _)| *k == m as i64).map(|(_, v)| *v))
    };

    let mut table = Table::new(&["sphere_dim", "degree", "jump", "zonal_single"])?;
    let mut zonal = Vec::new();
    for (n, j) in degrees.iter().zip(&j2) {
        let z = single(*n)?;
        if let Some(v) = z {
            zonal.push((*n as f64, v));
        }
        table.row(&[Cell::Int(2), Cell::Int(*n as i64), Cell::Num(*j), Cell::Num(z.unwrap_or(f64::NAN))])?;
    }
    for (n, j) in s3_degrees.iter().zip(&j3) {
        table.row(&[Cell::Int(3), Cell::Int(*n as i64), Cell::Num(*j), Cell::Num(f64::NAN)])?;
    }
    let mut out = Outputs::default();
    out.add("jumps.csv", table.finish()?);

    let anchor = "one admissible degree per even N; jumps of order lambda^(n-2)";
    let mut odd_max = 0.0f64;
    for &n in &degrees {
        for m in [n.saturating_sub(1), n + 1] {
            if m % 2 == 1 && m <= top {
                odd_max = odd_max.max(s2.jump_at(&lw, m as f64)?.abs());
            }
        }
    }
    out.verdict(VerdictRow::absolute("S^2 jumps vanish at odd N", "jump is zero for odd N", odd_max, 0.0, 0.0));
    let mut parity_max = 0.0f64;
    for n in 0..=200u64.min(top) {
        for m in (0..=n).filter(|m| (n - m) % 2 == 1) {
            parity_max = parity_max.max(sphere2_great_circle_weight(n, m, &catalog).abs());
        }
    }
    out.verdict(VerdictRow::absolute(
        "S^2 weights vanish for N - M odd (N <= 200)",
        "parity of the P_N cosine expansion",
        parity_max,
        0.0,
        0.0,
    ));
    if let Some(pos) = degrees.iter().position(|&n| 2 * n == top) {
        let last = *j2.last().expect("nonempty");
        out.verdict(
            VerdictRow::relative(&format!("S^2 J({top}) / J({})", top / 2), anchor, last / j2[pos], 1.0, 0.05)
                .with_detail(format!("J({}) = {:.17e}, J({top}) = {last:.17e}", top / 2, j2[pos])),
        );
    }
    let x2: Vec<f64> = degrees.iter().map(|&n| n as f64).collect();
    if let Ok(f) = fit_growth_exponent(&x2, &j2) {
        out.verdict(
            VerdictRow::absolute("S^2 eigenspace jump exponent", anchor, f.slope, 0.0, 0.15)
                .with_detail(format!("eigenspace-summed quantity tends to a constant; ci half-width {:.4}", f.ci_half_width)),
        );
    }
    let x3: Vec<f64> = s3_degrees.iter().map(|&n| n as f64).collect();
    match fit_growth_exponent(&x3, &j3) {
        Ok(f) => out.verdict(
            VerdictRow::absolute("S^3 (d = 1) jump exponent over N in [64, 1024]", anchor, f.slope, 1.0, 0.15).with_detail(
                format!(
                    "n-2 = 1 supported; the N^(n-1) = N^2 reading is {} (distance {:.3}); ci half-width {:.4}",
                    if (f.slope - 2.0).abs() > 0.15 { "rejected" } else { "not rejected" },
                    (f.slope - 2.0).abs(),
                    f.ci_half_width
                ),
            ),
        ),
        Err(e) => out.verdict(
            VerdictRow::absolute("S^3 (d = 1) jump exponent over N in [64, 1024]", anchor, f64::NAN, 1.0, 0.15)
                .with_detail(format!("fit unavailable: {e}")),
        ),
    }
    if zonal.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = zonal.iter().cloned().unzip();
        let f = fit_growth_exponent(&x, &y).or_else(|_| loglog_fit(&x, &y))?;
        out.verdict(
            VerdictRow::absolute(
                "single zonal coefficient |a_{cN}|^2 exponent (decay, not a positive constant)",
                "zonal coefficient product (2N+1) (p_j p_k)^2 from the Stirling asymptotics",
                f.slope,
                -1.0,
                0.15,
            )
            .with_detail(format!(
                "the constant-limit reading (exponent 0) is {} (distance {:.3}); the eigenspace sum is linear in the p-product and is the quantity that stays constant",
                if f.slope.abs() > 0.15 { "rejected" } else { "not rejected" },
                f.slope.abs()
            )),
        );
    }
    Ok(out)
}

fn zonal_meridian(cfg: &ExperimentConfig) -> Result<Outputs> {
    let top = cfg.degrees.iter().cloned().max().unwrap_or(0).max(200) as usize;
    let catalog = LegendreCatalog::new(top + 1);
    let mut worst_rel = 0.0f64;
    let mut worst_zero = 0.0f64;
    for n in 0..=200usize {
        let prof = zonal_meridian_profile(n, &catalog)?;
        let quad = zonal_meridian_quadrature(n, 4 * n + 8)?;
        let scale = quad.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        for (m, q) in &quad {
            match prof.iter().find(|(k, _)| k == m) {
                Some((_, p)) => worst_rel = worst_rel.max((p - q).abs() / q.abs()),
                None => worst_zero = worst_zero.max(q.abs() / scale),
            }
        }
    }
    let mut out = Outputs::default();
    let anchor = "zonal coefficients p_j p_k with p_j = 4^(-j) binom(2j, j)";
    out.verdict(
        VerdictRow::absolute("p-product coefficients against quadrature, N <= 200 (max relative error)", anchor, worst_rel.max(worst_zero), 0.0, 1e-8)
            .with_detail(format!("nonzero coefficients {worst_rel:.3e}; parity zeros relative to the largest {worst_zero:.3e}")),
    );
    let n2 = (catalog.cosine_product(2, 0) - 0.25).abs() + (2.0 * catalog.cosine_product(2, 2) - 0.75).abs();
    out.verdict(VerdictRow::absolute("P_2(cos phi) = 1/4 + (3/4) cos 2 phi", anchor, n2, 0.0, 0.0));

    // literal full-index reading p_{N-k} p_{N+k}
    let n = 10usize;
    let quad = zonal_meridian_quadrature(n, 4 * n + 8)?;
    let scale = (2 * n + 1) as f64 / 2.0;
    let mut full_err = 0.0f64;
    for (m, q) in quad.iter().filter(|(m, _)| (n as i64 - m) % 2 == 0) {
        let k = m.unsigned_abs() as usize;
        let lit = catalog.p(n - k) * catalog.p(n + k);
        full_err = full_err.max((scale * lit * lit - q).abs() / q);
    }
    out.verdict(
        VerdictRow::within(
            "full-index reading p_{N-k} p_{N+k} disagrees with quadrature at N = 10 (half-index convention adopted)",
            anchor,
            full_err,
            1e-2,
            f64::INFINITY,
        ),
    );

    let mut table = Table::new(&["degree", "norm", "log_degree", "ratio"])?;
    let mut ratios = Vec::new();
    let mut pts = Vec::new();
    for &d in &cfg.degrees {
        let norm = zonal_meridian_norm(d as usize, &catalog)?;
        let ln = (d as f64).ln();
        ratios.push(norm / ln);
        pts.push((ln, norm));
        table.nums(&[d as f64, norm, ln, norm / ln])?;
    }
    out.add("zonal.csv", table.finish()?);
    if ratios.len() >= 2 {
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let a = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let g = my / a - mx;
        out.verdict(
            VerdictRow::absolute("restricted norm over log N: max/min - 1 on the degree range", "restricted norm equals log N + gamma", hi / lo - 1.0, 0.0, 0.15)
                .with_detail(format!("norm = {a:.6} (log N + {g:.4}) by least squares")),
        );
    }
    Ok(out)
}

fn near(t: f64, set: &[f64], tol: f64) -> bool {
    set.iter().any(|s| (s - t).abs() <= tol)
}

fn sojourn_rows(table: &mut Table, model: &str, predicted: &SojournSet, detected: &[(f64, String, f64)]) -> Result<()> {
    for e in &predicted.entries {
        let fam = format!("{model}{}", e.family);
        table.row(&[Cell::Num(e.t), Cell::Text("predicted"), Cell::Text(&fam), Cell::Num(f64::NAN)])?;
    }
    for (t, fam, prom) in detected {
        let fam = format!("{model}{fam}");
        table.row(&[Cell::Num(*t), Cell::Text("detected"), Cell::Text(&fam), Cell::Num(*prom)])?;
    }
    Ok(())
}

fn detect(engine: &LadderEngine, lw: &LadderWindow, lambda_max: f64, grid: &TGrid, taper: Taper, policy: &ThresholdPolicy) -> Result<(crate::ladder_sums::TraceProfile, Vec<DetectedPeak>)> {
    let prof = engine.trace_profile(lw, lambda_max, grid, taper)?;
    let peaks = detect_singular_support(&prof, policy);
    Ok((prof, peaks))
}

fn sojourn_detect(cfg: &ExperimentConfig) -> Result<Outputs> {
    let pair = require(cfg, &["torus2", "sphere2"])?;
    let slope = Slope::parse(&cfg.c)?;
    let c = slope.value();
    let lw = LadderWindow::new(slope, window_for(cfg, &cfg.window)?)?;
    if lw.is_sharp() {
        return invalid("sojourn-detect needs a smooth window");
    }
    let taper = taper_for(&cfg.taper)?;
    let step = if cfg.t_step > 0.0 { cfg.t_step } else { PI / (2.0 * cfg.lambda_max.max(1.0)) };
    let grid = TGrid::symmetric(cfg.t_max + 1e-9, step)?;
    let policy = ThresholdPolicy { k_mad: cfg.k_mad, rel_floor: cfg.rel_floor, ..ThresholdPolicy::default() };
    let engine = cache::engine(pair, cfg.lambda_max)?;
    let (prof, peaks) = detect(&engine, &lw, cfg.lambda_max, &grid, taper, &policy)?;

    let w = lw.window();
    let s_max = w.ft_support_radius();
    let catalog = if is_torus(&pair) {
        torus_sojourn_set(2, 1, c, s_max, cfg.t_max)?
    } else {
        sphere_sojourn_set(c, s_max, cfg.t_max, 1)?
    };
    let visible = catalog.visible(|s| w.ft(s));
    let predicted = visible.times();
    let detected: Vec<f64> = peaks.iter().map(|p| p.t).collect();

    let mut out = Outputs::default();
    let mut trace = Table::new(&TRACE_COLUMNS)?;
    for (i, a) in prof.abs().iter().enumerate() {
        trace.nums(&[prof.t[i], prof.re[i], prof.im[i], *a])?;
    }
    out.add("trace.csv", trace.finish()?);
    let mut soj = Table::new(&SOJOURN_COLUMNS)?;
    let det_rows: Vec<(f64, String, f64)> = peaks.iter().map(|p| (p.t, String::new(), p.prominence)).collect();
    sojourn_rows(&mut soj, "", &visible, &det_rows)?;
    out.add("sojourn.csv", soj.finish()?);

    let anchor = "singular support of the trace equals the set of sojourn times";
    let tol = step * (1.0 + 1e-9);
    let missing = predicted.iter().filter(|t| !near(**t, &detected, tol)).count();
    out.verdict(
        VerdictRow::absolute("predicted sojourn times without a detected peak within one grid step", anchor, missing as f64, 0.0, 0.0)
            .with_detail(format!("predicted {predicted:?}; detected {detected:?}")),
    );
    if is_torus(&pair) {
        let spurious = detected.iter().filter(|t| !near(**t, &predicted, tol)).count();
        out.verdict(VerdictRow::absolute("detected peaks away from every predicted time", anchor, spurious as f64, 0.0, 0.0));
    } else {
        let off = detected
            .iter()
            .filter(|t| {
                let q = **t / (PI / 2.0);
                (q - q.round()).abs() * PI / 2.0 > tol
            })
            .count();
        out.verdict(VerdictRow::absolute("detected peaks off (pi/2) Z by more than one grid step", anchor, off as f64, 0.0, 0.0));
    }

    let model = BiangleModel::new(pair, c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = model.random_point(&mut rng);
        for e in &catalog.entries {
            worst = worst.max(model.residual_norm(&p, e.s, e.t));
        }
    }
    out.verdict(
        VerdictRow::absolute("analytic catalog residual at 100 random cone points", "bi-angle equation on the model", worst, 0.0, 1e-10)
            .with_detail(format!("{} catalog entries", catalog.entries.len())),
    );

    // second cutoff: the detected set should not move
    let half = cfg.lambda_max / 2.0;
    let engine_half = cache::engine(pair, half)?;
    let (_, peaks_half) = detect(&engine_half, &lw, half, &grid, taper, &policy)?;
    let det_half: Vec<f64> = peaks_half.iter().map(|p| p.t).collect();
    let moved = detected.iter().filter(|t| !near(**t, &det_half, tol)).count()
        + det_half.iter().filter(|t| !near(**t, &detected, tol)).count();
    out.verdict(
        VerdictRow::absolute(&format!("detected set changes between cutoffs {} and {half}", cfg.lambda_max), anchor, moved as f64, 0.0, 0.0)
            .with_detail(format!("taper {}; detected at the lower cutoff {det_half:?}", taper.describe())),
    );
    Ok(out)
}

fn epsilon_staircase(cfg: &ExperimentConfig) -> Result<Outputs> {
    let pair = require(cfg, &["sphere2", "sphere3"])?;
    let slope = Slope::parse(&cfg.c)?;
    let level = *cfg.degrees.first().ok_or_else(|| LabError::InvalidParameter("no level in degrees".into()))?;
    let engine = LadderEngine::new(pair, level as f64)?;
    let stairs = engine.epsilon_staircase(&slope, level as f64, &cfg.eps_grid)?;
    let mut out = Outputs::default();
    let mut table = Table::new(&STAIRCASE_COLUMNS)?;
    for (e, v) in stairs.series.abscissa.iter().zip(&stairs.series.values) {
        table.nums(&[*e, *v])?;
    }
    out.add("staircase.csv", table.finish()?);

    let anchor = "gaps m - (p/q) N are at least 1/q";
    let inside: Vec<f64> = stairs
        .series
        .abscissa
        .iter()
        .zip(&stairs.series.values)
        .filter(|(e, _)| **e < 1.0)
        .map(|(_, v)| *v)
        .collect();
    let spread = if inside.is_empty() {
        f64::NAN
    } else {
        inside.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - inside.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    out.verdict(
        VerdictRow::absolute(&format!("J_eps constant on (0, 1) at N = {level}"), anchor, spread, 0.0, 0.0)
            .with_detail(format!("{} samples in (0, 1)", inside.len())),
    );
    let first = stairs.jump_locations.iter().cloned().find(|g| *g > 1e-12).unwrap_or(f64::INFINITY);
    let catalog = LegendreCatalog::new(level as usize + 2);
    let mid = (slope.value() * level as f64).round() as u64;
    let neighbours: Vec<String> = [mid.saturating_sub(1), mid + 1]
        .iter()
        .map(|&m| {
            let w = if pair.n() == 2 {
                sphere2_great_circle_weight(level, m, &catalog)
            } else {
                sphere_eigenspace_jump(pair.n(), 1, level, m, 0.0).unwrap_or(f64::NAN)
            };
            format!("W({level},{m}) = {w:e}")
        })
        .collect();
    out.verdict(
        VerdictRow::absolute(&format!("first jump of eps -> J_eps at N = {level}"), anchor, first, 1.0, 1e-12).with_detail(format!(
            "positive-weight gaps start at {first}; {}; jump candidates {:?}",
            neighbours.join(", "),
            &stairs.jump_locations[..stairs.jump_locations.len().min(6)]
        )),
    );
    let ambiguous = stairs.ambiguous_samples(1e-9);
    out.verdict(VerdictRow::absolute("eps samples on a jump candidate", anchor, ambiguous.len() as f64, 0.0, 0.0));

    // torus instances at rational slopes, against the band-walk masses
    let torus = cache::engine(ModelPair::torus(2, 1)?, 25.0)?;
    let mut tt = Table::new(&["c", "shell_r2", "epsilon", "jump_value", "band_value"])?;
    let eps_grid: Vec<f64> = (0..20).map(|k| (k as f64 + 0.5) / 20.0).collect();
    let mut mismatch = 0usize;
    let mut gap_report = Vec::new();
    let shells: Vec<u64> = torus.joint().expect("torus").shell_counts().iter().enumerate().filter(|(_, c)| **c > 0).map(|(k, _)| k as u64).collect();
    for (cs, q) in [("1/2", 2u64), ("3/5", 5)] {
        let sl = Slope::parse(cs)?;
        let masses: Vec<_> = eps_grid
            .iter()
            .map(|&e| torus.level_masses(&LadderWindow::new(sl.clone(), WindowFunction::sharp(e)?)?, 25.0))
            .collect::<Result<_>>()?;
        let mut min_gap = f64::INFINITY;
        for (li, &k) in shells.iter().enumerate() {
            let lam = (k as f64).sqrt();
            let st = torus.epsilon_staircase(&sl, lam, &eps_grid)?;
            for (ei, e) in eps_grid.iter().enumerate() {
                let band = masses[ei].masses[li];
                if st.series.values[ei] != band {
                    mismatch += 1;
                }
                tt.row(&[Cell::Text(cs), Cell::Int(k as i64), Cell::Num(*e), Cell::Num(st.series.values[ei]), Cell::Num(band)])?;
            }
            let root = (k as f64).sqrt().round() as u64;
            if root * root == k {
                if let Some(g) = st.jump_locations.iter().cloned().find(|g| *g > 1e-12) {
                    min_gap = min_gap.min(g);
                }
            }
        }
        gap_report.push((cs, q, min_gap));
    }
    out.add("staircase_torus.csv", tt.finish()?);
    out.verdict(VerdictRow::absolute(
        "torus staircases (c = 1/2, 3/5, |j|^2 <= 625) against band-walk masses",
        "shell enumeration",
        mismatch as f64,
        0.0,
        0.0,
    ));
    for (cs, q, g) in gap_report {
        out.verdict(
            VerdictRow::within(&format!("smallest positive gap on integer shells, c = {cs}"), anchor, g, 1.0 / q as f64 - 1e-12, f64::INFINITY)
                .with_detail(format!("lower bound 1/q = 1/{q}")),
        );
    }
    Ok(out)
}

fn tauberian_smoothing(cfg: &ExperimentConfig) -> Result<Outputs> {
    let pair = require(cfg, &["torus2", "torus3"])?;
    let slope = Slope::parse(&cfg.c)?;
    let engine = cache::engine(pair, cfg.lambda_max)?;
    let scan = smoothing_error_scan(&engine, &slope, cfg.epsilon, cfg.lambda_max, &cfg.t_values)?;
    let mut out = Outputs::default();
    let mut table = Table::new(&["T", "error", "sharp_value"])?;
    for (t, e) in scan.series.abscissa.iter().zip(&scan.series.values) {
        table.nums(&[*t, *e, scan.sharp_value])?;
    }
    out.add("tauberian.csv", table.finish()?);
    let anchor = "Tauberian remainder gamma(c, eps) / T lambda^(n-1)";
    out.verdict(
        VerdictRow::within("log-log slope of the smoothing error in T", anchor, scan.fit.slope, -1.3, -0.7).with_detail(format!(
            "errors {:?}; {} points, bootstrap half-width {:.3}",
            scan.series.values, scan.fit.points, scan.fit.ci_half_width
        )),
    );
    let at = |t: f64| scan.series.abscissa.iter().position(|x| *x == t).map(|i| scan.series.values[i]);
    if let (Some(e4), Some(e8)) = (at(4.0), at(8.0)) {
        out.verdict(VerdictRow::within("error(T = 8) / error(T = 4)", anchor, e8 / e4, 0.35, 0.65));
    }
    let small = cfg.lambda_max.min(30.0);
    let sharp = engine.sharp_ladder_sum(&LadderWindow::sharp(slope.clone(), cfg.epsilon)?, small)?;
    let lw = LadderWindow::new(slope, WindowFunction::mollified(1e4, cfg.epsilon)?)?;
    let fz = engine.fuzzy_ladder_sum(&lw, small)?;
    out.verdict(
        VerdictRow::absolute(&format!("T = 1e4 mollified sum recovers the sharp sum at lambda = {small}"), anchor, (fz.value - sharp).abs(), 0.0, 1e-6 * sharp.abs())
            .with_detail(format!("truncation bound {:.3e}", fz.truncation_bound)),
    );
    Ok(out)
}

fn forbidden_decay(cfg: &ExperimentConfig) -> Result<Outputs> {
    let slope = Slope::parse(&cfg.c)?;
    if !(slope.value() > 1.0) {
        return invalid("forbidden-decay probes slopes above one");
    }
    let lw = LadderWindow::any_slope(slope, WindowFunction::sharp(cfg.epsilon)?)?;
    let anchor = "coefficients in the forbidden region mu > lambda decay rapidly (vanish on models)";
    let mut out = Outputs::default();
    for (pair, file) in [(ModelPair::torus(2, 1)?, "weyl_sum.csv"), (ModelPair::great_sphere(2, 1)?, "weyl_sum_sphere.csv")] {
        let engine = cache::engine(pair, cfg.lambda_max)?;
        let mut grid = level_midpoints(&engine.levels());
        grid.retain(|l| *l <= cfg.lambda_max);
        if grid.is_empty() {
            grid.push(0.0);
        }
        let series = engine.ladder_series(&lw, &grid)?;
        let zero = engine.level_masses(&lw, 0.0)?.masses[0];
        let dev = series.values.iter().map(|v| (v - zero).abs()).fold(0.0, f64::max);
        out.add(file, weyl_table(&series, |_| zero)?);
        out.verdict(
            VerdictRow::absolute(&format!("{}: ladder sum equals the constant-mode term at every sample", engine.describe()), anchor, dev, 0.0, 0.0)
                .with_detail(format!("{} samples up to {}", grid.len(), cfg.lambda_max)),
        );
    }
    let torus = cache::engine(ModelPair::torus(3, 1)?, cfg.lambda_max.min(60.0))?;
    let mut bad = 0u64;
    let mut pairs = 0u64;
    torus.joint().expect("torus").for_each_pair(|lam2, mu2, count| {
        pairs += 1;
        if mu2 > lam2 && count > 0 {
            bad += 1;
        }
    });
    out.verdict(
        VerdictRow::absolute("T^3 joint pairs with mu > lambda and nonzero weight", anchor, bad as f64, 0.0, 0.0)
            .with_detail(format!("{pairs} enumerated pairs")),
    );
    let top = cfg.lambda_max.min(200.0) as u64;
    let catalog = LegendreCatalog::new(top as usize + 1);
    let mut worst = 0.0f64;
    for n in 0..=top {
        for m in n + 1..=n + 8 {
            worst = worst.max(sphere2_great_circle_weight(n, m, &catalog).abs());
        }
    }
    for n in 0..=top.min(40) {
        for m in n + 1..=n + 4 {
            worst = worst.max(sphere_eigenspace_jump(3, 1, n, m, 0.0)?.abs());
        }
    }
    out.verdict(VerdictRow::absolute("sphere weights W(N, M) with M > N", anchor, worst, 0.0, 0.0));
    Ok(out)
}

#[derive(Serialize)]
struct ComponentRecord {
    s: f64,
    t: f64,
    family: String,
    dimension: Option<usize>,
    fixed_dimension: usize,
    clean: Option<bool>,
    status: ProbeStatus,
    sample_count: usize,
    solutions: usize,
    max_residual: f64,
}

#[derive(Serialize)]
struct PairRecord {
    model: String,
    n: usize,
    d: usize,
    expected_dimension: usize,
    converged: usize,
    failed: usize,
    components: Vec<ComponentRecord>,
}

#[derive(Serialize)]
struct ComponentsFile {
    schema_version: u32,
    c: f64,
    seed: u64,
    pairs: Vec<PairRecord>,
}

fn biangle_solve(cfg: &ExperimentConfig) -> Result<Outputs> {
    let c = Slope::parse(&cfg.c)?.value();
    let pairs: Vec<ModelPair> = match cfg.model.as_str() {
        "all" => vec![
            ModelPair::torus(2, 1)?,
            ModelPair::torus(3, 1)?,
            ModelPair::torus(3, 2)?,
            ModelPair::great_sphere(2, 1)?,
            ModelPair::great_sphere(3, 1)?,
        ],
        "torus3" => vec![ModelPair::torus(3, 1)?, ModelPair::torus(3, 2)?],
        m => vec![pair_for(m)?],
    };
    let solver = SolverConfig { seed: cfg.seed, ..SolverConfig::default() };
    let (s_lim, t_lim) = (solver.s_range.1, solver.t_range.1);
    let mut out = Outputs::default();
    let mut records = Vec::new();
    let mut soj = Table::new(&SOJOURN_COLUMNS)?;
    let anchor = "bi-angle components are clean of dimension n + d - 2 when maximal";
    for pair in pairs {
        let model = BiangleModel::new(pair, c)?;
        let dim = model.cone_dim();
        let catalog = if is_torus(&pair) {
            torus_sojourn_set(pair.n(), pair.d(), c, s_lim, t_lim)?
        } else {
            sphere_sojourn_set(c, s_lim, t_lim, dim)?
        };
        let report = solve_biangles(&model, &solver)?;
        let name = format!("{}:", LadderEngine::new(pair, 0.0)?.describe());
        let mut comps = Vec::new();
        let mut unmatched = 0usize;
        let mut bad_dim = 0usize;
        for comp in &report.components {
            let hit = catalog.entries.iter().find(|e| (e.s - comp.s).abs() < 1e-6 && (e.t - comp.t).abs() < 1e-6);
            if hit.is_none() {
                unmatched += 1;
            }
            let probe = comp.probe.as_ref().expect("probed component");
            if probe.dimension != Some(dim) || probe.status != ProbeStatus::Clean {
                bad_dim += 1;
            }
            comps.push(ComponentRecord {
                s: comp.s,
                t: comp.t,
                family: hit.map(|e| e.family.clone()).unwrap_or_else(|| "unmatched".into()),
                dimension: probe.dimension,
                fixed_dimension: probe.fixed_dimension,
                clean: probe.clean,
                status: probe.status,
                sample_count: probe.samples,
                solutions: comp.solutions.len(),
                max_residual: comp.solutions.iter().map(|s| s.residual_norm).fold(0.0, f64::max),
            });
        }
        let interior = |x: f64, lim: f64| x.abs() < lim - 1e-6;
        let missing = catalog
            .entries
            .iter()
            .filter(|e| interior(e.s, s_lim) && interior(e.t, t_lim))
            .filter(|e| !report.components.iter().any(|k| (e.s - k.s).abs() < 1e-6 && (e.t - k.t).abs() < 1e-6))
            .count();
        out.verdict(
            VerdictRow::absolute(&format!("{name} solver components outside the analytic catalog or missed"), "bi-angle equation on the model", (unmatched + missing) as f64, 0.0, 0.0)
                .with_detail(format!("{} components, {unmatched} unmatched, {missing} interior catalog entries missed", report.components.len())),
        );
        out.verdict(
            VerdictRow::absolute(&format!("{name} components without a clean dimension {dim} probe"), anchor, bad_dim as f64, 0.0, 0.0)
                .with_detail(format!("n + d - 2 = {dim}; {} components probed", report.components.len())),
        );
        let det: Vec<(f64, String, f64)> = comps.iter().map(|k| (k.t, k.family.clone(), f64::NAN)).collect();
        sojourn_rows(&mut soj, &name, &catalog, &det)?;
        records.push(PairRecord {
            model: name,
            n: pair.n(),
            d: pair.d(),
            expected_dimension: dim,
            converged: report.converged,
            failed: report.failed,
            components: comps,
        });
    }
    out.add_json("components.json", &ComponentsFile { schema_version: SCHEMA_VERSION, c, seed: cfg.seed, pairs: records })?;
    out.add("sojourn.csv", soj.finish()?);
    Ok(out)
}

fn clairaut_return(cfg: &ExperimentConfig) -> Result<Outputs> {
    let c = Slope::parse(&cfg.c)?.value();
    let h = 1e-4;
    let samples = 8;
    let anchor = "Clairaut integral fixes the return time along a latitude circle";
    let mut out = Outputs::default();
    let mut table = Table::new(&["profile", "direction", "sample", "return_time"])?;
    let cases = [
        ("sphere", RevolutionProfile::Sphere, 0.0),
        ("spheroid_a1_b0.6", RevolutionProfile::Spheroid { a: 1.0, b: 0.6 }, 0.5),
    ];
    for (label, prof, phi0) in cases {
        let rep = clairaut_return_time(&prof, phi0, c, samples, h)?;
        for (dir, times) in [("north", &rep.northbound), ("south", &rep.southbound)] {
            for (k, t) in times.iter().enumerate() {
                table.row(&[Cell::Text(label), Cell::Text(dir), Cell::Int(k as i64), Cell::Num(*t)])?;
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (north, south) = (mean(&rep.northbound), mean(&rep.southbound));
        if matches!(prof, RevolutionProfile::Sphere) {
            out.verdict(VerdictRow::absolute("sphere equator: northbound return time", anchor, north, PI, 1e-6));
            out.verdict(VerdictRow::absolute("sphere equator: southbound return time", anchor, south, PI, 1e-6));
        }
        out.verdict(
            VerdictRow::absolute(&format!("{label}: return time independent of launch longitude"), anchor, rep.max_deviation_north.max(rep.max_deviation_south), 0.0, 1e-9)
                .with_detail(format!("north {north:.12}, south {south:.12}")),
        );
        out.verdict(VerdictRow::absolute(&format!("{label}: relative p_theta drift over one return"), anchor, rep.max_p_theta_drift, 0.0, 1e-9));
    }
    out.add("clairaut.csv", table.finish()?);
    Ok(out)
}
