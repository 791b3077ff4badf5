//! Independent oracles: brute-force enumeration, quadrature and closed-form
//! algebra computed here, compared with the library.

use approx::assert_relative_eq;
use kwlab::arith::Slope;
use kwlab::asymptotics_lab::leading_coeff;
use kwlab::biangle_geometry::{clairaut_return_time, torus_sojourn_set, BiangleModel, RevolutionProfile};
use kwlab::ladder_sums::{LadderEngine, LadderWindow};
use kwlab::restriction_weights::{
    parseval_diag, sphere2_great_circle_weight, sphere_eigenspace_jump, torus_mode_weight, LegendreCatalog,
};
use kwlab::spectral_models::{
    enumerate_torus_levels, hausdorff_volume, sphere_multiplicity, LevelIndex, ManifoldSpec, ModelPair, SpectralLevel,
    SubmanifoldSpec,
};
use kwlab::window_functions::{WindowFunction, WindowKind};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;

fn slope(s: &str) -> Slope {
    Slope::parse(s).unwrap()
}

/// `P_N(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

#[test]
fn torus_multiplicities_match_exhaustive_enumeration() {
    let mut shells: BTreeMap<i64, u64> = BTreeMap::new();
    for a in -3i64..=3 {
        for b in -3i64..=3 {
            for c in -3i64..=3 {
                let k = a * a + b * b + c * c;
                if k <= 9 {
                    *shells.entry(k).or_default() += 1;
                }
            }
        }
    }
    let levels = enumerate_torus_levels(3, 3.0).unwrap();
    let got: Vec<(i64, u64)> = levels
        .iter()
        .map(|lv| match lv.index {
            LevelIndex::RadiusSquared(k) => (k as i64, lv.multiplicity),
            _ => unreachable!(),
        })
        .collect();
    assert_eq!(got, shells.into_iter().collect::<Vec<_>>());
}

#[test]
fn sphere_multiplicities() {
    for n in 0..50u64 {
        assert_eq!(sphere_multiplicity(2, n).unwrap(), (2 * n + 1) as u128);
    }
    // harmonic homogeneous polynomials in 4 variables: kernel of the Laplacian
    for degree in [2usize, 3] {
        let monomials = |deg: usize| -> Vec<[usize; 4]> {
            let mut out = Vec::new();
            for a in 0..=deg {
                for b in 0..=deg - a {
                    for c in 0..=deg - a - b {
                        out.push([a, b, c, deg - a - b - c]);
                    }
                }
            }
            out
        };
        let src = monomials(degree);
        let dst = monomials(degree - 2);
        let mut lap = DMatrix::<f64>::zeros(dst.len(), src.len());
        for (col, m) in src.iter().enumerate() {
            for v in 0..4 {
                if m[v] >= 2 {
                    let mut t = *m;
                    t[v] -= 2;
                    let row = dst.iter().position(|d| *d == t).unwrap();
                    lap[(row, col)] += (m[v] * (m[v] - 1)) as f64;
                }
            }
        }
        let kernel = src.len() - lap.rank(1e-9);
        assert_eq!(sphere_multiplicity(3, degree as u64).unwrap(), kernel as u128);
    }
}

#[test]
fn latitude_circle_length() {
    let sub = SubmanifoldSpec::LatitudeSubsphere { d: 1, a: 0.5 };
    let v = hausdorff_volume(&sub, &ManifoldSpec::sphere(2).unwrap()).unwrap();
    assert_relative_eq!(v, 2.0 * PI * 3f64.sqrt() / 2.0, max_relative = 1e-15);
}

#[test]
fn torus_mode_weight_prefactor() {
    assert_relative_eq!(torus_mode_weight(&[3, 4], &[3]).unwrap(), 1.0 / (2.0 * PI), max_relative = 1e-15);
}

#[test]
fn p2_cosine_expansion() {
    let cat = LegendreCatalog::new(4);
    assert_eq!(cat.p(1) * cat.p(1), 0.25);
    assert_eq!(cat.p(0) * cat.p(2), 0.375);
}

#[test]
fn great_circle_weights_match_quadrature() {
    let cat = LegendreCatalog::new(80);
    for big_n in 0..=60usize {
        let nodes = 4 * big_n + 8;
        let scale = (2 * big_n + 1) as f64;
        for big_m in 0..=big_n {
            // a_M = (1 / 2 pi) int P_N(cos phi) cos(M phi) dphi, trapezoid exact here
            let a: f64 = (0..nodes)
                .map(|k| {
                    let phi = 2.0 * PI * k as f64 / nodes as f64;
                    legendre(big_n, phi.cos()) * (big_m as f64 * phi).cos()
                })
                .sum::<f64>()
                / nodes as f64;
            let expect = if big_m == 0 { scale * a / 2.0 } else { scale * a };
            let got = sphere2_great_circle_weight(big_n as u64, big_m as u64, &cat);
            if (big_n - big_m) % 2 == 1 {
                assert_eq!(got, 0.0);
                assert!(expect.abs() < 1e-12);
            } else {
                assert_relative_eq!(got, expect, max_relative = 1e-10);
            }
        }
    }
}

#[test]
fn parseval_closed_forms() {
    let t2 = ModelPair::torus(2, 1).unwrap();
    let shell1 = SpectralLevel { value: 1.0, multiplicity: 4, index: LevelIndex::RadiusSquared(1) };
    let direct: f64 = [[1i64, 0], [-1, 0], [0, 1], [0, -1]]
        .iter()
        .map(|j| torus_mode_weight(j, &j[..1]).unwrap())
        .sum();
    assert_relative_eq!(parseval_diag(&t2, &shell1).unwrap(), direct, max_relative = 1e-15);
    assert_relative_eq!(direct, 4.0 / (2.0 * PI), max_relative = 1e-15);

    let s2 = ModelPair::great_sphere(2, 1).unwrap();
    for n in [0u64, 1, 7, 100] {
        let lv = SpectralLevel { value: n as f64, multiplicity: 2 * n + 1, index: LevelIndex::Degree(n) };
        assert_relative_eq!(parseval_diag(&s2, &lv).unwrap(), (2 * n + 1) as f64 / 2.0, max_relative = 1e-14);
    }
}

#[test]
fn window_mass_matches_quadrature() {
    for w in [WindowFunction::bump(1.0).unwrap(), WindowFunction::bump(12.5 * PI).unwrap()] {
        let r = w.eval_radius();
        let n = 200_000;
        let h = 2.0 * r / n as f64;
        // composite Simpson
        let mut acc = w.eval(-r) + w.eval(r);
        for k in 1..n {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * w.eval(-r + k as f64 * h);
        }
        assert_relative_eq!(w.ft(0.0), acc * h / 3.0, max_relative = 1e-8);
    }
}

#[test]
fn mollified_indicator_tail_is_bounded_by_the_mollifier_tail() {
    // psi_{T,eps}(eps + x) = int_x^{x + 2 eps} theta_T <= int_x^inf theta_T
    for t in [2.0, 4.0, 16.0, 64.0] {
        let eps = 0.25;
        let w = WindowFunction::mollified(t, eps).unwrap();
        let theta = WindowFunction::new(WindowKind::Mollifier { t }).unwrap();
        let (a, b) = (3.0 / t, theta.eval_radius());
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut acc = theta.eval(a) + theta.eval(b);
        for k in 1..n {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * theta.eval(a + k as f64 * h);
        }
        let tail = acc * h / 3.0 + theta.tail_mass();
        let v = w.eval(eps + 3.0 / t);
        assert!(v <= tail * (1.0 + 1e-9) + 1e-15, "T = {t}: {v} > {tail}");
        assert_eq!(w.eval(w.eval_radius() * 1.01), 0.0);
    }
}

#[test]
fn sharp_torus_sum_against_brute_force() {
    // ||j_1| - 0.6 |j|| <= 0.25  <=>  |20 |j_1| - 12 |j|| <= 5, squared in integers
    let mut count = 0u64;
    for a in -40i64..=40 {
        for b in -40i64..=40 {
            let k = a * a + b * b;
            if k > 1600 {
                continue;
            }
            let m = 20 * a.abs();
            let lo = (m - 5).max(0);
            let inside = if m < 5 { 144 * k <= (m + 5) * (m + 5) } else { lo * lo <= 144 * k && 144 * k <= (m + 5) * (m + 5) };
            if inside {
                count += 1;
            }
        }
    }
    let engine = LadderEngine::new(ModelPair::torus(2, 1).unwrap(), 40.0).unwrap();
    let lw = LadderWindow::sharp(slope("3/5"), 0.25).unwrap();
    assert_eq!(engine.sharp_ladder_count(&lw, 40.0).unwrap(), count);
    assert_relative_eq!(engine.sharp_ladder_sum(&lw, 40.0).unwrap(), count as f64 / (2.0 * PI), max_relative = 1e-14);
}

#[test]
fn odd_sphere_degrees_add_nothing() {
    let engine = LadderEngine::new(ModelPair::great_sphere(2, 1).unwrap(), 101.0).unwrap();
    let lw = LadderWindow::sharp(slope("1/2"), 0.25).unwrap();
    for n in (1..100).step_by(2) {
        let below = engine.sharp_ladder_sum(&lw, n as f64 - 0.5).unwrap();
        let above = engine.sharp_ladder_sum(&lw, n as f64 + 0.5).unwrap();
        assert_eq!(below, above, "N = {n}");
        assert_eq!(engine.jump_at(&lw, n as f64).unwrap(), 0.0);
    }
}

#[test]
fn large_mollifier_scale_recovers_sharp_sum() {
    let engine = LadderEngine::new(ModelPair::torus(2, 1).unwrap(), 30.0).unwrap();
    let sharp = engine.sharp_ladder_sum(&LadderWindow::sharp(slope("sqrt(1/2)"), 0.25).unwrap(), 30.0).unwrap();
    let lw = LadderWindow::new(slope("sqrt(1/2)"), WindowFunction::mollified(1e4, 0.25).unwrap()).unwrap();
    let fuzzy = engine.fuzzy_ladder_sum(&lw, 30.0).unwrap();
    assert!((fuzzy.value - sharp).abs() <= 1e-6 * sharp + fuzzy.truncation_bound);
}

#[test]
fn sphere_jump_is_the_single_admissible_degree() {
    let engine = LadderEngine::new(ModelPair::great_sphere(2, 1).unwrap(), 400.0).unwrap();
    let lw = LadderWindow::sharp(slope("1/2"), 0.25).unwrap();
    for n in (2..=400u64).step_by(2) {
        let jump = engine.jump_at(&lw, n as f64).unwrap();
        let single = sphere_eigenspace_jump(2, 1, n, n / 2, 0.0).unwrap();
        assert_relative_eq!(jump, single, max_relative = 1e-12);
        if (n / 2) % 2 == 0 {
            assert!(jump > 0.0);
        }
    }
}

#[test]
fn torus_jump_is_a_shell_count() {
    let engine = LadderEngine::new(ModelPair::torus(2, 1).unwrap(), 30.0).unwrap();
    let lw = LadderWindow::sharp(slope("3/5"), 0.6).unwrap();
    for k in 1..=900i64 {
        let mut on_shell = 0;
        let mut pass = 0u64;
        for a in -30i64..=30 {
            for b in -30i64..=30 {
                if a * a + b * b == k {
                    on_shell += 1;
                    // |5 |a| - 3 sqrt k| <= 3  <=>  9 k in [(5|a| - 3)^2, (5|a| + 3)^2]
                    let m = 5 * a.abs();
                    let lo = if m < 3 { 0 } else { (m - 3) * (m - 3) };
                    if lo <= 9 * k && 9 * k <= (m + 3) * (m + 3) {
                        pass += 1;
                    }
                }
            }
        }
        if on_shell > 0 {
            let lam = (k as f64).sqrt();
            assert_eq!(engine.jump_count(&lw, lam).unwrap(), pass, "shell {k}");
            assert_relative_eq!(engine.jump_at(&lw, lam).unwrap(), pass as f64 / (2.0 * PI), max_relative = 1e-15);
        }
    }
}

#[test]
fn even_degree_staircase_jumps_at_integers_only() {
    let engine = LadderEngine::new(ModelPair::great_sphere(2, 1).unwrap(), 200.0).unwrap();
    for n in [40u64, 100, 200] {
        let locs = engine.jump_locations(&slope("1/2"), n as f64).unwrap();
        assert!(!locs.is_empty());
        for g in locs {
            assert_eq!(g, g.round(), "N = {n}, gap {g}");
        }
    }
}

#[test]
fn torus_catalog_closes_on_random_cone_points() {
    let c: f64 = 0.6;
    let w = (1.0 - c * c).sqrt();
    let model = BiangleModel::new(ModelPair::torus(2, 1).unwrap(), c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in -3i32..=3 {
        let s = 2.0 * PI * m as f64 * c / w;
        let t = 2.0 * PI * m as f64 * w;
        for _ in 0..20 {
            let p = model.random_point(&mut rng);
            assert!(model.residual_norm(&p, s, t) < 1e-10);
        }
    }
    let sphere = BiangleModel::new(ModelPair::great_sphere(2, 1).unwrap(), 0.5).unwrap();
    for _ in 0..50 {
        let p = sphere.random_point(&mut rng);
        assert!(sphere.residual_norm(&p, PI, PI / 2.0) < 1e-10);
    }
}

#[test]
fn torus_catalog_for_three_fifths() {
    let set = torus_sojourn_set(2, 1, 0.6, 90.0, 8.0 * PI).unwrap();
    let times = set.times();
    for m in -2i32..=2 {
        let t = 2.0 * PI * m as f64 * 0.8;
        assert!(times.iter().any(|x| (x - t).abs() < 1e-9), "t = {t}");
    }
    let s0 = set.maximal_s_at_t0();
    assert!(s0.iter().any(|s| (s - 12.5 * PI).abs() < 1e-9));
    assert!(s0.iter().any(|s| (s + 12.5 * PI).abs() < 1e-9));
    for s in s0 {
        let k = s / (12.5 * PI);
        assert!((k - k.round()).abs() < 1e-9, "s = {s}");
    }
}

#[test]
fn spheroid_return_time_is_constant() {
    let rep = clairaut_return_time(&RevolutionProfile::Spheroid { a: 1.0, b: 0.6 }, 0.5, 0.5, 50, 1e-4).unwrap();
    assert!(rep.max_deviation_north < 1e-6);
    assert!(rep.max_deviation_south < 1e-6);
    let sphere = clairaut_return_time(&RevolutionProfile::Sphere, 0.0, 0.3, 10, 1e-4).unwrap();
    assert!(sphere.max_deviation_north < 1e-6);
}

#[test]
fn main_term_bases() {
    let c: f64 = 0.6;
    let eps = 0.25;
    let w = WindowFunction::sharp(eps).unwrap();
    let p2 = leading_coeff(2, 1, c, &w, 2.0 * PI, &[0.0]).unwrap();
    assert_relative_eq!(p2.base, eps / (1.0 - c * c).sqrt() * 2.0 * PI, max_relative = 1e-14);
    let p3 = leading_coeff(3, 1, c, &w, 2.0 * PI, &[0.0]).unwrap();
    assert_relative_eq!(p3.base, eps * 2.0 * PI, max_relative = 1e-14);
}
