use std::f64::consts::{E, PI};
use std::sync::Arc;

use super::*;
use crate::flux::{form_from_vector, lambda_constants, Flux, StateFn, Term, TermFlux};
use crate::geometry::{geodesic_ball_brute, Flrw, LeafMesh, Point, Warped};
use crate::solver::{
    evolve_diffusion, evolve_hyperbolic, extract_error_measures, ErrorFamily, FnField, InitialCondition,
    LinearViscosity, SchemeConfig, SliceField, SpacetimeField, ZeroViscosity,
};

fn mink() -> Spacetime1p1 {
    Spacetime1p1::minkowski(1.0, 1.0)
}

fn warped() -> Spacetime1p1 {
    Spacetime1p1::new(0.0, 1.0, 1.0, Arc::new(Warped { amp: 0.2, leaf_length: 1.0 })).unwrap()
}

fn flrw() -> Spacetime1p1 {
    Spacetime1p1::new(0.0, 1.0, 1.0, Arc::new(Flrw::default())).unwrap()
}

/// `f = (u, 0)`: not geometry compatible on expanding or warped leaves.
fn transport_free() -> TermFlux {
    TermFlux::new("pure-time", vec![Term::plain(StateFn::Linear(1.0))], vec![])
}

fn fake_trajectory(times: &[f64], n: usize, v: impl Fn(f64, f64) -> f64) -> Trajectory {
    let mesh = LeafMesh::new(n, 1.0).unwrap();
    let slices: Vec<SliceField> = times
        .iter()
        .map(|&t| SliceField::new(t, mesh, mesh.centers().map(|x| v(t, x)).collect()).unwrap())
        .collect();
    Trajectory {
        n_steps: slices.len() - 1,
        slices,
        mesh,
        dt: times.get(1).map_or(0.0, |t1| t1 - times[0]),
        max_courant: 0.0,
        flux_name: "burgers".into(),
        viscosity_name: None,
        clipped: 0,
        diffusion_substeps: 0,
    }
}

fn grid8() -> Vec<f64> {
    (0..8).map(|i| 0.1 * i as f64 + 0.1).collect()
}

/// Direct double sum with fully settled balls about every cell.
fn brute_ball_average(field: &dyn SpacetimeField, st: &Spacetime1p1, t: f64, mesh: &LeafMesh, delta: f64, h: f64) -> f64 {
    let mut total = 0.0;
    for j in 0..mesh.n_cells() {
        let x = mesh.center(j);
        let ball = geodesic_ball_brute(st, Point::new(t, x), delta, h).unwrap();
        let vp = field.value_at(t, x);
        let mut s = 0.0;
        for c in &ball.members {
            let vq = field.value_at(t + c.di as f64 * h, x + c.dj as f64 * h);
            s += (vp - vq).abs() * c.weight;
        }
        total += st.scale(t, x) * mesh.dx() * s / ball.volume;
    }
    total
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn constant_field_has_no_modulus() {
    let v = fake_trajectory(&grid8(), 8, |_, _| 0.3);
    let lambdas = LambdaConstants { l0: 1.0, l1: 0.5, l2: 0.0, l3: 0.2 };
    let e_v = modulus_term_ev(&v, &mink(), &lambdas, 0.1, BallQuadrature::default(), BallSearch::Cached).unwrap();
    assert_eq!(e_v, 0.0);
}

#[test]
fn ball_average_matches_brute_force_on_8x8() {
    let quad = BallQuadrature::default();
    let jump = |_t: f64, x: f64| if x < 0.5 { 1.0 } else { 0.0 };
    for st in [mink(), warped(), flrw()] {
        let v = fake_trajectory(&grid8(), 8, |t, x| jump(t, x) + 0.3 * (7.0 * t).sin());
        for &t in &[0.3, 0.5] {
            let fast = ball_average_integral(&v, &st, t, &v.mesh, 0.15, quad, BallSearch::Cached).unwrap();
            let oracle = brute_ball_average(&v, &st, t, &v.mesh, 0.15, quad.step(0.15));
            assert!(fast > 0.0);
            assert!(rel(fast, oracle) <= 1e-12, "{}: {fast} vs {oracle}", st.metric().name());
        }
    }
}

#[test]
fn single_jump_ball_average_is_linear_in_delta() {
    // Two unit jumps of a time-independent step; each contributes
    // int_{disk} max(y, 0) dA / (pi delta^2) * 2 = 4 delta / (3 pi).
    let st = mink();
    let mesh = LeafMesh::new(400, 1.0).unwrap();
    let v = FnField(|_t: f64, x: f64| if x.rem_euclid(1.0) < 0.5 { 1.0 } else { 0.0 });
    let quad = BallQuadrature { resolution: 32, max_times: 33 };
    for delta in [0.05, 0.1] {
        let got = ball_average_integral(&v, &st, 0.5, &mesh, delta, quad, BallSearch::Cached).unwrap();
        let expected = 8.0 * delta / (3.0 * PI);
        assert!(rel(got, expected) <= 0.03, "delta {delta}: {got} vs {expected}");
    }
}

#[test]
fn lipschitz_field_obeys_mean_value_bound() {
    let st = mink();
    let v = FnField(|_t: f64, x: f64| (2.0 * PI * x).sin() / (2.0 * PI));
    for n in [64, 128, 256] {
        let mesh = LeafMesh::new(n, 1.0).unwrap();
        for delta in [0.05, 0.1, 0.2] {
            let got = ball_average_integral(&v, &st, 0.5, &mesh, delta, BallQuadrature::default(), BallSearch::Cached)
                .unwrap();
            assert!(got <= 1.1 * delta, "n {n} delta {delta}: {got}");
        }
    }
}

#[test]
fn inhomogeneity_term_examples() {
    let zero = LambdaConstants { l0: 1.0, l1: 1.0, l2: 0.0, l3: 1.0 };
    assert_eq!(inhomogeneity_term_ef(&flrw(), &zero, 0.0, 1.0, 0.1), 0.0);
    let two = LambdaConstants { l2: 2.0, ..zero };
    assert!((inhomogeneity_term_ef(&mink(), &two, 0.0, 1.0, 0.1) - 0.2).abs() < 1e-14);
    let one = LambdaConstants { l2: 1.0, ..zero };
    assert!(rel(inhomogeneity_term_ef(&flrw(), &one, 0.0, 1.0, 0.1), E * 0.1) < 1e-12);
}

fn measures(times: Vec<f64>, alpha_h: Vec<Vec<f64>>, alpha_l: Vec<Vec<f64>>) -> ErrorMeasures {
    let zeros = vec![vec![0.0; alpha_h[0].len()]; times.len()];
    ErrorMeasures {
        times,
        alpha_h,
        alpha_k: zeros,
        alpha_l,
        alpha_a: 1.0,
        q: 0.0,
        lipschitz: 0.0,
    }
}

#[test]
fn residual_term_examples() {
    let times = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let zero = vec![vec![0.0; 4]; 5];
    assert_eq!(residual_terms(&measures(times.clone(), zero.clone(), zero.clone()), 0.1), (0.0, 0.0, 0.0));

    // alpha_L = Q |u| with u = 1 on the unit leaf: each slice carries mass Q
    let q = 0.01;
    let m = measures(times.clone(), zero.clone(), vec![vec![q / 4.0; 4]; 5]);
    let (_, _, e_l) = residual_terms(&m, 0.1);
    assert!(rel(e_l, q / 0.01) < 1e-12);

    // one jump of height 1: alpha_H = eps |Du| has slice mass eps U = eps
    let eps = 0.02;
    let delta = 0.05;
    let m = measures(times, vec![vec![0.0, eps / 2.0, eps / 2.0, 0.0]; 5], zero);
    let (e_h, e_k, _) = residual_terms(&m, delta);
    assert!(rel(e_h, 2.0 * eps + eps / delta) < 1e-12);
    assert_eq!(e_k, 0.0);
}

/// `sum_p w_p / |E_p| sum_q |v_q| |rho_t(p) rho(q) - rho_t(q) rho(p)| h^2` for
/// `f = (u, 0)`, from the metric coefficients alone.
fn r_omega_reduced(v: &Trajectory, st: &Spacetime1p1, delta: f64, h: f64) -> f64 {
    let rho = |p: Point| st.lapse(p.t, p.x) * st.scale(p.t, p.x);
    let rho_t = |p: Point| {
        let m = st.jet(p);
        m.lapse_t * m.scale + m.lapse * m.scale_t
    };
    let times = v.times();
    let n = times.len();
    let mut total = 0.0;
    for (k, &t) in times.iter().enumerate() {
        let w = 0.5 * (if k > 0 { t - times[k - 1] } else { 0.0 } + if k + 1 < n { times[k + 1] - t } else { 0.0 });
        for j in 0..v.mesh.n_cells() {
            let p = Point::new(t, v.mesh.center(j));
            let ball = geodesic_ball_brute(st, p, delta, h).unwrap();
            let mut s = 0.0;
            for c in &ball.members {
                let q = st.point(t + c.di as f64 * h, p.x + c.dj as f64 * h);
                s += v.value_at(q.t, q.x).abs() * (rho_t(p) * rho(q) - rho_t(q) * rho(p)).abs() * h * h;
            }
            total += w * v.mesh.dx() * s / ball.volume;
        }
    }
    total
}

#[test]
fn r_omega_matches_reduced_integral() {
    let quad = BallQuadrature::default();
    let delta = 0.15;
    let v = fake_trajectory(&grid8(), 8, |t, x| (2.0 * PI * x).sin() + 0.5 * t);
    for st in [warped(), flrw()] {
        let form = form_from_vector(Arc::new(transport_free()), &st);
        let fast = forms_r_omega(&v, &form, &st, delta, quad, BallSearch::Cached).unwrap();
        let brute = forms_r_omega(&v, &form, &st, delta, quad, BallSearch::Brute).unwrap();
        let reduced = r_omega_reduced(&v, &st, delta, quad.step(delta));
        let scale = fast.abs().max(1e-3);
        assert!((fast - brute).abs() <= 1e-12 * scale, "{fast} vs {brute}");
        assert!((fast - reduced).abs() <= 1e-10 * scale, "{fast} vs {reduced}");
    }
    // on the expanding leaves rho_t = rho, so the integrand cancels
    let st = flrw();
    let form = form_from_vector(Arc::new(transport_free()), &st);
    assert!(forms_r_omega(&v, &form, &st, delta, quad, BallSearch::Cached).unwrap() < 1e-12);
    let st = warped();
    let form = form_from_vector(Arc::new(transport_free()), &st);
    assert!(forms_r_omega(&v, &form, &st, delta, quad, BallSearch::Cached).unwrap() > 1e-3);
}

#[test]
fn compatible_presets_have_no_inhomogeneity() {
    let quad = BallQuadrature::default();
    let v = fake_trajectory(&grid8(), 8, |t, x| (2.0 * PI * x).sin() * (1.0 - t));
    let cases: Vec<(Spacetime1p1, TermFlux)> =
        vec![(mink(), TermFlux::burgers()), (flrw(), TermFlux::flrw_compatible(1.0))];
    for (st, f) in cases {
        let form = form_from_vector(Arc::new(f.clone()), &st);
        assert_eq!(forms_r_omega(&v, &form, &st, 0.15, quad, BallSearch::Cached).unwrap(), 0.0, "{}", f.name());
        let lambdas = lambda_constants(&f, &st, 1.0, crate::flux::Lattice::fixed(16, 9, 16));
        assert!(lambdas.l2 < 1e-12);
        assert!(inhomogeneity_term_ef(&st, &lambdas, 0.0, 1.0, 0.1) < 1e-12);
    }
}

#[test]
fn r_v_vanishes_for_constant_data_and_needs_a() {
    let st = mink();
    let form = form_from_vector(Arc::new(TermFlux::burgers()), &st);
    let v = fake_trajectory(&grid8(), 8, |_, _| 0.4);
    let consts = FormConstants { c_high: 1.0, a: Some(2.0), b: Some(2.0), c0: 1.0 };
    let quad = BallQuadrature::default();
    assert_eq!(forms_r_v(&v, &form, &st, 0.1, &consts, quad, BallSearch::Cached).unwrap(), 0.0);
    let missing = FormConstants { a: None, ..consts };
    assert!(matches!(
        forms_r_v(&v, &form, &st, 0.1, &missing, quad, BallSearch::Cached),
        Err(Error::Missing(_))
    ));
    let m = measures(v.times(), vec![vec![0.0; 8]; 8], vec![vec![0.0; 8]; 8]);
    let no_b = FormConstants { b: None, ..consts };
    assert!(matches!(forms_r_terms(&v, &form, &st, &m, 0.1, &no_b, quad), Err(Error::Missing(_))));
}

#[test]
fn r_v_fast_matches_brute_on_warped() {
    let st = warped();
    let form = form_from_vector(Arc::new(transport_free()), &st);
    let v = fake_trajectory(&grid8(), 8, |t, x| if x < 0.5 { 1.0 - t } else { 0.0 });
    let consts = FormConstants { c_high: 1.0, a: Some(3.0), b: Some(2.0), c0: 1.0 };
    let quad = BallQuadrature::default();
    let fast = forms_r_v(&v, &form, &st, 0.15, &consts, quad, BallSearch::Cached).unwrap();
    let brute = forms_r_v(&v, &form, &st, 0.15, &consts, quad, BallSearch::Brute).unwrap();
    assert!(fast > 0.0);
    assert!(rel(fast, brute) <= 1e-12);
}

fn two_term(c1: f64, c2: f64, power: i32, deltas: &[f64]) -> DeltaTable {
    DeltaTable::new(deltas.to_vec())
        .with_term("linear", deltas.iter().map(|d| c1 * d).collect())
        .with_term("inverse", deltas.iter().map(|d| c2 / d.powi(power)).collect())
}

#[test]
fn optimizer_recovers_am_gm_minimiser() {
    let deltas = DeltaTable::log_grid(1e-3, 1.0, 64);
    for (c1, c2) in [(1.0, 1e-4), (3.0, 2e-3), (0.5, 1e-5)] {
        let opt = optimize_delta(&two_term(c1, c2, 1, &deltas)).unwrap();
        let exact = (c2 / c1).sqrt();
        assert!(rel(opt.delta_star, exact) <= 0.01, "{} vs {exact}", opt.delta_star);
        assert!(rel(opt.min_total, 2.0 * (c1 * c2).sqrt()) <= 0.01);
        assert!(!opt.boundary && opt.pathology.is_none());
        let slopes: Vec<f64> = opt.slopes.iter().map(|s| s.1.unwrap()).collect();
        assert!((slopes[0] - 1.0).abs() < 1e-12 && (slopes[1] + 1.0).abs() < 1e-12);
    }
}

#[test]
fn optimizer_inverse_square_shape() {
    let deltas = DeltaTable::log_grid(1e-3, 1.0, 64);
    let shape = 3.0 / 2f64.powf(2.0 / 3.0);
    for (c1, c2) in [(1.0, 1e-6), (4.0, 1e-6), (1.0, 8e-6), (0.3, 2e-5)] {
        let opt = optimize_delta(&two_term(c1, c2, 2, &deltas)).unwrap();
        let ratio = opt.min_total / (c2.cbrt() * c1.powf(2.0 / 3.0));
        assert!(rel(ratio, shape) <= 0.05, "{ratio} vs {shape}");
    }
}

#[test]
fn optimizer_flags_degenerate_tables() {
    let deltas = DeltaTable::log_grid(1e-3, 1.0, 16);
    let single = DeltaTable::new(deltas.clone()).with_term("linear", deltas.iter().map(|d| 2.0 * d).collect());
    let opt = optimize_delta(&single).unwrap();
    assert!(opt.boundary);
    assert_eq!(opt.delta_star, 1e-3);

    let wavy: Vec<f64> = deltas.iter().map(|d| 2.0 + (2.5 * d.ln()).sin()).collect();
    assert!(optimize_delta(&DeltaTable::new(deltas.clone()).with_term("wavy", wavy)).unwrap().pathology.is_some());
    let mut bad: Vec<f64> = deltas.iter().map(|d| 1.0 / d).collect();
    bad[3] = f64::NAN;
    assert!(optimize_delta(&DeltaTable::new(deltas.clone()).with_term("nan", bad)).unwrap().pathology.is_some());

    assert!(optimize_delta(&two_term(1.0, 1.0, 1, &deltas[..4])).is_err());
    assert!(optimize_delta(&two_term(1.0, 1.0, 1, &DeltaTable::log_grid(0.01, 0.5, 8))).is_err());
}

#[test]
fn calibration_rounds_up() {
    assert_eq!(round_up_one_figure(0.0123), 0.02);
    assert_eq!(round_up_one_figure(0.02), 0.02);
    assert_eq!(round_up_one_figure(7.2), 8.0);
    assert_eq!(round_up_one_figure(0.95), 1.0);
    assert_eq!(calibrate_constant(&[(1.0, 100.0), (3.2, 100.0)]).unwrap(), 0.04);
    assert!(calibrate_constant(&[]).is_err());
}

fn run(st: &Spacetime1p1, f: &dyn Flux, ic: &str, n: usize) -> Trajectory {
    let mesh = LeafMesh::for_spacetime(st, n).unwrap();
    let u0 = SliceField::from_initial(st.t_min(), mesh, &InitialCondition::parse(ic).unwrap());
    evolve_hyperbolic(st, f, &u0, st.t_max(), &SchemeConfig::new(n, 1.0)).unwrap()
}

#[test]
fn contraction_examples() {
    let st = mink();
    let f = TermFlux::burgers();
    let u = run(&st, &f, "sine(0.5)", 128);
    let same = contraction_check(&u, &u, &f, &st).unwrap();
    assert!(same.pass && same.distances.iter().all(|d| *d == 0.0));

    let v = run(&st, &f, "square(0.8,0.4)", 128);
    let r = contraction_check(&u, &v, &f, &st).unwrap();
    assert!(r.pass, "max increase {}", r.max_increase);
    assert!(r.distances.last().unwrap() < &r.distances[0]);

    let fl = flrw();
    let g = TermFlux::flrw_compatible(1.0);
    let r = contraction_check(&run(&fl, &g, "square(0.8,0.4)", 128), &run(&fl, &g, "sine(0.5)", 128), &g, &fl).unwrap();
    assert!(r.pass, "max increase {}", r.max_increase);

    let short = run(&st, &f, "sine(0.5)", 64);
    assert!(matches!(contraction_check(&u, &short, &f, &st), Err(Error::Mismatch(_))));
}

/// Exact periodic Burgers solution from `riemann(1, 0)` for `t <= 1`: a fan
/// from `x = 0` and a shock from `x = 1/2` with speed 1/2.
fn burgers_step(t: f64, x: f64) -> f64 {
    let x = x.rem_euclid(1.0);
    if t > 0.0 && x < t {
        x / t
    } else if x < 0.5 + 0.5 * t {
        1.0
    } else {
        0.0
    }
}

#[test]
fn bv_modulus_examples() {
    let st = mink();
    let f = TermFlux::burgers();
    let mesh = LeafMesh::new(256, 1.0).unwrap();
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let quad = BallQuadrature::default();

    let flat = bv_modulus_check(&FnField(|_, _| 0.3), 0.5, &mesh, &f, &st, 1.0, &deltas, quad).unwrap();
    assert!(flat.ratios.iter().all(|r| *r == 0.0) && flat.pass);

    let step = bv_modulus_check(&FnField(burgers_step), 0.5, &mesh, &f, &st, 1.0, &deltas, quad).unwrap();
    assert!(step.pass, "{:?}", step.ratios);
    assert_eq!(step.div_l1, 0.0);
    assert!(rel(step.bracket, (1.0 + step.lipschitz / step.beta) * step.tv) < 1e-15);

    // general clause: v = v0(x) e^{-t} solves d_t(a v) = 0 for f = (u, 0)
    let fl = flrw();
    let g = transport_free();
    let v = FnField(|t: f64, x: f64| 0.8 * (2.0 * PI * x).sin() * (-t).exp());
    let r = bv_modulus_check(&v, 0.5, &mesh, &g, &fl, 1.0, &deltas, quad).unwrap();
    assert!(r.div_l1 > 0.0);
    assert!(r.pass, "{:?}", r.ratios);
}

#[test]
fn identical_fluxes_have_no_comparison_error() {
    let st = mink();
    let f = TermFlux::burgers();
    let u = run(&st, &f, "sine(0.5)", 64);
    let v = run(&st, &f, "sine(0.5)", 64);
    let r = flux_comparison_bounds(&u, &v, &f, &f, &st, 1.0, 1.0, 2.0, C_CALIBRATED).unwrap();
    assert!(r.lhs <= 0.0);
    assert_eq!((r.rhs_ap20, r.rhs_ap30, r.q), (0.0, 0.0, 0.0));
    assert!(r.verdict_ap20 && r.verdict_ap30);
}

#[test]
fn perturbed_flux_comparison_is_positive() {
    let st = mink();
    let f = TermFlux::burgers();
    let g = TermFlux::burgers().with_spatial_term(Term::plain(StateFn::Linear(0.04)), "burgers+eta");
    let v = run(&st, &f, "sine(0.5)", 128);
    let u = run(&st, &g, "sine(0.5)", 128);
    let r = flux_comparison_bounds(&u, &v, &f, &g, &st, 1.0, 1.0, 2.0, C_CALIBRATED).unwrap();
    assert!(r.lhs > 0.0 && r.rhs_ap20 > 0.0 && r.rhs_ap30 > 0.0);
    assert!((r.q - 0.04).abs() < 1e-12);
    assert!(r.bv_warning.is_none());
    assert!(flux_comparison_bounds(&v, &u, &f, &g, &st, 1.0, 1.0, 2.0, 1.0).is_err());
}

#[test]
fn diffusion_examples() {
    let st = mink();
    let f = TermFlux::burgers();
    let mesh = LeafMesh::new(128, 1.0).unwrap();
    let u0 = SliceField::from_initial(0.0, mesh, &InitialCondition::Sine { amp: 0.5 });
    let cfg = SchemeConfig::new(128, 1.0);
    let v = evolve_hyperbolic(&st, &f, &u0, 1.0, &cfg).unwrap();
    let u = evolve_diffusion(&st, &f, &ZeroViscosity, &u0, 1.0, &cfg).unwrap();
    let p = diffusion_point(&u, &v, &ZeroViscosity, &f, &st, 1.0).unwrap();
    assert!(p.lhs <= 0.0 && p.nd20() == 0.0);

    let points: Vec<DiffusionPoint> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| {
            let phi = LinearViscosity { eps };
            let u = evolve_diffusion(&st, &f, &phi, &u0, 1.0, &cfg).unwrap();
            diffusion_point(&u, &v, &phi, &f, &st, 1.0).unwrap()
        })
        .collect();
    let report = diffusion_bounds(&points, C_CALIBRATED).unwrap();
    assert!(report.fit.as_ref().unwrap().slope > 0.0);
    assert!(points.iter().all(|p| p.nd20() > 0.0 && p.nd30() > 0.0));
    assert!(diffusion_bounds(&points[..2], 1.0).is_err());
}

#[test]
fn budget_terms_are_monotone_in_delta() {
    let st = mink();
    let f = TermFlux::burgers();
    let phi = LinearViscosity { eps: 1e-3 };
    let mesh = LeafMesh::new(128, 1.0).unwrap();
    let u0 = SliceField::from_initial(0.0, mesh, &InitialCondition::Sine { amp: 0.5 });
    let cfg = SchemeConfig::new(128, 1.0).with_stride(8);
    let v = evolve_hyperbolic(&st, &f, &u0, 1.0, &cfg).unwrap();
    let u = evolve_diffusion(&st, &f, &phi, &u0, 1.0, &cfg).unwrap();
    let m = extract_error_measures(ErrorFamily::Viscosity(&phi), &u, &f, &st, 1.0).unwrap();
    let form = form_from_vector(Arc::new(f.clone()), &st);
    let inputs = BudgetInputs {
        st: &st,
        form: &form,
        v: &v,
        measures: &m,
        lambdas: lambda_constants(&f, &st, 1.0, crate::flux::Lattice::fixed(16, 9, 16)),
        c_low: 1.0,
        c_high: 1.0,
        admissibility: Some((0.0, 1.3)),
        c0: 1.0,
        quadrature: BallQuadrature { resolution: 8, max_times: 9 },
    };
    let terms: Vec<TheoremTerms> = [0.02, 0.05, 0.1, 0.2].iter().map(|&d| inputs.theorem_terms(d).unwrap()).collect();
    for w in terms.windows(2) {
        assert!(w[1].e_v >= w[0].e_v);
        assert!(w[1].e_h <= w[0].e_h && w[1].e_l <= w[0].e_l);
    }
    assert!(terms.iter().all(|t| t.values().iter().all(|v| *v >= 0.0)));
    assert_eq!(terms[0].e_f, 0.0);
    assert_eq!(terms[0].e_k, 0.0);
    let b = inputs.budget(0.1).unwrap();
    assert_eq!(b.r_omega, 0.0);
    assert!(b.r_v > 0.0 && b.r_alpha > 0.0);
    assert!((b.total_bound(2.0) - 2.0 * b.theorem_terms().sum()).abs() < 1e-15);
    let none = BudgetInputs { admissibility: None, ..inputs };
    assert!(matches!(none.budget(0.1), Err(Error::Missing(_))));
}
