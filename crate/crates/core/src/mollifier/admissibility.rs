use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Kernel, MollifierFamily, Profile};
use crate::error::{Error, Result};
use crate::flux::Flux;
use crate::geometry::{MetricSymmetry, Point, Spacetime1p1};

/// Sizes of the randomized test set. Points, one-forms and weights are drawn
/// from separate streams of one seed, so enlarging any count keeps the
/// earlier draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestSet {
    pub seed: u64,
    pub n_points: usize,
    pub n_forms: usize,
    pub n_weights: usize,
    pub n_states: usize,
}

impl TestSet {
    pub fn new(seed: u64) -> Self {
        TestSet {
            seed,
            n_points: 128,
            n_forms: 24,
            n_weights: 12,
            n_states: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub delta: f64,
    pub profile: Profile,
    /// Ball grid step.
    pub step: f64,
    pub seed: u64,
    pub n_points: usize,
    /// `max_p |int xi_{p,.} dV - 1|`
    pub unit_mass_residual: f64,
    /// `max_p sup_q xi_{p,q} |E_p| - 1`
    pub supnorm_margin: f64,
    /// Smallest `b` with `int |d_p xi ^ gamma| <= (b / delta) |gamma|` at every tested point.
    pub differential_constant: f64,
    /// Smallest `A` for the symmetry inequality at every tested point.
    pub symmetry_constant: f64,
    pub inadmissible: bool,
}

impl AdmissibilityReport {
    /// `(condition, residual, constant, resolution)` rows.
    pub fn rows(&self) -> Vec<(&'static str, f64, f64, f64)> {
        vec![
            ("unit-mass", self.unit_mass_residual, 0.0, self.step),
            ("sup-norm", self.supnorm_margin, 0.0, self.step),
            ("differential", 0.0, self.differential_constant, self.step),
            ("symmetry", 0.0, self.symmetry_constant, self.step),
        ]
    }
}

const SUPNORM_TOL: f64 = 1e-3;

/// Smooth indicator of the periodic arc of half-width `w` about `c`.
#[derive(Debug, Clone, Copy)]
struct SoftArc {
    c: f64,
    w: f64,
    s: f64,
    period: Option<f64>,
}

impl SoftArc {
    fn value(&self, y: f64) -> f64 {
        let mut d = (y - self.c).abs();
        if let Some(l) = self.period {
            d %= l;
            d = d.min(l - d);
        }
        0.5 * (1.0 + ((self.w - d) / self.s).tanh())
    }
}

/// `phi_{p,q} = chi(t_p) psi(x_p) psi'(x_q)`, or the constant one.
#[derive(Debug, Clone, Copy)]
struct Weight(Option<(SoftArc, SoftArc, SoftArc)>);

impl Weight {
    fn value(&self, p: Point, q: Point) -> f64 {
        match self.0 {
            None => 1.0,
            Some((chi, psi, psi2)) => chi.value(p.t) * psi.value(p.x) * psi2.value(q.x),
        }
    }
}

/// `gamma = g_t dt + g_x dx` with trigonometric coefficients.
#[derive(Debug, Clone, Copy)]
struct TrigForm {
    coef: [[f64; 5]; 2],
}

impl TrigForm {
    fn constant(gt: f64, gx: f64) -> Self {
        TrigForm {
            coef: [[gt, 0.0, 0.0, 0.0, 0.0], [gx, 0.0, 0.0, 0.0, 0.0]],
        }
    }

    fn value(&self, p: Point, leaf: f64) -> [f64; 2] {
        self.coef
            .map(|[a0, a1, m, k, ph]| a0 + a1 * (2.0 * PI * m * p.x / leaf + k * p.t + ph).sin())
    }
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Values of nearby kernels on a common window of cell offsets about `p`.
struct Local {
    half_t: i32,
    half_x: i32,
    xi: Vec<f64>,
    dp: [Vec<f64>; 2],
    dq: [Vec<f64>; 2],
    rho: Vec<f64>,
    inside: Vec<bool>,
}

impl Local {
    fn width(&self) -> usize {
        (2 * self.half_x + 1) as usize
    }

    fn len(&self) -> usize {
        (2 * self.half_t + 1) as usize * self.width()
    }

    fn offset(&self, n: usize) -> (i32, i32) {
        let w = self.width();
        ((n / w) as i32 - self.half_t, (n % w) as i32 - self.half_x)
    }

    fn index(&self, a: i32, b: i32) -> Option<usize> {
        if a.abs() > self.half_t || b.abs() > self.half_x {
            return None;
        }
        Some((a + self.half_t) as usize * self.width() + (b + self.half_x) as usize)
    }

    fn stamp(&self, k: &Kernel, shift: (i32, i32)) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (c, v) in k.ball.members.iter().zip(&k.values) {
            if let Some(n) = self.index(c.di + shift.0, c.dj + shift.1) {
                out[n] = *v;
            }
        }
        out
    }

    /// `center` is the kernel at `p`; `t_side`/`x_side` hold the kernels at
    /// `p + h e` and `p - h e` when available (one-sided differences otherwise).
    fn new(
        st: &Spacetime1p1,
        p: Point,
        h: f64,
        center: &Kernel,
        t_side: [Option<&Kernel>; 2],
        x_side: [&Kernel; 2],
    ) -> Self {
        let mut half = (0, 0);
        for k in [Some(center), t_side[0], t_side[1], Some(x_side[0]), Some(x_side[1])].into_iter().flatten() {
            let e = k.extent();
            half = (half.0.max(e.0), half.1.max(e.1));
        }
        let mut local = Local {
            half_t: half.0 + 2,
            half_x: half.1 + 2,
            xi: Vec::new(),
            dp: [Vec::new(), Vec::new()],
            dq: [Vec::new(), Vec::new()],
            rho: Vec::new(),
            inside: Vec::new(),
        };
        let n = local.len();
        local.xi = local.stamp(center, (0, 0));
        let diff = |plus: Vec<f64>, minus: Vec<f64>, span: f64| -> Vec<f64> {
            plus.iter().zip(&minus).map(|(a, b)| (a - b) / (span * h)).collect()
        };
        let (tp, tp_span) = match t_side[0] {
            Some(k) => (local.stamp(k, (1, 0)), 1.0),
            None => (local.xi.clone(), 0.0),
        };
        let (tm, tm_span) = match t_side[1] {
            Some(k) => (local.stamp(k, (-1, 0)), 1.0),
            None => (local.xi.clone(), 0.0),
        };
        let dp_t = diff(tp, tm, tp_span + tm_span);
        let dp_x = diff(local.stamp(x_side[0], (0, 1)), local.stamp(x_side[1], (0, -1)), 2.0);
        let mut dq_t = vec![0.0; n];
        let mut dq_x = vec![0.0; n];
        let mut rho = vec![0.0; n];
        let mut inside = vec![false; n];
        for i in 0..n {
            let (a, b) = local.offset(i);
            let at = |a: i32, b: i32| local.index(a, b).map_or(0.0, |m| local.xi[m]);
            dq_t[i] = (at(a + 1, b) - at(a - 1, b)) / (2.0 * h);
            dq_x[i] = (at(a, b + 1) - at(a, b - 1)) / (2.0 * h);
            let (t, x) = (p.t + a as f64 * h, p.x + b as f64 * h);
            rho[i] = st.lapse(t, x) * st.scale(t, x);
            inside[i] = t >= st.t_min() - 1e-12 && t <= st.t_max() + 1e-12;
        }
        local.dp = [dp_t, dp_x];
        local.dq = [dq_t, dq_x];
        local.rho = rho;
        local.inside = inside;
        local
    }

    fn point(&self, st: &Spacetime1p1, p: Point, h: f64, i: usize) -> Point {
        let (a, b) = self.offset(i);
        st.point(p.t + a as f64 * h, p.x + b as f64 * h)
    }

    /// `sum_q |d_p xi ^ gamma_p| dV_q` for a form constant in `q`.
    fn differential(&self, g: [f64; 2], h: f64) -> f64 {
        (0..self.len())
            .filter(|&i| self.inside[i])
            .map(|i| (self.dp[0][i] * g[1] - self.dp[1][i] * g[0]).abs() * self.rho[i])
            .sum::<f64>()
            * h
            * h
    }

    /// `sum_q phi [d_p xi ^ gamma_p rho_q + d_q xi ^ gamma_q rho_p]`.
    fn symmetric(&self, gamma: &[[f64; 2]], phi: &[f64], rho_p: f64, h: f64) -> f64 {
        let c = self.index(0, 0).expect("centre in window");
        let gp = gamma[c];
        (0..self.len())
            .filter(|&i| self.inside[i] && phi[i] != 0.0)
            .map(|i| {
                let gq = gamma[i];
                let from_p = (self.dp[0][i] * gp[1] - self.dp[1][i] * gp[0]) * self.rho[i];
                let from_q = (self.dq[0][i] * gq[1] - self.dq[1][i] * gq[0]) * rho_p;
                phi[i] * (from_p + from_q)
            })
            .sum::<f64>()
            * h
            * h
    }
}

/// `[d_u omega_t, d_u omega_x]`.
fn form_du(f: &dyn Flux, st: &Spacetime1p1, u: f64, q: Point) -> [f64; 2] {
    let rho = st.lapse(q.t, q.x) * st.scale(q.t, q.x);
    let [ft, fx] = f.du(u, q.t, q.x);
    [-rho * fx, rho * ft]
}

fn companion_norm(st: &Spacetime1p1, p: Point, g: [f64; 2]) -> f64 {
    let (l, a) = (st.lapse(p.t, p.x), st.scale(p.t, p.x));
    ((g[0] / l).powi(2) + (g[1] / a).powi(2)).sqrt()
}

struct PointResult {
    b: f64,
    a: f64,
}

/// Certifies the four admissibility conditions on a randomized test set.
///
/// Conditions 1 and 2 are measured at the interior test points and at
/// sixteen points on the initial and final leaves. Conditions 3 and 4 are
/// checked pointwise in `p` (a stronger form of the integrated inequality)
/// at interior points whose balls and difference stencils stay inside the
/// time range, so the reported constants are suprema over the test set.
pub fn verify_admissibility(fam: &MollifierFamily, f: &dyn Flux, c0: f64, set: &TestSet) -> Result<AdmissibilityReport> {
    if set.n_points == 0 || set.n_forms == 0 || set.n_weights == 0 || set.n_states == 0 {
        return Err(Error::InvalidArgument("empty admissibility test set".into()));
    }
    let st = fam.spacetime();
    let h = fam.step();
    let delta = fam.delta();
    let leaf = st.leaf_length();
    let (lapse_min, ..) = st.coefficient_bounds();
    let margin = delta / lapse_min + 4.0 * h;
    let (lo, hi) = (st.t_min() + margin, st.t_max() - margin);
    if lo > hi {
        return Err(Error::InvalidArgument(format!(
            "time range [{}, {}] too short for interior balls of radius {delta}",
            st.t_min(),
            st.t_max()
        )));
    }

    let mut rng = stream(set.seed, 0);
    let points: Vec<Point> = (0..set.n_points)
        .map(|_| Point::new(rng.gen_range(lo..=hi), rng.gen_range(0.0..leaf)))
        .collect();
    let mut rng = stream(set.seed, 1);
    let mut forms = vec![TrigForm::constant(0.0, 1.0), TrigForm::constant(1.0, 0.0)];
    while forms.len() < set.n_forms.max(2) {
        let mut coef = [[0.0; 5]; 2];
        for row in coef.iter_mut() {
            *row = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0..3) as f64,
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.0..2.0 * PI),
            ];
        }
        forms.push(TrigForm { coef });
    }
    forms.truncate(set.n_forms.max(2));
    let mut rng = stream(set.seed, 2);
    let span = st.t_max() - st.t_min();
    let mut arc = |period: Option<f64>, len: f64, origin: f64| SoftArc {
        c: origin + rng.gen_range(0.0..len),
        w: rng.gen_range(0.1..0.4) * len,
        s: rng.gen_range(0.02..0.1) * len,
        period,
    };
    let mut weights = vec![Weight(None)];
    while weights.len() < set.n_weights {
        let chi = arc(None, span, st.t_min());
        let psi = arc(Some(leaf), leaf, 0.0);
        let psi2 = arc(Some(leaf), leaf, 0.0);
        weights.push(Weight(Some((chi, psi, psi2))));
    }
    let states: Vec<f64> = if set.n_states == 1 {
        vec![0.0]
    } else {
        (0..set.n_states)
            .map(|i| -c0 + 2.0 * c0 * i as f64 / (set.n_states - 1) as f64)
            .collect()
    };
    let mut rng = stream(set.seed, 3);
    let edge_points: Vec<Point> = (0..16)
        .map(|i| {
            let t = if i % 2 == 0 { st.t_min() } else { st.t_max() };
            Point::new(t, rng.gen_range(0.0..leaf))
        })
        .collect();

    let mut unit_mass: f64 = 0.0;
    let mut supnorm = f64::NEG_INFINITY;
    let conditions_12: Vec<(f64, f64)> = points
        .par_iter()
        .chain(edge_points.par_iter())
        .map(|&p| {
            let k = fam.kernel(p)?;
            Ok(((k.mass() - 1.0).abs(), k.sup() * k.ball.volume - 1.0))
        })
        .collect::<Result<_>>()?;
    for (m, s) in conditions_12 {
        unit_mass = unit_mass.max(m);
        supnorm = supnorm.max(s);
    }

    let per_point: Vec<PointResult> = points
        .par_iter()
        .map(|&p| -> Result<PointResult> {
            let shifted = |dt: f64, dx: f64| fam.kernel(st.point(p.t + dt, p.x + dx));
            let center = fam.kernel(p)?;
            let (tp, tm) = (shifted(h, 0.0)?, shifted(-h, 0.0)?);
            let (xp, xm) = (shifted(0.0, h)?, shifted(0.0, -h)?);
            let local = Local::new(st, p, h, &center, [Some(&tp), Some(&tm)], [&xp, &xm]);
            let rho_p = st.lapse(p.t, p.x) * st.scale(p.t, p.x);

            let mut b: f64 = 0.0;
            for form in &forms {
                let g = form.value(p, leaf);
                let norm = companion_norm(st, p, g);
                if norm > 1e-12 {
                    b = b.max(delta * local.differential(g, h) / (norm * rho_p));
                }
            }

            let positions: Vec<Point> = (0..local.len()).map(|i| local.point(st, p, h, i)).collect();
            let gammas: Vec<Vec<[f64; 2]>> = states
                .iter()
                .map(|&u| positions.iter().map(|&q| form_du(f, st, u, q)).collect())
                .collect();
            let mut a: f64 = 0.0;
            for w in &weights {
                let phi: Vec<f64> = positions.iter().map(|&q| w.value(p, q)).collect();
                let average: f64 = center
                    .ball
                    .members
                    .iter()
                    .map(|c| {
                        let i = local.index(c.di, c.dj).expect("member in window");
                        phi[i] * c.weight
                    })
                    .sum::<f64>()
                    / center.ball.volume;
                let rhs = rho_p * average;
                if rhs <= 1e-300 {
                    continue;
                }
                for gamma in &gammas {
                    a = a.max(local.symmetric(gamma, &phi, rho_p, h) / rhs);
                }
            }
            Ok(PointResult { b, a })
        })
        .collect::<Result<_>>()?;
    let differential_constant = per_point.iter().map(|r| r.b).fold(0.0, f64::max);
    let symmetry_constant = per_point.iter().map(|r| r.a).fold(0.0, f64::max);

    Ok(AdmissibilityReport {
        delta,
        profile: fam.profile(),
        step: h,
        seed: set.seed,
        n_points: set.n_points,
        unit_mass_residual: unit_mass,
        supnorm_margin: supnorm,
        differential_constant,
        symmetry_constant,
        inadmissible: supnorm > SUPNORM_TOL,
    })
}

/// Full double sum of the symmetry condition's left side,
/// `int int phi_{p,q} (d_p xi ^ gamma_p ^ dV_q + d_q xi ^ gamma_q ^ dV_p)`
/// with `gamma = d_u omega(u)`, over the lattice of ball-grid nodes of the
/// whole strip (trapezoid weights in time, one-sided differences on the
/// first and last leaves).
pub fn symmetry_double_sum(
    fam: &MollifierFamily,
    f: &dyn Flux,
    u: f64,
    phi: &(dyn Fn(Point, Point) -> f64 + Sync),
) -> Result<f64> {
    let st = fam.spacetime();
    let h = fam.step();
    let nx = (st.leaf_length() / h).round() as i64;
    let nt = ((st.t_max() - st.t_min()) / h).round() as i64;
    if (nx as f64 * h - st.leaf_length()).abs() > 1e-9 * st.leaf_length()
        || (nt as f64 * h - (st.t_max() - st.t_min())).abs() > 1e-9 * (st.t_max() - st.t_min())
    {
        return Err(Error::InvalidArgument(format!(
            "ball grid step {h} must divide the leaf length and the time range"
        )));
    }
    let node = |i: i64, j: i64| Point::new(st.t_min() + i as f64 * h, (j.rem_euclid(nx)) as f64 * h);
    let shared = st.metric().symmetry() != MetricSymmetry::General;
    let row_kernels: HashMap<i64, Kernel> = if shared {
        (0..=nt)
            .into_par_iter()
            .map(|i| fam.kernel(node(i, 0)).map(|k| (i, k)))
            .collect::<Result<_>>()?
    } else {
        HashMap::new()
    };

    let rows: Vec<f64> = (0..=nt)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let w_t = if i == 0 || i == nt { 0.5 } else { 1.0 };
            let mut row = 0.0;
            for j in 0..nx {
                let p = node(i, j);
                let owned;
                let (center, tp, tm, xp, xm) = if shared {
                    let k = &row_kernels[&i];
                    (k, row_kernels.get(&(i + 1)), row_kernels.get(&(i - 1)), k, k)
                } else {
                    owned = (
                        fam.kernel(p)?,
                        if i < nt { Some(fam.kernel(node(i + 1, j))?) } else { None },
                        if i > 0 { Some(fam.kernel(node(i - 1, j))?) } else { None },
                        fam.kernel(node(i, j + 1))?,
                        fam.kernel(node(i, j - 1))?,
                    );
                    (&owned.0, owned.1.as_ref(), owned.2.as_ref(), &owned.3, &owned.4)
                };
                let local = Local::new(st, p, h, center, [tp, tm], [xp, xm]);
                let positions: Vec<Point> = (0..local.len()).map(|n| local.point(st, p, h, n)).collect();
                let gamma: Vec<[f64; 2]> = positions.iter().map(|&q| form_du(f, st, u, q)).collect();
                let weights: Vec<f64> = positions.iter().map(|&q| phi(p, q)).collect();
                let rho_p = st.lapse(p.t, p.x) * st.scale(p.t, p.x);
                row += local.symmetric(&gamma, &weights, rho_p, h);
            }
            Ok(w_t * row * h * h)
        })
        .collect::<Result<_>>()?;
    Ok(rows.iter().sum())
}
