use rayon::prelude::*;

use super::BallQuadrature;
use crate::error::{Error, Result};
use crate::flux::{FormFlux, LambdaConstants};
use crate::geometry::{geodesic_ball, geodesic_ball_brute, BallCell, GeodesicBall, LeafMesh, MetricSymmetry, Point, Spacetime1p1};
use crate::solver::{ErrorMeasures, SpacetimeField, Trajectory};

/// How balls are obtained for each leaf cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BallSearch {
    /// One ball per leaf when the metric has a translation symmetry,
    /// early-stopping searches otherwise.
    #[default]
    Cached,
    /// A fully settled search about every cell.
    Brute,
}

/// Integrand of a double sum over leaf cells `p` and ball cells `q`:
/// `(p, v_p, q, v_q, cell) -> value`.
type Inner<'a> = dyn Fn(Point, f64, Point, f64, &BallCell) -> f64 + Sync + 'a;

/// `sum_j outer(x_j) (1 / |B_p|) sum_{q in B_p} inner(p, v_p, q, v_q)` over
/// the cells `p = (t, x_j)` of `mesh`.
#[allow(clippy::too_many_arguments)]
fn leaf_double_sum(
    st: &Spacetime1p1,
    field: &dyn SpacetimeField,
    t: f64,
    mesh: &LeafMesh,
    delta: f64,
    h: f64,
    search: BallSearch,
    outer: &(dyn Fn(f64) -> f64 + Sync),
    inner: &Inner<'_>,
) -> Result<f64> {
    let shared = match (search, st.metric().symmetry()) {
        (BallSearch::Cached, MetricSymmetry::Homogeneous | MetricSymmetry::LeafInvariant) => {
            Some(geodesic_ball(st, Point::new(t, 0.0), delta, h)?)
        }
        _ => None,
    };
    let per_cell = (0..mesh.n_cells())
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let x = mesh.center(j);
            let p = Point::new(t, x);
            let owned: GeodesicBall;
            let ball = match &shared {
                Some(b) => b,
                None => {
                    owned = match search {
                        BallSearch::Cached => geodesic_ball(st, p, delta, h)?,
                        BallSearch::Brute => geodesic_ball_brute(st, p, delta, h)?,
                    };
                    &owned
                }
            };
            let vp = field.value_at(t, x);
            let mut s = 0.0;
            for c in &ball.members {
                let q = Point::new(t + c.di as f64 * h, x + c.dj as f64 * h);
                s += inner(p, vp, q, field.value_at(q.t, q.x), c);
            }
            Ok(outer(x) * s / ball.volume)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_cell.iter().sum())
}

/// `int_{H_t} avg_{B_p(delta)} |v_p - v_q| dV_g dV_{g^t}` with the leaf
/// integral taken over the cells of `mesh`.
pub fn ball_average_integral(
    field: &dyn SpacetimeField,
    st: &Spacetime1p1,
    t: f64,
    mesh: &LeafMesh,
    delta: f64,
    quad: BallQuadrature,
    search: BallSearch,
) -> Result<f64> {
    st.check_time(t)?;
    let dx = mesh.dx();
    leaf_double_sum(
        st,
        field,
        t,
        mesh,
        delta,
        quad.step(delta),
        search,
        &|x| st.scale(t, x) * dx,
        &|_, vp, _, vq, c| (vp - vq).abs() * c.weight,
    )
}

/// Indices of at most `max` slices, evenly spread and always including the
/// first and the last.
pub fn sampled_slices(n: usize, max: usize) -> Vec<usize> {
    if n <= max || max < 2 {
        return (0..n).collect();
    }
    let mut out: Vec<usize> = (0..max)
        .map(|i| ((i as f64) * (n - 1) as f64 / (max - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

/// Trapezoid weights of increasing times.
fn trapezoid(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|i| {
            let l = if i > 0 { times[i] - times[i - 1] } else { 0.0 };
            let r = if i + 1 < n { times[i + 1] - times[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

fn horizon(v: &Trajectory) -> f64 {
    v.last().t - v.first().t
}

/// `E_v = (T L1 + T L3 + L0) sup_t int_{H_t} avg_{B_p} |v_p - v_q|`, the
/// supremum over the sampled slice times of `v`.
pub fn modulus_term_ev(
    v: &Trajectory,
    st: &Spacetime1p1,
    lambdas: &LambdaConstants,
    delta: f64,
    quad: BallQuadrature,
    search: BallSearch,
) -> Result<f64> {
    let t_len = horizon(v);
    let factor = t_len * lambdas.l1 + t_len * lambdas.l3 + lambdas.l0;
    let mut sup = 0.0f64;
    for k in sampled_slices(v.slices.len(), quad.max_times) {
        let t = v.slices[k].t;
        sup = sup.max(ball_average_integral(v, st, t, &v.mesh, delta, quad, search)?);
    }
    Ok(factor * sup)
}

/// `E_f = T sup_t |H_t| delta L2` over `[t0, t0 + T]` (33 sampled times).
pub fn inhomogeneity_term_ef(st: &Spacetime1p1, lambdas: &LambdaConstants, t0: f64, t_len: f64, delta: f64) -> f64 {
    if lambdas.l2 == 0.0 {
        return 0.0;
    }
    let sup_length = (0..33)
        .map(|i| st.leaf_length_at(t0 + t_len * i as f64 / 32.0))
        .fold(0.0, f64::max);
    t_len * sup_length * delta * lambdas.l2
}

/// `(E_H, E_K, E_L)`:
/// `E_H = int_{H_0 u H_T} alpha_H + (1/delta) int int alpha_H`,
/// `E_K = int int alpha_K`, `E_L = (1/delta^2) int int alpha_a alpha_L`.
pub fn residual_terms(m: &ErrorMeasures, delta: f64) -> (f64, f64, f64) {
    let e_h = m.boundary_mass(&m.alpha_h) + m.space_time_mass(&m.alpha_h) / delta;
    let e_k = m.space_time_mass(&m.alpha_k);
    let e_l = m.alpha_a * m.space_time_mass(&m.alpha_l) / (delta * delta);
    (e_h, e_k, e_l)
}

/// Constants entering the form-based remainder terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormConstants {
    /// Upper hyperbolicity constant `c-bar`.
    pub c_high: f64,
    /// Differential constant `A` of the mollifiers.
    pub a: Option<f64>,
    /// Symmetry constant `b` of the mollifiers.
    pub b: Option<f64>,
    pub c0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormTerms {
    pub r_v: f64,
    pub r_omega: f64,
    pub r_alpha: f64,
}

/// `sup_u |d_u (d omega)(u)|` tabulated on a 65 x 128 lattice of the strip
/// (33 states) and read back bilinearly, periodic in `x`.
struct DerivativeTable {
    t_min: f64,
    dt: f64,
    dx: f64,
    leaf_length: f64,
    values: Vec<Vec<f64>>,
    zero: bool,
}

impl DerivativeTable {
    const NT: usize = 65;
    const NX: usize = 128;
    const NU: usize = 33;

    fn new(form: &FormFlux, st: &Spacetime1p1, c0: f64) -> Self {
        let dt = (st.t_max() - st.t_min()) / (Self::NT - 1) as f64;
        let dx = st.leaf_length() / Self::NX as f64;
        let values: Vec<Vec<f64>> = (0..Self::NT)
            .into_par_iter()
            .map(|i| {
                let t = st.t_min() + i as f64 * dt;
                (0..Self::NX)
                    .map(|j| {
                        let p = Point::new(t, j as f64 * dx);
                        (0..Self::NU)
                            .map(|k| {
                                let u = -c0 + 2.0 * c0 * k as f64 / (Self::NU - 1) as f64;
                                form.exterior_derivative_du(u, p).abs()
                            })
                            .fold(0.0, f64::max)
                    })
                    .collect()
            })
            .collect();
        let zero = values.iter().flatten().all(|v| *v == 0.0);
        DerivativeTable {
            t_min: st.t_min(),
            dt,
            dx,
            leaf_length: st.leaf_length(),
            values,
            zero,
        }
    }

    fn at(&self, p: Point) -> f64 {
        if self.zero {
            return 0.0;
        }
        let s = ((p.t - self.t_min) / self.dt).clamp(0.0, (Self::NT - 1) as f64);
        let i = (s.floor() as usize).min(Self::NT - 2);
        let wt = s - i as f64;
        let r = p.x.rem_euclid(self.leaf_length) / self.dx;
        let j = (r.floor() as usize) % Self::NX;
        let wx = r - r.floor();
        let j1 = (j + 1) % Self::NX;
        let row = |k: usize| (1.0 - wx) * self.values[k][j] + wx * self.values[k][j1];
        (1.0 - wt) * row(i) + wt * row(i + 1)
    }
}

/// `R_v = sup_t int_{H_t} avg_{E_p} |v_p - v_q| B_q` with
/// `B_q = (2 c-bar + T A) rho_q + T sup_u |d_u d omega_q(u)|`.
pub fn forms_r_v(
    v: &Trajectory,
    form: &FormFlux,
    st: &Spacetime1p1,
    delta: f64,
    consts: &FormConstants,
    quad: BallQuadrature,
    search: BallSearch,
) -> Result<f64> {
    let a = consts
        .a
        .ok_or_else(|| Error::Missing("differential constant A (run the admissibility check first)".into()))?;
    let t_len = horizon(v);
    let table = DerivativeTable::new(form, st, consts.c0);
    let h = quad.step(delta);
    let dx = v.mesh.dx();
    let scale = 2.0 * consts.c_high + t_len * a;
    let mut sup = 0.0f64;
    for k in sampled_slices(v.slices.len(), quad.max_times) {
        let t = v.slices[k].t;
        let value = leaf_double_sum(
            st,
            v,
            t,
            &v.mesh,
            delta,
            h,
            search,
            &|x| st.scale(t, x) * dx,
            &|_, vp, q, vq, c| (vp - vq).abs() * (scale * c.weight + t_len * table.at(q) * h * h),
        )?;
        sup = sup.max(value);
    }
    Ok(sup)
}

/// `R_omega = int_{M_T} avg_{E_p} |D(p, v_q) rho_q - D(q, v_q) rho_p|` where
/// `d omega(u) = D dt ^ dx` and `rho = lapse * scale`, integrated in time by
/// the trapezoid rule over the sampled slice times.
pub fn forms_r_omega(
    v: &Trajectory,
    form: &FormFlux,
    st: &Spacetime1p1,
    delta: f64,
    quad: BallQuadrature,
    search: BallSearch,
) -> Result<f64> {
    let h = quad.step(delta);
    let dx = v.mesh.dx();
    let idx = sampled_slices(v.slices.len(), quad.max_times);
    let times: Vec<f64> = idx.iter().map(|&k| v.slices[k].t).collect();
    let weights = trapezoid(&times);
    let rho = |p: Point| st.lapse(p.t, p.x) * st.scale(p.t, p.x);
    let mut total = 0.0;
    for (&t, &w) in times.iter().zip(&weights) {
        if w == 0.0 {
            continue;
        }
        let leaf = leaf_double_sum(
            st,
            v,
            t,
            &v.mesh,
            delta,
            h,
            search,
            &|_| dx,
            &|p, _, q, vq, _| {
                let q = st.point(q.t, q.x);
                (form.exterior_derivative(vq, p) * rho(q) - form.exterior_derivative(vq, q) * rho(p)).abs() * h * h
            },
        )?;
        total += w * leaf;
    }
    Ok(total)
}

/// `R_alpha = (b / delta) int |alpha_H| + int_{H_0 u H_T} |alpha_H| + int alpha_K`,
/// reading `|beta ^ gamma|` as `b |gamma|`.
pub fn forms_r_alpha(m: &ErrorMeasures, delta: f64, b: f64) -> f64 {
    b / delta * m.space_time_mass(&m.alpha_h) + m.boundary_mass(&m.alpha_h) + m.space_time_mass(&m.alpha_k)
}

/// `(R_v, R_omega, R_alpha)`. Needs both mollifier constants.
pub fn forms_r_terms(
    v: &Trajectory,
    form: &FormFlux,
    st: &Spacetime1p1,
    m: &ErrorMeasures,
    delta: f64,
    consts: &FormConstants,
    quad: BallQuadrature,
) -> Result<FormTerms> {
    let b = consts
        .b
        .ok_or_else(|| Error::Missing("symmetry constant b (run the admissibility check first)".into()))?;
    let r_v = forms_r_v(v, form, st, delta, consts, quad, BallSearch::Cached)?;
    let r_omega = forms_r_omega(v, form, st, delta, quad, BallSearch::Cached)?;
    Ok(FormTerms {
        r_v,
        r_omega,
        r_alpha: forms_r_alpha(m, delta, b),
    })
}
