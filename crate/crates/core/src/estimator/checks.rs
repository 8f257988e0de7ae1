use super::terms::ball_average_integral;
use super::{BallQuadrature, BallSearch};
use crate::error::{Error, Result};
use crate::flux::{divergence_at, flux_gap, hyperbolicity_constants, state_lipschitz, Flux, Lattice};
use crate::geometry::{LeafMesh, Point, Spacetime1p1};
use crate::harness::{fit_rate, RateFit};
use crate::solver::{l1_flux_distance, total_variation, SliceField, SpacetimeField, Trajectory, Viscosity};

fn lattice() -> Lattice {
    Lattice::fixed(64, 17, 32)
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs())
}

/// Left-rule weights: slice `n` stands for `[t_n, t_{n+1})`.
fn left_weights(traj: &Trajectory) -> Vec<f64> {
    let t = traj.times();
    (0..t.len())
        .map(|i| if i + 1 < t.len() { t[i + 1] - t[i] } else { 0.0 })
        .collect()
}

/// `D(T) - D(0)` for trajectories on one mesh that start and end together.
fn distance_growth(u: &Trajectory, v: &Trajectory, f: &dyn Flux, st: &Spacetime1p1) -> Result<f64> {
    if u.mesh != v.mesh {
        return Err(Error::Mismatch("trajectories live on different meshes".into()));
    }
    if !same_time(u.first().t, v.first().t) || !same_time(u.last().t, v.last().t) {
        return Err(Error::Mismatch(format!(
            "trajectories cover [{}, {}] and [{}, {}]",
            u.first().t,
            u.last().t,
            v.first().t,
            v.last().t
        )));
    }
    let d0 = l1_flux_distance(u.first(), v.first(), f, st)?;
    let d1 = l1_flux_distance(u.last(), v.last(), f, st)?;
    Ok(d1 - d0)
}

/// `int_{M_T} |u| dV_g` by the left rule over the slices.
fn spacetime_abs_mass(u: &Trajectory, st: &Spacetime1p1) -> f64 {
    let dx = u.mesh.dx();
    u.slices
        .iter()
        .zip(left_weights(u))
        .map(|(s, w)| {
            w * u
                .mesh
                .centers()
                .zip(&s.values)
                .map(|(x, v)| v.abs() * st.lapse(s.t, x) * st.scale(s.t, x) * dx)
                .sum::<f64>()
        })
        .sum()
}

fn leaf_abs_mass(s: &SliceField, st: &Spacetime1p1) -> f64 {
    let dx = s.mesh.dx();
    s.mesh.centers().zip(&s.values).map(|(x, v)| v.abs() * st.scale(s.t, x) * dx).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    /// `D(t_n)` at every slice.
    pub distances: Vec<f64>,
    /// Largest `D(t_{n+1}) - D(t_n)`.
    pub max_increase: f64,
    /// `1e-12 D(0)`.
    pub tolerance: f64,
    /// Steps whose increase exceeds the tolerance.
    pub violations: usize,
    pub pass: bool,
}

/// Checks that the flux distance between two runs never grows.
pub fn contraction_check(u: &Trajectory, v: &Trajectory, f: &dyn Flux, st: &Spacetime1p1) -> Result<ContractionReport> {
    if u.mesh != v.mesh {
        return Err(Error::Mismatch("trajectories live on different meshes".into()));
    }
    if u.slices.len() != v.slices.len() {
        return Err(Error::Mismatch(format!(
            "trajectories have {} and {} slices",
            u.slices.len(),
            v.slices.len()
        )));
    }
    if u.flux_name != v.flux_name {
        return Err(Error::Mismatch(format!(
            "trajectories were computed with fluxes '{}' and '{}'",
            u.flux_name, v.flux_name
        )));
    }
    let distances = u
        .slices
        .iter()
        .zip(&v.slices)
        .map(|(a, b)| l1_flux_distance(a, b, f, st))
        .collect::<Result<Vec<f64>>>()?;
    let tolerance = 1e-12 * distances[0];
    let increases: Vec<f64> = distances.windows(2).map(|w| w[1] - w[0]).collect();
    let max_increase = increases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let violations = increases.iter().filter(|d| **d > tolerance).count();
    Ok(ContractionReport {
        times: u.times(),
        max_increase: if increases.is_empty() { 0.0 } else { max_increase },
        distances,
        tolerance,
        violations,
        pass: violations == 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvModulusReport {
    pub t: f64,
    pub deltas: Vec<f64>,
    /// `int_{H_t} avg_{B_p(delta)} |v_p - v_q|` per radius.
    pub lhs: Vec<f64>,
    pub tv: f64,
    /// `||div f(v)||_{L1(H_t)}`
    pub div_l1: f64,
    /// `sup |d_u f|` (companion norm).
    pub lipschitz: f64,
    pub beta: f64,
    /// `(1 + lipschitz / beta) TV + div_l1 / beta`.
    pub bracket: f64,
    /// `lhs / (delta bracket)` per radius.
    pub ratios: Vec<f64>,
    /// `max ratio / min ratio` (1 when every ratio vanishes).
    pub spread: f64,
    pub pass: bool,
}

/// Compares the ball modulus of `field` on the leaf at `t` with the bound
/// `delta ((1 + Lip f / beta) TV + ||div f||_1 / beta)` over a radius sweep.
/// The leaf integral and the total variation use the cells of `mesh`.
#[allow(clippy::too_many_arguments)]
pub fn bv_modulus_check(
    field: &dyn SpacetimeField,
    t: f64,
    mesh: &LeafMesh,
    f: &dyn Flux,
    st: &Spacetime1p1,
    c0: f64,
    deltas: &[f64],
    quad: BallQuadrature,
) -> Result<BvModulusReport> {
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("empty radius sweep".into()));
    }
    st.check_time(t)?;
    let beta = hyperbolicity_constants(f, st, c0, lattice())?.beta;
    let lipschitz = state_lipschitz(f, st, c0, lattice());
    let values: Vec<f64> = mesh.centers().map(|x| field.value_at(t, x)).collect();
    let n = values.len();
    let tv: f64 = (0..n).map(|j| (values[(j + 1) % n] - values[j]).abs()).sum();
    let dx = mesh.dx();
    let div_l1: f64 = mesh
        .centers()
        .zip(&values)
        .map(|(x, &v)| divergence_at(f, st, v, Point::new(t, x)).abs() * st.scale(t, x) * dx)
        .sum();
    let bracket = (1.0 + lipschitz / beta) * tv + div_l1 / beta;
    let lhs = deltas
        .iter()
        .map(|&d| ball_average_integral(field, st, t, mesh, d, quad, BallSearch::Cached))
        .collect::<Result<Vec<f64>>>()?;
    let ratios: Vec<f64> = lhs
        .iter()
        .zip(deltas)
        .map(|(l, d)| if *l == 0.0 { 0.0 } else { l / (d * bracket) })
        .collect();
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if max == 0.0 { 1.0 } else { max / min };
    Ok(BvModulusReport {
        t,
        deltas: deltas.to_vec(),
        lhs,
        tv,
        div_l1,
        lipschitz,
        beta,
        bracket,
        ratios,
        spread,
        pass: spread <= 2.0,
    })
}

/// Least-squares slope through the origin of `R(delta)` against `delta`.
pub fn r_bar(deltas: &[f64], r: &[f64]) -> Result<f64> {
    if deltas.len() != r.len() || deltas.is_empty() {
        return Err(Error::Mismatch(format!("{} radii for {} values", deltas.len(), r.len())));
    }
    let sdd: f64 = deltas.iter().map(|d| d * d).sum();
    let sdr: f64 = deltas.iter().zip(r).map(|(d, r)| d * r).sum();
    Ok(sdr / sdd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxComparisonReport {
    /// `D(T) - D(0)`.
    pub lhs: f64,
    /// Jump-sum realisation of `int |d_u (omega - omega~) ^ dv|`.
    pub rhs_ap20: f64,
    /// `C (R-bar b Q int |u| dV_g)^{1/2} + Q int_{H_0 u H_T} |u|`.
    pub rhs_ap30: f64,
    pub ratio_ap20: f64,
    pub ratio_ap30: f64,
    pub q: f64,
    pub u_mass: f64,
    pub boundary_mass: f64,
    pub c: f64,
    /// Set when the total variation of `v` grows by more than a factor 2.
    pub bv_warning: Option<String>,
    /// `lhs <= C rhs_ap20`.
    pub verdict_ap20: bool,
    /// `lhs <= rhs_ap30`.
    pub verdict_ap30: bool,
}

/// Bounds the distance between `u` (flux `f_tilde`) and `v` (flux `f`).
#[allow(clippy::too_many_arguments)]
pub fn flux_comparison_bounds(
    u: &Trajectory,
    v: &Trajectory,
    f: &dyn Flux,
    f_tilde: &dyn Flux,
    st: &Spacetime1p1,
    c0: f64,
    r_bar: f64,
    b: f64,
    c: f64,
) -> Result<FluxComparisonReport> {
    if u.flux_name != f_tilde.name() || v.flux_name != f.name() {
        return Err(Error::Mismatch(format!(
            "trajectories use '{}' and '{}', expected '{}' and '{}'",
            u.flux_name,
            v.flux_name,
            f_tilde.name(),
            f.name()
        )));
    }
    let lhs = distance_growth(u, v, f, st)?;
    let q = flux_gap(f, f_tilde, st, c0, lattice())?;
    let mesh = v.mesh;
    let n = mesh.n_cells();
    let dx = mesh.dx();
    let gap = |w: f64, t: f64, x: f64| {
        let a = f.value(w, t, x);
        let b = f_tilde.value(w, t, x);
        [a[0] - b[0], a[1] - b[1]]
    };
    let rho = |t: f64, x: f64| st.lapse(t, x) * st.scale(t, x);
    let weights = left_weights(v);
    let mut rhs_ap20 = 0.0;
    for (k, s) in v.slices.iter().enumerate() {
        let t = s.t;
        let space: f64 = (0..n)
            .map(|j| {
                let x = mesh.face(j + 1);
                let (l, r) = (s.values[j], s.values[(j + 1) % n]);
                rho(t, x) * (gap(r, t, x)[1] - gap(l, t, x)[1]).abs()
            })
            .sum();
        rhs_ap20 += weights[k] * space;
        if let Some(next) = v.slices.get(k + 1) {
            let time: f64 = mesh
                .centers()
                .enumerate()
                .map(|(j, x)| rho(t, x) * (gap(next.values[j], t, x)[0] - gap(s.values[j], t, x)[0]).abs() * dx)
                .sum();
            rhs_ap20 += time;
        }
    }
    let u_mass = spacetime_abs_mass(u, st);
    let boundary_mass = leaf_abs_mass(u.first(), st) + leaf_abs_mass(u.last(), st);
    let rhs_ap30 = c * (r_bar * b * q * u_mass).max(0.0).sqrt() + q * boundary_mass;

    let tv: Vec<f64> = v.slices.iter().map(total_variation).collect();
    let tv_max = tv.iter().copied().fold(0.0, f64::max);
    let bv_warning = if tv.iter().any(|x| !x.is_finite()) {
        Some("total variation of v is not finite".to_string())
    } else if tv_max > 2.0 * tv[0] + 1e-12 {
        Some(format!("total variation of v grows from {} to {tv_max}", tv[0]))
    } else {
        None
    };
    if let Some(w) = &bv_warning {
        log::warn!("flux comparison: {w}");
    }
    let ratio = |rhs: f64| if rhs > 0.0 { lhs / rhs } else if lhs <= 0.0 { 0.0 } else { f64::INFINITY };
    Ok(FluxComparisonReport {
        lhs,
        rhs_ap20,
        rhs_ap30,
        ratio_ap20: ratio(rhs_ap20),
        ratio_ap30: ratio(rhs_ap30),
        q,
        u_mass,
        boundary_mass,
        c,
        bv_warning,
        verdict_ap20: lhs <= c * rhs_ap20,
        verdict_ap30: lhs <= rhs_ap30,
    })
}

/// One viscous run scored against the inviscid reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionPoint {
    /// `Lip phi`
    pub lipschitz: f64,
    /// `sup |phi(u) - phi(0)| / |u|`
    pub q: f64,
    /// `D(T) - D(0)`
    pub lhs: f64,
    /// `sup_t TV(v)`
    pub v_tv: f64,
    /// `sup_t TV(u)`
    pub u_tv: f64,
    /// `int_{M_T} |u| dV_g`
    pub u_mass: f64,
    pub horizon: f64,
}

impl DiffusionPoint {
    /// `T sqrt(Lip phi V U)`
    pub fn nd20(&self) -> f64 {
        self.horizon * (self.lipschitz * self.v_tv * self.u_tv).sqrt()
    }

    /// `T (Q U_mass)^{1/3} V^{2/3}`
    pub fn nd30(&self) -> f64 {
        self.horizon * (self.q * self.u_mass).cbrt() * self.v_tv.powf(2.0 / 3.0)
    }
}

/// Scores the viscous run `u` (viscosity `phi`) against the inviscid `v`.
pub fn diffusion_point(
    u: &Trajectory,
    v: &Trajectory,
    phi: &dyn Viscosity,
    f: &dyn Flux,
    st: &Spacetime1p1,
    c0: f64,
) -> Result<DiffusionPoint> {
    let lhs = distance_growth(u, v, f, st)?;
    let sup_tv = |traj: &Trajectory| traj.slices.iter().map(total_variation).fold(0.0, f64::max);
    Ok(DiffusionPoint {
        lipschitz: phi.lipschitz(c0),
        q: phi.gap(c0),
        lhs,
        v_tv: sup_tv(v),
        u_tv: sup_tv(u),
        u_mass: spacetime_abs_mass(u, st),
        horizon: v.last().t - v.first().t,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionReport {
    pub points: Vec<DiffusionPoint>,
    /// Log-log fit of `lhs` against `Lip phi` (absent if some `lhs <= 0`).
    pub fit: Option<RateFit>,
    pub c: f64,
    /// `lhs <= C nd20` at every point.
    pub verdict_nd20: bool,
    /// `lhs <= C nd30` at every point.
    pub verdict_nd30: bool,
}

pub fn diffusion_bounds(points: &[DiffusionPoint], c: f64) -> Result<DiffusionReport> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "viscosity sweep needs at least 3 points, got {}",
            points.len()
        )));
    }
    let fit = if points.iter().all(|p| p.lhs > 0.0 && p.lipschitz > 0.0) {
        Some(fit_rate(&points.iter().map(|p| (p.lipschitz, p.lhs)).collect::<Vec<_>>())?)
    } else {
        None
    };
    Ok(DiffusionReport {
        points: points.to_vec(),
        fit,
        c,
        verdict_nd20: points.iter().all(|p| p.lhs <= c * p.nd20()),
        verdict_nd30: points.iter().all(|p| p.lhs <= c * p.nd30()),
    })
}
