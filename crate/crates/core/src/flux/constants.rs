//! Divergence and lattice suprema of flux diagnostics.

use rayon::prelude::*;

use super::{companion_norm, Flux, FluxJet};
use crate::error::{Error, Result};
use crate::geometry::{MetricJet, Point, Spacetime1p1};

/// Sample lattice over `[-c0, c0] x [t_min, t_max] x [0, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub nu: usize,
    pub nt: usize,
    pub nx: usize,
    /// Number of doublings allowed while the reported value still moves by 1% or more.
    pub max_refinements: usize,
}

impl Default for Lattice {
    fn default() -> Self {
        Lattice {
            nu: 64,
            nt: 64,
            nx: 64,
            max_refinements: 2,
        }
    }
}

impl Lattice {
    pub fn fixed(nu: usize, nt: usize, nx: usize) -> Self {
        Lattice {
            nu,
            nt,
            nx,
            max_refinements: 0,
        }
    }

    fn doubled(&self) -> Self {
        Lattice {
            nu: 2 * self.nu,
            nt: 2 * self.nt,
            nx: 2 * self.nx,
            max_refinements: self.max_refinements.saturating_sub(1),
        }
    }

    /// Evenly spaced states on `[-c0, c0]`, always including `u = 0`.
    fn states(&self, c0: f64) -> Vec<f64> {
        if self.nu == 1 {
            return vec![0.0];
        }
        let mut us: Vec<f64> = (0..self.nu)
            .map(|i| -c0 + 2.0 * c0 * i as f64 / (self.nu - 1) as f64)
            .collect();
        if !us.contains(&0.0) {
            us.push(0.0);
        }
        us
    }

    fn times(&self, st: &Spacetime1p1) -> Vec<f64> {
        st.sample_times(self.nt)
    }

    fn xs(&self, st: &Spacetime1p1) -> Vec<f64> {
        (0..self.nx)
            .map(|j| st.leaf_length() * j as f64 / self.nx as f64)
            .collect()
    }

    /// `(min, max)` of `eval(u, t, x)` over the lattice; `eval` may return
    /// `None` to skip a point.
    fn extrema<F>(&self, st: &Spacetime1p1, c0: f64, eval: &F) -> (f64, f64)
    where
        F: Fn(f64, f64, f64) -> Option<f64> + Sync,
    {
        let us = self.states(c0);
        let xs = self.xs(st);
        self.times(st)
            .par_iter()
            .map(|&t| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &x in &xs {
                    for &u in &us {
                        if let Some(v) = eval(u, t, x) {
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                }
                (lo, hi)
            })
            .reduce(
                || (f64::INFINITY, f64::NEG_INFINITY),
                |a, b| (a.0.min(b.0), a.1.max(b.1)),
            )
    }

    /// Extrema refined by lattice doubling until both move by less than 1%.
    fn refined_extrema<F>(&self, st: &Spacetime1p1, c0: f64, eval: F) -> (f64, f64)
    where
        F: Fn(f64, f64, f64) -> Option<f64> + Sync,
    {
        let mut lattice = *self;
        let mut current = lattice.extrema(st, c0, &eval);
        while lattice.max_refinements > 0 {
            lattice = lattice.doubled();
            let next = lattice.extrema(st, c0, &eval);
            let settled = close(current.0, next.0) && close(current.1, next.1);
            current = (current.0.min(next.0), current.1.max(next.1));
            if settled {
                break;
            }
        }
        current
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 0.01 * a.abs().max(b.abs()) + 1e-14
}

/// Divergence of `f(u)` at `p` for constant state `u` together with its
/// `u`, `t` and `x` derivatives.
fn divergence_jet(fj: &FluxJet, m: &MetricJet) -> [f64; 4] {
    let [lt, lx, ltt, ltx, lxx] = m.log_density_derivatives();
    let (ft, fx) = (&fj.temporal, &fj.spatial);
    let div = ft.t + fx.x + ft.v * lt + fx.v * lx;
    let div_u = ft.ut + fx.ux + ft.u * lt + fx.u * lx;
    let div_t = ft.tt + fx.tx + ft.t * lt + ft.v * ltt + fx.t * lx + fx.v * ltx;
    let div_x = ft.tx + fx.xx + ft.x * lt + ft.v * ltx + fx.x * lx + fx.v * lxx;
    [div, div_u, div_t, div_x]
}

/// `div f(u)` at `p`, computed from analytic partials as
/// `(1 / (lapse * scale)) (d_t(lapse scale f^t) + d_x(lapse scale f^x))`.
pub fn divergence_at(f: &dyn Flux, st: &Spacetime1p1, u: f64, p: Point) -> f64 {
    divergence_jet(&f.jet(u, p.t, p.x), &st.jet(p))[0]
}

/// Divergence field of `f(u)` on `nt` evenly spaced times (endpoints
/// included) times `nx` leaf points `x_j = j L / nx`, indexed `[time][x]`.
pub fn divergence(f: &dyn Flux, st: &Spacetime1p1, u: f64, nt: usize, nx: usize) -> Vec<Vec<f64>> {
    st.sample_times(nt)
        .into_iter()
        .map(|t| {
            (0..nx)
                .map(|j| {
                    let x = st.leaf_length() * j as f64 / nx as f64;
                    divergence_at(f, st, u, Point::new(t, x))
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityReport {
    pub sup_div: f64,
    pub compatible: bool,
}

/// Lattice supremum of `|div f(u)|`; compatible iff it does not exceed `tol`.
pub fn check_geometry_compatible(
    f: &dyn Flux,
    st: &Spacetime1p1,
    c0: f64,
    tol: f64,
    lattice: Lattice,
) -> CompatibilityReport {
    let (_, sup_div) = lattice.refined_extrema(st, c0, |u, t, x| {
        Some(divergence_at(f, st, u, Point::new(t, x)).abs())
    });
    CompatibilityReport {
        sup_div,
        compatible: sup_div <= tol,
    }
}

/// True iff `d_u f` is timelike, `lapse^2 (d_u f^t)^2 > scale^2 (d_u f^x)^2`,
/// on the whole lattice.
pub fn check_timelike(f: &dyn Flux, st: &Spacetime1p1, c0: f64, lattice: Lattice) -> bool {
    let (min, _) = Lattice::fixed(lattice.nu, lattice.nt, lattice.nx).extrema(st, c0, &|u, t, x| {
        let [dt, dx] = f.du(u, t, x);
        let l = st.lapse(t, x);
        let a = st.scale(t, x);
        Some((l * dt).powi(2) - (a * dx).powi(2))
    });
    min > 0.0
}

/// Global hyperbolicity constants and related diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicityReport {
    /// Pointwise ratio bounds of `d_u f^t(u)` against `d_u f^t(0)`.
    pub c_low: f64,
    pub c_high: f64,
    /// Ratio bounds after integrating `d_u f^t` against the leaf density
    /// `lapse * scale` at each time.
    pub c_low_integrated: f64,
    pub c_high_integrated: f64,
    pub beta: f64,
    pub timelike_ok: bool,
    pub sup_div: f64,
    pub compatible: bool,
}

/// Tolerance on `sup |div f|` below which a flux counts as geometry compatible.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

pub fn hyperbolicity_constants(
    f: &dyn Flux,
    st: &Spacetime1p1,
    c0: f64,
    lattice: Lattice,
) -> Result<HyperbolicityReport> {
    if !(c0 > 0.0) {
        return Err(Error::InvalidArgument(format!("state bound c0 = {c0} must be positive")));
    }
    let fixed = Lattice::fixed(lattice.nu, lattice.nt, lattice.nx);
    for &t in &fixed.times(st) {
        for &x in &fixed.xs(st) {
            for &u in &fixed.states(c0) {
                let value = f.du(u, t, x)[0];
                if !(value > 0.0) {
                    return Err(Error::NonHyperbolic { u, t, x, value });
                }
            }
        }
    }
    let (beta, _) = lattice.refined_extrema(st, c0, |u, t, x| Some(f.du(u, t, x)[0]));
    let (c_low, c_high) = lattice.refined_extrema(st, c0, |u, t, x| {
        Some(f.du(u, t, x)[0] / f.du(0.0, t, x)[0])
    });

    let xs = fixed.xs(st);
    let dx = st.leaf_length() / xs.len() as f64;
    let mut c_low_integrated = f64::INFINITY;
    let mut c_high_integrated = f64::NEG_INFINITY;
    for &t in &fixed.times(st) {
        let integral = |u: f64| -> f64 {
            xs.iter()
                .map(|&x| f.du(u, t, x)[0] * st.lapse(t, x) * st.scale(t, x) * dx)
                .sum()
        };
        let base = integral(0.0);
        for &u in &fixed.states(c0) {
            let r = integral(u) / base;
            c_low_integrated = c_low_integrated.min(r);
            c_high_integrated = c_high_integrated.max(r);
        }
    }
    let compat = check_geometry_compatible(f, st, c0, COMPATIBILITY_TOL, lattice);
    Ok(HyperbolicityReport {
        c_low: c_low.min(1.0),
        c_high: c_high.max(1.0),
        c_low_integrated: c_low_integrated.min(1.0),
        c_high_integrated: c_high_integrated.max(1.0),
        beta,
        timelike_ok: check_timelike(f, st, c0, lattice),
        sup_div: compat.sup_div,
        compatible: compat.compatible,
    })
}

/// Lipschitz constants entering the modulus and inhomogeneity terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LambdaConstants {
    /// `sup |d_u f^t|`
    pub l0: f64,
    /// `sup` over unit companion directions `X` of `|d_u (nabla_X f)|`.
    pub l1: f64,
    /// `sup` of the companion norm of the spacetime gradient of `div f(u)`.
    pub l2: f64,
    /// `sup |d_u div f|`
    pub l3: f64,
}

/// Operator norm of the covariant derivative of `d_u f` in the orthonormal
/// frame of the companion metric.
fn covariant_du_norm(fj: &FluxJet, m: &MetricJet) -> f64 {
    let v = [fj.temporal.u, fj.spatial.u];
    // d[i][j] = d_j V^i
    let d = [[fj.temporal.ut, fj.temporal.ux], [fj.spatial.ut, fj.spatial.ux]];
    let gamma = m.companion_christoffel();
    let e = [m.lapse, m.scale];
    let mut n = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let cov = d[i][j] + gamma[i][j][0] * v[0] + gamma[i][j][1] * v[1];
            n[i][j] = e[i] * cov / e[j];
        }
    }
    spectral_norm_2x2(n)
}

pub(crate) fn spectral_norm_2x2(m: [[f64; 2]; 2]) -> f64 {
    let frob = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (frob * frob - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (frob + disc)).sqrt()
}

pub fn lambda_constants(f: &dyn Flux, st: &Spacetime1p1, c0: f64, lattice: Lattice) -> LambdaConstants {
    let l0 = lattice.refined_extrema(st, c0, |u, t, x| Some(f.du(u, t, x)[0].abs())).1;
    let l1 = lattice
        .refined_extrema(st, c0, |u, t, x| {
            Some(covariant_du_norm(&f.jet(u, t, x), &st.jet(Point::new(t, x))))
        })
        .1;
    let l2 = lattice
        .refined_extrema(st, c0, |u, t, x| {
            let m = st.jet(Point::new(t, x));
            let [_, _, dt, dx] = divergence_jet(&f.jet(u, t, x), &m);
            Some(((dt / m.lapse).powi(2) + (dx / m.scale).powi(2)).sqrt())
        })
        .1;
    let l3 = lattice
        .refined_extrema(st, c0, |u, t, x| {
            Some(divergence_jet(&f.jet(u, t, x), &st.jet(Point::new(t, x)))[1].abs())
        })
        .1;
    LambdaConstants { l0, l1, l2, l3 }
}

/// `sup |d_u f|` in the companion norm over the lattice.
pub fn state_lipschitz(f: &dyn Flux, st: &Spacetime1p1, c0: f64, lattice: Lattice) -> f64 {
    lattice
        .refined_extrema(st, c0, |u, t, x| Some(companion_norm(st, t, x, f.du(u, t, x))))
        .1
}

/// `Q = sup_{u != 0} |f(u) - g(u)| / |u|` in the companion norm over the
/// lattice. Requires `f(0) = g(0)` everywhere.
pub fn flux_gap(f: &dyn Flux, g: &dyn Flux, st: &Spacetime1p1, c0: f64, lattice: Lattice) -> Result<f64> {
    let fixed = Lattice::fixed(1, lattice.nt, lattice.nx);
    let (_, offset) = fixed.extrema(st, c0, &|_, t, x| {
        let a = f.value(0.0, t, x);
        let b = g.value(0.0, t, x);
        Some(((a[0] - b[0]).abs() / (1.0 + a[0].abs())).max((a[1] - b[1]).abs() / (1.0 + a[1].abs())))
    });
    if offset > 1e-12 {
        return Err(Error::FluxesNotRebased(offset));
    }
    let (_, q) = lattice.refined_extrema(st, c0, |u, t, x| {
        if u.abs() < 1e-14 * c0 {
            return None;
        }
        let a = f.value(u, t, x);
        let b = g.value(u, t, x);
        Some(companion_norm(st, t, x, [a[0] - b[0], a[1] - b[1]]) / u.abs())
    });
    Ok(q.max(0.0))
}
