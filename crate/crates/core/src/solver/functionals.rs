use rayon::prelude::*;

use super::{SliceField, Trajectory};
use crate::error::{Error, Result};
use crate::flux::{divergence_at, sgn, Flux};
use crate::geometry::{Point, Spacetime1p1};

/// Periodic total variation `sum_j |u_{j+1} - u_j|`.
pub fn total_variation(u: &SliceField) -> f64 {
    let v = &u.values;
    let n = v.len();
    (0..n).map(|j| (v[(j + 1) % n] - v[j]).abs()).sum()
}

/// `sum_j |f^t(u_j) - f^t(v_j)| scale dx`, the leaf integral of `F^t(u, v)`.
pub fn l1_flux_distance(u: &SliceField, v: &SliceField, f: &dyn Flux, st: &Spacetime1p1) -> Result<f64> {
    if u.mesh != v.mesh {
        return Err(Error::Mismatch("slices live on different meshes".into()));
    }
    if (u.t - v.t).abs() > 1e-12 * (1.0 + u.t.abs()) {
        return Err(Error::Mismatch(format!("slices at different times {} and {}", u.t, v.t)));
    }
    st.check_time(u.t)?;
    let t = u.t;
    let dx = u.mesh.dx();
    Ok(u.mesh
        .centers()
        .zip(u.values.iter().zip(&v.values))
        .map(|(x, (&a, &b))| {
            let w = st.scale(t, x) * dx;
            w * (f.temporal(a, t, x) - f.temporal(b, t, x)).abs()
        })
        .sum())
}

/// Positive part of the discrete Kruzkov entropy residual.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyResidual {
    /// `sum` over slice intervals and cells of `max_k R^+ dt dx`.
    pub total: f64,
    /// `max_k R^+ / (lapse scale)` per slice interval and cell.
    pub field: Vec<Vec<f64>>,
}

/// Discrete form of `div F(u) + sgn(u - k) div f(k) <= 0` for the Kruzkov
/// pairs `|u - k|`, evaluated between consecutive slices with a centred
/// interface entropy flux.
pub fn entropy_residual(traj: &Trajectory, f: &dyn Flux, st: &Spacetime1p1, k_grid: &[f64]) -> Result<EntropyResidual> {
    if k_grid.is_empty() {
        return Err(Error::InvalidArgument("empty Kruzkov parameter grid".into()));
    }
    let mesh = traj.mesh;
    let n = mesh.n_cells();
    let dx = mesh.dx();
    let centers: Vec<f64> = mesh.centers().collect();
    let faces: Vec<f64> = (0..n).map(|j| mesh.face(j)).collect();
    let density = |t: f64, x: f64| st.lapse(t, x) * st.scale(t, x);

    let field: Vec<Vec<f64>> = traj
        .slices
        .par_windows(2)
        .map(|pair| {
            let (a, b) = (&pair[0], &pair[1]);
            let (t0, t1) = (a.t, b.t);
            let dt = t1 - t0;
            let rho0: Vec<f64> = centers.iter().map(|&x| density(t0, x)).collect();
            let rho1: Vec<f64> = centers.iter().map(|&x| density(t1, x)).collect();
            let rho_f: Vec<f64> = faces.iter().map(|&x| density(t0, x)).collect();
            let mut worst = vec![0.0f64; n];
            let mut q = vec![0.0; n];
            for &k in k_grid {
                let entropy_flux = |u: f64, x: f64, rho: f64| rho * sgn(u - k) * (f.spatial(u, t0, x) - f.spatial(k, t0, x));
                for j in 0..n {
                    let left = a.values[(j + n - 1) % n];
                    q[j] = 0.5 * (entropy_flux(left, faces[j], rho_f[j]) + entropy_flux(a.values[j], faces[j], rho_f[j]));
                }
                for j in 0..n {
                    let x = centers[j];
                    let eta0 = rho0[j] * (f.temporal(a.values[j], t0, x) - f.temporal(k, t0, x)).abs();
                    let eta1 = rho1[j] * (f.temporal(b.values[j], t1, x) - f.temporal(k, t1, x)).abs();
                    let source = rho0[j] * sgn(a.values[j] - k) * divergence_at(f, st, k, Point::new(t0, x));
                    let r = (eta1 - eta0) / dt + (q[(j + 1) % n] - q[j]) / dx + source;
                    worst[j] = worst[j].max(r.max(0.0));
                }
            }
            worst
                .iter()
                .zip(&rho0)
                .map(|(r, rho)| r / rho)
                .collect::<Vec<f64>>()
        })
        .collect();

    let mut total = 0.0;
    for (pair, row) in traj.slices.windows(2).zip(&field) {
        let dt = pair[1].t - pair[0].t;
        for (j, r) in row.iter().enumerate() {
            total += r * density(pair[0].t, centers[j]) * dt * dx;
        }
    }
    Ok(EntropyResidual { total, field })
}
