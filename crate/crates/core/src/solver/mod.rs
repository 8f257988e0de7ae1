//! Monotone finite-volume evolution on the foliation.
//!
//! The conserved density is `W = lapse * scale * f^t(u)` on each leaf cell.
//! Space faces carry `lapse * scale * f^x` through an Engquist-Osher flux, and
//! the state is recovered from `W` by inverting the increasing map
//! `u -> f^t(u)`. Nonlinear diffusion is added by operator splitting with
//! explicit sub-cycled leaf Laplace-Beltrami steps.

mod functionals;
mod initial;
mod measures;
mod viscosity;

pub use functionals::{entropy_residual, l1_flux_distance, total_variation, EntropyResidual};
pub use initial::InitialCondition;
pub use measures::{extract_error_measures, ErrorFamily, ErrorMeasures};
pub use viscosity::{
    check_nondecreasing, viscosity_preset, CubicViscosity, LinearViscosity, Viscosity, ZeroViscosity,
};

use crate::error::{Error, Result};
use crate::flux::{check_timelike, Flux, Lattice};
use crate::geometry::{LeafMesh, Spacetime1p1};

/// Cell averages on one leaf at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceField {
    pub t: f64,
    pub mesh: LeafMesh,
    pub values: Vec<f64>,
}

impl SliceField {
    pub fn new(t: f64, mesh: LeafMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_cells() {
            return Err(Error::Mismatch(format!(
                "{} values for a mesh of {} cells",
                values.len(),
                mesh.n_cells()
            )));
        }
        Ok(SliceField { t, mesh, values })
    }

    pub fn from_initial(t: f64, mesh: LeafMesh, ic: &InitialCondition) -> Self {
        SliceField {
            t,
            mesh,
            values: ic.cell_averages(&mesh),
        }
    }

    pub fn constant(t: f64, mesh: LeafMesh, c: f64) -> Self {
        SliceField {
            t,
            mesh,
            values: vec![c; mesh.n_cells()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Slices of one run at increasing times, with scheme metadata.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub slices: Vec<SliceField>,
    pub mesh: LeafMesh,
    pub dt: f64,
    pub n_steps: usize,
    /// Largest Courant number met during the run (must stay <= 1).
    pub max_courant: f64,
    pub flux_name: String,
    pub viscosity_name: Option<String>,
    /// Number of cell updates clipped back into `[-c0, c0]`.
    pub clipped: usize,
    pub diffusion_substeps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.t).collect()
    }

    pub fn first(&self) -> &SliceField {
        &self.slices[0]
    }

    pub fn last(&self) -> &SliceField {
        self.slices.last().expect("trajectory has at least the initial slice")
    }
}

/// A function of spacetime position, sampled by ball averages.
pub trait SpacetimeField: Sync {
    fn value_at(&self, t: f64, x: f64) -> f64;
}

/// A slice read as a field that is constant in time.
impl SpacetimeField for SliceField {
    fn value_at(&self, _t: f64, x: f64) -> f64 {
        self.values[self.mesh.cell_of(x)]
    }
}

/// Piecewise constant in time and right-continuous: slice `n` holds on
/// `[t_n, t_{n+1})`; times before the first slice read the first slice.
impl SpacetimeField for Trajectory {
    fn value_at(&self, t: f64, x: f64) -> f64 {
        let tol = 1e-12 * (1.0 + t.abs());
        let k = self.slices.partition_point(|s| s.t <= t + tol).max(1) - 1;
        self.slices[k].value_at(t, x)
    }
}

/// Wraps a closure `(t, x) -> value`, e.g. an exact solution.
pub struct FnField<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> SpacetimeField for FnField<F> {
    fn value_at(&self, t: f64, x: f64) -> f64 {
        (self.0)(t, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NumericalFlux {
    /// Exact Engquist-Osher flux with sonic points from the flux.
    #[default]
    EngquistOsher,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub n_cells: usize,
    pub cfl: f64,
    /// State bound `C_0`.
    pub c0: f64,
    pub numerical_flux: NumericalFlux,
    /// Safety factor on the explicit diffusion step.
    pub diffusion_safety: f64,
    /// Keep every `snapshot_stride`-th slice (the final slice is always kept).
    pub snapshot_stride: usize,
}

impl SchemeConfig {
    pub fn new(n_cells: usize, c0: f64) -> Self {
        SchemeConfig {
            n_cells,
            cfl: 0.9,
            c0,
            numerical_flux: NumericalFlux::EngquistOsher,
            diffusion_safety: 0.9,
            snapshot_stride: 1,
        }
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_cells < 2 {
            return Err(Error::InvalidArgument("scheme needs at least two cells".into()));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::InvalidArgument(format!("cfl {} must lie in (0, 1)", self.cfl)));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::InvalidArgument(format!("state bound {} must be positive", self.c0)));
        }
        if !(self.diffusion_safety > 0.0 && self.diffusion_safety <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "diffusion safety {} must lie in (0, 1]",
                self.diffusion_safety
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument("snapshot stride must be positive".into()));
        }
        Ok(())
    }
}

/// Evolves `div f(u) = 0` from `u0` up to time `t_end`.
pub fn evolve_hyperbolic(
    st: &Spacetime1p1,
    f: &dyn Flux,
    u0: &SliceField,
    t_end: f64,
    cfg: &SchemeConfig,
) -> Result<Trajectory> {
    Evolution::new(st, f, None, u0, t_end, cfg)?.run()
}

/// Evolves `div f(u) = Laplacian_{g^t} phi(u)` from `u0` up to `t_end`.
/// A vanishing `phi` reproduces [`evolve_hyperbolic`] exactly.
pub fn evolve_diffusion(
    st: &Spacetime1p1,
    f: &dyn Flux,
    phi: &dyn Viscosity,
    u0: &SliceField,
    t_end: f64,
    cfg: &SchemeConfig,
) -> Result<Trajectory> {
    check_nondecreasing(phi, cfg.c0)?;
    Evolution::new(st, f, Some(phi), u0, t_end, cfg)?.run()
}

struct Evolution<'a> {
    st: &'a Spacetime1p1,
    f: &'a dyn Flux,
    phi: Option<&'a dyn Viscosity>,
    u0: &'a SliceField,
    cfg: SchemeConfig,
    mesh: LeafMesh,
    t0: f64,
    dt: f64,
    n_steps: usize,
    substeps: usize,
}

/// Lattice bounds used to fix the time step: `(min d_u f^t, max Courant speed)`.
fn speed_bounds(st: &Spacetime1p1, f: &dyn Flux, mesh: &LeafMesh, c0: f64, t0: f64, t1: f64) -> (f64, f64) {
    const NU: usize = 65;
    const NT: usize = 65;
    let n = mesh.n_cells();
    let stride = n.div_ceil(256);
    let mut beta = f64::INFINITY;
    let mut speed = 0.0f64;
    for it in 0..NT {
        let t = t0 + (t1 - t0) * it as f64 / (NT - 1) as f64;
        for j in (0..n).step_by(stride) {
            let xc = mesh.center(j);
            let (xl, xr) = (mesh.face(j), mesh.face(j + 1));
            let rho_c = st.lapse(t, xc) * st.scale(t, xc);
            let rho_l = st.lapse(t, xl) * st.scale(t, xl);
            let rho_r = st.lapse(t, xr) * st.scale(t, xr);
            for iu in 0..NU {
                let u = -c0 + 2.0 * c0 * iu as f64 / (NU - 1) as f64;
                let dft = f.du(u, t, xc)[0];
                beta = beta.min(dft);
                let out = (rho_r * f.du(u, t, xr)[1]).max(0.0) - (rho_l * f.du(u, t, xl)[1]).min(0.0);
                speed = speed.max(out / (rho_c * dft));
            }
        }
    }
    (beta, speed)
}

impl<'a> Evolution<'a> {
    fn new(
        st: &'a Spacetime1p1,
        f: &'a dyn Flux,
        phi: Option<&'a dyn Viscosity>,
        u0: &'a SliceField,
        t_end: f64,
        cfg: &SchemeConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let mesh = u0.mesh;
        if mesh.n_cells() != cfg.n_cells {
            return Err(Error::Mismatch(format!(
                "initial slice has {} cells, scheme expects {}",
                mesh.n_cells(),
                cfg.n_cells
            )));
        }
        if (mesh.leaf_length() - st.leaf_length()).abs() > 1e-12 * st.leaf_length() {
            return Err(Error::Mismatch("mesh and spacetime leaf lengths differ".into()));
        }
        st.check_time(u0.t)?;
        st.check_time(t_end)?;
        if !(t_end > u0.t) {
            return Err(Error::InvalidArgument(format!("final time {t_end} must exceed {}", u0.t)));
        }
        let c0 = cfg.c0;
        if u0.sup_abs() > c0 * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "initial data reaches {} beyond the state bound {c0}",
                u0.sup_abs()
            )));
        }
        let (beta, speed) = speed_bounds(st, f, &mesh, c0, u0.t, t_end);
        if !(beta > 0.0) {
            return Err(Error::NonHyperbolic {
                u: f64::NAN,
                t: f64::NAN,
                x: f64::NAN,
                value: beta,
            });
        }
        if !check_timelike(f, st, c0, Lattice::fixed(33, 17, 33)) {
            log::warn!("flux '{}' is not timelike on the state range; continuing", f.name());
        }
        let span = t_end - u0.t;
        let dx = mesh.dx();
        let dt_max = if speed > 0.0 { cfg.cfl * dx / speed } else { span };
        let n_steps = (span / dt_max).ceil().max(1.0) as usize;
        let dt = span / n_steps as f64;

        let mut substeps = 0;
        if let Some(phi) = phi.filter(|p| !p.is_zero()) {
            let lip = phi.lipschitz(c0);
            if lip > 0.0 {
                let (_, _, a_min, _) = st.coefficient_bounds();
                let tau_max = cfg.diffusion_safety * beta * a_min * a_min * dx * dx / (2.0 * lip);
                substeps = (dt / tau_max).ceil().max(1.0) as usize;
            }
        }
        Ok(Evolution {
            st,
            f,
            phi,
            u0,
            cfg: *cfg,
            mesh,
            t0: u0.t,
            dt,
            n_steps,
            substeps,
        })
    }

    /// Engquist-Osher flux `(G(ul) + G(ur)) / 2 - (1/2) int_ul^ur |G'|` for
    /// `G = rho f^x` at the face.
    fn engquist_osher(&self, ul: f64, ur: f64, t: f64, x: f64, rho: f64) -> f64 {
        let g = |u: f64| rho * self.f.spatial(u, t, x);
        let (gl, gr) = (g(ul), g(ur));
        if ul == ur {
            return gl;
        }
        let (lo, hi) = if ul < ur { (ul, ur) } else { (ur, ul) };
        let mut variation = 0.0;
        let mut prev_u = lo;
        let mut prev_g = if ul < ur { gl } else { gr };
        for s in self.f.sonic_points(t, x, lo, hi) {
            let gs = g(s);
            variation += (gs - prev_g).abs();
            prev_u = s;
            prev_g = gs;
        }
        debug_assert!(prev_u <= hi);
        variation += ((if ul < ur { gr } else { gl }) - prev_g).abs();
        // the variation integral runs from ul to ur
        if ul < ur {
            0.5 * (gl + gr) - 0.5 * variation
        } else {
            0.5 * (gl + gr) + 0.5 * variation
        }
    }

    fn clip(&self, u: f64, clipped: &mut usize) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::Numerical(format!("non-finite state {u}")));
        }
        let c0 = self.cfg.c0;
        if u.abs() <= c0 {
            return Ok(u);
        }
        if u.abs() > c0 + 1e-12 * c0.max(1.0) {
            *clipped += 1;
        }
        Ok(u.clamp(-c0, c0))
    }

    fn run(self) -> Result<Trajectory> {
        let n = self.mesh.n_cells();
        let dx = self.mesh.dx();
        let (st, f) = (self.st, self.f);
        let centers: Vec<f64> = self.mesh.centers().collect();
        let faces: Vec<f64> = (0..n).map(|j| self.mesh.face(j)).collect();
        let density = |t: f64, x: f64| st.lapse(t, x) * st.scale(t, x);

        let mut u = self.u0.values.clone();
        let mut slices = vec![self.u0.clone()];
        let mut clipped = 0usize;
        let mut max_courant = 0.0f64;
        let mut rho_c: Vec<f64> = centers.iter().map(|&x| density(self.t0, x)).collect();
        let mut flux = vec![0.0; n];
        let mut w = vec![0.0; n];
        let diffusion = self.phi.filter(|_| self.substeps > 0);
        let mut phi_vals = vec![0.0; if diffusion.is_some() { n } else { 0 }];

        for step in 0..self.n_steps {
            let t = self.t0 + step as f64 * self.dt;
            let t1 = if step + 1 == self.n_steps {
                self.t0 + self.n_steps as f64 * self.dt
            } else {
                self.t0 + (step + 1) as f64 * self.dt
            };
            let ratio = self.dt / dx;

            // flux[j] lives on the left face of cell j
            let rho_f: Vec<f64> = faces.iter().map(|&x| density(t, x)).collect();
            for j in 0..n {
                let left = u[(j + n - 1) % n];
                flux[j] = self.engquist_osher(left, u[j], t, faces[j], rho_f[j]);
            }
            for j in 0..n {
                let jr = (j + 1) % n;
                let out = (rho_f[jr] * f.du(u[j], t, faces[jr])[1]).max(0.0)
                    - (rho_f[j] * f.du(u[j], t, faces[j])[1]).min(0.0);
                let courant = ratio * out / (rho_c[j] * f.du(u[j], t, centers[j])[0]);
                max_courant = max_courant.max(courant);
                w[j] = rho_c[j] * f.temporal(u[j], t, centers[j]) - ratio * (flux[jr] - flux[j]);
            }
            if max_courant > 1.0 + 1e-9 {
                return Err(Error::Cfl(format!(
                    "Courant number {max_courant:.6} exceeds 1 at t = {t}; lower the cfl factor"
                )));
            }
            for (j, rho) in rho_c.iter_mut().enumerate() {
                *rho = density(t1, centers[j]);
            }
            for j in 0..n {
                let v = f.invert_temporal(w[j] / rho_c[j], t1, centers[j], u[j])?;
                u[j] = self.clip(v, &mut clipped)?;
            }

            if let Some(phi) = diffusion {
                let tau = self.dt / self.substeps as f64;
                let lapse: Vec<f64> = centers.iter().map(|&x| st.lapse(t1, x)).collect();
                let inv_scale_face: Vec<f64> = faces.iter().map(|&x| 1.0 / st.scale(t1, x)).collect();
                for _ in 0..self.substeps {
                    for (p, &v) in phi_vals.iter_mut().zip(&u) {
                        *p = phi.value(v);
                    }
                    for j in 0..n {
                        let jr = (j + 1) % n;
                        let jl = (j + n - 1) % n;
                        let lap = (phi_vals[jr] - phi_vals[j]) * inv_scale_face[jr]
                            - (phi_vals[j] - phi_vals[jl]) * inv_scale_face[j];
                        w[j] = rho_c[j] * f.temporal(u[j], t1, centers[j]) + tau * lapse[j] * lap / (dx * dx);
                    }
                    for j in 0..n {
                        let v = f.invert_temporal(w[j] / rho_c[j], t1, centers[j], u[j])?;
                        u[j] = self.clip(v, &mut clipped)?;
                    }
                }
            }

            if (step + 1) % self.cfg.snapshot_stride == 0 || step + 1 == self.n_steps {
                slices.push(SliceField {
                    t: t1,
                    mesh: self.mesh,
                    values: u.clone(),
                });
            }
        }
        if clipped > 0 {
            log::warn!("{clipped} cell update(s) clipped into [-{0}, {0}]", self.cfg.c0);
        }
        Ok(Trajectory {
            slices,
            mesh: self.mesh,
            dt: self.dt,
            n_steps: self.n_steps,
            max_courant,
            flux_name: f.name(),
            viscosity_name: self.phi.map(|p| p.name()),
            clipped,
            diffusion_substeps: self.substeps * self.n_steps,
        })
    }
}
