use super::{Trajectory, Viscosity};
use crate::error::{Error, Result};
use crate::flux::{flux_gap, Flux, Lattice};
use crate::geometry::Spacetime1p1;

/// Which approximation the error measures describe.
#[derive(Debug, Clone, Copy)]
pub enum ErrorFamily<'a> {
    /// `u` solves the nonlinear diffusion model with this `phi`.
    Viscosity(&'a dyn Viscosity),
    /// `u` solves the conservation law with this perturbed flux.
    FluxPerturbation(&'a dyn Flux),
}

/// Discrete error measures, stored per slice as cell masses with respect to
/// the leaf volume `dV_{g^t}` (per unit time).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMeasures {
    pub times: Vec<f64>,
    pub alpha_h: Vec<Vec<f64>>,
    pub alpha_k: Vec<Vec<f64>>,
    pub alpha_l: Vec<Vec<f64>>,
    /// Uniform bound on the diffusion coefficients `a_k` and their gradients.
    pub alpha_a: f64,
    /// Gap constant `Q` of the family.
    pub q: f64,
    /// `Lip phi` for the viscosity family, zero otherwise.
    pub lipschitz: f64,
}

impl ErrorMeasures {
    /// Left-endpoint weights of the slice times: slice `n` stands for
    /// `[t_n, t_{n+1})`, the last slice for nothing.
    pub fn time_weights(&self) -> Vec<f64> {
        let n = self.times.len();
        (0..n)
            .map(|i| if i + 1 < n { self.times[i + 1] - self.times[i] } else { 0.0 })
            .collect()
    }

    /// `int_0^T int_{H_t} alpha dV_{g^t} dt` for one of the stored fields.
    pub fn space_time_mass(&self, field: &[Vec<f64>]) -> f64 {
        self.time_weights()
            .iter()
            .zip(field)
            .map(|(w, row)| w * row.iter().sum::<f64>())
            .sum()
    }

    /// `int_{H_0 u H_T} alpha dV_{g^t}`.
    pub fn boundary_mass(&self, field: &[Vec<f64>]) -> f64 {
        match (field.first(), field.last()) {
            (Some(a), Some(b)) if field.len() > 1 => a.iter().sum::<f64>() + b.iter().sum::<f64>(),
            (Some(a), _) => 2.0 * a.iter().sum::<f64>(),
            _ => 0.0,
        }
    }
}

/// Splits interface masses `m_{j+1/2}` (face `j + 1` of cell `j`) evenly
/// between the two neighbouring cells.
fn faces_to_cells(face_mass: &[f64]) -> Vec<f64> {
    let n = face_mass.len();
    (0..n)
        .map(|j| 0.5 * (face_mass[j] + face_mass[(j + n - 1) % n]))
        .collect()
}

/// Builds `(alpha_H, alpha_K, alpha_L, alpha_a)` for a trajectory `traj` of
/// the approximate problem, relative to the exact flux `f`.
///
/// Viscosity family: `alpha_H = Lip phi |D u|` (interface jumps),
/// `alpha_L = Q |u|`, `alpha_K = 0`, `alpha_a = 1`.
/// Flux perturbation: `alpha_H = Q |u|`, `alpha_K = |d_u (f - f~)| |D u|`
/// realised as `lapse scale |(f - f~)^x(u_{j+1}) - (f - f~)^x(u_j)|` per
/// interface, `alpha_L = 0`.
pub fn extract_error_measures(
    family: ErrorFamily<'_>,
    traj: &Trajectory,
    f: &dyn Flux,
    st: &Spacetime1p1,
    c0: f64,
) -> Result<ErrorMeasures> {
    if traj.flux_name != f.name() && !matches!(family, ErrorFamily::FluxPerturbation(_)) {
        return Err(Error::Mismatch(format!(
            "trajectory was computed with flux '{}', measures requested for '{}'",
            traj.flux_name,
            f.name()
        )));
    }
    let mesh = traj.mesh;
    let n = mesh.n_cells();
    let dx = mesh.dx();
    let centers: Vec<f64> = mesh.centers().collect();
    let times = traj.times();
    let zeros = vec![vec![0.0; n]; times.len()];

    match family {
        ErrorFamily::Viscosity(phi) => {
            if traj.viscosity_name.as_deref() != Some(phi.name().as_str()) {
                return Err(Error::Mismatch(format!(
                    "trajectory viscosity {:?} does not match '{}'",
                    traj.viscosity_name,
                    phi.name()
                )));
            }
            let lip = phi.lipschitz(c0);
            let q = phi.gap(c0);
            let mut alpha_h = Vec::with_capacity(times.len());
            let mut alpha_l = Vec::with_capacity(times.len());
            for s in &traj.slices {
                let jumps: Vec<f64> = (0..n).map(|j| lip * (s.values[(j + 1) % n] - s.values[j]).abs()).collect();
                alpha_h.push(faces_to_cells(&jumps));
                alpha_l.push(
                    (0..n)
                        .map(|j| q * s.values[j].abs() * st.scale(s.t, centers[j]) * dx)
                        .collect(),
                );
            }
            Ok(ErrorMeasures {
                times,
                alpha_h,
                alpha_k: zeros,
                alpha_l,
                alpha_a: 1.0,
                q,
                lipschitz: lip,
            })
        }
        ErrorFamily::FluxPerturbation(perturbed) => {
            if traj.flux_name != perturbed.name() {
                return Err(Error::Mismatch(format!(
                    "trajectory was computed with flux '{}', not the perturbed flux '{}'",
                    traj.flux_name,
                    perturbed.name()
                )));
            }
            let q = flux_gap(f, perturbed, st, c0, Lattice::fixed(64, 17, 32))?;
            let mut alpha_h = Vec::with_capacity(times.len());
            let mut alpha_k = Vec::with_capacity(times.len());
            for s in &traj.slices {
                let t = s.t;
                alpha_h.push(
                    (0..n)
                        .map(|j| q * s.values[j].abs() * st.scale(t, centers[j]) * dx)
                        .collect(),
                );
                let face_mass: Vec<f64> = (0..n)
                    .map(|j| {
                        let x = mesh.face(j + 1);
                        let gap = |u: f64| f.spatial(u, t, x) - perturbed.spatial(u, t, x);
                        let (ul, ur) = (s.values[j], s.values[(j + 1) % n]);
                        st.lapse(t, x) * st.scale(t, x) * (gap(ur) - gap(ul)).abs()
                    })
                    .collect();
                alpha_k.push(faces_to_cells(&face_mass));
            }
            Ok(ErrorMeasures {
                times,
                alpha_h,
                alpha_k,
                alpha_l: zeros,
                alpha_a: 0.0,
                q,
                lipschitz: 0.0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{StateFn, Term, TermFlux};
    use crate::geometry::LeafMesh;
    use crate::solver::{LinearViscosity, SliceField};

    fn fake_trajectory(values: Vec<Vec<f64>>, flux: &str, viscosity: Option<String>) -> Trajectory {
        let mesh = LeafMesh::new(values[0].len(), 1.0).unwrap();
        let slices: Vec<SliceField> = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| SliceField::new(0.1 * i as f64, mesh, v).unwrap())
            .collect();
        Trajectory {
            n_steps: slices.len() - 1,
            slices,
            mesh,
            dt: 0.1,
            max_courant: 0.0,
            flux_name: flux.into(),
            viscosity_name: viscosity,
            clipped: 0,
            diffusion_substeps: 0,
        }
    }

    #[test]
    fn viscosity_on_constant_state() {
        let st = Spacetime1p1::minkowski(1.0, 1.0);
        let phi = LinearViscosity { eps: 0.01 };
        let traj = fake_trajectory(vec![vec![0.4; 10]; 3], "burgers", Some(phi.name()));
        let m = extract_error_measures(ErrorFamily::Viscosity(&phi), &traj, &TermFlux::burgers(), &st, 1.0).unwrap();
        assert!(m.alpha_h.iter().flatten().all(|v| *v == 0.0));
        for v in m.alpha_l.iter().flatten() {
            assert!((v - 0.01 * 0.4 * 0.1).abs() < 1e-17);
        }
        assert_eq!(m.alpha_a, 1.0);
    }

    #[test]
    fn viscosity_jump_mass_is_mesh_independent() {
        let st = Spacetime1p1::minkowski(1.0, 1.0);
        let phi = LinearViscosity { eps: 0.01 };
        for n in [8, 64, 512] {
            let mut step = vec![0.0; n];
            step[..n / 2].fill(1.0);
            step[n / 2] = 0.5;
            // a single up-jump of height one spread over two faces plus the
            // periodic return jump: half the TV is one jump
            let traj = fake_trajectory(vec![step], "burgers", Some(phi.name()));
            let m = extract_error_measures(ErrorFamily::Viscosity(&phi), &traj, &TermFlux::burgers(), &st, 1.0).unwrap();
            let mass: f64 = m.alpha_h[0].iter().sum();
            assert!((mass - 0.01 * 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_flux_gives_zero_measures() {
        let st = Spacetime1p1::minkowski(1.0, 1.0);
        let f = TermFlux::burgers();
        let traj = fake_trajectory(vec![vec![0.1, 0.5, -0.3, 0.2]; 2], "burgers", None);
        let m = extract_error_measures(ErrorFamily::FluxPerturbation(&f), &traj, &f, &st, 1.0).unwrap();
        assert!(m.alpha_h.iter().chain(&m.alpha_k).chain(&m.alpha_l).flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn perturbation_measures() {
        let st = Spacetime1p1::minkowski(1.0, 1.0);
        let f = TermFlux::burgers();
        let g = TermFlux::burgers().with_spatial_term(Term::plain(StateFn::Linear(0.02)), "burgers+eta");
        let traj = fake_trajectory(vec![vec![1.0, 1.0, 0.0, 0.0]], "burgers+eta", None);
        let m = extract_error_measures(ErrorFamily::FluxPerturbation(&g), &traj, &f, &st, 1.0).unwrap();
        assert!((m.q - 0.02).abs() < 1e-15);
        assert!((m.alpha_k[0].iter().sum::<f64>() - 0.02 * 2.0).abs() < 1e-15);
        assert!((m.alpha_h[0].iter().sum::<f64>() - 0.02 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn mismatch_rejected() {
        let st = Spacetime1p1::minkowski(1.0, 1.0);
        let phi = LinearViscosity { eps: 0.01 };
        let traj = fake_trajectory(vec![vec![0.0; 4]], "burgers", None);
        assert!(matches!(
            extract_error_measures(ErrorFamily::Viscosity(&phi), &traj, &TermFlux::burgers(), &st, 1.0),
            Err(Error::Mismatch(_))
        ));
        let g = TermFlux::advection(0.5);
        assert!(matches!(
            extract_error_measures(ErrorFamily::FluxPerturbation(&g), &traj, &TermFlux::burgers(), &st, 1.0),
            Err(Error::Mismatch(_))
        ));
    }
}
