use std::sync::Arc;

use super::Flux;
use crate::geometry::{Point, Spacetime1p1};

/// One-form flux `omega(u) = omega_t dt + omega_x dx`, dual to a vector flux
/// through `omega = i_f dV_g`.
#[derive(Debug, Clone)]
pub struct FormFlux {
    flux: Arc<dyn Flux>,
    st: Spacetime1p1,
}

/// Builds the dual form: `omega_x = lapse * scale * f^t`, `omega_t = -lapse * scale * f^x`.
pub fn form_from_vector(f: Arc<dyn Flux>, st: &Spacetime1p1) -> FormFlux {
    FormFlux { flux: f, st: st.clone() }
}

impl FormFlux {
    pub fn flux(&self) -> &Arc<dyn Flux> {
        &self.flux
    }

    pub fn spacetime(&self) -> &Spacetime1p1 {
        &self.st
    }

    /// `[omega_t, omega_x]` at state `u`.
    pub fn components(&self, u: f64, p: Point) -> [f64; 2] {
        let rho = self.st.lapse(p.t, p.x) * self.st.scale(p.t, p.x);
        let [ft, fx] = self.flux.value(u, p.t, p.x);
        [-rho * fx, rho * ft]
    }

    /// `[d_u omega_t, d_u omega_x]`.
    pub fn du(&self, u: f64, p: Point) -> [f64; 2] {
        let rho = self.st.lapse(p.t, p.x) * self.st.scale(p.t, p.x);
        let [ft, fx] = self.flux.du(u, p.t, p.x);
        [-rho * fx, rho * ft]
    }

    /// Coefficient of `dt ^ dx` in `d(omega(u))` for the constant state `u`,
    /// i.e. `d_t omega_x - d_x omega_t`.
    pub fn exterior_derivative(&self, u: f64, p: Point) -> f64 {
        let m = self.st.jet(p);
        let j = self.flux.jet(u, p.t, p.x);
        let rho = m.density();
        let rho_t = m.lapse_t * m.scale + m.lapse * m.scale_t;
        let rho_x = m.lapse_x * m.scale + m.lapse * m.scale_x;
        let d_t_omega_x = rho_t * j.temporal.v + rho * j.temporal.t;
        let d_x_omega_t = -(rho_x * j.spatial.v + rho * j.spatial.x);
        d_t_omega_x - d_x_omega_t
    }

    /// `d_u` of the `dt ^ dx` coefficient of `d(omega(u))`.
    pub fn exterior_derivative_du(&self, u: f64, p: Point) -> f64 {
        let m = self.st.jet(p);
        let j = self.flux.jet(u, p.t, p.x);
        let rho = m.density();
        let rho_t = m.lapse_t * m.scale + m.lapse * m.scale_t;
        let rho_x = m.lapse_x * m.scale + m.lapse * m.scale_x;
        rho_t * j.temporal.u + rho * j.temporal.ut + rho_x * j.spatial.u + rho * j.spatial.ux
    }

    /// Recovers the vector components `[f^t, f^x]` from form components.
    pub fn to_vector(&self, omega: [f64; 2], p: Point) -> [f64; 2] {
        let rho = self.st.lapse(p.t, p.x) * self.st.scale(p.t, p.x);
        [omega[1] / rho, -omega[0] / rho]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{divergence_at, Coef, StateFn, Term, TermFlux};
    use crate::geometry::{Flrw, Warped};
    use proptest::prelude::*;

    #[test]
    fn minkowski_burgers_form() {
        let st = Spacetime1p1::minkowski(1.0, 1.0);
        let w = form_from_vector(Arc::new(TermFlux::burgers()), &st);
        let p = Point::new(0.2, 0.3);
        assert_eq!(w.components(0.6, p), [-0.18, 0.6]);
        assert_eq!(w.components(0.0, p), [0.0, 0.0]);
    }

    #[test]
    fn flrw_compatible_form_is_closed() {
        let st = Spacetime1p1::new(0.0, 1.0, 1.0, Arc::new(Flrw::default())).unwrap();
        let f = TermFlux::new(
            "decaying",
            vec![Term::new(StateFn::Linear(1.0), Coef::Exp { scale: 1.0, rate: -1.0 })],
            vec![],
        );
        let w = form_from_vector(Arc::new(f), &st);
        for &(t, u) in &[(0.0, 0.3), (0.5, -0.7), (1.0, 0.9)] {
            let p = Point::new(t, 0.4);
            let c = w.components(u, p);
            assert!((c[1] - u).abs() < 1e-15);
            assert_eq!(c[0], 0.0);
            assert!(w.exterior_derivative(u, p).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_duality(u in -1.0f64..1.0, t in 0.0f64..1.0, x in 0.0f64..1.0) {
            let st = Spacetime1p1::new(0.0, 1.0, 1.0, Arc::new(Warped { amp: 0.5, leaf_length: 1.0 })).unwrap();
            let f: Arc<dyn Flux> = Arc::new(TermFlux::new(
                "warped-test",
                vec![Term::new(StateFn::Cubic(1.0), Coef::Trig { base: 1.0, amp: 0.2, kt: 1.0, kx: std::f64::consts::TAU, phase: 0.0 }),
                     Term::plain(StateFn::Linear(1.0))],
                vec![Term::plain(StateFn::Sine(1.0))],
            ));
            let w = form_from_vector(f.clone(), &st);
            let p = Point::new(t, x);
            let back = w.to_vector(w.components(u, p), p);
            let orig = f.value(u, t, x);
            prop_assert!((back[0] - orig[0]).abs() <= 1e-14 * (1.0 + orig[0].abs()));
            prop_assert!((back[1] - orig[1]).abs() <= 1e-14 * (1.0 + orig[1].abs()));
            let rho = st.lapse(t, x) * st.scale(t, x);
            let lhs = w.exterior_derivative(u, p);
            let rhs = divergence_at(f.as_ref(), &st, u, p) * rho;
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }
    }
}
