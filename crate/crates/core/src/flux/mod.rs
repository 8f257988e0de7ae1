//! Flux fields of the conservation law.
//!
//! A [`Flux`] is the vector field `f(u) = f^t(u; t, x) d/dt + f^x(u; t, x) d/dx`
//! given in coordinate components, together with the analytic partial
//! derivatives the divergence and Lipschitz constants need. The dual one-form
//! flux lives in [`form`], diagnostic constants in [`constants`], entropy
//! pairs in [`entropy`].

pub mod constants;
pub mod entropy;
pub mod form;

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::Spacetime1p1;

pub use constants::{
    check_geometry_compatible, check_timelike, divergence, divergence_at, flux_gap, hyperbolicity_constants,
    lambda_constants, state_lipschitz, CompatibilityReport, HyperbolicityReport, LambdaConstants, Lattice,
};
pub use entropy::{kruzkov_flux, sgn, Entropy, EntropyPair, IdentityEntropy, KruzkovEntropy, QuadraticEntropy};
pub use form::{form_from_vector, FormFlux};

/// Value and partial derivatives of one flux component.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Partials {
    pub v: f64,
    pub u: f64,
    pub t: f64,
    pub x: f64,
    pub ut: f64,
    pub ux: f64,
    pub tt: f64,
    pub tx: f64,
    pub xx: f64,
}

impl std::ops::Add for Partials {
    type Output = Partials;
    fn add(self, o: Partials) -> Partials {
        Partials {
            v: self.v + o.v,
            u: self.u + o.u,
            t: self.t + o.t,
            x: self.x + o.x,
            ut: self.ut + o.ut,
            ux: self.ux + o.ux,
            tt: self.tt + o.tt,
            tx: self.tx + o.tx,
            xx: self.xx + o.xx,
        }
    }
}

/// Both components of the flux with their partials at `(u; t, x)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FluxJet {
    pub temporal: Partials,
    pub spatial: Partials,
}

pub trait Flux: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn jet(&self, u: f64, t: f64, x: f64) -> FluxJet;

    /// Components `[f^t, f^x]`.
    fn value(&self, u: f64, t: f64, x: f64) -> [f64; 2] {
        let j = self.jet(u, t, x);
        [j.temporal.v, j.spatial.v]
    }

    /// `f^t` alone.
    fn temporal(&self, u: f64, t: f64, x: f64) -> f64 {
        self.value(u, t, x)[0]
    }

    /// `f^x` alone.
    fn spatial(&self, u: f64, t: f64, x: f64) -> f64 {
        self.value(u, t, x)[1]
    }

    /// `[d_u f^t, d_u f^x]`.
    fn du(&self, u: f64, t: f64, x: f64) -> [f64; 2] {
        let j = self.jet(u, t, x);
        [j.temporal.u, j.spatial.u]
    }

    /// States in `[lo, hi]` where `d_u f^x` changes sign. The default
    /// brackets sign changes on 64 samples and bisects them.
    fn sonic_points(&self, t: f64, x: f64, lo: f64, hi: f64) -> Vec<f64> {
        const N: usize = 64;
        let g = |u: f64| self.du(u, t, x)[1];
        let mut out = Vec::new();
        let mut a = lo;
        let mut ga = g(a);
        for i in 1..=N {
            let b = lo + (hi - lo) * i as f64 / N as f64;
            let gb = g(b);
            if ga == 0.0 {
                out.push(a);
            } else if ga * gb < 0.0 {
                let (mut l, mut r) = (a, b);
                for _ in 0..80 {
                    let m = 0.5 * (l + r);
                    if g(m) * ga > 0.0 {
                        l = m;
                    } else {
                        r = m;
                    }
                }
                out.push(0.5 * (l + r));
            }
            a = b;
            ga = gb;
        }
        out
    }

    /// Solves `f^t(u; t, x) = target` for `u`. `f^t` must be strictly
    /// increasing in `u`; `guess` seeds a safeguarded Newton iteration.
    fn invert_temporal(&self, target: f64, t: f64, x: f64, guess: f64) -> Result<f64> {
        invert_monotone(|u| {
            let j = self.jet(u, t, x);
            (j.temporal.v - target, j.temporal.u)
        }, guess)
    }
}

/// Newton iteration with bisection fallback for an increasing function given
/// as `u -> (value, derivative)`. Converges to `|du| <= 1e-13 (1 + |u|)`.
pub(crate) fn invert_monotone(f: impl Fn(f64) -> (f64, f64), guess: f64) -> Result<f64> {
    let (mut lo, mut hi) = (guess - 1.0, guess + 1.0);
    let mut step = 1.0;
    let mut expansions = 0;
    while f(lo).0 > 0.0 {
        step *= 2.0;
        lo = guess - step;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Numerical("cannot bracket inverse of temporal flux".into()));
        }
    }
    step = 1.0;
    while f(hi).0 < 0.0 {
        step *= 2.0;
        hi = guess + step;
        expansions += 1;
        if expansions > 120 {
            return Err(Error::Numerical("cannot bracket inverse of temporal flux".into()));
        }
    }
    let mut u = guess.clamp(lo, hi);
    for _ in 0..200 {
        let (r, d) = f(u);
        if r == 0.0 {
            return Ok(u);
        }
        if r > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let mut next = if d > 0.0 { u - r / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-13 * (1.0 + u.abs()) {
            return Ok(next);
        }
        u = next;
    }
    if (hi - lo) <= 1e-10 * (1.0 + u.abs()) {
        Ok(u)
    } else {
        Err(Error::Numerical("inverse of temporal flux did not converge".into()))
    }
}

/// Scalar state profiles used to assemble [`TermFlux`] components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateFn {
    /// `c`
    Constant(f64),
    /// `c u`
    Linear(f64),
    /// `c u^2 / 2`
    Quadratic(f64),
    /// `c u^3 / 3`
    Cubic(f64),
    /// `c sin(u)`
    Sine(f64),
}

impl StateFn {
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            StateFn::Constant(c) => c,
            StateFn::Linear(c) => c * u,
            StateFn::Quadratic(c) => 0.5 * c * u * u,
            StateFn::Cubic(c) => c * u * u * u / 3.0,
            StateFn::Sine(c) => c * u.sin(),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            StateFn::Constant(_) => 0.0,
            StateFn::Linear(c) => c,
            StateFn::Quadratic(c) => c * u,
            StateFn::Cubic(c) => c * u * u,
            StateFn::Sine(c) => c * u.cos(),
        }
    }

    /// Coefficients `(u^0, u^1, u^2)` of the derivative when it is polynomial.
    fn derivative_poly(&self) -> Option<[f64; 3]> {
        match *self {
            StateFn::Constant(_) => Some([0.0; 3]),
            StateFn::Linear(c) => Some([c, 0.0, 0.0]),
            StateFn::Quadratic(c) => Some([0.0, c, 0.0]),
            StateFn::Cubic(c) => Some([0.0, 0.0, c]),
            StateFn::Sine(_) => None,
        }
    }
}

/// Space-time coefficient multiplying a [`StateFn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coef {
    /// `base + amp sin(kt t + kx x + phase)`
    Trig { base: f64, amp: f64, kt: f64, kx: f64, phase: f64 },
    /// `scale exp(rate t)`
    Exp { scale: f64, rate: f64 },
}

impl Coef {
    pub const ONE: Coef = Coef::Trig {
        base: 1.0,
        amp: 0.0,
        kt: 0.0,
        kx: 0.0,
        phase: 0.0,
    };

    pub fn constant(c: f64) -> Coef {
        Coef::Trig {
            base: c,
            amp: 0.0,
            kt: 0.0,
            kx: 0.0,
            phase: 0.0,
        }
    }

    /// `(v, t, x, tt, tx, xx)`
    pub fn jet(&self, t: f64, x: f64) -> [f64; 6] {
        match *self {
            Coef::Trig { base, amp, kt, kx, phase } => {
                if amp == 0.0 {
                    return [base, 0.0, 0.0, 0.0, 0.0, 0.0];
                }
                let (s, c) = (kt * t + kx * x + phase).sin_cos();
                [
                    base + amp * s,
                    amp * kt * c,
                    amp * kx * c,
                    -amp * kt * kt * s,
                    -amp * kt * kx * s,
                    -amp * kx * kx * s,
                ]
            }
            Coef::Exp { scale, rate } => {
                let v = scale * (rate * t).exp();
                [v, rate * v, 0.0, rate * rate * v, 0.0, 0.0]
            }
        }
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        match *self {
            Coef::Trig { base, amp, kt, kx, phase } => {
                if amp == 0.0 {
                    base
                } else {
                    base + amp * (kt * t + kx * x + phase).sin()
                }
            }
            Coef::Exp { scale, rate } => scale * (rate * t).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub state: StateFn,
    pub coef: Coef,
}

impl Term {
    pub fn new(state: StateFn, coef: Coef) -> Self {
        Term { state, coef }
    }

    pub fn plain(state: StateFn) -> Self {
        Term { state, coef: Coef::ONE }
    }

    fn partials(&self, u: f64, t: f64, x: f64) -> Partials {
        let s = self.state.value(u);
        let ds = self.state.derivative(u);
        let [c, ct, cx, ctt, ctx, cxx] = self.coef.jet(t, x);
        Partials {
            v: s * c,
            u: ds * c,
            t: s * ct,
            x: s * cx,
            ut: ds * ct,
            ux: ds * cx,
            tt: s * ctt,
            tx: s * ctx,
            xx: s * cxx,
        }
    }
}

/// Flux whose components are finite sums of `state(u) * coef(t, x)` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct TermFlux {
    pub name: String,
    pub temporal: Vec<Term>,
    pub spatial: Vec<Term>,
}

impl TermFlux {
    pub fn new(name: impl Into<String>, temporal: Vec<Term>, spatial: Vec<Term>) -> Self {
        TermFlux {
            name: name.into(),
            temporal,
            spatial,
        }
    }

    /// `(u, u^2 / 2)`
    pub fn burgers() -> Self {
        TermFlux::new(
            "burgers",
            vec![Term::plain(StateFn::Linear(1.0))],
            vec![Term::plain(StateFn::Quadratic(1.0))],
        )
    }

    /// `(u, c u)`
    pub fn advection(c: f64) -> Self {
        TermFlux::new(
            "advection",
            vec![Term::plain(StateFn::Linear(1.0))],
            vec![Term::plain(StateFn::Linear(c))],
        )
    }

    /// `(u e^{-rate t}, u^2/2 e^{-rate t})`, divergence free on the
    /// expanding metric with the same rate.
    pub fn flrw_compatible(rate: f64) -> Self {
        let c = Coef::Exp { scale: 1.0, rate: -rate };
        TermFlux::new(
            "flrw-compatible",
            vec![Term::new(StateFn::Linear(1.0), c)],
            vec![Term::new(StateFn::Quadratic(1.0), c)],
        )
    }

    /// `(u, u^3 / 3)`
    pub fn cubic() -> Self {
        TermFlux::new(
            "cubic",
            vec![Term::plain(StateFn::Linear(1.0))],
            vec![Term::plain(StateFn::Cubic(1.0))],
        )
    }

    /// Adds a term to the spatial component, e.g. `(0, eta u)`.
    pub fn with_spatial_term(mut self, term: Term, name: impl Into<String>) -> Self {
        self.spatial.push(term);
        self.name = name.into();
        self
    }

    fn sum(terms: &[Term], u: f64, t: f64, x: f64) -> Partials {
        terms
            .iter()
            .fold(Partials::default(), |acc, term| acc + term.partials(u, t, x))
    }

    fn sum_value(terms: &[Term], u: f64, t: f64, x: f64) -> f64 {
        terms.iter().map(|term| term.state.value(u) * term.coef.value(t, x)).sum()
    }

    fn sum_du(terms: &[Term], u: f64, t: f64, x: f64) -> f64 {
        terms.iter().map(|term| term.state.derivative(u) * term.coef.value(t, x)).sum()
    }
}

impl Flux for TermFlux {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn jet(&self, u: f64, t: f64, x: f64) -> FluxJet {
        FluxJet {
            temporal: TermFlux::sum(&self.temporal, u, t, x),
            spatial: TermFlux::sum(&self.spatial, u, t, x),
        }
    }

    fn value(&self, u: f64, t: f64, x: f64) -> [f64; 2] {
        [
            TermFlux::sum_value(&self.temporal, u, t, x),
            TermFlux::sum_value(&self.spatial, u, t, x),
        ]
    }

    fn temporal(&self, u: f64, t: f64, x: f64) -> f64 {
        TermFlux::sum_value(&self.temporal, u, t, x)
    }

    fn spatial(&self, u: f64, t: f64, x: f64) -> f64 {
        TermFlux::sum_value(&self.spatial, u, t, x)
    }

    fn du(&self, u: f64, t: f64, x: f64) -> [f64; 2] {
        [
            TermFlux::sum_du(&self.temporal, u, t, x),
            TermFlux::sum_du(&self.spatial, u, t, x),
        ]
    }

    fn sonic_points(&self, t: f64, x: f64, lo: f64, hi: f64) -> Vec<f64> {
        let mut poly = [0.0; 3];
        for term in &self.spatial {
            let Some(p) = term.state.derivative_poly() else {
                return default_sonic_points(self, t, x, lo, hi);
            };
            let c = term.coef.value(t, x);
            for k in 0..3 {
                poly[k] += c * p[k];
            }
        }
        let [c0, c1, c2] = poly;
        let mut roots = Vec::new();
        if c2 != 0.0 {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc >= 0.0 {
                let s = disc.sqrt();
                roots.push((-c1 - s) / (2.0 * c2));
                roots.push((-c1 + s) / (2.0 * c2));
            }
        } else if c1 != 0.0 {
            roots.push(-c0 / c1);
        }
        roots.retain(|r| *r > lo && *r < hi);
        roots.sort_by(f64::total_cmp);
        roots.dedup();
        roots
    }

    fn invert_temporal(&self, target: f64, t: f64, x: f64, guess: f64) -> Result<f64> {
        if self
            .temporal
            .iter()
            .all(|term| matches!(term.state, StateFn::Linear(_)))
        {
            let slope = TermFlux::sum_du(&self.temporal, 0.0, t, x);
            if slope > 0.0 {
                return Ok(target / slope);
            }
        }
        invert_monotone(
            |u| {
                (
                    TermFlux::sum_value(&self.temporal, u, t, x) - target,
                    TermFlux::sum_du(&self.temporal, u, t, x),
                )
            },
            guess,
        )
    }
}

fn default_sonic_points(f: &TermFlux, t: f64, x: f64, lo: f64, hi: f64) -> Vec<f64> {
    #[derive(Debug)]
    struct Sampled<'a>(&'a TermFlux);
    impl Flux for Sampled<'_> {
        fn name(&self) -> String {
            self.0.name()
        }
        fn jet(&self, u: f64, t: f64, x: f64) -> FluxJet {
            self.0.jet(u, t, x)
        }
    }
    Sampled(f).sonic_points(t, x, lo, hi)
}

/// Flux presets addressable by name: "burgers", "advection" (param `c`),
/// "flrw-compatible" (param `rate`), "cubic".
pub fn flux_preset(name: &str, param: impl Fn(&str) -> Option<f64>) -> Result<TermFlux> {
    match name {
        "burgers" => Ok(TermFlux::burgers()),
        "advection" => Ok(TermFlux::advection(param("c").unwrap_or(1.0))),
        "flrw-compatible" => Ok(TermFlux::flrw_compatible(param("rate").unwrap_or(1.0))),
        "cubic" => Ok(TermFlux::cubic()),
        other => Err(Error::UnknownPreset(format!("flux '{other}'"))),
    }
}

/// Vector `f(u) - g(u)` norm under the companion metric at `(t, x)`.
pub(crate) fn companion_norm(st: &Spacetime1p1, t: f64, x: f64, v: [f64; 2]) -> f64 {
    let l = st.lapse(t, x);
    let a = st.scale(t, x);
    ((l * v[0]).powi(2) + (a * v[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let h = 1e-5;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn term_partials_match_finite_differences() {
        let f = TermFlux::new(
            "mixed",
            vec![Term::new(
                StateFn::Cubic(0.5),
                Coef::Trig { base: 2.0, amp: 0.3, kt: 1.3, kx: 6.0, phase: 0.2 },
            )],
            vec![
                Term::new(StateFn::Sine(0.7), Coef::Exp { scale: 1.5, rate: -0.8 }),
                Term::plain(StateFn::Quadratic(1.0)),
            ],
        );
        let (u, t, x) = (0.4, 0.3, 0.7);
        let j = f.jet(u, t, x);
        assert!((fd(|u| f.value(u, t, x)[0], u) - j.temporal.u).abs() < 1e-8);
        assert!((fd(|t| f.value(u, t, x)[1], t) - j.spatial.t).abs() < 1e-8);
        assert!((fd(|x| f.value(u, t, x)[0], x) - j.temporal.x).abs() < 1e-7);
        assert!((fd(|t| f.jet(u, t, x).temporal.x, t) - j.temporal.tx).abs() < 1e-6);
        assert!((fd(|x| f.jet(u, t, x).temporal.x, x) - j.temporal.xx).abs() < 1e-5);
        assert!((fd(|u| f.jet(u, t, x).spatial.t, u) - j.spatial.ut).abs() < 1e-8);
        assert!((fd(|t| f.jet(u, t, x).spatial.t, t) - j.spatial.tt).abs() < 1e-7);
    }

    #[test]
    fn burgers_sonic_point_is_zero() {
        let f = TermFlux::burgers();
        assert_eq!(f.sonic_points(0.0, 0.0, -1.0, 1.0), vec![0.0]);
        assert!(f.sonic_points(0.0, 0.0, 0.1, 1.0).is_empty());
        let shifted = TermFlux::burgers().with_spatial_term(Term::plain(StateFn::Linear(0.04)), "shifted");
        let s = shifted.sonic_points(0.0, 0.0, -1.0, 1.0);
        assert_eq!(s.len(), 1);
        assert!((s[0] + 0.04).abs() < 1e-15);
    }

    #[test]
    fn sampled_sonic_points_for_sine() {
        let f = TermFlux::new(
            "sine",
            vec![Term::plain(StateFn::Linear(1.0))],
            vec![Term::plain(StateFn::Sine(1.0))],
        );
        let s = f.sonic_points(0.0, 0.0, -2.0, 2.0);
        assert_eq!(s.len(), 2);
        assert!((s[0] + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((s[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn presets_resolve() {
        assert!(flux_preset("burgers", |_| None).is_ok());
        assert_eq!(flux_preset("advection", |_| Some(2.0)).unwrap().value(1.0, 0.0, 0.0), [1.0, 2.0]);
        assert!(matches!(flux_preset("nope", |_| None), Err(Error::UnknownPreset(_))));
    }

    proptest! {
        #[test]
        fn inversion_recovers_state(u in -1.0f64..1.0, t in 0.0f64..1.0, x in 0.0f64..1.0) {
            let f = TermFlux::new(
                "nonlinear-temporal",
                vec![Term::plain(StateFn::Linear(1.0)), Term::plain(StateFn::Cubic(1.0))],
                vec![Term::plain(StateFn::Quadratic(1.0))],
            );
            let w = f.value(u, t, x)[0];
            let back = f.invert_temporal(w, t, x, 0.0).unwrap();
            prop_assert!((back - u).abs() < 1e-12);
            let g = TermFlux::flrw_compatible(1.0);
            let w = g.value(u, t, x)[0];
            prop_assert!((g.invert_temporal(w, t, x, 0.0).unwrap() - u).abs() < 1e-14);
        }
    }
}
