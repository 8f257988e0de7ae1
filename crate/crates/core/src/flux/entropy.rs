use std::fmt;
use std::sync::Arc;

use super::Flux;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Sign with `sgn(0) = 0`.
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Kruzkov flux `sgn(u - k) (f(u) - f(k))` at `p`.
pub fn kruzkov_flux(f: &dyn Flux, u: f64, k: f64, p: Point) -> [f64; 2] {
    let s = sgn(u - k);
    if s == 0.0 {
        return [0.0, 0.0];
    }
    let fu = f.value(u, p.t, p.x);
    let fk = f.value(k, p.t, p.x);
    [s * (fu[0] - fk[0]), s * (fu[1] - fk[1])]
}

/// A convex entropy `U(u)`.
pub trait Entropy: Send + Sync + fmt::Debug {
    fn value(&self, u: f64) -> f64;

    fn derivative(&self, u: f64) -> f64;

    /// States where `U'` jumps; quadrature splits there.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `U(u) = u`
#[derive(Debug, Clone, Copy)]
pub struct IdentityEntropy;

impl Entropy for IdentityEntropy {
    fn value(&self, u: f64) -> f64 {
        u
    }
    fn derivative(&self, _u: f64) -> f64 {
        1.0
    }
}

/// `U(u) = u^2 / 2`
#[derive(Debug, Clone, Copy)]
pub struct QuadraticEntropy;

impl Entropy for QuadraticEntropy {
    fn value(&self, u: f64) -> f64 {
        0.5 * u * u
    }
    fn derivative(&self, u: f64) -> f64 {
        u
    }
}

/// `U(u) = |u - k|`
#[derive(Debug, Clone, Copy)]
pub struct KruzkovEntropy {
    pub k: f64,
}

impl Entropy for KruzkovEntropy {
    fn value(&self, u: f64) -> f64 {
        (u - self.k).abs()
    }
    fn derivative(&self, u: f64) -> f64 {
        sgn(u - self.k)
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.k]
    }
}

/// Entropy `U` with its flux `F(u) = int_0^u U'(v) d_u f(v) dv`.
#[derive(Debug, Clone)]
pub struct EntropyPair {
    entropy: Arc<dyn Entropy>,
    flux: Arc<dyn Flux>,
}

const QUAD_TOL: f64 = 1e-13;

impl EntropyPair {
    /// Checks convexity of `U` on `[-c0, c0]` by second differences.
    pub fn new(flux: Arc<dyn Flux>, entropy: Arc<dyn Entropy>, c0: f64) -> Result<Self> {
        const N: usize = 2000;
        let h = 2.0 * c0 / N as f64;
        for i in 1..N {
            let u = -c0 + i as f64 * h;
            let second = entropy.value(u - h) - 2.0 * entropy.value(u) + entropy.value(u + h);
            if second < -1e-10 {
                return Err(Error::NonConvexEntropy(second));
            }
        }
        Ok(EntropyPair { entropy, flux })
    }

    pub fn entropy(&self) -> &Arc<dyn Entropy> {
        &self.entropy
    }

    /// Entropy flux `F(u)` at `p` by adaptive Simpson quadrature split at
    /// the kinks of `U'`.
    pub fn flux_at(&self, u: f64, p: Point) -> [f64; 2] {
        let integrand = |v: f64| {
            let d = self.entropy.derivative(v);
            let df = self.flux.du(v, p.t, p.x);
            [d * df[0], d * df[1]]
        };
        let (lo, hi, sign) = if u >= 0.0 { (0.0, u, 1.0) } else { (u, 0.0, -1.0) };
        let mut nodes = vec![lo];
        nodes.extend(self.entropy.kinks().into_iter().filter(|k| *k > lo && *k < hi));
        nodes.push(hi);
        let mut total = [0.0; 2];
        for w in nodes.windows(2) {
            let part = adaptive_simpson(&integrand, w[0], w[1], QUAD_TOL);
            total[0] += part[0];
            total[1] += part[1];
        }
        [sign * total[0], sign * total[1]]
    }
}

fn simpson(f: &impl Fn(f64) -> [f64; 2], a: f64, fa: [f64; 2], b: f64, fb: [f64; 2]) -> ([f64; 2], f64, [f64; 2]) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    let w = (b - a) / 6.0;
    (
        [w * (fa[0] + 4.0 * fm[0] + fb[0]), w * (fa[1] + 4.0 * fm[1] + fb[1])],
        m,
        fm,
    )
}

fn adaptive_simpson(f: &impl Fn(f64) -> [f64; 2], a: f64, b: f64, tol: f64) -> [f64; 2] {
    if a == b {
        return [0.0; 2];
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &impl Fn(f64) -> [f64; 2],
    a: f64,
    fa: [f64; 2],
    b: f64,
    fb: [f64; 2],
    m: f64,
    fm: [f64; 2],
    whole: [f64; 2],
    tol: f64,
    depth: u32,
) -> [f64; 2] {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let err = (left[0] + right[0] - whole[0])
        .abs()
        .max((left[1] + right[1] - whole[1]).abs());
    if depth == 0 || err <= 15.0 * tol {
        return [
            left[0] + right[0] + (left[0] + right[0] - whole[0]) / 15.0,
            left[1] + right[1] + (left[1] + right[1] - whole[1]) / 15.0,
        ];
    }
    let l = recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1);
    let r = recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
    [l[0] + r[0], l[1] + r[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{StateFn, Term, TermFlux};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[derive(Debug)]
    struct Concave;
    impl Entropy for Concave {
        fn value(&self, u: f64) -> f64 {
            -u * u
        }
        fn derivative(&self, u: f64) -> f64 {
            -2.0 * u
        }
    }

    fn cubic_temporal() -> Arc<dyn Flux> {
        Arc::new(TermFlux::new(
            "cubic-temporal",
            vec![Term::plain(StateFn::Linear(1.0)), Term::plain(StateFn::Cubic(1.0))],
            vec![Term::plain(StateFn::Sine(0.5))],
        ))
    }

    #[test]
    fn kruzkov_examples() {
        let f = TermFlux::burgers();
        let p = Point::new(0.0, 0.0);
        assert_eq!(kruzkov_flux(&f, 0.4, 0.4, p), [0.0, 0.0]);
        assert_eq!(kruzkov_flux(&f, 1.0, 0.0, p), [1.0, 0.5]);
        assert_eq!(kruzkov_flux(&f, -1.0, 0.0, p), [1.0, -0.5]);
    }

    #[test]
    fn identity_entropy_gives_rebased_flux() {
        let f = cubic_temporal();
        let pair = EntropyPair::new(f.clone(), Arc::new(IdentityEntropy), 1.0).unwrap();
        let p = Point::new(0.3, 0.2);
        for &u in &[-0.8, 0.0, 0.35, 1.0] {
            let got = pair.flux_at(u, p);
            let fu = f.value(u, p.t, p.x);
            let f0 = f.value(0.0, p.t, p.x);
            assert!((got[0] - (fu[0] - f0[0])).abs() < 1e-12);
            assert!((got[1] - (fu[1] - f0[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_entropy_burgers_closed_form() {
        let pair = EntropyPair::new(Arc::new(TermFlux::burgers()), Arc::new(QuadraticEntropy), 1.0).unwrap();
        for &u in &[-1.0, -0.3, 0.5, 0.9] {
            let got = pair.flux_at(u, Point::new(0.0, 0.0));
            assert!((got[0] - u * u / 2.0).abs() < 1e-8);
            assert!((got[1] - u * u * u / 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn kruzkov_pair_matches_kruzkov_flux_for_random_k() {
        let f = cubic_temporal();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = Point::new(0.25, 0.6);
        for _ in 0..20 {
            let k: f64 = rng.gen_range(-1.0..1.0);
            let pair = EntropyPair::new(f.clone(), Arc::new(KruzkovEntropy { k }), 1.0).unwrap();
            let fk = pair.flux_at(k, p);
            for &u in &[-1.0, -0.5, 0.0, 0.3, 0.77, 1.0] {
                let fu = pair.flux_at(u, p);
                let oracle = kruzkov_flux(f.as_ref(), u, k, p);
                assert!((fu[0] - fk[0] - oracle[0]).abs() < 1e-8);
                assert!((fu[1] - fk[1] - oracle[1]).abs() < 1e-8);
            }
        }
        let pair = EntropyPair::new(f.clone(), Arc::new(KruzkovEntropy { k: 0.3 }), 1.0).unwrap();
        let at_k = pair.flux_at(0.3, p);
        let got = pair.flux_at(-0.6, p);
        let oracle = kruzkov_flux(f.as_ref(), -0.6, 0.3, p);
        assert!((got[0] - at_k[0] - oracle[0]).abs() < 1e-8);
    }

    #[test]
    fn non_convex_entropy_rejected() {
        assert!(matches!(
            EntropyPair::new(Arc::new(TermFlux::burgers()), Arc::new(Concave), 1.0),
            Err(Error::NonConvexEntropy(_))
        ));
    }
}
