use std::fmt;

use crate::error::{Error, Result};

/// Non-decreasing Lipschitz diffusion function `phi` of `div f(u) = Laplacian phi(u)`.
pub trait Viscosity: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn value(&self, u: f64) -> f64;

    /// Lipschitz constant on `[-c0, c0]`.
    fn lipschitz(&self, c0: f64) -> f64 {
        sampled_sup(c0, |a, b| (self.value(b) - self.value(a)).abs() / (b - a))
    }

    /// `Q = sup_{u != 0} |phi(u) - phi(0)| / |u|` on `[-c0, c0]`.
    fn gap(&self, c0: f64) -> f64 {
        let p0 = self.value(0.0);
        sampled_sup(c0, |_, b| if b == 0.0 { 0.0 } else { (self.value(b) - p0).abs() / b.abs() })
    }

    fn is_zero(&self) -> bool {
        false
    }
}

fn sampled_sup(c0: f64, q: impl Fn(f64, f64) -> f64) -> f64 {
    const N: usize = 2048;
    let h = 2.0 * c0 / N as f64;
    (0..N)
        .map(|i| q(-c0 + i as f64 * h, -c0 + (i + 1) as f64 * h))
        .fold(0.0, f64::max)
}

/// Rejects `phi` that decreases anywhere on `[-c0, c0]`.
pub fn check_nondecreasing(phi: &dyn Viscosity, c0: f64) -> Result<()> {
    const N: usize = 2000;
    let h = 2.0 * c0 / N as f64;
    let mut prev = phi.value(-c0);
    for i in 1..=N {
        let u = -c0 + i as f64 * h;
        let v = phi.value(u);
        if v < prev - 1e-14 * (1.0 + prev.abs()) {
            return Err(Error::DecreasingViscosity(u));
        }
        prev = v;
    }
    Ok(())
}

/// `phi(u) = eps u`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearViscosity {
    pub eps: f64,
}

impl Viscosity for LinearViscosity {
    fn name(&self) -> String {
        format!("linear(eps={:e})", self.eps)
    }
    fn value(&self, u: f64) -> f64 {
        self.eps * u
    }
    fn lipschitz(&self, _c0: f64) -> f64 {
        self.eps.abs()
    }
    fn gap(&self, _c0: f64) -> f64 {
        self.eps.abs()
    }
    fn is_zero(&self) -> bool {
        self.eps == 0.0
    }
}

/// `phi = 0`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroViscosity;

impl Viscosity for ZeroViscosity {
    fn name(&self) -> String {
        "zero".into()
    }
    fn value(&self, _u: f64) -> f64 {
        0.0
    }
    fn lipschitz(&self, _c0: f64) -> f64 {
        0.0
    }
    fn gap(&self, _c0: f64) -> f64 {
        0.0
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// `phi(u) = eps (u + u^3 / 3)`, a degenerate-free nonlinear example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicViscosity {
    pub eps: f64,
}

impl Viscosity for CubicViscosity {
    fn name(&self) -> String {
        format!("cubic(eps={:e})", self.eps)
    }
    fn value(&self, u: f64) -> f64 {
        self.eps * (u + u * u * u / 3.0)
    }
    fn lipschitz(&self, c0: f64) -> f64 {
        self.eps.abs() * (1.0 + c0 * c0)
    }
}

/// Viscosity presets: "zero", "linear" and "cubic" with strength `eps`.
pub fn viscosity_preset(name: &str, eps: f64) -> Result<Box<dyn Viscosity>> {
    match name {
        "zero" => Ok(Box::new(ZeroViscosity)),
        "linear" => Ok(Box::new(LinearViscosity { eps })),
        "cubic" => Ok(Box::new(CubicViscosity { eps })),
        other => Err(Error::UnknownPreset(format!("viscosity '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Decreasing;
    impl Viscosity for Decreasing {
        fn name(&self) -> String {
            "decreasing".into()
        }
        fn value(&self, u: f64) -> f64 {
            -u
        }
    }

    #[test]
    fn linear_gap_is_eps() {
        let phi = LinearViscosity { eps: 1e-3 };
        assert_eq!(phi.gap(1.0), 1e-3);
        assert_eq!(phi.lipschitz(1.0), 1e-3);
    }

    #[test]
    fn sampled_constants() {
        let phi = CubicViscosity { eps: 0.1 };
        #[derive(Debug)]
        struct Sampled(CubicViscosity);
        impl Viscosity for Sampled {
            fn name(&self) -> String {
                self.0.name()
            }
            fn value(&self, u: f64) -> f64 {
                self.0.value(u)
            }
        }
        let s = Sampled(phi);
        assert!((s.lipschitz(1.0) - phi.lipschitz(1.0)).abs() < 1e-3);
        assert!((s.gap(1.0) - 0.1 * (1.0 + 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn decreasing_rejected() {
        assert!(matches!(check_nondecreasing(&Decreasing, 1.0), Err(Error::DecreasingViscosity(_))));
        assert!(check_nondecreasing(&LinearViscosity { eps: 0.1 }, 1.0).is_ok());
    }
}
