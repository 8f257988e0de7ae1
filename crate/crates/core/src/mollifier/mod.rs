//! Geodesic-ball mollifiers `xi_{p,q} = zeta(dist(p, q) / delta) / Z(p)` and
//! a sampled certification of their admissibility conditions.

mod admissibility;

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{geodesic_ball, GeodesicBall, Point, Spacetime1p1};

pub use admissibility::{symmetry_double_sum, verify_admissibility, AdmissibilityReport, TestSet};

/// Radial profile `zeta` on `[0, 1]`, zero beyond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// `exp(-1 / (1 - r^2))`
    #[default]
    Bump,
    /// Indicator of the closed unit interval, with the ball's membership slack.
    TopHat,
}

impl Profile {
    pub fn value(self, r: f64) -> f64 {
        match self {
            Profile::Bump if r < 1.0 => (-1.0 / (1.0 - r * r)).exp(),
            Profile::Bump => 0.0,
            Profile::TopHat if r <= 1.0 + 2e-12 => 1.0,
            Profile::TopHat => 0.0,
        }
    }

    pub fn parse(name: &str) -> Result<Profile> {
        match name {
            "bump" => Ok(Profile::Bump),
            "top-hat" | "tophat" => Ok(Profile::TopHat),
            other => Err(Error::UnknownPreset(format!("mollifier profile '{other}'"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Bump => "bump",
            Profile::TopHat => "top-hat",
        })
    }
}

/// Mollifiers of radius `delta` whose balls are resolved with
/// `resolution` grid steps per `delta`.
#[derive(Debug, Clone)]
pub struct MollifierFamily {
    st: Spacetime1p1,
    delta: f64,
    profile: Profile,
    resolution: usize,
}

/// The mollifier `q -> xi_{p,q}` about one point, on the ball grid anchored at `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub ball: GeodesicBall,
    /// `xi` at each ball member, in the order of `ball.members`.
    pub values: Vec<f64>,
    /// `Z(p) = sum zeta(dist / delta) dV`.
    pub normalizer: f64,
}

impl Kernel {
    /// `xi` at the cell offset `(di, dj)`; zero outside the ball.
    pub fn value(&self, di: i32, dj: i32) -> f64 {
        self.ball
            .members
            .binary_search_by(|c| (c.di, c.dj).cmp(&(di, dj)))
            .map_or(0.0, |k| self.values[k])
    }

    pub fn mass(&self) -> f64 {
        self.ball.members.iter().zip(&self.values).map(|(c, v)| c.weight * v).sum()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `|di|` and `|dj|` over the members.
    pub fn extent(&self) -> (i32, i32) {
        self.ball
            .members
            .iter()
            .fold((0, 0), |(a, b), c| (a.max(c.di.abs()), b.max(c.dj.abs())))
    }
}

/// Builds the family with the default resolution of 32 steps per radius.
pub fn build(st: &Spacetime1p1, delta: f64, profile: Profile) -> Result<MollifierFamily> {
    MollifierFamily::new(st, delta, profile, 32)
}

impl MollifierFamily {
    pub fn new(st: &Spacetime1p1, delta: f64, profile: Profile, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!("resolution {resolution} is below 2 steps per radius")));
        }
        let fam = MollifierFamily {
            st: st.clone(),
            delta,
            profile,
            resolution,
        };
        fam.kernel(Point::new(st.t_min(), 0.0))?;
        Ok(fam)
    }

    pub fn spacetime(&self) -> &Spacetime1p1 {
        &self.st
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Grid step `delta / resolution` of the ball grids.
    pub fn step(&self) -> f64 {
        self.delta / self.resolution as f64
    }

    pub fn kernel(&self, p: Point) -> Result<Kernel> {
        let ball = geodesic_ball(&self.st, p, self.delta, self.step())?;
        let zeta: Vec<f64> = ball.members.iter().map(|c| self.profile.value(c.dist / self.delta)).collect();
        let normalizer: f64 = ball.members.iter().zip(&zeta).map(|(c, z)| c.weight * z).sum();
        if !(normalizer > 0.0) {
            return Err(Error::Numerical(format!("mollifier about ({}, {}) has no mass", p.t, p.x)));
        }
        let values = zeta.iter().map(|z| z / normalizer).collect();
        Ok(Kernel { ball, values, normalizer })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geodesic_ball_brute;

    #[test]
    fn profiles() {
        assert_eq!(Profile::Bump.value(0.0), (-1.0f64).exp());
        assert_eq!(Profile::Bump.value(1.0), 0.0);
        assert_eq!(Profile::TopHat.value(1.0), 1.0);
        assert_eq!(Profile::TopHat.value(1.0 + 1e-9), 0.0);
        assert_eq!(Profile::parse("top-hat").unwrap(), Profile::TopHat);
        assert!(matches!(Profile::parse("cone"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn unit_mass_and_support() {
        let st = Spacetime1p1::minkowski(1.0, 1.0);
        let fam = build(&st, 0.1, Profile::Bump).unwrap();
        for p in [Point::new(0.5, 0.3), Point::new(0.0, 0.9), Point::new(1.0, 0.0)] {
            let k = fam.kernel(p).unwrap();
            assert!((k.mass() - 1.0).abs() <= 1e-6);
            assert!(k.ball.members.iter().all(|c| c.dist <= 0.1 * (1.0 + 1e-12)));
            assert!(k.values.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn sup_matches_dense_maximum() {
        let st = Spacetime1p1::minkowski(1.0, 1.0);
        let fam = build(&st, 0.1, Profile::Bump).unwrap();
        let p = Point::new(0.5, 0.5);
        let k = fam.kernel(p).unwrap();
        let brute = geodesic_ball_brute(&st, p, 0.1, fam.step()).unwrap();
        let z: f64 = brute.members.iter().map(|c| c.weight * Profile::Bump.value(c.dist / 0.1)).sum();
        let dense_max = brute
            .members
            .iter()
            .map(|c| Profile::Bump.value(c.dist / 0.1) / z)
            .fold(0.0, f64::max);
        assert!((k.sup() - dense_max).abs() <= 1e-12 * dense_max);
        assert!((k.sup() - (-1.0f64).exp() / k.normalizer).abs() <= 1e-12 * k.sup());
    }

    #[test]
    fn sup_scales_with_inverse_square() {
        let st = Spacetime1p1::minkowski(1.0, 1.0);
        let p = Point::new(0.5, 0.5);
        for profile in [Profile::Bump, Profile::TopHat] {
            let a = build(&st, 0.1, profile).unwrap().kernel(p).unwrap().sup();
            let b = build(&st, 0.05, profile).unwrap().kernel(p).unwrap().sup();
            assert!((b / a / 4.0 - 1.0).abs() <= 0.15, "{profile}: {}", b / a);
        }
    }

    #[test]
    fn top_hat_is_flat() {
        let st = Spacetime1p1::minkowski(1.0, 1.0);
        let k = build(&st, 0.1, Profile::TopHat).unwrap().kernel(Point::new(0.5, 0.5)).unwrap();
        for v in &k.values {
            assert!((v * k.ball.volume - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_radius_rejected() {
        let st = Spacetime1p1::minkowski(1.0, 1.0);
        assert!(matches!(build(&st, 0.6, Profile::Bump), Err(Error::SelfOverlap { .. })));
    }
}
