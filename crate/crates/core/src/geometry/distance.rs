//! Companion-metric distances and geodesic balls by shortest paths on a grid.
//!
//! Edges join each node to its 32 neighbours along the primitive lattice
//! directions of a 7 x 7 block; an edge's weight is the trapezoid-rule
//! length of the straight coordinate segment under the companion metric.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Point, Spacetime1p1};
use crate::error::{Error, Result};

/// Primitive directions `(dt, dx)` with `max(|dt|, |dx|) <= 3`.
pub const STENCIL: [(i32, i32); 32] = [
    (1, 0), (0, 1), (-1, 0), (0, -1),
    (1, 1), (1, -1), (-1, 1), (-1, -1),
    (1, 2), (1, -2), (-1, 2), (-1, -2),
    (2, 1), (2, -1), (-2, 1), (-2, -1),
    (1, 3), (1, -3), (-1, 3), (-1, -3),
    (3, 1), (3, -1), (-3, 1), (-3, -1),
    (2, 3), (2, -3), (-2, 3), (-2, -3),
    (3, 2), (3, -2), (-3, 2), (-3, -2),
];

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn segment_length(h: f64, di: i32, dj: i32, m0: (f64, f64), m1: (f64, f64)) -> f64 {
    let dt = di as f64 * h;
    let dx = dj as f64 * h;
    let l0 = (m0.0 * m0.0 * dt * dt + m0.1 * m0.1 * dx * dx).sqrt();
    let l1 = (m1.0 * m1.0 * dt * dt + m1.1 * m1.1 * dx * dx).sqrt();
    0.5 * (l0 + l1)
}

/// Uniform auxiliary grid used for point-to-point distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceGrid {
    pub step: f64,
}

impl DistanceGrid {
    pub fn new(step: f64) -> Self {
        DistanceGrid { step }
    }
}

/// Geodesic distance between two points under the companion metric, on the
/// periodic grid covering the whole spacetime strip. Points are snapped to
/// the nearest grid node.
pub fn companion_distance(st: &Spacetime1p1, p: Point, q: Point, grid: DistanceGrid) -> Result<f64> {
    st.check_time(p.t)?;
    st.check_time(q.t)?;
    let h = grid.step;
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("grid step {h} must be positive")));
    }
    let nt = ((st.t_max() - st.t_min()) / h).round() as usize + 1;
    let nx = ((st.leaf_length() / h).round() as usize).max(1);
    let hx = st.leaf_length() / nx as f64;
    let ht = if nt > 1 { (st.t_max() - st.t_min()) / (nt - 1) as f64 } else { h };
    if (hx - h).abs() > 1e-9 * h || (nt > 1 && (ht - h).abs() > 1e-9 * h) {
        return Err(Error::InvalidArgument(format!(
            "grid step {h} must divide both the leaf length and the time range"
        )));
    }
    let node_of = |pt: Point| -> usize {
        let i = (((pt.t - st.t_min()) / h).round() as usize).min(nt - 1);
        let j = ((st.wrap(pt.x) / h).round() as usize) % nx;
        i * nx + j
    };
    let src = node_of(p);
    let dst = node_of(q);
    if src == dst {
        return Ok(0.0);
    }
    let mut metric = vec![(f64::NAN, f64::NAN); nt * nx];
    let mut get = |n: usize| -> (f64, f64) {
        if metric[n].0.is_nan() {
            let t = st.t_min() + (n / nx) as f64 * h;
            let x = (n % nx) as f64 * h;
            metric[n] = (st.lapse(t, x), st.scale(t, x));
        }
        metric[n]
    };
    let mut dist = vec![f64::INFINITY; nt * nx];
    let mut done = vec![false; nt * nx];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapItem { dist: 0.0, node: src });
    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        if node == dst {
            return Ok(d);
        }
        done[node] = true;
        let (i, j) = ((node / nx) as i64, (node % nx) as i64);
        let m0 = get(node);
        for &(di, dj) in STENCIL.iter() {
            let ni = i + di as i64;
            if ni < 0 || ni >= nt as i64 {
                continue;
            }
            let nj = (j + dj as i64).rem_euclid(nx as i64);
            let next = ni as usize * nx + nj as usize;
            if done[next] {
                continue;
            }
            let nd = d + segment_length(h, di, dj, m0, get(next));
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(HeapItem { dist: nd, node: next });
            }
        }
    }
    Err(Error::Numerical("destination unreachable on distance grid".into()))
}

/// One grid cell of a geodesic ball, addressed by its offset from the centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallCell {
    pub di: i32,
    pub dj: i32,
    pub dist: f64,
    /// Companion volume `lapse * scale * h^2` of the cell.
    pub weight: f64,
}

/// The grid realisation of `{q : dist(p, q) <= delta}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicBall {
    pub center: Point,
    pub radius: f64,
    pub step: f64,
    /// Members sorted by `(di, dj)`.
    pub members: Vec<BallCell>,
    pub volume: f64,
}

impl GeodesicBall {
    pub fn contains(&self, di: i32, dj: i32) -> bool {
        self.members.binary_search_by(|c| (c.di, c.dj).cmp(&(di, dj))).is_ok()
    }

    pub fn position(&self, cell: &BallCell) -> Point {
        Point::new(self.center.t + cell.di as f64 * self.step, self.center.x + cell.dj as f64 * self.step)
    }
}

struct Window {
    half_t: i64,
    half_x: i64,
    width: usize,
}

impl Window {
    fn new(st: &Spacetime1p1, delta: f64, h: f64) -> Result<Self> {
        let (lapse_min, _, scale_min, _) = st.coefficient_bounds();
        let half_t = (delta / (lapse_min * h)).ceil() as i64 + 3;
        let half_x = (delta / (scale_min * h)).ceil() as i64 + 3;
        if (half_x as f64) * h >= 0.5 * st.leaf_length() {
            return Err(Error::SelfOverlap {
                delta,
                cutoff: st.ball_radius_cutoff().min(0.5 * st.leaf_length() * scale_min),
            });
        }
        Ok(Window {
            half_t,
            half_x,
            width: (2 * half_x + 1) as usize,
        })
    }

    fn len(&self) -> usize {
        (2 * self.half_t + 1) as usize * self.width
    }

    fn index(&self, di: i64, dj: i64) -> Option<usize> {
        if di.abs() > self.half_t || dj.abs() > self.half_x {
            return None;
        }
        Some((di + self.half_t) as usize * self.width + (dj + self.half_x) as usize)
    }

    fn offsets(&self, n: usize) -> (i64, i64) {
        ((n / self.width) as i64 - self.half_t, (n % self.width) as i64 - self.half_x)
    }
}

fn check_radius(st: &Spacetime1p1, delta: f64, h: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("ball radius {delta} must be positive")));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("grid step {h} must be positive")));
    }
    let cutoff = st.ball_radius_cutoff();
    if delta > cutoff {
        return Err(Error::SelfOverlap { delta, cutoff });
    }
    Ok(())
}

fn ball_search(st: &Spacetime1p1, p: Point, delta: f64, h: f64, truncate: bool) -> Result<GeodesicBall> {
    st.check_time(p.t)?;
    check_radius(st, delta, h)?;
    let win = Window::new(st, delta, h)?;
    let n = win.len();
    let tol = 1e-12 * delta;
    let t_lo = st.t_min() - 1e-12;
    let t_hi = st.t_max() + 1e-12;
    let mut metric = vec![(f64::NAN, f64::NAN); n];
    let mut get = |node: usize| -> (f64, f64) {
        if metric[node].0.is_nan() {
            let (di, dj) = win.offsets(node);
            let t = p.t + di as f64 * h;
            let x = p.x + dj as f64 * h;
            metric[node] = (st.lapse(t, x), st.scale(t, x));
        }
        metric[node]
    };
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let src = win.index(0, 0).expect("centre in window");
    dist[src] = 0.0;
    heap.push(HeapItem { dist: 0.0, node: src });
    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        if truncate && d > delta + tol {
            break;
        }
        done[node] = true;
        let (i, j) = win.offsets(node);
        let m0 = get(node);
        for &(di, dj) in STENCIL.iter() {
            let (ni, nj) = (i + di as i64, j + dj as i64);
            let Some(next) = win.index(ni, nj) else { continue };
            if done[next] {
                continue;
            }
            let t = p.t + ni as f64 * h;
            if t < t_lo || t > t_hi {
                continue;
            }
            let nd = d + segment_length(h, di, dj, m0, get(next));
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(HeapItem { dist: nd, node: next });
            }
        }
    }
    let mut members = Vec::new();
    for node in 0..n {
        if done[node] && dist[node] <= delta + tol {
            let (di, dj) = win.offsets(node);
            let (l, a) = get(node);
            members.push(BallCell {
                di: di as i32,
                dj: dj as i32,
                dist: dist[node],
                weight: l * a * h * h,
            });
        }
    }
    let volume = members.iter().map(|c| c.weight).sum();
    Ok(GeodesicBall {
        center: p,
        radius: delta,
        step: h,
        members,
        volume,
    })
}

/// Geodesic ball of radius `delta` about `p` on the grid of step `h` anchored
/// at `p`, truncated to the time range of the spacetime. Dijkstra stops as
/// soon as the frontier passes `delta`.
pub fn geodesic_ball(st: &Spacetime1p1, p: Point, delta: f64, h: f64) -> Result<GeodesicBall> {
    ball_search(st, p, delta, h, true)
}

/// Same as [`geodesic_ball`] but settles every node of the search window
/// before testing membership.
pub fn geodesic_ball_brute(st: &Spacetime1p1, p: Point, delta: f64, h: f64) -> Result<GeodesicBall> {
    ball_search(st, p, delta, h, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConstantMetric, Warped};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn flat() -> Spacetime1p1 {
        Spacetime1p1::minkowski(1.0, 1.0)
    }

    #[test]
    fn flat_leaf_arc() {
        let d = companion_distance(&flat(), Point::new(0.0, 0.0), Point::new(0.0, 0.3), DistanceGrid::new(0.01)).unwrap();
        assert!((d - 0.3).abs() < 1e-12);
    }

    #[test]
    fn wrap_around_arc() {
        let d = companion_distance(&flat(), Point::new(0.0, 0.0), Point::new(0.0, 0.9), DistanceGrid::new(0.01)).unwrap();
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn flat_hypotenuse_within_two_percent() {
        let d = companion_distance(&flat(), Point::new(0.0, 0.0), Point::new(0.3, 0.4), DistanceGrid::new(0.01)).unwrap();
        assert!(((d - 0.5) / 0.5).abs() <= 0.02, "d = {d}");
    }

    #[test]
    fn disk_area_within_five_percent() {
        let delta = 0.1;
        let ball = geodesic_ball(&flat(), Point::new(0.5, 0.5), delta, delta / 32.0).unwrap();
        let area = PI * delta * delta;
        assert!(((ball.volume - area) / area).abs() <= 0.05, "vol = {}", ball.volume);
    }

    #[test]
    fn tiny_ball_is_single_cell() {
        let ball = geodesic_ball(&flat(), Point::new(0.5, 0.5), 1e-4, 1e-3).unwrap();
        assert_eq!(ball.members.len(), 1);
        assert_eq!((ball.members[0].di, ball.members[0].dj), (0, 0));
    }

    #[test]
    fn ellipse_fast_equals_brute() {
        let st = Spacetime1p1::new(0.0, 1.0, 1.0, Arc::new(ConstantMetric { lapse: 2.0, scale: 1.0 })).unwrap();
        let p = Point::new(0.5, 0.25);
        let fast = geodesic_ball(&st, p, 0.1, 0.1 / 32.0).unwrap();
        let brute = geodesic_ball_brute(&st, p, 0.1, 0.1 / 32.0).unwrap();
        assert_eq!(fast, brute);
        // A flat metric has Euclidean balls in orthonormal coordinates.
        let area = PI * 0.01;
        assert!(((fast.volume - area) / area).abs() <= 0.05);
    }

    #[test]
    fn warped_fast_equals_brute() {
        let st = Spacetime1p1::new(0.0, 1.0, 1.0, Arc::new(Warped { amp: 0.5, leaf_length: 1.0 })).unwrap();
        let p = Point::new(0.4, 0.8);
        let fast = geodesic_ball(&st, p, 0.1, 0.1 / 16.0).unwrap();
        let brute = geodesic_ball_brute(&st, p, 0.1, 0.1 / 16.0).unwrap();
        assert_eq!(fast, brute);
    }

    #[test]
    fn rejects_self_overlapping_radius() {
        let err = geodesic_ball(&flat(), Point::new(0.5, 0.0), 0.6, 0.01).unwrap_err();
        assert!(matches!(err, Error::SelfOverlap { .. }));
    }

    #[test]
    fn ball_truncated_at_initial_leaf() {
        let ball = geodesic_ball(&flat(), Point::new(0.0, 0.5), 0.1, 0.1 / 32.0).unwrap();
        assert!(ball.members.iter().all(|c| c.di >= 0));
        let half = 0.5 * PI * 0.01;
        assert!(((ball.volume - half) / half).abs() < 0.06);
    }
}
