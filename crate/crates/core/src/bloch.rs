//! The two-state ray space as the Bloch sphere.
//!
//! States use the half-angle convention
//! `|theta, phi> = cos(theta/2) e^{-i phi/2} |up> + sin(theta/2) e^{i phi/2} |down>`,
//! which is double valued in `phi -> phi + 2 pi` (the vector flips sign; the
//! ray does not). `phi` is carried as an unbounded real along paths so that
//! winding in `phi` survives.
//!
//! Orientation: [`solid_angle`] is positive when the enclosed region lies to
//! the right of the direction of travel seen from outside the sphere. With this
//! choice a Bargmann invariant equals `-solid_angle / 2` and a loop of
//! increasing `phi` at fixed `theta` gives a negative flux in the up covering.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::angle::{principal_arg, wrap};
use crate::error::{Error, Result};
use crate::statekit::StateVector;

/// Margin in `theta` around the singular pole of each covering.
pub const POLE_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPoint {
    pub theta: f64,
    pub phi: f64,
}

impl BlochPoint {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn to_state(&self) -> StateVector {
        to_state(self)
    }

    /// `(sin theta cos phi, sin theta sin phi, cos theta)`.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

pub fn to_state(p: &BlochPoint) -> StateVector {
    let (s, c) = (0.5 * p.theta).sin_cos();
    let half = 0.5 * p.phi;
    StateVector::new(vec![
        Complex64::from_polar(c, -half),
        Complex64::from_polar(s, half),
    ])
    .expect("Bloch state is normalized")
}

/// Inverse chart. With `previous`, `phi` is unwrapped to the branch nearest
/// `previous.phi`; at a pole `phi` is inherited from `previous` (or 0).
pub fn from_state(s: &StateVector, previous: Option<&BlochPoint>) -> Result<BlochPoint> {
    if s.dim() != 2 {
        return Err(Error::DimensionMismatch(s.dim(), 2));
    }
    let a = s.amplitudes()[0];
    let b = s.amplitudes()[1];
    let theta = 2.0 * b.norm().atan2(a.norm());
    let fallback = previous.map_or(0.0, |p| p.phi);
    if a.norm() < 1e-300 || b.norm() < 1e-300 {
        return Ok(BlochPoint {
            theta,
            phi: fallback,
        });
    }
    let principal = principal_arg(b * a.conj());
    let phi = match previous {
        Some(p) => p.phi + wrap(principal - p.phi),
        None => principal,
    };
    Ok(BlochPoint { theta, phi })
}

/// Bloch points along a path of two-state vectors, with continuous `phi`.
pub fn track(states: &[StateVector]) -> Result<Vec<BlochPoint>> {
    let mut out: Vec<BlochPoint> = Vec::with_capacity(states.len());
    for s in states {
        let p = from_state(s, out.last())?;
        out.push(p);
    }
    Ok(out)
}

/// One of the two gauge patches needed to cover the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlochCovering {
    /// Projection onto `|up>`; singular at the south pole.
    Up,
    /// Projection onto `|down>`; singular at the north pole.
    Down,
}

impl BlochCovering {
    pub fn projection_state(&self) -> StateVector {
        match self {
            BlochCovering::Up => StateVector::basis(2, 0),
            BlochCovering::Down => StateVector::basis(2, 1),
        }
        .expect("basis state")
    }

    fn singular_theta(&self) -> f64 {
        match self {
            BlochCovering::Up => PI,
            BlochCovering::Down => 0.0,
        }
    }
}

/// Monopole connection of a covering: `A_theta = 0` and
/// `A_phi = -(1 - cos theta)/2` (up) or `+(1 + cos theta)/2` (down).
/// The two differ by the pure gauge `-1`, whose transition function is `e^{i phi}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlochConnection {
    pub covering: BlochCovering,
}

impl BlochConnection {
    pub fn new(covering: BlochCovering) -> Self {
        Self { covering }
    }

    pub fn a_phi(&self, theta: f64) -> f64 {
        match self.covering {
            BlochCovering::Up => -0.5 * (1.0 - theta.cos()),
            BlochCovering::Down => 0.5 * (1.0 + theta.cos()),
        }
    }

    pub fn a_theta(&self, _theta: f64) -> f64 {
        0.0
    }
}

/// `oint A_phi dphi` of the covering's connection around a closed loop,
/// trapezoid rule on the given samples. `phi` must be continuous along the
/// loop; the result keeps all `2 n pi` content.
pub fn curvature_flux(path: &[BlochPoint], covering: BlochCovering) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::InvalidArgument(
            "loop needs at least 2 points".into(),
        ));
    }
    let first = path[0].unit_vector();
    let last = path[path.len() - 1].unit_vector();
    let gap = dist3(&first, &last);
    if gap > 1e-9 {
        return Err(Error::NotClosed {
            fidelity: 1.0 - 0.25 * gap * gap,
        });
    }
    let pole = covering.singular_theta();
    if let Some((index, p)) = path
        .iter()
        .enumerate()
        .find(|(_, p)| (p.theta - pole).abs() <= POLE_MARGIN)
    {
        return Err(Error::PoleContact {
            index,
            theta: p.theta,
        });
    }
    let conn = BlochConnection::new(covering);
    Ok(path
        .windows(2)
        .map(|w| 0.5 * (conn.a_phi(w[0].theta) + conn.a_phi(w[1].theta)) * (w[1].phi - w[0].phi))
        .sum())
}

/// Oriented area of the geodesic polygon through `polygon`, from the sum of
/// turning angles (spherical excess). Positive when the enclosed region is on
/// the right of the traversal; reported on `[-2 pi, 2 pi)`, which is exact
/// modulo `4 pi`.
pub fn solid_angle(polygon: &[BlochPoint]) -> Result<f64> {
    if polygon.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "polygon needs at least 3 vertices, got {}",
            polygon.len()
        )));
    }
    let raw: Vec<[f64; 3]> = polygon.iter().map(BlochPoint::unit_vector).collect();
    let n = raw.len();
    for k in 0..n {
        if dot3(&raw[k], &raw[(k + 1) % n]) < -1.0 + 1e-12 {
            return Err(Error::AntipodalEdge { index: k });
        }
    }
    let mut verts: Vec<[f64; 3]> = Vec::with_capacity(n);
    for v in raw {
        if verts.last().is_none_or(|u| dist3(u, &v) > 1e-12) {
            verts.push(v);
        }
    }
    while verts.len() > 1 && dist3(&verts[0], &verts[verts.len() - 1]) <= 1e-12 {
        verts.pop();
    }
    let m = verts.len();
    if m < 3 {
        return Ok(0.0);
    }
    let mut turning = 0.0;
    for k in 0..m {
        let p = &verts[(k + m - 1) % m];
        let v = &verts[k];
        let q = &verts[(k + 1) % m];
        let d_in = neg3(&tangent_toward(v, p));
        let d_out = tangent_toward(v, q);
        let cross = cross3(&d_in, &d_out);
        turning += dot3(v, &cross).atan2(dot3(&d_in, &d_out));
    }
    // Gauss-Bonnet: area on the left of the loop is 2 pi minus total turning.
    let mut left = (TAU - turning) % (2.0 * TAU);
    if left > TAU {
        left -= 2.0 * TAU;
    } else if left <= -TAU {
        left += 2.0 * TAU;
    }
    Ok(-left)
}

/// Closed loop at fixed `theta`, `phi` from `phi0` through `windings` full
/// turns, `segments` steps. The last point repeats the first ray.
pub fn latitude_loop(theta: f64, phi0: f64, windings: f64, segments: usize) -> Vec<BlochPoint> {
    let seg = segments.max(1);
    (0..=seg)
        .map(|k| BlochPoint::new(theta, phi0 + TAU * windings * k as f64 / seg as f64))
        .collect()
}

fn tangent_toward(v: &[f64; 3], p: &[f64; 3]) -> [f64; 3] {
    let d = dot3(p, v);
    let t = [p[0] - d * v[0], p[1] - d * v[1], p[2] - d * v[2]];
    let n = dot3(&t, &t).sqrt();
    [t[0] / n, t[1] / n, t[2] / n]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn neg3(a: &[f64; 3]) -> [f64; 3] {
    [-a[0], -a[1], -a[2]]
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    dot3(&d, &d).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phases::{bargmann_invariant, projective_phase, transition_function};
    use crate::statekit::inner;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
        (a.as_vector() - b.as_vector()).norm() < tol
    }

    fn same_ray(a: &StateVector, b: &StateVector) -> bool {
        (inner(a, b).unwrap().norm() - 1.0).abs() < 1e-12
    }

    #[test]
    fn chart_poles_and_equator() {
        let up = StateVector::basis(2, 0).unwrap();
        let down = StateVector::basis(2, 1).unwrap();
        assert!(close(&to_state(&BlochPoint::new(0.0, 0.0)), &up, 1e-15));
        assert!(close(&to_state(&BlochPoint::new(PI, 0.0)), &down, 1e-15));
        let plus = StateVector::from_real(&[1.0, 1.0]).unwrap();
        assert!(close(
            &to_state(&BlochPoint::new(FRAC_PI_2, 0.0)),
            &plus,
            1e-15
        ));
    }

    #[test]
    fn inverse_chart() {
        let up = StateVector::basis(2, 0).unwrap();
        assert_eq!(from_state(&up, None).unwrap(), BlochPoint::new(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let p = BlochPoint::new(
                rng.random_range(0.01..PI - 0.01),
                rng.random_range(-3.0..3.0),
            );
            let q = from_state(&to_state(&p), None).unwrap();
            assert!((p.theta - q.theta).abs() < 1e-12);
            assert!((p.phi - q.phi).abs() < 1e-12);
            let r = from_state(&to_state(&p).rephased(rng.random_range(0.0..TAU)), None).unwrap();
            assert!((p.theta - r.theta).abs() < 1e-12 && (wrap(p.phi - r.phi)).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_tracked_continuously() {
        let pts = latitude_loop(1.0, 0.0, 2.0, 400);
        let states: Vec<_> = pts.iter().map(to_state).collect();
        let tracked = track(&states).unwrap();
        assert!((tracked.last().unwrap().phi - 2.0 * TAU).abs() < 1e-9);
        assert!(from_state(&StateVector::basis(3, 0).unwrap(), None).is_err());
    }

    #[test]
    fn state_convention_is_double_valued() {
        let p = BlochPoint::new(0.7, 0.3);
        let q = BlochPoint::new(0.7, 0.3 + TAU);
        let (a, b) = (to_state(&p), to_state(&q));
        assert!(same_ray(&a, &b));
        assert!(close(&a, &b.rephased(PI), 1e-14));
    }

    #[test]
    fn connection_gauge_difference() {
        let up = BlochConnection::new(BlochCovering::Up);
        let down = BlochConnection::new(BlochCovering::Down);
        for k in 0..=20 {
            let th = PI * k as f64 / 20.0;
            assert!((up.a_phi(th) - down.a_phi(th) + 1.0).abs() < 1e-15);
            assert_eq!(up.a_theta(th), 0.0);
        }
    }

    #[test]
    fn flux_on_latitude_circles() {
        for &theta in &[0.3, 1.0, FRAC_PI_2, 2.5] {
            let pts = latitude_loop(theta, 0.0, 1.0, 1000);
            let up = curvature_flux(&pts, BlochCovering::Up).unwrap();
            let down = curvature_flux(&pts, BlochCovering::Down).unwrap();
            assert!((up + PI * (1.0 - theta.cos())).abs() < 1e-12);
            assert!((down - PI * (1.0 + theta.cos())).abs() < 1e-12);
            assert!((up - down + TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn flux_guards() {
        let open = vec![BlochPoint::new(1.0, 0.0), BlochPoint::new(1.0, 1.0)];
        assert!(matches!(
            curvature_flux(&open, BlochCovering::Up),
            Err(Error::NotClosed { .. })
        ));
        let south = latitude_loop(PI - 1e-7, 0.0, 1.0, 10);
        assert!(matches!(
            curvature_flux(&south, BlochCovering::Up),
            Err(Error::PoleContact { .. })
        ));
        assert!(curvature_flux(&south, BlochCovering::Down).is_ok());
        let north = latitude_loop(1e-7, 0.0, 1.0, 10);
        assert!(matches!(
            curvature_flux(&north, BlochCovering::Down),
            Err(Error::PoleContact { .. })
        ));
    }

    #[test]
    fn flux_matches_bargmann_segments() {
        // Sum of phi_B(t_m, i, t_{m+1}) along the loop is the parallel-transport
        // projective phase; it must agree with the line integral of A.
        let theta = 1.2;
        let pts = latitude_loop(theta, 0.0, 1.0, 10_000);
        let states: Vec<_> = pts.iter().map(to_state).collect();
        for cov in [BlochCovering::Up, BlochCovering::Down] {
            let i = cov.projection_state();
            let sum: f64 = states
                .windows(2)
                .map(|w| {
                    bargmann_invariant(&[w[0].clone(), i.clone(), w[1].clone()])
                        .unwrap()
                        .angle
                })
                .sum();
            let flux = curvature_flux(&pts, cov).unwrap();
            assert!((sum - flux).abs() < 1e-6, "{cov:?}: {sum} vs {flux}");
        }
    }

    #[test]
    fn transition_function_is_e_i_phi() {
        let up = StateVector::basis(2, 0).unwrap();
        let down = StateVector::basis(2, 1).unwrap();
        let p = BlochPoint::new(0.9, 2.2);
        let s = transition_function(&up, &down, &to_state(&p)).unwrap();
        assert!((s.value() - Complex64::from_polar(1.0, 2.2)).norm() < 1e-15);
        // and the projective phases of the two coverings differ by it
        let a = to_state(&BlochPoint::new(0.4, 0.1));
        let b = to_state(&BlochPoint::new(2.0, 1.7));
        let pi_ = projective_phase(&a, &up, &b).unwrap().phasor();
        let pj = projective_phase(&a, &down, &b).unwrap().phasor();
        let sij0 = transition_function(&up, &down, &a).unwrap();
        let sjit = transition_function(&down, &up, &b).unwrap();
        assert!(pi_.distance(&(sij0 * pj * sjit)) < 1e-12);
    }

    #[test]
    fn solid_angle_examples() {
        let z = BlochPoint::new(0.0, 0.0);
        let x = BlochPoint::new(FRAC_PI_2, 0.0);
        let y = BlochPoint::new(FRAC_PI_2, FRAC_PI_2);
        let octant = solid_angle(&[z, x, y]).unwrap();
        assert!((octant.abs() - FRAC_PI_2).abs() < 1e-12);
        // z -> x -> y turns left seen from outside: region on the left.
        assert!(octant < 0.0);
        assert!((solid_angle(&[z, y, x]).unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(solid_angle(&[x, x, x]).unwrap(), 0.0);
        assert_eq!(solid_angle(&[x, y, y]).unwrap(), 0.0);

        let south = BlochPoint::new(PI, 0.0);
        let back = BlochPoint::new(FRAC_PI_2, PI);
        let lune = solid_angle(&[z, x, south, back]).unwrap();
        assert!((lune.abs() - TAU).abs() < 1e-12);
    }

    #[test]
    fn solid_angle_antipodal_edge() {
        let z = BlochPoint::new(0.0, 0.0);
        let south = BlochPoint::new(PI, 0.0);
        let x = BlochPoint::new(FRAC_PI_2, 0.0);
        assert!(matches!(
            solid_angle(&[z, south, x]),
            Err(Error::AntipodalEdge { index: 0 })
        ));
    }

    #[test]
    fn lune_area_is_twice_its_width() {
        // Lune between meridians phi = 0 and phi = w: N -> (eq, 0) -> S -> (eq, w) -> N
        // would have an antipodal pair only through N-S, so go via two meridian midpoints.
        for &w in &[0.5, 1.0, 2.0] {
            let n = BlochPoint::new(0.0, 0.0);
            let s = BlochPoint::new(PI, 0.0);
            let a = BlochPoint::new(FRAC_PI_2, 0.0);
            let b = BlochPoint::new(FRAC_PI_2, w);
            let area = solid_angle(&[n, a, s, b]).unwrap();
            assert!((area.abs() - 2.0 * w).abs() < 1e-12, "w = {w}: {area}");
        }
    }
}
