//! Phase functionals on states: the Pancharatnam phase, the projective phase
//! `arg<a|i><i|b>`, transition functions between coverings, N-vertex
//! Bargmann invariants, and segment composition.
//!
//! Comparisons modulo `2 pi` should go through [`UnitPhasor`] rather than raw
//! angles.

use std::ops::Mul;

use num_complex::Complex64;

use crate::angle::{principal_arg, wrap};
use crate::error::{Endpoint, Error, Result};
use crate::statekit::{inner, StateVector, ORTHOGONALITY_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Reduced to `(-pi, pi]`.
    Principal,
    /// Accumulated; carries the `2 n pi` content.
    Unwrapped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseValue {
    pub angle: f64,
    pub branch: Branch,
}

impl PhaseValue {
    pub fn principal(angle: f64) -> Self {
        Self {
            angle: wrap(angle),
            branch: Branch::Principal,
        }
    }

    pub fn unwrapped(angle: f64) -> Self {
        Self {
            angle,
            branch: Branch::Unwrapped,
        }
    }

    pub fn phasor(&self) -> UnitPhasor {
        UnitPhasor::from_angle(self.angle)
    }

    /// Equality modulo `2 pi`, measured as `|e^{ia} - e^{ib}|`.
    pub fn congruent(&self, other: &PhaseValue, tol: f64) -> bool {
        self.phasor().distance(&other.phasor()) < tol
    }
}

/// Unit-modulus complex number, e.g. a transition function `S_ij(P)` or `e^{i phi}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPhasor(Complex64);

impl UnitPhasor {
    pub const ONE: UnitPhasor = UnitPhasor(Complex64::new(1.0, 0.0));

    pub fn from_angle(angle: f64) -> Self {
        Self(Complex64::from_polar(1.0, angle))
    }

    /// Normalizes `z`; fails on zero.
    pub fn from_complex(z: Complex64) -> Result<Self> {
        let n = z.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(Self(z / n))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn arg(&self) -> f64 {
        principal_arg(self.0)
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.conj())
    }

    pub fn distance(&self, other: &UnitPhasor) -> f64 {
        (self.0 - other.0).norm()
    }
}

impl Mul for UnitPhasor {
    type Output = UnitPhasor;

    fn mul(self, rhs: UnitPhasor) -> UnitPhasor {
        // Renormalize so long products do not drift off the unit circle.
        let z = self.0 * rhs.0;
        UnitPhasor(z / z.norm())
    }
}

impl std::iter::Product for UnitPhasor {
    fn product<I: Iterator<Item = UnitPhasor>>(iter: I) -> Self {
        iter.fold(UnitPhasor::ONE, |a, b| a * b)
    }
}

/// The covering of a projection state `|i>`: all states whose overlap with
/// `|i>` exceeds `threshold` in magnitude.
#[derive(Debug, Clone)]
pub struct Covering {
    center: StateVector,
    threshold: f64,
}

impl Covering {
    pub fn new(center: &StateVector) -> Self {
        Self {
            center: center.clone(),
            threshold: ORTHOGONALITY_THRESHOLD,
        }
    }

    /// Covers only states with `|<i|psi>| > threshold`. Raising the threshold
    /// shrinks the region where segments are trusted near orthogonality.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn center(&self) -> &StateVector {
        &self.center
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `<i|psi>`.
    pub fn amplitude(&self, psi: &StateVector) -> Result<Complex64> {
        inner(&self.center, psi)
    }

    pub fn contains(&self, psi: &StateVector) -> Result<bool> {
        Ok(self.amplitude(psi)?.norm() > self.threshold)
    }

    /// `arg<a|i><i|b>`, requiring both endpoints inside the covering.
    pub fn phase(&self, a: &StateVector, b: &StateVector) -> Result<PhaseValue> {
        let ia = self.amplitude(a)?;
        let ib = self.amplitude(b)?;
        self.check(ia.norm(), Endpoint::Initial)?;
        self.check(ib.norm(), Endpoint::Final)?;
        Ok(PhaseValue::principal(principal_arg(ia.conj() * ib)))
    }

    fn check(&self, overlap: f64, endpoint: Endpoint) -> Result<()> {
        if overlap > self.threshold {
            Ok(())
        } else {
            Err(Error::CoveringViolation { endpoint, overlap })
        }
    }
}

/// `arg<a|b>`; undefined for orthogonal states.
pub fn pancharatnam_phase(a: &StateVector, b: &StateVector) -> Result<PhaseValue> {
    let ov = inner(a, b)?;
    if ov.norm() < ORTHOGONALITY_THRESHOLD {
        return Err(Error::Orthogonal {
            context: "Pancharatnam phase is undefined",
            overlap: ov.norm(),
        });
    }
    Ok(PhaseValue::principal(principal_arg(ov)))
}

/// Projective phase `arg<a|i><i|b>`. Defined whenever `a` and `b` are both in
/// the covering of `i`, including when `a` and `b` are orthogonal to each other.
/// Independent of the gauge of `i`.
pub fn projective_phase(a: &StateVector, i: &StateVector, b: &StateVector) -> Result<PhaseValue> {
    Covering::new(i).phase(a, b)
}

/// Transition function `S_ij(P) = <j|P><P|i> / |<j|P><P|i>|` relating the
/// coverings of `i` and `j` at the point `P`.
pub fn transition_function(
    i: &StateVector,
    j: &StateVector,
    p: &StateVector,
) -> Result<UnitPhasor> {
    let jp = inner(j, p)?;
    let pi = inner(p, i)?;
    let overlap = jp.norm().min(pi.norm());
    if overlap < ORTHOGONALITY_THRESHOLD {
        return Err(Error::CoveringViolation {
            endpoint: Endpoint::Probe,
            overlap,
        });
    }
    UnitPhasor::from_complex(jp * pi)
}

/// Arg of the cyclic product `<s1|s2><s2|s3>...<sN|s1>`, for `N >= 3`.
pub fn bargmann_invariant(states: &[StateVector]) -> Result<PhaseValue> {
    let n = states.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "Bargmann invariant needs at least 3 states, got {n}"
        )));
    }
    // Accumulate normalized factors; the raw product can underflow for long cycles.
    let mut acc = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let next = (k + 1) % n;
        let ov = inner(&states[k], &states[next])?;
        let mag = ov.norm();
        if mag < ORTHOGONALITY_THRESHOLD {
            return Err(Error::UndefinedInvariant {
                index: k,
                next,
                overlap: mag,
            });
        }
        acc *= ov / mag;
    }
    Ok(PhaseValue::principal(principal_arg(acc)))
}

/// Adds two segment phases measured against the same projection state.
/// Two principal inputs give a principal output.
pub fn compose_segments(p1: PhaseValue, p2: PhaseValue) -> PhaseValue {
    let sum = p1.angle + p2.angle;
    match (p1.branch, p2.branch) {
        (Branch::Principal, Branch::Principal) => PhaseValue::principal(sum),
        _ => PhaseValue::unwrapped(sum),
    }
}

/// `e^{i phi_i(0,t1)} S_ij(t1) e^{i phi_j(t1,t2)} S_ji(t2) e^{i phi_i(t2,t3)}`:
/// carries a phase through a stretch where only the covering of `j` applies.
pub fn switch_covering(
    phi_i_before: UnitPhasor,
    s_at_t1: UnitPhasor,
    phi_j_inside: UnitPhasor,
    s_at_t2: UnitPhasor,
    phi_i_after: UnitPhasor,
) -> UnitPhasor {
    phi_i_before * s_at_t1 * phi_j_inside * s_at_t2 * phi_i_after
}
