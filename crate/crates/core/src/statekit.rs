//! State algebra: unit vectors, inner products, ray-space geodesics and the
//! discrete connection `arg<a|b>` between successive samples of a path.
//!
//! A [`StateVector`] is a concrete gauge representative, not a ray. Anything
//! that should only depend on the ray is exposed through gauge-invariant
//! functions elsewhere in the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::angle::principal_arg;
use crate::error::{Error, Result};

/// Below this overlap magnitude two states are treated as orthogonal.
pub const ORTHOGONALITY_THRESHOLD: f64 = 1e-10;

/// Unit-norm complex amplitude vector of dimension at least 2.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<Complex64>,
}

impl StateVector {
    /// Normalizes `amplitudes` into a state.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(amplitudes))
    }

    pub fn from_vector(v: DVector<Complex64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::DimensionTooSmall(v.len()));
        }
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            amps: v.unscale(norm),
        })
    }

    /// Real amplitudes, normalized.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// `k`-th computational basis vector.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if k >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {k} out of range for dimension {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[k] = Complex64::new(1.0, 0.0);
        Ok(Self { amps: v })
    }

    /// Haar-random state.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        let v = DVector::from_fn(dim, |_, _| gaussian_complex(rng));
        Self::from_vector(v)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.amps.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// The same ray with the representative multiplied by `e^{i alpha}`.
    pub fn rephased(&self, alpha: f64) -> Self {
        self.scaled(Complex64::from_polar(1.0, alpha))
    }

    /// Multiplies by a unit-modulus factor. The factor is not checked; the
    /// result is renormalized.
    pub(crate) fn scaled(&self, factor: Complex64) -> Self {
        let v = &self.amps * factor;
        let n = v.norm();
        Self { amps: v.unscale(n) }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        inner(self, other)
    }

    /// `|<a|b>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(inner(self, other)?.norm_sqr())
    }

    /// Applies a square matrix and renormalizes.
    pub fn apply(&self, m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        if m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(m.ncols(), self.dim()));
        }
        Self::from_vector(m * &self.amps)
    }
}

pub(crate) fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..dim {
        let d = r[(k, k)];
        let ph = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(k);
        col *= ph;
    }
    q
}

/// Largest entry modulus of a complex matrix.
pub(crate) fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `sum_k conj(a_k) b_k`.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(a.amps.dotc(&b.amps))
}

/// Shortest ray-space geodesic between two non-orthogonal states, with the
/// far endpoint lifted so that `<a|b_lifted>` is real and positive.
#[derive(Debug, Clone)]
pub struct Geodesic {
    a: StateVector,
    b_lifted: StateVector,
    /// `arg<a|b>` of the original (unlifted) far endpoint.
    lift_phase: f64,
    arc: f64,
}

impl Geodesic {
    pub fn new(a: &StateVector, b: &StateVector) -> Result<Self> {
        let ov = inner(a, b)?;
        let mag = ov.norm();
        if mag < ORTHOGONALITY_THRESHOLD {
            return Err(Error::Orthogonal {
                context: "geodesic between orthogonal rays is not unique",
                overlap: mag,
            });
        }
        let lift_phase = principal_arg(ov);
        let b_lifted = b.rephased(-lift_phase);
        // Chord length keeps small arcs accurate where acos(|<a|b>|) would not.
        let chord = (&b_lifted.amps - &a.amps).norm();
        let arc = 2.0 * (0.5 * chord).min(1.0).asin();
        Ok(Self {
            a: a.clone(),
            b_lifted,
            lift_phase,
            arc,
        })
    }

    pub fn endpoint_a(&self) -> &StateVector {
        &self.a
    }

    pub fn endpoint_b_lifted(&self) -> &StateVector {
        &self.b_lifted
    }

    /// Ray-space arc angle `Theta`, with `cos Theta = |<a|b>|`.
    pub fn arc_angle(&self) -> f64 {
        self.arc
    }

    /// Parallel-transported point at `s in [0, 1]`.
    pub fn point(&self, s: f64) -> StateVector {
        let th = self.arc;
        if th == 0.0 {
            return self.a.clone();
        }
        let sin_th = th.sin();
        let ca = ((1.0 - s) * th).sin() / sin_th;
        let cb = (s * th).sin() / sin_th;
        let v = self.a.amps.scale(ca) + self.b_lifted.amps.scale(cb);
        let n = v.norm();
        StateVector { amps: v.unscale(n) }
    }

    /// Point at `s` rephased by `e^{i s arg<a|b>}`, so that `s = 1` lands on the
    /// original far endpoint rather than its lift. The connection along this
    /// curve is the constant `arg<a|b>`.
    pub fn gauge_matched_point(&self, s: f64) -> StateVector {
        self.point(s).rephased(s * self.lift_phase)
    }

    /// `samples` equally spaced points from `s = 0` to `s = 1` inclusive.
    pub fn sample(&self, samples: usize) -> Vec<StateVector> {
        sample_unit_interval(samples)
            .map(|s| self.point(s))
            .collect()
    }

    pub fn sample_gauge_matched(&self, samples: usize) -> Vec<StateVector> {
        sample_unit_interval(samples)
            .map(|s| self.gauge_matched_point(s))
            .collect()
    }
}

fn sample_unit_interval(samples: usize) -> impl Iterator<Item = f64> {
    let n = samples.max(2);
    (0..n).map(move |k| k as f64 / (n - 1) as f64)
}

/// Discrete connection `arg<a|b>` on `(-pi, pi]` for successive samples of a
/// smooth path. Approximates `int Im<psi|d psi>` over the step.
pub fn connection_increment(a: &StateVector, b: &StateVector) -> Result<f64> {
    let ov = inner(a, b)?;
    let mag = ov.norm();
    if mag < ORTHOGONALITY_THRESHOLD {
        return Err(Error::StepTooCoarse { overlap: mag });
    }
    Ok(principal_arg(ov))
}

/// Sum of [`connection_increment`] over consecutive pairs.
pub fn connection_sum(states: &[StateVector]) -> Result<f64> {
    states
        .windows(2)
        .map(|w| connection_increment(&w[0], &w[1]))
        .sum()
}
