//! Spin operators, rotations and Schrödinger evolution (`hbar = 1`).
//!
//! Spin-`m` matrices use the basis ordering `|m>, |m-1>, ..., |-m>`, so index
//! `0` is the highest weight state.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statekit::{inner, max_entry, StateVector};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Norm drift per RK4 step above which the step is rejected.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

/// A spin quantum number `m`, stored as the positive integer `2m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub fn new(m: f64) -> Result<Self> {
        let t = 2.0 * m;
        if !(t.is_finite() && t >= 1.0 && (t - t.round()).abs() < 1e-12) {
            return Err(Error::InvalidSpin(m));
        }
        Ok(Self {
            twice: t.round() as u32,
        })
    }

    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(Error::InvalidSpin(0.0));
        }
        Ok(Self { twice })
    }

    pub fn m(&self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub fn twice_m(&self) -> u32 {
        self.twice
    }

    pub fn dim(&self) -> usize {
        self.twice as usize + 1
    }

    /// `|mz>` for `mz in {m, m-1, ..., -m}`.
    pub fn state(&self, mz: f64) -> Result<StateVector> {
        let k = self.m() - mz;
        if k < -1e-12 || k > f64::from(self.twice) + 1e-12 || (k - k.round()).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mz = {mz} is not a weight of spin {}",
                self.m()
            )));
        }
        StateVector::basis(self.dim(), k.round() as usize)
    }

    /// `|m>`.
    pub fn highest(&self) -> StateVector {
        StateVector::basis(self.dim(), 0).expect("dim >= 2")
    }

    /// `|-m>`.
    pub fn lowest(&self) -> StateVector {
        StateVector::basis(self.dim(), self.dim() - 1).expect("dim >= 2")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<Complex64>,
}

impl HermitianOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        let defect = max_entry(&(&matrix - matrix.adjoint()));
        if defect > 1e-12 * max_entry(&matrix).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        // Symmetrize away the rounding-level defect.
        let matrix = (&matrix + matrix.adjoint()).unscale(2.0);
        Ok(Self { matrix })
    }

    /// Random Hermitian matrix with complex Gaussian entries.
    pub fn random<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let g = DMatrix::from_fn(dim, dim, |_, _| crate::statekit::gaussian_complex(rng));
        Self {
            matrix: (&g + g.adjoint()).unscale(2.0),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `sum_k c_k H_k`. All operands must share a dimension.
    pub fn combination(terms: &[(f64, &HermitianOperator)]) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, h)| h.dim())
            .ok_or_else(|| Error::InvalidArgument("empty combination".into()))?;
        let mut m = DMatrix::zeros(dim, dim);
        for (c, h) in terms {
            if h.dim() != dim {
                return Err(Error::DimensionMismatch(h.dim(), dim));
            }
            m += h.matrix.scale(*c);
        }
        Ok(Self { matrix: m })
    }

    /// `<psi|H|psi>`, real by Hermiticity.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch(psi.dim(), self.dim()));
        }
        Ok(psi.as_vector().dotc(&(&self.matrix * psi.as_vector())).re)
    }

    /// Sorted eigenvalues and the matching orthonormal eigenvectors (columns).
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        (values, vectors)
    }

    /// `f(H)` by spectral decomposition.
    pub fn spectral_map(&self, f: impl Fn(f64) -> Complex64) -> DMatrix<Complex64> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let v = &eig.eigenvectors;
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            eig.eigenvalues.iter().map(|&x| f(x)),
        ));
        v * d * v.adjoint()
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> UnitaryOperator {
        UnitaryOperator {
            matrix: self.spectral_map(|x| Complex64::from_polar(1.0, -x * t)),
        }
    }

    /// Largest eigenvalue magnitude.
    pub fn operator_norm(&self) -> f64 {
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .fold(0.0_f64, |a, x| a.max(x.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    matrix: DMatrix<Complex64>,
}

impl UnitaryOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        let n = matrix.nrows();
        let defect = max_entry(&(matrix.adjoint() * &matrix - DMatrix::identity(n, n)));
        if defect > 1e-10 {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `<row|U|col>`.
    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        psi.apply(&self.matrix)
    }

    pub fn compose(&self, other: &UnitaryOperator) -> UnitaryOperator {
        UnitaryOperator {
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// `max |U^dagger U - 1|` entry.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        max_entry(&(self.matrix.adjoint() * &self.matrix - DMatrix::identity(n, n)))
    }
}

#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub sx: HermitianOperator,
    pub sy: HermitianOperator,
    pub sz: HermitianOperator,
}

/// Standard `(2m+1)`-dimensional angular-momentum matrices.
pub fn spin_operators(spin: Spin) -> SpinOperators {
    let m = spin.m();
    let n = spin.dim();
    let mut raise = DMatrix::<Complex64>::zeros(n, n);
    for k in 1..n {
        let mz = m - k as f64;
        raise[(k - 1, k)] = Complex64::new((m * (m + 1.0) - mz * (mz + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let sx = (&raise + &lower).unscale(2.0);
    let sy = (&raise - &lower) * Complex64::new(0.0, -0.5);
    let sz = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            Complex64::new(m - r as f64, 0.0)
        } else {
            C0
        }
    });
    SpinOperators {
        sx: HermitianOperator { matrix: sx },
        sy: HermitianOperator { matrix: sy },
        sz: HermitianOperator { matrix: sz },
    }
}

/// `d_y(theta) = exp(-i theta S_y)`.
pub fn rotation_y(spin: Spin, theta: f64) -> UnitaryOperator {
    spin_operators(spin).sy.propagator(theta)
}

/// Spin coherent state `|theta, phi> = exp(-i phi S_z) d_y(theta) |m>`. For
/// spin 1/2 this is the Bloch chart state.
pub fn coherent_state(spin: Spin, theta: f64, phi: f64) -> StateVector {
    let ops = spin_operators(spin);
    let psi = rotation_y(spin, theta)
        .apply(&spin.highest())
        .expect("dimensions agree");
    ops.sz
        .propagator(phi)
        .apply(&psi)
        .expect("dimensions agree")
}

/// A Hamiltonian that can be sampled at any time.
pub trait Hamiltonian {
    fn dim(&self) -> usize;
    fn at(&self, t: f64) -> HermitianOperator;
}

impl Hamiltonian for HermitianOperator {
    fn dim(&self) -> usize {
        HermitianOperator::dim(self)
    }

    fn at(&self, _t: f64) -> HermitianOperator {
        self.clone()
    }
}

/// Time-dependent Hamiltonian given by a closure.
pub struct TimeDependent<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64) -> HermitianOperator> TimeDependent<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64) -> HermitianOperator> Hamiltonian for TimeDependent<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, t: f64) -> HermitianOperator {
        (self.f)(t)
    }
}

/// Sampled trajectory `t_k -> |psi(t_k)>`, optionally with `<psi|H|psi>` per sample.
#[derive(Debug, Clone)]
pub struct EvolutionPath {
    times: Vec<f64>,
    states: Vec<StateVector>,
    hamiltonian_trace: Option<Vec<f64>>,
}

impl EvolutionPath {
    pub fn new(times: Vec<f64>, states: Vec<StateVector>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::InvalidArgument(format!(
                "{} times for {} states",
                times.len(),
                states.len()
            )));
        }
        if states.is_empty() {
            return Err(Error::InvalidArgument("empty path".into()));
        }
        if times
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater))
        {
            return Err(Error::InvalidArgument(
                "times must be strictly increasing".into(),
            ));
        }
        let dim = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch(s.dim(), dim));
        }
        Ok(Self {
            times,
            states,
            hamiltonian_trace: None,
        })
    }

    /// States on a uniform grid of `samples` points over `[t0, t1]`.
    pub fn from_fn(
        t0: f64,
        t1: f64,
        samples: usize,
        f: impl Fn(f64) -> Result<StateVector>,
    ) -> Result<Self> {
        let grid = uniform_grid(t0, t1, samples)?;
        let states = grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, states)
    }

    pub fn with_trace(mut self, trace: Vec<f64>) -> Result<Self> {
        if trace.len() != self.states.len() {
            return Err(Error::InvalidArgument(
                "trace length differs from path length".into(),
            ));
        }
        self.hamiltonian_trace = Some(trace);
        Ok(self)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn hamiltonian_trace(&self) -> Option<&[f64]> {
        self.hamiltonian_trace.as_deref()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn first(&self) -> &StateVector {
        &self.states[0]
    }

    pub fn last(&self) -> &StateVector {
        &self.states[self.states.len() - 1]
    }

    /// `|<psi_first|psi_last>|^2`.
    pub fn closure_fidelity(&self) -> f64 {
        inner(self.first(), self.last()).map_or(0.0, |z| z.norm_sqr())
    }

    /// Smallest `|<psi_k|psi_{k+1}>|` over adjacent samples.
    pub fn min_adjacent_overlap(&self) -> f64 {
        self.states
            .windows(2)
            .filter_map(|w| inner(&w[0], &w[1]).ok())
            .map(|z| z.norm())
            .fold(1.0, f64::min)
    }

    /// Appends `other`, whose first state must be the same ray as this path's
    /// last. `other` is rephased to continue without a jump, shifted in time
    /// and its first sample dropped. The Hamiltonian trace is kept only if
    /// both paths carry one.
    pub fn concat(&self, other: &EvolutionPath) -> Result<EvolutionPath> {
        let ov = inner(self.last(), other.first())?;
        if (ov.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::NotClosed {
                fidelity: ov.norm_sqr(),
            });
        }
        let fix = ov.conj() / ov.norm();
        let shift = self.times[self.times.len() - 1] - other.times[0];
        let mut times = self.times.clone();
        let mut states = self.states.clone();
        times.extend(other.times[1..].iter().map(|t| t + shift));
        states.extend(other.states[1..].iter().map(|s| s.scaled(fix)));
        let trace = match (&self.hamiltonian_trace, &other.hamiltonian_trace) {
            (Some(a), Some(b)) => {
                let mut t = a.clone();
                t.extend_from_slice(&b[1..]);
                Some(t)
            }
            _ => None,
        };
        Ok(EvolutionPath {
            times,
            states,
            hamiltonian_trace: trace,
        })
    }
}

/// `samples` equally spaced points on `[t0, t1]` inclusive.
pub fn uniform_grid(t0: f64, t1: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || t1.partial_cmp(&t0) != Some(Ordering::Greater) {
        return Err(Error::InvalidArgument(format!(
            "grid needs >= 2 samples on an increasing interval, got {samples} on [{t0}, {t1}]"
        )));
    }
    let h = (t1 - t0) / (samples - 1) as f64;
    Ok((0..samples)
        .map(|k| {
            if k + 1 == samples {
                t1
            } else {
                t0 + h * k as f64
            }
        })
        .collect())
}

fn apply_minus_i(h: &DMatrix<Complex64>, v: &DVector<Complex64>) -> DVector<Complex64> {
    (h * v) * (-I)
}

/// Integrates `i d|psi>/dt = H(t)|psi>` with one classical RK4 step per grid
/// interval, renormalizing after each step, and records `<psi|H|psi>`.
pub fn evolve<H: Hamiltonian + ?Sized>(
    h: &H,
    psi0: &StateVector,
    t_grid: &[f64],
) -> Result<EvolutionPath> {
    if psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch(psi0.dim(), h.dim()));
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    let mut states = Vec::with_capacity(t_grid.len());
    let mut trace = Vec::with_capacity(t_grid.len());
    let mut psi = psi0.clone();
    trace.push(h.at(t_grid[0]).expectation(&psi)?);
    states.push(psi.clone());
    for (step, w) in t_grid.windows(2).enumerate() {
        let (t, dt) = (w[0], w[1] - w[0]);
        let h0 = h.at(t);
        let hm = h.at(t + 0.5 * dt);
        let h1 = h.at(t + dt);
        let y = psi.as_vector();
        let k1 = apply_minus_i(h0.matrix(), y);
        let k2 = apply_minus_i(hm.matrix(), &(y + k1.scale(0.5 * dt)));
        let k3 = apply_minus_i(hm.matrix(), &(y + k2.scale(0.5 * dt)));
        let k4 = apply_minus_i(h1.matrix(), &(y + k3.scale(dt)));
        let next = y + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);
        let drift = (next.norm() - 1.0).abs();
        if drift.is_nan() || drift > NORM_DRIFT_LIMIT {
            return Err(Error::StepSize { step, drift });
        }
        psi = StateVector::from_vector(next)?;
        trace.push(h1.expectation(&psi)?);
        states.push(psi.clone());
    }
    EvolutionPath::new(t_grid.to_vec(), states)?.with_trace(trace)
}

/// Exact evolution `exp(-i H (t - t_0)) |psi0>` for constant `H`.
pub fn evolve_exact(
    h: &HermitianOperator,
    psi0: &StateVector,
    t_grid: &[f64],
) -> Result<EvolutionPath> {
    if psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch(psi0.dim(), h.dim()));
    }
    let t0 = *t_grid
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty time grid".into()))?;
    let states = t_grid
        .iter()
        .map(|&t| h.propagator(t - t0).apply(psi0))
        .collect::<Result<Vec<_>>>()?;
    let trace = states
        .iter()
        .map(|s| h.expectation(s))
        .collect::<Result<Vec<_>>>()?;
    EvolutionPath::new(t_grid.to_vec(), states)?.with_trace(trace)
}

/// Accumulated `int <psi|H|psi> dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DynamicalPhaseRecord {
    pub accumulated: f64,
}

impl DynamicalPhaseRecord {
    pub fn concat(self, other: DynamicalPhaseRecord) -> DynamicalPhaseRecord {
        DynamicalPhaseRecord {
            accumulated: self.accumulated + other.accumulated,
        }
    }
}

/// Cumulative trapezoid integral of the Hamiltonian trace, one value per sample.
pub fn cumulative_dynamical_phase(path: &EvolutionPath) -> Result<Vec<f64>> {
    let trace = path.hamiltonian_trace().ok_or(Error::MissingTrace)?;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(trace.len());
    out.push(0.0);
    for k in 1..trace.len() {
        acc += 0.5 * (trace[k - 1] + trace[k]) * (path.times[k] - path.times[k - 1]);
        out.push(acc);
    }
    Ok(out)
}

pub fn dynamical_phase(path: &EvolutionPath) -> Result<DynamicalPhaseRecord> {
    let cum = cumulative_dynamical_phase(path)?;
    Ok(DynamicalPhaseRecord {
        accumulated: *cum.last().expect("non-empty path"),
    })
}

/// Multiplies each state by `e^{+i int_0^t <psi|H|psi> dt'}`. The returned
/// path carries a zero trace: its residual dynamical phase is nil, so a
/// second removal is a no-op.
pub fn remove_dynamical_phase(path: &EvolutionPath) -> Result<EvolutionPath> {
    let cum = cumulative_dynamical_phase(path)?;
    let states = path
        .states
        .iter()
        .zip(&cum)
        .map(|(s, &d)| s.scaled(Complex64::from_polar(1.0, d)))
        .collect();
    Ok(EvolutionPath {
        times: path.times.clone(),
        states,
        hamiltonian_trace: Some(vec![0.0; path.len()]),
    })
}

/// States `exp(i delta lambda(theta_k)) |j>` over `theta_grid`: a path that
/// stays within fidelity `1 - O(delta^2)` of `|j>`.
pub fn near_orthogonal_loop(
    j: &StateVector,
    generator: impl Fn(f64) -> HermitianOperator,
    delta: f64,
    theta_grid: &[f64],
) -> Result<EvolutionPath> {
    if !(0.0..=0.1).contains(&delta) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} outside [0, 0.1]"
        )));
    }
    let states = theta_grid
        .iter()
        .map(|&th| {
            let lam = generator(th);
            if lam.dim() != j.dim() {
                return Err(Error::DimensionMismatch(lam.dim(), j.dim()));
            }
            lam.propagator(-delta).apply(j)
        })
        .collect::<Result<Vec<_>>>()?;
    EvolutionPath::new(theta_grid.to_vec(), states)
}

/// `lambda(phi) = cos(phi) S_y - sin(phi) S_x`, the generator for which
/// `exp(i delta lambda(phi)) |-m>` is the coherent state `|pi - delta, phi>`
/// up to a phase.
pub fn spin_loop_generator(spin: Spin) -> impl Fn(f64) -> HermitianOperator {
    let ops = spin_operators(spin);
    move |phi: f64| {
        HermitianOperator::combination(&[(phi.cos(), &ops.sy), (-phi.sin(), &ops.sx)])
            .expect("same dimension")
    }
}

/// One full turn of the spin-`m` loop near `|-m>`: `samples` points over `phi in [0, 2 pi]`.
pub fn spin_near_orthogonal_loop(spin: Spin, delta: f64, samples: usize) -> Result<EvolutionPath> {
    let grid = uniform_grid(0.0, TAU, samples)?;
    near_orthogonal_loop(&spin.lowest(), spin_loop_generator(spin), delta, &grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{to_state, BlochPoint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const SPINS: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 2.5];

    fn op_dist(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        max_entry(&(a - b))
    }

    /// Truncated Taylor series for exp(A); independent of the eigen route.
    fn taylor_exp(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        // scaling and squaring
        let norm = max_entry(a) * a.nrows() as f64;
        let squarings = (norm.max(1.0).log2().ceil() as u32) + 4;
        let scaled = a.unscale(2f64.powi(squarings as i32));
        let n = a.nrows();
        let mut term = DMatrix::<Complex64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &scaled / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn spin_validation() {
        assert!(Spin::new(0.5).is_ok());
        assert!(Spin::new(3.0).is_ok());
        assert_eq!(Spin::new(0.3), Err(Error::InvalidSpin(0.3)));
        assert_eq!(Spin::new(0.0), Err(Error::InvalidSpin(0.0)));
        assert!(Spin::new(-1.0).is_err());
        assert_eq!(Spin::new(1.5).unwrap().dim(), 4);
        assert!(Spin::new(1.0).unwrap().state(0.5).is_err());
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let ops = spin_operators(Spin::new(0.5).unwrap());
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let sx =
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        let sy =
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.0, 0.0)]);
        let sz =
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(op_dist(ops.sx.matrix(), &sx) < 1e-15);
        assert!(op_dist(ops.sy.matrix(), &sy) < 1e-15);
        assert!(op_dist(ops.sz.matrix(), &sz) < 1e-15);
    }

    #[test]
    fn spin_one_sz() {
        let ops = spin_operators(Spin::new(1.0).unwrap());
        let diag: Vec<f64> = (0..3).map(|k| ops.sz.matrix()[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
    }

    #[test]
    fn commutation_relations() {
        for m in SPINS {
            let ops = spin_operators(Spin::new(m).unwrap());
            let (x, y, z) = (ops.sx.matrix(), ops.sy.matrix(), ops.sz.matrix());
            let comm = x * y - y * x;
            assert!(op_dist(&comm, &(z * I)) < 1e-12, "m = {m}");
            let casimir = x * x + y * y + z * z;
            let n = x.nrows();
            let expected =
                DMatrix::<Complex64>::identity(n, n) * Complex64::new(m * (m + 1.0), 0.0);
            assert!(op_dist(&casimir, &expected) < 1e-12);
        }
    }

    #[test]
    fn sy_spectrum_matches_sz() {
        for m in SPINS {
            let ops = spin_operators(Spin::new(m).unwrap());
            let (ey, _) = ops.sy.eigen();
            let (ez, _) = ops.sz.eigen();
            for (a, b) in ey.iter().zip(&ez) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_y_matches_taylor_and_closed_form() {
        for m in [0.5, 1.0, 1.5] {
            let spin = Spin::new(m).unwrap();
            let ops = spin_operators(spin);
            assert!(
                op_dist(
                    rotation_y(spin, 0.0).matrix(),
                    &DMatrix::identity(spin.dim(), spin.dim())
                ) < 1e-14
            );
            for &theta in &[0.3, 1.1, 2.0, 3.0] {
                let d = rotation_y(spin, theta);
                assert!(d.unitarity_defect() < 1e-12);
                let oracle = taylor_exp(&(ops.sy.matrix() * Complex64::new(0.0, -theta)));
                assert!(op_dist(d.matrix(), &oracle) < 1e-12);
                let closed = (theta / 2.0).cos().powi(spin.twice_m() as i32);
                assert!((d.element(0, 0) - Complex64::new(closed, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lowest_weight_element_nonzero_off_poles() {
        for m in SPINS {
            let spin = Spin::new(m).unwrap();
            for k in 1..20 {
                let beta = PI * k as f64 / 20.0;
                let d = rotation_y(spin, beta);
                assert!(d.element(spin.dim() - 1, 0).norm() > 1e-8);
            }
            assert!(rotation_y(spin, PI).element(0, 0).norm() < 1e-12);
        }
    }

    #[test]
    fn coherent_state_matches_bloch_chart() {
        let spin = Spin::new(0.5).unwrap();
        let a = coherent_state(spin, 0.8, 1.3);
        let b = to_state(&BlochPoint::new(0.8, 1.3));
        assert!((a.as_vector() - b.as_vector()).norm() < 1e-13);
    }

    #[test]
    fn eigenstate_evolution() {
        for m in [0.5, 1.0, 2.0] {
            let spin = Spin::new(m).unwrap();
            let h = spin_operators(spin).sz;
            let grid = uniform_grid(0.0, 3.0, 3001).unwrap();
            let path = evolve(&h, &spin.highest(), &grid).unwrap();
            for (t, s) in path.times().iter().zip(path.states()) {
                let expected = Complex64::from_polar(1.0, -m * t);
                assert!((s.amplitudes()[0] - expected).norm() < 1e-10);
            }
            let flat = remove_dynamical_phase(&path).unwrap();
            for s in flat.states() {
                assert!((s.amplitudes()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn larmor_precession() {
        let spin = Spin::new(0.5).unwrap();
        let h = spin_operators(spin).sz;
        let p = BlochPoint::new(1.0, 0.4);
        let grid = uniform_grid(0.0, 5.0, 5001).unwrap();
        let path = evolve(&h, &to_state(&p), &grid).unwrap();
        for (t, s) in path.times().iter().zip(path.states()) {
            let target = to_state(&BlochPoint::new(1.0, 0.4 + t));
            assert!((inner(s, &target).unwrap().norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rk4_matches_exact_for_constant_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for dim in 2..=5 {
            let h = HermitianOperator::random(dim, &mut rng);
            let psi0 = StateVector::random(dim, &mut rng).unwrap();
            let grid = uniform_grid(0.0, 10.0, 10_001).unwrap();
            let num = evolve(&h, &psi0, &grid).unwrap();
            let exact = evolve_exact(&h, &psi0, &grid).unwrap();
            let err = num
                .states()
                .iter()
                .zip(exact.states())
                .map(|(a, b)| {
                    (a.as_vector() - b.as_vector())
                        .iter()
                        .map(|z| z.norm())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "dim {dim}: {err}");
            let trace = num.hamiltonian_trace().unwrap();
            assert!(trace.iter().all(|e| (e - trace[0]).abs() < 1e-9));
            assert!(num.states().iter().all(|s| (s.norm() - 1.0).abs() < 1e-10));
        }
    }

    #[test]
    fn coarse_step_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = HermitianOperator::random(3, &mut rng);
        let psi0 = StateVector::random(3, &mut rng).unwrap();
        let grid = uniform_grid(0.0, 10.0, 11).unwrap();
        assert!(matches!(
            evolve(&h, &psi0, &grid),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn time_dependent_evolution_conserves_norm() {
        let spin = Spin::new(1.0).unwrap();
        let ops = spin_operators(spin);
        let h = TimeDependent::new(3, move |t: f64| {
            HermitianOperator::combination(&[(1.0, &ops.sz), (0.5 * t.cos(), &ops.sx)]).unwrap()
        });
        let grid = uniform_grid(0.0, 20.0, 20_001).unwrap();
        let path = evolve(&h, &spin.highest(), &grid).unwrap();
        assert!(path.states().iter().all(|s| (s.norm() - 1.0).abs() < 1e-10));
        assert!(path.min_adjacent_overlap() > 0.99);
    }

    #[test]
    fn removal_is_idempotent_and_ray_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let h = HermitianOperator::random(3, &mut rng);
        let psi0 = StateVector::random(3, &mut rng).unwrap();
        let probe = StateVector::random(3, &mut rng).unwrap();
        let grid = uniform_grid(0.0, 4.0, 4001).unwrap();
        let path = evolve(&h, &psi0, &grid).unwrap();
        let once = remove_dynamical_phase(&path).unwrap();
        let twice = remove_dynamical_phase(&once).unwrap();
        for ((a, b), c) in path.states().iter().zip(once.states()).zip(twice.states()) {
            assert!((b.as_vector() - c.as_vector()).norm() < 1e-15);
            let pa = inner(&probe, a).unwrap().norm();
            let pb = inner(&probe, b).unwrap().norm();
            assert!((pa - pb).abs() < 1e-15);
        }
        let bare = EvolutionPath::new(path.times().to_vec(), path.states().to_vec()).unwrap();
        assert_eq!(
            remove_dynamical_phase(&bare).unwrap_err(),
            Error::MissingTrace
        );
    }

    #[test]
    fn dynamical_phase_is_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = HermitianOperator::random(2, &mut rng);
        let psi0 = StateVector::random(2, &mut rng).unwrap();
        let g1 = uniform_grid(0.0, 1.0, 1001).unwrap();
        let p1 = evolve(&h, &psi0, &g1).unwrap();
        let g2 = uniform_grid(1.0, 2.5, 1501).unwrap();
        let p2 = evolve(&h, p1.last(), &g2).unwrap();
        let whole = p1.concat(&p2).unwrap();
        let a = dynamical_phase(&p1).unwrap();
        let b = dynamical_phase(&p2).unwrap();
        let ab = dynamical_phase(&whole).unwrap();
        assert!((a.concat(b).accumulated - ab.accumulated).abs() < 1e-12);
    }

    #[test]
    fn spin_loop_generator_traces_coherent_circle() {
        let delta = 1e-2;
        for m in [0.5, 1.0, 2.0] {
            let spin = Spin::new(m).unwrap();
            let path = spin_near_orthogonal_loop(spin, delta, 33).unwrap();
            for (phi, s) in path.times().iter().zip(path.states()) {
                let target = coherent_state(spin, PI - delta, *phi);
                assert!((inner(s, &target).unwrap().norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn near_orthogonal_loop_fidelity_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h1 = HermitianOperator::random(3, &mut rng);
        let h2 = HermitianOperator::random(3, &mut rng);
        let j = StateVector::random(3, &mut rng).unwrap();
        let gen =
            |th: f64| HermitianOperator::combination(&[(th.cos(), &h1), (th.sin(), &h2)]).unwrap();
        let grid = uniform_grid(0.0, TAU, 64).unwrap();
        for &delta in &[0.0, 0.01, 0.05, 0.1] {
            let path = near_orthogonal_loop(&j, gen, delta, &grid).unwrap();
            for (th, s) in grid.iter().zip(path.states()) {
                let fid = inner(&j, s).unwrap().norm_sqr();
                let bound = 1.0 - (delta * gen(*th).operator_norm()).powi(2);
                assert!(fid >= bound - 1e-12);
                if delta == 0.0 {
                    assert!((fid - 1.0).abs() < 1e-14);
                }
            }
        }
        assert!(near_orthogonal_loop(&j, gen, 0.2, &grid).is_err());
    }
}
