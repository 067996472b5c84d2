//! Off-diagonal geometric phases and their reconstruction from projective
//! phases.
//!
//! When two evolving states `psi_j`, `psi_k` swap roles, so that
//! `<psi_j(s1)|psi_j(s2)>` vanishes, the usual phase is undefined but
//! `gamma_jk = arg<psi_j(s1)|psi_k(s2)> + arg<psi_k(s1)|psi_j(s2)>` is not.
//! Against a reference `|i>` overlapping all endpoints it splits exactly into
//! two triangle Bargmann invariants plus the two projective phases
//! `phi_i(psi_j(s1), psi_j(s2))` and `phi_i(psi_k(s1), psi_k(s2))`, so `n`
//! stored projective phases determine every cycle relation among `n` labels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::phases::{
    bargmann_invariant, pancharatnam_phase, projective_phase, PhaseValue, UnitPhasor,
};
use crate::statekit::{inner, StateVector, ORTHOGONALITY_THRESHOLD};

/// Minimum overlap a reference state must have with every endpoint.
pub const REFERENCE_OVERLAP_BAR: f64 = 0.1;

/// Endpoints of two evolving states at parameters `s1` and `s2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenpathPair {
    pub psi_j_start: StateVector,
    pub psi_j_end: StateVector,
    pub psi_k_start: StateVector,
    pub psi_k_end: StateVector,
}

impl EigenpathPair {
    /// Endpoints `(psi_j, psi_k)` before and after applying `u`.
    pub fn evolved(
        psi_j: &StateVector,
        psi_k: &StateVector,
        u: &nalgebra::DMatrix<num_complex::Complex64>,
    ) -> Result<Self> {
        Ok(Self {
            psi_j_start: psi_j.clone(),
            psi_j_end: psi_j.apply(u)?,
            psi_k_start: psi_k.clone(),
            psi_k_end: psi_k.apply(u)?,
        })
    }

    fn endpoints(&self) -> [(&'static str, &StateVector); 4] {
        [
            ("reference orthogonal to psi_j(s1)", &self.psi_j_start),
            ("reference orthogonal to psi_j(s2)", &self.psi_j_end),
            ("reference orthogonal to psi_k(s1)", &self.psi_k_start),
            ("reference orthogonal to psi_k(s2)", &self.psi_k_end),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffDiagonalPhases {
    pub sigma_jk: PhaseValue,
    pub sigma_kj: PhaseValue,
    pub gamma_jk: PhaseValue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    pub phi1: PhaseValue,
    pub phi2: PhaseValue,
    pub bargmann1: PhaseValue,
    pub bargmann2: PhaseValue,
    pub gamma_reconstructed: PhaseValue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffDiagResult {
    pub direct: OffDiagonalPhases,
    pub reconstruction: Reconstruction,
}

impl OffDiagResult {
    /// Phasor distance between the direct and reconstructed `gamma_jk`.
    pub fn discrepancy(&self) -> f64 {
        self.direct
            .gamma_jk
            .phasor()
            .distance(&self.reconstruction.gamma_reconstructed.phasor())
    }
}

fn sigma(a: &StateVector, b: &StateVector, context: &'static str) -> Result<PhaseValue> {
    let ov = inner(a, b)?;
    if ov.norm() <= ORTHOGONALITY_THRESHOLD {
        return Err(Error::Orthogonal {
            context,
            overlap: ov.norm(),
        });
    }
    pancharatnam_phase(a, b)
}

pub fn off_diagonal_direct(pair: &EigenpathPair) -> Result<OffDiagonalPhases> {
    let sigma_jk = sigma(&pair.psi_j_start, &pair.psi_k_end, "sigma_jk undefined")?;
    let sigma_kj = sigma(&pair.psi_k_start, &pair.psi_j_end, "sigma_kj undefined")?;
    Ok(OffDiagonalPhases {
        sigma_jk,
        sigma_kj,
        gamma_jk: PhaseValue::principal(sigma_jk.angle + sigma_kj.angle),
    })
}

fn check_reference(i: &StateVector, named: &[(&'static str, &StateVector)]) -> Result<()> {
    for (context, s) in named {
        let overlap = inner(i, s)?.norm();
        if overlap <= ORTHOGONALITY_THRESHOLD {
            return Err(Error::Orthogonal { context, overlap });
        }
    }
    Ok(())
}

/// Direct `gamma_jk` alongside its reconstruction through `|i>`.
pub fn off_diagonal_reconstructed(pair: &EigenpathPair, i: &StateVector) -> Result<OffDiagResult> {
    check_reference(i, &pair.endpoints())?;
    let direct = off_diagonal_direct(pair)?;
    let phi1 = projective_phase(&pair.psi_j_start, i, &pair.psi_j_end)?;
    let phi2 = projective_phase(&pair.psi_k_start, i, &pair.psi_k_end)?;
    let bargmann1 =
        bargmann_invariant(&[pair.psi_j_start.clone(), pair.psi_k_end.clone(), i.clone()])?;
    let bargmann2 =
        bargmann_invariant(&[pair.psi_k_start.clone(), pair.psi_j_end.clone(), i.clone()])?;
    let gamma_reconstructed =
        PhaseValue::principal(bargmann1.angle + bargmann2.angle + phi1.angle + phi2.angle);
    Ok(OffDiagResult {
        direct,
        reconstruction: Reconstruction {
            phi1,
            phi2,
            bargmann1,
            bargmann2,
            gamma_reconstructed,
        },
    })
}

/// Haar-random state with overlap above [`REFERENCE_OVERLAP_BAR`] against
/// every input.
pub fn reference_state_search(
    states: &[StateVector],
    trials: usize,
    seed: u64,
) -> Result<StateVector> {
    reference_state_search_with(states, trials, seed, REFERENCE_OVERLAP_BAR)
}

pub fn reference_state_search_with(
    states: &[StateVector],
    trials: usize,
    seed: u64,
    bar: f64,
) -> Result<StateVector> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidArgument("no states to cover".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..trials {
        let candidate = StateVector::random(first.dim(), &mut rng)?;
        let mut worst = f64::INFINITY;
        for s in states {
            worst = worst.min(inner(&candidate, s)?.norm());
        }
        if worst > bar {
            return Ok(candidate);
        }
        best = best.max(worst);
    }
    Err(Error::ReferenceNotFound {
        trials,
        min_overlap: best,
    })
}

/// Endpoints of `n` labelled states at `s1` (`start`) and `s2` (`end`).
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointSet {
    start: Vec<StateVector>,
    end: Vec<StateVector>,
}

impl EndpointSet {
    pub fn new(start: Vec<StateVector>, end: Vec<StateVector>) -> Result<Self> {
        if start.len() != end.len() {
            return Err(Error::DimensionMismatch(start.len(), end.len()));
        }
        if start.is_empty() {
            return Err(Error::InvalidArgument("empty endpoint set".into()));
        }
        let dim = start[0].dim();
        if let Some(bad) = start.iter().chain(&end).find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch(dim, bad.dim()));
        }
        Ok(Self { start, end })
    }

    /// Images of `states` under `u`.
    pub fn evolved(
        states: &[StateVector],
        u: &nalgebra::DMatrix<num_complex::Complex64>,
    ) -> Result<Self> {
        let end = states
            .iter()
            .map(|s| s.apply(u))
            .collect::<Result<Vec<_>>>()?;
        Self::new(states.to_vec(), end)
    }

    pub fn labels(&self) -> usize {
        self.start.len()
    }

    pub fn start(&self) -> &[StateVector] {
        &self.start
    }

    pub fn end(&self) -> &[StateVector] {
        &self.end
    }

    fn check_cycle(&self, cycle: &[usize]) -> Result<()> {
        if cycle.is_empty() {
            return Err(Error::InvalidArgument("empty cycle".into()));
        }
        if let Some(&c) = cycle.iter().find(|&&c| c >= self.labels()) {
            return Err(Error::InvalidArgument(format!(
                "label {c} out of range for {} states",
                self.labels()
            )));
        }
        Ok(())
    }
}

/// `sum_k arg<psi_{c_k}(s1)|psi_{c_{k+1}}(s2)>` around the cycle. A 1-cycle
/// is the ordinary endpoint phase, a 2-cycle is `gamma_jk`.
pub fn cycle_phase_direct(set: &EndpointSet, cycle: &[usize]) -> Result<PhaseValue> {
    set.check_cycle(cycle)?;
    let mut acc = UnitPhasor::ONE;
    for (k, &a) in cycle.iter().enumerate() {
        let b = cycle[(k + 1) % cycle.len()];
        acc = acc * sigma(&set.start[a], &set.end[b], "cycle overlap undefined")?.phasor();
    }
    Ok(PhaseValue::principal(acc.arg()))
}

/// The `n` projective phases `phi_i(psi_c(s1), psi_c(s2))`, one per label.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredPhases {
    reference: StateVector,
    phases: Vec<PhaseValue>,
}

impl StoredPhases {
    pub fn measure(set: &EndpointSet, i: &StateVector) -> Result<Self> {
        for s in set.start.iter().chain(&set.end) {
            let overlap = inner(i, s)?.norm();
            if overlap <= ORTHOGONALITY_THRESHOLD {
                return Err(Error::Orthogonal {
                    context: "reference orthogonal to an endpoint",
                    overlap,
                });
            }
        }
        let phases = set
            .start
            .iter()
            .zip(&set.end)
            .map(|(a, b)| projective_phase(a, i, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            reference: i.clone(),
            phases,
        })
    }

    pub fn reference(&self) -> &StateVector {
        &self.reference
    }

    pub fn phases(&self) -> &[PhaseValue] {
        &self.phases
    }
}

/// Cycle phase from stored projective phases plus triangle invariants of
/// the endpoint rays: `sum_k B(c_k(s1), c_{k+1}(s2), i) + sum_c phi_c`.
pub fn cycle_phase_reconstructed(
    set: &EndpointSet,
    stored: &StoredPhases,
    cycle: &[usize],
) -> Result<PhaseValue> {
    set.check_cycle(cycle)?;
    if stored.phases.len() != set.labels() {
        return Err(Error::DimensionMismatch(stored.phases.len(), set.labels()));
    }
    let i = &stored.reference;
    let mut total = 0.0;
    for (k, &a) in cycle.iter().enumerate() {
        let b = cycle[(k + 1) % cycle.len()];
        let tri = bargmann_invariant(&[set.start[a].clone(), set.end[b].clone(), i.clone()])?;
        total += tri.angle + stored.phases[a].angle;
    }
    Ok(PhaseValue::principal(total))
}

/// The first `n^2 - n + 1` cycles among `n` labels: 1-cycles, then longer
/// cycles by length, each written from its smallest label, in lexicographic
/// order.
pub fn phase_relation_cycles(n: usize) -> Vec<Vec<usize>> {
    let wanted = (n * n).saturating_sub(n) + 1;
    let mut out = Vec::with_capacity(wanted);
    for len in 1..=n {
        for set in combinations(n, len) {
            let (&head, tail) = set.split_first().expect("len >= 1");
            for perm in permutations(tail) {
                if out.len() == wanted {
                    return out;
                }
                let mut cycle = vec![head];
                cycle.extend(perm);
                out.push(cycle);
            }
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..n {
            cur.push(x);
            rec(x + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (idx, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(idx);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationCheck {
    pub cycle: Vec<usize>,
    pub direct: PhaseValue,
    pub reconstructed: PhaseValue,
    /// Phasor distance between the two.
    pub error: f64,
}

/// Evaluates every relation from [`phase_relation_cycles`] both directly and
/// from the `n` stored projective phases.
pub fn sufficiency_demo(set: &EndpointSet, i: &StateVector) -> Result<Vec<RelationCheck>> {
    let stored = StoredPhases::measure(set, i)?;
    phase_relation_cycles(set.labels())
        .into_iter()
        .map(|cycle| {
            let direct = cycle_phase_direct(set, &cycle)?;
            let reconstructed = cycle_phase_reconstructed(set, &stored, &cycle)?;
            Ok(RelationCheck {
                error: direct.phasor().distance(&reconstructed.phasor()),
                cycle,
                direct,
                reconstructed,
            })
        })
        .collect()
}
