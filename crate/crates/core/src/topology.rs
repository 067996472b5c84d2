//! Topological content of accumulated projective phases.
//!
//! A single measurement fixes a projective phase only modulo `2 pi`. Summing
//! the principal-branch segment phases `arg<t_k|i><i|t_{k+1}>` along a finely
//! sampled path recovers the integer part: around a loop near a state `|j>`
//! orthogonal to `|i>` it is `2 pi n` with `n` the winding of
//! `z = <i|psi>`, and for any loop inside both coverings `phi_i - phi_j = 2 pi n`
//! with `n` the first Chern number. Passing through a state orthogonal to
//! `|i>` produces a jump of `p pi (mod 2 pi)`, with `p` the order of tangency.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::angle::{principal_arg, wrap};
use crate::dynamics::{remove_dynamical_phase, EvolutionPath};
use crate::error::{Error, Result};
use crate::phases::{transition_function, Covering, PhaseValue, UnitPhasor};
use crate::statekit::{inner, StateVector};

/// Largest segment increment accepted when unwrapping; beyond this the
/// sampling is too coarse to rule out aliasing.
pub const INCREMENT_LIMIT: f64 = FRAC_PI_2;

/// Closed-loop phases further than this from `2 pi n` are rejected.
pub const QUANTIZATION_TOLERANCE: f64 = 0.1;

/// Endpoints of a closed loop must have fidelity at least `1 - CLOSURE_TOLERANCE`.
pub const CLOSURE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct UnwrappedPhase {
    increments: Vec<f64>,
    total: f64,
}

impl UnwrappedPhase {
    fn from_increments(increments: Vec<f64>) -> Self {
        let total = increments.iter().sum();
        Self { increments, total }
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn value(&self) -> PhaseValue {
        PhaseValue::unwrapped(self.total)
    }

    /// Running sum, one entry per sample (starting at 0).
    pub fn cumulative(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.increments.iter().scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            }))
            .collect()
    }
}

fn check_closed(path: &EvolutionPath) -> Result<()> {
    let fidelity = path.closure_fidelity();
    if fidelity < 1.0 - CLOSURE_TOLERANCE {
        return Err(Error::NotClosed { fidelity });
    }
    Ok(())
}

/// Sum of segment phases `phi_i(t_k, t_{k+1})` within the given covering.
pub fn accumulate_in(covering: &Covering, states: &[StateVector]) -> Result<UnwrappedPhase> {
    for (index, s) in states.iter().enumerate() {
        let overlap = covering.amplitude(s)?.norm();
        if overlap <= covering.threshold() {
            return Err(Error::SampleOutsideCovering { index, overlap });
        }
    }
    let increments = states
        .windows(2)
        .enumerate()
        .map(|(index, w)| {
            let inc = covering.phase(&w[0], &w[1])?.angle;
            if inc.abs() >= INCREMENT_LIMIT {
                return Err(Error::RefinementNeeded {
                    index,
                    increment: inc,
                    limit: INCREMENT_LIMIT,
                });
            }
            Ok(inc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UnwrappedPhase::from_increments(increments))
}

/// Unwrapped projective phase `phi_i` along `path`.
pub fn accumulate_projective_phase(
    path: &EvolutionPath,
    i: &StateVector,
) -> Result<UnwrappedPhase> {
    accumulate_in(&Covering::new(i), path.states())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindingReport {
    /// Winding of `z` around the origin.
    pub n: i64,
    /// Unwrapped change of `arg z` over the loop.
    pub total: f64,
    pub z_trace: Vec<Complex64>,
    pub min_abs_z: f64,
    /// Accumulated projective phase in the covering of `|j>`; small for a
    /// loop hugging `|j>`.
    pub phi_j: f64,
}

/// Winding number of `z = <i|psi>` around a closed loop near `|j>`.
pub fn winding_number(
    path: &EvolutionPath,
    i: &StateVector,
    j: &StateVector,
) -> Result<WindingReport> {
    winding_number_in(&Covering::new(i), path, j)
}

/// As [`winding_number`], with the zero test of `z` set by the covering
/// threshold. The winding is taken of `<i|psi><psi|j>`, which agrees with
/// that of `z` for a single-valued `U` but does not depend on the phase
/// convention of the sampled states.
pub fn winding_number_in(
    covering: &Covering,
    path: &EvolutionPath,
    j: &StateVector,
) -> Result<WindingReport> {
    check_closed(path)?;
    let z_trace = path
        .states()
        .iter()
        .map(|s| covering.amplitude(s))
        .collect::<Result<Vec<_>>>()?;
    let (index, min_abs_z) =
        z_trace
            .iter()
            .map(|z| z.norm())
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (k, a)| if a < best.1 { (k, a) } else { best },
            );
    if min_abs_z <= covering.threshold() {
        return Err(Error::ZeroCrossing {
            index,
            abs_z: min_abs_z,
        });
    }
    let w = path
        .states()
        .iter()
        .zip(&z_trace)
        .map(|(s, z)| Ok(z * inner(j, s)?.conj()))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for (index, pair) in w.windows(2).enumerate() {
        let d = principal_arg(pair[1] * pair[0].conj());
        if d.abs() >= INCREMENT_LIMIT {
            return Err(Error::RefinementNeeded {
                index,
                increment: d,
                limit: INCREMENT_LIMIT,
            });
        }
        total += d;
    }
    let n = (total / TAU).round();
    if (total - TAU * n).abs() >= QUANTIZATION_TOLERANCE {
        return Err(Error::NotQuantized {
            total,
            tolerance: QUANTIZATION_TOLERANCE,
        });
    }
    let phi_j = accumulate_projective_phase(path, j)?.total();
    Ok(WindingReport {
        n: n as i64,
        total,
        z_trace,
        min_abs_z,
        phi_j,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernReport {
    pub n: i64,
    pub phi_i: f64,
    pub phi_j: f64,
    /// `|phi_i - phi_j - 2 pi n|`.
    pub residual: f64,
}

/// First Chern number from `phi_i - phi_j` around a finite closed loop lying
/// in both coverings. A Hamiltonian trace on the path is used to remove the
/// dynamical phase first (it cancels in the difference either way).
pub fn chern_number_finite_loop(
    path: &EvolutionPath,
    i: &StateVector,
    j: &StateVector,
) -> Result<ChernReport> {
    check_closed(path)?;
    let transported;
    let path = if path.hamiltonian_trace().is_some() {
        transported = remove_dynamical_phase(path)?;
        &transported
    } else {
        path
    };
    let phi_i = accumulate_projective_phase(path, i)?.total();
    let phi_j = accumulate_projective_phase(path, j)?.total();
    let diff = phi_i - phi_j;
    let n = (diff / TAU).round();
    Ok(ChernReport {
        n: n as i64,
        phi_i,
        phi_j,
        residual: (diff - TAU * n).abs(),
    })
}

/// Carries `e^{i phi_i}` from sample 0 to sample `k2` through a stretch
/// `[k1, k2]` where only the covering of `j` is used:
/// `e^{i phi_i(0,t1)} S_ij(t1) e^{i phi_j(t1,t2)} S_ji(t2)`.
pub fn phase_across_gap(
    path: &EvolutionPath,
    i: &StateVector,
    j: &StateVector,
    k1: usize,
    k2: usize,
) -> Result<UnitPhasor> {
    if !(k1 <= k2 && k2 < path.len()) {
        return Err(Error::InvalidArgument(format!(
            "gap [{k1}, {k2}] outside path of {} samples",
            path.len()
        )));
    }
    let states = path.states();
    let before = accumulate_in(&Covering::new(i), &states[..=k1])?;
    let inside = accumulate_in(&Covering::new(j), &states[k1..=k2])?;
    let s1 = transition_function(i, j, &states[k1])?;
    let s2 = transition_function(j, i, &states[k2])?;
    Ok(UnitPhasor::from_angle(before.total()) * s1 * UnitPhasor::from_angle(inside.total()) * s2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingConfig {
    /// `|<i|psi>|` below this marks the crossing region.
    pub crossing_threshold: f64,
    /// Distance from `0` or `pi` within which the jump is snapped.
    pub snap_tolerance: f64,
    /// Span of the log-log fit for the tangency order, in decades of `dt`.
    pub fit_decades: f64,
}

impl Default for CrossingConfig {
    fn default() -> Self {
        Self {
            crossing_threshold: 1e-6,
            snap_tolerance: 0.1,
            fit_decades: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpClassification {
    pub t0: f64,
    pub index: usize,
    /// Tangency order: `<i|psi(t0 + dt)>` vanishes like `dt^p`.
    pub p: u32,
    /// Fitted log-log slope behind `p`.
    pub slope: f64,
    /// `0` or `pi` when snapped, otherwise the raw value.
    pub jump_mod_2pi: f64,
    pub raw_jump: f64,
    pub snapped: bool,
    pub warning: Option<String>,
}

/// Locates the single passage of `path` through a state orthogonal to `i`
/// and classifies the phase jump there.
pub fn classify_orthogonal_crossing(
    path: &EvolutionPath,
    i: &StateVector,
    config: &CrossingConfig,
) -> Result<JumpClassification> {
    let states = path.states();
    let times = path.times();
    let abs_z = states
        .iter()
        .map(|s| inner(i, s).map(|z| z.norm()))
        .collect::<Result<Vec<_>>>()?;

    // Runs of consecutive sub-threshold samples; each run is one crossing.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (k, &a) in abs_z.iter().enumerate() {
        if a < config.crossing_threshold {
            match runs.last_mut() {
                Some((_, end)) if *end + 1 == k => *end = k,
                _ => runs.push((k, k)),
            }
        }
    }
    let (start, end) = match runs.as_slice() {
        [] => {
            return Err(Error::NoCrossing {
                min_overlap: abs_z.iter().copied().fold(f64::INFINITY, f64::min),
            })
        }
        [one] => *one,
        many => return Err(Error::MultipleCrossings { count: many.len() }),
    };
    let k0 = (start..=end)
        .min_by(|&a, &b| abs_z[a].total_cmp(&abs_z[b]))
        .expect("non-empty run");
    let left_room = start;
    let right_room = states.len() - 1 - end;
    if left_room == 0 || right_room == 0 {
        return Err(Error::InvalidArgument(
            "crossing touches the edge of the window".into(),
        ));
    }
    let j = &states[k0];

    // Smallest symmetric offset that leaves the crossing region on both sides.
    let gap = (k0 - start + 1).max(end - k0 + 1);
    if gap > k0 || k0 + gap >= states.len() {
        return Err(Error::InvalidArgument(
            "window too short to step out of the crossing region".into(),
        ));
    }
    let before = &states[k0 - gap];
    let after = &states[k0 + gap];
    let raw_jump = (transition_function(i, j, before)? * transition_function(j, i, after)?).arg();

    let (p, slope) = tangency_order(path, i, j, k0, gap, config.fit_decades)?;

    let d0 = wrap(raw_jump).abs();
    let dpi = wrap(raw_jump - PI).abs();
    let (jump_mod_2pi, snapped) = if d0.min(dpi) <= config.snap_tolerance {
        (if d0 <= dpi { 0.0 } else { PI }, true)
    } else {
        (raw_jump, false)
    };
    let warning = if !snapped {
        Some(format!(
            "jump {raw_jump:.6} rad is not within {} of 0 or pi; path may not be smooth at the crossing",
            config.snap_tolerance
        ))
    } else if (jump_mod_2pi == PI) != (p % 2 == 1) {
        Some(format!(
            "jump {jump_mod_2pi} disagrees with tangency order {p} (slope {slope:.3})"
        ))
    } else {
        None
    };

    Ok(JumpClassification {
        t0: times[k0],
        index: k0,
        p,
        slope,
        jump_mod_2pi,
        raw_jump,
        snapped,
        warning,
    })
}

/// Log-log regression of the departure amplitude `|<i'|psi(t0 +- dt)>|`,
/// with `i'` the part of `i` orthogonal to `j`.
fn tangency_order(
    path: &EvolutionPath,
    i: &StateVector,
    j: &StateVector,
    k0: usize,
    first: usize,
    decades: f64,
) -> Result<(u32, f64)> {
    let states = path.states();
    let times = path.times();
    let ji = inner(j, i)?;
    let i_perp = StateVector::from_vector(i.as_vector() - j.as_vector() * ji)?;
    let room = k0.min(states.len() - 1 - k0);
    let last = room.min((first as f64 * 10f64.powf(decades)).round() as usize);
    if last < first + 2 {
        return Err(Error::InvalidArgument(
            "too few samples around the crossing to estimate the tangency order".into(),
        ));
    }
    // Log-spaced offsets, deduplicated.
    let steps = 24;
    let ratio = (last as f64 / first as f64).ln();
    let mut offsets: Vec<usize> = (0..=steps)
        .map(|s| (first as f64 * (ratio * s as f64 / steps as f64).exp()).round() as usize)
        .collect();
    offsets.dedup();
    let mut xs = Vec::with_capacity(offsets.len());
    let mut ys = Vec::with_capacity(offsets.len());
    for k in offsets {
        let plus = inner(&i_perp, &states[k0 + k])?.norm();
        let minus = inner(&i_perp, &states[k0 - k])?.norm();
        let dt = 0.5 * (times[k0 + k] - times[k0 - k]);
        if plus <= 0.0 || minus <= 0.0 {
            continue;
        }
        xs.push(dt.ln());
        ys.push(0.5 * (plus.ln() + minus.ln()));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidArgument("degenerate tangency fit".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok((slope.round().max(1.0) as u32, slope))
}
