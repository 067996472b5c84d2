//! Interference readout of projective phases.
//!
//! One arm carries `e^{i chi} P_i |psi(0)>`, the other `P_i |psi(t)>`, with
//! `P_i` the projector onto `|i>`. The output intensity
//! `I(chi) = |a|^2 + |b|^2 + 2|a||b| cos(chi - phi_i)`, `a = <i|psi(0)>`,
//! `b = <i|psi(t)>`, is linear in `(1, cos chi, sin chi)`, so the phase and
//! visibility follow from an ordinary least-squares fit.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::phases::PhaseValue;
use crate::statekit::{inner, StateVector};

/// Fits with visibility below this are rejected.
pub const MIN_VISIBILITY: f64 = 1e-6;

pub const DEFAULT_SETTINGS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotNoise {
    /// Mean detector count per setting, averaged over a full fringe.
    pub counts_per_setting: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interferogram {
    pub chi_grid: Vec<f64>,
    /// Intensities, or raw counts when simulated with noise.
    pub intensities: Vec<f64>,
    pub visibility: Option<f64>,
    pub extracted_phase: Option<PhaseValue>,
}

impl Interferogram {
    pub fn new(chi_grid: Vec<f64>, intensities: Vec<f64>) -> Result<Self> {
        if chi_grid.len() != intensities.len() {
            return Err(Error::DimensionMismatch(chi_grid.len(), intensities.len()));
        }
        check_grid(&chi_grid)?;
        Ok(Self {
            chi_grid,
            intensities,
            visibility: None,
            extracted_phase: None,
        })
    }

    /// Same fringe with the fitted phase and visibility filled in.
    pub fn fitted(mut self) -> Result<Self> {
        let (phase, visibility) = extract_phase(&self)?;
        self.extracted_phase = Some(phase);
        self.visibility = Some(visibility);
        Ok(self)
    }
}

/// `n` equally spaced settings over `[0, 2 pi)`.
pub fn chi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

pub fn default_chi_grid() -> Vec<f64> {
    chi_grid(DEFAULT_SETTINGS)
}

fn check_grid(chi: &[f64]) -> Result<()> {
    let mut sorted = chi.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if sorted.len() < 3 {
        return Err(Error::TooFewSettings(sorted.len()));
    }
    let span = sorted[sorted.len() - 1] - sorted[0];
    if span < PI {
        return Err(Error::InvalidArgument(format!(
            "phase settings span {span} rad, need at least pi"
        )));
    }
    Ok(())
}

/// Noiseless intensity at setting `chi`.
pub fn intensity(
    psi0: &StateVector,
    psi_t: &StateVector,
    i: &StateVector,
    chi: f64,
) -> Result<f64> {
    let a = inner(i, psi0)?;
    let b = inner(i, psi_t)?;
    Ok((num_complex::Complex64::from_polar(1.0, chi) * a + b).norm_sqr())
}

pub fn simulate_fringe(
    psi0: &StateVector,
    psi_t: &StateVector,
    i: &StateVector,
    chi_grid: &[f64],
    noise: Option<ShotNoise>,
) -> Result<Interferogram> {
    check_grid(chi_grid)?;
    let clean = chi_grid
        .iter()
        .map(|&chi| intensity(psi0, psi_t, i, chi))
        .collect::<Result<Vec<_>>>()?;
    let intensities = match noise {
        None => clean,
        Some(ShotNoise {
            counts_per_setting,
            seed,
        }) => {
            let mean_i = inner(i, psi0)?.norm_sqr() + inner(i, psi_t)?.norm_sqr();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            clean
                .iter()
                .map(|&level| {
                    let mean = if mean_i > 0.0 {
                        counts_per_setting as f64 * level / mean_i
                    } else {
                        0.0
                    };
                    if mean > 0.0 {
                        Poisson::new(mean)
                            .map(|d| d.sample(&mut rng))
                            .map_err(|e| Error::InvalidArgument(e.to_string()))
                    } else {
                        Ok(0.0)
                    }
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Interferogram::new(chi_grid.to_vec(), intensities)
}

/// Least-squares fit of `c0 + c1 cos chi + c2 sin chi`; returns
/// `(atan2(c2, c1), sqrt(c1^2 + c2^2) / c0)`.
pub fn extract_phase(g: &Interferogram) -> Result<(PhaseValue, f64)> {
    check_grid(&g.chi_grid)?;
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&chi, &y) in g.chi_grid.iter().zip(&g.intensities) {
        let row = Vector3::new(1.0, chi.cos(), chi.sin());
        ata += row * row.transpose();
        aty += row * y;
    }
    let c = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| Error::InvalidArgument("singular fringe design".into()))?;
    let amplitude = c[1].hypot(c[2]);
    let visibility = if c[0] > 0.0 { amplitude / c[0] } else { 0.0 };
    if visibility.is_nan() || visibility < MIN_VISIBILITY {
        return Err(Error::PhaseUnidentifiable { visibility });
    }
    Ok((PhaseValue::principal(c[2].atan2(c[1])), visibility))
}
