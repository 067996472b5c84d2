//! End-to-end checks across modules: evolve, accumulate, measure.

use std::f64::consts::{PI, TAU};

use geophase::dynamics::{
    evolve, remove_dynamical_phase, spin_operators, uniform_grid, HermitianOperator, Spin,
};
use geophase::interferometer::{default_chi_grid, extract_phase, simulate_fringe};
use geophase::phases::projective_phase;
use geophase::topology::{
    accumulate_projective_phase, classify_orthogonal_crossing, phase_across_gap, CrossingConfig,
};
use geophase::{StateVector, UnitPhasor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn interferometer_reads_the_accumulated_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for dim in 2..=4 {
        let h = HermitianOperator::random(dim, &mut rng);
        let psi0 = StateVector::random(dim, &mut rng).unwrap();
        let i = StateVector::random(dim, &mut rng).unwrap();
        let path = evolve(&h, &psi0, &uniform_grid(0.0, 0.5, 2001).unwrap()).unwrap();
        let Ok(acc) = accumulate_projective_phase(&path, &i) else {
            continue;
        };
        let fringe =
            simulate_fringe(path.first(), path.last(), &i, &default_chi_grid(), None).unwrap();
        let (measured, _) = extract_phase(&fringe).unwrap();
        assert!(measured.phasor().distance(&acc.value().phasor()) < 1e-10);
    }
}

#[test]
fn rabi_flip_phase_history() {
    // Before the flip the projective phase against |up> is 0, afterwards pi.
    let half = Spin::new(0.5).unwrap();
    let up = half.highest();
    let h = spin_operators(half).sy;
    let path = evolve(&h, &up, &uniform_grid(0.0, TAU, 4001).unwrap()).unwrap();
    let c = classify_orthogonal_crossing(&path, &up, &CrossingConfig::default()).unwrap();
    assert_eq!(c.jump_mod_2pi, PI);
    let before = projective_phase(path.first(), &up, &path.states()[c.index - 10]).unwrap();
    let after = projective_phase(path.first(), &up, &path.states()[c.index + 10]).unwrap();
    assert!(before.angle.abs() < 1e-9);
    assert!((after.angle.abs() - PI).abs() < 1e-9);

    // The same pi is recovered by routing through the |down> covering.
    let carried =
        phase_across_gap(&path, &up, &half.lowest(), c.index - 500, c.index + 500).unwrap();
    let direct = projective_phase(path.first(), &up, &path.states()[c.index + 500]).unwrap();
    assert!(carried.distance(&direct.phasor()) < 1e-9);
    assert!(carried.distance(&UnitPhasor::from_angle(PI)) < 1e-9);
}

#[test]
fn precession_phase_scales_with_the_cap() {
    // Over one Larmor period the transported state at polar angle theta
    // collects -m * (solid angle of the cap) against |m>.
    for (m, theta) in [(0.5, 0.4), (1.0, 1.2), (1.5, 2.0)] {
        let spin = Spin::new(m).unwrap();
        let start = geophase::dynamics::coherent_state(spin, theta, 0.0);
        let h = spin_operators(spin).sz;
        let path = evolve(&h, &start, &uniform_grid(0.0, TAU, 8001).unwrap()).unwrap();
        let flat = remove_dynamical_phase(&path).unwrap();
        let phi = accumulate_projective_phase(&flat, &spin.highest())
            .unwrap()
            .total();
        let cap = TAU * (1.0 - theta.cos());
        assert!((phi + m * cap).abs() < 1e-6, "m={m}: {phi}");
    }
}
