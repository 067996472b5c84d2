//! Scenario registry. Each scenario resolves its keys, runs one computation
//! and returns a verdict plus a trace table.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use geophase::angle::wrap;
use geophase::bloch::{
    curvature_flux, latitude_loop, solid_angle, to_state, BlochConnection, BlochCovering,
    BlochPoint,
};
use geophase::dynamics::{
    evolve, remove_dynamical_phase, rotation_y, spin_operators, uniform_grid, EvolutionPath, Spin,
};
use geophase::interferometer::{chi_grid, extract_phase, intensity, simulate_fringe, ShotNoise};
use geophase::offdiag::{off_diagonal_reconstructed, reference_state_search, EigenpathPair};
use geophase::phases::{bargmann_invariant, projective_phase, transition_function};
use geophase::statekit::{inner, random_unitary};
use geophase::topology::{
    accumulate_in, accumulate_projective_phase, chern_number_finite_loop,
    classify_orthogonal_crossing, winding_number_in, CrossingConfig,
};
use geophase::{Complex64, Covering, StateVector, UnitPhasor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::CliError;

pub struct KeySpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

pub struct Scenario {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [KeySpec],
    pub columns: &'static [&'static str],
    pub run: fn(&Params) -> Result<Outcome, CliError>,
}

pub struct Outcome {
    pub expected: Value,
    pub computed: Value,
    pub tolerance: f64,
    pub pass: bool,
    pub summary: String,
    pub rows: Vec<Vec<f64>>,
}

/// Resolved key values for one scenario run.
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn resolve(
        scenario: &Scenario,
        overrides: &BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        if let Some(bad) = overrides
            .keys()
            .find(|k| !scenario.keys.iter().any(|s| s.name == k.as_str()))
        {
            let known: Vec<_> = scenario.keys.iter().map(|k| k.name).collect();
            return Err(CliError::Usage(format!(
                "unknown key `{bad}` for scenario {} (accepted: {})",
                scenario.name,
                known.join(", ")
            )));
        }
        let values = scenario
            .keys
            .iter()
            .map(|k| {
                let v = overrides.get(k.name).map_or(k.default, String::as_str);
                (k.name.to_string(), v.to_string())
            })
            .collect();
        Ok(Self { values })
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T, CliError> {
        self.raw(key).parse().map_err(|_| {
            CliError::Usage(format!(
                "key `{key}`: expected {what}, got `{}`",
                self.raw(key)
            ))
        })
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.parse(key, "a number")?;
        if !v.is_finite() {
            return Err(CliError::Usage(format!("key `{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.parse(key, "a non-negative integer")
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.parse(key, "a non-negative integer")
    }

    /// Empty value means "use the scenario's own choice".
    pub fn optional_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn spin_from(p: &Params) -> Result<Spin, CliError> {
    let m = p.f64("m")?;
    Ok(Spin::new(m)?)
}

fn unwrap_angles(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    for (k, &a) in raw.iter().enumerate() {
        if k == 0 {
            out.push(a);
        } else {
            let prev: f64 = out[k - 1];
            out.push(prev + wrap(a - prev));
        }
    }
    out
}

/// Polar angles of the spin expectation vector along a path.
fn spin_angles(spin: Spin, path: &EvolutionPath) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let ops = spin_operators(spin);
    let mut theta = Vec::with_capacity(path.len());
    let mut phi = Vec::with_capacity(path.len());
    for s in path.states() {
        let (x, y, z) = (
            ops.sx.expectation(s)?,
            ops.sy.expectation(s)?,
            ops.sz.expectation(s)?,
        );
        theta.push((z / spin.m()).clamp(-1.0, 1.0).acos());
        phi.push(y.atan2(x));
    }
    Ok((theta, unwrap_angles(&phi)))
}

fn spin_loop(p: &Params) -> Result<Outcome, CliError> {
    let spin = spin_from(p)?;
    let delta = p.f64("delta")?;
    let segments = p.usize("samples")?;
    let threshold = p.f64("threshold")?;
    let tolerance = p.f64("tolerance")?;
    if !(delta > 0.0 && delta < FRAC_PI_2) {
        return Err(usage("key `delta` must lie in (0, pi/2)"));
    }
    if segments < 2 {
        return Err(usage("key `samples` must be at least 2"));
    }
    let m = spin.m();
    let start = rotation_y(spin, PI - delta).apply(&spin.highest())?;
    let grid = uniform_grid(0.0, TAU, segments + 1)?;
    let path = remove_dynamical_phase(&evolve(&spin_operators(spin).sz, &start, &grid)?)?;
    let i = spin.highest();
    let j = spin.lowest();
    let cover = Covering::new(&i).with_threshold(threshold);
    let acc = accumulate_in(&cover, path.states())?;
    let winding = winding_number_in(&cover, &path, &j)?;

    let (theta, phi) = spin_angles(spin, &path)?;
    let cumulative = acc.cumulative();
    let rows = path
        .states()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            Ok(vec![
                path.times()[k],
                phi[k],
                theta[k],
                cumulative[k],
                inner(&i, s)?.norm(),
                inner(&j, s)?.norm(),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let expected_phase = -4.0 * m * PI;
    let expected_n = -(spin.twice_m() as i64);
    let err = (acc.total() - expected_phase).abs();
    let pass = err < tolerance && winding.n == expected_n;
    Ok(Outcome {
        expected: json!({ "phase": expected_phase, "n": expected_n }),
        computed: json!({ "phase": acc.total(), "n": winding.n }),
        tolerance,
        pass,
        summary: format!(
            "total phase {:.9} (expected {:.9}, |error| {err:.3e}), n = {} (expected {expected_n})",
            acc.total(),
            expected_phase,
            winding.n
        ),
        rows,
    })
}

fn chern_finite(p: &Params) -> Result<Outcome, CliError> {
    let spin = spin_from(p)?;
    let beta = p.f64("beta")?;
    let segments = p.usize("samples")?;
    let tolerance = p.f64("tolerance")?;
    if segments < 2 {
        return Err(usage("key `samples` must be at least 2"));
    }
    let start = rotation_y(spin, beta).apply(&spin.highest())?;
    let grid = uniform_grid(0.0, TAU, segments + 1)?;
    let path = evolve(&spin_operators(spin).sz, &start, &grid)?;
    let (i, j) = (spin.highest(), spin.lowest());
    let report = chern_number_finite_loop(&path, &i, &j)?;

    let flat = remove_dynamical_phase(&path)?;
    let phi_i = accumulate_projective_phase(&flat, &i)?.cumulative();
    let phi_j = accumulate_projective_phase(&flat, &j)?.cumulative();
    let rows = (0..flat.len())
        .map(|k| vec![flat.times()[k], phi_i[k], phi_j[k], phi_i[k] - phi_j[k]])
        .collect();

    let expected = -(spin.twice_m() as i64);
    Ok(Outcome {
        expected: json!({ "n": expected, "difference": TAU * expected as f64 }),
        computed: json!({ "n": report.n, "difference": report.phi_i - report.phi_j, "residual": report.residual }),
        tolerance,
        pass: report.n == expected && report.residual < tolerance,
        summary: format!(
            "phi_i - phi_j = {:.12} -> n = {} (expected {expected}), residual {:.3e}",
            report.phi_i - report.phi_j,
            report.n,
            report.residual
        ),
        rows,
    })
}

/// Rows of `t, |<i|psi>|, arg<psi0|i><i|psi>` (NaN where undefined).
fn crossing_rows(path: &EvolutionPath, i: &StateVector) -> Result<Vec<Vec<f64>>, CliError> {
    let first = path.first();
    path.states()
        .iter()
        .zip(path.times())
        .map(|(s, &t)| {
            let phase = projective_phase(first, i, s).map_or(f64::NAN, |v| v.angle);
            Ok(vec![t, inner(i, s)?.norm(), phase])
        })
        .collect()
}

fn crossing_outcome(
    path: &EvolutionPath,
    i: &StateVector,
    p: &Params,
    expected: f64,
    expected_order: Option<u32>,
) -> Result<Outcome, CliError> {
    let tolerance = p.f64("tolerance")?;
    let config = CrossingConfig {
        snap_tolerance: p.f64("snap_tolerance")?,
        ..CrossingConfig::default()
    };
    let c = classify_orthogonal_crossing(path, i, &config)?;
    let err = wrap(c.raw_jump - expected).abs();
    let order_ok = expected_order.is_none_or(|o| o == c.p);
    let mut summary = format!(
        "jump {:.9} at t0 = {:.6} (expected {expected:.9} mod 2pi, |error| {err:.3e}), tangency order {} (slope {:.3})",
        c.raw_jump, c.t0, c.p, c.slope
    );
    if let Some(w) = &c.warning {
        summary.push_str(&format!("; warning: {w}"));
    }
    Ok(Outcome {
        expected: json!({ "jump": expected, "p": expected_order }),
        computed: json!({ "jump": c.raw_jump, "snapped": c.jump_mod_2pi, "p": c.p, "t0": c.t0 }),
        tolerance,
        pass: err < tolerance && order_ok,
        summary,
        rows: crossing_rows(path, i)?,
    })
}

fn pi_jump(p: &Params) -> Result<Outcome, CliError> {
    let samples = p.usize("samples")?;
    let duration = p.f64("duration")?;
    if !(duration > PI && duration < 3.0 * PI) {
        return Err(usage(
            "key `duration` must lie in (pi, 3 pi) for a single crossing",
        ));
    }
    let half = Spin::new(0.5)?;
    let up = half.highest();
    let path = evolve(
        &spin_operators(half).sy,
        &up,
        &uniform_grid(0.0, duration, samples)?,
    )?;
    crossing_outcome(&path, &up, p, PI, Some(1))
}

fn tangency(p: &Params) -> Result<Outcome, CliError> {
    let order = p.usize("order")?;
    let samples = p.usize("samples")?;
    let span = p.f64("span")?;
    if !(1..=6).contains(&order) {
        return Err(usage("key `order` must be between 1 and 6"));
    }
    if span <= 0.0 {
        return Err(usage("key `span` must be positive"));
    }
    let down = StateVector::basis(2, 1)?;
    let up = StateVector::basis(2, 0)?;
    let lean = StateVector::new(vec![Complex64::new(0.8, 0.3), Complex64::new(0.1, -0.5)])?;
    let path = EvolutionPath::from_fn(-span, span, samples, |t| {
        StateVector::from_vector(
            down.as_vector() + lean.as_vector() * Complex64::new(t.powi(order as i32), 0.0),
        )
    })?;
    let expected = if order % 2 == 1 { PI } else { 0.0 };
    crossing_outcome(&path, &up, p, expected, Some(order as u32))
}

fn offdiag(p: &Params) -> Result<Outcome, CliError> {
    let dim = p.usize("dim")?;
    let trials = p.usize("trials")?;
    let seed = p.u64("seed")?;
    let tolerance = p.f64("tolerance")?;
    if dim < 2 {
        return Err(usage("key `dim` must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(trials);
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let u = random_unitary(dim, &mut rng);
        let j = StateVector::random(dim, &mut rng)?;
        let k = StateVector::random(dim, &mut rng)?;
        let pair = EigenpathPair::evolved(&j, &k, &u)?;
        let ends = [
            pair.psi_j_start.clone(),
            pair.psi_j_end.clone(),
            pair.psi_k_start.clone(),
            pair.psi_k_end.clone(),
        ];
        let i1 = reference_state_search(&ends, 1000, rng.random())?;
        let i2 = reference_state_search(&ends, 1000, rng.random())?;
        let r1 = off_diagonal_reconstructed(&pair, &i1)?;
        let r2 = off_diagonal_reconstructed(&pair, &i2)?;
        let spread = r1
            .reconstruction
            .gamma_reconstructed
            .phasor()
            .distance(&r2.reconstruction.gamma_reconstructed.phasor());
        worst = worst.max(r1.discrepancy()).max(spread);
        rows.push(vec![
            trial as f64,
            r1.direct.gamma_jk.angle,
            r1.reconstruction.gamma_reconstructed.angle,
            r1.discrepancy(),
            spread,
        ]);
    }
    Ok(Outcome {
        expected: json!(0.0),
        computed: json!(worst),
        tolerance,
        pass: worst < tolerance,
        summary: format!(
            "max reconstruction residual over {trials} trials in dim {dim}: {worst:.3e}"
        ),
        rows,
    })
}

fn interfere(p: &Params) -> Result<Outcome, CliError> {
    let dim = p.usize("dim")?;
    let counts = p.u64("counts")?;
    let settings = p.usize("settings")?;
    let seed = p.u64("seed")?;
    if dim < 2 {
        return Err(usage("key `dim` must be at least 2"));
    }
    let tolerance = p
        .optional_f64("tolerance")?
        .unwrap_or(if counts == 0 { 1e-10 } else { 0.05 });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Draw until both arms project with a clear overlap.
    let (psi0, psi_t, i) = loop {
        let a = StateVector::random(dim, &mut rng)?;
        let b = StateVector::random(dim, &mut rng)?;
        let r = StateVector::random(dim, &mut rng)?;
        if inner(&r, &a)?.norm() > 0.2 && inner(&r, &b)?.norm() > 0.2 {
            break (a, b, r);
        }
    };
    let grid = chi_grid(settings);
    let noise = (counts > 0).then_some(ShotNoise {
        counts_per_setting: counts,
        seed: rng.random(),
    });
    let fringe = simulate_fringe(&psi0, &psi_t, &i, &grid, noise)?;
    let (phase, visibility) = extract_phase(&fringe)?;
    let expected = projective_phase(&psi0, &i, &psi_t)?;
    let err = phase.phasor().distance(&expected.phasor());
    let rows = grid
        .iter()
        .zip(&fringe.intensities)
        .map(|(&chi, &y)| Ok(vec![chi, y, intensity(&psi0, &psi_t, &i, chi)?]))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Outcome {
        expected: json!(expected.angle),
        computed: json!({ "phase": phase.angle, "visibility": visibility }),
        tolerance,
        pass: err < tolerance,
        summary: format!(
            "extracted phase {:.9} (expected {:.9}, |error| {err:.3e}), visibility {visibility:.6}",
            phase.angle, expected.angle
        ),
        rows,
    })
}

fn random_direction(rng: &mut ChaCha8Rng) -> BlochPoint {
    let z: f64 = rng.random_range(-1.0..1.0);
    BlochPoint::new(z.acos(), rng.random_range(-PI..PI))
}

fn bargmann_area(p: &Params) -> Result<Outcome, CliError> {
    let triangles = p.usize("triangles")?;
    let seed = p.u64("seed")?;
    let tolerance = p.f64("tolerance")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(triangles);
    let mut worst = 0.0f64;
    while rows.len() < triangles {
        let pts = [
            random_direction(&mut rng),
            random_direction(&mut rng),
            random_direction(&mut rng),
        ];
        let omega = match solid_angle(&pts) {
            Ok(o) => o,
            Err(geophase::Error::AntipodalEdge { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let states: Vec<_> = pts.iter().map(to_state).collect();
        let b = bargmann_invariant(&states)?;
        let err = b.phasor().distance(&UnitPhasor::from_angle(-omega / 2.0));
        worst = worst.max(err);
        rows.push(vec![rows.len() as f64, omega, b.angle, err]);
    }
    Ok(Outcome {
        expected: json!("bargmann = -omega/2"),
        computed: json!(worst),
        tolerance,
        pass: worst < tolerance,
        summary: format!("max |B + omega/2| over {triangles} geodesic triangles: {worst:.3e}"),
        rows,
    })
}

fn wuyang(p: &Params) -> Result<Outcome, CliError> {
    let theta = p.f64("theta")?;
    let segments = p.usize("segments")?;
    let tolerance = p.f64("tolerance")?;
    if !(theta > 0.0 && theta < PI) {
        return Err(usage("key `theta` must lie in (0, pi)"));
    }
    let path = latitude_loop(theta, 0.0, 1.0, segments);
    let up = curvature_flux(&path, BlochCovering::Up)?;
    let down = curvature_flux(&path, BlochCovering::Down)?;
    let expected_up = -PI * (1.0 - theta.cos());
    let expected_down = PI * (1.0 + theta.cos());
    let (i, j) = (StateVector::basis(2, 0)?, StateVector::basis(2, 1)?);
    let a_up = BlochConnection::new(BlochCovering::Up);
    let a_down = BlochConnection::new(BlochCovering::Down);
    let mut worst_s = 0.0f64;
    let rows = path
        .iter()
        .map(|pt| {
            let s = transition_function(&i, &j, &to_state(pt))?;
            worst_s = worst_s.max(s.distance(&UnitPhasor::from_angle(pt.phi)));
            Ok(vec![
                pt.phi,
                a_up.a_phi(pt.theta),
                a_down.a_phi(pt.theta),
                s.value().re,
                s.value().im,
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let err = (up - expected_up)
        .abs()
        .max((down - expected_down).abs())
        .max(worst_s);
    Ok(Outcome {
        expected: json!({ "flux_up": expected_up, "flux_down": expected_down }),
        computed: json!({ "flux_up": up, "flux_down": down, "transition_error": worst_s }),
        tolerance,
        pass: err < tolerance,
        summary: format!(
            "flux up {up:.12} (expected {expected_up:.12}), down {down:.12} (expected {expected_down:.12}), max |S_ij - e^(i phi)| {worst_s:.3e}"
        ),
        rows,
    })
}

macro_rules! keys {
    ($( $name:literal = $default:literal : $help:literal ),* $(,)?) => {
        &[$(KeySpec { name: $name, default: $default, help: $help }),*]
    };
}

pub static SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "spin-loop",
        about: "spin-m loop hugging |-m>; parallel-transported phase against |m> is -4 m pi, winding -2m",
        keys: keys![
            "m" = "1": "spin quantum number (half-integer)",
            "delta" = "1e-3": "polar distance of the loop from |-m>",
            "samples" = "20000": "number of time steps over one precession period",
            "threshold" = "1e-20": "covering threshold for |<m|psi>|",
            "tolerance" = "5e-5": "allowed |phase + 4 m pi|",
        ],
        columns: &["t", "phi", "theta", "accumulated_phase", "abs_overlap_i", "abs_overlap_j"],
        run: spin_loop,
    },
    Scenario {
        name: "chern-finite",
        about: "finite precession loop at polar angle beta; phi_i - phi_j = 2 pi n with n = -2m",
        keys: keys![
            "m" = "1": "spin quantum number",
            "beta" = "1.5707963267948966": "polar angle of the loop",
            "samples" = "4000": "time steps over one period",
            "tolerance" = "1e-6": "allowed residual |phi_i - phi_j - 2 pi n|",
        ],
        columns: &["t", "phi_i", "phi_j", "difference"],
        run: chern_finite,
    },
    Scenario {
        name: "pi-jump",
        about: "two-state Rabi flip |up> -> |down> under S_y; projective phase jumps by pi",
        keys: keys![
            "samples" = "2001": "time samples",
            "duration" = "6.283185307179586": "evolution time (one crossing for pi < T < 3 pi)",
            "snap_tolerance" = "0.1": "snap window around 0 and pi",
            "tolerance" = "1e-3": "allowed |jump - pi| mod 2 pi",
        ],
        columns: &["t", "abs_overlap_i", "projective_phase"],
        run: pi_jump,
    },
    Scenario {
        name: "tangency",
        about: "engineered path |down> + t^p |phi>; jump is arg (-1)^p",
        keys: keys![
            "order" = "2": "tangency order p",
            "samples" = "4001": "samples over [-span, span]",
            "span" = "0.5": "half-width of the parameter window",
            "snap_tolerance" = "0.1": "snap window around 0 and pi",
            "tolerance" = "1e-3": "allowed |jump - arg (-1)^p| mod 2 pi",
        ],
        columns: &["t", "abs_overlap_i", "projective_phase"],
        run: tangency,
    },
    Scenario {
        name: "offdiag",
        about: "off-diagonal phase gamma_jk reconstructed from projective phases and Bargmann invariants",
        keys: keys![
            "dim" = "4": "Hilbert-space dimension",
            "trials" = "200": "random instances",
            "seed" = "7": "random seed",
            "tolerance" = "1e-9": "allowed phasor distance",
        ],
        columns: &["trial", "gamma_direct", "gamma_reconstructed", "residual", "reference_spread"],
        run: offdiag,
    },
    Scenario {
        name: "interfere",
        about: "interferometer fringe and least-squares phase extraction",
        keys: keys![
            "dim" = "3": "Hilbert-space dimension",
            "counts" = "0": "mean counts per setting (0 = noiseless)",
            "settings" = "16": "phase-shifter settings over [0, 2 pi)",
            "seed" = "1": "random seed",
            "tolerance" = "": "allowed phasor distance (default 1e-10 noiseless, 0.05 with counts)",
        ],
        columns: &["chi", "intensity", "model_intensity"],
        run: interfere,
    },
    Scenario {
        name: "bargmann-area",
        about: "three-vertex Bargmann invariant against half the geodesic-triangle solid angle",
        keys: keys![
            "triangles" = "50": "random triangles",
            "seed" = "5": "random seed",
            "tolerance" = "1e-9": "allowed phasor distance",
        ],
        columns: &["index", "omega", "bargmann", "error"],
        run: bargmann_area,
    },
    Scenario {
        name: "wuyang",
        about: "two-patch monopole potentials and their transition function e^(i phi)",
        keys: keys![
            "theta" = "1": "polar angle of the loop",
            "segments" = "256": "loop segments",
            "tolerance" = "1e-9": "allowed flux and transition error",
        ],
        columns: &["phi", "a_phi_up", "a_phi_down", "transition_re", "transition_im"],
        run: wuyang,
    },
];

pub fn find(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

/// Text for `--help`: scenarios, keys and CSV columns.
pub fn help_text() -> String {
    let mut out =
        String::from("Scenarios (keys as key=value or --key value; default in brackets):\n");
    for s in SCENARIOS {
        out.push_str(&format!("\n  {}  {}\n", s.name, s.about));
        for k in s.keys {
            out.push_str(&format!("      {} [{}]  {}\n", k.name, k.default, k.help));
        }
        out.push_str(&format!("      CSV columns: {}\n", s.columns.join(",")));
    }
    out.push_str(
        "\n  verify-all  run every scenario at its defaults and print a table\n\n\
         Exit codes: 0 pass, 1 numerical failure, 2 usage error, 3 precondition or covering violation.\n",
    );
    out
}
