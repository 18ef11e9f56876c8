use std::f64::consts::PI;

use ghalab::classical::{
    default_phase, morse_turning_points, q_constancy, random_on_shell_states, sample_trajectory_2d,
    verify_gha_classical,
};
use ghalab::model::{
    closed_orbit_condition, enumerate_degeneracies, spectrum_1d, BoundStates, DegeneracyKind,
    SystemKind, SystemParams,
};
use ghalab::quantum::{comipm_check, permutation_check, su11_check, verify_gha_quantum};
use ghalab::report::{all_pass, Check};
use ghalab::susy::{
    convergence_order, degeneracy_resolution_check, eigenfunction_gate, intertwining_residual,
    quantum_ladder_position_check, verify_r_on_grid, Grid2D, LabelledR, SusyGrid,
};
use ghalab::GhaError;
use serde::Serialize;

use crate::config::{Kind, RunConfig, Suite};
use crate::output::{to_json, trajectory_csv, trajectory_svg};
use crate::CliError;

const TENSOR_TRUNCATION: usize = 12;

pub struct Outcome {
    pub stdout: String,
    pub failed: bool,
}

fn ok(stdout: String) -> Outcome {
    Outcome {
        stdout,
        failed: false,
    }
}

/// Library errors caused by the requested values, not by a failed check.
fn usage(e: GhaError) -> CliError {
    CliError::Config(e.to_string())
}

fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

// ---------------------------------------------------------------- spectrum

#[derive(Serialize)]
struct Level {
    n: u32,
    energy: f64,
}

#[derive(Serialize)]
struct Spectrum {
    kind: SystemKind,
    mass: f64,
    hbar: f64,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(rename = "V0", skip_serializing_if = "Option::is_none")]
    depth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    bound_states: BoundStates,
    levels: Vec<Level>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
}

pub fn spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let labels: Vec<u32> = match (params.kind(), params.max_label()) {
        (SystemKind::InfiniteWell, _) => (1..=cfg.n_max.unwrap_or(10)).collect(),
        (SystemKind::Morse, Some(top)) => (0..=cfg.n_max.unwrap_or(top).min(top)).collect(),
        (SystemKind::Morse, None) => Vec::new(),
    };
    let levels = labels
        .iter()
        .map(|&n| {
            Ok(Level {
                n,
                energy: spectrum_1d(&params, n).map_err(usage)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let note = (params.is_morse() && params.max_label().is_none()).then_some("no bound states");
    Ok(ok(to_json(&Spectrum {
        kind: params.kind(),
        mass: params.mass(),
        hbar: params.hbar(),
        length: params.length(),
        beta: params.beta(),
        depth: params.depth(),
        alpha: params.alpha(),
        epsilon: params.epsilon(),
        p: params.p(),
        bound_states: params.bound_state_count(),
        levels,
        note,
    })))
}

// ---------------------------------------------------------------- trajectory

#[derive(Serialize)]
struct TrajectorySummary {
    samples: usize,
    t_max: f64,
    ex: f64,
    ey: f64,
    /// Coprime `(nx, ny)` with `nx omega_x = ny omega_y`, if any.
    closed_orbit: Option<(u32, u32)>,
    /// Largest phase-space difference between first and last sample.
    endpoint_gap: Option<f64>,
}

pub fn trajectory(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let (ex0, ey0, t0) = match cfg.kind() {
        Kind::Well => (2.0, 0.5, 4.0),
        Kind::Morse => (-2.0, -4.5, 2.0 * PI),
    };
    let (ex, ey) = (cfg.ex.unwrap_or(ex0), cfg.ey.unwrap_or(ey0));
    let t_max = cfg.t_max.unwrap_or(t0);
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(CliError::Config(format!(
            "t-max must be finite and non-negative, got {t_max}"
        )));
    }
    let samples = cfg.samples.unwrap_or(2001);
    let phases = (
        cfg.phase_x.unwrap_or(default_phase(&params)),
        cfg.phase_y.unwrap_or(default_phase(&params)),
    );
    params.check_energy(ex).map_err(usage)?;
    params.check_energy(ey).map_err(usage)?;
    let path =
        sample_trajectory_2d(&params, &params, ex, ey, phases, t_max, samples).map_err(usage)?;
    let csv = trajectory_csv(&path);

    if let Some(svg_path) = &cfg.svg {
        let bounds = match params.kind() {
            SystemKind::InfiniteWell => {
                let h = params.length().unwrap() / 2.0;
                ([-h, h], [-h, h])
            }
            SystemKind::Morse => {
                let (a, b) = morse_turning_points(&params, ex).map_err(usage)?;
                let (c, d) = morse_turning_points(&params, ey).map_err(usage)?;
                ([a, b], [c, d])
            }
        };
        let title = format!("E_x = {ex}, E_y = {ey}, t in [0, {t_max}]");
        write_file(svg_path, &trajectory_svg(&path, bounds, &title))?;
    }

    match &cfg.csv {
        None => Ok(ok(csv)),
        Some(p) => {
            write_file(p, &csv)?;
            let gap = match (path.first(), path.last()) {
                (Some(a), Some(b)) if path.len() > 1 => Some(
                    a.point()
                        .iter()
                        .zip(b.point())
                        .map(|(u, v)| (u - v).abs())
                        .fold(0.0, f64::max),
                ),
                _ => None,
            };
            Ok(ok(to_json(&TrajectorySummary {
                samples,
                t_max,
                ex,
                ey,
                closed_orbit: closed_orbit_condition(&params, &params, ex, ey, 20)
                    .map_err(usage)?,
                endpoint_gap: gap,
            })))
        }
    }
}

// ---------------------------------------------------------------- verify

fn classical_checks(params: &SystemParams, seed: u64) -> Result<Vec<Check>, CliError> {
    let energies: Vec<f64> = match params.kind() {
        SystemKind::InfiniteWell => vec![0.5, 2.0, 7.3],
        SystemKind::Morse => {
            let v0 = params.depth().unwrap();
            vec![-0.8 * v0, -0.3 * v0, -0.05 * v0]
        }
    };
    let margin = params.length().map_or(0.0, |l| 1e-2 * l);
    let mut checks = Vec::new();
    for (i, &e) in energies.iter().enumerate() {
        let states =
            random_on_shell_states(params, e, 20, seed + i as u64, margin).map_err(usage)?;
        let r = verify_gha_classical(params, &states).map_err(usage)?;
        let name = |what: &str| format!("{what} at E = {e}");
        checks.push(Check::new(
            "classical",
            name("{H, A} = +-i lambda A"),
            r.hamiltonian_ladder,
            1e-5,
        ));
        checks.push(Check::new(
            "classical",
            name("{A+, A-} = -i mu"),
            r.ladder_ladder,
            1e-5,
        ));
        checks.push(Check::new(
            "classical",
            name("A+ A- = H - gamma"),
            r.factorization,
            1e-5,
        ));
        checks.push(Check::new(
            "classical",
            name("{lambda, A} = +-2ia A"),
            r.lambda_ladder,
            1e-5,
        ));
        let lam = ghalab::classical::GhaStructure::new(*params).lambda(e);
        let drift = q_constancy(params, e, 0.3, 10.0 * 2.0 * PI / lam, 4000).map_err(usage)?;
        checks.push(Check::new(
            "classical",
            name("Q+- drift over 10 periods"),
            drift,
            1e-8,
        ));
    }
    Ok(checks)
}

fn quantum_checks(
    params: &SystemParams,
    truncation: Option<usize>,
) -> Result<Vec<Check>, CliError> {
    let n = match (params.kind(), params.max_label()) {
        (SystemKind::InfiniteWell, _) => truncation.unwrap_or(40),
        (SystemKind::Morse, Some(top)) => truncation.unwrap_or(top as usize + 1),
        (SystemKind::Morse, None) => {
            return Err(CliError::Config(
                "the Morse well holds no bound state".into(),
            ));
        }
    };
    let mut checks = verify_gha_quantum(params, n).map_err(usage)?;
    let su = su11_check(params, n).map_err(usage)?;
    checks.extend(su.closure);
    if params.is_morse() {
        checks.extend(su.literal);
    }
    // Tensor-product checks are dense in N^2; a 12-state axis already
    // covers several arithmetical classes.
    let n2 = n.min(TENSOR_TRUNCATION);
    if n2 >= 3 {
        let com = comipm_check(params, n2, 1, 1).map_err(usage)?;
        checks.extend(com.checks);
        checks.push(Check::flag(
            "quantum",
            format!("[H, I+] zeros at ny = nx + 1 agree with the predictor (N = {n2})"),
            com.vanishing == com.predicted && com.vanishing.iter().all(|&(x, y)| y == x + 1),
        ));
    }
    checks.extend(permutation_check(params, n2).map_err(usage)?.checks);
    Ok(checks)
}

fn susy_checks(params: &SystemParams, grid: usize) -> Result<Vec<Check>, CliError> {
    let top = params
        .max_label()
        .ok_or_else(|| CliError::Config("the Morse well holds no bound state".into()))?;
    if !grid.is_multiple_of(4) || grid < 64 {
        return Err(CliError::Config(format!(
            "grid must be a multiple of 4 and at least 64, got {grid}"
        )));
    }
    let s = "susy";
    let mut checks = Vec::new();
    for row in eigenfunction_gate(params, 1024).map_err(usage)? {
        checks.push(Check::new(
            s,
            format!("eigenvalue psi_{} vs finite differences", row.n),
            row.relative_error,
            1e-6,
        ));
        checks.push(Check::at_least(
            s,
            format!("overlap psi_{} vs finite differences", row.n),
            row.overlap,
            1.0 - 1e-8,
        ));
    }

    let pairs: Vec<(u32, u32)> = [(0, 2), (0, 3), (1, 3)]
        .into_iter()
        .filter(|&(_, m)| m <= top)
        .collect();
    if !pairs.is_empty() {
        let build = |n| -> Result<SusyGrid, CliError> {
            let g = Grid2D::for_states(params, top.min(3), n, 8).map_err(usage)?;
            SusyGrid::new(params, g).map_err(usage)
        };
        let (coarse, fine) = (build(grid / 2)?, build(grid)?);
        for &(n, m) in &pairs {
            let rc = intertwining_residual(&coarse, n, m)
                .map_err(usage)?
                .residual;
            let rf = intertwining_residual(&fine, n, m).map_err(usage)?.residual;
            checks.push(Check::at_least(
                s,
                format!(
                    "intertwining ({n},{m}) refinement order {}^2 -> {grid}^2",
                    grid / 2
                ),
                convergence_order(rc, rf, 2.0),
                1.8,
            ));
            let rep = verify_r_on_grid(&fine, n, m).map_err(usage)?;
            let rel = |v: f64| ((v - rep.r_exact) / rep.r_exact).abs();
            checks.push(Check::new(
                s,
                format!("Q-Q+ eigenvalue r({n},{m})"),
                rel(rep.r_composed.unwrap_or(f64::NAN)),
                1e-2,
            ));
            checks.push(Check::new(
                s,
                format!("(Hx-Hy)^2 + 2cH + c^2 eigenvalue r({n},{m})"),
                rel(rep.r_operator),
                1e-2,
            ));
        }
        if top >= 2 {
            let nc = verify_r_on_grid(&coarse, 1, 2)
                .map_err(usage)?
                .q_plus_norm
                .unwrap_or(f64::NAN);
            let nf = verify_r_on_grid(&fine, 1, 2)
                .map_err(usage)?
                .q_plus_norm
                .unwrap_or(f64::NAN);
            checks.push(Check::new(
                s,
                "||Q+ Psi(1,2)|| shrinks under refinement",
                nf / nc,
                0.25,
            ));
        }
    }

    match degeneracy_resolution_check(params, top) {
        Ok(rep) => checks.push(Check::flag(
            s,
            format!(
                "r separates {} arithmetical pairs up to n = {top}",
                rep.arithmetical_pairs
            ),
            rep.replay.iter().all(|c| c.nontrivial == 0),
        )),
        Err(GhaError::TheoremViolation { .. }) => {
            checks.push(Check::flag(s, "r separates arithmetical pairs", false))
        }
        Err(e) => return Err(usage(e)),
    }
    if top >= 1 {
        let lad = quantum_ladder_position_check(params, 1, 1e-3).map_err(usage)?;
        if let Some(low) = lad.lowering {
            checks.push(Check::at_least(
                s,
                "position-space A- psi_1 overlap with psi_0",
                low.overlap,
                1.0 - 1e-4,
            ));
        }
    }
    Ok(checks)
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let suite = cfg.suite.unwrap_or(Suite::All);
    if suite == Suite::Susy && !params.is_morse() {
        return Err(CliError::Config("the susy suite needs --kind morse".into()));
    }
    let mut checks = Vec::new();
    if matches!(suite, Suite::Classical | Suite::All) {
        checks.extend(classical_checks(&params, cfg.seed.unwrap_or(7))?);
    }
    if matches!(suite, Suite::Quantum | Suite::All) {
        checks.extend(quantum_checks(&params, cfg.truncation)?);
    }
    if matches!(suite, Suite::Susy) || (suite == Suite::All && params.is_morse()) {
        checks.extend(susy_checks(&params, cfg.grid.unwrap_or(256))?);
    }
    Ok(Outcome {
        failed: !all_pass(&checks),
        stdout: to_json(&checks),
    })
}

// ---------------------------------------------------------------- degeneracies

#[derive(Serialize)]
struct Relation {
    first: (u32, u32),
    second: (u32, u32),
    kind: DegeneracyKind,
}

#[derive(Serialize)]
struct ClassOut {
    energy: f64,
    members: Vec<(u32, u32)>,
    relations: Vec<Relation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_values: Option<Vec<LabelledR>>,
}

#[derive(Serialize)]
struct DegeneracyOut {
    kind: SystemKind,
    n_max: u32,
    classes: Vec<ClassOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<&'static str>,
}

pub fn degeneracies(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let n_max = match (params.kind(), params.max_label()) {
        (SystemKind::InfiniteWell, _) => cfg.n_max.unwrap_or(8),
        (SystemKind::Morse, Some(top)) => cfg.n_max.unwrap_or(top),
        (SystemKind::Morse, None) => {
            return Err(CliError::Config(
                "the Morse well holds no bound state".into(),
            ))
        }
    };
    let report = enumerate_degeneracies(&params, n_max).map_err(usage)?;
    let (theorem, failed) = if params.is_morse() {
        match degeneracy_resolution_check(&params, n_max) {
            Ok(t) => (Some(t), false),
            Err(GhaError::TheoremViolation { .. }) => (None, true),
            Err(e) => return Err(usage(e)),
        }
    } else {
        (None, false)
    };
    let classes = report
        .degenerate()
        .map(|c| ClassOut {
            energy: c.energy,
            members: c.members.clone(),
            relations: c
                .relations
                .iter()
                .map(|r| Relation {
                    first: r.first,
                    second: r.second,
                    kind: r.kind,
                })
                .collect(),
            r_values: theorem.as_ref().and_then(|t| {
                t.classes
                    .iter()
                    .find(|tc| tc.energy == c.energy)
                    .map(|tc| tc.members.clone())
            }),
        })
        .collect();
    let verdict = params
        .is_morse()
        .then_some(if failed { "unresolved" } else { "resolved" });
    Ok(Outcome {
        stdout: to_json(&DegeneracyOut {
            kind: params.kind(),
            n_max,
            classes,
            verdict,
        }),
        failed,
    })
}
