//! Classical motion and the phase-space ladder functions.
//!
//! Phase points are flat slices `[x.., P..]`: `[x, P]` in 1D and
//! `[x, y, Px, Py]` in 2D. Brackets of the algebra use the orientation
//! `{f, g}_gha = -poisson_bracket(f, g)`, under which `{H, A+} = i lambda A+`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{GhaError, Result};
use crate::model::{SystemKind, SystemParams};
use crate::par;

/// Central-difference step for single brackets.
pub const BRACKET_STEP: f64 = 1e-4;
/// Step for nested brackets, larger to keep cancellation in check.
pub const NESTED_STEP: f64 = 1e-3;
/// `|H(state) - E|` allowed before a state counts as off-shell.
pub const SHELL_TOL: f64 = 1e-10;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub x: f64,
    pub momentum: f64,
    pub t: f64,
}

impl PhaseState {
    pub fn point(&self) -> [f64; 2] {
        [self.x, self.momentum]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState2d {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
}

impl PhaseState2d {
    pub fn point(&self) -> [f64; 4] {
        [self.x, self.y, self.px, self.py]
    }
}

/// `A+` at an on-shell point; `A-` is its conjugate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderValue {
    pub value: Complex64,
    pub energy: f64,
}

impl LadderValue {
    pub fn raising(&self) -> Complex64 {
        self.value
    }

    pub fn lowering(&self) -> Complex64 {
        self.value.conj()
    }
}

/// Structure functions `lambda`, `mu`, `gamma` and the constant `a`.
#[derive(Debug, Clone, Copy)]
pub struct GhaStructure {
    params: SystemParams,
}

impl GhaStructure {
    pub fn new(params: SystemParams) -> Self {
        Self { params }
    }

    pub fn lambda(&self, energy: f64) -> f64 {
        match self.params.kind() {
            SystemKind::InfiniteWell => self.params.alpha().unwrap() * energy.sqrt(),
            SystemKind::Morse => self.params.epsilon().unwrap() * (-energy).sqrt(),
        }
    }

    /// `lambda(E) dc^2/dE`: `lambda` for the well, `eps V0^2 / (-E)^{3/2}` for
    /// Morse. Positive in both systems, so `{A+, A-} = -i mu` holds for each.
    pub fn mu(&self, energy: f64) -> f64 {
        match self.params.kind() {
            SystemKind::InfiniteWell => self.lambda(energy),
            SystemKind::Morse => {
                let v0 = self.params.depth().unwrap();
                self.params.epsilon().unwrap() * v0 * v0 / (-energy).powf(1.5)
            }
        }
    }

    pub fn gamma(&self, energy: f64) -> f64 {
        match self.params.kind() {
            SystemKind::InfiniteWell => 0.0,
            SystemKind::Morse => {
                let v0 = self.params.depth().unwrap();
                v0 + energy + v0 * v0 / energy
            }
        }
    }

    pub fn a(&self) -> f64 {
        match self.params.kind() {
            SystemKind::InfiniteWell => self.params.alpha().unwrap().powi(2) / 4.0,
            SystemKind::Morse => -self.params.epsilon().unwrap().powi(2) / 4.0,
        }
    }

    /// Modulus `c(E) = sqrt(E - gamma(E))` of the ladder function on shell.
    pub fn modulus(&self, energy: f64) -> f64 {
        (energy - self.gamma(energy)).sqrt()
    }
}

/// Phase that starts the default trajectories: `x0 = 0, P0 > 0` in the
/// well, inner turning point for Morse.
pub fn default_phase(params: &SystemParams) -> f64 {
    match params.kind() {
        SystemKind::InfiniteWell => -FRAC_PI_2,
        SystemKind::Morse => 0.0,
    }
}

/// Well motion at ladder phase `theta0 + lambda t`, folded onto one period.
pub fn well_state(params: &SystemParams, energy: f64, theta0: f64, t: f64) -> Result<PhaseState> {
    if params.kind() != SystemKind::InfiniteWell {
        return Err(GhaError::UnsupportedCombination(
            "well trajectory on Morse params".into(),
        ));
    }
    params.check_energy(energy)?;
    let length = params.length().unwrap();
    let p0 = (2.0 * params.mass() * energy).sqrt();
    let phase = theta0 + GhaStructure::new(*params).lambda(energy) * t;
    // Fraction of the period since the last rightward pass through x = 0.
    let f = ((phase + FRAC_PI_2) / (2.0 * PI)).rem_euclid(1.0);
    let (x, momentum) = if f < 0.25 {
        (2.0 * length * f, p0)
    } else if f < 0.75 {
        (length - 2.0 * length * f, -p0)
    } else {
        (2.0 * length * f - 2.0 * length, p0)
    };
    Ok(PhaseState { x, momentum, t })
}

/// Sawtooth position for `x0 = 0`, `p0 = sqrt(2mE) > 0`; period `2mL/p0`.
pub fn trajectory_well_1d(params: &SystemParams, energy: f64, t: f64) -> Result<f64> {
    Ok(well_state(params, energy, -FRAC_PI_2, t)?.x)
}

/// Well position from `sin(pi x / L) = cos(theta0 + lambda t)`.
pub fn invert_trajectory_well(
    params: &SystemParams,
    energy: f64,
    theta0: f64,
    t: f64,
) -> Result<f64> {
    if params.kind() != SystemKind::InfiniteWell {
        return Err(GhaError::UnsupportedCombination(
            "well inversion on Morse params".into(),
        ));
    }
    params.check_energy(energy)?;
    let phase = theta0 + GhaStructure::new(*params).lambda(energy) * t;
    Ok(params.length().unwrap() / PI * phase.cos().clamp(-1.0, 1.0).asin())
}

/// Bound Morse motion at phase `omega t + theta0`; `theta0 = 0` starts at
/// the inner turning point.
pub fn morse_state(params: &SystemParams, energy: f64, theta0: f64, t: f64) -> Result<PhaseState> {
    if params.kind() != SystemKind::Morse {
        return Err(GhaError::UnsupportedCombination(
            "Morse trajectory on well params".into(),
        ));
    }
    params.check_energy(energy)?;
    let beta = params.beta().unwrap();
    let depth = params.depth().unwrap();
    let sin2 = -energy / depth;
    let cos = (1.0 - sin2).sqrt();
    let omega = beta * (-2.0 * energy / params.mass()).sqrt();
    let phase = omega * t + theta0;
    let denom = 1.0 - cos * phase.cos();
    let x = (denom / sin2).ln() / beta;
    let momentum = params.mass() / beta * cos * phase.sin() * omega / denom;
    Ok(PhaseState { x, momentum, t })
}

pub fn trajectory_morse_1d(params: &SystemParams, energy: f64, theta0: f64, t: f64) -> Result<f64> {
    Ok(morse_state(params, energy, theta0, t)?.x)
}

/// Phase point of either system.
pub fn state_1d(params: &SystemParams, energy: f64, theta0: f64, t: f64) -> Result<PhaseState> {
    match params.kind() {
        SystemKind::InfiniteWell => well_state(params, energy, theta0, t),
        SystemKind::Morse => morse_state(params, energy, theta0, t),
    }
}

/// Separable 2D motion, one 1D engine per axis.
pub fn trajectory_2d(
    params_x: &SystemParams,
    params_y: &SystemParams,
    ex: f64,
    ey: f64,
    phases: (f64, f64),
    t: f64,
) -> Result<PhaseState2d> {
    let sx = state_1d(params_x, ex, phases.0, t)?;
    let sy = state_1d(params_y, ey, phases.1, t)?;
    Ok(PhaseState2d {
        t,
        x: sx.x,
        y: sy.x,
        px: sx.momentum,
        py: sy.momentum,
    })
}

/// `samples` evenly spaced states on `[0, t_max]`, both ends included.
pub fn sample_trajectory_2d(
    params_x: &SystemParams,
    params_y: &SystemParams,
    ex: f64,
    ey: f64,
    phases: (f64, f64),
    t_max: f64,
    samples: usize,
) -> Result<Vec<PhaseState2d>> {
    params_x.check_energy(ex)?;
    params_y.check_energy(ey)?;
    let dt = if samples > 1 {
        t_max / (samples - 1) as f64
    } else {
        0.0
    };
    par::map_range(samples, |i| {
        trajectory_2d(params_x, params_y, ex, ey, phases, i as f64 * dt)
    })
    .into_iter()
    .collect()
}

/// Turning points `(inner, outer)` of bounded Morse motion at `E`.
pub fn morse_turning_points(params: &SystemParams, energy: f64) -> Result<(f64, f64)> {
    if params.kind() != SystemKind::Morse {
        return Err(GhaError::UnsupportedCombination(
            "turning points of the well".into(),
        ));
    }
    params.check_energy(energy)?;
    let beta = params.beta().unwrap();
    let root = (1.0 + energy / params.depth().unwrap()).sqrt();
    Ok((-(1.0 + root).ln() / beta, -(1.0 - root).ln() / beta))
}

/// `A+` (sign = +1) or `A-` (sign = -1) as a function of `[x, P]`, with `H`
/// evaluated at the point itself.
pub fn ladder_function(
    params: SystemParams,
    sign: f64,
) -> impl Fn(f64, f64) -> Complex64 + Copy + Send + Sync {
    let scale = 1.0 / (2.0 * params.mass()).sqrt();
    move |x: f64, p: f64| {
        let h = params.hamiltonian(x, p);
        let kinetic = -sign * I * scale * p;
        match params.kind() {
            SystemKind::InfiniteWell => {
                let arg = PI * x / params.length().unwrap();
                kinetic * arg.cos() + arg.sin() * h.sqrt()
            }
            SystemKind::Morse => {
                let e = (params.beta().unwrap() * x).exp();
                let root = (-h).sqrt();
                kinetic * e + e * root - params.depth().unwrap() / root
            }
        }
    }
}

/// `A+` at an on-shell state.
pub fn ladder_eval(params: &SystemParams, state: &PhaseState, energy: f64) -> Result<LadderValue> {
    params.check_energy(energy)?;
    let deviation = (params.hamiltonian(state.x, state.momentum) - energy).abs();
    if !(deviation <= SHELL_TOL * energy.abs().max(1.0)) {
        return Err(GhaError::OffShell { deviation });
    }
    Ok(LadderValue {
        value: ladder_function(*params, 1.0)(state.x, state.momentum),
        energy,
    })
}

fn check_stencil(axes: &[SystemParams], point: &[f64], reach: f64) -> Result<()> {
    if point.len() != 2 * axes.len() {
        return Err(GhaError::Dimension(format!(
            "phase point has {} components for {} degrees of freedom",
            point.len(),
            axes.len()
        )));
    }
    for (params, &x) in axes.iter().zip(point) {
        if let Some(length) = params.length() {
            if x.abs() + reach >= length / 2.0 {
                return Err(GhaError::StencilOutOfDomain {
                    coordinate: x,
                    wall: length / 2.0,
                    step: reach,
                });
            }
        }
    }
    Ok(())
}

/// Five-point central difference. Near the inner Morse turning point the
/// third derivatives of `1/sqrt(-H)` reach ~1e5, which the three-point
/// rule turns into ~1e-3 bracket errors at `h = 1e-4`.
fn partial<F: Fn(&[f64]) -> Complex64>(f: &F, point: &[f64], j: usize, h: f64) -> Complex64 {
    let mut p = point.to_vec();
    let mut at = |offset: f64| {
        p[j] = point[j] + offset;
        f(&p)
    };
    let (u1, d1, u2, d2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
    (8.0 * (u1 - d1) - (u2 - d2)) / (12.0 * h)
}

fn bracket_raw<F, G>(f: &F, g: &G, point: &[f64], h: f64) -> Complex64
where
    F: Fn(&[f64]) -> Complex64,
    G: Fn(&[f64]) -> Complex64,
{
    let dof = point.len() / 2;
    (0..dof)
        .map(|i| {
            partial(f, point, i, h) * partial(g, point, dof + i, h)
                - partial(f, point, dof + i, h) * partial(g, point, i, h)
        })
        .sum()
}

/// Canonical bracket `sum_i (df/dx_i dg/dP_i - df/dP_i dg/dx_i)` by central
/// differences. `axes` holds one parameter set per degree of freedom and is
/// used to keep the stencil inside a well.
pub fn poisson_bracket<F, G>(
    axes: &[SystemParams],
    f: F,
    g: G,
    point: &[f64],
    h: f64,
) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64,
    G: Fn(&[f64]) -> Complex64,
{
    if !(h > 0.0) {
        return Err(GhaError::InvalidParameter {
            name: "h",
            value: h,
        });
    }
    check_stencil(axes, point, 2.0 * h)?;
    Ok(bracket_raw(&f, &g, point, h))
}

/// Bracket in the orientation of the algebra relations.
pub fn gha_bracket<F, G>(
    axes: &[SystemParams],
    f: F,
    g: G,
    point: &[f64],
    h: f64,
) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64,
    G: Fn(&[f64]) -> Complex64,
{
    poisson_bracket(axes, g, f, point, h)
}

/// Max residuals of the classical algebra over a sample set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ClassicalResiduals {
    /// `|{H, A+-} -+ i lambda A+-|`
    pub hamiltonian_ladder: f64,
    /// `|{A+, A-} + i mu|`
    pub ladder_ladder: f64,
    /// `|A+ A- - (H - gamma)|`
    pub factorization: f64,
    /// `|{lambda, A+-} -+ 2 i a A+-|`
    pub lambda_ladder: f64,
}

impl ClassicalResiduals {
    pub fn max(&self) -> f64 {
        [
            self.hamiltonian_ladder,
            self.ladder_ladder,
            self.factorization,
            self.lambda_ladder,
        ]
        .into_iter()
        .fold(0.0, par::nan_max)
    }

    fn merge(self, other: Self) -> Self {
        Self {
            hamiltonian_ladder: par::nan_max(self.hamiltonian_ladder, other.hamiltonian_ladder),
            ladder_ladder: par::nan_max(self.ladder_ladder, other.ladder_ladder),
            factorization: par::nan_max(self.factorization, other.factorization),
            lambda_ladder: par::nan_max(self.lambda_ladder, other.lambda_ladder),
        }
    }
}

fn residuals_at(params: &SystemParams, state: &PhaseState, h: f64) -> Result<ClassicalResiduals> {
    let energy = params.hamiltonian(state.x, state.momentum);
    params.check_energy(energy)?;
    let axes = [*params];
    let point = state.point();
    check_stencil(&axes, &point, 10.0 * h)?;

    let gha = GhaStructure::new(*params);
    let plus = ladder_function(*params, 1.0);
    let minus = ladder_function(*params, -1.0);
    let ham = |p: &[f64]| Complex64::from(params.hamiltonian(p[0], p[1]));
    let lambda = |p: &[f64]| Complex64::from(gha.lambda(params.hamiltonian(p[0], p[1])));
    let a_plus = |p: &[f64]| plus(p[0], p[1]);
    let a_minus = |p: &[f64]| minus(p[0], p[1]);
    let ap = a_plus(&point);
    let am = a_minus(&point);
    let lam = gha.lambda(energy);

    let r1 = (gha_bracket(&axes, ham, a_plus, &point, h)? - I * lam * ap).norm();
    let r2 = (gha_bracket(&axes, ham, a_minus, &point, h)? + I * lam * am).norm();
    let r3 = (gha_bracket(&axes, a_plus, a_minus, &point, h)? + I * gha.mu(energy)).norm();
    let r4 = (ap * am - (energy - gha.gamma(energy))).norm();
    let r5 = (gha_bracket(&axes, lambda, a_plus, &point, h)? - 2.0 * I * gha.a() * ap).norm();
    let r6 = (gha_bracket(&axes, lambda, a_minus, &point, h)? + 2.0 * I * gha.a() * am).norm();
    Ok(ClassicalResiduals {
        hamiltonian_ladder: r1.max(r2),
        ladder_ladder: r3,
        factorization: r4,
        lambda_ladder: r5.max(r6),
    })
}

/// Checks the four classical algebra relations at every sample.
pub fn verify_gha_classical(
    params: &SystemParams,
    samples: &[PhaseState],
) -> Result<ClassicalResiduals> {
    if samples.is_empty() {
        return Err(GhaError::EmptySamples);
    }
    par::map_slice(samples, |s| residuals_at(params, s, BRACKET_STEP))
        .into_iter()
        .try_fold(ClassicalResiduals::default(), |acc, r| Ok(acc.merge(r?)))
}

/// `count` seeded on-shell states at energy `E`, kept `margin` away from
/// the well walls.
pub fn random_on_shell_states(
    params: &SystemParams,
    energy: f64,
    count: usize,
    seed: u64,
    margin: f64,
) -> Result<Vec<PhaseState>> {
    params.check_energy(energy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = match params.kind() {
        SystemKind::InfiniteWell => {
            let half = params.length().unwrap() / 2.0;
            (-half + margin, half - margin)
        }
        SystemKind::Morse => {
            let (inner, outer) = morse_turning_points(params, energy)?;
            (inner, outer)
        }
    };
    if !(lo < hi) {
        return Err(GhaError::Precondition(format!(
            "margin {margin} leaves no room"
        )));
    }
    let m = params.mass();
    Ok((0..count)
        .map(|_| {
            let x = rng.random_range(lo..hi);
            let kinetic = (energy - params.potential(x)).max(0.0);
            let mut momentum = (2.0 * m * kinetic).sqrt();
            if rng.random::<bool>() {
                momentum = -momentum;
            }
            PhaseState {
                x,
                momentum,
                t: 0.0,
            }
        })
        .collect())
}

/// Maximum relative drift of `Q+- = A+- e^{-+i lambda t}` along the
/// analytic trajectory over `[0, t_total]`.
pub fn q_constancy(
    params: &SystemParams,
    energy: f64,
    theta0: f64,
    t_total: f64,
    steps: usize,
) -> Result<f64> {
    let gha = GhaStructure::new(*params);
    let lam = gha.lambda(energy);
    let period = 2.0 * PI / lam;
    if (steps as f64) < 100.0 * t_total / period {
        return Err(GhaError::Precondition(format!(
            "{steps} steps over {t_total} is fewer than 100 per period"
        )));
    }
    let plus = ladder_function(*params, 1.0);
    let start = state_1d(params, energy, theta0, 0.0)?;
    let q0 = plus(start.x, start.momentum);
    if q0.norm() <= 1e-12 * energy.abs().max(1.0) {
        return Err(GhaError::DegenerateNormalization);
    }
    let drifts = par::map_range(steps + 1, |i| -> Result<f64> {
        let t = t_total * i as f64 / steps as f64;
        let s = state_1d(params, energy, theta0, t)?;
        let a = plus(s.x, s.momentum);
        let q_plus = a * Complex64::from_polar(1.0, -lam * t);
        let q_minus = a.conj() * Complex64::from_polar(1.0, lam * t);
        Ok(((q_plus - q0).norm() / q0.norm()).max((q_minus - q0.conj()).norm() / q0.norm()))
    });
    drifts
        .into_iter()
        .try_fold(0.0, |m, d| Ok(par::nan_max(m, d?)))
}

/// `Q+(0)` and its expected phase: `theta0` for the well, `theta0 + pi`
/// for Morse (the trajectory formula puts the inner turning point at phase 0).
pub fn q_initial(params: &SystemParams, energy: f64, theta0: f64) -> Result<(Complex64, f64)> {
    let s = state_1d(params, energy, theta0, 0.0)?;
    let q = ladder_function(*params, 1.0)(s.x, s.momentum);
    let expected = match params.kind() {
        SystemKind::InfiniteWell => theta0,
        SystemKind::Morse => theta0 + PI,
    };
    Ok((q, expected))
}

fn product_function(
    px: SystemParams,
    py: SystemParams,
    k: u32,
    l: u32,
    sign: f64,
) -> impl Fn(&[f64]) -> Complex64 + Copy + Send + Sync {
    let ax = ladder_function(px, sign);
    let ay = ladder_function(py, -sign);
    move |p: &[f64]| ax(p[0], p[2]).powu(k) * ay(p[1], p[3]).powu(l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductBracket {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

fn check_2d(
    px: &SystemParams,
    py: &SystemParams,
    k: u32,
    l: u32,
    state: &PhaseState2d,
) -> Result<()> {
    if px.kind() != py.kind() {
        return Err(GhaError::UnsupportedCombination(
            "mixed kinds in a 2D product".into(),
        ));
    }
    if k < 1 || l < 1 {
        return Err(GhaError::Precondition(
            "ladder powers k, l must be at least 1".into(),
        ));
    }
    px.check_energy(px.hamiltonian(state.x, state.px))?;
    py.check_energy(py.hamiltonian(state.y, state.py))
}

/// `{H, I+-^(k,l)}` by finite differences against `+-i(k lx - l ly) I+-`.
pub fn product_bracket_check(
    params_x: &SystemParams,
    params_y: &SystemParams,
    k: u32,
    l: u32,
    sign: f64,
    state: &PhaseState2d,
) -> Result<ProductBracket> {
    check_2d(params_x, params_y, k, l, state)?;
    let (px, py) = (*params_x, *params_y);
    let ex = px.hamiltonian(state.x, state.px);
    let ey = py.hamiltonian(state.y, state.py);
    let ham = |p: &[f64]| Complex64::from(px.hamiltonian(p[0], p[2]) + py.hamiltonian(p[1], p[3]));
    let product = product_function(px, py, k, l, sign);
    let point = state.point();
    let lhs = gha_bracket(&[px, py], ham, product, &point, BRACKET_STEP)?;
    let omega =
        k as f64 * GhaStructure::new(px).lambda(ex) - l as f64 * GhaStructure::new(py).lambda(ey);
    let rhs = sign * I * omega * product(&point);
    Ok(ProductBracket {
        lhs,
        rhs,
        residual: (lhs - rhs).norm(),
    })
}

/// Outcome of the nested bracket `{{{H, I}, I}, I}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleBracket {
    pub absolute: f64,
    /// Sum of the magnitudes of the terms that cancel in the outer bracket.
    pub scale: f64,
    /// `absolute / scale`; meaningful where `|I|` is large and the absolute
    /// value is swamped by differencing noise.
    pub relative: f64,
}

/// `{{{H, I}, I}, I}` with three nested finite-difference levels at
/// [`NESTED_STEP`].
pub fn triple_bracket_check(
    params_x: &SystemParams,
    params_y: &SystemParams,
    k: u32,
    l: u32,
    sign: f64,
    state: &PhaseState2d,
) -> Result<TripleBracket> {
    check_2d(params_x, params_y, k, l, state)?;
    let product = product_function(*params_x, *params_y, k, l, sign);
    triple_bracket_with(params_x, params_y, product, state)
}

/// Nested bracket of the 2D Hamiltonian with an arbitrary phase function.
pub fn triple_bracket_with<F>(
    params_x: &SystemParams,
    params_y: &SystemParams,
    f: F,
    state: &PhaseState2d,
) -> Result<TripleBracket>
where
    F: Fn(&[f64]) -> Complex64 + Copy,
{
    let (px, py) = (*params_x, *params_y);
    let h = NESTED_STEP;
    let point = state.point();
    check_stencil(&[px, py], &point, 7.0 * h)?;
    let ham = |p: &[f64]| Complex64::from(px.hamiltonian(p[0], p[2]) + py.hamiltonian(p[1], p[3]));
    let first = |p: &[f64]| bracket_raw(&f, &ham, p, h);
    let second = |p: &[f64]| bracket_raw(&f, &first, p, h);

    let mut total = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for i in 0..2 {
        let t1 = partial(&f, &point, i, h) * partial(&second, &point, 2 + i, h);
        let t2 = partial(&f, &point, 2 + i, h) * partial(&second, &point, i, h);
        total += t1 - t2;
        scale += t1.norm() + t2.norm();
    }
    let absolute = total.norm();
    Ok(TripleBracket {
        absolute,
        scale,
        relative: if scale > 0.0 { absolute / scale } else { 0.0 },
    })
}
