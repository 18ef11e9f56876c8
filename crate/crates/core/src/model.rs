//! System parameters, closed-form spectra, closed-orbit search and
//! degeneracy enumeration for the infinite well and the Morse potential.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{GhaError, Result};

/// Relative tolerance for two 2D energies to count as degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-12;
/// Relative tolerance of the commensurability test in [`closed_orbit_condition`].
pub const ORBIT_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    InfiniteWell,
    Morse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Well { length: f64 },
    Morse { beta: f64, depth: f64 },
}

/// Physical constants of a 1D system. The well occupies `|x| <= L/2`; the
/// Morse potential is `V0 (e^{-2 beta x} - 2 e^{-beta x})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    mass: f64,
    hbar: f64,
    shape: Shape,
}

/// Number of bound states of a 1D system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStates {
    Unbounded,
    /// `Count(0)` means the Morse well is too shallow to bind anything.
    Count(u32),
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(GhaError::InvalidParameter { name, value })
    }
}

impl SystemParams {
    pub fn well(mass: f64, hbar: f64, length: f64) -> Result<Self> {
        Ok(Self {
            mass: positive("m", mass)?,
            hbar: positive("hbar", hbar)?,
            shape: Shape::Well {
                length: positive("L", length)?,
            },
        })
    }

    pub fn morse(mass: f64, hbar: f64, beta: f64, depth: f64) -> Result<Self> {
        Ok(Self {
            mass: positive("m", mass)?,
            hbar: positive("hbar", hbar)?,
            shape: Shape::Morse {
                beta: positive("beta", beta)?,
                depth: positive("V0", depth)?,
            },
        })
    }

    /// m = hbar = 1, L = 2.
    pub fn default_well() -> Self {
        Self::well(1.0, 1.0, 2.0).expect("defaults are valid")
    }

    /// m = hbar = beta = 1, V0 = 15.
    pub fn default_morse() -> Self {
        Self::morse(1.0, 1.0, 1.0, 15.0).expect("defaults are valid")
    }

    pub fn kind(&self) -> SystemKind {
        match self.shape {
            Shape::Well { .. } => SystemKind::InfiniteWell,
            Shape::Morse { .. } => SystemKind::Morse,
        }
    }

    pub fn is_morse(&self) -> bool {
        self.kind() == SystemKind::Morse
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn length(&self) -> Option<f64> {
        match self.shape {
            Shape::Well { length } => Some(length),
            Shape::Morse { .. } => None,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self.shape {
            Shape::Morse { beta, .. } => Some(beta),
            Shape::Well { .. } => None,
        }
    }

    pub fn depth(&self) -> Option<f64> {
        match self.shape {
            Shape::Morse { depth, .. } => Some(depth),
            Shape::Well { .. } => None,
        }
    }

    /// `2 pi / (L sqrt(2m))` for the well.
    pub fn alpha(&self) -> Option<f64> {
        self.length()
            .map(|l| 2.0 * PI / (l * (2.0 * self.mass).sqrt()))
    }

    /// `2 beta / sqrt(2m)` for Morse.
    pub fn epsilon(&self) -> Option<f64> {
        self.beta().map(|b| 2.0 * b / (2.0 * self.mass).sqrt())
    }

    /// `sqrt(8 m V0) / (beta hbar)` for Morse.
    pub fn nu(&self) -> Option<f64> {
        match self.shape {
            Shape::Morse { beta, depth } => {
                Some((8.0 * self.mass * depth).sqrt() / (beta * self.hbar))
            }
            Shape::Well { .. } => None,
        }
    }

    /// `(nu - 1) / 2` for Morse; may be negative for a shallow well.
    pub fn p(&self) -> Option<f64> {
        self.nu().map(|nu| (nu - 1.0) / 2.0)
    }

    /// Frequency scale of the quantum ladder: `alpha^2 hbar^2 / 4` (well) or
    /// `hbar^2 eps^2 / 4` (Morse). Both spectra read `E = +/- unit * (..)^2`.
    pub fn energy_unit(&self) -> f64 {
        let h2 = self.hbar * self.hbar;
        match self.shape {
            Shape::Well { .. } => self.alpha().unwrap().powi(2) * h2 / 4.0,
            Shape::Morse { .. } => self.epsilon().unwrap().powi(2) * h2 / 4.0,
        }
    }

    /// Coefficient `a` of the quadratic spectrum `E_n = a n^2 + b n + c`.
    pub fn quadratic_a(&self) -> f64 {
        match self.kind() {
            SystemKind::InfiniteWell => self.energy_unit(),
            SystemKind::Morse => -self.energy_unit(),
        }
    }

    /// Smallest admissible quantum number.
    pub fn min_label(&self) -> u32 {
        match self.kind() {
            SystemKind::InfiniteWell => 1,
            SystemKind::Morse => 0,
        }
    }

    /// Largest admissible quantum number, `None` when unbounded or when the
    /// Morse well holds no state.
    pub fn max_label(&self) -> Option<u32> {
        match self.bound_state_count() {
            BoundStates::Unbounded | BoundStates::Count(0) => None,
            BoundStates::Count(c) => Some(c - 1),
        }
    }

    pub fn bound_state_count(&self) -> BoundStates {
        match self.p() {
            None => BoundStates::Unbounded,
            Some(p) if p < 0.0 => BoundStates::Count(0),
            Some(p) => BoundStates::Count(p.floor() as u32 + 1),
        }
    }

    pub fn check_label(&self, n: u32) -> Result<()> {
        match self.kind() {
            SystemKind::InfiniteWell if n < 1 => Err(GhaError::LabelOutOfRange {
                n,
                min: 1,
                max: u32::MAX,
            }),
            SystemKind::Morse => {
                let p = self.p().unwrap();
                if p < 0.0 || n as f64 > p.floor() {
                    Err(GhaError::NoSuchBoundState {
                        n,
                        max: p.floor() as i64,
                    })
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Closed-form level for any real label, no range check. Used where the
    /// spectral formula is extended past the last bound state.
    pub fn energy_formal(&self, n: f64) -> f64 {
        match self.kind() {
            SystemKind::InfiniteWell => self.energy_unit() * n * n,
            SystemKind::Morse => {
                let s = self.p().unwrap() - n;
                -self.energy_unit() * s * s
            }
        }
    }

    /// `k(n)` with `A- |n> = sqrt(k(n)) |n-1>`: `n^2 - 1` (well), `n (2p - n)` (Morse).
    pub fn ladder_k(&self, n: f64) -> f64 {
        match self.kind() {
            SystemKind::InfiniteWell => n * n - 1.0,
            SystemKind::Morse => n * (2.0 * self.p().unwrap() - n),
        }
    }

    pub fn potential(&self, x: f64) -> f64 {
        match self.shape {
            Shape::Well { length } => {
                if x.abs() <= length / 2.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Shape::Morse { beta, depth } => {
                let e = (-beta * x).exp();
                depth * (e * e - 2.0 * e)
            }
        }
    }

    /// Classical Hamiltonian `P^2 / 2m + V(x)`.
    pub fn hamiltonian(&self, x: f64, momentum: f64) -> f64 {
        momentum * momentum / (2.0 * self.mass) + self.potential(x)
    }

    /// Open interval of energies with bounded periodic motion.
    pub fn energy_regime(&self) -> (f64, f64) {
        match self.shape {
            Shape::Well { .. } => (0.0, f64::INFINITY),
            Shape::Morse { depth, .. } => (-depth, 0.0),
        }
    }

    pub fn check_energy(&self, energy: f64) -> Result<()> {
        let (lo, hi) = self.energy_regime();
        if energy.is_finite() && energy > lo && energy < hi {
            Ok(())
        } else {
            Err(GhaError::EnergyOutOfRegime { energy, lo, hi })
        }
    }
}

/// `E_n`, checked against the admissible label range.
pub fn spectrum_1d(params: &SystemParams, n: u32) -> Result<f64> {
    params.check_label(n)?;
    Ok(params.energy_formal(n as f64))
}

pub fn bound_state_count(params: &SystemParams) -> BoundStates {
    params.bound_state_count()
}

/// Angular frequency of the bounded classical motion at energy `E`.
pub fn classical_frequency(params: &SystemParams, energy: f64) -> Result<f64> {
    params.check_energy(energy)?;
    let m = params.mass();
    Ok(match params.kind() {
        SystemKind::InfiniteWell => PI / params.length().unwrap() * (2.0 * energy / m).sqrt(),
        SystemKind::Morse => params.beta().unwrap() * (-2.0 * energy / m).sqrt(),
    })
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Smallest coprime `(nx, ny)`, both at most `n_max`, with
/// `nx * omega_x = ny * omega_y`. The 2D orbit then closes after
/// `2 pi ny / omega_x`.
pub fn closed_orbit_condition(
    params_x: &SystemParams,
    params_y: &SystemParams,
    ex: f64,
    ey: f64,
    n_max: u32,
) -> Result<Option<(u32, u32)>> {
    if params_x.kind() != params_y.kind() {
        return Err(GhaError::UnsupportedCombination(format!(
            "closed orbits need one kind on both axes, got {:?} and {:?}",
            params_x.kind(),
            params_y.kind()
        )));
    }
    if n_max < 1 {
        return Err(GhaError::Precondition("n_max must be at least 1".into()));
    }
    let wx = classical_frequency(params_x, ex)?;
    let wy = classical_frequency(params_y, ey)?;

    let mut best: Option<(u32, u32)> = None;
    for nx in 1..=n_max {
        for ny in 1..=n_max {
            if gcd(nx, ny) != 1 {
                continue;
            }
            let lhs = nx as f64 * wx;
            let rhs = ny as f64 * wy;
            if (lhs - rhs).abs() <= ORBIT_RTOL * lhs.max(rhs) {
                let better = match best {
                    None => true,
                    Some((bx, by)) => nx + ny < bx + by,
                };
                if better {
                    best = Some((nx, ny));
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyKind {
    Permutation,
    Arithmetical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRelation {
    pub first: (u32, u32),
    pub second: (u32, u32),
    pub kind: DegeneracyKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyClass {
    pub energy: f64,
    pub members: Vec<(u32, u32)>,
    pub relations: Vec<PairRelation>,
}

impl DegeneracyClass {
    pub fn contains(&self, pair: (u32, u32)) -> bool {
        self.members.contains(&pair)
    }

    pub fn relation(&self, a: (u32, u32), b: (u32, u32)) -> Option<DegeneracyKind> {
        self.relations
            .iter()
            .find(|r| (r.first == a && r.second == b) || (r.first == b && r.second == a))
            .map(|r| r.kind)
    }
}

/// Energy classes of the isotropic 2D system, sorted by energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyReport {
    pub kind: SystemKind,
    pub n_max: u32,
    pub classes: Vec<DegeneracyClass>,
}

impl DegeneracyReport {
    /// Classes with more than one member.
    pub fn degenerate(&self) -> impl Iterator<Item = &DegeneracyClass> {
        self.classes.iter().filter(|c| c.members.len() > 1)
    }

    pub fn arithmetical_relations(&self) -> impl Iterator<Item = &PairRelation> {
        self.classes
            .iter()
            .flat_map(|c| c.relations.iter())
            .filter(|r| r.kind == DegeneracyKind::Arithmetical)
    }

    pub fn class_of(&self, pair: (u32, u32)) -> Option<&DegeneracyClass> {
        self.classes.iter().find(|c| c.contains(pair))
    }
}

pub fn energy_2d(params: &SystemParams, nx: u32, ny: u32) -> Result<f64> {
    Ok(spectrum_1d(params, nx)? + spectrum_1d(params, ny)?)
}

/// Groups every label pair up to `n_max` by 2D energy.
pub fn enumerate_degeneracies(params: &SystemParams, n_max: u32) -> Result<DegeneracyReport> {
    params.check_label(n_max)?;
    let lo = params.min_label();
    let mut levels = Vec::new();
    for nx in lo..=n_max {
        for ny in lo..=n_max {
            levels.push((energy_2d(params, nx, ny)?, (nx, ny)));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut classes: Vec<DegeneracyClass> = Vec::new();
    for (energy, pair) in levels {
        let joins = classes.last().is_some_and(|c| {
            (energy - c.energy).abs() <= DEGENERACY_RTOL * energy.abs().max(c.energy.abs())
        });
        if joins {
            classes.last_mut().unwrap().members.push(pair);
        } else {
            classes.push(DegeneracyClass {
                energy,
                members: vec![pair],
                relations: Vec::new(),
            });
        }
    }

    for class in &mut classes {
        let members = &class.members;
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                let kind = if (a.1, a.0) == b {
                    DegeneracyKind::Permutation
                } else {
                    DegeneracyKind::Arithmetical
                };
                class.relations.push(PairRelation {
                    first: a,
                    second: b,
                    kind,
                });
            }
        }
    }

    Ok(DegeneracyReport {
        kind: params.kind(),
        n_max,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;

    fn morse(depth: f64) -> SystemParams {
        SystemParams::morse(1.0, 1.0, 1.0, depth).unwrap()
    }

    #[test]
    fn rejects_non_positive_constants() {
        assert!(SystemParams::well(0.0, 1.0, 2.0).is_err());
        assert!(SystemParams::well(1.0, -1.0, 2.0).is_err());
        assert!(SystemParams::morse(1.0, 1.0, f64::NAN, 15.0).is_err());
        assert!(matches!(
            SystemParams::morse(1.0, 1.0, 1.0, 0.0),
            Err(GhaError::InvalidParameter { name: "V0", .. })
        ));
    }

    #[test]
    fn kinds_carry_only_their_constants() {
        let w = SystemParams::default_well();
        assert_eq!(w.beta(), None);
        assert_eq!(w.depth(), None);
        assert_eq!(w.p(), None);
        let m = SystemParams::default_morse();
        assert_eq!(m.length(), None);
        assert_eq!(m.alpha(), None);
    }

    #[test]
    fn derived_constants() {
        let m = SystemParams::default_morse();
        assert!((m.nu().unwrap() - 120f64.sqrt()).abs() < 1e-14);
        assert!((m.p().unwrap() - (120f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
        assert!((m.epsilon().unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let w = SystemParams::default_well();
        assert!((w.alpha().unwrap() - PI / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_levels() {
        let w = SystemParams::default_well();
        assert!((spectrum_1d(&w, 1).unwrap() - PI * PI / 8.0).abs() < 1e-14);
        let m = SystemParams::default_morse();
        let p = m.p().unwrap();
        assert!((spectrum_1d(&m, 0).unwrap() + p * p / 2.0).abs() < 1e-13);
        assert!((spectrum_1d(&m, 0).unwrap() + 12.386387).abs() < 1e-6);
        let top = spectrum_1d(&m, 4).unwrap();
        assert!(top < 0.0);
        assert!((0..4).all(|n| spectrum_1d(&m, n).unwrap() < top));
    }

    #[test]
    fn label_bounds() {
        let w = SystemParams::default_well();
        assert!(matches!(
            spectrum_1d(&w, 0),
            Err(GhaError::LabelOutOfRange { min: 1, .. })
        ));
        let m = SystemParams::default_morse();
        assert!(matches!(
            spectrum_1d(&m, 5),
            Err(GhaError::NoSuchBoundState { n: 5, max: 4 })
        ));
    }

    #[test]
    fn counts() {
        assert_eq!(bound_state_count(&morse(15.0)), BoundStates::Count(5));
        assert_eq!(bound_state_count(&morse(8.0)), BoundStates::Count(4));
        assert_eq!(bound_state_count(&morse(0.01)), BoundStates::Count(0));
        assert_eq!(morse(0.01).max_label(), None);
        assert_eq!(
            bound_state_count(&SystemParams::default_well()),
            BoundStates::Unbounded
        );
    }

    #[test]
    fn counts_match_negative_fd_eigenvalues() {
        for (depth, expected) in [(15.0, 5), (8.0, 4)] {
            let params = morse(depth);
            let h = fd::hamiltonian_1d(&params, -2.0, 70.0, 4096);
            let negative = h.count_below(0.0);
            assert_eq!(negative, expected, "V0 = {depth}");
        }
    }

    #[test]
    fn spectrum_matches_fd_oracle() {
        for params in [morse(15.0), morse(8.0)] {
            let top = params.max_label().unwrap();
            let x_max = if params.depth() == Some(8.0) {
                70.0
            } else {
                40.0
            };
            let oracle = fd::richardson_levels(&params, -2.0, x_max, 1024, top as usize + 1);
            for n in 0..=top {
                let exact = spectrum_1d(&params, n).unwrap();
                let rel = ((oracle[n as usize] - exact) / exact).abs();
                assert!(rel < 1e-6, "n = {n}: rel {rel:e}");
            }
        }
        let w = SystemParams::default_well();
        let oracle = fd::richardson_levels(&w, -1.0, 1.0, 1024, 10);
        for n in 1..=10u32 {
            let exact = spectrum_1d(&w, n).unwrap();
            let rel = ((oracle[n as usize - 1] - exact) / exact).abs();
            assert!(rel < 1e-6, "well n = {n}: rel {rel:e}");
        }
    }

    #[test]
    fn frequencies() {
        let w = SystemParams::default_well();
        assert!((classical_frequency(&w, 2.0).unwrap() - PI).abs() < 1e-14);
        let m = SystemParams::default_morse();
        assert!((classical_frequency(&m, -2.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((classical_frequency(&m, -4.5).unwrap() - 3.0).abs() < 1e-14);
        assert!(classical_frequency(&m, -1e-12).unwrap() < 1e-5);
        assert!(matches!(
            classical_frequency(&m, -20.0),
            Err(GhaError::EnergyOutOfRegime { lo, hi, .. }) if lo == -15.0 && hi == 0.0
        ));
        assert!(classical_frequency(&w, 0.0).is_err());
    }

    #[test]
    fn orbit_conditions_for_the_reference_figures() {
        let w = SystemParams::default_well();
        assert_eq!(
            closed_orbit_condition(&w, &w, 2.0, 0.5, 10).unwrap(),
            Some((1, 2))
        );
        let m = SystemParams::default_morse();
        assert_eq!(
            closed_orbit_condition(&m, &m, -2.0, -4.5, 10).unwrap(),
            Some((3, 2))
        );
        assert_eq!(
            closed_orbit_condition(&m, &m, -3.0, -3.0, 10).unwrap(),
            Some((1, 1))
        );
        assert_eq!(
            closed_orbit_condition(&m, &m, -2.0, -3.0, 20).unwrap(),
            None
        );
        assert!(matches!(
            closed_orbit_condition(&w, &m, 2.0, -2.0, 10),
            Err(GhaError::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn well_degeneracies() {
        let report = enumerate_degeneracies(&SystemParams::default_well(), 8).unwrap();
        let class = report.class_of((1, 7)).unwrap();
        assert!(class.contains((7, 1)) && class.contains((5, 5)));
        assert_eq!(class.members.len(), 3);
        assert_eq!(
            class.relation((1, 7), (7, 1)),
            Some(DegeneracyKind::Permutation)
        );
        assert_eq!(
            class.relation((1, 7), (5, 5)),
            Some(DegeneracyKind::Arithmetical)
        );
        let unit = SystemParams::default_well().energy_unit();
        assert!((class.energy / unit - 50.0).abs() < 1e-12);
        assert!(report.classes.windows(2).all(|w| w[0].energy < w[1].energy));
    }

    #[test]
    fn morse_degeneracies() {
        let report = enumerate_degeneracies(&morse(8.0), 3).unwrap();
        let class = report.class_of((0, 3)).unwrap();
        let mut members = class.members.clone();
        members.sort();
        assert_eq!(members, vec![(0, 3), (1, 1), (3, 0)]);
        assert!((class.energy + 6.25).abs() < 1e-12);

        let generic = enumerate_degeneracies(&morse(15.0), 4).unwrap();
        assert_eq!(generic.arithmetical_relations().count(), 0);
        assert!(enumerate_degeneracies(&morse(15.0), 5).is_err());
    }

    #[test]
    fn n_max_one_gives_only_permutation_doublets() {
        let report = enumerate_degeneracies(&morse(15.0), 1).unwrap();
        assert_eq!(report.arithmetical_relations().count(), 0);
        assert_eq!(report.degenerate().count(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn orbit_condition_is_symmetric(
                ex in 0.1f64..10.0,
                ey in 0.1f64..10.0,
                a in 1u32..6,
                b in 1u32..6,
                well in any::<bool>(),
            ) {
                let params = if well { SystemParams::default_well() } else { SystemParams::default_morse() };
                // Half the cases are built commensurate on purpose.
                let (ex, ey) = if a % 2 == 0 {
                    (ex, ex * (a as f64 / b as f64).powi(2))
                } else {
                    (ex, ey)
                };
                let (ex, ey) = if well { (ex, ey) } else { (-ex.min(14.0), -ey.min(14.0)) };
                let fwd = closed_orbit_condition(&params, &params, ex, ey, 12).unwrap();
                let back = closed_orbit_condition(&params, &params, ey, ex, 12).unwrap();
                prop_assert_eq!(fwd, back.map(|(x, y)| (y, x)));
            }

            #[test]
            fn transposes_share_a_class(depth in 2.0f64..60.0, well in any::<bool>(), n_max in 1u32..9) {
                let params = if well { SystemParams::default_well() } else { morse(depth) };
                let n_max = match params.max_label() {
                    Some(top) => n_max.min(top),
                    None if well => n_max,
                    None => return Ok(()),
                };
                if n_max < params.min_label() {
                    return Ok(());
                }
                let report = enumerate_degeneracies(&params, n_max).unwrap();
                for class in report.degenerate() {
                    for &(x, y) in &class.members {
                        prop_assert!(class.contains((y, x)));
                    }
                }
            }

            #[test]
            fn generic_morse_has_no_arithmetical_pairs(depth in 2.0f64..80.0) {
                let params = morse(depth);
                // Coincidences need 2p rational with a small denominator.
                let p = params.p().unwrap();
                prop_assume!((1..=40).all(|d| {
                    let q = 2.0 * p * d as f64;
                    (q - q.round()).abs() > 1e-6
                }));
                if let Some(top) = params.max_label() {
                    let report = enumerate_degeneracies(&params, top).unwrap();
                    prop_assert_eq!(report.arithmetical_relations().count(), 0);
                }
            }
        }
    }
}
