//! Grid realization of the 2D Morse system and its supersymmetric partner.
//!
//! The 2D grid is laid out in rotated coordinates `u = x + y` (uniform,
//! endpoints included) and `w = x - y` (uniform, even point count, centred on
//! zero), so no sample sits on the diagonal `x = y` where `coth(beta w / 2)`
//! and the partner barrier diverge, and the exchange `x <-> y` maps the grid
//! onto itself (`w -> -w`). With `x+- = x +- y`, `d/dx- = d/dw` and
//! `d/dx+ = d/du`; the Laplacian is `2 (d2/du2 + d2/dw2)`.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{GhaError, Result};
use crate::fd;
use crate::model::{SystemKind, SystemParams, DEGENERACY_RTOL};
use crate::par;

/// Boundary magnitude below which a 1D eigenfunction counts as decayed.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Relative diagonal magnitude above which a field counts as non-vanishing on
/// `x = y`. Discretization error of a partner state is ~1e-2 on coarse grids,
/// a generic symmetric product is O(1).
pub const DIAGONAL_TOL: f64 = 0.25;
const POTENTIAL_CAP: f64 = 1e300;

fn require_morse(params: &SystemParams) -> Result<(f64, f64, f64)> {
    match (params.beta(), params.depth(), params.p()) {
        (Some(b), Some(v0), Some(p)) => Ok((b, v0, p)),
        _ => Err(GhaError::UnsupportedCombination(
            "this operation is defined for the Morse system only".into(),
        )),
    }
}

/// `hbar^2 eps^2 / 4 = hbar^2 beta^2 / (2m)`, the Morse energy unit.
fn unit(params: &SystemParams) -> f64 {
    params.energy_unit()
}

// ---------------------------------------------------------------- stencils

/// Central first-derivative weights for offsets `1..=order/2`.
fn d1_weights(order: usize) -> &'static [f64] {
    match order {
        2 => &[1.0 / 2.0],
        4 => &[2.0 / 3.0, -1.0 / 12.0],
        6 => &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
        _ => &[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
    }
}

/// Central second-derivative weights: centre, then offsets `1..=order/2`.
fn d2_weights(order: usize) -> (f64, &'static [f64]) {
    match order {
        2 => (-2.0, &[1.0]),
        4 => (-5.0 / 2.0, &[4.0 / 3.0, -1.0 / 12.0]),
        6 => (-49.0 / 18.0, &[3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0]),
        _ => (
            -205.0 / 72.0,
            &[8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0],
        ),
    }
}

fn check_order(order: usize) -> Result<()> {
    if matches!(order, 2 | 4 | 6 | 8) {
        Ok(())
    } else {
        Err(GhaError::Precondition(format!(
            "stencil order must be 2, 4, 6 or 8, got {order}"
        )))
    }
}

/// Derivative of a strided sequence; zero within reach of either end.
fn stencil_1d(f: &[f64], order: usize, second: bool, h: f64, out: &mut [f64]) {
    let n = f.len();
    let reach = order / 2;
    out.iter_mut().for_each(|v| *v = 0.0);
    if n <= 2 * reach {
        return;
    }
    if second {
        let (c0, w) = d2_weights(order);
        let s = 1.0 / (h * h);
        for i in reach..n - reach {
            let mut acc = c0 * f[i];
            for (k, c) in w.iter().enumerate() {
                acc += c * (f[i + k + 1] + f[i - k - 1]);
            }
            out[i] = acc * s;
        }
    } else {
        let w = d1_weights(order);
        for i in reach..n - reach {
            let mut acc = 0.0;
            for (k, c) in w.iter().enumerate() {
                acc += c * (f[i + k + 1] - f[i - k - 1]);
            }
            out[i] = acc / h;
        }
    }
}

// ---------------------------------------------------------------- 1D fields

/// Samples on `x0 + i * step`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field1d {
    pub x0: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl Field1d {
    pub fn sample(x0: f64, x1: f64, step: f64, f: impl Fn(f64) -> f64) -> Self {
        let n = ((x1 - x0) / step).round() as usize + 1;
        Self {
            x0,
            step,
            values: (0..n).map(|i| f(x0 + i as f64 * step)).collect(),
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.step
    }

    /// Trapezoid inner product; both fields must share the sampling.
    pub fn dot(&self, other: &Self) -> f64 {
        let n = self.values.len();
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        let ends = if n > 1 {
            0.5 * (self.values[0] * other.values[0] + self.values[n - 1] * other.values[n - 1])
        } else {
            0.0
        };
        (s - ends) * self.step
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn overlap(&self, other: &Self) -> f64 {
        self.dot(other) / (self.norm() * other.norm())
    }

    fn map2(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            x0: self.x0,
            step: self.step,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Fourth-order first derivative, one-sided on the two end samples.
    fn derivative(&self) -> Vec<f64> {
        let (f, h) = (&self.values, self.step);
        let n = f.len();
        let mut out = vec![0.0; n];
        stencil_1d(f, 4, false, h, &mut out);
        if n < 5 {
            return out;
        }
        let edge = |g: &dyn Fn(usize) -> f64| {
            (
                (-25.0 * g(0) + 48.0 * g(1) - 36.0 * g(2) + 16.0 * g(3) - 3.0 * g(4)) / (12.0 * h),
                (-3.0 * g(0) - 10.0 * g(1) + 18.0 * g(2) - 6.0 * g(3) + g(4)) / (12.0 * h),
            )
        };
        (out[0], out[1]) = edge(&|i| f[i]);
        let (a, b) = edge(&|i| f[n - 1 - i]);
        (out[n - 1], out[n - 2]) = (-a, -b);
        out
    }
}

// ---------------------------------------------------------------- eigenfunctions

/// Generalized Laguerre polynomial `L_n^(alpha)(xi)` by the three-term recurrence.
pub fn laguerre(n: u32, alpha: f64, xi: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - xi;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - xi) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Normalized Morse bound state `psi_n(x)` with `xi = nu e^{-beta x}`:
/// `N_n xi^s e^{-xi/2} L_n^(2s)(xi)`, `s = p - n`,
/// `N_n^2 = beta n! 2s / Gamma(2p - n + 1)`.
pub fn morse_eigenfunction(params: &SystemParams, n: u32, x: f64) -> Result<f64> {
    let (beta, _, p) = require_morse(params)?;
    params.check_label(n)?;
    Ok(morse_psi(beta, params.nu().unwrap(), p, n, x))
}

fn morse_psi(beta: f64, nu: f64, p: f64, n: u32, x: f64) -> f64 {
    let s = p - n as f64;
    let xi = nu * (-beta * x).exp();
    let log_norm = 0.5
        * (beta.ln() + ln_gamma(n as f64 + 1.0) + (2.0 * s).ln()
            - ln_gamma(2.0 * p - n as f64 + 1.0));
    let envelope = (log_norm + s * xi.ln() - 0.5 * xi).exp();
    if envelope == 0.0 {
        return 0.0;
    }
    envelope * laguerre(n, 2.0 * s, xi)
}

pub fn morse_eigenfunction_1d(params: &SystemParams, n: u32, x: &[f64]) -> Result<Vec<f64>> {
    let (beta, _, p) = require_morse(params)?;
    params.check_label(n)?;
    let nu = params.nu().unwrap();
    Ok(x.iter().map(|&x| morse_psi(beta, nu, p, n, x)).collect())
}

/// Smallest interval, grown from `[-2/beta, 12/beta]` in steps of `1/beta`,
/// on whose ends every `psi_n`, `n <= max_label`, is below [`BOUNDARY_TOL`].
pub fn morse_domain(params: &SystemParams, max_label: u32) -> Result<(f64, f64)> {
    let (beta, _, _) = require_morse(params)?;
    params.check_label(max_label)?;
    let worst = |x: f64| -> f64 {
        (0..=max_label)
            .map(|n| morse_eigenfunction(params, n, x).unwrap().abs())
            .fold(0.0, f64::max)
    };
    let (mut lo, mut hi) = (-2.0 / beta, 12.0 / beta);
    while worst(lo) >= BOUNDARY_TOL {
        lo -= 1.0 / beta;
    }
    while worst(hi) >= BOUNDARY_TOL {
        hi += 1.0 / beta;
        if hi > 1e4 / beta {
            return Err(GhaError::Precondition(
                "eigenfunction tail does not decay".into(),
            ));
        }
    }
    Ok((lo, hi))
}

/// One row of the eigenfunction gate.
#[derive(Debug, Clone, Serialize)]
pub struct GateRow {
    pub n: u32,
    pub energy: f64,
    pub energy_fd: f64,
    pub relative_error: f64,
    /// `|<psi_analytic, psi_fd>|` over the coarse nodes, both unit-normalized.
    pub overlap: f64,
    pub nodes: usize,
}

/// Compares every analytic Morse state with the Richardson-extrapolated
/// finite-difference eigenpair on `coarse`, `2 coarse`, `4 coarse` intervals.
pub fn eigenfunction_gate(params: &SystemParams, coarse: usize) -> Result<Vec<GateRow>> {
    let (_, _, p) = require_morse(params)?;
    if p < 0.0 {
        return Ok(Vec::new());
    }
    let top = p.floor() as u32;
    let (lo, hi) = morse_domain(params, top)?;
    let rows = par::map_range(top as usize + 1, |k| {
        let n = k as u32;
        let pair = fd::richardson_state(params, lo, hi, coarse, k);
        let analytic = morse_eigenfunction_1d(params, n, &pair.x).unwrap();
        let fa = Field1d {
            x0: lo,
            step: pair.step,
            values: analytic,
        };
        let ff = Field1d {
            x0: lo,
            step: pair.step,
            values: pair.psi.clone(),
        };
        let energy = params.energy_formal(n as f64);
        GateRow {
            n,
            energy,
            energy_fd: pair.energy,
            relative_error: ((pair.energy - energy) / energy).abs(),
            overlap: fa.overlap(&ff).abs(),
            nodes: sign_changes(&fa.values),
        }
    });
    Ok(rows)
}

/// Sign changes, ignoring samples below `1e-8` of the peak.
pub fn sign_changes(values: &[f64]) -> usize {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in values.iter().filter(|v| v.abs() > 1e-8 * peak) {
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

// ---------------------------------------------------------------- 2D grid

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid2D {
    /// Each of `x` and `y` is resolved on `[x_min, x_max]`.
    pub x_min: f64,
    pub x_max: f64,
    /// Points per rotated axis (even).
    pub n_points: usize,
    /// Stencil order: 2, 4, 6 or 8.
    pub order: usize,
}

impl Grid2D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize, order: usize) -> Result<Self> {
        check_order(order)?;
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(GhaError::Precondition(format!(
                "empty interval [{x_min}, {x_max}]"
            )));
        }
        if !n_points.is_multiple_of(2) || n_points < 2 * order + 2 {
            return Err(GhaError::Precondition(format!(
                "n_points must be even and at least {}, got {n_points}",
                2 * order + 2
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
            order,
        })
    }

    /// Grid whose interval covers every Morse state up to `max_label`.
    pub fn for_states(
        params: &SystemParams,
        max_label: u32,
        n_points: usize,
        order: usize,
    ) -> Result<Self> {
        let (lo, hi) = morse_domain(params, max_label)?;
        Self::new(lo, hi, n_points, order)
    }

    pub fn len(&self) -> usize {
        self.n_points * self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Spacing along `u = x + y`.
    pub fn spacing_u(&self) -> f64 {
        2.0 * self.width() / (self.n_points - 1) as f64
    }

    /// Spacing along `w = x - y`.
    pub fn spacing_w(&self) -> f64 {
        2.0 * self.width() / self.n_points as f64
    }

    pub fn u(&self, i: usize) -> f64 {
        2.0 * self.x_min + i as f64 * self.spacing_u()
    }

    pub fn w(&self, j: usize) -> f64 {
        (j as f64 - 0.5 * (self.n_points - 1) as f64) * self.spacing_w()
    }

    pub fn xy(&self, idx: usize) -> (f64, f64) {
        let (u, w) = (self.u(idx / self.n_points), self.w(idx % self.n_points));
        (0.5 * (u + w), 0.5 * (u - w))
    }

    /// Index of the sample at the exchanged point `(y, x)`.
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.n_points;
        (idx / n) * n + (n - 1 - idx % n)
    }

    /// Area element `dx dy = du dw / 2`.
    pub fn cell(&self) -> f64 {
        0.5 * self.spacing_u() * self.spacing_w()
    }

    pub fn field(&self, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> WaveField {
        WaveField {
            grid: *self,
            values: par::map_range(self.len(), |idx| {
                let (x, y) = self.xy(idx);
                f(x, y)
            }),
        }
    }

    fn derivative(&self, f: &[f64], along_u: bool, second: bool) -> Vec<f64> {
        let n = self.n_points;
        let mut out = vec![0.0; f.len()];
        if along_u {
            let h = self.spacing_u();
            let order = self.order;
            // Column j gathered into a row-sized buffer per output row.
            par::for_each_row(&mut out, n, |i, row| {
                let reach = order / 2;
                if i < reach || i + reach >= n {
                    return;
                }
                if second {
                    let (c0, w) = d2_weights(order);
                    for (j, r) in row.iter_mut().enumerate() {
                        let mut acc = c0 * f[i * n + j];
                        for (k, c) in w.iter().enumerate() {
                            acc += c * (f[(i + k + 1) * n + j] + f[(i - k - 1) * n + j]);
                        }
                        *r = acc / (h * h);
                    }
                } else {
                    let w = d1_weights(order);
                    for (j, r) in row.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (k, c) in w.iter().enumerate() {
                            acc += c * (f[(i + k + 1) * n + j] - f[(i - k - 1) * n + j]);
                        }
                        *r = acc / h;
                    }
                }
            });
        } else {
            let h = self.spacing_w();
            par::for_each_row(&mut out, n, |i, row| {
                stencil_1d(&f[i * n..(i + 1) * n], self.order, second, h, row);
            });
        }
        out
    }
}

/// Real samples on a [`Grid2D`]; every operator here is real.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl WaveField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0f64, |m, v| par::nan_max(m, v.abs()))
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// The field at exchanged coordinates, `f(y, x)`.
    pub fn exchanged(&self) -> Self {
        Self {
            grid: self.grid,
            values: (0..self.values.len())
                .map(|i| self.values[self.grid.mirror(i)])
                .collect(),
        }
    }

    /// `max |f - s f(y,x)| / max |f|` with `s = +1` (symmetry) or `-1`.
    pub fn parity_defect(&self, s: f64) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let d = (0..self.values.len())
            .map(|i| (self.values[i] - s * self.values[self.grid.mirror(i)]).abs())
            .fold(0.0, par::nan_max);
        d / peak
    }

    /// Extrapolated magnitude on `x = y` relative to the field maximum.
    ///
    /// The symmetric part `s(w)` is read at the two sample pairs nearest the
    /// diagonal and extended to `w = 0` assuming `s = s0 + c w^2`.
    pub fn diagonal_magnitude(&self) -> f64 {
        let n = self.grid.n_points;
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let (j1, j2) = (n / 2, n / 2 + 1);
        let d = (0..n)
            .map(|i| {
                let s = |j: usize| 0.5 * (self.values[i * n + j] + self.values[i * n + n - 1 - j]);
                ((9.0 * s(j1) - s(j2)) / 8.0).abs()
            })
            .fold(0.0, par::nan_max);
        d / peak
    }

    /// RFC 4180 table `x,y,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,re,im\r\n");
        for (i, v) in self.values.iter().enumerate() {
            let (x, y) = self.grid.xy(i);
            s.push_str(&format!("{x:.17e},{y:.17e},{v:.17e},0\r\n"));
        }
        s
    }
}

// ---------------------------------------------------------------- operators

/// Normalization of the light-cone derivatives in `D+-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum LightCone {
    /// `d/dx+- = (d/dx +- d/dy) / 2`, the chain rule for `x+- = x +- y`.
    #[default]
    Half,
    /// `d/dx+- = d/dx +- d/dy`; kept to show that it fails to annihilate
    /// `Psi^A_{n,n+1}`.
    Unit,
}

impl LightCone {
    fn factor(self) -> f64 {
        match self {
            LightCone::Half => 1.0,
            LightCone::Unit => 2.0,
        }
    }
}

/// Grid plus the cached multiplicative terms of the Morse operators.
#[derive(Debug, Clone)]
pub struct SusyGrid {
    pub convention: LightCone,
    pub params: SystemParams,
    pub grid: Grid2D,
    vx: Vec<f64>,
    vy: Vec<f64>,
    coth: Vec<f64>,
    barrier: Vec<f64>,
    /// `hbar^2 / m`.
    k2: f64,
    beta: f64,
}

fn morse_potential(depth: f64, beta: f64, z: f64) -> f64 {
    let e = (-beta * z).exp();
    (depth * (e * e - 2.0 * e)).min(POTENTIAL_CAP)
}

impl SusyGrid {
    pub fn new(params: &SystemParams, grid: Grid2D) -> Result<Self> {
        let (beta, depth, _) = require_morse(params)?;
        let k2 = params.hbar().powi(2) / params.mass();
        let pts: Vec<(f64, f64, f64)> = par::map_range(grid.len(), |i| {
            let (x, y) = grid.xy(i);
            (x, y, grid.w(i % grid.n_points))
        });
        Ok(Self {
            convention: LightCone::Half,
            params: *params,
            grid,
            vx: pts
                .iter()
                .map(|p| morse_potential(depth, beta, p.0))
                .collect(),
            vy: pts
                .iter()
                .map(|p| morse_potential(depth, beta, p.1))
                .collect(),
            coth: pts
                .iter()
                .map(|p| 1.0 / (0.5 * beta * p.2).tanh())
                .collect(),
            barrier: pts
                .iter()
                .map(|p| k2 * beta * beta / (2.0 * (0.5 * beta * p.2).sinh().powi(2)))
                .collect(),
            k2,
            beta,
        })
    }

    pub fn with_convention(mut self, convention: LightCone) -> Self {
        self.convention = convention;
        self
    }

    fn d(&self, f: &WaveField, along_u: bool, second: bool) -> Vec<f64> {
        self.grid.derivative(&f.values, along_u, second)
    }

    fn build(&self, f: impl Fn(usize) -> f64 + Sync + Send) -> WaveField {
        WaveField {
            grid: self.grid,
            values: par::map_range(self.grid.len(), f),
        }
    }

    fn cross(&self, f: &WaveField) -> Vec<f64> {
        let fw = self.d(f, false, false);
        self.grid.derivative(&fw, true, false)
    }

    /// `Hx` (`sign = 1`) or `Hy` (`sign = -1`): `d2/dx2 = duu + dww +- 2 duw`.
    fn axis_h(&self, f: &WaveField, sign: f64) -> WaveField {
        let (fuu, fww, fuw) = (self.d(f, true, true), self.d(f, false, true), self.cross(f));
        let v = if sign > 0.0 { &self.vx } else { &self.vy };
        self.build(|i| {
            -0.5 * self.k2 * (fuu[i] + fww[i] + 2.0 * sign * fuw[i]) + v[i] * f.values[i]
        })
    }

    pub fn apply_hx(&self, f: &WaveField) -> WaveField {
        self.axis_h(f, 1.0)
    }

    pub fn apply_hy(&self, f: &WaveField) -> WaveField {
        self.axis_h(f, -1.0)
    }

    pub fn apply_h(&self, f: &WaveField) -> WaveField {
        let (fuu, fww) = (self.d(f, true, true), self.d(f, false, true));
        self.build(|i| -self.k2 * (fuu[i] + fww[i]) + (self.vx[i] + self.vy[i]) * f.values[i])
    }

    fn require_diagonal_zero(&self, f: &WaveField) -> Result<()> {
        let magnitude = f.diagonal_magnitude();
        if magnitude > DIAGONAL_TOL {
            Err(GhaError::SingularDiagonal { magnitude })
        } else {
            Ok(())
        }
    }

    /// `H + (hbar^2/m) beta^2 / (2 sinh^2(beta (x - y)/2))`.
    pub fn apply_htilde(&self, f: &WaveField) -> Result<WaveField> {
        self.require_diagonal_zero(f)?;
        Ok(self.apply_htilde_unchecked(f))
    }

    fn apply_htilde_unchecked(&self, f: &WaveField) -> WaveField {
        let h = self.apply_h(f);
        self.build(|i| h.values[i] + self.barrier[i] * f.values[i])
    }

    /// `D+-  = (hbar^2 beta^2 / 2m) coth(beta x-/2) -+ (beta hbar^2/m)(d/dx- + coth d/dx+)`.
    pub fn apply_d(&self, sign: f64, f: &WaveField) -> Result<WaveField> {
        self.require_diagonal_zero(f)?;
        Ok(self.apply_d_unchecked(sign, f))
    }

    fn apply_d_unchecked(&self, sign: f64, f: &WaveField) -> WaveField {
        let (fu, fw) = (self.d(f, true, false), self.d(f, false, false));
        let c = 0.5 * self.k2 * self.beta * self.beta;
        let s = sign.signum() * self.beta * self.k2 * self.convention.factor();
        self.build(|i| c * self.coth[i] * f.values[i] - s * (fw[i] + self.coth[i] * fu[i]))
    }

    /// `Q+- = -Hx + Hy + D+-`.
    pub fn supercharge(&self, sign: f64, f: &WaveField) -> Result<WaveField> {
        self.require_diagonal_zero(f)?;
        Ok(self.supercharge_unchecked(sign, f))
    }

    fn supercharge_unchecked(&self, sign: f64, f: &WaveField) -> WaveField {
        // -Hx + Hy = (2 hbar^2/m) duw - Vx + Vy.
        let fuw = self.cross(f);
        let d = self.apply_d_unchecked(sign, f);
        self.build(|i| {
            2.0 * self.k2 * fuw[i] + (self.vy[i] - self.vx[i]) * f.values[i] + d.values[i]
        })
    }

    /// `psi_n(x) psi_m(y)`.
    pub fn product_state(&self, n: u32, m: u32) -> Result<WaveField> {
        let (beta, _, p) = require_morse(&self.params)?;
        self.params.check_label(n)?;
        self.params.check_label(m)?;
        let nu = self.params.nu().unwrap();
        Ok(self
            .grid
            .field(|x, y| morse_psi(beta, nu, p, n, x) * morse_psi(beta, nu, p, m, y)))
    }

    /// `(psi_n(x) psi_m(y) +- psi_m(x) psi_n(y)) / sqrt(2)`.
    pub fn sym_antisym_state(&self, n: u32, m: u32) -> Result<(WaveField, WaveField)> {
        let a = self.product_state(n, m)?;
        let b = a.exchanged();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Ok((a.add(&b).scale(r), a.sub(&b).scale(r)))
    }
}

fn require_intertwining_labels(n: u32, m: u32) -> Result<()> {
    if n == m || n.abs_diff(m) == 1 {
        Err(GhaError::Precondition(format!(
            "(n, m) = ({n}, {m}): intertwining needs n != m and |n - m| != 1 \
             (Psi~ vanishes or is not an eigenstate otherwise)"
        )))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Intertwining {
    /// `||(H~ Q+ - Q+ H) Psi^A|| / ||Q+ Psi^A||`.
    pub residual: f64,
    /// Same for `H Q- - Q- H~` applied to `Q+ Psi^A`.
    pub residual_minus: f64,
    pub q_norm: f64,
    /// Rayleigh quotient of `H~` on `Q+ Psi^A`.
    pub partner_energy: f64,
    pub energy: f64,
}

pub fn intertwining_residual(sg: &SusyGrid, n: u32, m: u32) -> Result<Intertwining> {
    require_intertwining_labels(n, m)?;
    let (_, a) = sg.sym_antisym_state(n, m)?;
    let qa = sg.supercharge_unchecked(1.0, &a);
    let lhs = sg.apply_htilde_unchecked(&qa);
    let rhs = sg.supercharge_unchecked(1.0, &sg.apply_h(&a));
    let q_norm = qa.norm();
    let lhs_m = sg.apply_h(&sg.supercharge_unchecked(-1.0, &qa));
    let rhs_m = sg.supercharge_unchecked(-1.0, &lhs);
    let qqa = sg.supercharge_unchecked(-1.0, &qa);
    Ok(Intertwining {
        residual: lhs.sub(&rhs).norm() / q_norm,
        residual_minus: lhs_m.sub(&rhs_m).norm() / qqa.norm(),
        q_norm,
        partner_energy: qa.dot(&lhs) / qa.dot(&qa),
        energy: sg.params.energy_formal(n as f64) + sg.params.energy_formal(m as f64),
    })
}

/// Observed order between residuals at spacing `h` and `h / ratio`.
pub fn convergence_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

// ---------------------------------------------------------------- R

/// `(E_{m+1} - E_n)(E_{m-1} - E_n)` with the closed-form spectrum extended
/// past the last bound state.
pub fn r_eigenvalue(params: &SystemParams, n: u32, m: u32) -> Result<f64> {
    require_morse(params)?;
    let e = |k: f64| params.energy_formal(k);
    let (n, m) = (n as f64, m as f64);
    Ok((e(m + 1.0) - e(n)) * (e(m - 1.0) - e(n)))
}

/// The same product with one factor of the energy unit removed.
pub fn r_eigenvalue_single_prefactor(params: &SystemParams, n: u32, m: u32) -> Result<f64> {
    Ok(r_eigenvalue(params, n, m)? / unit(params))
}

#[derive(Debug, Clone, Serialize)]
pub struct RGridReport {
    pub n: u32,
    pub m: u32,
    pub r_exact: f64,
    /// Rayleigh quotient of `Q- Q+` on `Psi^A_{n,m}`; `None` for `n = m`.
    pub r_composed: Option<f64>,
    /// `||Q- Q+ Psi^A - r Psi^A|| / ||Psi^A||`.
    pub composed_residual: Option<f64>,
    /// Rayleigh quotient of `(Hx - Hy)^2 + 2cH + c^2` on `psi_n psi_m`.
    pub r_operator: f64,
    pub operator_residual: f64,
    /// Rayleigh quotient of `Q+ Q-` on `Q+ Psi^A` (partner sector).
    pub r_partner: Option<f64>,
    pub q_plus_norm: Option<f64>,
}

pub fn verify_r_on_grid(sg: &SusyGrid, n: u32, m: u32) -> Result<RGridReport> {
    let r = r_eigenvalue(&sg.params, n, m)?;
    let c = unit(&sg.params);
    let prod = sg.product_state(n, m)?;
    let s = sg.apply_hx(&prod).sub(&sg.apply_hy(&prod));
    let ss = sg.apply_hx(&s).sub(&sg.apply_hy(&s));
    let rhs = ss
        .add(&sg.apply_h(&prod).scale(2.0 * c))
        .add(&prod.scale(c * c));
    let pp = prod.dot(&prod);
    let r_operator = prod.dot(&rhs) / pp;
    let operator_residual = rhs.sub(&prod.scale(r)).norm() / prod.norm();

    let (mut r_composed, mut composed_residual, mut r_partner, mut q_plus_norm) =
        (None, None, None, None);
    if n != m {
        let (_, a) = sg.sym_antisym_state(n, m)?;
        let qa = sg.supercharge_unchecked(1.0, &a);
        let qqa = sg.supercharge_unchecked(-1.0, &qa);
        r_composed = Some(a.dot(&qqa) / a.dot(&a));
        composed_residual = Some(qqa.sub(&a.scale(r)).norm() / a.norm());
        q_plus_norm = Some(qa.norm());
        if qa.norm() > 1e-6 {
            let t = sg.supercharge_unchecked(1.0, &qqa);
            r_partner = Some(qa.dot(&t) / qa.dot(&qa));
        }
    }
    Ok(RGridReport {
        n,
        m,
        r_exact: r,
        r_composed,
        composed_residual,
        r_operator,
        operator_residual,
        r_partner,
        q_plus_norm,
    })
}

/// `||[Q- Q+, H] f|| / ||Q- Q+ H f||` on `f = c1 Psi^A_a + c2 Psi^A_b`.
pub fn r_commutator_residual(
    sg: &SusyGrid,
    a: (u32, u32),
    b: (u32, u32),
    c: (f64, f64),
) -> Result<f64> {
    let fa = sg.sym_antisym_state(a.0, a.1)?.1;
    let fb = sg.sym_antisym_state(b.0, b.1)?.1;
    let f = fa.scale(c.0).add(&fb.scale(c.1));
    let r_op = |g: &WaveField| sg.supercharge_unchecked(-1.0, &sg.supercharge_unchecked(1.0, g));
    let rh = r_op(&sg.apply_h(&f));
    let hr = sg.apply_h(&r_op(&f));
    Ok(rh.sub(&hr).norm() / rh.norm())
}

// ---------------------------------------------------------------- theorem

#[derive(Debug, Clone, Serialize)]
pub struct LabelledR {
    pub labels: (u32, u32),
    pub r: f64,
    pub r_single_prefactor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedClass {
    pub energy: f64,
    pub members: Vec<LabelledR>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReplay {
    pub case: &'static str,
    /// Equal-energy, equal-r label pairs falling in this case.
    pub hits: usize,
    /// Of those, pairs that are neither identical nor transposed.
    pub nontrivial: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub n_max: u32,
    pub classes: Vec<ResolvedClass>,
    pub arithmetical_pairs: usize,
    /// Smallest `|r1 - r2| / scale` over arithmetical pairs (`None` if none).
    pub min_separation: Option<f64>,
    pub exhaustive_pairs: usize,
    pub replay: Vec<CaseReplay>,
    pub verdict: &'static str,
}

/// Checks that `r` separates every arithmetically degenerate pair, scans all
/// label pairs for equal `(E, r)`, and replays the four cases that equal `r`
/// and equal `E` allow.
pub fn degeneracy_resolution_check(params: &SystemParams, n_max: u32) -> Result<TheoremReport> {
    let (_, _, p) = require_morse(params)?;
    params.check_label(n_max)?;
    let report = crate::model::enumerate_degeneracies(params, n_max)?;
    let c2 = unit(params).powi(2);
    let rv = |l: (u32, u32)| r_eigenvalue(params, l.0, l.1).unwrap();
    let separated = |a: f64, b: f64| (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(c2);

    let mut min_sep: Option<f64> = None;
    let mut arithmetical = 0;
    for rel in report.arithmetical_relations() {
        arithmetical += 1;
        let (ra, rb) = (rv(rel.first), rv(rel.second));
        let sep = (ra - rb).abs() / ra.abs().max(rb.abs()).max(c2);
        min_sep = Some(min_sep.map_or(sep, |s: f64| s.min(sep)));
        if !separated(ra, rb) {
            return Err(GhaError::TheoremViolation {
                first: rel.first,
                second: rel.second,
                r_first: ra,
                r_second: rb,
            });
        }
    }

    let classes = report
        .degenerate()
        .map(|cl| ResolvedClass {
            energy: cl.energy,
            members: cl
                .members
                .iter()
                .map(|&l| LabelledR {
                    labels: l,
                    r: rv(l),
                    r_single_prefactor: r_eigenvalue_single_prefactor(params, l.0, l.1).unwrap(),
                })
                .collect(),
        })
        .collect();

    // Exhaustive replay over ordered label pairs.
    let labels: Vec<(u32, u32)> = (0..=n_max)
        .flat_map(|a| (0..=n_max).map(move |b| (a, b)))
        .collect();
    let energy =
        |l: (u32, u32)| params.energy_formal(l.0 as f64) + params.energy_formal(l.1 as f64);
    let names = ["m1 = m2", "m1 = n2", "m1 + m2 = 2p", "m1 + n2 = 2p"];
    let mut replay: Vec<CaseReplay> = names
        .iter()
        .map(|&case| CaseReplay {
            case,
            hits: 0,
            nontrivial: 0,
        })
        .collect();
    let mut pairs = 0;
    for (i, &a) in labels.iter().enumerate() {
        for &b in &labels[i + 1..] {
            pairs += 1;
            let (ea, eb) = (energy(a), energy(b));
            if (ea - eb).abs() > DEGENERACY_RTOL * ea.abs().max(eb.abs()) {
                continue;
            }
            let (ra, rb) = (rv(a), rv(b));
            if separated(ra, rb) {
                continue;
            }
            let trivial = a == (b.1, b.0);
            let (m1, n2, m2) = (a.1 as f64, b.0 as f64, b.1 as f64);
            let hit = [
                m1 == m2,
                m1 == n2,
                (m1 + m2 - 2.0 * p).abs() < 1e-9,
                (m1 + n2 - 2.0 * p).abs() < 1e-9,
            ];
            let mut any = false;
            for (k, h) in hit.iter().enumerate() {
                if *h {
                    any = true;
                    replay[k].hits += 1;
                    if !trivial {
                        replay[k].nontrivial += 1;
                    }
                }
            }
            if !trivial || !any {
                return Err(GhaError::TheoremViolation {
                    first: a,
                    second: b,
                    r_first: ra,
                    r_second: rb,
                });
            }
        }
    }

    Ok(TheoremReport {
        n_max,
        classes,
        arithmetical_pairs: arithmetical,
        min_separation: min_sep,
        exhaustive_pairs: pairs,
        replay,
        verdict: "resolved",
    })
}

// ---------------------------------------------------------------- position ladders

/// `sqrt(2/L) sin(n pi (x/L + 1/2))` on `|x| <= L/2`.
pub fn well_eigenfunction(length: f64, n: u32, x: f64) -> f64 {
    (2.0 / length).sqrt() * (n as f64 * std::f64::consts::PI * (x / length + 0.5)).sin()
}

/// Differential ladder acting on `field`, a multiple of `psi_n` (the number
/// operator is replaced by `n`). `sign > 0` raises.
///
/// Well: `A+ = (cos(pi x/L)(L/pi) d/dx - n sin(pi x/L)) sqrt(1 + 2/n)`,
/// `A- psi_n = (sqrt(n^2-1)/n)(-(L/pi) cos d/dx - n sin) psi_n`.
/// Morse, with `q = p + 1/2`:
/// `A- = [(p-n+1/2) e^{bx}/(q b) (d/dx + b(p-n)) - q] sqrt(K(n))`,
/// `A+ = [(p-n-1/2) e^{bx}/(q b) (-d/dx + b(p-n)) - q] / sqrt(Kr(n))`,
/// `K(n) = (2p-n)(2p-2n+2)/((2p-n+1)(2p-2n))`,
/// `Kr(n) = (2p-n)(p-n)/((2p-n-1)(p-n-1))`.
pub fn apply_position_ladder(
    params: &SystemParams,
    sign: f64,
    n: u32,
    field: &Field1d,
) -> Result<Field1d> {
    let df = field.derivative();
    let nf = n as f64;
    let values: Vec<f64> = match params.kind() {
        SystemKind::InfiniteWell => {
            params.check_label(n)?;
            let l = params.length().unwrap();
            let k = std::f64::consts::PI / l;
            (0..field.values.len())
                .map(|i| {
                    let (c, s) = ((k * field.x(i)).cos(), (k * field.x(i)).sin());
                    let body = |dir: f64| dir * c * df[i] / k - nf * s * field.values[i];
                    if sign > 0.0 {
                        body(1.0) * (1.0 + 2.0 / nf).sqrt()
                    } else {
                        body(-1.0) * (nf * nf - 1.0).sqrt() / nf
                    }
                })
                .collect()
        }
        SystemKind::Morse => {
            params.check_label(n)?;
            let (beta, p) = (params.beta().unwrap(), params.p().unwrap());
            let q = p + 0.5;
            if sign > 0.0 {
                let pole = (p - nf - 1.0) * (2.0 * p - nf - 1.0);
                if pole.abs() < 1e-12 {
                    return Err(GhaError::LadderPole { n, p });
                }
                let kr = (2.0 * p - nf) * (p - nf) / pole;
                (0..field.values.len())
                    .map(|i| {
                        let e = (beta * field.x(i)).exp();
                        ((p - nf - 0.5) * e / (q * beta)
                            * (-df[i] + beta * (p - nf) * field.values[i])
                            - q * field.values[i])
                            / kr.sqrt()
                    })
                    .collect()
            } else {
                let pole = (2.0 * p - nf + 1.0) * (2.0 * p - 2.0 * nf);
                if pole.abs() < 1e-12 {
                    return Err(GhaError::LadderPole { n, p });
                }
                let kk = (2.0 * p - nf) * (2.0 * p - 2.0 * nf + 2.0) / pole;
                (0..field.values.len())
                    .map(|i| {
                        let e = (beta * field.x(i)).exp();
                        ((p - nf + 0.5) * e / (q * beta)
                            * (df[i] + beta * (p - nf) * field.values[i])
                            - q * field.values[i])
                            * kk.sqrt()
                    })
                    .collect()
            }
        }
    };
    Ok(Field1d {
        x0: field.x0,
        step: field.step,
        values,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderOutcome {
    pub target_label: u32,
    /// `<A psi_n, psi_target> / ||A psi_n||`.
    pub overlap: f64,
    /// `||A psi_n|| / sqrt(k)`.
    pub norm_ratio: f64,
    /// `||A psi_n - sqrt(k) psi_target|| / sqrt(k)`.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderPositionReport {
    pub n: u32,
    pub step: f64,
    pub lowering: Option<LadderOutcome>,
    /// `||A- psi_n||` when `k(n) = 0`.
    pub lowering_zero_norm: Option<f64>,
    /// Well only: the differential part of `A- psi_1`, which must vanish.
    pub lowering_body_norm: Option<f64>,
    pub raising: Option<LadderOutcome>,
}

fn eigen_sampler(params: &SystemParams, step: f64, top: u32) -> Result<(f64, f64)> {
    match params.kind() {
        SystemKind::InfiniteWell => {
            let l = params.length().unwrap();
            let intervals = (l / step).round();
            if intervals < 8.0 {
                return Err(GhaError::Precondition(format!(
                    "step {step} too coarse for L = {l}"
                )));
            }
            Ok((-0.5 * l, 0.5 * l))
        }
        SystemKind::Morse => morse_domain(params, top),
    }
}

fn eigenstate_field(params: &SystemParams, n: u32, lo: f64, hi: f64, step: f64) -> Result<Field1d> {
    params.check_label(n)?;
    Ok(match params.kind() {
        SystemKind::InfiniteWell => {
            let l = params.length().unwrap();
            Field1d::sample(lo, hi, (hi - lo) / ((hi - lo) / step).round(), |x| {
                well_eigenfunction(l, n, x)
            })
        }
        SystemKind::Morse => {
            let (beta, nu, p) = (
                params.beta().unwrap(),
                params.nu().unwrap(),
                params.p().unwrap(),
            );
            let cells = ((hi - lo) / step).round();
            Field1d::sample(lo, hi, (hi - lo) / cells, |x| morse_psi(beta, nu, p, n, x))
        }
    })
}

fn outcome(image: &Field1d, target: &Field1d, k: f64, label: u32) -> LadderOutcome {
    let sk = k.sqrt();
    LadderOutcome {
        target_label: label,
        overlap: image.overlap(target),
        norm_ratio: image.norm() / sk,
        residual: image.map2(target, |a, b| a - sk * b).norm() / sk,
    }
}

/// Applies the position-space ladders to `psi_n` sampled at spacing `step`
/// and compares with `sqrt(k) psi_{n-+1}`.
pub fn quantum_ladder_position_check(
    params: &SystemParams,
    n: u32,
    step: f64,
) -> Result<LadderPositionReport> {
    params.check_label(n)?;
    let top = match params.max_label() {
        Some(t) => (n + 1).min(t),
        None => n + 1,
    };
    let (lo, hi) = eigen_sampler(params, step, top)?;
    let psi = eigenstate_field(params, n, lo, hi, step)?;
    let mut report = LadderPositionReport {
        n,
        step: psi.step,
        lowering: None,
        lowering_zero_norm: None,
        lowering_body_norm: None,
        raising: None,
    };
    let k_low = params.ladder_k(n as f64);
    if n > params.min_label() && k_low != 0.0 {
        let image = apply_position_ladder(params, -1.0, n, &psi)?;
        let target = eigenstate_field(params, n - 1, lo, hi, step)?;
        report.lowering = Some(outcome(&image, &target, k_low, n - 1));
    } else {
        let image = apply_position_ladder(params, -1.0, n, &psi)?;
        report.lowering_zero_norm = Some(image.norm());
        if let Some(l) = params.length() {
            let k = std::f64::consts::PI / l;
            let df = psi.derivative();
            let body = Field1d {
                x0: psi.x0,
                step: psi.step,
                values: (0..psi.values.len())
                    .map(|i| {
                        -(k * psi.x(i)).cos() * df[i] / k
                            - n as f64 * (k * psi.x(i)).sin() * psi.values[i]
                    })
                    .collect(),
            };
            report.lowering_body_norm = Some(body.norm());
        }
    }
    if params.check_label(n + 1).is_ok() {
        let image = apply_position_ladder(params, 1.0, n, &psi)?;
        let target = eigenstate_field(params, n + 1, lo, hi, step)?;
        report.raising = Some(outcome(
            &image,
            &target,
            params.ladder_k(n as f64 + 1.0),
            n + 1,
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn morse15() -> SystemParams {
        SystemParams::default_morse()
    }

    fn morse8() -> SystemParams {
        SystemParams::morse(1.0, 1.0, 1.0, 8.0).unwrap()
    }

    #[test]
    fn laguerre_low_orders() {
        let (a, x) = (1.7, 0.9);
        assert!((laguerre(1, a, x) - (1.0 + a - x)).abs() < 1e-15);
        let l2 = 0.5 * (x * x - 2.0 * (a + 2.0) * x + (a + 1.0) * (a + 2.0));
        assert!((laguerre(2, a, x) - l2).abs() < 1e-14);
    }

    #[test]
    fn eigenfunctions_are_normalized_with_n_nodes() {
        let m = morse15();
        let (lo, hi) = morse_domain(&m, 4).unwrap();
        for n in 0..=4 {
            let f = Field1d::sample(lo, hi, 1e-3, |x| morse_eigenfunction(&m, n, x).unwrap());
            assert!((f.norm() - 1.0).abs() < 1e-8, "n = {n}: {}", f.norm());
            assert_eq!(sign_changes(&f.values), n as usize);
            assert!(
                f.values[0].abs() < BOUNDARY_TOL && f.values.last().unwrap().abs() < BOUNDARY_TOL
            );
        }
        assert!(matches!(
            morse_eigenfunction(&m, 5, 0.0),
            Err(GhaError::NoSuchBoundState { .. })
        ));
    }

    #[test]
    fn gate_against_finite_differences() {
        for m in [morse8(), morse15()] {
            let rows = eigenfunction_gate(&m, 1024).unwrap();
            assert_eq!(rows.len(), m.p().unwrap().floor() as usize + 1);
            for r in rows {
                assert!(r.relative_error < 1e-6, "{r:?}");
                assert!(r.overlap > 1.0 - 1e-8, "{r:?}");
                assert_eq!(r.nodes, r.n as usize);
            }
        }
    }

    #[test]
    fn grid_has_no_diagonal_sample_and_mirrors() {
        let g = Grid2D::new(-2.0, 12.0, 64, 2).unwrap();
        for idx in 0..g.len() {
            let (x, y) = g.xy(idx);
            assert!((x - y).abs() > 0.4 * g.spacing_w());
            let (x2, y2) = g.xy(g.mirror(idx));
            assert!((x - y2).abs() < 1e-12 && (y - x2).abs() < 1e-12);
        }
        assert!(Grid2D::new(-2.0, 12.0, 63, 2).is_err());
        assert!(Grid2D::new(-2.0, 12.0, 64, 3).is_err());
    }

    #[test]
    fn stencils_are_exact_on_polynomials() {
        for order in [2, 4, 6, 8] {
            let f: Vec<f64> = (0..40)
                .map(|i| (i as f64 * 0.1).powi(order as i32))
                .collect();
            let mut out = vec![0.0; 40];
            stencil_1d(&f, order, false, 0.1, &mut out);
            let x = 2.0f64;
            assert!(
                (out[20] - order as f64 * x.powi(order as i32 - 1)).abs()
                    < 1e-7 * x.powi(order as i32)
            );
            stencil_1d(&f, order, true, 0.1, &mut out);
            let d2 = (order * (order - 1)) as f64 * x.powi(order as i32 - 2);
            assert!((out[20] - d2).abs() < 1e-6 * d2, "order {order}");
        }
    }

    #[test]
    fn states_and_parity() {
        let m = morse15();
        let g = Grid2D::for_states(&m, 3, 128, 8).unwrap();
        let sg = SusyGrid::new(&m, g).unwrap();
        let (s, a) = sg.sym_antisym_state(0, 1).unwrap();
        assert!((a.norm() - 1.0).abs() < 1e-8, "{}", a.norm());
        assert!(s.dot(&a).abs() < 1e-10);
        assert!(a.parity_defect(-1.0) < 1e-14 && s.parity_defect(1.0) < 1e-14);
        let (_, a22) = sg.sym_antisym_state(2, 2).unwrap();
        assert_eq!(a22.max_abs(), 0.0);
        // D+ of an antisymmetric field is symmetric.
        let (_, a02) = sg.sym_antisym_state(0, 2).unwrap();
        assert!(sg.apply_d(1.0, &a02).unwrap().parity_defect(1.0) < 1e-10);
        assert!(s.diagonal_magnitude() > 0.5, "{}", s.diagonal_magnitude());
        assert!(matches!(
            sg.apply_htilde(&s),
            Err(GhaError::SingularDiagonal { .. })
        ));
        let (s13, _) = sg.sym_antisym_state(1, 3).unwrap();
        assert!(matches!(
            sg.apply_d(-1.0, &s13),
            Err(GhaError::SingularDiagonal { .. })
        ));
        assert!(matches!(
            sg.apply_d(1.0, &s),
            Err(GhaError::SingularDiagonal { .. })
        ));
        assert!(sg.barrier.iter().all(|&b| b > 0.0));
    }

    #[test]
    fn d_difference_is_the_derivative_block() {
        let m = morse15();
        let sg = SusyGrid::new(&m, Grid2D::for_states(&m, 3, 96, 4).unwrap()).unwrap();
        let (_, a) = sg.sym_antisym_state(1, 3).unwrap();
        let diff = sg
            .apply_d(1.0, &a)
            .unwrap()
            .sub(&sg.apply_d(-1.0, &a).unwrap());
        let (fu, fw) = (sg.d(&a, true, false), sg.d(&a, false, false));
        let direct = sg.build(|i| -2.0 * sg.beta * sg.k2 * (fw[i] + sg.coth[i] * fu[i]));
        assert!(diff.sub(&direct).max_abs() < 1e-12 * direct.max_abs());
        assert!((1.0 / 1f64.tanh() - 1.3130352854993312).abs() < 1e-15);
    }

    #[test]
    fn second_order_hamiltonian_converges_quadratically() {
        let m = morse15();
        let res = |n: usize| {
            let sg = SusyGrid::new(&m, Grid2D::for_states(&m, 2, n, 2).unwrap()).unwrap();
            let (s, _) = sg.sym_antisym_state(0, 2).unwrap();
            let e = m.energy_formal(0.0) + m.energy_formal(2.0);
            sg.apply_h(&s).sub(&s.scale(e)).norm() / (e.abs() * s.norm())
        };
        let order = convergence_order(res(128), res(256), 2.0);
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn intertwining_converges() {
        let m = morse15();
        let mut prev = None;
        for n in [128, 256] {
            let sg = SusyGrid::new(&m, Grid2D::for_states(&m, 3, n, 8).unwrap()).unwrap();
            let it = intertwining_residual(&sg, 0, 2).unwrap();
            if let Some(p) = prev {
                assert!(convergence_order(p, it.residual, 2.0) > 1.8);
            }
            prev = Some(it.residual);
            assert!(((it.partner_energy - it.energy) / it.energy).abs() < 1e-2);
        }
        let sg = SusyGrid::new(&m, Grid2D::for_states(&m, 3, 64, 8).unwrap()).unwrap();
        assert!(matches!(
            intertwining_residual(&sg, 1, 2),
            Err(GhaError::Precondition(_))
        ));
        assert!(matches!(
            intertwining_residual(&sg, 2, 2),
            Err(GhaError::Precondition(_))
        ));
        // Zero field maps to zero.
        let z = WaveField::zeros(sg.grid);
        let lhs = sg.apply_htilde(&sg.supercharge(1.0, &z).unwrap()).unwrap();
        assert_eq!(lhs.max_abs(), 0.0);
    }

    #[test]
    fn supercharge_splits_into_energy_gap_and_d() {
        let m = morse15();
        let sg = SusyGrid::new(&m, Grid2D::for_states(&m, 3, 256, 8).unwrap()).unwrap();
        let (s, a) = sg.sym_antisym_state(0, 3).unwrap();
        let gap = m.energy_formal(3.0) - m.energy_formal(0.0);
        let q = sg.supercharge(1.0, &a).unwrap();
        let split = s.scale(gap).add(&sg.apply_d(1.0, &a).unwrap());
        assert!(q.sub(&split).norm() / q.norm() < 1e-4);
        // Antisymmetric in the labels.
        let (_, a30) = sg.sym_antisym_state(3, 0).unwrap();
        let q30 = sg.supercharge(1.0, &a30).unwrap();
        assert!(q.add(&q30).max_abs() < 1e-14 * q.max_abs());
    }

    #[test]
    fn adjacent_labels_are_annihilated_under_refinement() {
        let m = morse15();
        let norms: Vec<f64> = [64, 128]
            .iter()
            .map(|&n| {
                let sg = SusyGrid::new(&m, Grid2D::for_states(&m, 3, n, 8).unwrap()).unwrap();
                let (_, a) = sg.sym_antisym_state(1, 2).unwrap();
                sg.supercharge(1.0, &a).unwrap().norm()
            })
            .collect();
        assert!(norms[1] < norms[0] / 4.0, "{norms:?}");
    }

    #[test]
    fn unit_light_cone_does_not_annihilate_adjacent_labels() {
        let m = morse15();
        let sg = SusyGrid::new(&m, Grid2D::for_states(&m, 3, 256, 8).unwrap()).unwrap();
        let (_, a) = sg.sym_antisym_state(1, 2).unwrap();
        let half = sg.supercharge(1.0, &a).unwrap().norm();
        let unit = sg
            .with_convention(LightCone::Unit)
            .supercharge(1.0, &a)
            .unwrap()
            .norm();
        assert!(half < 1e-2 && unit > 1.0, "{half} {unit}");
    }

    #[test]
    fn r_values() {
        let m = morse8();
        assert!((r_eigenvalue(&m, 0, 3).unwrap() - 30.0).abs() < 1e-12);
        assert!((r_eigenvalue(&m, 1, 1).unwrap() + 6.0).abs() < 1e-12);
        assert!((r_eigenvalue_single_prefactor(&m, 0, 3).unwrap() - 60.0).abs() < 1e-12);
        for n in 0..3 {
            assert_eq!(r_eigenvalue(&m, n, n + 1).unwrap(), 0.0);
            assert!(r_eigenvalue(&m, n + 1, n).unwrap().abs() < 1e-12);
        }
        assert!(r_eigenvalue(&SystemParams::default_well(), 0, 1).is_err());
    }

    #[test]
    fn r_on_grid() {
        let m = morse15();
        let sg = SusyGrid::new(&m, Grid2D::for_states(&m, 3, 256, 8).unwrap()).unwrap();
        let rep = verify_r_on_grid(&sg, 0, 2).unwrap();
        let rel = |v: f64| ((v - rep.r_exact) / rep.r_exact).abs();
        assert!(rel(rep.r_composed.unwrap()) < 1e-3, "{rep:?}");
        assert!(rel(rep.r_operator) < 1e-3, "{rep:?}");
        assert!(rel(rep.r_partner.unwrap()) < 1e-2, "{rep:?}");
        let d = verify_r_on_grid(&sg, 2, 2).unwrap();
        assert!(d.r_composed.is_none());
        assert!(((d.r_operator - d.r_exact) / d.r_exact).abs() < 1e-3);
        let c = r_commutator_residual(&sg, (0, 2), (1, 3), (0.6, -0.8)).unwrap();
        assert!(c < 1e-2, "{c}");
    }

    #[test]
    fn theorem_at_v0_8() {
        let rep = degeneracy_resolution_check(&morse8(), 3).unwrap();
        let cls = rep
            .classes
            .iter()
            .find(|c| (c.energy + 6.25).abs() < 1e-12)
            .expect("class at -6.25");
        let r_of = |l| cls.members.iter().find(|m| m.labels == l).unwrap().r;
        assert!((r_of((0, 3)) - 30.0).abs() < 1e-12);
        assert!((r_of((3, 0)) - 30.0).abs() < 1e-12);
        assert!((r_of((1, 1)) + 6.0).abs() < 1e-12);
        assert!(rep.arithmetical_pairs >= 2);
        assert!(rep.replay.iter().all(|c| c.nontrivial == 0));
        let v15 = degeneracy_resolution_check(&morse15(), 4).unwrap();
        assert_eq!(v15.arithmetical_pairs, 0);
        assert!(degeneracy_resolution_check(&morse8(), 4).is_err());
    }

    #[test]
    fn position_ladders() {
        let m = morse15();
        let rep = quantum_ladder_position_check(&m, 1, 1e-3).unwrap();
        let low = rep.lowering.unwrap();
        assert!(low.overlap > 1.0 - 1e-4, "{low:?}");
        assert!((low.norm_ratio - 1.0).abs() < 1e-4);
        let up = rep.raising.unwrap();
        assert!(up.overlap > 1.0 - 1e-4, "{up:?}");
        let w = SystemParams::default_well();
        let rep = quantum_ladder_position_check(&w, 1, 1e-3).unwrap();
        assert!(rep.lowering_zero_norm.unwrap() < 1e-6);
        assert!(rep.lowering_body_norm.unwrap() < 1e-6);
        // Raise 2 -> 3, then lower back: k(3) psi_2 = 8 psi_2.
        let l = 2.0;
        let psi2 = Field1d::sample(-1.0, 1.0, 1e-3, |x| well_eigenfunction(l, 2, x));
        let up = apply_position_ladder(&w, 1.0, 2, &psi2).unwrap();
        let back = apply_position_ladder(&w, -1.0, 3, &up).unwrap();
        let res = back.map2(&psi2, |a, b| a - 8.0 * b).norm() / 8.0;
        assert!(res < 1e-4, "{res}");
    }

    #[test]
    fn integer_p_pole_is_guarded() {
        // nu = 9 gives p = 4; K(n) has a pole at n = 4.
        let m = SystemParams::morse(1.0, 1.0, 1.0, 81.0 / 8.0).unwrap();
        assert!((m.p().unwrap() - 4.0).abs() < 1e-12);
        let psi = Field1d::sample(0.0, 1.0, 0.1, |_| 0.0);
        assert!(matches!(
            apply_position_ladder(&m, -1.0, 4, &psi),
            Err(GhaError::LadderPole { .. })
        ));
    }
}
