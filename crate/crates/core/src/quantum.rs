//! Truncated Fock-space matrices for the quantum ladder algebra.
//!
//! Every operator carries its shape (`(N, 1)` in 1D, `(N, N)` in 2D) and a
//! per-axis truncation loss: the number of top basis states on which it is
//! not the restriction of the infinite operator. Raising steps add to the
//! loss under products; sums keep the larger loss. Identities are checked on
//! the interior columns only.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{GhaError, Result};
use crate::model::{spectrum_1d, SystemParams};
use crate::par;
use crate::report::Check;

const SUITE: &str = "quantum";
/// Relative tolerance for matrix identities.
pub const MATRIX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    matrix: DMatrix<Complex64>,
    shape: (usize, usize),
    loss: (usize, usize),
}

impl TruncatedOperator {
    pub fn new(
        matrix: DMatrix<Complex64>,
        shape: (usize, usize),
        loss: (usize, usize),
    ) -> Result<Self> {
        let dim = shape.0 * shape.1;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(GhaError::Dimension(format!(
                "matrix is {}x{}, shape {shape:?} needs {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            matrix,
            shape,
            loss,
        })
    }

    pub fn diagonal(values: &[f64], shape: (usize, usize)) -> Self {
        assert_eq!(values.len(), shape.0 * shape.1, "diagonal length");
        let d =
            DVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0)));
        Self {
            matrix: DMatrix::from_diagonal(&d),
            shape,
            loss: (0, 0),
        }
    }

    pub fn identity(shape: (usize, usize)) -> Self {
        let dim = shape.0 * shape.1;
        Self {
            matrix: DMatrix::identity(dim, dim),
            shape,
            loss: (0, 0),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn loss(&self) -> (usize, usize) {
        self.loss
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of basis states on which the operator is trustworthy.
    pub fn interior_dim(&self) -> usize {
        self.shape.0.saturating_sub(self.loss.0) * self.shape.1.saturating_sub(self.loss.1)
    }

    fn in_interior(&self, col: usize, loss: (usize, usize)) -> bool {
        let (i, j) = (col / self.shape.1, col % self.shape.1);
        i + loss.0 < self.shape.0 && j + loss.1 < self.shape.1
    }

    pub fn is_interior(&self, col: usize) -> bool {
        self.in_interior(col, self.loss)
    }

    pub fn interior_columns(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&c| self.is_interior(c)).collect()
    }

    /// Hermitian conjugate. The loss must be supplied: the adjoint of a
    /// truncated raising operator is exact, the converse is not.
    pub fn adjoint_with_loss(&self, loss: (usize, usize)) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            shape: self.shape,
            loss,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            matrix: &self.matrix * Complex64::new(c, 0.0),
            shape: self.shape,
            loss: self.loss,
        }
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::identity(self.shape), |acc, _| &acc * self)
    }

    pub fn commutator(a: &Self, b: &Self) -> Self {
        &(a * b) - &(b * a)
    }

    /// `x (x) y` for two 1D operators; `x` acts on the first label.
    pub fn kron(x: &Self, y: &Self) -> Result<Self> {
        if x.shape.1 != 1 || y.shape.1 != 1 {
            return Err(GhaError::Dimension("kron needs two 1D operators".into()));
        }
        Ok(Self {
            matrix: x.matrix.kronecker(&y.matrix),
            shape: (x.shape.0, y.shape.0),
            loss: (x.loss.0, y.loss.0),
        })
    }

    pub fn column(&self, c: usize) -> DVector<Complex64> {
        self.matrix.column(c).into_owned()
    }

    fn max_abs_on(&self, loss: (usize, usize)) -> f64 {
        par::max_over(self.dim(), |c| {
            if self.in_interior(c, loss) {
                self.matrix
                    .column(c)
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, par::nan_max)
            } else {
                0.0
            }
        })
    }

    /// Largest entry magnitude over the interior columns.
    pub fn interior_max(&self) -> f64 {
        self.max_abs_on(self.loss)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, par::nan_max)
    }
}

fn check_shapes(a: &TruncatedOperator, b: &TruncatedOperator) {
    assert_eq!(a.shape, b.shape, "operator shapes differ");
}

fn max_loss(a: (usize, usize), b: (usize, usize)) -> (usize, usize) {
    (a.0.max(b.0), a.1.max(b.1))
}

impl Mul for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn mul(self, rhs: Self) -> TruncatedOperator {
        check_shapes(self, rhs);
        TruncatedOperator {
            matrix: &self.matrix * &rhs.matrix,
            shape: self.shape,
            loss: (self.loss.0 + rhs.loss.0, self.loss.1 + rhs.loss.1),
        }
    }
}

impl Add for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn add(self, rhs: Self) -> TruncatedOperator {
        check_shapes(self, rhs);
        TruncatedOperator {
            matrix: &self.matrix + &rhs.matrix,
            shape: self.shape,
            loss: max_loss(self.loss, rhs.loss),
        }
    }
}

impl Sub for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn sub(self, rhs: Self) -> TruncatedOperator {
        check_shapes(self, rhs);
        TruncatedOperator {
            matrix: &self.matrix - &rhs.matrix,
            shape: self.shape,
            loss: max_loss(self.loss, rhs.loss),
        }
    }
}

/// Interior residual of `lhs - rhs`, relative to the larger side.
fn relation(name: &str, lhs: &TruncatedOperator, rhs: &TruncatedOperator) -> Check {
    let diff = lhs - rhs;
    let scale = lhs.max_abs_on(diff.loss).max(rhs.max_abs_on(diff.loss));
    let abs = diff.interior_max();
    let r = if scale > 0.0 { abs / scale } else { abs };
    Check::new(SUITE, name, r, MATRIX_TOL)
}

// Closed forms shared by both systems. With u = |a|:
// lambda(E) = 2 sqrt(u |E|) + a, gamma1 = (E - E_min) / u, gamma2 = gamma1 + lambda / u.

pub fn lambda_of(params: &SystemParams, energy: f64) -> f64 {
    let u = params.energy_unit();
    2.0 * (u * energy.abs()).sqrt() + params.quadratic_a()
}

pub fn delta_of(params: &SystemParams, energy: f64) -> f64 {
    lambda_of(params, energy) - 2.0 * params.quadratic_a()
}

pub fn gamma1_of(params: &SystemParams, energy: f64) -> f64 {
    (energy - params.energy_formal(params.min_label() as f64)) / params.energy_unit()
}

pub fn gamma2_of(params: &SystemParams, energy: f64) -> f64 {
    gamma1_of(params, energy) + lambda_of(params, energy) / params.energy_unit()
}

/// Coefficients `(a, b, c)` of `E_n = a n^2 + b n + c`.
pub fn quadratic_coefficients(params: &SystemParams) -> (f64, f64, f64) {
    let u = params.energy_unit();
    match params.p() {
        None => (u, 0.0, 0.0),
        Some(p) => (-u, 2.0 * u * p, -u * p * p),
    }
}

/// `H`, `A+`, `A-` and the number operator on `N` consecutive levels.
#[derive(Debug, Clone)]
pub struct LadderOperators {
    params: SystemParams,
    labels: Vec<u32>,
    energies: Vec<f64>,
    pub hamiltonian: TruncatedOperator,
    pub raising: TruncatedOperator,
    pub lowering: TruncatedOperator,
    pub number: TruncatedOperator,
}

pub fn build_operators(params: &SystemParams, n_trunc: usize) -> Result<LadderOperators> {
    match params.p() {
        None if n_trunc < 3 => {
            return Err(GhaError::Dimension(format!(
                "well truncation needs N >= 3, got {n_trunc}"
            )))
        }
        Some(p) if p < 0.0 => {
            return Err(GhaError::Dimension(format!(
                "Morse well with p = {p} holds no bound state"
            )))
        }
        Some(p) if n_trunc != p.floor() as usize + 1 => {
            return Err(GhaError::Dimension(format!(
                "Morse truncation must equal floor(p) + 1 = {} (p = {p}), got {n_trunc}",
                p.floor() as usize + 1
            )))
        }
        _ => {}
    }
    let labels: Vec<u32> = (0..n_trunc as u32)
        .map(|i| params.min_label() + i)
        .collect();
    let energies = labels
        .iter()
        .map(|&n| spectrum_1d(params, n))
        .collect::<Result<Vec<f64>>>()?;
    let shape = (n_trunc, 1);
    let mut lower = DMatrix::<Complex64>::zeros(n_trunc, n_trunc);
    for i in 1..n_trunc {
        lower[(i - 1, i)] = Complex64::new(params.ladder_k(labels[i] as f64).sqrt(), 0.0);
    }
    let lowering = TruncatedOperator::new(lower, shape, (0, 0))?;
    let raising = lowering.adjoint_with_loss((1, 0));
    let numbers: Vec<f64> = labels.iter().map(|&n| n as f64).collect();
    Ok(LadderOperators {
        params: *params,
        hamiltonian: TruncatedOperator::diagonal(&energies, shape),
        number: TruncatedOperator::diagonal(&numbers, shape),
        labels,
        energies,
        raising,
        lowering,
    })
}

/// Diagonal structure functions evaluated on the truncated spectrum.
#[derive(Debug, Clone)]
pub struct StructureFunctions {
    pub lambda: TruncatedOperator,
    pub delta: TruncatedOperator,
    pub gamma1: TruncatedOperator,
    pub gamma2: TruncatedOperator,
}

impl LadderOperators {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn on_spectrum(&self, f: impl Fn(&SystemParams, f64) -> f64) -> TruncatedOperator {
        let v: Vec<f64> = self.energies.iter().map(|&e| f(&self.params, e)).collect();
        TruncatedOperator::diagonal(&v, (self.len(), 1))
    }

    pub fn structure_functions(&self) -> StructureFunctions {
        StructureFunctions {
            lambda: self.on_spectrum(lambda_of),
            delta: self.on_spectrum(delta_of),
            gamma1: self.on_spectrum(gamma1_of),
            gamma2: self.on_spectrum(gamma2_of),
        }
    }
}

pub fn structure_functions(params: &SystemParams, n_trunc: usize) -> Result<StructureFunctions> {
    Ok(build_operators(params, n_trunc)?.structure_functions())
}

/// The seven ladder-algebra identities plus hermiticity, relative residuals
/// on the interior.
pub fn verify_gha_quantum(params: &SystemParams, n_trunc: usize) -> Result<Vec<Check>> {
    let ops = build_operators(params, n_trunc)?;
    let sf = ops.structure_functions();
    let (h, ap, am) = (&ops.hamiltonian, &ops.raising, &ops.lowering);
    let a = params.quadratic_a();
    let h_ap = TruncatedOperator::commutator(h, ap);
    let h_am = TruncatedOperator::commutator(h, am);
    let mut checks = vec![
        relation("[H,A+] = A+ lambda(H)", &h_ap, &(ap * &sf.lambda)),
        relation("[H,A+] = delta(H) A+", &h_ap, &(&sf.delta * ap)),
        relation(
            "[H,A-] = -lambda(H) A-",
            &h_am,
            &(&sf.lambda * am).scale(-1.0),
        ),
        relation(
            "[A+,A-] = gamma1(H) - gamma2(H)",
            &TruncatedOperator::commutator(ap, am),
            &(&sf.gamma1 - &sf.gamma2),
        ),
        relation("A+ A- = gamma1(H)", &(ap * am), &sf.gamma1),
        relation("A- A+ = gamma2(H)", &(am * ap), &sf.gamma2),
        relation(
            "[lambda(H),A+] = 2a A+",
            &TruncatedOperator::commutator(&sf.lambda, ap),
            &ap.scale(2.0 * a),
        ),
        relation(
            "[lambda(H),A-] = -2a A-",
            &TruncatedOperator::commutator(&sf.lambda, am),
            &am.scale(-2.0 * a),
        ),
        relation(
            "lambda(E_n) = E_(n+1) - E_n",
            &(&(am * &(h * ap)) - &(&(am * ap) * h)),
            &(&sf.lambda * &(am * ap)),
        ),
    ];
    let herm = [h, &sf.lambda, &sf.delta, &sf.gamma1, &sf.gamma2]
        .iter()
        .map(|op| op.hermiticity_defect())
        .fold(0.0, par::nan_max);
    checks.push(Check::new(
        SUITE,
        "H, lambda, delta, gamma hermitian",
        herm,
        MATRIX_TOL,
    ));
    let adj = (&ap.matrix - am.matrix.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, par::nan_max);
    checks.push(Check::new(SUITE, "A+ = adjoint(A-)", adj, MATRIX_TOL));
    Ok(checks)
}

/// su(1,1) closure of `{A+, A-, A0}`.
///
/// `literal` uses `A0 = -lambda(H)/(2a)` with `[A+-, A0] = +-A+-`,
/// `[A+,A-] = -2 A0` and the hypothesis `gamma1 - gamma2 = lambda/a`. On the
/// spectrum `gamma1 - gamma2 = -lambda/|a|` for both systems, so the last two
/// hold only when `a < 0` (Morse). `closure` uses `K0 = lambda(H)/(2|a|)`,
/// `[K0, A+-] = +-sign(a) A+-` and `[A+,A-] = -2 K0`, which hold for both.
#[derive(Debug, Clone, Serialize)]
pub struct Su11Report {
    pub literal: Vec<Check>,
    pub closure: Vec<Check>,
}

pub fn su11_check(params: &SystemParams, n_trunc: usize) -> Result<Su11Report> {
    let ops = build_operators(params, n_trunc)?;
    let sf = ops.structure_functions();
    let (ap, am) = (&ops.raising, &ops.lowering);
    let a = params.quadratic_a();
    let a0 = sf.lambda.scale(-0.5 / a);
    let k0 = sf.lambda.scale(0.5 / a.abs());
    let ladder = TruncatedOperator::commutator(ap, am);
    let literal = vec![
        relation("[A+,A0] = A+", &TruncatedOperator::commutator(ap, &a0), ap),
        relation(
            "[A-,A0] = -A-",
            &TruncatedOperator::commutator(am, &a0),
            &am.scale(-1.0),
        ),
        relation("[A+,A-] = -2 A0", &ladder, &a0.scale(-2.0)),
        relation(
            "gamma1 - gamma2 = lambda/a",
            &(&sf.gamma1 - &sf.gamma2),
            &sf.lambda.scale(1.0 / a),
        ),
    ];
    let s = a.signum();
    let closure = vec![
        relation(
            "[K0,A+] = sign(a) A+",
            &TruncatedOperator::commutator(&k0, ap),
            &ap.scale(s),
        ),
        relation(
            "[K0,A-] = -sign(a) A-",
            &TruncatedOperator::commutator(&k0, am),
            &am.scale(-s),
        ),
        relation("[A+,A-] = -2 K0", &ladder, &k0.scale(-2.0)),
        relation(
            "gamma1 - gamma2 = -lambda/|a|",
            &(&sf.gamma1 - &sf.gamma2),
            &sf.lambda.scale(-1.0 / a.abs()),
        ),
    ];
    Ok(Su11Report { literal, closure })
}

/// Tensor-product operators on `N x N` levels.
#[derive(Debug, Clone)]
pub struct TwoDOperators {
    pub axis: LadderOperators,
    pub h2: TruncatedOperator,
    /// `Hx - Hy`.
    pub s: TruncatedOperator,
    /// `(A+_x)^k (A-_y)^l`.
    pub raise: TruncatedOperator,
    /// `(A-_x)^k (A+_y)^l`.
    pub lower: TruncatedOperator,
    pub k: usize,
    pub l: usize,
}

impl TwoDOperators {
    /// Labels `(nx, ny)` of basis column `c`.
    pub fn labels_of(&self, c: usize) -> (u32, u32) {
        let n = self.axis.len();
        (self.axis.labels[c / n], self.axis.labels[c % n])
    }

    pub fn index_of(&self, nx: u32, ny: u32) -> Option<usize> {
        let n = self.axis.len();
        let min = self.axis.params.min_label();
        let (i, j) = (nx.checked_sub(min)? as usize, ny.checked_sub(min)? as usize);
        (i < n && j < n).then_some(i * n + j)
    }
}

fn axis_sum(axis: &LadderOperators, sign: f64) -> Result<TruncatedOperator> {
    let id = TruncatedOperator::identity((axis.len(), 1));
    let hx = TruncatedOperator::kron(&axis.hamiltonian, &id)?;
    let hy = TruncatedOperator::kron(&id, &axis.hamiltonian)?;
    Ok(&hx + &hy.scale(sign))
}

pub fn build_2d(
    params: &SystemParams,
    n_trunc: usize,
    k: usize,
    l: usize,
) -> Result<TwoDOperators> {
    let axis = build_operators(params, n_trunc)?;
    if k == 0 || l == 0 || k >= n_trunc || l >= n_trunc {
        return Err(GhaError::Dimension(format!(
            "ladder powers (k, l) = ({k}, {l}) must lie in 1..{n_trunc}"
        )));
    }
    let raise = TruncatedOperator::kron(&axis.raising.pow(k), &axis.lowering.pow(l))?;
    let lower = TruncatedOperator::kron(&axis.lowering.pow(k), &axis.raising.pow(l))?;
    Ok(TwoDOperators {
        h2: axis_sum(&axis, 1.0)?,
        s: axis_sum(&axis, -1.0)?,
        axis,
        raise,
        lower,
        k,
        l,
    })
}

/// `k lambda_x - l lambda_y + k(k-1) a + l(l+1) a` at levels `(nx, ny)`.
pub fn comipm_factor(params: &SystemParams, k: u32, l: u32, nx: f64, ny: f64) -> f64 {
    let a = params.quadratic_a();
    let (k, l) = (k as f64, l as f64);
    k * lambda_of(params, params.energy_formal(nx))
        - l * lambda_of(params, params.energy_formal(ny))
        + (k * (k - 1.0) + l * (l + 1.0)) * a
}

/// Energy change of `|nx, ny>` under `I+` (`sign > 0`) or `I-`.
pub fn comipm_factor_raw(
    params: &SystemParams,
    k: u32,
    l: u32,
    sign: f64,
    nx: f64,
    ny: f64,
) -> f64 {
    let (k, l) = (k as f64, l as f64);
    let (dx, dy) = if sign > 0.0 { (k, -l) } else { (-k, l) };
    let e = |n: f64| params.energy_formal(n);
    (e(nx + dx) - e(nx)) + (e(ny + dy) - e(ny))
}

/// Zero predictor `a(2k nx - 2l ny + k^2 + l^2) + b(k - l)` for `I+`.
pub fn comipm_predictor(params: &SystemParams, k: u32, l: u32, nx: f64, ny: f64) -> f64 {
    let (a, b, _) = quadratic_coefficients(params);
    let (k, l) = (k as f64, l as f64);
    a * (2.0 * k * nx - 2.0 * l * ny + k * k + l * l) + b * (k - l)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComipmReport {
    pub k: usize,
    pub l: usize,
    pub checks: Vec<Check>,
    /// Interior states where `[H, I+]` annihilates, by the eigenfactor.
    pub vanishing: Vec<(u32, u32)>,
    /// Same set from the quadratic-spectrum predictor.
    pub predicted: Vec<(u32, u32)>,
}

/// `[H2, I+] = I+ F(Hx, Hy)` and `[H2, I-] = -F(Hx, Hy) I-` with
/// `F = k lambda_x - l lambda_y + k(k-1)a + l(l+1)a`; for `I-` the factor
/// sits on the left, at the target state.
pub fn comipm_check(
    params: &SystemParams,
    n_trunc: usize,
    k: usize,
    l: usize,
) -> Result<ComipmReport> {
    let ops = build_2d(params, n_trunc, k, l)?;
    let (ku, lu) = (k as u32, l as u32);
    let dim = ops.h2.dim();
    let shape = ops.h2.shape();
    let labels: Vec<(f64, f64)> = (0..dim)
        .map(|c| {
            let (x, y) = ops.labels_of(c);
            (x as f64, y as f64)
        })
        .collect();
    let factor: Vec<f64> = labels
        .iter()
        .map(|&(x, y)| comipm_factor(params, ku, lu, x, y))
        .collect();
    let raw_plus: Vec<f64> = labels
        .iter()
        .map(|&(x, y)| comipm_factor_raw(params, ku, lu, 1.0, x, y))
        .collect();
    let raw_minus: Vec<f64> = labels
        .iter()
        .map(|&(x, y)| comipm_factor_raw(params, ku, lu, -1.0, x, y))
        .collect();
    let f_op = TruncatedOperator::diagonal(&factor, shape);
    let raw_minus_op = TruncatedOperator::diagonal(&raw_minus, shape);

    let comm_plus = TruncatedOperator::commutator(&ops.h2, &ops.raise);
    let comm_minus = TruncatedOperator::commutator(&ops.h2, &ops.lower);
    let mut checks = vec![
        relation("[H2,I+] = I+ F(H)", &comm_plus, &(&ops.raise * &f_op)),
        relation(
            "[H2,I-] = -F(H) I-",
            &comm_minus,
            &(&f_op * &ops.lower).scale(-1.0),
        ),
        relation(
            "[H2,I-] = I- (raw energy shift)",
            &comm_minus,
            &(&ops.lower * &raw_minus_op),
        ),
        relation("[H2,S] = 0", &(&ops.h2 * &ops.s), &(&ops.s * &ops.h2)),
    ];

    let scale = ops.axis.energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let interior_plus: Vec<usize> = ops.raise.interior_columns();
    let agree_plus = interior_plus
        .iter()
        .map(|&c| (factor[c] - raw_plus[c]).abs())
        .fold(0.0, par::nan_max);
    // For I- the left factor is read at the target (nx - k, ny + l).
    let agree_minus = ops
        .lower
        .interior_columns()
        .iter()
        .map(|&c| {
            let (x, y) = labels[c];
            (-comipm_factor(params, ku, lu, x - k as f64, y + l as f64) - raw_minus[c]).abs()
        })
        .fold(0.0, par::nan_max);
    checks.push(Check::new(
        SUITE,
        "I+ eigenfactor: lambda form = energy shift",
        agree_plus / scale,
        MATRIX_TOL,
    ));
    checks.push(Check::new(
        SUITE,
        "I- eigenfactor: lambda form = energy shift",
        agree_minus / scale,
        MATRIX_TOL,
    ));

    let zero_tol = MATRIX_TOL * scale;
    let vanishing: Vec<(u32, u32)> = interior_plus
        .iter()
        .filter(|&&c| factor[c].abs() <= zero_tol)
        .map(|&c| ops.labels_of(c))
        .collect();
    let predicted: Vec<(u32, u32)> = interior_plus
        .iter()
        .filter(|&&c| comipm_predictor(params, ku, lu, labels[c].0, labels[c].1).abs() <= zero_tol)
        .map(|&c| ops.labels_of(c))
        .collect();
    checks.push(Check::flag(
        SUITE,
        "vanishing set matches predictor",
        vanishing == predicted,
    ));
    if k == l {
        let diagonal_shift = vanishing.iter().all(|&(x, y)| y == x + ku)
            && interior_plus
                .iter()
                .map(|&c| ops.labels_of(c))
                .filter(|&(x, y)| y == x + ku)
                .all(|s| vanishing.contains(&s));
        checks.push(Check::flag(
            SUITE,
            format!("vanishing set is ny = nx + {k}"),
            diagonal_shift,
        ));
    }
    Ok(ComipmReport {
        k,
        l,
        checks,
        vanishing,
        predicted,
    })
}

/// Projector-form permutation operators on `N x N` levels.
#[derive(Debug, Clone)]
pub struct PermutationOperators {
    pub axis: LadderOperators,
    pub h2: TruncatedOperator,
    /// `sum |i+l, i><i, i+l|`: moves `nx < ny` states to their transpose.
    pub plus: TruncatedOperator,
    pub minus: TruncatedOperator,
    /// `(P[nx > ny] - P[nx < ny]) / 2`.
    pub third: TruncatedOperator,
}

pub fn permutation_operators(
    params: &SystemParams,
    n_trunc: usize,
) -> Result<PermutationOperators> {
    let axis = build_operators(params, n_trunc)?;
    let n = n_trunc;
    let shape = (n, n);
    let mut plus = DMatrix::<Complex64>::zeros(n * n, n * n);
    let mut third = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i < j {
                plus[(j * n + i, i * n + j)] = Complex64::new(1.0, 0.0);
            }
            third[i * n + j] = 0.5 * (i as f64 - j as f64).signum() * f64::from(i != j);
        }
    }
    let plus = TruncatedOperator::new(plus, shape, (0, 0))?;
    Ok(PermutationOperators {
        h2: axis_sum(&axis, 1.0)?,
        axis,
        minus: plus.adjoint_with_loss((0, 0)),
        plus,
        third: TruncatedOperator::diagonal(&third, shape),
    })
}

fn basis(dim: usize, c: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    v[c] = Complex64::new(1.0, 0.0);
    v
}

fn vec_diff(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, par::nan_max)
}

#[derive(Debug, Clone, Serialize)]
pub struct PermutationReport {
    pub checks: Vec<Check>,
    /// Basis pairs skipped in the weighted-form comparison (a zero k-factor).
    pub weighted_skipped: usize,
}

/// Symmetry, su(2) and action checks for the permutation operators, plus
/// agreement with the weighted ladder-product form where it is defined.
pub fn permutation_check(params: &SystemParams, n_trunc: usize) -> Result<PermutationReport> {
    let ops = permutation_operators(params, n_trunc)?;
    let (h2, ip, im, i3) = (&ops.h2, &ops.plus, &ops.minus, &ops.third);
    let n = n_trunc;
    let dim = n * n;
    let mut checks = vec![
        relation("[H2,I+] = 0", &(h2 * ip), &(ip * h2)),
        relation("[H2,I-] = 0", &(h2 * im), &(im * h2)),
        relation("[H2,I3] = 0", &(h2 * i3), &(i3 * h2)),
        relation(
            "[I+,I-] = 2 I3",
            &TruncatedOperator::commutator(ip, im),
            &i3.scale(2.0),
        ),
        relation("[I3,I+] = I+", &TruncatedOperator::commutator(i3, ip), ip),
        relation(
            "[I3,I-] = -I-",
            &TruncatedOperator::commutator(i3, im),
            &im.scale(-1.0),
        ),
        Check::new(
            SUITE,
            "I- = adjoint(I+), I3 hermitian",
            (&im.matrix - ip.matrix.adjoint())
                .iter()
                .map(|z| z.norm())
                .fold(i3.hermiticity_defect(), par::nan_max),
            MATRIX_TOL,
        ),
    ];

    // Action on every basis vector |j,k>.
    let mut plus_ok = 0.0f64;
    let mut swap_ok = 0.0f64;
    let mut third_ok = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let e = basis(dim, i * n + j);
            let t = basis(dim, j * n + i);
            let zero = DVector::zeros(dim);
            let want_plus = if i < j { &t } else { &zero };
            plus_ok = plus_ok.max(vec_diff(&(&ip.matrix * &e), want_plus));
            if i != j {
                swap_ok = swap_ok.max(vec_diff(&(&(&ip.matrix + &im.matrix) * &e), &t));
            }
            let half = 0.5 * (i as f64 - j as f64).signum() * f64::from(i != j);
            third_ok = third_ok.max(vec_diff(
                &(&i3.matrix * &e),
                &(&e * Complex64::new(half, 0.0)),
            ));
        }
    }
    checks.push(Check::new(
        SUITE,
        "I+|j,k> = |k,j> (j < k), 0 otherwise",
        plus_ok,
        MATRIX_TOL,
    ));
    checks.push(Check::new(
        SUITE,
        "(I+ + I-)|j,k> = |k,j> (j != k)",
        swap_ok,
        MATRIX_TOL,
    ));
    checks.push(Check::new(
        SUITE,
        "I3|j,k> = sign(j-k)/2 |j,k>",
        third_ok,
        MATRIX_TOL,
    ));

    // Weighted form: I+^(l)|i,i+l> divided by prod_{m=i+1}^{i+l} k(m).
    let axis = &ops.axis;
    let mut weighted = 0.0f64;
    let mut skipped = 0;
    for i in 0..n {
        for l in 1..n - i {
            let weight: f64 = (i + 1..=i + l)
                .map(|m| params.ladder_k(axis.labels[m] as f64))
                .product();
            if weight == 0.0 {
                skipped += 1;
                continue;
            }
            let x = axis.raising.pow(l).column(i);
            let y = axis.lowering.pow(l).column(i + l);
            let image = x.kronecker(&y) / Complex64::new(weight, 0.0);
            weighted = weighted.max(vec_diff(&image, &ip.column(i * n + i + l)));
        }
    }
    checks.push(Check::new(
        SUITE,
        "weighted form equals projector form",
        weighted,
        MATRIX_TOL,
    ));
    Ok(PermutationReport {
        checks,
        weighted_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::all_pass;

    fn morse15() -> SystemParams {
        SystemParams::default_morse()
    }

    fn failures(checks: &[Check]) -> Vec<String> {
        checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}: {:e}", c.check, c.max_residual))
            .collect()
    }

    #[test]
    fn truncation_rules() {
        let w = SystemParams::default_well();
        assert!(matches!(
            build_operators(&w, 2),
            Err(GhaError::Dimension(_))
        ));
        assert!(matches!(
            build_operators(&morse15(), 4),
            Err(GhaError::Dimension(_))
        ));
        assert_eq!(build_operators(&morse15(), 5).unwrap().len(), 5);
        let m8 = SystemParams::morse(1.0, 1.0, 1.0, 8.0).unwrap();
        assert_eq!(build_operators(&m8, 4).unwrap().labels(), &[0, 1, 2, 3]);
    }

    #[test]
    fn lowering_matrix_elements() {
        let w = build_operators(&SystemParams::default_well(), 10).unwrap();
        // Labels start at 1: index 0 is n = 1.
        assert!(w.lowering.column(0).iter().all(|z| z.norm() == 0.0));
        let e4_a_e3 = w.raising.matrix()[(3, 2)].re;
        assert!((e4_a_e3 - 15f64.sqrt()).abs() < 1e-15);
        let m = build_operators(&morse15(), 5).unwrap();
        assert!(m.lowering.column(0).iter().all(|z| z.norm() == 0.0));
        assert_eq!(
            w.hamiltonian.matrix()[(2, 2)].re,
            spectrum_1d(w.params(), 3).unwrap()
        );
    }

    #[test]
    fn structure_functions_on_the_spectrum() {
        let w = SystemParams::default_well();
        let u = w.energy_unit();
        let e = |n| spectrum_1d(&w, n).unwrap();
        assert!((lambda_of(&w, e(1)) - 3.0 * u).abs() < 1e-13);
        assert!((gamma1_of(&w, e(4)) - 15.0).abs() < 1e-12);
        assert!((gamma2_of(&w, e(4)) - 24.0).abs() < 1e-12);
        let m = morse15();
        let em = |n| spectrum_1d(&m, n).unwrap();
        let p = m.p().unwrap();
        assert!((lambda_of(&m, em(0)) - m.energy_unit() * (2.0 * p - 1.0)).abs() < 1e-12);
        for n in 0..4 {
            assert!((lambda_of(&m, em(n)) - (em(n + 1) - em(n))).abs() < 1e-12);
            assert!((gamma2_of(&m, em(n)) - m.ladder_k(n as f64 + 1.0)).abs() < 1e-11);
            let d = delta_of(&m, em(n)) - lambda_of(&m, em(n)) + 2.0 * m.quadratic_a();
            assert!(d.abs() < 1e-13);
        }
    }

    #[test]
    fn well_gamma2_adds_lambda_over_a() {
        // gamma1 - lambda/a would give k(n) - (2n+1), not k(n+1).
        let w = SystemParams::default_well();
        let e3 = spectrum_1d(&w, 3).unwrap();
        let subtracted = gamma1_of(&w, e3) - lambda_of(&w, e3) / w.quadratic_a();
        assert!((subtracted - 1.0).abs() < 1e-12);
        assert!((gamma2_of(&w, e3) - w.ladder_k(4.0)).abs() < 1e-12);
    }

    #[test]
    fn gha_identities_hold_on_the_interior() {
        for n in [10, 20, 40] {
            let checks = verify_gha_quantum(&SystemParams::default_well(), n).unwrap();
            assert!(all_pass(&checks), "well N={n}: {:?}", failures(&checks));
        }
        for v0 in [8.0, 15.0, 30.0] {
            let m = SystemParams::morse(1.0, 1.0, 1.0, v0).unwrap();
            let n = m.p().unwrap().floor() as usize + 1;
            let checks = verify_gha_quantum(&m, n).unwrap();
            assert!(all_pass(&checks), "Morse V0={v0}: {:?}", failures(&checks));
        }
    }

    #[test]
    fn interior_dimensions() {
        let ops = build_operators(&SystemParams::default_well(), 40).unwrap();
        assert_eq!(ops.raising.interior_dim(), 39);
        let two = &ops.raising * &ops.raising;
        assert_eq!(two.interior_dim(), 38);
        assert_eq!((&ops.lowering * &ops.raising).interior_dim(), 39);
        assert_eq!((&ops.raising * &ops.lowering).interior_dim(), 39);
        assert_eq!(ops.hamiltonian.interior_dim(), 40);
    }

    #[test]
    fn su11_closes_for_both_but_literal_form_only_for_morse() {
        let well = su11_check(&SystemParams::default_well(), 40).unwrap();
        assert!(all_pass(&well.closure), "{:?}", failures(&well.closure));
        assert!(well.literal[0].pass && well.literal[1].pass);
        // [A+,A-] = +2 A0 for the well: residual |4 A0| / |2 A0| = 2.
        assert!((well.literal[2].max_residual - 2.0).abs() < 1e-12);
        assert!((well.literal[3].max_residual - 2.0).abs() < 1e-12);
        let morse = su11_check(&morse15(), 5).unwrap();
        assert!(all_pass(&morse.closure), "{:?}", failures(&morse.closure));
        assert!(all_pass(&morse.literal), "{:?}", failures(&morse.literal));
    }

    #[test]
    fn two_d_action() {
        let m = morse15();
        let ops = build_2d(&m, 5, 1, 1).unwrap();
        let k1 = m.ladder_k(1.0);
        let out = ops.raise.column(ops.index_of(0, 1).unwrap());
        let target = ops.index_of(1, 0).unwrap();
        assert!((out[target].re - k1).abs() < 1e-12);
        assert!(out
            .iter()
            .enumerate()
            .all(|(i, z)| i == target || z.norm() == 0.0));
        // Annihilates ny < l.
        let ops = build_2d(&m, 5, 1, 2).unwrap();
        for nx in 0..4 {
            for ny in 0..2 {
                let c = ops.raise.column(ops.index_of(nx, ny).unwrap());
                assert!(c.iter().all(|z| z.norm() == 0.0));
            }
        }
        assert!(matches!(build_2d(&m, 5, 5, 1), Err(GhaError::Dimension(_))));
        assert!(matches!(build_2d(&m, 5, 0, 1), Err(GhaError::Dimension(_))));
    }

    #[test]
    fn comipm_vanishing_sets() {
        let m = comipm_check(&morse15(), 5, 1, 1).unwrap();
        assert!(all_pass(&m.checks), "{:?}", failures(&m.checks));
        assert_eq!(m.vanishing, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        let w = comipm_check(&SystemParams::default_well(), 12, 1, 1).unwrap();
        assert!(all_pass(&w.checks), "{:?}", failures(&w.checks));
        assert!(w.vanishing.iter().all(|&(x, y)| y == x + 1));
        assert_eq!(w.vanishing.len(), 11);
        // k != l: predictor and eigenfactor agree on which states are fixed.
        let w12 = comipm_check(&SystemParams::default_well(), 12, 1, 2).unwrap();
        assert!(all_pass(&w12.checks), "{:?}", failures(&w12.checks));
        assert_eq!(w12.vanishing, w12.predicted);
        // a(2 nx - 4 ny + 5) = 0 has no integer solution.
        assert!(w12.vanishing.is_empty());
        let w22 = comipm_check(&SystemParams::default_well(), 10, 2, 2).unwrap();
        assert!(w22.vanishing.iter().all(|&(x, y)| y == x + 2) && !w22.vanishing.is_empty());
    }

    #[test]
    fn lowering_factor_sits_left_at_the_target() {
        // Right placement at the initial state misses by 2a(k^2 + l^2).
        let w = SystemParams::default_well();
        let a = w.quadratic_a();
        let (nx, ny) = (4.0, 2.0);
        let right = -comipm_factor(&w, 1, 1, nx, ny);
        let raw = comipm_factor_raw(&w, 1, 1, -1.0, nx, ny);
        assert!((raw - right - 4.0 * a).abs() < 1e-12);
        let left = -comipm_factor(&w, 1, 1, nx - 1.0, ny + 1.0);
        assert!((raw - left).abs() < 1e-12);
    }

    #[test]
    fn permutation_symmetry() {
        for (p, n) in [(SystemParams::default_well(), 8), (morse15(), 5)] {
            let r = permutation_check(&p, n).unwrap();
            assert!(all_pass(&r.checks), "{:?}", failures(&r.checks));
            assert_eq!(r.weighted_skipped, 0);
        }
        let ops = permutation_operators(&SystemParams::default_well(), 8).unwrap();
        // |e2 (x) e5> -> |e5 (x) e2>, labels 3 and 6.
        let n = 8;
        let out = ops.plus.column(2 * n + 5);
        assert_eq!(out[5 * n + 2].re, 1.0);
    }

    #[test]
    fn third_generator_annihilates_only_singlets() {
        let ops = permutation_operators(&morse15(), 5).unwrap();
        let n = 5;
        let sym = &basis(n * n, n + 3) + &basis(n * n, 3 * n + 1);
        let out = &ops.third.matrix * &sym;
        assert!((out[n + 3].re + 0.5).abs() < 1e-15 && (out[3 * n + 1].re - 0.5).abs() < 1e-15);
        let singlet = basis(n * n, 2 * n + 2);
        assert!((&ops.third.matrix * &singlet)
            .iter()
            .all(|z| z.norm() == 0.0));
    }
}
