//! Finite-difference eigensolver for 1D Schrodinger operators.
//!
//! Independent of every closed form in the crate: the Hamiltonian is the
//! three-point Dirichlet discretization, eigenvalues come from Sturm-sequence
//! bisection and eigenvectors from inverse iteration. Richardson
//! extrapolation over nested grids lifts the O(h^2) error to O(h^6).

use crate::model::SystemParams;

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.dim() {
            let coupling = if i == 0 {
                0.0
            } else {
                self.off[i - 1] * self.off[i - 1] / q
            };
            q = self.diag[i] - x - coupling;
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// `k`-th smallest eigenvalue (0-based), bisected to machine precision.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.dim(), "eigenvalue index {k} out of range");
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T - shift) y = rhs` by the Thomas algorithm.
    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let tiny = 1e-300;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0] - shift;
        if pivot == 0.0 {
            pivot = tiny;
        }
        c[0] = if n > 1 { self.off[0] / pivot } else { 0.0 };
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            let mut pivot = self.diag[i] - shift - self.off[i - 1] * c[i - 1];
            if pivot == 0.0 {
                pivot = tiny;
            }
            c[i] = if i + 1 < n { self.off[i] / pivot } else { 0.0 };
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }

    /// Unit-norm (Euclidean) eigenvector for an eigenvalue computed by
    /// [`Tridiagonal::eigenvalue`].
    pub fn eigenvector(&self, eigenvalue: f64) -> Vec<f64> {
        let n = self.dim();
        let shift = eigenvalue + 1e-12 * eigenvalue.abs().max(1.0);
        // Deterministic start vector with no special symmetry.
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.37 * ((i as f64) * 0.713).sin())
            .collect();
        for _ in 0..4 {
            v = self.solve_shifted(shift, &v);
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
        }
        v
    }
}

/// Uniform grid `x_min + i h`, `i = 1..intervals-1`, with Dirichlet ends.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub x_min: f64,
    pub step: f64,
    pub matrix: Tridiagonal,
}

impl Discretization {
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i + 1) as f64 * self.step
    }

    pub fn count_below(&self, x: f64) -> usize {
        self.matrix.count_below(x)
    }
}

/// Three-point Hamiltonian of `params` on `(x_min, x_max)`.
pub fn hamiltonian_1d(
    params: &SystemParams,
    x_min: f64,
    x_max: f64,
    intervals: usize,
) -> Discretization {
    let step = (x_max - x_min) / intervals as f64;
    let kinetic = params.hbar().powi(2) / (params.mass() * step * step);
    let n = intervals - 1;
    let diag = (0..n)
        .map(|i| kinetic + params.potential(x_min + (i + 1) as f64 * step))
        .collect();
    let off = vec![-0.5 * kinetic; n.saturating_sub(1)];
    Discretization {
        x_min,
        step,
        matrix: Tridiagonal { diag, off },
    }
}

/// Lowest `count` levels, Richardson-extrapolated from `coarse`, `2 coarse`
/// and `4 coarse` intervals.
pub fn richardson_levels(
    params: &SystemParams,
    x_min: f64,
    x_max: f64,
    coarse: usize,
    count: usize,
) -> Vec<f64> {
    let levels: Vec<Vec<f64>> = crate::par::map_range(3, |j| {
        let h = hamiltonian_1d(params, x_min, x_max, coarse << j);
        (0..count).map(|k| h.matrix.eigenvalue(k)).collect()
    });
    (0..count)
        .map(|k| richardson3(levels[0][k], levels[1][k], levels[2][k]))
        .collect()
}

fn richardson3(coarse: f64, mid: f64, fine: f64) -> f64 {
    let r1 = (4.0 * mid - coarse) / 3.0;
    let r2 = (4.0 * fine - mid) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

/// Extrapolated eigenpair on the coarse grid's nodes.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub energy: f64,
    /// Node positions, Dirichlet ends included.
    pub x: Vec<f64>,
    /// Samples normalized so that `step * sum psi^2 = 1`; positive at the
    /// first sample above `1e-3` of the maximum.
    pub psi: Vec<f64>,
    pub step: f64,
}

fn normalized_state(
    disc: &Discretization,
    k: usize,
    stride: usize,
    nodes: usize,
) -> (f64, Vec<f64>) {
    let e = disc.matrix.eigenvalue(k);
    let v = disc.matrix.eigenvector(e);
    // Pad the Dirichlet zeros back in, then subsample onto the coarse nodes.
    let mut full = Vec::with_capacity(v.len() + 2);
    full.push(0.0);
    full.extend_from_slice(&v);
    full.push(0.0);
    let norm = (disc.step * full.iter().map(|a| a * a).sum::<f64>()).sqrt();
    let peak = full.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let lead = full
        .iter()
        .find(|a| a.abs() > 1e-3 * peak)
        .copied()
        .unwrap_or(1.0);
    let sign = lead.signum() / norm;
    let sub = (0..nodes).map(|i| full[i * stride] * sign).collect();
    (e, sub)
}

/// The `k`-th eigenpair, extrapolated over three nested grids.
pub fn richardson_state(
    params: &SystemParams,
    x_min: f64,
    x_max: f64,
    coarse: usize,
    k: usize,
) -> Eigenpair {
    let nodes = coarse + 1;
    let runs: Vec<(f64, Vec<f64>)> = crate::par::map_range(3, |j| {
        let disc = hamiltonian_1d(params, x_min, x_max, coarse << j);
        normalized_state(&disc, k, 1 << j, nodes)
    });
    let energy = richardson3(runs[0].0, runs[1].0, runs[2].0);
    let psi = (0..nodes)
        .map(|i| richardson3(runs[0].1[i], runs[1].1[i], runs[2].1[i]))
        .collect();
    let step = (x_max - x_min) / coarse as f64;
    Eigenpair {
        energy,
        x: (0..nodes).map(|i| x_min + i as f64 * step).collect(),
        psi,
        step,
    }
}
