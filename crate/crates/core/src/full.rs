//! Two-mode Lindblad master equation on a truncated Fock ⊗ Fock space.
//!
//! ```text
//! dR/dt = −iΔ[a†a, R] + iκ[a†b + ab†, R]
//!         + γ_a(n̄_a0 + 1) D[a]R + γ_a n̄_a0 D[a†]R + μ1 D[b]R + μ2 D[b†]R
//! ```
//!
//! The oscillator `a` is the first tensor factor and the ion `b` the second.
//! The generator is compiled once into an effective non-Hermitian
//! Hamiltonian `H_eff = H − (i/2) Σ L†L` (a handful of nonzeros per row) and
//! one jump term `L R L†` per channel; every channel is a ladder operator,
//! so each row of `L` holds at most one entry. The state itself stays dense.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hilbert::{check_dim, thermal_state, truncation_for, DensityMatrix, C64, MIN_LEVELS};
use crate::ode::{integrate, IntegrationStats, OdeSystem, StepControl};
use crate::params::SystemParams;
use crate::trajectory::{Sample, Trajectory};

/// Largest bath occupation the full master equation accepts without an
/// explicit override; bigger problems belong to the moment equations.
pub const NBAR_GUARDRAIL: f64 = 10.0;

/// Truncations of the two modes, oscillator first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointSpace {
    pub n_a: usize,
    pub n_b: usize,
}

impl JointSpace {
    pub fn new(n_a: usize, n_b: usize) -> Result<Self> {
        if n_a < MIN_LEVELS || n_b < MIN_LEVELS {
            return Err(Error::InvalidParameter { name: "n_levels", reason: "each mode needs at least 2 levels" });
        }
        Ok(Self { n_a, n_b })
    }

    /// Truncation large enough for thermal states of the given occupations.
    pub fn for_thermal(nbar_a: f64, nbar_b: f64, tail_mass_bound: f64) -> Result<Self> {
        Self::new(truncation_for(nbar_a, tail_mass_bound)?, truncation_for(nbar_b, tail_mass_bound)?)
    }

    pub fn dim(&self) -> usize {
        self.n_a * self.n_b
    }

    pub fn index(&self, n_a: usize, n_b: usize) -> usize {
        n_a * self.n_b + n_b
    }

    /// Product of thermal states, `thermal(n̄_a) ⊗ thermal(n̄_b)`.
    pub fn thermal_product(&self, nbar_a: f64, nbar_b: f64) -> Result<DensityMatrix> {
        Ok(thermal_state(self.n_a, nbar_a)?.tensor(&thermal_state(self.n_b, nbar_b)?))
    }

    pub fn cost(&self) -> CostEstimate {
        let d = self.dim() as f64;
        // state, 7 stages, 5 dense-output slots, 3 scratch vectors
        let buffers = 16.0;
        CostEstimate {
            dim: self.dim(),
            working_bytes: buffers * d * d * 16.0,
            flops_per_rhs: 8.0 * 14.0 * d * d,
        }
    }
}

/// Rough resource estimate for a full master-equation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub dim: usize,
    pub working_bytes: f64,
    pub flops_per_rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    col: usize,
    val: C64,
}

/// Compiled generator of the master equation.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    space: JointSpace,
    /// Rows of `H_eff`.
    h_eff: Vec<Vec<Entry>>,
    /// Per channel, the single entry of each row of `sqrt(rate) · L`.
    jumps: Vec<Vec<Option<Entry>>>,
}

impl Liouvillian {
    pub fn new(params: &SystemParams, space: JointSpace) -> Result<Self> {
        params.validate()?;
        let JointSpace { n_a, n_b } = space;
        let d = space.dim();
        let sq = |n: usize| (n as f64).sqrt();
        let r_a_down = params.gamma_a * (params.nbar_a0 + 1.0);
        let r_a_up = params.gamma_a * params.nbar_a0;
        let (r_b_down, r_b_up) = (params.mu1, params.mu2);

        let mut h_eff = vec![Vec::with_capacity(3); d];
        for na in 0..n_a {
            for nb in 0..n_b {
                let i = space.index(na, nb);
                // Σ rate L†L is diagonal; a a† = diag(1, ..., N-1, 0) once truncated
                let a_dag_a = na as f64;
                let a_a_dag = if na + 1 < n_a { (na + 1) as f64 } else { 0.0 };
                let b_dag_b = nb as f64;
                let b_b_dag = if nb + 1 < n_b { (nb + 1) as f64 } else { 0.0 };
                let loss = r_a_down * a_dag_a + r_a_up * a_a_dag + r_b_down * b_dag_b + r_b_up * b_b_dag;
                h_eff[i].push(Entry { col: i, val: Complex::new(params.delta * na as f64, -0.5 * loss) });
                if params.kappa != 0.0 {
                    // a†b: |na-1, nb+1> -> |na, nb>
                    if na >= 1 && nb + 1 < n_b {
                        let val = Complex::new(-params.kappa * sq(na) * sq(nb + 1), 0.0);
                        h_eff[i].push(Entry { col: space.index(na - 1, nb + 1), val });
                    }
                    // a b†: |na+1, nb-1> -> |na, nb>
                    if na + 1 < n_a && nb >= 1 {
                        let val = Complex::new(-params.kappa * sq(na + 1) * sq(nb), 0.0);
                        h_eff[i].push(Entry { col: space.index(na + 1, nb - 1), val });
                    }
                }
            }
        }

        let mut jumps = Vec::new();
        let mut channel = |rate: f64, source: &dyn Fn(usize, usize) -> Option<(usize, usize, f64)>| {
            if rate == 0.0 {
                return;
            }
            let amp = rate.sqrt();
            let mut rows = vec![None; d];
            for na in 0..n_a {
                for nb in 0..n_b {
                    if let Some((ka, kb, m)) = source(na, nb) {
                        rows[space.index(na, nb)] = Some(Entry { col: space.index(ka, kb), val: Complex::new(amp * m, 0.0) });
                    }
                }
            }
            jumps.push(rows);
        };
        channel(r_a_down, &|na, nb| (na + 1 < n_a).then(|| (na + 1, nb, sq(na + 1))));
        channel(r_a_up, &|na, nb| (na >= 1).then(|| (na - 1, nb, sq(na))));
        channel(r_b_down, &|na, nb| (nb + 1 < n_b).then(|| (na, nb + 1, sq(nb + 1))));
        channel(r_b_up, &|na, nb| (nb >= 1).then(|| (na, nb - 1, sq(nb))));

        Ok(Self { space, h_eff, jumps })
    }

    pub fn space(&self) -> JointSpace {
        self.space
    }

    /// Writes `L(R)` into `out`; both are column-major `d × d` buffers.
    pub fn apply(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.space.dim();
        debug_assert_eq!(rho.len(), d * d);
        debug_assert_eq!(out.len(), d * d);
        let minus_i = Complex::new(0.0, -1.0);
        let plus_i = Complex::new(0.0, 1.0);

        // −i H_eff R
        for j in 0..d {
            let col = &rho[j * d..(j + 1) * d];
            let out_col = &mut out[j * d..(j + 1) * d];
            for (i, row) in self.h_eff.iter().enumerate() {
                let mut acc = Complex::new(0.0, 0.0);
                for e in row {
                    acc += e.val * col[e.col];
                }
                out_col[i] = minus_i * acc;
            }
        }
        // + i R H_eff†: column j gains Σ_k conj(H[j,k]) R[:, k]
        for (j, row) in self.h_eff.iter().enumerate() {
            for e in row {
                let coef = plus_i * e.val.conj();
                let (src, dst) = (e.col * d, j * d);
                for i in 0..d {
                    let v = rho[src + i];
                    out[dst + i] += coef * v;
                }
            }
        }
        // + Σ L R L†
        for rows in &self.jumps {
            for (j, ej) in rows.iter().enumerate() {
                let Some(ej) = ej else { continue };
                let col = &rho[ej.col * d..(ej.col + 1) * d];
                let right = ej.val.conj();
                let out_col = &mut out[j * d..(j + 1) * d];
                for (i, ei) in rows.iter().enumerate() {
                    if let Some(ei) = ei {
                        out_col[i] += ei.val * right * col[ei.col];
                    }
                }
            }
        }
    }

    /// Oscillator and ion occupations and `<a†b>` of a column-major state.
    pub fn observables(&self, rho: &[C64]) -> Sample {
        let JointSpace { n_a, n_b } = self.space;
        let d = self.space.dim();
        let mut nbar_a = 0.0;
        let mut nbar_b = 0.0;
        let mut trace = Complex::new(0.0, 0.0);
        let mut cross = Complex::new(0.0, 0.0);
        for na in 0..n_a {
            for nb in 0..n_b {
                let i = self.space.index(na, nb);
                let p = rho[i + i * d];
                trace += p;
                nbar_a += na as f64 * p.re;
                nbar_b += nb as f64 * p.re;
                // tr(a†b R) = Σ <i|a†b|k> R[k, i]
                if na >= 1 && nb + 1 < n_b {
                    let k = self.space.index(na - 1, nb + 1);
                    cross += rho[k + i * d] * ((na as f64).sqrt() * ((nb + 1) as f64).sqrt());
                }
            }
        }
        Sample { nbar_a, nbar_b, cross, trace_error: (trace - Complex::new(1.0, 0.0)).norm() }
    }
}

impl OdeSystem for Liouvillian {
    type Elem = C64;

    fn rhs(&self, y: &[C64], dydt: &mut [C64]) {
        self.apply(y, dydt);
    }
}

/// Right-hand side of the master equation for a joint state `R`.
pub fn lindblad_rhs(params: &SystemParams, rho: &DMatrix<C64>, n_a_levels: usize, n_b_levels: usize) -> Result<DMatrix<C64>> {
    let space = JointSpace::new(n_a_levels, n_b_levels)?;
    check_dim(space.dim(), rho.nrows())?;
    check_dim(space.dim(), rho.ncols())?;
    let gen = Liouvillian::new(params, space)?;
    let mut out = DMatrix::zeros(space.dim(), space.dim());
    gen.apply(rho.as_slice(), out.as_mut_slice());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub step_control: StepControl,
    /// Check the minimum eigenvalue on every n-th output sample (and the
    /// last one); `0` disables the check.
    pub positivity_every: usize,
    pub positivity_tol: f64,
    pub trace_tol: f64,
    /// Permit `n̄_a0` above [`NBAR_GUARDRAIL`].
    pub allow_large: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            step_control: StepControl::default(),
            positivity_every: 1,
            positivity_tol: 1e-6,
            trace_tol: 1e-6,
            allow_large: false,
        }
    }
}

/// Everything a full master-equation run produces.
#[derive(Debug, Clone)]
pub struct FullRun {
    pub trajectory: Trajectory,
    pub final_state: DensityMatrix,
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue seen across the monitored samples.
    pub min_eigenvalue: Option<f64>,
    pub stats: IntegrationStats,
}

/// Propagates `r0` and samples observables on `grid` (times in seconds,
/// non-decreasing, starting at or after 0).
pub fn evolve(r0: &DensityMatrix, params: &SystemParams, space: JointSpace, grid: &[f64], options: &EvolveOptions) -> Result<Trajectory> {
    evolve_detailed(r0, params, space, grid, options).map(|run| run.trajectory)
}

pub fn evolve_detailed(
    r0: &DensityMatrix,
    params: &SystemParams,
    space: JointSpace,
    grid: &[f64],
    options: &EvolveOptions,
) -> Result<FullRun> {
    check_dim(space.dim(), r0.dim())?;
    if params.nbar_a0 > NBAR_GUARDRAIL && !options.allow_large {
        return Err(Error::InvalidParameter { name: "nbar_a0", reason: "above the full master-equation guardrail; use the moment equations" });
    }
    match grid.last() {
        Some(&t) if t > 0.0 => {}
        _ => return Err(Error::InvalidParameter { name: "t_final", reason: "must be positive" }),
    }
    let gen = Liouvillian::new(params, space)?;
    let d = space.dim();
    let mut trajectory = Trajectory::with_capacity(grid.len());
    let mut max_herm: f64 = 0.0;
    let mut min_eig: Option<f64> = None;
    let mut final_state = r0.matrix().clone();
    let n_grid = grid.len();

    let stats = integrate(&gen, 0.0, r0.matrix().as_slice(), grid, &options.step_control, |t, y| {
        if y.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { t });
        }
        let sample = gen.observables(y);
        if sample.trace_error > options.trace_tol {
            return Err(Error::TraceDrift { t, trace_error: sample.trace_error });
        }
        let idx = trajectory.len();
        trajectory.push(t, sample);
        let last = idx + 1 == n_grid;
        let mat = DMatrix::from_column_slice(d, d, y);
        let rho = DensityMatrix::from_matrix_unchecked(mat);
        max_herm = max_herm.max(rho.hermiticity_error());
        if options.positivity_every > 0 && (idx.is_multiple_of(options.positivity_every) || last) {
            let e = rho.min_eigenvalue();
            min_eig = Some(min_eig.map_or(e, |m: f64| m.min(e)));
            if e < -options.positivity_tol {
                return Err(Error::PositivityViolation { t, min_eigenvalue: e });
            }
        }
        if last {
            final_state = rho.matrix().clone();
        }
        Ok(())
    })?;

    Ok(FullRun {
        trajectory,
        final_state: DensityMatrix::from_matrix_unchecked(final_state),
        max_hermiticity_error: max_herm,
        min_eigenvalue: min_eig,
        stats,
    })
}
