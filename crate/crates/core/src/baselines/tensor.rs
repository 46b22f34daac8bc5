//! Low-rank completion of a tensor of per-domain linear models.
//!
//! The tensor has shape `D × p_1 × … × p_N`: one D-vector of weights per
//! cell of the factor grid. Cells are observed or missing as a whole. A
//! rank-R CP model is fitted to the observed cells by alternating least
//! squares and the missing cells are read off the factorisation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelTensor<T> {
    d: usize,
    grid: Vec<usize>,
    /// `cells × d`, one row per grid cell in lexicographic order.
    slices: Matrix<T>,
    observed: Vec<bool>,
}

impl<T: Scalar> ModelTensor<T> {
    pub fn empty(d: usize, grid: &[usize]) -> Result<Self> {
        if d == 0 || grid.is_empty() || grid.contains(&0) {
            return Err(Error::InvalidDimension(format!(
                "tensor needs D >= 1 and a nonempty grid of positive sizes, got D = {d}, grid = {grid:?}"
            )));
        }
        let cells = grid.iter().product();
        Ok(Self {
            d,
            grid: grid.to_vec(),
            slices: Matrix::zeros(cells, d),
            observed: vec![false; cells],
        })
    }

    /// `(D, p_1, …, p_N)`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.d).chain(self.grid.iter().copied()).collect()
    }

    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    pub fn cells(&self) -> usize {
        self.observed.len()
    }

    pub fn observed_mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn cell_index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.grid.len() {
            return Err(Error::Shape(format!(
                "grid has {} modes, got {} levels",
                self.grid.len(),
                levels.len()
            )));
        }
        let mut idx = 0;
        for (mode, (&l, &p)) in levels.iter().zip(&self.grid).enumerate() {
            if l >= p {
                return Err(Error::Shape(format!(
                    "level {l} out of range for mode {mode} of size {p}"
                )));
            }
            idx = idx * p + l;
        }
        Ok(idx)
    }

    pub fn levels_of(&self, mut cell: usize) -> Vec<usize> {
        let mut levels = vec![0; self.grid.len()];
        for (slot, &p) in levels.iter_mut().zip(&self.grid).rev() {
            *slot = cell % p;
            cell /= p;
        }
        levels
    }

    pub fn slice(&self, levels: &[usize]) -> Result<&[T]> {
        Ok(self.slices.row(self.cell_index(levels)?))
    }

    pub fn is_observed(&self, levels: &[usize]) -> Result<bool> {
        Ok(self.observed[self.cell_index(levels)?])
    }

    pub fn get(&self, d: usize, levels: &[usize]) -> Result<T> {
        Ok(self.slice(levels)?[d])
    }

    fn set_slice(&mut self, cell: usize, w: &[T]) {
        self.slices.row_mut(cell).copy_from_slice(w);
    }

    /// Marks a cell as missing, keeping its values out of any fit.
    pub fn hide(&mut self, levels: &[usize]) -> Result<()> {
        let c = self.cell_index(levels)?;
        self.observed[c] = false;
        self.slices.row_mut(c).fill(T::zero());
        Ok(())
    }

    /// Factor levels that no observed cell touches.
    pub fn unidentified_levels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (mode, &p) in self.grid.iter().enumerate() {
            for l in 0..p {
                let seen = (0..self.cells())
                    .any(|c| self.observed[c] && self.levels_of(c)[mode] == l);
                if !seen {
                    out.push((mode, l));
                }
            }
        }
        out
    }
}

/// Stores per-domain weight vectors at their grid positions.
pub fn tensor_store<T: Scalar>(
    models: &[(Vec<usize>, Vec<T>)],
    grid: &[usize],
) -> Result<ModelTensor<T>> {
    let d = models.first().map_or(0, |(_, w)| w.len());
    let mut t = ModelTensor::empty(d, grid)?;
    for (levels, w) in models {
        if w.len() != d {
            return Err(Error::Shape(format!(
                "model for cell {levels:?} has length {}, expected {d}",
                w.len()
            )));
        }
        let c = t.cell_index(levels)?;
        if t.observed[c] {
            return Err(Error::Conflict(format!(
                "cell {levels:?} assigned more than once"
            )));
        }
        t.observed[c] = true;
        t.set_slice(c, w);
    }
    Ok(t)
}

#[derive(Debug, Clone)]
pub struct Completion<T> {
    pub tensor: ModelTensor<T>,
    pub converged: bool,
    pub iterations: usize,
    /// RMS residual of the factorisation over observed entries.
    pub residual: f64,
    pub warnings: Vec<String>,
}

struct Cp<T> {
    /// D × R
    features: Matrix<T>,
    /// one p_f × R matrix per grid mode
    modes: Vec<Matrix<T>>,
}

impl<T: Scalar> Cp<T> {
    /// Product over grid modes of the factor rows selected by `levels`,
    /// optionally skipping one mode.
    fn cell_code(&self, levels: &[usize], skip: Option<usize>, r: usize) -> Vec<T> {
        let mut code = vec![T::one(); r];
        for (f, (m, &l)) in self.modes.iter().zip(levels).enumerate() {
            if Some(f) == skip {
                continue;
            }
            for (c, &v) in code.iter_mut().zip(m.row(l)) {
                *c *= v;
            }
        }
        code
    }

    fn reconstruct(&self, levels: &[usize], r: usize) -> Vec<T> {
        let code = self.cell_code(levels, None, r);
        self.features.matvec(&code).expect("R-length code")
    }
}

fn ridge_floor<T: Scalar>(g: &mut Matrix<T>) {
    let n = g.rows();
    let mean_diag = (0..n).map(|i| g[(i, i)]).sum::<T>() / T::of(n as f64);
    let eps = (mean_diag * T::of(1e-12)).max(T::min_positive_value());
    for i in 0..n {
        g[(i, i)] += eps;
    }
}

fn residual<T: Scalar>(t: &ModelTensor<T>, cp: &Cp<T>, r: usize) -> f64 {
    let mut sse = 0.0;
    let mut count = 0usize;
    for c in 0..t.cells() {
        if !t.observed[c] {
            continue;
        }
        let fit = cp.reconstruct(&t.levels_of(c), r);
        for (a, b) in fit.iter().zip(t.slices.row(c)) {
            let e = (*a - *b).to_f64_lossy();
            sse += e * e;
        }
        count += t.d;
    }
    if count == 0 {
        0.0
    } else {
        (sse / count as f64).sqrt()
    }
}

/// Independent ALS starts on the same completion problem.
const RESTARTS: usize = 6;

struct Run<T> {
    cp: Cp<T>,
    residual: f64,
    converged: bool,
    iterations: usize,
}

fn als<T: Scalar>(
    t: &ModelTensor<T>,
    mut cp: Cp<T>,
    observed: &[usize],
    levels: &[Vec<usize>],
    r: usize,
    iters: usize,
) -> Result<Run<T>> {
    let mut best = (f64::INFINITY, None::<Cp<T>>);
    let mut prev = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..iters {
        iterations = it + 1;
        // feature mode: all D rows share the observed cells
        let mut gram = Matrix::zeros(r, r);
        let mut rhs = Matrix::zeros(r, t.d);
        for &c in observed {
            let code = cp.cell_code(&levels[c], None, r);
            for i in 0..r {
                for j in 0..r {
                    gram[(i, j)] += code[i] * code[j];
                }
                for (d, &v) in t.slices.row(c).iter().enumerate() {
                    rhs[(i, d)] += code[i] * v;
                }
            }
        }
        ridge_floor(&mut gram);
        cp.features = solve_spd(&gram, &rhs)?.transpose();

        // grid modes, one row per level
        let ftf = cp.features.transpose().matmul(&cp.features)?;
        for f in 0..t.grid.len() {
            for l in 0..t.grid[f] {
                let mut gram = Matrix::zeros(r, r);
                let mut rhs = Matrix::zeros(r, 1);
                let mut any = false;
                for &c in observed {
                    if levels[c][f] != l {
                        continue;
                    }
                    any = true;
                    let m = cp.cell_code(&levels[c], Some(f), r);
                    let proj = cp.features.transpose().matvec(t.slices.row(c))?;
                    for i in 0..r {
                        rhs[(i, 0)] += proj[i] * m[i];
                        for j in 0..r {
                            gram[(i, j)] += ftf[(i, j)] * m[i] * m[j];
                        }
                    }
                }
                if !any {
                    continue;
                }
                ridge_floor(&mut gram);
                let row = solve_spd(&gram, &rhs)?;
                cp.modes[f].row_mut(l).copy_from_slice(row.as_slice());
            }
        }

        let res = residual(t, &cp, r);
        if !res.is_finite() {
            break;
        }
        if res < best.0 {
            best = (res, Some(Cp { features: cp.features.clone(), modes: cp.modes.clone() }));
        }
        let scale = t.slices.as_slice().iter().fold(0.0f64, |m, v| m.max(v.to_f64_lossy().abs())).max(1.0);
        if (prev - res).abs() <= 1e-13 * scale || res <= 1e-14 * scale {
            converged = true;
            break;
        }
        prev = res;
    }

    match best {
        (residual, Some(cp)) => Ok(Run {
            cp,
            residual,
            converged,
            iterations,
        }),
        _ => Err(Error::Divergence { epoch: iterations }),
    }
}

/// Rank-`rank` CP completion of the missing cells.
///
/// Observed cells are copied through untouched. When `iters` sweeps pass
/// without the residual settling, the best iterate is returned with
/// `converged = false`.
pub fn tensor_complete<T: Scalar>(
    t: &ModelTensor<T>,
    rank: usize,
    iters: usize,
    seed: u64,
) -> Result<Completion<T>> {
    if rank == 0 {
        return Err(Error::InvalidRank("rank must be at least 1".into()));
    }
    let observed: Vec<usize> = (0..t.cells()).filter(|&c| t.observed[c]).collect();
    if observed.is_empty() {
        return Err(Error::EmptyDataset("tensor has no observed cells".into()));
    }
    let warnings: Vec<String> = t
        .unidentified_levels()
        .into_iter()
        .map(|(mode, l)| format!("mode {mode} level {l} has no observed cell; its slices are not identifiable"))
        .collect();

    let r = rank;
    let levels: Vec<Vec<usize>> = (0..t.cells()).map(|c| t.levels_of(c)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // ALS from an all-positive start cannot move a factor across zero
    // without passing through a degenerate swamp, so later starts draw
    // random signs and the lowest residual wins
    let mut best: Option<Run<T>> = None;
    for start in 0..RESTARTS {
        let signed = start > 0;
        let mut rand_matrix = |rows: usize| {
            let data = (0..rows * r)
                .map(|_| {
                    let v = rng.random_range(0.5..1.5);
                    T::of(if signed && rng.random::<bool>() { -v } else { v })
                })
                .collect();
            Matrix::new(rows, r, data).expect("sized")
        };
        let cp = Cp {
            features: rand_matrix(t.d),
            modes: t.grid.iter().map(|&p| rand_matrix(p)).collect(),
        };
        let Ok(run) = als(t, cp, &observed, &levels, r, iters) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| run.residual < b.residual) {
            best = Some(run);
        }
    }
    let Some(Run { cp, residual: res, converged, iterations }) = best else {
        return Err(Error::Divergence { epoch: 0 });
    };
    let mut out = t.clone();
    for c in 0..t.cells() {
        if !t.observed[c] {
            let w = cp.reconstruct(&levels[c], r);
            out.set_slice(c, &w);
        }
    }
    Ok(Completion {
        tensor: out,
        converged,
        iterations,
        residual: res,
        warnings,
    })
}

/// Picks the rank in `1..=max_rank` with the lowest leave-one-cell-out
/// reconstruction error over the observed cells.
pub fn select_rank<T: Scalar>(t: &ModelTensor<T>, max_rank: usize, iters: usize, seed: u64) -> Result<usize> {
    if max_rank == 0 {
        return Err(Error::InvalidRank("max_rank must be at least 1".into()));
    }
    let observed: Vec<usize> = (0..t.cells()).filter(|&c| t.observed[c]).collect();
    let mut best = (f64::INFINITY, 1);
    for rank in 1..=max_rank {
        let mut err = 0.0;
        let mut folds = 0;
        for &c in &observed {
            let levels = t.levels_of(c);
            let mut held = t.clone();
            held.hide(&levels)?;
            if !held.unidentified_levels().is_empty() {
                continue;
            }
            let done = tensor_complete(&held, rank, iters, seed)?;
            let rec = done.tensor.slice(&levels)?;
            err += rec
                .iter()
                .zip(t.slices.row(c))
                .map(|(a, b)| (*a - *b).to_f64_lossy().powi(2))
                .sum::<f64>();
            folds += 1;
        }
        if folds > 0 && err / (folds as f64) < best.0 {
            best = (err / folds as f64, rank);
        }
    }
    Ok(best.1)
}
