//! Online batch dictionary learning.
//!
//! A dictionary is a set of `N` unit-norm atoms — canonical quaternions for
//! joint rotations, arbitrary-dimension unit vectors for shape-style
//! parameters. Learning alternates two steps over streamed batches:
//!
//! 1. *Code step*: for the current dictionary `D`, optimize logits `W` so the
//!    sparse codes `Γ = f(W)` (columnwise sparsemax) reconstruct the batch,
//!    by gradient descent through the sparsemax Jacobian on
//!    `½‖θ̄ − D·Γ‖²_F`.
//! 2. *Dictionary step*: fold the batch statistics into the history matrices
//!    `A ← ηA + (1−η)ΣγγT`, `B ← ηB + (1−η)Σθγᵀ`, then run one warm-started
//!    block-coordinate sweep over atoms. Each column update
//!    `u_j = (b_j − D·a_j)/A_jj + d_j`, `d_j ← u_j/‖u_j‖` is the exact
//!    minimizer of the surrogate `½tr(DᵀDA) − tr(DᵀB)` over the unit sphere
//!    for that column (in quaternion mode the subsequent canonicalization
//!    sign-flip can trade a little surrogate value for double-cover
//!    discipline — the rotation is unchanged).
//!
//! The momentum `η ∈ [0, 1)` discounts old batches; `A₀ = I`, `B₀ = D₀`
//! make the initial dictionary a fixed point of the dictionary step.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{ensure_finite, Error, Result};
use crate::mat::Mat;
use crate::math;
use crate::quat::{canonical4, nlerp, UnitQuaternion};
use crate::rng::{derive_seed, gaussian_vec, rng_from_seed};
use crate::simplex::{jacobian_apply, sparsemax, SimplexPoint};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// What kind of atoms a dictionary holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `d = 4`, columns are canonical unit quaternions; reconstruction blends
    /// them on the sphere (nlerp).
    Quaternion,
    /// Arbitrary `d`, unit-norm columns; reconstruction is the plain linear
    /// combination.
    Euclidean,
}

/// Inner-loop configuration for code optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    /// Hard cap on gradient steps per code column.
    pub max_steps: usize,
    /// Stop once the relative objective decrease falls below this.
    pub tol: f64,
    /// Initial step length for the backtracking line search.
    pub step0: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            max_steps: 200,
            tol: 1e-7,
            step0: 1.0,
        }
    }
}

/// Where a dictionary came from: enough to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// Producing algorithm (`"obdl"`, `"kmeans"`, `"manual"`).
    pub method: String,
    pub seed: u64,
    /// Batch size `b` (0 where not meaningful, e.g. k-means).
    pub batch_size: usize,
    /// Outer steps `T` (OBDL) or Lloyd iterations actually run (k-means).
    pub steps: usize,
    /// History momentum `η` (0 where not meaningful).
    pub momentum: f64,
    pub inner: InnerConfig,
    /// Free-form flags, e.g. duplicate-centroid warnings.
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn manual() -> Self {
        Provenance {
            method: "manual".into(),
            seed: 0,
            batch_size: 0,
            steps: 0,
            momentum: 0.0,
            inner: InnerConfig::default(),
            notes: Vec::new(),
        }
    }
}

/// `N` unit-norm atoms of dimension `d`, plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    mode: Mode,
    joint_label: String,
    atoms: Mat,
    /// Quaternion view of the columns (empty in Euclidean mode), cached so
    /// reconstruction never re-derives — and never perturbs — atom bits.
    atoms_q: Vec<UnitQuaternion>,
    provenance: Provenance,
}

impl Dictionary {
    /// Validate and wrap a `d × N` atom matrix.
    ///
    /// Every column must be unit-norm within 1e-9; quaternion mode requires
    /// `d = 4` and canonical columns.
    pub fn new(mode: Mode, joint_label: String, atoms: Mat, provenance: Provenance) -> Result<Self> {
        if atoms.cols() == 0 {
            return Err(Error::InvalidInput("dictionary needs at least one atom".into()));
        }
        if mode == Mode::Quaternion && atoms.rows() != 4 {
            return Err(Error::DimensionMismatch {
                context: "quaternion dictionary atom dimension",
                expected: 4,
                got: atoms.rows(),
            });
        }
        ensure_finite(atoms.as_slice(), "dictionary atoms")?;
        for j in 0..atoms.cols() {
            let col = atoms.col(j);
            let n = math::norm(col);
            if math::abs(n - 1.0) > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "atom {j} has norm {n}, expected unit"
                )));
            }
            if mode == Mode::Quaternion {
                let q = [col[0], col[1], col[2], col[3]];
                if q != canonical4(q) {
                    return Err(Error::InvalidInput(format!(
                        "atom {j} is not in canonical form (w >= 0 hemisphere)"
                    )));
                }
            }
        }
        let atoms_q = if mode == Mode::Quaternion {
            (0..atoms.cols())
                .map(|j| {
                    let c = atoms.col(j);
                    UnitQuaternion::from_canonical_parts([c[0], c[1], c[2], c[3]])
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Dictionary {
            mode,
            joint_label,
            atoms,
            atoms_q,
            provenance,
        })
    }

    /// Build a quaternion-mode dictionary from explicit atoms.
    pub fn from_quaternions(
        joint_label: String,
        atoms: &[UnitQuaternion],
        provenance: Provenance,
    ) -> Result<Self> {
        let cols: Vec<Vec<f64>> = atoms.iter().map(|q| q.components().to_vec()).collect();
        Self::new(Mode::Quaternion, joint_label, Mat::from_columns(&cols)?, provenance)
    }

    /// Random initial dictionary: seeded Gaussian columns, normalized (and
    /// canonicalized in quaternion mode).
    pub fn random_init<R: Rng + ?Sized>(
        mode: Mode,
        d: usize,
        n_atoms: usize,
        joint_label: String,
        rng: &mut R,
    ) -> Result<Self> {
        if n_atoms == 0 || d == 0 {
            return Err(Error::InvalidInput("dictionary shape must be nonzero".into()));
        }
        let mut atoms = Mat::zeros(d, n_atoms);
        for j in 0..n_atoms {
            loop {
                let g = gaussian_vec(rng, d);
                let n = math::norm(&g);
                if n > 1e-9 {
                    let col = atoms.col_mut(j);
                    for (c, v) in col.iter_mut().zip(&g) {
                        *c = v / n;
                    }
                    if mode == Mode::Quaternion {
                        let q = canonical4([col[0], col[1], col[2], col[3]]);
                        col.copy_from_slice(&q);
                    }
                    break;
                }
            }
        }
        Self::new(mode, joint_label, atoms, Provenance::manual())
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn joint_label(&self) -> &str {
        &self.joint_label
    }

    /// Atom dimension `d`.
    pub fn d(&self) -> usize {
        self.atoms.rows()
    }

    /// Atom count `N`.
    pub fn n_atoms(&self) -> usize {
        self.atoms.cols()
    }

    pub fn atoms(&self) -> &Mat {
        &self.atoms
    }

    /// Atom `j` as a column slice.
    pub fn atom(&self, j: usize) -> &[f64] {
        self.atoms.col(j)
    }

    /// The atoms as quaternions (quaternion mode only).
    pub fn atoms_quat(&self) -> Result<&[UnitQuaternion]> {
        if self.mode != Mode::Quaternion {
            return Err(Error::InvalidInput(
                "quaternion atoms requested from a Euclidean dictionary".into(),
            ));
        }
        Ok(&self.atoms_q)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn set_provenance(&mut self, provenance: Provenance) {
        self.provenance = provenance;
    }

    /// Reconstruct from raw logits: sparsemax first, then blend.
    ///
    /// Quaternion mode returns the components of `nlerp(f(z), atoms)`;
    /// Euclidean mode returns `D·f(z)` (which stays inside the convex hull of
    /// the atoms — no normalization).
    pub fn reconstruct(&self, logits: &[f64]) -> Result<Vec<f64>> {
        let code = sparsemax(logits)?;
        self.reconstruct_code(&code)
    }

    /// Reconstruct from an already-projected simplex code.
    pub fn reconstruct_code(&self, code: &SimplexPoint) -> Result<Vec<f64>> {
        if code.len() != self.n_atoms() {
            return Err(Error::DimensionMismatch {
                context: "reconstruct code length",
                expected: self.n_atoms(),
                got: code.len(),
            });
        }
        match self.mode {
            Mode::Quaternion => {
                let q = nlerp(code.as_slice(), &self.atoms_q)?;
                Ok(q.components().to_vec())
            }
            Mode::Euclidean => self.atoms.matvec(code.as_slice()),
        }
    }

    /// Quaternion-mode reconstruction as a rotation.
    pub fn reconstruct_quat(&self, logits: &[f64]) -> Result<UnitQuaternion> {
        if self.mode != Mode::Quaternion {
            return Err(Error::InvalidInput(
                "quaternion reconstruction from a Euclidean dictionary".into(),
            ));
        }
        let code = sparsemax(logits)?;
        nlerp(code.as_slice(), &self.atoms_q)
    }
}

/// Dictionary plus the history matrices that drive online updates.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    dict: Dictionary,
    /// `N × N` second moments of the codes.
    a: Mat,
    /// `d × N` data–code cross moments.
    b: Mat,
    eta: f64,
    /// Atoms whose accumulated code energy `A[j,j]` drops below this are
    /// re-seeded from a training sample instead of updated.
    eps_dead: f64,
    t: usize,
}

impl LearnerState {
    /// Fresh state: `A = I`, `B = D` — the reset that makes the current
    /// dictionary a fixed point of [`LearnerState::update_dictionary`].
    pub fn init(dict: Dictionary, eta: f64, eps_dead: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::InvalidInput(format!(
                "momentum must lie in [0, 1), got {eta}"
            )));
        }
        let n = dict.n_atoms();
        let b = dict.atoms().clone();
        Ok(LearnerState {
            dict,
            a: Mat::identity(n),
            b,
            eta,
            eps_dead,
            t: 0,
        })
    }

    pub fn dict(&self) -> &Dictionary {
        &self.dict
    }

    pub fn history_a(&self) -> &Mat {
        &self.a
    }

    pub fn history_b(&self) -> &Mat {
        &self.b
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn step_count(&self) -> usize {
        self.t
    }

    /// Fold a coded batch into the history: `A ← ηA + (1−η)Σγγᵀ`,
    /// `B ← ηB + (1−η)Σθγᵀ`, `t ← t + 1`.
    pub fn accumulate_history(&mut self, codes: &CodeBatch, data: &Mat) -> Result<()> {
        let n = self.dict.n_atoms();
        let d = self.dict.d();
        if data.rows() != d {
            return Err(Error::DimensionMismatch {
                context: "accumulate_history data rows",
                expected: d,
                got: data.rows(),
            });
        }
        if codes.len() != data.cols() {
            return Err(Error::DimensionMismatch {
                context: "accumulate_history batch size",
                expected: data.cols(),
                got: codes.len(),
            });
        }
        self.a.scale(self.eta);
        self.b.scale(self.eta);
        let w = 1.0 - self.eta;
        for (k, gamma) in codes.codes().iter().enumerate() {
            if gamma.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "accumulate_history code length",
                    expected: n,
                    got: gamma.len(),
                });
            }
            self.a.add_outer(w, gamma.as_slice(), gamma.as_slice())?;
            self.b.add_outer(w, data.col(k), gamma.as_slice())?;
        }
        self.t += 1;
        Ok(())
    }

    /// One warm-started block-coordinate sweep over the atoms.
    ///
    /// For each column `j` in order: `u = (b_j − D·a_j)/A_jj + d_j`, then
    /// `d_j ← u/‖u‖` (canonicalized in quaternion mode). Later columns see
    /// earlier updates. Dead atoms (`A[j,j] < eps_dead`) and collapsed
    /// updates (`‖u‖ < 1e-9`) are re-seeded from a random column of `batch`.
    pub fn update_dictionary<R: Rng + ?Sized>(&mut self, batch: &Mat, rng: &mut R) -> Result<()> {
        let n = self.dict.n_atoms();
        let d = self.dict.d();
        if batch.rows() != d || batch.cols() == 0 {
            return Err(Error::DimensionMismatch {
                context: "update_dictionary batch rows",
                expected: d,
                got: batch.rows(),
            });
        }
        let mode = self.dict.mode;
        for j in 0..n {
            let ajj = self.a.get(j, j);
            if ajj < self.eps_dead {
                let col = batch.col(rng.random_range(0..batch.cols()));
                Self::write_atom(&mut self.dict, j, col, mode)?;
                continue;
            }
            // u = (b_j − D a_j)/A_jj + d_j
            let a_col: Vec<f64> = (0..n).map(|i| self.a.get(i, j)).collect();
            let da = self.dict.atoms.matvec(&a_col)?;
            let mut u = vec![0.0; d];
            let b_col = self.b.col(j);
            let d_col = self.dict.atoms.col(j);
            for i in 0..d {
                u[i] = (b_col[i] - da[i]) / ajj + d_col[i];
            }
            let norm = math::norm(&u);
            if norm < 1e-9 {
                let col = batch.col(rng.random_range(0..batch.cols()));
                Self::write_atom(&mut self.dict, j, col, mode)?;
                continue;
            }
            for x in &mut u {
                *x /= norm;
            }
            Self::write_atom(&mut self.dict, j, &u, mode)?;
        }
        Ok(())
    }

    /// Store a unit column into atom `j`, canonicalizing in quaternion mode
    /// and refreshing the quaternion cache.
    fn write_atom(dict: &mut Dictionary, j: usize, unit_col: &[f64], mode: Mode) -> Result<()> {
        if unit_col.len() != dict.d() {
            return Err(Error::DimensionMismatch {
                context: "write_atom column",
                expected: dict.d(),
                got: unit_col.len(),
            });
        }
        match mode {
            Mode::Quaternion => {
                let q = canonical4([unit_col[0], unit_col[1], unit_col[2], unit_col[3]]);
                dict.atoms.col_mut(j).copy_from_slice(&q);
                dict.atoms_q[j] = UnitQuaternion::from_canonical_parts(q);
            }
            Mode::Euclidean => {
                dict.atoms.col_mut(j).copy_from_slice(unit_col);
            }
        }
        Ok(())
    }
}

/// A batch of logits and their projected simplex codes.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeBatch {
    w: Mat,
    codes: Vec<SimplexPoint>,
}

impl CodeBatch {
    pub fn logits(&self) -> &Mat {
        &self.w
    }

    pub fn codes(&self) -> &[SimplexPoint] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// The batch reconstruction objective `½‖data − D·f(W)‖²_F`.
pub fn batch_objective(dict: &Dictionary, w: &Mat, data: &Mat) -> Result<f64> {
    if w.rows() != dict.n_atoms() {
        return Err(Error::DimensionMismatch {
            context: "batch_objective logits rows",
            expected: dict.n_atoms(),
            got: w.rows(),
        });
    }
    if data.rows() != dict.d() || data.cols() != w.cols() {
        return Err(Error::DimensionMismatch {
            context: "batch_objective data shape",
            expected: dict.d() * w.cols(),
            got: data.rows() * data.cols(),
        });
    }
    let mut total = 0.0;
    for k in 0..w.cols() {
        let gamma = sparsemax(w.col(k))?;
        total += column_objective(dict.atoms(), gamma.as_slice(), data.col(k));
    }
    Ok(total)
}

/// `½‖x − A·γ‖²` for one column.
fn column_objective(atoms: &Mat, gamma: &[f64], x: &[f64]) -> f64 {
    let recon = atoms.matvec(gamma).expect("shapes checked by caller");
    0.5 * recon
        .iter()
        .zip(x)
        .map(|(r, t)| (r - t) * (r - t))
        .sum::<f64>()
}

/// Result of optimizing a single code column.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeFit {
    pub logits: Vec<f64>,
    pub code: SimplexPoint,
    pub objective: f64,
}

/// Descend `½‖x − D·f(w)‖²` from the given initial logits.
///
/// Plain gradient descent through the fixed-support sparsemax Jacobian with a
/// backtracking (Armijo) line search; stops at `inner.max_steps`, at a
/// vanishing gradient, or when the relative objective decrease drops below
/// `inner.tol`. The returned objective never exceeds the initial one.
pub fn optimize_code(dict: &Dictionary, x: &[f64], init: &[f64], inner: &InnerConfig) -> Result<CodeFit> {
    if x.len() != dict.d() {
        return Err(Error::DimensionMismatch {
            context: "optimize_code target",
            expected: dict.d(),
            got: x.len(),
        });
    }
    if init.len() != dict.n_atoms() {
        return Err(Error::DimensionMismatch {
            context: "optimize_code init",
            expected: dict.n_atoms(),
            got: init.len(),
        });
    }
    ensure_finite(x, "optimize_code target")?;
    ensure_finite(init, "optimize_code init")?;

    let atoms = dict.atoms();
    let n = dict.n_atoms();
    let mut w = init.to_vec();
    let mut gamma = sparsemax(&w)?;
    let mut obj = column_objective(atoms, gamma.as_slice(), x);
    let mut step = inner.step0;
    let mut grad = vec![0.0; n];

    for _ in 0..inner.max_steps {
        // ∇_w = J_f(w) · Dᵀ(Dγ − x), with J applied at the computed support.
        let recon = atoms.matvec(gamma.as_slice())?;
        let residual: Vec<f64> = recon.iter().zip(x).map(|(r, t)| r - t).collect();
        let dtr = atoms.tr_matvec(&residual)?;
        let support = gamma.support();
        jacobian_apply(&support, &dtr, &mut grad);
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2 < 1e-28 {
            break;
        }

        let mut t = step;
        let mut accepted = false;
        while t > 1e-18 {
            let cand: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - t * gi).collect();
            let cand_gamma = match sparsemax(&cand) {
                Ok(g) => g,
                Err(_) => {
                    t *= 0.5;
                    continue;
                }
            };
            let cand_obj = column_objective(atoms, cand_gamma.as_slice(), x);
            if cand_obj <= obj - 1e-4 * t * g2 {
                let decrease = obj - cand_obj;
                w = cand;
                gamma = cand_gamma;
                obj = cand_obj;
                step = (t * 1.1).min(1e6);
                accepted = true;
                if decrease < inner.tol * obj.max(1e-12) {
                    return Ok(CodeFit {
                        logits: w,
                        code: gamma,
                        objective: obj,
                    });
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(CodeFit {
        logits: w,
        code: gamma,
        objective: obj,
    })
}

/// Index of the atom nearest to `x` under the dictionary's metric
/// (largest `|⟨x, atom⟩|` in quaternion mode, smallest Euclidean distance
/// otherwise).
fn nearest_atom_index(dict: &Dictionary, x: &[f64]) -> usize {
    let n = dict.n_atoms();
    (0..n)
        .map(|j| {
            let col = dict.atom(j);
            match dict.mode() {
                Mode::Quaternion => -math::abs(math::dot(col, x)),
                Mode::Euclidean => col
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>(),
            }
        })
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
        .map(|(j, _)| j)
        .unwrap_or(0)
}

/// Optimize codes for a whole batch from seeded Gaussian initial logits.
///
/// The initial `W` is drawn sequentially from `rng` (one column per data
/// column); the per-column descents then run independently — and in parallel
/// with the `parallel` feature — so results are identical regardless of
/// thread count.
///
/// Each column also runs two deterministic descents — one from the one-hot
/// logits of its nearest atom, one from uniform (all-zero) logits — and keeps
/// whichever of the three ends lowest. Descent through the sparsemax Jacobian
/// cannot grow the active set (the in-face gradient has zero mean over the
/// support, so the threshold never moves and an inactive atom never
/// re-enters); a lone Gaussian start therefore stays confined to whatever
/// atoms its initial projection happened to activate. The nearest-atom
/// candidate guarantees the obvious vertex is always in the running, which is
/// what lets tightly clustered data code onto the right atom instead of a
/// frozen blend of wrong ones; the uniform candidate starts from the full
/// active set — the one initialization from which every support remains
/// reachable — which is what lets data sitting between atoms find the right
/// blend instead of freezing at whichever subset a random start activated.
/// The winner can only lower the objective, so the return-below-
/// initialization guarantee is kept.
pub fn update_codes<R: Rng + ?Sized>(
    state: &LearnerState,
    data: &Mat,
    config: &InnerConfig,
    rng: &mut R,
) -> Result<CodeBatch> {
    let dict = state.dict();
    if data.rows() != dict.d() {
        return Err(Error::DimensionMismatch {
            context: "update_codes data rows",
            expected: dict.d(),
            got: data.rows(),
        });
    }
    if data.cols() == 0 {
        return Err(Error::InvalidInput("update_codes: empty batch".into()));
    }
    ensure_finite(data.as_slice(), "update_codes data")?;
    let n = dict.n_atoms();
    let b = data.cols();
    let mut w0 = Mat::zeros(n, b);
    for k in 0..b {
        let g = gaussian_vec(rng, n);
        w0.col_mut(k).copy_from_slice(&g);
    }

    let fit_column = |k: usize| -> Result<CodeFit> {
        let x = data.col(k);
        let mut best = optimize_code(dict, x, w0.col(k), config)?;
        let mut one_hot = vec![0.0; n];
        one_hot[nearest_atom_index(dict, x)] = 1.0;
        let vertex_fit = optimize_code(dict, x, &one_hot, config)?;
        if vertex_fit.objective < best.objective {
            best = vertex_fit;
        }
        let uniform_fit = optimize_code(dict, x, &vec![0.0; n], config)?;
        if uniform_fit.objective < best.objective {
            best = uniform_fit;
        }
        Ok(best)
    };

    #[cfg(feature = "parallel")]
    let fits: Result<Vec<CodeFit>> = (0..b).into_par_iter().map(fit_column).collect();
    #[cfg(not(feature = "parallel"))]
    let fits: Result<Vec<CodeFit>> = (0..b).map(fit_column).collect();
    let fits = fits?;

    let mut w = Mat::zeros(n, b);
    let mut codes = Vec::with_capacity(b);
    for (k, fit) in fits.into_iter().enumerate() {
        w.col_mut(k).copy_from_slice(&fit.logits);
        codes.push(fit.code);
    }
    Ok(CodeBatch { w, codes })
}

/// Best-of-several-restarts code for a single target vector.
///
/// Runs `restarts` descents from seeded Gaussian logits plus two
/// deterministic restarts: one at the one-hot logits of the nearest atom
/// (nearest by `|⟨x, atom⟩|` in quaternion mode, by Euclidean distance
/// otherwise), one at uniform (all-zero) logits. The nearest-atom start
/// guarantees that a target equal to an atom is coded exactly one-hot —
/// gradient descent from a random start gets arbitrarily close to that vertex
/// but must land on it for zero-threshold coverage to make sense. The uniform
/// start activates every atom, and since descent through the sparsemax
/// Jacobian can only shrink the active set, it is the one initialization from
/// which the best support is always reachable — without it, a target between
/// two atoms is found only by a random start that happens to activate both.
pub fn solve_code(
    dict: &Dictionary,
    x: &[f64],
    inner: &InnerConfig,
    restarts: usize,
    seed: u64,
) -> Result<CodeFit> {
    if restarts == 0 {
        return Err(Error::InvalidInput("solve_code needs at least one restart".into()));
    }
    let n = dict.n_atoms();
    let mut best: Option<CodeFit> = None;
    for r in 0..restarts {
        let mut rng = rng_from_seed(derive_seed(seed, r as u64));
        let init = gaussian_vec(&mut rng, n);
        let fit = optimize_code(dict, x, &init, inner)?;
        if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
            best = Some(fit);
        }
    }
    // Deterministic nearest-atom restart.
    let mut init = vec![0.0; n];
    init[nearest_atom_index(dict, x)] = 1.0;
    let fit = optimize_code(dict, x, &init, inner)?;
    if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
        best = Some(fit);
    }
    // Deterministic full-support (uniform) restart.
    let fit = optimize_code(dict, x, &vec![0.0; n], inner)?;
    if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
        best = Some(fit);
    }
    Ok(best.expect("at least one restart ran"))
}

/// Full learning configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    pub mode: Mode,
    pub n_atoms: usize,
    pub batch_size: usize,
    /// Outer iterations `T`.
    pub steps: usize,
    pub momentum: f64,
    pub seed: u64,
    pub inner: InnerConfig,
    pub eps_dead: f64,
    pub joint_label: String,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            mode: Mode::Quaternion,
            n_atoms: 128,
            batch_size: 512,
            steps: 200,
            momentum: 0.9,
            seed: 0,
            inner: InnerConfig::default(),
            eps_dead: 1e-8,
            joint_label: String::new(),
        }
    }
}

/// Learn a dictionary from a `d × M` data matrix (columns are samples).
///
/// `T = config.steps` rounds of: draw a batch of `config.batch_size` columns
/// with replacement, optimize its codes, fold them into the history, sweep
/// the dictionary. Deterministic for a fixed seed and data order.
pub fn learn(data: &Mat, config: &LearnConfig) -> Result<Dictionary> {
    if data.cols() == 0 {
        return Err(Error::InvalidInput("learn: empty data".into()));
    }
    ensure_finite(data.as_slice(), "learn data")?;
    if config.n_atoms == 0 {
        return Err(Error::InvalidInput("learn: need at least one atom".into()));
    }
    if config.batch_size == 0 || config.steps == 0 {
        return Err(Error::InvalidInput("learn: batch size and steps must be positive".into()));
    }
    if config.mode == Mode::Quaternion {
        if data.rows() != 4 {
            return Err(Error::DimensionMismatch {
                context: "quaternion learn data rows",
                expected: 4,
                got: data.rows(),
            });
        }
        for k in 0..data.cols() {
            let c = data.col(k);
            let n = math::norm(c);
            let q = [c[0], c[1], c[2], c[3]];
            if math::abs(n - 1.0) > 1e-9 || q != canonical4(q) {
                return Err(Error::InvalidInput(format!(
                    "quaternion sample {k} is not a canonical unit quaternion"
                )));
            }
        }
    }

    let mut rng = rng_from_seed(config.seed);
    let d = data.rows();
    let dict = Dictionary::random_init(config.mode, d, config.n_atoms, config.joint_label.clone(), &mut rng)?;
    let mut state = LearnerState::init(dict, config.momentum, config.eps_dead)?;

    let mut batch = Mat::zeros(d, config.batch_size);
    for _ in 0..config.steps {
        for k in 0..config.batch_size {
            let idx = rng.random_range(0..data.cols());
            batch.col_mut(k).copy_from_slice(data.col(idx));
        }
        let codes = update_codes(&state, &batch, &config.inner, &mut rng)?;
        state.accumulate_history(&codes, &batch)?;
        state.update_dictionary(&batch, &mut rng)?;
    }

    let mut dict = state.dict;
    dict.provenance = Provenance {
        method: "obdl".into(),
        seed: config.seed,
        batch_size: config.batch_size,
        steps: config.steps,
        momentum: config.momentum,
        inner: config.inner,
        notes: Vec::new(),
    };
    Ok(dict)
}

/// Learn a quaternion dictionary straight from rotation samples.
pub fn learn_quat(data: &[UnitQuaternion], config: &LearnConfig) -> Result<Dictionary> {
    if config.mode != Mode::Quaternion {
        return Err(Error::InvalidInput("learn_quat requires quaternion mode".into()));
    }
    let cols: Vec<Vec<f64>> = data.iter().map(|q| q.components().to_vec()).collect();
    learn(&Mat::from_columns(&cols)?, config)
}
