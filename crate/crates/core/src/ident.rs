//! Identification of the four linear surrogates from snapshot data.
//!
//! All fits work on the augmented state `z = [p; x]` with the field `x`
//! standardized by one scalar mean/std pair, so the block structure is the
//! same in physical and model space.
//!
//! | kind        | actuator rows            | field rows                                   |
//! |-------------|--------------------------|----------------------------------------------|
//! | DMDc        | fitted `A_pp, A_px, B_p` | fitted `A_xp, A_xx, B_x`                     |
//! | CCKM level  | kinematics               | `x' = A_xp p + A_xx x`                        |
//! | CCKM Δ      | kinematics               | `x' = x + A_xp Δp + A_xx x + b_x`             |
//! | Hybrid B    | kinematics               | CCKM blocks, same-step input from DMDc `B_x`  |

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::actuator::{actuator_increment, actuator_matrices, Kinematics};
use crate::dataset::{snapshot_matrices, Scaling, SnapshotMatrices, TrajectoryDataset, Variable};
use crate::error::{invalid, Error, Result};

/// Singular values below `rel_tol · σ_max` are discarded.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Dmdc,
    CckmLevel,
    CckmDelta,
    HybridB,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Dmdc, ModelKind::CckmLevel, ModelKind::CckmDelta, ModelKind::HybridB];

    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::Dmdc => "dmdc",
            ModelKind::CckmLevel => "cckm-level",
            ModelKind::CckmDelta => "cckm-delta",
            ModelKind::HybridB => "hybrid-b",
        }
    }

    pub fn from_slug(s: &str) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| k.slug() == s)
    }

    /// True for the kinds whose actuator rows come from the kinematics.
    pub fn is_coherent_actuator(self) -> bool {
        !matches!(self, ModelKind::Dmdc)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.slug())
    }
}

/// Whether the field update is written on actuator levels or increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldForm {
    Level,
    Delta,
}

/// Minimum-norm least-squares solution with its spectrum.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub g: DMatrix<f64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Regressors were identically zero; `g` is zero.
    pub degenerate: bool,
}

/// Solve `min ‖Y - G X‖_F` for `G` with the SVD pseudoinverse of `X`,
/// keeping singular values at or above `rel_tol · σ_max`.
pub fn solve_least_squares(y: &DMatrix<f64>, x: &DMatrix<f64>, rel_tol: f64) -> Result<LeastSquares> {
    if x.ncols() < 1 {
        return Err(invalid("least squares needs at least one sample"));
    }
    if y.ncols() != x.ncols() {
        return Err(Error::Dimension {
            context: "least squares samples",
            expected: format!("{} columns", x.ncols()),
            got: format!("{} columns", y.ncols()),
        });
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid(format!("rel_tol must lie in (0, 1) (got {rel_tol})")));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(invalid("least squares data contains non-finite values"));
    }
    if x.iter().all(|&v| v == 0.0) {
        log::warn!("all regressors are zero; returning G = 0");
        return Ok(LeastSquares {
            g: DMatrix::zeros(y.nrows(), x.nrows()),
            rank: 0,
            singular_values: Vec::new(),
            degenerate: true,
        });
    }
    let svd = SVD::new(x.clone(), true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let s_max = sigma.max();
    let cutoff = rel_tol * s_max;
    let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] >= cutoff && sigma[i] > 0.0).collect();
    // G = Y V Σ⁺ Uᵀ over the kept triplets
    let r = keep.len();
    let mut v_scaled = DMatrix::zeros(x.ncols(), r);
    let mut u_kept = DMatrix::zeros(x.nrows(), r);
    for (c, &i) in keep.iter().enumerate() {
        let inv = 1.0 / sigma[i];
        for row in 0..x.ncols() {
            v_scaled[(row, c)] = v_t[(i, row)] * inv;
        }
        u_kept.set_column(c, &u.column(i));
    }
    let g = (y * v_scaled) * u_kept.transpose();
    let mut singular_values: Vec<f64> = sigma.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    Ok(LeastSquares { g, rank: r, singular_values, degenerate: false })
}

/// Regression summary stored with each fitted model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub rank: usize,
    pub regressors: usize,
    pub samples: usize,
    pub sigma_max: f64,
    pub sigma_min_kept: f64,
    pub degenerate: bool,
}

impl FitSummary {
    fn from_lstsq(ls: &LeastSquares, regressors: usize, samples: usize) -> Self {
        FitSummary {
            rank: ls.rank,
            regressors,
            samples,
            sigma_max: ls.singular_values.first().copied().unwrap_or(0.0),
            sigma_min_kept: if ls.rank > 0 { ls.singular_values[ls.rank - 1] } else { 0.0 },
            degenerate: ls.degenerate,
        }
    }
}

/// Snapshot matrices in model space plus the scaling that produced them.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub variable: Variable,
    pub matrices: SnapshotMatrices,
    pub scaling: Scaling,
    /// Hash of the model-space data; models fitted on the same set share it.
    pub provenance: String,
}

impl TrainingSet {
    /// Standardize the field of `traj` with its own scalar mean/std and
    /// assemble the regression matrices.
    pub fn from_trajectory(traj: &TrajectoryDataset) -> Result<Self> {
        let scaling = Scaling::fit(&traj.x);
        let mut matrices = snapshot_matrices(traj)?;
        let m = matrices.m;
        for z in [&mut matrices.z, &mut matrices.zp] {
            let n = z.nrows() - m;
            let x = scaling.forward(&z.rows(m, n).into_owned());
            z.rows_mut(m, n).copy_from(&x);
        }
        Ok(Self::new(traj.variable, matrices, scaling))
    }

    pub fn new(variable: Variable, matrices: SnapshotMatrices, scaling: Scaling) -> Self {
        let provenance = provenance_hash(variable, &matrices, &scaling);
        TrainingSet { variable, matrices, scaling, provenance }
    }

    /// Matrices already in model space, identity scaling.
    pub fn unscaled(variable: Variable, matrices: SnapshotMatrices) -> Self {
        Self::new(variable, matrices, Scaling::identity())
    }
}

fn provenance_hash(variable: Variable, s: &SnapshotMatrices, scaling: &Scaling) -> String {
    let mut h = Sha256::new();
    h.update(variable.name().as_bytes());
    h.update((s.m as u64).to_le_bytes());
    for m in [&s.z, &s.zp, &s.u] {
        h.update((m.nrows() as u64).to_le_bytes());
        h.update((m.ncols() as u64).to_le_bytes());
        for v in m.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.update(scaling.mean.to_bits().to_le_bytes());
    h.update(scaling.std.to_bits().to_le_bytes());
    h.finalize().iter().take(12).map(|b| format!("{b:02x}")).collect()
}

/// Options shared by all fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub rel_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { rel_tol: DEFAULT_REL_TOL }
    }
}

/// A fitted surrogate. Blocks live in model space (standardized field,
/// SI actuator and control).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub kind: ModelKind,
    pub variable: Variable,
    pub form: FieldForm,
    pub kin: Kinematics,
    pub a_pp: DMatrix<f64>,
    /// Field-to-actuator block; nonzero only for DMDc.
    pub a_px: DMatrix<f64>,
    pub a_xp: DMatrix<f64>,
    pub a_xx: DMatrix<f64>,
    pub b_p: DMatrix<f64>,
    /// Direct same-step control-to-field block ("bottom-B").
    pub b_x: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub scaling: Scaling,
    pub provenance: String,
    pub fit: FitSummary,
}

impl SurrogateModel {
    pub fn actuator_dim(&self) -> usize {
        self.a_pp.nrows()
    }

    pub fn field_dim(&self) -> usize {
        self.a_xx.nrows()
    }

    /// Same-step input path into the field rows of the assembled `B`:
    /// `B_x` for DMDc and Hybrid, `A_xp B_p` for CCKM Δ, zero for CCKM level.
    pub fn field_input_path(&self) -> DMatrix<f64> {
        match (self.kind, self.form) {
            (ModelKind::Dmdc, _) | (ModelKind::HybridB, _) => self.b_x.clone(),
            (ModelKind::CckmDelta, _) => &self.a_xp * &self.b_p,
            (ModelKind::CckmLevel, _) => DMatrix::zeros(self.field_dim(), self.actuator_dim()),
        }
    }

    /// One-step propagator `z' = A z + B u + c` assembled from the blocks.
    pub fn assembled(&self) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let (m, n) = (self.actuator_dim(), self.field_dim());
        let mut a = DMatrix::zeros(m + n, m + n);
        let mut b = DMatrix::zeros(m + n, m);
        let mut c = DVector::zeros(m + n);
        a.view_mut((0, 0), (m, m)).copy_from(&self.a_pp);
        a.view_mut((0, m), (m, n)).copy_from(&self.a_px);
        b.view_mut((0, 0), (m, m)).copy_from(&self.b_p);
        match self.form {
            FieldForm::Level => {
                a.view_mut((m, 0), (n, m)).copy_from(&self.a_xp);
                a.view_mut((m, m), (n, n)).copy_from(&self.a_xx);
            }
            FieldForm::Delta => {
                let eye_m = DMatrix::<f64>::identity(m, m);
                let coupling = &self.a_xp * (&self.a_pp - eye_m);
                a.view_mut((m, 0), (n, m)).copy_from(&coupling);
                let diag = DMatrix::<f64>::identity(n, n) + &self.a_xx;
                a.view_mut((m, m), (n, n)).copy_from(&diag);
                c.rows_mut(m, n).copy_from(&self.bias);
            }
        }
        b.view_mut((m, 0), (n, m)).copy_from(&self.field_input_path());
        (a, b, c)
    }
}

fn check_training(set: &TrainingSet, min_steps: usize) -> Result<()> {
    set.matrices.validate()?;
    if set.matrices.steps() < min_steps {
        return Err(invalid(format!(
            "need at least {min_steps} training transitions (got {})",
            set.matrices.steps()
        )));
    }
    Ok(())
}

fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks[0].ncols();
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// DMDc on the augmented state: `[A | B] = Z' [Z; U]⁺`, every block free.
pub fn fit_dmdc(set: &TrainingSet, kin: &Kinematics, opts: &FitOptions) -> Result<SurrogateModel> {
    check_training(set, 1)?;
    kin.validate()?;
    let s = &set.matrices;
    let (m, n) = (s.m, s.field_dim());
    if kin.m != m {
        return Err(invalid(format!("kinematics dimension {} != actuator rows {m}", kin.m)));
    }
    let regressors = vstack(&[&s.z, &s.u]);
    let ls = solve_least_squares(&s.zp, &regressors, opts.rel_tol)?;
    let g = &ls.g;
    Ok(SurrogateModel {
        kind: ModelKind::Dmdc,
        variable: set.variable,
        form: FieldForm::Level,
        kin: *kin,
        a_pp: g.view((0, 0), (m, m)).into_owned(),
        a_px: g.view((0, m), (m, n)).into_owned(),
        a_xp: g.view((m, 0), (n, m)).into_owned(),
        a_xx: g.view((m, m), (n, n)).into_owned(),
        b_p: g.view((0, m + n), (m, m)).into_owned(),
        b_x: g.view((m, m + n), (n, m)).into_owned(),
        bias: DVector::zeros(n),
        scaling: set.scaling,
        provenance: set.provenance.clone(),
        fit: FitSummary::from_lstsq(&ls, m + n + m, s.steps()),
    })
}

fn coherent_shell(set: &TrainingSet, kin: &Kinematics, kind: ModelKind, form: FieldForm) -> Result<SurrogateModel> {
    kin.validate()?;
    let (m, n) = (set.matrices.m, set.matrices.field_dim());
    if kin.m != m {
        return Err(invalid(format!("kinematics dimension {} != actuator rows {m}", kin.m)));
    }
    let (a_pp, b_p) = actuator_matrices(kin)?;
    Ok(SurrogateModel {
        kind,
        variable: set.variable,
        form,
        kin: *kin,
        a_pp,
        a_px: DMatrix::zeros(m, n),
        a_xp: DMatrix::zeros(n, m),
        a_xx: DMatrix::zeros(n, n),
        b_p,
        b_x: DMatrix::zeros(n, m),
        bias: DVector::zeros(n),
        scaling: set.scaling,
        provenance: set.provenance.clone(),
        fit: FitSummary::default(),
    })
}

/// CCKM level form: actuator rows from the kinematics, field rows
/// `[A_xp | A_xx] = X' [P; X]⁺`. Bottom-B is zero by construction and
/// the field update uses `p_k`, never `p_{k+1}`.
pub fn fit_cckm_level(set: &TrainingSet, kin: &Kinematics, opts: &FitOptions) -> Result<SurrogateModel> {
    check_training(set, 1)?;
    let mut model = coherent_shell(set, kin, ModelKind::CckmLevel, FieldForm::Level)?;
    let s = &set.matrices;
    let (m, n) = (s.m, s.field_dim());
    let ls = solve_least_squares(&s.x_next(), &s.z, opts.rel_tol)?;
    model.a_xp = ls.g.view((0, 0), (n, m)).into_owned();
    model.a_xx = ls.g.view((0, m), (n, n)).into_owned();
    model.fit = FitSummary::from_lstsq(&ls, m + n, s.steps());
    Ok(model)
}

/// Actuator increments `Δp_k` for every training column, from the kinematics.
pub fn kinematic_increments(kin: &Kinematics, p: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(p.nrows(), p.ncols());
    for k in 0..p.ncols() {
        let dp = actuator_increment(kin, &p.column(k).into_owned(), &u.column(k).into_owned())?;
        out.set_column(k, &dp);
    }
    Ok(out)
}

/// CCKM Δ form: `[A_xp | A_xx | b_x] = (X' - X) [ΔP; X; 1]⁺` with `ΔP`
/// taken from the kinematics rather than from differenced data.
pub fn fit_cckm_delta(set: &TrainingSet, kin: &Kinematics, opts: &FitOptions) -> Result<SurrogateModel> {
    check_training(set, 1)?;
    let mut model = coherent_shell(set, kin, ModelKind::CckmDelta, FieldForm::Delta)?;
    let s = &set.matrices;
    let (m, n, k) = (s.m, s.field_dim(), s.steps());
    let x = s.x();
    let dp = kinematic_increments(kin, &s.p(), &s.u)?;
    let ones = DMatrix::from_element(1, k, 1.0);
    let regressors = vstack(&[&dp, &x, &ones]);
    let target = s.x_next() - &x;
    let ls = solve_least_squares(&target, &regressors, opts.rel_tol)?;
    model.a_xp = ls.g.view((0, 0), (n, m)).into_owned();
    model.a_xx = ls.g.view((0, m), (n, n)).into_owned();
    model.bias = ls.g.column(m + n).into_owned();
    model.fit = FitSummary::from_lstsq(&ls, m + n + 1, k);
    Ok(model)
}

fn check_same_data(a: &SurrogateModel, b: &SurrogateModel) -> Result<()> {
    if a.variable != b.variable {
        return Err(Error::Provenance(format!("variables differ ({} vs {})", a.variable, b.variable)));
    }
    if a.provenance != b.provenance {
        return Err(Error::Provenance(format!(
            "training data hashes differ ({} vs {})",
            a.provenance, b.provenance
        )));
    }
    Ok(())
}

/// Hybrid B-only ablation: the CCKM model with its same-step field input
/// replaced by the DMDc bottom-B block.
pub fn fit_hybrid_b(dmdc: &SurrogateModel, cckm: &SurrogateModel) -> Result<SurrogateModel> {
    if dmdc.kind != ModelKind::Dmdc {
        return Err(invalid(format!("hybrid needs a DMDc model (got {})", dmdc.kind)));
    }
    if !matches!(cckm.kind, ModelKind::CckmLevel | ModelKind::CckmDelta) {
        return Err(invalid(format!("hybrid needs a CCKM base model (got {})", cckm.kind)));
    }
    check_same_data(dmdc, cckm)?;
    if dmdc.b_x.shape() != cckm.b_x.shape() {
        return Err(Error::Dimension {
            context: "hybrid bottom-B",
            expected: format!("{:?}", cckm.b_x.shape()),
            got: format!("{:?}", dmdc.b_x.shape()),
        });
    }
    Ok(SurrogateModel {
        kind: ModelKind::HybridB,
        b_x: dmdc.b_x.clone(),
        ..cckm.clone()
    })
}

/// Fitted models for one variable, keyed by kind.
pub fn fit_kinds(
    set: &TrainingSet,
    kin: &Kinematics,
    kinds: &[ModelKind],
    coherent_form: FieldForm,
    opts: &FitOptions,
) -> Result<Vec<SurrogateModel>> {
    let need_dmdc = kinds.iter().any(|k| matches!(k, ModelKind::Dmdc | ModelKind::HybridB));
    let need_level = kinds.contains(&ModelKind::CckmLevel)
        || (kinds.contains(&ModelKind::HybridB) && coherent_form == FieldForm::Level);
    let need_delta = kinds.contains(&ModelKind::CckmDelta)
        || (kinds.contains(&ModelKind::HybridB) && coherent_form == FieldForm::Delta);
    let dmdc = if need_dmdc { Some(fit_dmdc(set, kin, opts)?) } else { None };
    let level = if need_level { Some(fit_cckm_level(set, kin, opts)?) } else { None };
    let delta = if need_delta { Some(fit_cckm_delta(set, kin, opts)?) } else { None };
    let mut out = Vec::new();
    for &kind in kinds {
        let model = match kind {
            ModelKind::Dmdc => dmdc.clone().expect("fitted above"),
            ModelKind::CckmLevel => level.clone().expect("fitted above"),
            ModelKind::CckmDelta => delta.clone().expect("fitted above"),
            ModelKind::HybridB => {
                let base = match coherent_form {
                    FieldForm::Level => level.as_ref(),
                    FieldForm::Delta => delta.as_ref(),
                };
                fit_hybrid_b(dmdc.as_ref().expect("fitted above"), base.expect("fitted above"))?
            }
        };
        out.push(model);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_regression() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(&mut rng, 5, 5);
        let ls = solve_least_squares(&x, &x, 1e-12).unwrap();
        assert!((ls.g - DMatrix::<f64>::identity(5, 5)).amax() < 1e-12);
        assert_eq!(ls.rank, 5);
    }

    #[test]
    fn rank_deficient_consistent_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let basis = random(&mut rng, 6, 3);
        let x = &basis * random(&mut rng, 3, 10);
        let y = &x * 2.0;
        let ls = solve_least_squares(&y, &x, 1e-10).unwrap();
        assert_eq!(ls.rank, 3);
        assert!((&ls.g * &x - &y).amax() < 1e-10);
    }

    #[test]
    fn recovers_random_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g0 = random(&mut rng, 8, 8);
        let x = random(&mut rng, 8, 50);
        let y = &g0 * &x;
        let ls = solve_least_squares(&y, &x, 1e-10).unwrap();
        assert!((ls.g - g0).amax() < 1e-10);
    }

    #[test]
    fn zero_regressors_flagged() {
        let ls = solve_least_squares(&dmatrix![1.0, 2.0], &DMatrix::zeros(3, 2), 1e-10).unwrap();
        assert!(ls.degenerate);
        assert_eq!(ls.g, DMatrix::zeros(1, 3));
    }

    #[test]
    fn bad_arguments() {
        let x = DMatrix::from_element(2, 3, 1.0);
        assert!(solve_least_squares(&DMatrix::zeros(1, 2), &x, 1e-10).is_err());
        assert!(solve_least_squares(&DMatrix::zeros(1, 3), &x, 0.0).is_err());
        assert!(solve_least_squares(&DMatrix::zeros(1, 0), &DMatrix::zeros(2, 0), 1e-3).is_err());
    }

    #[test]
    fn deterministic_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random(&mut rng, 30, 12);
        let y = random(&mut rng, 30, 12);
        let a = solve_least_squares(&y, &x, 1e-10).unwrap();
        let b = solve_least_squares(&y, &x, 1e-10).unwrap();
        assert!(a.g.iter().zip(b.g.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    fn stationary_set(m: usize, n: usize, k: usize) -> TrainingSet {
        let z = DMatrix::from_fn(m + n, k, |i, _| 0.5 + i as f64);
        TrainingSet::unscaled(
            Variable::Pressure,
            SnapshotMatrices { zp: z.clone(), z, u: DMatrix::zeros(m, k), m },
        )
    }

    #[test]
    fn cckm_level_has_zero_bottom_b() {
        let set = stationary_set(1, 4, 6);
        let model = fit_cckm_level(&set, &Kinematics::bhp(1.0, 1.0), &FitOptions::default()).unwrap();
        assert_eq!(model.b_x.norm(), 0.0);
        assert_eq!(model.bias.norm(), 0.0);
        assert_eq!(model.field_input_path().norm(), 0.0);
        let (a_pp, b_p) = actuator_matrices(&model.kin).unwrap();
        assert_eq!(model.a_pp, a_pp);
        assert_eq!(model.b_p, b_p);
    }

    #[test]
    fn stationary_delta_fit_predicts_no_change() {
        let set = stationary_set(1, 4, 6);
        let kin = Kinematics::rate(1.0);
        let model = fit_cckm_delta(&set, &kin, &FitOptions::default()).unwrap();
        let s = &set.matrices;
        let inc = &model.a_xx * s.x() + &model.bias * DMatrix::from_element(1, 6, 1.0);
        assert!(inc.amax() < 1e-10);
        assert_eq!(model.b_x.norm(), 0.0);
    }

    #[test]
    fn hybrid_requires_matching_provenance() {
        let kin = Kinematics::rate(1.0);
        let a = stationary_set(1, 3, 5);
        let mut b = stationary_set(1, 3, 5);
        b.matrices.zp[(1, 0)] += 1.0;
        let b = TrainingSet::new(b.variable, b.matrices, b.scaling);
        let dmdc = fit_dmdc(&a, &kin, &FitOptions::default()).unwrap();
        let cckm = fit_cckm_delta(&b, &kin, &FitOptions::default()).unwrap();
        assert!(matches!(fit_hybrid_b(&dmdc, &cckm), Err(Error::Provenance(_))));
        let cckm_same = fit_cckm_delta(&a, &kin, &FitOptions::default()).unwrap();
        let hyb = fit_hybrid_b(&dmdc, &cckm_same).unwrap();
        assert_eq!(hyb.kind, ModelKind::HybridB);
        assert_eq!(hyb.b_x, dmdc.b_x);
        assert_eq!(hyb.a_xx, cckm_same.a_xx);
        assert!(fit_hybrid_b(&cckm_same, &dmdc).is_err());
    }

    #[test]
    fn hybrid_gain_is_block_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 5;
        let mut cckm = fit_cckm_delta(&stationary_set(1, n, 4), &Kinematics::rate(2.5), &FitOptions::default()).unwrap();
        cckm.a_xp = random(&mut rng, n, 1);
        cckm.a_xx = random(&mut rng, n, n);
        let mut dmdc = cckm.clone();
        dmdc.kind = ModelKind::Dmdc;
        dmdc.b_x = random(&mut rng, n, 1);
        let hyb = fit_hybrid_b(&dmdc, &cckm).unwrap();
        let (_, b_h, _) = hyb.assembled();
        let (_, b_c, _) = cckm.assembled();
        let g = b_h.rows(1, n) - b_c.rows(1, n);
        // oracle: direct block arithmetic B_x^dmdc - A_xp Δt
        for i in 0..n {
            let expect = dmdc.b_x[(i, 0)] - cckm.a_xp[(i, 0)] * 2.5;
            assert!((g[(i, 0)] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn kind_slugs_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(ModelKind::from_slug(k.slug()), Some(k));
        }
        assert_eq!(ModelKind::from_slug("bogus"), None);
    }
}
