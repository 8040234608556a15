use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cckm_core::actuator::{actuator_series, Kinematics};
use cckm_core::dataset::{Scaling, Variable};
use cckm_core::ident::{FieldForm, FitSummary, ModelKind, SurrogateModel};
use cckm_core::model::ControlMode;
use cckm_core::surrogate::{rollout, same_step_gain};

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Hand-written actuator blocks (rate: `p' = p + dt u`; BHP: `p' = (1-λ)p + λu`).
fn actuator_blocks(kin: &Kinematics) -> (f64, f64) {
    match kin.mode {
        ControlMode::Rate => (1.0, kin.dt),
        ControlMode::Bhp => (1.0 - kin.lambda, kin.lambda),
    }
}

fn random_delta_model(rng: &mut ChaCha8Rng, kin: Kinematics, n: usize) -> SurrogateModel {
    let (app, bp) = actuator_blocks(&kin);
    let mut axx = random(rng, n, n) * (0.4 / n as f64);
    for i in 0..n {
        axx[(i, i)] -= 0.3;
    }
    SurrogateModel {
        kind: ModelKind::CckmDelta,
        variable: Variable::Saturation,
        form: FieldForm::Delta,
        kin,
        a_pp: DMatrix::from_element(1, 1, app),
        a_px: DMatrix::zeros(1, n),
        a_xp: random(rng, n, 1),
        a_xx: axx,
        b_p: DMatrix::from_element(1, 1, bp),
        b_x: DMatrix::zeros(n, 1),
        bias: random(rng, n, 1).column(0).into_owned(),
        scaling: Scaling::identity(),
        provenance: "synthetic".into(),
        fit: FitSummary::default(),
    }
}

/// Independent assembly of the full augmented Δ-form update
/// `z' = [[A_pp, 0], [A_xp(A_pp - I), I + A_xx]] z + [B_p; A_xp B_p] u + [0; b]`.
fn oracle_step(m: &SurrogateModel, z: &DVector<f64>, u: f64) -> DVector<f64> {
    let n = m.a_xx.nrows();
    let (app, bp) = actuator_blocks(&m.kin);
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a[(0, 0)] = app;
    for i in 0..n {
        a[(i + 1, 0)] = m.a_xp[(i, 0)] * (app - 1.0);
        for j in 0..n {
            a[(i + 1, j + 1)] = m.a_xx[(i, j)] + if i == j { 1.0 } else { 0.0 };
        }
    }
    let mut b = DVector::zeros(n + 1);
    b[0] = bp;
    let mut c = DVector::zeros(n + 1);
    for i in 0..n {
        b[i + 1] = m.a_xp[(i, 0)] * bp;
        c[i + 1] = m.bias[i];
    }
    a * z + b * u + c
}

#[test]
fn incremental_and_assembled_forms_agree_over_100_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kins = [Kinematics::rate(1.0), Kinematics::rate(86400.0 / 1e4), Kinematics::bhp(1.0, 1.0), Kinematics::bhp(1.0, 0.35)];
    for (t, kin) in kins.into_iter().enumerate() {
        for n in [4, 9, 16] {
            let model = random_delta_model(&mut rng, kin, n);
            let steps = 100;
            let u = random(&mut rng, 1, steps);
            let p0 = DVector::from_element(1, rng.random_range(-1.0..1.0));
            let x0: DVector<f64> = random(&mut rng, n, 1).column(0).into_owned();
            let r = rollout(&model, &p0, &x0, &u).unwrap();

            let mut z = DVector::zeros(n + 1);
            z[0] = p0[0];
            z.rows_mut(1, n).copy_from(&x0);
            for k in 1..=steps {
                z = oracle_step(&model, &z, u[(0, k - 1)]);
                let scale = z.amax().max(1.0);
                let ep = (r.p_pred[(0, k)] - z[0]).abs() / scale;
                let ex = (r.x_pred.column(k) - z.rows(1, n)).amax() / scale;
                assert!(ep <= 1e-12 && ex <= 1e-12, "kin {t}, n {n}, step {k}: {ep:e} {ex:e}");
            }

            // the model's own assembled matrices match the oracle blocks
            let (a, b, c) = model.assembled();
            let probe: DVector<f64> = random(&mut rng, n + 1, 1).column(0).into_owned();
            let uu = rng.random_range(-1.0..1.0);
            let lhs = &a * &probe + &b * uu + &c;
            let rhs = oracle_step(&model, &probe, uu);
            assert!((lhs - &rhs).amax() <= 1e-12 * rhs.amax().max(1.0));
        }
    }
}

#[test]
fn coherent_actuator_channel_is_the_kinematic_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let kin = Kinematics::rate(2.5);
    let model = random_delta_model(&mut rng, kin, 6);
    let u = random(&mut rng, 1, 40);
    let p0 = DVector::from_element(1, 3.0);
    let r = rollout(&model, &p0, &DVector::zeros(6), &u).unwrap();
    assert_eq!(r.p_pred, actuator_series(&kin, &p0, &u).unwrap());
}

#[test]
fn gain_diagnostics_are_block_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let kin = Kinematics::rate(1.0);
    let cckm = random_delta_model(&mut rng, kin, 5);
    let mut dmdc = cckm.clone();
    dmdc.kind = ModelKind::Dmdc;
    dmdc.form = FieldForm::Level;
    dmdc.b_x = random(&mut rng, 5, 1);
    let g = same_step_gain(&dmdc, &cckm).unwrap();
    let coherent = &cckm.a_xp * &cckm.b_p;
    assert_eq!(g.norm_bottom_b, dmdc.b_x.norm());
    assert_eq!(g.norm_coherent_path, coherent.norm());
    assert_eq!(g.norm_g, (&dmdc.b_x - &coherent).norm());

    dmdc.b_x.fill(0.0);
    let g = same_step_gain(&dmdc, &cckm).unwrap();
    assert_eq!(g.norm_g, g.norm_coherent_path);
}
