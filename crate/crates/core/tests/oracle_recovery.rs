//! Construct-then-recover checks on synthetic linear systems.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cckm_core::actuator::Kinematics;
use cckm_core::dataset::{SnapshotMatrices, Variable};
use cckm_core::ident::{fit_cckm_delta, fit_cckm_level, fit_dmdc, FitOptions, TrainingSet};
use cckm_core::surrogate::rollout;

const TOL: f64 = 1e-8;

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Random matrix rescaled to spectral norm `rho`.
fn contraction(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> DMatrix<f64> {
    let a = random(rng, n, n);
    let s = a.clone().svd(false, false).singular_values[0];
    a * (rho / s)
}

fn set_from(z: DMatrix<f64>, zp: DMatrix<f64>, u: DMatrix<f64>) -> TrainingSet {
    TrainingSet::unscaled(Variable::Pressure, SnapshotMatrices { z, zp, u, m: 1 })
}

fn sizes() -> impl Iterator<Item = usize> {
    6..=12
}

#[test]
fn dmdc_recovers_lti_blocks() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in sizes() {
        let d = n + 1;
        let a0 = contraction(&mut rng, d, 0.9);
        let b0 = random(&mut rng, d, 1);
        let k = 4 * (n + 1) + 8;
        let u = random(&mut rng, 1, k);
        let mut z = DMatrix::zeros(d, k);
        let mut zp = DMatrix::zeros(d, k);
        let mut s = random(&mut rng, d, 1).column(0).into_owned();
        for j in 0..k {
            z.set_column(j, &s);
            s = &a0 * &s + &b0 * u[(0, j)];
            zp.set_column(j, &s);
        }
        let kin = Kinematics::rate(1.0);
        let m = fit_dmdc(&set_from(z, zp, u), &kin, &FitOptions::default()).unwrap();
        let (a, b, _) = m.assembled();
        let ea = (&a - &a0).amax();
        let eb = (&b - &b0).amax();
        assert!(ea < TOL && eb < TOL, "n = {n}: |ΔA| = {ea:e}, |ΔB| = {eb:e}");
    }
    assert!(start.elapsed().as_secs_f64() < 1.0, "took {:?}", start.elapsed());
}

/// `p` from the true kinematics, `x' = A_xp p + A_xx x`.
fn level_data(rng: &mut ChaCha8Rng, n: usize, kin: &Kinematics, axp: &DMatrix<f64>, axx: &DMatrix<f64>) -> TrainingSet {
    let k = 4 * (n + 1) + 8;
    let u = random(rng, 1, k);
    let mut z = DMatrix::zeros(n + 1, k);
    let mut zp = DMatrix::zeros(n + 1, k);
    let mut p = rng.random_range(-1.0..1.0);
    let mut x = random(rng, n, 1).column(0).into_owned();
    for j in 0..k {
        z[(0, j)] = p;
        z.view_mut((1, j), (n, 1)).copy_from(&x);
        let p_next = match kin.mode {
            cckm_core::model::ControlMode::Rate => p + kin.dt * u[(0, j)],
            cckm_core::model::ControlMode::Bhp => p + kin.lambda * (u[(0, j)] - p),
        };
        x = axp * p + axx * &x;
        p = p_next;
        zp[(0, j)] = p;
        zp.view_mut((1, j), (n, 1)).copy_from(&x);
    }
    set_from(z, zp, u)
}

#[test]
fn cckm_level_recovers_field_blocks() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let kin = Kinematics::bhp(1.0, 0.5);
    for n in sizes() {
        let axp = random(&mut rng, n, 1);
        let axx = contraction(&mut rng, n, 0.9);
        let set = level_data(&mut rng, n, &kin, &axp, &axx);
        let m = fit_cckm_level(&set, &kin, &FitOptions::default()).unwrap();
        let e = (&m.a_xp - &axp).amax().max((&m.a_xx - &axx).amax());
        assert!(e < TOL, "n = {n}: {e:e}");
        assert_eq!(m.b_x.norm(), 0.0);
        assert_eq!(m.a_pp[(0, 0)], 0.5);
        assert_eq!(m.b_p[(0, 0)], 0.5);
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn cckm_delta_recovers_field_blocks_and_bias() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let kin = Kinematics::rate(1.0);
    for n in sizes() {
        let axp = random(&mut rng, n, 1);
        // I + A_xx contractive
        let axx = contraction(&mut rng, n, 0.9) - DMatrix::identity(n, n);
        let bias = random(&mut rng, n, 1).column(0).into_owned();
        let k = 4 * (n + 2) + 8;
        let u = random(&mut rng, 1, k);
        let mut z = DMatrix::zeros(n + 1, k);
        let mut zp = DMatrix::zeros(n + 1, k);
        let mut p = 0.0;
        let mut x: DVector<f64> = random(&mut rng, n, 1).column(0).into_owned();
        for j in 0..k {
            z[(0, j)] = p;
            z.view_mut((1, j), (n, 1)).copy_from(&x);
            let dp = kin.dt * u[(0, j)];
            x = &x + &axp * dp + &axx * &x + &bias;
            p += dp;
            zp[(0, j)] = p;
            zp.view_mut((1, j), (n, 1)).copy_from(&x);
        }
        let m = fit_cckm_delta(&set_from(z, zp, u), &kin, &FitOptions::default()).unwrap();
        let e = (&m.a_xp - &axp).amax().max((&m.a_xx - &axx).amax()).max((&m.bias - &bias).amax());
        assert!(e < TOL, "n = {n}: {e:e}");
        assert_eq!(m.b_x.norm(), 0.0);
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn dmdc_and_cckm_level_agree_on_coherent_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let kin = Kinematics::bhp(1.0, 0.7);
    for n in [6, 9, 12] {
        let axp = random(&mut rng, n, 1);
        let axx = contraction(&mut rng, n, 0.85);
        let set = level_data(&mut rng, n, &kin, &axp, &axx);
        let dmdc = fit_dmdc(&set, &kin, &FitOptions::default()).unwrap();
        let cckm = fit_cckm_level(&set, &kin, &FitOptions::default()).unwrap();
        let s = &set.matrices;
        let p0 = s.z.column(0).rows(0, 1).into_owned();
        let x0 = s.z.column(0).rows(1, n).into_owned();
        let a = rollout(&dmdc, &p0, &x0, &s.u).unwrap();
        let b = rollout(&cckm, &p0, &x0, &s.u).unwrap();
        let e = (&a.x_pred - &b.x_pred).amax().max((&a.p_pred - &b.p_pred).amax());
        assert!(e < TOL, "n = {n}: {e:e}");
    }
}
