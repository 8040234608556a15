use cckm_core::model::{build_model, ControlMode, ControlSchedule, ModelOverrides, ReservoirModel, WellSpec};
use cckm_core::simulator::{simulate, step_impes, SimState, SimulationResult};
use cckm_core::units;

const FLOOR_M3: f64 = 1.0;

fn rate_schedule(rates_per_day: &[f64], dt_days: f64) -> ControlSchedule {
    ControlSchedule {
        mode: ControlMode::Rate,
        dt: units::days_to_s(dt_days),
        u: rates_per_day.iter().map(|&q| units::rate_per_day_to_si(q)).collect(),
    }
}

fn bhp_schedule(bhp_bar: &[f64], dt_days: f64) -> ControlSchedule {
    ControlSchedule {
        mode: ControlMode::Bhp,
        dt: units::days_to_s(dt_days),
        u: bhp_bar.iter().map(|&b| units::bar_to_pa(b)).collect(),
    }
}

fn injector(nx: usize) -> (ReservoirModel, WellSpec) {
    let model = build_model(nx, &ModelOverrides { sw_init: Some(0.0), ..Default::default() }).unwrap();
    let well = WellSpec::centered(&model, ControlMode::Rate);
    (model, well)
}

fn producer(nx: usize) -> (ReservoirModel, WellSpec) {
    let model = build_model(nx, &ModelOverrides { sw_init: Some(0.5), ..Default::default() }).unwrap();
    let well = WellSpec::centered(&model, ControlMode::Bhp);
    (model, well)
}

/// Shut-in / restart injection and a two-level BHP drawdown.
fn runs(nx: usize) -> Vec<SimulationResult> {
    let mut rates = vec![50.0; 12];
    rates.extend([0.0; 6]);
    rates.extend([5000.0; 12]);
    let (m, w) = injector(nx);
    let a = simulate(&m, &w, &rate_schedule(&rates, 1.0)).unwrap();
    let mut bhp = vec![110.0; 10];
    bhp.extend([20.0; 10]);
    let (m, w) = producer(nx);
    let b = simulate(&m, &w, &bhp_schedule(&bhp, 1.0)).unwrap();
    vec![a, b]
}

/// Max relative deviation of `field` from its images under the 90° rotation
/// and both mirror reflections of the square grid.
fn asymmetry(field: &[f64], nx: usize) -> f64 {
    let at = |i: usize, j: usize| field[j * nx + i];
    let scale = field.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst = 0.0f64;
    for j in 0..nx {
        for i in 0..nx {
            let v = at(i, j);
            for w in [at(nx - 1 - j, i), at(nx - 1 - i, j), at(i, nx - 1 - j), at(j, i)] {
                worst = worst.max((v - w).abs() / scale);
            }
        }
    }
    worst
}

#[test]
fn pressure_has_fourfold_symmetry() {
    for nx in [11, 21] {
        for run in runs(nx) {
            for k in 0..run.pressure.x.ncols() {
                let col: Vec<f64> = run.pressure.x.column(k).iter().copied().collect();
                let a = asymmetry(&col, nx);
                assert!(a <= 1e-10, "nx {nx} snapshot {k}: pressure asymmetry {a:e}");
            }
        }
    }
}

#[test]
fn saturation_has_fourfold_symmetry() {
    for run in runs(11) {
        let last = run.saturation.x.ncols() - 1;
        let col: Vec<f64> = run.saturation.x.column(last).iter().copied().collect();
        assert!(asymmetry(&col, 11) <= 1e-10);
    }
}

#[test]
fn mass_balance_every_step() {
    for run in runs(21) {
        for (k, b) in run.balances.iter().enumerate() {
            let r = b.relative_residual(FLOOR_M3);
            assert!(r <= 1e-8, "step {k}: residual {r:e} ({b:?})");
        }
    }
}

#[test]
fn single_step_storage_matches_injected_volume() {
    let (model, well) = injector(21);
    let dt = units::days_to_s(1.0);
    let q = units::rate_per_day_to_si(500.0);
    let s0 = SimState::initial(&model, &well);
    let s1 = step_impes(&s0, &model, &well, q, dt).unwrap();
    // oracle: Σ φ V c_t (p' - p), assembled from the model parameters directly
    let g = &model.grid;
    let v_cell = (g.lx / g.nx as f64) * (g.ly / g.nx as f64) * g.h;
    let stored: f64 = s1
        .p
        .iter()
        .zip(&s0.p)
        .map(|(a, b)| model.props.porosity * v_cell * model.props.c_t * (a - b))
        .sum();
    let rel = (stored - q * dt).abs() / (q * dt);
    assert!(rel <= 1e-8, "relative storage error {rel:e}");
}

#[test]
fn saturation_stays_in_unit_interval() {
    for run in runs(21) {
        assert!(run.saturation.x.iter().all(|&s| (0.0..=1.0).contains(&s)));
    }
}

#[test]
fn zero_control_is_an_exact_fixed_point() {
    let (model, well) = injector(11);
    let run = simulate(&model, &well, &rate_schedule(&[0.0; 8], 1.0)).unwrap();
    for k in 0..run.pressure.x.ncols() {
        assert_eq!(run.pressure.x.column(k), run.pressure.x.column(0));
        assert_eq!(run.saturation.x.column(k), run.saturation.x.column(0));
    }
    assert!(run.pressure.p.iter().all(|&v| v == 0.0));

    // BHP held at the reservoir pressure: no drawdown, no flow
    let (model, well) = producer(11);
    let run = simulate(&model, &well, &bhp_schedule(&[200.0; 8], 1.0)).unwrap();
    for k in 0..run.pressure.x.ncols() {
        assert_eq!(run.pressure.x.column(k), run.pressure.x.column(0));
        assert_eq!(run.saturation.x.column(k), run.saturation.x.column(0));
    }
}

#[test]
fn producer_mean_pressure_never_increases() {
    let (model, well) = producer(21);
    let run = simulate(&model, &well, &bhp_schedule(&[110.0; 30], 1.0)).unwrap();
    let means: Vec<f64> = (0..run.pressure.x.ncols()).map(|k| run.pressure.x.column(k).mean()).collect();
    for w in means.windows(2) {
        assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
    }
    assert!(means.last().unwrap() < &means[0]);
}

#[test]
fn datasets_have_one_more_snapshot_than_steps() {
    let (model, well) = injector(5);
    let run = simulate(&model, &well, &rate_schedule(&[10.0; 7], 1.0)).unwrap();
    for t in [&run.pressure, &run.saturation] {
        assert_eq!(t.x.ncols(), 8);
        assert_eq!(t.p.ncols(), 8);
        assert_eq!(t.u.ncols(), 7);
    }
    assert_eq!(run.pressure.p, run.saturation.p);
}

fn final_fields(dt_days: f64, horizon_days: f64) -> (Vec<f64>, Vec<f64>) {
    let (model, well) = injector(11);
    let steps = (horizon_days / dt_days).round() as usize;
    let run = simulate(&model, &well, &rate_schedule(&vec![2000.0; steps], dt_days)).unwrap();
    let last = run.pressure.x.ncols() - 1;
    (
        run.pressure.x.column(last).iter().copied().collect(),
        run.saturation.x.column(last).iter().copied().collect(),
    )
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn halving_dt_converges_at_first_order() {
    let horizon = 8.0;
    let coarse = final_fields(2.0, horizon);
    let mid = final_fields(1.0, horizon);
    let fine = final_fields(0.5, horizon);
    for (name, c, m, f) in [("pressure", &coarse.0, &mid.0, &fine.0), ("saturation", &coarse.1, &mid.1, &fine.1)] {
        let ratio = dist(c, m) / dist(m, f);
        assert!((1.5..=2.5).contains(&ratio), "{name}: refinement ratio {ratio}");
    }
}
