//! Field-unit conversions. Everything inside the crate is SI; these
//! helpers are used only where values enter or leave (configs, CSV, reports).

pub const PA_PER_BAR: f64 = 1.0e5;
pub const M2_PER_MILLIDARCY: f64 = 9.869233e-16;
pub const SECONDS_PER_DAY: f64 = 86_400.0;
pub const PA_S_PER_CENTIPOISE: f64 = 1.0e-3;

pub fn bar_to_pa(bar: f64) -> f64 {
    bar * PA_PER_BAR
}

pub fn pa_to_bar(pa: f64) -> f64 {
    pa / PA_PER_BAR
}

pub fn md_to_m2(md: f64) -> f64 {
    md * M2_PER_MILLIDARCY
}

pub fn m2_to_md(m2: f64) -> f64 {
    m2 / M2_PER_MILLIDARCY
}

pub fn days_to_s(days: f64) -> f64 {
    days * SECONDS_PER_DAY
}

pub fn s_to_days(s: f64) -> f64 {
    s / SECONDS_PER_DAY
}

pub fn cp_to_pa_s(cp: f64) -> f64 {
    cp * PA_S_PER_CENTIPOISE
}

/// m³/day → m³/s
pub fn rate_per_day_to_si(q: f64) -> f64 {
    q / SECONDS_PER_DAY
}

/// m³/s → m³/day
pub fn rate_si_to_per_day(q: f64) -> f64 {
    q * SECONDS_PER_DAY
}

/// 1/bar → 1/Pa
pub fn per_bar_to_per_pa(c: f64) -> f64 {
    c / PA_PER_BAR
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants() {
        assert_eq!(bar_to_pa(200.0), 2.0e7);
        assert_eq!(days_to_s(1.0), 86_400.0);
        assert_eq!(cp_to_pa_s(5.0), 5.0e-3);
        assert!((md_to_m2(100.0) - 9.869233e-14).abs() < 1e-28);
    }

    proptest! {
        #[test]
        fn bar_round_trip(bar in -1.0e4f64..1.0e4) {
            let back = pa_to_bar(bar_to_pa(bar));
            prop_assert!((back - bar).abs() <= 1e-12 * bar.abs().max(f64::MIN_POSITIVE));
        }

        #[test]
        fn day_and_rate_round_trip(v in 1.0e-6f64..1.0e6) {
            prop_assert!((s_to_days(days_to_s(v)) - v).abs() <= 1e-12 * v);
            prop_assert!((rate_si_to_per_day(rate_per_day_to_si(v)) - v).abs() <= 1e-12 * v);
        }
    }
}
