mod golden;

use golden::*;
use rtd_rc::device::{default_params, reference_params, thermal_inverse_voltage, DeviceParams};

const TOL: f64 = 1e-10;

fn check_table(p: &DeviceParams<f64>, table: &[f64; 21]) {
    for (v, want) in grid().into_iter().zip(table) {
        let got = p.total_current(v);
        if *want == 0.0 {
            assert!(got.abs() <= 1e-15, "I(0) = {got:e}");
        } else {
            assert!(rel_err(got, *want) < TOL, "V = {v}: {got} vs {want}");
        }
    }
}

#[test]
fn reference_table() {
    check_table(&reference_params(), &REFERENCE_IV);
}

#[test]
fn amplified_table() {
    check_table(&default_params(), &AMPLIFIED_IV);
}

#[test]
fn derived_constants() {
    assert!(rel_err(thermal_inverse_voltage(300.0), Q_OVER_KT_300) < 1e-14);
    let r = reference_params::<f64>().derive();
    assert!(rel_err(r.alpha, ALPHA_REFERENCE) < 1e-13);
    assert!(rel_err(r.eta, ETA) < 1e-13);
    assert!(rel_err(r.gamma, GAMMA) < 1e-13);
    let a = default_params::<f64>().derive();
    assert!(rel_err(a.alpha, ALPHA_AMPLIFIED) < 1e-13);
}

#[test]
fn component_currents() {
    let r = reference_params::<f64>();
    assert!(rel_err(r.tunnel_current(0.1), TUNNEL_REFERENCE_PLUS) < TOL);
    assert!(rel_err(r.tunnel_current(-0.1), TUNNEL_REFERENCE_MINUS) < TOL);
    let a = default_params::<f64>();
    assert!(rel_err(a.tunnel_current(5.0), TUNNEL_AMPLIFIED_5) < TOL);
    assert!(rel_err(a.resonant_current(5.0), RESONANT_5) < TOL);
}

#[test]
fn single_precision_tracks_golden() {
    let p = default_params::<f32>();
    for (v, want) in grid().into_iter().zip(AMPLIFIED_IV) {
        let got = p.total_current(v as f32) as f64;
        assert!(
            (got - want).abs() <= 1e-5 * want.abs().max(1e-3),
            "V = {v}: {got} vs {want}"
        );
    }
}
