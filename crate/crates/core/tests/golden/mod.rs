//! I(V) values computed at 50 significant digits by `oracles/device_iv.py`,
//! rounded to 20 digits.

#![allow(dead_code, clippy::excessive_precision)]

/// Voltages -5, -4.5, ..., 5.
pub fn grid() -> Vec<f64> {
    (0..21).map(|k| -5.0 + 0.5 * k as f64).collect()
}

/// b = 0.5 V.
pub const REFERENCE_IV: [f64; 21] = [
    -0.18190298830574246113,
    -0.16402833637604503718,
    -0.14608451330896239937,
    -0.12806894470375035442,
    -0.10997942338812654716,
    -0.09181449859873189974,
    -0.073574091953843982635,
    -0.055260565272946925166,
    -0.036880707308910174896,
    -0.018449719704379877444,
    0.0,
    0.018396926701395949767,
    0.036565021841706234362,
    0.053967354730831194702,
    0.068061682221628133829,
    0.052358106126427623893,
    0.028043131646450885124,
    0.026616216378922630333,
    0.028361027436810244377,
    0.031149503834777248421,
    0.034508144842164791932,
];

/// b = 5.0 V.
pub const AMPLIFIED_IV: [f64; 21] = [
    -0.18190427548372368528,
    -0.16402898756167848457,
    -0.14608484270478860862,
    -0.12806911129702503472,
    -0.10997950761661189869,
    -0.091814541149270660782,
    -0.073574113392244078791,
    -0.055260575968881321101,
    -0.036880712441963646143,
    -0.018449721766099339008,
    0.0,
    0.018396928739765676215,
    0.036565026842403652868,
    0.053967364887007522687,
    0.068061701171019195182,
    0.052358126561530860049,
    0.028043141998075932876,
    0.026616227164674737998,
    0.028361041828423998958,
    0.031149525274539232901,
    0.034508178823877955043,
];

pub const Q_OVER_KT_300: f64 = 38.681727071833608687;
pub const ALPHA_REFERENCE: f64 = 15.960080589838546944;
pub const ALPHA_AMPLIFIED: f64 = 190.02785241308978604;
pub const ETA: f64 = 1.3615967929285430258;
pub const GAMMA: f64 = 0.11991335392268418693;

/// Tunnel term at +-0.1 V for b = 0.5 V (the term is not odd).
pub const TUNNEL_REFERENCE_PLUS: f64 = 0.0032443174014815214397;
pub const TUNNEL_REFERENCE_MINUS: f64 = -0.0032514244640286305811;
/// Tunnel and resonant terms at 5 V for b = 5.0 V.
pub const TUNNEL_AMPLIFIED_5: f64 = 0.0043653834533449003721;
pub const RESONANT_5: f64 = 0.030142795370533054671;

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
