//! Fixed Gauss-Legendre rules used for panel quadrature.
//!
//! Nodes and weights are the standard values for the interval [-1, 1],
//! stated to full double precision.

/// 8-point Gauss-Legendre abscissae (positive half; the rule is symmetric).
const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_80,
    0.525_532_409_916_329_00,
    0.796_666_477_413_626_74,
    0.960_289_856_497_536_23,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_361_98,
    0.313_706_645_877_887_29,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// 16-point Gauss-Legendre abscissae (positive half).
const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_91,
    0.458_016_777_657_227_39,
    0.617_876_244_402_643_75,
    0.755_404_408_355_003_03,
    0.865_631_202_387_831_74,
    0.944_575_023_073_232_58,
    0.989_400_934_991_649_93,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_50,
    0.182_603_415_044_923_59,
    0.169_156_519_395_002_54,
    0.149_595_988_816_576_73,
    0.124_628_971_255_533_87,
    0.095_158_511_682_492_78,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_095,
];

fn sum_panel(x: &[f64], w: &[f64], a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (&xi, &wi) in x.iter().zip(w) {
        acc += wi * (f(mid + half * xi) + f(mid - half * xi));
    }
    acc * half
}

/// Integrate `f` over `[a, b]` with the 8-point rule on a single panel.
pub fn gl8(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    sum_panel(&GL8_X, &GL8_W, a, b, &mut f)
}

/// Integrate `f` over `[a, b]` with the 16-point rule on a single panel.
pub fn gl16(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    sum_panel(&GL16_X, &GL16_W, a, b, &mut f)
}

/// The 16 (node, weight) pairs of the rule on `[a, b]`, for callers that fold
/// quadrature coefficients into precomputed operators.
pub fn gl16_points(a: f64, b: f64) -> [(f64, f64); 16] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 16];
    for (i, (&xi, &wi)) in GL16_X.iter().zip(&GL16_W).enumerate() {
        out[2 * i] = (mid + half * xi, wi * half);
        out[2 * i + 1] = (mid - half * xi, wi * half);
    }
    out
}
