//! Independent numerical oracles shared by the unit tests.

/// Adaptive Gauss–Kronrod (7/15) quadrature on `[a, b]` with relative tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (whole, err) = gk15(f, a, b);
    refine(f, a, b, whole, err, rel_tol, 40)
}

fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, err: f64, tol: f64, depth: u32) -> f64 {
    if depth == 0 || err <= tol * whole.abs() || err < 1e-300 {
        return whole;
    }
    let m = 0.5 * (a + b);
    let (l, le) = gk15(f, a, m);
    let (r, re) = gk15(f, m, b);
    if (le + re) <= tol * (l + r).abs() {
        return l + r;
    }
    refine(f, a, m, l, le, tol, depth - 1) + refine(f, m, b, r, re, tol, depth - 1)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integral over `(0, ∞)` through the substitution `w = e^u` on a wide window.
pub fn integrate_positive<F: Fn(f64) -> f64>(f: &F, rel_tol: f64) -> f64 {
    let g = |u: f64| {
        let w = u.exp();
        f(w) * w
    };
    let mut total = 0.0;
    let knots: Vec<f64> = (-60..=12).map(|k| k as f64).collect();
    for win in knots.windows(2) {
        total += integrate(&g, win[0], win[1], rel_tol);
    }
    total
}
