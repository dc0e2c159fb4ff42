//! Reference quadrature used only by unit tests. Deliberately independent of
//! the product-integration weights used by the solver.

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
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (value, err) = gk15(f, a, b);
    // stop at the requested accuracy or once the estimate is at roundoff level
    if err <= tol || err <= 1e-14 * value.abs() || depth == 0 {
        return value;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod 7/15 quadrature. Nodes are interior, so
/// integrable endpoint singularities are handled by bisection.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adapt(&f, a, b, tol, 40)
}

/// Tanh-sinh quadrature on `[a, b]`, for integrands with algebraic endpoint
/// singularities. Points close to `a` are formed without cancellation, so a
/// singular endpoint should be placed at `a`.
pub fn integrate_singular(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    if a == b {
        return 0.0;
    }
    let width = b - a;
    let t_max = 4.5;
    let mut previous = f64::NAN;
    let mut step = 0.5;
    for _ in 0..10 {
        let n = (t_max / step) as i64;
        let mut sum = 0.0;
        for k in -n..=n {
            let t = k as f64 * step;
            let u = FRAC_PI_2 * t.sinh();
            let weight = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
            // fraction of the way from a, and from b
            let from_a = 1.0 / (1.0 + (-2.0 * u).exp());
            let from_b = 1.0 / (1.0 + (2.0 * u).exp());
            let x = if from_a < 0.5 { a + width * from_a } else { b - width * from_b };
            if x <= a || x >= b || weight == 0.0 {
                continue;
            }
            sum += weight * f(x);
        }
        let estimate = 0.5 * width * step * sum;
        if (estimate - previous).abs() <= tol {
            return estimate;
        }
        previous = estimate;
        step *= 0.5;
    }
    previous
}

#[test]
fn integrates_polynomials_and_singularities() {
    assert!((integrate(|x| x * x, 0.0, 3.0, 1e-14) - 9.0).abs() < 1e-12);
    // ∫_0^1 x^{-1/2} dx = 2
    assert!((integrate_singular(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-13) - 2.0).abs() < 1e-12);
    // ∫_0^1 x^{-1/2} (1-x)^{1/2} dx = π/2
    let beta = integrate_singular(|x| (1.0 - x).sqrt() / x.sqrt(), 0.0, 1.0, 1e-13);
    assert!((beta - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}
