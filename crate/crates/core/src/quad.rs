//! Fixed and adaptive quadrature rules shared by the bath, Volterra, Redfield and
//! mean-force code.

use num_complex::Complex64;

use crate::error::{Error, Result};

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Weights of the embedded 7-point Gauss rule, at GK15_NODES[1], [3], [5], [7].
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 8-point Gauss–Legendre nodes on [-1, 1] (positive half).
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Nodes and weights of the 8-point Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_8(a: f64, b: f64) -> [(f64, f64); 8] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 8];
    for i in 0..4 {
        out[2 * i] = (c - h * GL8_NODES[i], h * GL8_WEIGHTS[i]);
        out[2 * i + 1] = (c + h * GL8_NODES[i], h * GL8_WEIGHTS[i]);
    }
    out
}

/// Integral of `f` over `[a, b]` with the fixed 8-point Gauss–Legendre rule.
pub fn gl8<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64) -> Complex64 {
    gauss_legendre_8(a, b)
        .iter()
        .map(|&(x, w)| f(x) * w)
        .sum()
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * GK15_WEIGHTS[7];
    let mut gauss = fc * G7_WEIGHTS[3];
    for i in 0..7 {
        let dx = h * GK15_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += pair * GK15_WEIGHTS[i];
        if i % 2 == 1 {
            gauss += pair * G7_WEIGHTS[i / 2];
        }
    }
    Panel {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).norm(),
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of a complex-valued integrand.
///
/// Subdivides the panel with the largest error estimate until the summed estimate
/// is below `max(abs_tol, rel_tol * |I|)`. Running out of subdivisions is an error,
/// never a silently inaccurate value.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    integrate_panels(f, &[a, b], abs_tol, rel_tol, max_panels)
}

/// Like [`integrate`], but starting from the panels delimited by `breaks`
/// (strictly increasing). `max_panels` counts panels beyond the initial ones.
pub fn integrate_panels<F: Fn(f64) -> Complex64>(
    f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    let mut panels: Vec<Panel> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    if panels.is_empty() {
        return Ok(QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            evaluations: 0,
        });
    }
    let limit = panels.len() + max_panels;
    let mut evaluations = 15 * panels.len();
    let mut value: Complex64 = panels.iter().map(|p| p.value).sum();
    let mut error: f64 = panels.iter().map(|p| p.error).sum();
    loop {
        let tolerance = abs_tol.max(rel_tol * value.norm());
        if error <= tolerance {
            let value = panels.iter().map(|p| p.value).sum();
            let error = panels.iter().map(|p| p.error).sum();
            return Ok(QuadResult {
                value,
                error,
                evaluations,
            });
        }
        if panels.len() >= limit {
            return Err(Error::QuadratureNotConverged {
                estimate: error,
                tolerance,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::QuadratureNotConverged {
                estimate: error,
                tolerance,
            });
        }
        let left = gk15(&f, p.a, mid);
        let right = gk15(&f, mid, p.b);
        value += left.value + right.value - p.value;
        error += left.error + right.error - p.error;
        panels.push(left);
        panels.push(right);
        evaluations += 30;
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    integrate(
        |x| Complex64::new(f(x), 0.0),
        a,
        b,
        abs_tol,
        rel_tol,
        max_panels,
    )
    .map(|r| r.value.re)
}
