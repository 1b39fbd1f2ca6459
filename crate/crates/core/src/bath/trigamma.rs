use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const SWITCH_RADIUS: f64 = 12.0;

// B_2n for n = 1..=8.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Trigamma function `psi(1, z)` for complex `z`.
///
/// Upward recurrence `psi1(z) = 1/z^2 + psi1(z + 1)` until `|z| >= 12`, then the
/// asymptotic series through `B_16`. Arguments in the left half-plane go through
/// the reflection formula first.
pub fn trigamma(z: Complex64) -> Result<Complex64> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("trigamma of non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Err(Error::Domain(format!("trigamma pole at z = {}", z.re)));
    }
    if z.re < 0.0 {
        // psi1(1 - z) + psi1(z) = pi^2 / sin^2(pi z)
        let s = (z * PI).sin();
        return Ok(PI * PI / (s * s) - trigamma_right(Complex64::new(1.0, 0.0) - z));
    }
    Ok(trigamma_right(z))
}

/// Trigamma restricted to `Re z >= 0`, `z != 0`.
pub(crate) fn trigamma_right(mut z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while z.norm() < SWITCH_RADIUS {
        acc += (z * z).inv();
        z += 1.0;
    }
    let w = z.inv();
    let w2 = w * w;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = w2 * w;
    for b in BERNOULLI {
        series += p * b;
        p *= w2;
    }
    acc + w + w2 * 0.5 + series
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
        (a - b).norm() <= rel * b.norm()
    }

    #[test]
    fn classical_values() {
        let one = trigamma(Complex64::new(1.0, 0.0)).unwrap();
        assert!(close(one, Complex64::new(PI * PI / 6.0, 0.0), 1e-14));
        let half = trigamma(Complex64::new(0.5, 0.0)).unwrap();
        assert!(close(half, Complex64::new(PI * PI / 2.0, 0.0), 1e-14));
        // psi1(1/4) = pi^2 + 8 G
        let catalan = 0.915_965_594_177_219_015_054_603_514_932_384_110_774;
        let quarter = trigamma(Complex64::new(0.25, 0.0)).unwrap();
        assert!(close(quarter, Complex64::new(PI * PI + 8.0 * catalan, 0.0), 1e-14));
    }

    #[test]
    fn imaginary_axis_identity() {
        // psi1(iy) + psi1(-iy) = -pi^2 / sinh^2(pi y) - 1 / y^2
        for y in [0.3_f64, 1.0, 2.5, 7.0] {
            let a = trigamma(Complex64::new(0.0, y)).unwrap();
            let b = trigamma(Complex64::new(0.0, -y)).unwrap();
            let expected = -(PI * PI) / (PI * y).sinh().powi(2) - 1.0 / (y * y);
            assert!(((a + b).re - expected).abs() <= 1e-12 * expected.abs());
        }
    }

    #[test]
    fn poles_are_domain_errors() {
        for x in [0.0, -1.0, -7.0] {
            assert!(matches!(
                trigamma(Complex64::new(x, 0.0)),
                Err(Error::Domain(_))
            ));
        }
    }

    proptest! {
        #[test]
        fn recurrence_holds(re in 0.01f64..30.0, im in -30.0f64..30.0) {
            let z = Complex64::new(re, im);
            let lhs = trigamma(z).unwrap() - trigamma(z + 1.0).unwrap();
            let rhs = (z * z).inv();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * trigamma(z).unwrap().norm().max(rhs.norm()));
        }

        #[test]
        fn conjugate_symmetry(re in -20.0f64..20.0, im in 0.01f64..20.0) {
            let z = Complex64::new(re, im);
            let a = trigamma(z.conj()).unwrap();
            let b = trigamma(z).unwrap().conj();
            prop_assert!((a - b).norm() <= 1e-13 * b.norm());
        }
    }
}
