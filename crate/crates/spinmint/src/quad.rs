//! Numerical quadrature kernels.
//!
//! The spectral overlap integrals at the heart of the gate-fidelity model mix
//! a sharply peaked photon spectrum with cavity reflection features living on
//! very different frequency scales, so the workhorse here is a globally
//! adaptive Gauss–Kronrod G7/K15 rule with caller-supplied breakpoints that
//! pre-split the interval around known structure.  Gauss–Hermite rules (for
//! Gaussian spectral-diffusion averages) and Gauss–Legendre rules (for sphere
//! quadrature of phonon emission patterns) are generated on the fly via the
//! classical Golub–Welsch / Newton constructions.  A composite trapezoid rule
//! is kept around as an intentionally simple cross-check oracle.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// 15-point Kronrod abscissae on `[-1, 1]` (positive half, descending).
#[allow(clippy::excessive_precision)] // canonical tabulated values
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

/// 15-point Kronrod weights matching [`XGK`].
#[allow(clippy::excessive_precision)] // canonical tabulated values
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Embedded 7-point Gauss weights (nodes are `XGK[1], XGK[3], XGK[5], XGK[7]`).
#[allow(clippy::excessive_precision)] // canonical tabulated values
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Hard cap on adaptive subdivisions before declaring non-convergence.
const MAX_SEGMENTS: usize = 4096;

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

/// Single G7/K15 panel on `[a, b]`: returns the K15 estimate and a scaled
/// error estimate following the classic QUADPACK heuristic.
fn gk15_panel(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut result_kronrod = WGK[7] * fc;
    let mut result_gauss = WG[3] * fc;
    // Average magnitude accumulator for the error rescaling.
    let mut result_abs = WGK[7] * fc.norm();

    let mut fv = [Complex64::default(); 14];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        let sum = f1 + f2;
        result_kronrod += WGK[j] * sum;
        result_abs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * sum;
        }
    }

    let mean = result_kronrod * 0.5;
    let mut result_asc = WGK[7] * (fc - mean).norm();
    for (j, pair) in fv.chunks_exact(2).enumerate() {
        result_asc += WGK[j] * ((pair[0] - mean).norm() + (pair[1] - mean).norm());
    }

    let value = result_kronrod * half;
    let result_abs = result_abs * half.abs();
    let result_asc = result_asc * half.abs();
    let mut err = ((result_kronrod - result_gauss) * half).norm();
    if result_asc != 0.0 && err != 0.0 {
        err = result_asc * (200.0 * err / result_asc).powf(1.5).min(1.0);
    }
    let round_off = 50.0 * f64::EPSILON * result_abs;
    if round_off > err {
        err = round_off;
    }
    (value, err)
}

/// Globally adaptive complex-valued integral of `f` over `[a, b]`.
///
/// `breakpoints` seeds the initial segmentation (values outside `(a, b)` are
/// ignored); supplying the locations of sharp features avoids the classic
/// failure mode where a coarse first panel straddles and misses a narrow peak.
/// Subdivision continues until the summed error estimate drops below
/// `max(abs_tol, rel_tol * |integral|)`.
pub fn adaptive_complex(
    mut f: impl FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Complex64> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::numerics(format!(
            "invalid integration interval [{a}, {b}]"
        )));
    }

    let mut edges: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    edges.push(a);
    edges.push(b);
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    edges.dedup();

    let mut segments: Vec<Segment> = Vec::with_capacity(edges.len() + 64);
    for w in edges.windows(2) {
        let (value, error) = gk15_panel(&mut f, w[0], w[1]);
        segments.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }

    let min_width = (b - a) * 1e-14;
    loop {
        let mut total = Complex64::default();
        let mut total_err = 0.0;
        let mut worst = 0usize;
        let mut worst_err = -1.0;
        for (i, s) in segments.iter().enumerate() {
            total += s.value;
            total_err += s.error;
            if s.error > worst_err {
                worst_err = s.error;
                worst = i;
            }
        }

        let target = abs_tol.max(rel_tol * total.norm());
        if total_err <= target {
            return Ok(total);
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::numerics(format!(
                "adaptive quadrature failed to converge: {} segments, error {total_err:.3e} > target {target:.3e}",
                segments.len()
            )));
        }

        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if seg.b - seg.a < min_width {
            return Err(Error::numerics(format!(
                "adaptive quadrature stalled on interval [{:.6e}, {:.6e}] with error {:.3e}",
                seg.a, seg.b, seg.error
            )));
        }
        let (v1, e1) = gk15_panel(&mut f, seg.a, mid);
        let (v2, e2) = gk15_panel(&mut f, mid, seg.b);
        segments[worst] = Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        };
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
}

/// Real-valued wrapper around [`adaptive_complex`].
pub fn adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    adaptive_complex(
        |x| Complex64::new(f(x), 0.0),
        a,
        b,
        breakpoints,
        rel_tol,
        abs_tol,
    )
    .map(|v| v.re)
}

/// Composite trapezoid rule with `n` panels; deliberately naive so it can act
/// as an independent oracle for the adaptive rule in tests.
pub fn trapezoid_complex(mut f: impl FnMut(f64) -> Complex64, a: f64, b: f64, n: usize) -> Complex64 {
    assert!(n >= 1 && b > a);
    let h = (b - a) / n as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for i in 1..n {
        sum += f(a + h * i as f64);
    }
    sum * h
}

/// Real-valued composite trapezoid rule (oracle use).
pub fn trapezoid(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    trapezoid_complex(|x| Complex64::new(f(x), 0.0), a, b, n).re
}

/// Gauss–Hermite rule of order `n`: nodes `x_i` and weights `w_i` such that
/// `∫ e^{-x²} f(x) dx ≈ Σ w_i f(x_i)` (physicists' convention).
///
/// Built by the Golub–Welsch algorithm: eigen-decomposition of the symmetric
/// tridiagonal Jacobi matrix with off-diagonals `√(k/2)`.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::numerics("Gauss-Hermite order must be positive"));
    }
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let beta = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = beta;
        jacobi[(k, k - 1)] = beta;
    }
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (node, sqrt_pi * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    Ok(pairs.into_iter().unzip())
}

/// Gauss–Legendre rule of order `n` on `[-1, 1]`: `∫ f ≈ Σ w_i f(x_i)`.
///
/// Nodes are the roots of the Legendre polynomial `P_n`, located by Newton
/// iteration from the Chebyshev-like initial guess; weights are
/// `2 / ((1 - x²) P_n'(x)²)`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
