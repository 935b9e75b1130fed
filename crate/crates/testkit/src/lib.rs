//! Reference oracles for the `equicorr` test suites.
//!
//! Nothing in here shares code with the library under test: the
//! Marchenko-Pastur density is re-derived from its defining formula, CDF
//! values come from adaptive quadrature, and the matrix and CPV checks use
//! brute-force enumeration.

#![allow(clippy::excessive_precision)]

use std::f64::consts::{FRAC_PI_2, PI};

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over `[lo, hi]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `abs_tol` or `max_intervals` is reached.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, abs_tol: f64) -> f64 {
    const MAX_INTERVALS: usize = 4000;
    if hi <= lo {
        return 0.0;
    }
    let (v, e) = gk15(&f, lo, hi);
    let mut parts = vec![(lo, hi, v, e)];
    loop {
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol || parts.len() >= MAX_INTERVALS {
            break;
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.total_cmp(&b.1 .3))
            .unwrap();
        let (l, h, _, _) = parts.swap_remove(idx);
        let m = 0.5 * (l + h);
        let (v1, e1) = gk15(&f, l, m);
        let (v2, e2) = gk15(&f, m, h);
        parts.push((l, m, v1, e1));
        parts.push((m, h, v2, e2));
    }
    // sum small-to-large for a little extra accuracy
    let mut vals: Vec<f64> = parts.iter().map(|p| p.2).collect();
    vals.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    vals.iter().sum()
}

/// Support edges of the unit-scale Marchenko-Pastur law with index `c`.
pub fn mp_edges(c: f64) -> (f64, f64) {
    let s = c.sqrt();
    ((1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s))
}

/// Continuous-part density of the Marchenko-Pastur law with index `c` and
/// scale `sigma2`, straight from its defining formula.
pub fn mp_density(c: f64, sigma2: f64, x: f64) -> f64 {
    let (a1, b1) = mp_edges(c);
    let (a, b) = (a1 * sigma2, b1 * sigma2);
    if x <= a || x >= b || x <= 0.0 {
        return 0.0;
    }
    ((b - x) * (x - a)).sqrt() / (2.0 * PI * c * sigma2 * x)
}

/// Density of `F_{c,1}` times `weight`, expressed in the angle variable
/// `x = a + (b - a) sin^2(theta)`; the change of variables removes the
/// square-root singularities at both support edges.
fn angle_integrand<W: Fn(f64) -> f64>(c: f64, weight: W) -> impl Fn(f64) -> f64 {
    let (a, b) = mp_edges(c);
    move |th: f64| {
        let (s, co) = th.sin_cos();
        let lam = a + (b - a) * s * s;
        if lam <= 0.0 {
            return 0.0;
        }
        let jac = 2.0 * (b - a) * s * co;
        let root = (b - a) * s * co; // sqrt((b - lam)(lam - a))
        weight(lam) * root / (2.0 * PI * c * lam) * jac
    }
}

fn angle_of(c: f64, x: f64) -> f64 {
    let (a, b) = mp_edges(c);
    ((x - a) / (b - a)).clamp(0.0, 1.0).sqrt().asin()
}

/// Integral of `weight(x) * density(x)` over `[a, min(x, b)]`.
fn mp_partial_moment<W: Fn(f64) -> f64>(c: f64, x: f64, weight: W) -> f64 {
    let (a, _) = mp_edges(c);
    if x <= a {
        return 0.0;
    }
    integrate(angle_integrand(c, weight), 0.0, angle_of(c, x), 1e-13)
}

/// Quadrature CDF of `F_{c,1}` including the atom at zero when `c > 1`.
pub fn mp_cdf_quadrature(c: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let atom = (1.0 - 1.0 / c).max(0.0);
    atom + mp_partial_moment(c, x, |_| 1.0)
}

/// Quadrature of `int_{(-inf, x]} lambda dF_{c,1}` (the mean is 1).
pub fn mp_first_moment_quadrature(c: f64, x: f64) -> f64 {
    mp_partial_moment(c, x, |l| l)
}

/// Descending pseudo-spectrum of `size` points placed at the mid-quantiles
/// of `F_{c,1}` (`c <= 1` so that no atom is present). CDF values come from a
/// tabulated quadrature in the angle variable, inverted by interpolation.
pub fn mp_quantile_grid(c: f64, size: usize) -> Vec<f64> {
    assert!(c <= 1.0, "grid oracle assumes no atom");
    let (a, b) = mp_edges(c);
    const CELLS: usize = 20_000;
    let f = angle_integrand(c, |_| 1.0);
    let step = FRAC_PI_2 / CELLS as f64;
    let mut cum = Vec::with_capacity(CELLS + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for k in 0..CELLS {
        acc += gk15(&f, k as f64 * step, (k + 1) as f64 * step).0;
        cum.push(acc);
    }
    let total = acc;
    let point = |th: f64| a + (b - a) * th.sin().powi(2);
    let mut out = Vec::with_capacity(size);
    let mut j = 1;
    for i in 0..size {
        let u = (i as f64 + 0.5) / size as f64 * total;
        while cum[j] < u {
            j += 1;
        }
        let w = (u - cum[j - 1]) / (cum[j] - cum[j - 1]);
        out.push(point((j as f64 - 1.0 + w) * step));
    }
    out.reverse();
    out
}

/// Determinant by cofactor expansion along the first row (row-major input).
pub fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    match n {
        0 => 1.0,
        1 => m[0][0],
        _ => {
            let mut det = 0.0;
            for col in 0..n {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != col)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                det += sign * m[0][col] * determinant(&minor);
            }
            det
        }
    }
}

/// CPV retention by scanning every `q` and keeping the largest admissible
/// one. Eigenvalues must be sorted descending; ties are exact equality.
pub fn cpv_bruteforce(desc: &[f64], t: f64) -> f64 {
    let p = desc.len();
    let total: f64 = desc.iter().sum();
    let mut best = 0;
    let mut head = 0.0;
    for q in 1..p {
        head += desc[q - 1];
        if head / total <= t && desc[q - 1] > desc[q] {
            best = q;
        }
    }
    best as f64 / p as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_polynomial_is_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14);
        assert!((v - 0.0).abs() < 1e-13);
    }

    #[test]
    fn mp_total_mass_is_one() {
        for c in [0.1, 0.5, 1.0, 2.0, 4.0] {
            let (_, b) = mp_edges(c);
            assert!((mp_cdf_quadrature(c, b) - 1.0).abs() < 1e-10, "c={c}");
            assert!(
                (mp_first_moment_quadrature(c, b) - 1.0).abs() < 1e-10,
                "c={c}"
            );
        }
    }

    #[test]
    fn determinant_of_small_matrix() {
        let m = vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 4.0],
        ];
        assert!((determinant(&m) - 18.0).abs() < 1e-12);
    }
}
