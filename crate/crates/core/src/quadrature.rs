//! Quadrature rules: composite Simpson on uniform samples and adaptive
//! Gauss–Kronrod for smooth scalar integrands.

use alloc::vec::Vec;

/// Composite Simpson rule over uniformly spaced samples `y[0..=m]` with
/// spacing `h`.
///
/// An odd number of intervals is handled by closing the last three with
/// Simpson's 3/8 rule, so the rule stays exact on cubics and `O(h⁴)` for
/// smooth data. A single interval falls back to the trapezoid rule.
pub fn composite_simpson(y: &[f64], h: f64) -> f64 {
    let m = match y.len() {
        0 | 1 => return 0.0,
        len => len - 1,
    };
    if m == 1 {
        return 0.5 * h * (y[0] + y[1]);
    }
    let (even_end, tail) = if m % 2 == 0 { (m, 0.0) } else { (m - 3, simpson_38(&y[m - 3..], h)) };
    let mut acc = 0.0;
    let mut i = 0;
    while i < even_end {
        acc += y[i] + 4.0 * y[i + 1] + y[i + 2];
        i += 2;
    }
    acc * h / 3.0 + tail
}

fn simpson_38(y: &[f64], h: f64) -> f64 {
    3.0 * h / 8.0 * (y[0] + 3.0 * y[1] + 3.0 * y[2] + y[3])
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
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

/// One 15-point Kronrod panel; returns (kronrod estimate, |kronrod − gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
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

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// Panels are bisected until the summed error estimate falls below
/// `rel_tol · |I|` (with an absolute floor of `1e-300`). Bisection depth is
/// capped; the best available estimate is returned in that case.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (whole, err) = gk15(&f, a, b);
    if err <= rel_tol * whole.abs() || err < 1e-300 {
        return whole;
    }
    // (a, b, value, error, depth)
    let mut panels: Vec<(f64, f64, f64, f64, u32)> = alloc::vec![(a, b, whole, err, 0)];
    const MAX_DEPTH: u32 = 48;
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        if total_err <= rel_tol * total.abs() || total_err < 1e-300 {
            return total;
        }
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.4 < MAX_DEPTH)
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i);
        let Some(idx) = worst else { return total };
        let (pa, pb, _, _, depth) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        let (l, le) = gk15(&f, pa, mid);
        let (r, re) = gk15(&f, mid, pb);
        panels.push((pa, mid, l, le, depth + 1));
        panels.push((mid, pb, r, re, depth + 1));
    }
}
