//! Small numerical kernels shared by the other modules: compensated
//! summation, adaptive Gauss-Kronrod quadrature and real-root isolation for
//! polynomials stored as ascending coefficient lists.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
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
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive 15-point Gauss-Kronrod quadrature of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `rel_tol * |integral|` (with a tiny absolute floor).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gauss_kronrod_15(&f, lo, hi);
    let mut pieces = vec![(lo, hi, v, e)];
    for _ in 0..4000 {
        let total = compensated_sum(pieces.iter().map(|p| p.2));
        let err = compensated_sum(pieces.iter().map(|p| p.3));
        if err <= (rel_tol * total.abs()).max(1e-300) {
            break;
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, be), (i, p)| {
                if p.3 > be {
                    (i, p.3)
                } else {
                    (bi, be)
                }
            });
        let (pa, pb, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // interval cannot be split further in f64
            pieces.push((pa, pb, gauss_kronrod_15(&f, pa, pb).0, 0.0));
            continue;
        }
        let (v1, e1) = gauss_kronrod_15(&f, pa, mid);
        let (v2, e2) = gauss_kronrod_15(&f, mid, pb);
        pieces.push((pa, mid, v1, e1));
        pieces.push((mid, pb, v2, e2));
    }
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    sign * compensated_sum(pieces.iter().map(|p| p.2))
}

/// Abscissae and weights of the 3-point Gauss-Legendre rule mapped to [0, 1].
pub const GAUSS3_NODES: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];
pub const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(m, &c)| m as f64 * c)
        .collect()
}

pub fn poly_trim(coeffs: &[f64]) -> &[f64] {
    let len = coeffs
        .iter()
        .rposition(|&c| c != 0.0)
        .map_or(0, |i| i + 1);
    &coeffs[..len]
}

/// Real roots of a polynomial inside `[lo, hi]`, sorted ascending.
///
/// Roots are isolated recursively: the critical points of `p` split the
/// interval into monotone pieces, each holding at most one root, which is
/// then refined by bisection down to `1e-14`. Roots of even multiplicity are
/// only reported when `p` vanishes exactly at a critical point; an identically
/// zero polynomial has no reported roots.
pub fn real_roots(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let p = poly_trim(coeffs);
    if p.len() <= 1 || lo > hi {
        return Vec::new();
    }
    if p.len() == 2 {
        let r = -p[0] / p[1];
        return if (lo..=hi).contains(&r) { vec![r] } else { Vec::new() };
    }
    let mut breaks = vec![lo];
    breaks.extend(real_roots(&poly_derivative(p), lo, hi));
    breaks.push(hi);

    let mut roots: Vec<f64> = Vec::new();
    let push = |r: f64, roots: &mut Vec<f64>| {
        if roots.last().map_or(true, |&last| (r - last).abs() > 1e-13 * (1.0 + r.abs())) {
            roots.push(r);
        }
    };
    for w in breaks.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (mut fa, fb) = (poly_eval(p, a), poly_eval(p, b));
        if fa == 0.0 {
            push(a, &mut roots);
            continue;
        }
        if fb == 0.0 || fa.signum() == fb.signum() {
            continue;
        }
        loop {
            let tol = 1e-14_f64.max(4.0 * f64::EPSILON * a.abs().max(b.abs()));
            let m = 0.5 * (a + b);
            if b - a <= tol || m <= a || m >= b {
                break;
            }
            let fm = poly_eval(p, m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        push(0.5 * (a + b), &mut roots);
    }
    if poly_eval(p, hi) == 0.0 {
        push(hi, &mut roots);
    }
    roots
}

/// Cauchy bound: every real root of `p` lies in `[-B, B]`.
pub fn root_bound(coeffs: &[f64]) -> f64 {
    let p = poly_trim(coeffs);
    match p.split_last() {
        None => 0.0,
        Some((lead, rest)) => 1.0 + rest.iter().map(|c| (c / lead).abs()).fold(0.0, f64::max),
    }
}
