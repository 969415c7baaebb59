//! One-dimensional quadrature building blocks: Gauss-Legendre rules of
//! arbitrary order and a globally adaptive Gauss-Kronrod (7/15) integrator.

use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
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
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Shared, lazily computed Gauss-Legendre rule of order `n`.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(GaussLegendre::compute(n));
    cache.lock().unwrap().entry(n).or_insert(rule).clone()
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AdaptiveResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = fc.norm() * WGK[7];
    let mut values = [(Complex64::default(), Complex64::default()); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        values[j] = (f1, f2);
        kron += (f1 + f2) * WGK[j];
        res_abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        res_asc += WGK[j] * ((values[j].0 - mean).norm() + (values[j].1 - mean).norm());
    }
    let value = kron * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((kron - gauss) * half).norm();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Globally adaptive Gauss-Kronrod integration of a complex integrand.
///
/// `breakpoints` are interior points where the integrand may be
/// non-smooth; they seed the initial partition.
pub fn integrate_adaptive<F>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
    max_segments: usize,
) -> AdaptiveResult
where
    F: FnMut(f64) -> Complex64,
{
    let mut cuts: Vec<f64> = vec![a];
    let mut interior: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    interior.sort_by(f64::total_cmp);
    cuts.extend(interior);
    cuts.push(b);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let mut total = Complex64::default();
    let mut error = 0.0;
    for w in cuts.windows(2) {
        let (value, err) = kronrod15(&mut f, w[0], w[1]);
        evaluations += 15;
        total += value;
        error += err;
        heap.push(Segment { a: w[0], b: w[1], value, error: err });
    }
    loop {
        let target = tol.abs.max(tol.rel * total.norm());
        if error <= target || heap.len() >= max_segments {
            // sum in positional order so the result does not depend on heap layout
            let mut segs: Vec<Segment> = heap.into_vec();
            segs.sort_by(|x, y| x.a.total_cmp(&y.a));
            let value = segs.iter().map(|s| s.value).sum();
            return AdaptiveResult { value, error, evaluations, converged: error <= target };
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let mut segs: Vec<Segment> = heap.into_vec();
            segs.sort_by(|x, y| x.a.total_cmp(&y.a));
            let value = segs.iter().map(|s| s.value).sum();
            return AdaptiveResult { value, error, evaluations, converged: false };
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        error = (error + e1 + e2 - worst.error).max(0.0);
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
}

/// Real-valued convenience wrapper around [`integrate_adaptive`].
pub fn integrate_real<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let r = integrate_adaptive(|x| Complex64::new(f(x), 0.0), a, b, &[], tol, 4000);
    (r.value.re, r.error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 33, 200] {
            let rule = gauss_legendre(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n = {n}");
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let approx: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            assert!((approx - exact).abs() < 1e-13, "n = {n}");
            let even = (2 * n - 2) as i32;
            let approx: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(even)).sum();
            assert!((approx - 2.0 / (even as f64 + 1.0)).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn gauss_legendre_nodes_sorted_and_interior() {
        let rule = gauss_legendre(1001);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes[0] > -1.0 && rule.nodes[1000] < 1.0);
        let wsum: f64 = rule.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-12);
    }

    #[test]
    fn high_order_rule_resolves_oscillation() {
        // int_{-1}^{1} cos(200 x) dx = sin(200) / 100
        let rule = gauss_legendre(160);
        let approx: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * (200.0 * x).cos()).sum();
        assert!((approx - (200f64).sin() / 100.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity_and_breakpoints() {
        let tol = Tolerance::new(1e-14, 1e-12);
        let (v, _) = integrate_real(|x| x.sqrt(), 0.0, 1.0, tol);
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        let r = integrate_adaptive(
            |x| Complex64::new(if x < 0.3 { 1.0 } else { 2.0 }, 0.0),
            0.0,
            1.0,
            &[0.3],
            tol,
            100,
        );
        assert!((r.value.re - 1.7).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn adaptive_complex_exponential() {
        let tol = Tolerance::new(1e-15, 1e-12);
        let w = 37.0;
        let r = integrate_adaptive(|x| Complex64::new(0.0, w * x).exp(), 0.0, 2.0, &[], tol, 1000);
        let exact = (Complex64::new(0.0, 2.0 * w).exp() - 1.0) / Complex64::new(0.0, w);
        assert!((r.value - exact).norm() < 1e-12);
    }
}
