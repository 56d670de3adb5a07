//! Dense BFGS with a strong-Wolfe line search.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Stop as soon as the objective drops to this value.
    pub target_value: f64,
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// Minimize `f`, which returns the value and gradient at a point.
pub fn minimize<F>(f: &F, x0: DVector<f64>, opts: &BfgsOptions) -> BfgsResult
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut evaluations = 1;
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if fx <= opts.target_value || g.amax() <= opts.gradient_tolerance || !fx.is_finite() {
            break;
        }
        iterations += 1;
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            h = DMatrix::identity(n, n);
            fresh = true;
            d = -g.clone();
            slope = g.dot(&d);
        }
        let alpha0 = if fresh { (1.0 / g.norm()).min(1.0) } else { 1.0 };
        match line_search(f, &x, fx, &d, slope, alpha0, &mut evaluations) {
            Some((alpha, f_new, g_new)) => {
                let s = &d * alpha;
                let y = &g_new - &g;
                let sy = s.dot(&y);
                if sy > 1e-300 {
                    if fresh {
                        h *= sy / y.dot(&y);
                        fresh = false;
                    }
                    let rho = 1.0 / sy;
                    let hy = &h * &y;
                    let yhy = y.dot(&hy);
                    h -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
                    h += (&s * s.transpose()) * (rho * rho * yhy + rho);
                }
                x += s;
                fx = f_new;
                g = g_new;
            }
            None => {
                if fresh {
                    break;
                }
                h = DMatrix::identity(n, n);
                fresh = true;
            }
        }
    }
    BfgsResult { x, value: fx, iterations, evaluations }
}

struct Probe {
    alpha: f64,
    value: f64,
    slope: f64,
    grad: DVector<f64>,
}

fn line_search<F>(
    f: &F,
    x: &DVector<f64>,
    f0: f64,
    d: &DVector<f64>,
    slope0: f64,
    alpha0: f64,
    evaluations: &mut usize,
) -> Option<(f64, f64, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let eval = |alpha: f64, evaluations: &mut usize| {
        *evaluations += 1;
        let (value, grad) = f(&(x + d * alpha));
        let slope = grad.dot(d);
        Probe { alpha, value, slope, grad }
    };
    let mut prev = Probe { alpha: 0.0, value: f0, slope: slope0, grad: DVector::zeros(0) };
    let mut alpha = alpha0;
    for i in 0..40 {
        let cur = eval(alpha, evaluations);
        if !cur.value.is_finite() {
            alpha = 0.5 * (prev.alpha + alpha);
            continue;
        }
        if cur.value > f0 + C1 * alpha * slope0 || (i > 0 && cur.value >= prev.value) {
            return zoom(f0, slope0, prev, cur, evaluations, &eval);
        }
        if cur.slope.abs() <= -C2 * slope0 {
            return Some((cur.alpha, cur.value, cur.grad));
        }
        if cur.slope >= 0.0 {
            return zoom(f0, slope0, cur, prev, evaluations, &eval);
        }
        prev = cur;
        alpha *= 2.0;
    }
    (prev.alpha > 0.0).then_some((prev.alpha, prev.value, prev.grad))
}

fn zoom<E>(
    f0: f64,
    slope0: f64,
    mut lo: Probe,
    mut hi: Probe,
    evaluations: &mut usize,
    eval: &E,
) -> Option<(f64, f64, DVector<f64>)>
where
    E: Fn(f64, &mut usize) -> Probe,
{
    for _ in 0..40 {
        let width = hi.alpha - lo.alpha;
        // minimizer of the quadratic through (lo.value, lo.slope) and hi.value
        let denom = 2.0 * (hi.value - lo.value - lo.slope * width);
        let mut alpha = if denom.abs() > 0.0 { lo.alpha - lo.slope * width * width / denom } else { f64::NAN };
        let (a, b) = if lo.alpha < hi.alpha { (lo.alpha, hi.alpha) } else { (hi.alpha, lo.alpha) };
        let margin = 0.1 * (b - a);
        if !alpha.is_finite() || alpha < a + margin || alpha > b - margin {
            alpha = 0.5 * (a + b);
        }
        if (b - a).abs() < 1e-16 * a.abs().max(1e-300) {
            break;
        }
        let cur = eval(alpha, evaluations);
        if !cur.value.is_finite() || cur.value > f0 + C1 * alpha * slope0 || cur.value >= lo.value {
            hi = cur;
        } else {
            if cur.slope.abs() <= -C2 * slope0 {
                return Some((cur.alpha, cur.value, cur.grad));
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    (lo.alpha > 0.0 && lo.value < f0).then_some((lo.alpha, lo.value, lo.grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &DVector<f64>| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = DVector::from_vec(vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]);
            (v, g)
        };
        let opts = BfgsOptions { max_iterations: 500, gradient_tolerance: 1e-10, target_value: 0.0 };
        let r = minimize(&f, DVector::from_vec(vec![-1.2, 1.0]), &opts);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn stops_at_target_value() {
        let f = |x: &DVector<f64>| (x.norm_squared(), x * 2.0);
        let opts = BfgsOptions { max_iterations: 100, gradient_tolerance: 0.0, target_value: 1e-3 };
        let r = minimize(&f, DVector::from_vec(vec![3.0, -4.0, 1.0]), &opts);
        assert!(r.value <= 1e-3);
    }
}
