//! Powell's direction-set minimizer with golden-section bracketing and Brent
//! line minimization. Derivative-free; used by the projective-extension
//! optimizer where the objective carries quadratic constraint penalties.

/// Options for [`minimize`].
#[derive(Debug, Clone, Copy)]
pub struct PowellOptions {
    /// Relative decrease tolerance terminating the sweep loop.
    pub ftol: f64,
    /// Maximum direction-set sweeps.
    pub max_sweeps: usize,
    /// Initial bracketing step for each line minimization.
    pub initial_step: f64,
}

impl Default for PowellOptions {
    fn default() -> Self {
        Self { ftol: 1e-10, max_sweeps: 200, initial_step: 0.25 }
    }
}

#[derive(Debug, Clone)]
pub struct PowellResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub sweeps: usize,
    pub evals: usize,
    pub converged: bool,
}

const GOLD: f64 = 1.618_034;
const GLIMIT: f64 = 100.0;
const TINY: f64 = 1e-20;
const CGOLD: f64 = 0.381_966_0;

/// Minimize `f` starting from `x0`.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &PowellOptions) -> PowellResult {
    let n = x0.len();
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        f(x)
    };
    let mut p = x0.to_vec();
    let mut fp = eval(&p, &mut evals);
    if n == 0 {
        return PowellResult { x: p, value: fp, sweeps: 0, evals, converged: true };
    }
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            d
        })
        .collect();

    let mut sweeps = 0usize;
    let mut converged = false;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let p_start = p.clone();
        let f_start = fp;
        let mut biggest_drop = 0.0f64;
        let mut biggest_idx = 0usize;
        for (i, dir) in dirs.iter().enumerate() {
            let f_before = fp;
            fp = line_minimize(&f, &mut p, dir, opts.initial_step, &mut evals);
            let drop = f_before - fp;
            if drop > biggest_drop {
                biggest_drop = drop;
                biggest_idx = i;
            }
        }
        if 2.0 * (f_start - fp) <= opts.ftol * (f_start.abs() + fp.abs()) + TINY {
            converged = true;
            break;
        }
        // Powell's direction-replacement test on the extrapolated point.
        let extrapolated: Vec<f64> =
            p.iter().zip(&p_start).map(|(a, b)| 2.0 * a - b).collect();
        let f_extra = eval(&extrapolated, &mut evals);
        if f_extra < f_start {
            let t = 2.0 * (f_start - 2.0 * fp + f_extra)
                * (f_start - fp - biggest_drop).powi(2)
                - biggest_drop * (f_start - f_extra).powi(2);
            if t < 0.0 {
                let new_dir: Vec<f64> =
                    p.iter().zip(&p_start).map(|(a, b)| a - b).collect();
                let norm: f64 = new_dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > TINY {
                    let unit: Vec<f64> = new_dir.iter().map(|v| v / norm).collect();
                    fp = line_minimize(&f, &mut p, &unit, opts.initial_step, &mut evals);
                    dirs[biggest_idx] = dirs[n - 1].clone();
                    dirs[n - 1] = unit;
                }
            }
        }
    }
    PowellResult { x: p, value: fp, sweeps, evals, converged }
}

/// Minimize along `dir` from `p`, updating `p` in place; returns the value.
fn line_minimize<F: Fn(&[f64]) -> f64>(
    f: &F,
    p: &mut [f64],
    dir: &[f64],
    step: f64,
    evals: &mut usize,
) -> f64 {
    let g = |t: f64, evals: &mut usize| -> f64 {
        *evals += 1;
        let x: Vec<f64> = p.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        f(&x)
    };
    let (a, b, c) = bracket(&g, 0.0, step, evals);
    let (t_min, f_min) = brent(&g, a, b, c, 1e-10, evals);
    for (pi, di) in p.iter_mut().zip(dir) {
        *pi += t_min * di;
    }
    f_min
}

/// Expand downhill until a minimum is bracketed (ax, bx, cx with
/// f(bx) <= f(ax), f(bx) <= f(cx)).
fn bracket<G: Fn(f64, &mut usize) -> f64>(
    g: &G,
    mut ax: f64,
    mut bx: f64,
    evals: &mut usize,
) -> (f64, f64, f64) {
    let mut fa = g(ax, evals);
    let mut fb = g(bx, evals);
    if fb > fa {
        std::mem::swap(&mut ax, &mut bx);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut cx = bx + GOLD * (bx - ax);
    let mut fc = g(cx, evals);
    let mut guard = 0;
    while fb > fc {
        guard += 1;
        if guard > 200 {
            break;
        }
        let r = (bx - ax) * (fb - fc);
        let q = (bx - cx) * (fb - fa);
        let denom = 2.0 * (q - r).abs().max(TINY) * (q - r).signum_or_one();
        let mut u = bx - ((bx - cx) * q - (bx - ax) * r) / denom;
        let ulim = bx + GLIMIT * (cx - bx);
        let mut fu;
        if (bx - u) * (u - cx) > 0.0 {
            fu = g(u, evals);
            if fu < fc {
                return (bx, u, cx);
            } else if fu > fb {
                return (ax, bx, u);
            }
            u = cx + GOLD * (cx - bx);
            fu = g(u, evals);
        } else if (cx - u) * (u - ulim) > 0.0 {
            fu = g(u, evals);
            if fu < fc {
                bx = cx;
                cx = u;
                u = cx + GOLD * (cx - bx);
                fb = fc;
                fc = fu;
                fu = g(u, evals);
            }
        } else if (u - ulim) * (ulim - cx) >= 0.0 {
            u = ulim;
            fu = g(u, evals);
        } else {
            u = cx + GOLD * (cx - bx);
            fu = g(u, evals);
        }
        ax = bx;
        bx = cx;
        cx = u;
        fa = fb;
        fb = fc;
        fc = fu;
    }
    (ax, bx, cx)
}

trait SignumOrOne {
    fn signum_or_one(self) -> f64;
}

impl SignumOrOne for f64 {
    fn signum_or_one(self) -> f64 {
        if self == 0.0 {
            1.0
        } else {
            self.signum()
        }
    }
}

/// Brent's parabolic/golden-section minimization inside a bracket.
fn brent<G: Fn(f64, &mut usize) -> f64>(
    g: &G,
    ax: f64,
    bx: f64,
    cx: f64,
    tol: f64,
    evals: &mut usize,
) -> (f64, f64) {
    let mut a = ax.min(cx);
    let mut b = ax.max(cx);
    let mut x = bx;
    let mut w = bx;
    let mut v = bx;
    let mut fx = g(x, evals);
    let mut fw = fx;
    let mut fv = fx;
    let mut d = 0.0f64;
    let mut e = 0.0f64;
    for _ in 0..100 {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-12;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_tmp = e;
            e = d;
            if p.abs() < (0.5 * q * e_tmp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1 * (xm - x).signum_or_one();
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1 * d.signum_or_one() };
        let fu = g(u, evals);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            w = x;
            x = u;
            fv = fw;
            fw = fx;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                w = u;
                fv = fw;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2) + 5.0;
        let r = minimize(f, &[10.0, -7.0], &PowellOptions::default());
        assert!(r.converged);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.x[1], -2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.value, 5.0, epsilon = 1e-10);
    }

    #[test]
    fn rosenbrock_valley() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(f, &[-1.2, 1.0], &PowellOptions { max_sweeps: 500, ..Default::default() });
        assert!(r.value < 1e-8, "value {:e}", r.value);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn coupled_quartic() {
        let f = |x: &[f64]| {
            let s: f64 = x.iter().sum();
            x.iter().map(|v| v.powi(4)).sum::<f64>() + (s - 1.0).powi(2)
        };
        let r = minimize(f, &[2.0, -3.0, 0.5, 1.5], &PowellOptions::default());
        let s: f64 = r.x.iter().sum();
        assert!((s - 1.0).abs() < 0.5);
        assert!(r.value < f(&[2.0, -3.0, 0.5, 1.5]));
    }
}
