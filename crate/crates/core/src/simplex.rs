//! Nelder-Mead downhill simplex minimizer.

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Initial step along each coordinate axis.
    pub initial_step: f64,
    /// Converged when `f_worst - f_best <= f_tol` ...
    pub f_tol: f64,
    /// ... and every vertex lies within `x_tol` (max-norm) of the best one.
    pub x_tol: f64,
    pub max_evaluations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            f_tol: 1e-12,
            x_tol: 1e-8,
            max_evaluations: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from `x0`. NaN objective values are treated as `+inf`.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let value = eval(x0);
        return SimplexResult {
            x: Vec::new(),
            value,
            evaluations: 1,
            converged: true,
        };
    }

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    loop {
        // order vertices by value
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let size = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if spread <= opts.f_tol && size <= opts.x_tol {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evaluations {
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(gamma);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        // outside contraction when the reflection improved on the worst vertex
        let xc = if fr < vals[n] { along(rho) } else { along(-rho) };
        let fc = eval(&xc);
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let shrunk: Vec<f64> = pts[0]
                .iter()
                .zip(&pts[i])
                .map(|(b, x)| b + sigma * (x - b))
                .collect();
            vals[i] = eval(&shrunk);
            pts[i] = shrunk;
        }
    }

    SimplexResult {
        x: pts.swap_remove(0),
        value: vals[0],
        evaluations: evals.get(),
        converged,
    }
}
