//! Box-constrained Nelder–Mead on the unit hypercube.

/// Settings for [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Initial edge length along each axis.
    pub initial_step: f64,
    /// Stop when the relative spread of simplex values drops below this.
    pub rel_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            initial_step: 0.1,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Best value after each iteration (non-increasing).
    pub history: Vec<f64>,
}

fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimizes `f` over `[0, 1]^n` starting from `x0`. Trial points are
/// projected onto the box.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp_unit(&mut start);
    simplex.push((start.clone(), eval(&start)));
    for i in 0..n {
        let mut p = start.clone();
        // Step into the box from whichever side has room.
        p[i] += if p[i] + opts.initial_step <= 1.0 {
            opts.initial_step
        } else {
            -opts.initial_step
        };
        clamp_unit(&mut p);
        let v = eval(&p);
        simplex.push((p, v));
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= opts.rel_tol * best.abs().max(1e-300) {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|p| p.0[d]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| {
            let mut p: Vec<f64> = (0..n)
                .map(|d| centroid[d] + coef * (centroid[d] - simplex[n].0[d]))
                .collect();
            clamp_unit(&mut p);
            p
        };

        let reflected = along(1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(2.0);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < simplex[n].1 {
                let c = along(0.5);
                let v = eval(&c);
                (c, v)
            } else {
                let c = along(-0.5);
                let v = eval(&c);
                (c, v)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = (0..n).map(|d| anchor[d] + 0.5 * (p.0[d] - anchor[d])).collect();
                    let v = eval(&shrunk);
                    *p = (shrunk, v);
                }
            }
        }
        let current = simplex.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        history.push(current);
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value,
        iterations,
        history,
    }
}
