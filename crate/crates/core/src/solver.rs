//! Projected-gradient ascent with Barzilai-Borwein trial steps and Armijo
//! backtracking, plus the Euclidean projections the stages need.

#[derive(Clone, Copy, Debug)]
pub(crate) struct AscentOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub armijo: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self { max_iters: 5000, rel_tol: 1e-9, armijo: 1e-4 }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Ascent {
    pub x: Vec<f64>,
    pub value: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizes `f` over the set defined by `project`, starting from `x0`.
///
/// `grad` returns `None` at points where the gradient does not exist; the
/// ascent then stops at the incumbent.
pub(crate) fn projected_ascent(
    x0: Vec<f64>,
    f: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64]) -> Option<Vec<f64>>,
    project: impl Fn(&[f64]) -> Vec<f64>,
    opts: AscentOptions,
) -> Ascent {
    let mut x = project(&x0);
    let mut fx = f(&x);
    if !fx.is_finite() {
        // projected start may differ from a finite user start
        let f0 = f(&x0);
        if f0.is_finite() {
            x = x0;
            fx = f0;
        }
    }
    let Some(mut g) = grad(&x) else {
        return Ascent { x, value: fx };
    };
    let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut t = if gnorm > 0.0 { (xnorm.max(1e-3)) / gnorm } else { 1.0 };
    let mut quiet = 0;
    let mut it = 0;
    while it < opts.max_iters {
        it += 1;
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + t * b).collect();
            let y = project(&trial);
            let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dmax <= 1e-15 * scale {
                break;
            }
            let fy = f(&y);
            if fy.is_finite() && fy >= fx + opts.armijo * dot(&g, &d) {
                accepted = Some((y, fy, d));
                break;
            }
            t *= 0.5;
        }
        let Some((y, fy, step)) = accepted else {
            break;
        };
        let gain = fy - fx;
        let Some(gy) = grad(&y) else {
            x = y;
            fx = fy;
            break;
        };
        let dg: Vec<f64> = gy.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &dg);
        let ss = dot(&step, &step);
        t = if sy < 0.0 { (ss / -sy).clamp(1e-30, 1e30) } else { (t * 4.0).min(1e30) };
        x = y;
        fx = fy;
        g = gy;
        if gain <= opts.rel_tol * fx.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    Ascent { x, value: fx }
}

/// Euclidean projection onto {x ≥ 0, Σx ≤ cap}.
pub(crate) fn project_capped_simplex(y: &[f64], cap: f64) -> Vec<f64> {
    let clamped: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
    if clamped.iter().sum::<f64>() <= cap {
        return clamped;
    }
    project_simplex(y, cap)
}

/// Euclidean projection onto {x ≥ 0, Σx = cap} by sorting.
pub(crate) fn project_simplex(y: &[f64], cap: f64) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, v) in u.iter().enumerate() {
        acc += v;
        let cand = (acc - cap) / (k + 1) as f64;
        if v - cand > 0.0 {
            theta = cand;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_cases() {
        assert_eq!(project_capped_simplex(&[0.2, -0.1], 1.0), vec![0.2, 0.0]);
        let p = project_capped_simplex(&[1.0, 1.0], 1.0);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let p = project_simplex(&[3.0, 0.0, -1.0], 1.0);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn ascent_finds_concave_maximum_on_simplex() {
        // maximize Σ log(1 + c_i x_i) on the unit simplex: water-filling
        let c = [4.0, 1.0];
        let r = projected_ascent(
            vec![0.5, 0.5],
            |x| x.iter().zip(&c).map(|(x, c)| (c * x).ln_1p()).sum(),
            |x| Some(x.iter().zip(&c).map(|(x, c)| c / (1.0 + c * x)).collect()),
            |y| project_capped_simplex(y, 1.0),
            AscentOptions::default(),
        );
        // level 1/λ: x1 = 1/λ − 1/4, x2 = 1/λ − 1, sum 1 → 1/λ = 9/8
        assert!((r.x[0] - 0.875).abs() < 1e-6 && (r.x[1] - 0.125).abs() < 1e-6, "{:?}", r.x);
    }
}
