//! Roots of complex polynomials `p(w) = Σ_k a_k w^k`.

use nalgebra::DMatrix;

use crate::signal::Complex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootSolver {
    /// Aberth-Ehrlich simultaneous iteration, `O(d²)` per sweep.
    #[default]
    Aberth,
    /// Eigenvalues of the companion matrix (complex Schur form), `O(d³)`.
    Companion,
}

const MAX_SWEEPS: usize = 500;

/// All `d` roots of `Σ_k a_k w^k`; `a_d` must be nonzero.
pub fn polynomial_roots(a: &[Complex], solver: RootSolver) -> Vec<Complex> {
    let d = a.len().saturating_sub(1);
    if d == 0 {
        return Vec::new();
    }
    assert!(a[d].norm() > 0.0, "leading coefficient must be nonzero");
    let roots = match solver {
        RootSolver::Aberth => aberth(a),
        RootSolver::Companion => companion(a),
    };
    roots.into_iter().map(|z| polish(a, z)).collect()
}

/// `p(z)/p'(z)` and whether `|p(z)|` is at the rounding-error level.
///
/// Outside the unit disk the reversed polynomial is used to avoid overflow.
fn newton_ratio(a: &[Complex], z: Complex) -> (Complex, bool) {
    let d = a.len() - 1;
    let eps = 4.0 * f64::EPSILON;
    if z.norm() <= 1.0 {
        let (mut p, mut dp) = (a[d], Complex::new(0.0, 0.0));
        let mut bound = a[d].norm();
        let az = z.norm();
        for k in (0..d).rev() {
            dp = dp * z + p;
            p = p * z + a[k];
            bound = bound * az + a[k].norm();
        }
        (p / dp, p.norm() <= eps * bound)
    } else {
        let y = z.inv();
        let ay = y.norm();
        let (mut q, mut dq) = (a[0], Complex::new(0.0, 0.0));
        let mut bound = a[0].norm();
        for k in 1..=d {
            dq = dq * y + q;
            q = q * y + a[k];
            bound = bound * ay + a[k].norm();
        }
        // p(z) = z^d q(1/z)  ⇒  p/p' = 1 / (y (d - y q'/q))
        let ratio = (y * (d as f64 - y * dq / q)).inv();
        (ratio, q.norm() <= eps * bound)
    }
}

/// Starting points on circles given by the upper convex hull of `(k, log|a_k|)`.
fn initial_guesses(a: &[Complex]) -> Vec<Complex> {
    let d = a.len() - 1;
    let pts: Vec<(f64, f64)> = a
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (k as f64, c.norm().ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (o, q) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (q.0 - o.0) * (p.1 - o.1) - (q.1 - o.1) * (p.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut z = Vec::with_capacity(d);
    let sigma = 0.7;
    for seg in hull.windows(2) {
        let (k0, k1) = (seg[0].0 as usize, seg[1].0 as usize);
        let m = k1 - k0;
        let r = ((seg[0].1 - seg[1].1) / m as f64).exp();
        for j in 0..m {
            let ang = std::f64::consts::TAU * j as f64 / m as f64 + std::f64::consts::TAU * k1 as f64 / d as f64 + sigma;
            z.push(Complex::from_polar(r, ang));
        }
    }
    // zero low-order coefficients leave roots at the origin
    while z.len() < d {
        z.push(Complex::new(0.0, 0.0));
    }
    z
}

fn aberth(a: &[Complex]) -> Vec<Complex> {
    let d = a.len() - 1;
    let mut z = initial_guesses(a);
    let mut done = vec![false; d];
    for _ in 0..MAX_SWEEPS {
        let mut active = false;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (ratio, small) = newton_ratio(a, z[i]);
            if small || !ratio.is_finite() {
                done[i] = true;
                continue;
            }
            let s: Complex = (0..d).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (Complex::new(1.0, 0.0) - ratio * s);
            if step.is_finite() {
                z[i] -= step;
                if step.norm() <= f64::EPSILON * z[i].norm() {
                    done[i] = true;
                }
            }
            active = true;
        }
        if !active {
            break;
        }
    }
    z
}

fn companion(a: &[Complex]) -> Vec<Complex> {
    let d = a.len() - 1;
    let lead = a[d];
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i == 0 {
            -a[d - 1 - j] / lead
        } else if i == j + 1 {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let (_, t) = m.schur().unpack();
    (0..d).map(|i| t[(i, i)]).collect()
}

fn polish(a: &[Complex], mut z: Complex) -> Complex {
    for _ in 0..3 {
        let (ratio, small) = newton_ratio(a, z);
        if small || !ratio.is_finite() {
            break;
        }
        z -= ratio;
    }
    z
}
