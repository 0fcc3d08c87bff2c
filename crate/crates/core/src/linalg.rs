use nalgebra::{DMatrix, DVector};

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pivots below this fraction of `‖m‖` count as singular; finite-difference
/// Jacobians of singular maps carry errors well above rounding.
const SINGULAR_PIVOT: f64 = 1e-9;

/// Solves `m x = rhs`, returning `None` when a pivot is negligible relative to `‖m‖`.
pub(crate) fn solve(m: &DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let lu = m.clone().lu();
    let u = lu.u();
    if u.diagonal()
        .iter()
        .any(|d| d.abs() <= SINGULAR_PIVOT * scale)
    {
        return None;
    }
    lu.solve(&DVector::from_column_slice(rhs))
        .map(|x| x.iter().copied().collect())
}

/// Minimum-norm least-squares solution, dropping singular values below
/// `SINGULAR_PIVOT · σ_max`.
pub(crate) fn lstsq(m: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let svd = m.clone().svd(true, true);
    let cutoff = SINGULAR_PIVOT * svd.singular_values.max();
    svd.solve(&DVector::from_column_slice(rhs), cutoff)
        .map(|x| x.iter().copied().collect())
        .unwrap_or_else(|_| vec![0.0; rhs.len()])
}

/// Eigenvalues; closed form for 2×2, real Schur otherwise.
pub(crate) fn eigenvalues(m: &DMatrix<f64>) -> Vec<num_complex::Complex64> {
    use num_complex::Complex64;
    if m.nrows() == 2 && m.ncols() == 2 {
        let tr = m[(0, 0)] + m[(1, 1)];
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = 0.25 * tr * tr - det;
        if disc >= 0.0 {
            let root = disc.sqrt();
            let big = 0.5 * tr + if tr >= 0.0 { root } else { -root };
            let small = if big != 0.0 {
                det / big
            } else {
                0.5 * tr - root
            };
            return vec![Complex64::new(big, 0.0), Complex64::new(small, 0.0)];
        }
        let im = (-disc).sqrt();
        return vec![Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im)];
    }
    m.clone().complex_eigenvalues().iter().copied().collect()
}

pub(crate) fn determinant(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 2 && m.ncols() == 2 {
        return m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    }
    m.determinant()
}

/// Uniform sample from the closed unit ball in `k` dimensions (rejection from the cube).
pub(crate) fn sample_ball<R: rand::Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n = norm(&p);
        if n <= 1.0 && n > 0.0 {
            return p;
        }
    }
}
