//! Small-matrix complex linear algebra used across the crate.
//!
//! Register dimensions stay at desk scale (≤ a few hundred), so everything
//! here is dense and hand-rolled: Kronecker products, a cyclic Jacobi
//! eigensolver for Hermitian matrices, PSD matrix square roots, and Haar
//! sampling for property tests.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    let (r, c) = a.dim();
    let mut out = Array2::zeros((c, r));
    for i in 0..r {
        for j in 0..c {
            out[[j, i]] = a[[i, j]].conj();
        }
    }
    out
}

/// Complex identity matrix.
pub fn eye(n: usize) -> Array2<C64> {
    Array2::from_diag(&Array1::from_elem(n, C64::new(1.0, 0.0)))
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |U†U - I|`, zero for an exactly unitary matrix.
pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    let n = u.nrows();
    max_abs_diff(&dagger(u).dot(u), &eye(n))
}

pub fn is_unitary(u: &Array2<C64>, tol: f64) -> bool {
    u.nrows() == u.ncols() && unitarity_defect(u) <= tol
}

/// Distance between `a` and `b` minimized over a global phase on `b`:
/// `max |a - e^{iφ}·b|` with `φ = arg tr(b†a)`.
///
/// Falls back to the phase of the largest entry pair when the trace overlap
/// vanishes (e.g. traceless operators).
pub fn phase_aligned_distance(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let overlap: C64 = dagger(b).dot(a).diag().iter().sum();
    let phase = if overlap.norm() > 1e-12 {
        overlap / overlap.norm()
    } else {
        let (mut best, mut ph) = (0.0, C64::new(1.0, 0.0));
        for (x, y) in a.iter().zip(b.iter()) {
            let m = x.norm().min(y.norm());
            if m > best && y.norm() > 1e-12 {
                best = m;
                ph = (x / y) / (x / y).norm();
            }
        }
        ph
    };
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - phase * y).norm())
        .fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues in ascending order with matching
/// eigenvector columns.
pub fn hermitian_eigen(a: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eigen: matrix must be square");
    let mut m = a.clone();
    let mut v = eye(n);

    let off_norm = |m: &Array2<C64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[[i, j]].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let scale = a.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);

    for _sweep in 0..100 {
        if off_norm(&m) <= 1e-14 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                // Factor out the phase so the 2x2 block is real symmetric,
                // then rotate by phi = atan2(2r, a_qq - a_pp) / 2.
                let eitheta = apq / r;
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                let phi = 0.5 * (2.0 * r).atan2(aqq - app);
                let (s, c) = phi.sin_cos();
                // G restricted to (p, q): [[c, s], [-s e^{-iθ}, c e^{-iθ}]]
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -eitheta.conj() * s;
                let gqq = eitheta.conj() * c;
                for i in 0..n {
                    let (mip, miq) = (m[[i, p]], m[[i, q]]);
                    m[[i, p]] = mip * gpp + miq * gqp;
                    m[[i, q]] = mip * gpq + miq * gqq;
                }
                for i in 0..n {
                    let (mpi, mqi) = (m[[p, i]], m[[q, i]]);
                    m[[p, i]] = gpp.conj() * mpi + gqp.conj() * mqi;
                    m[[q, i]] = gpq.conj() * mpi + gqq.conj() * mqi;
                }
                for i in 0..n {
                    let (vip, viq) = (v[[i, p]], v[[i, q]]);
                    v[[i, p]] = vip * gpp + viq * gqp;
                    v[[i, q]] = vip * gpq + viq * gqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
    let mut sorted_vecs = Array2::zeros((n, n));
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[[i, new_j]] = v[[i, old_j]];
        }
    }
    (sorted_vals, sorted_vecs)
}

/// Square root of a Hermitian PSD matrix; tiny negative eigenvalues from
/// roundoff are clipped to zero.
pub fn sqrtm_psd(a: &Array2<C64>) -> Array2<C64> {
    let (vals, vecs) = hermitian_eigen(a);
    let n = a.nrows();
    let mut out = Array2::zeros((n, n));
    for (k, &lam) in vals.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] += s * vecs[[i, k]] * vecs[[j, k]].conj();
            }
        }
    }
    out
}

/// Haar-random `d x d` unitary: complex Ginibre matrix orthonormalized by
/// modified Gram-Schmidt (the R factor has a positive real diagonal, which
/// makes the Q factor Haar-distributed).
pub fn haar_unitary<R: Rng>(d: usize, rng: &mut R) -> Array2<C64> {
    let mut cols: Vec<Array1<C64>> = (0..d)
        .map(|_| Array1::from_iter((0..d).map(|_| C64::new(normal(rng), normal(rng)))))
        .collect();
    for j in 0..d {
        for i in 0..j {
            let prev = cols[i].clone();
            let proj: C64 = prev.iter().zip(cols[j].iter()).map(|(p, c)| p.conj() * c).sum();
            cols[j].iter_mut().zip(prev.iter()).for_each(|(c, p)| *c -= proj * p);
        }
        let norm = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        cols[j].mapv_inplace(|x| x / norm);
    }
    let mut u = Array2::zeros((d, d));
    for (j, col) in cols.iter().enumerate() {
        for i in 0..d {
            u[[i, j]] = col[i];
        }
    }
    u
}

// Box-Muller standard normal.
fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generalized Laguerre polynomial `L_n^(alpha)(x)` by upward recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * l - (kf + alpha) * lm1) / (kf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}
