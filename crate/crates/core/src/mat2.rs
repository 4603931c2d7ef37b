//! Small helpers for single-qubit (2×2 complex) matrices.

use nalgebra::Matrix2;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = [[C64; 2]; 2];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn hadamard() -> Mat2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
}

/// The phase gate diag(1, i).
pub fn phase_s() -> Mat2 {
    [[ONE, ZERO], [ZERO, I]]
}

pub fn diag(a: C64, b: C64) -> Mat2 {
    [[a, ZERO], [ZERO, b]]
}

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn scale(a: &Mat2, s: C64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn apply(a: &Mat2, v: [C64; 2]) -> [C64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Largest entry of |U†U − 1|.
pub fn unitarity_deviation(u: &Mat2) -> f64 {
    let p = mul(&adjoint(u), u);
    let id = identity();
    let mut dev: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            dev = dev.max((p[i][j] - id[i][j]).norm());
        }
    }
    dev
}

/// Whether `a = e^{iθ} b` for some θ, within `tol` entrywise.
pub fn equal_up_to_phase(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    // pick the largest entry of b to fix the phase
    let (mut bi, mut bj, mut best) = (0, 0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            if b[i][j].norm() > best {
                best = b[i][j].norm();
                bi = i;
                bj = j;
            }
        }
    }
    if best < tol {
        return a.iter().flatten().all(|x| x.norm() < tol);
    }
    let ph = a[bi][bj] / b[bi][bj];
    if (ph.norm() - 1.0).abs() > tol {
        return false;
    }
    (0..2).all(|i| (0..2).all(|j| (a[i][j] - ph * b[i][j]).norm() < tol))
}

/// The unitary `U` maximizing `|Tr(U K)|`, i.e. `V W†` for `K = W Σ V†`.
pub fn procrustes(k: &Mat2) -> Mat2 {
    let m = Matrix2::new(k[0][0], k[0][1], k[1][0], k[1][1]);
    let svd = m.svd(true, true);
    let w = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^H");
    let u = v_t.adjoint() * w.adjoint();
    [[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]]
}

/// Exact `exp(-i θ/2 · n·σ)` for a unit axis `n`.
pub fn rotation(axis: [f64; 3], theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    let [x, y, z] = axis.map(|a| a / norm);
    [
        [c(co, -s * z), c(-s * y, -s * x)],
        [c(s * y, -s * x), c(co, s * z)],
    ]
}
