//! Reference implementations shared by the oracle and acceptance tests.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use restless_core::clifford::{group, GateLabel};

// --- Clifford fidelity by density-matrix simulation -----------------------

type M2 = [[C; 2]; 2];

fn mm(a: &M2, b: &M2) -> M2 {
    let mut o = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                o[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    o
}

fn dagger(a: &M2) -> M2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// exp(-i theta/2 n.sigma)
fn rotation(axis: [f64; 3], theta: f64) -> M2 {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let i = C::new(0.0, 1.0);
    let [nx, ny, nz] = axis;
    [
        [C::new(c, 0.0) - i * s * nz, -i * s * C::new(nx, -ny)],
        [-i * s * C::new(nx, ny), C::new(c, 0.0) + i * s * nz],
    ]
}

fn unitary(g: GateLabel) -> M2 {
    use std::f64::consts::{FRAC_PI_2, PI};
    match g {
        GateLabel::I => rotation([0.0, 0.0, 1.0], 0.0),
        GateLabel::X90 => rotation([1.0, 0.0, 0.0], FRAC_PI_2),
        GateLabel::MX90 => rotation([1.0, 0.0, 0.0], -FRAC_PI_2),
        GateLabel::Y90 => rotation([0.0, 1.0, 0.0], FRAC_PI_2),
        GateLabel::MY90 => rotation([0.0, 1.0, 0.0], -FRAC_PI_2),
        GateLabel::X180 => rotation([1.0, 0.0, 0.0], PI),
        GateLabel::Y180 => rotation([0.0, 1.0, 0.0], PI),
    }
}

fn bloch_state(n: [f64; 3]) -> M2 {
    let h = |x: f64, y: f64| C::new(x / 2.0, y / 2.0);
    [[h(1.0 + n[2], 0.0), h(n[0], -n[1])], [h(n[0], n[1]), h(1.0 - n[2], 0.0)]]
}

pub fn brute_force_f_cl(q: f64) -> f64 {
    let poles = [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let g = group();
    let mut log_p = 0.0;
    for &c in g.elements() {
        let gates = g.decompose(c);
        let mut log_pn = 0.0;
        for n in poles {
            let rho0 = bloch_state(n);
            let mut rho = rho0;
            let mut u_total = unitary(GateLabel::I);
            for &gate in gates {
                let u = unitary(gate);
                let r = mm(&mm(&u, &rho), &dagger(&u));
                for i in 0..2 {
                    for j in 0..2 {
                        let mixed = if i == j { 0.5 * q } else { 0.0 };
                        rho[i][j] = r[i][j] * (1.0 - q) + mixed;
                    }
                }
                u_total = mm(&u, &u_total);
            }
            let target = mm(&mm(&u_total, &rho0), &dagger(&u_total));
            let tr = (mm(&target, &rho)[0][0] + mm(&target, &rho)[1][1]).re;
            log_pn += tr.ln();
        }
        log_p += log_pn / 6.0;
    }
    0.5 + 0.5 * (log_p / 24.0).exp()
}

// --- band-limited power-law integral ------------------------------------

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 30)
}

/// `sqrt(∫ alpha f^beta df)` over the band by quadrature in log-frequency.
pub fn quadrature_sigma(alpha: f64, beta: f64, f_l: f64, f_u: f64) -> f64 {
    let g = |u: f64| alpha * (u * (beta + 1.0)).exp();
    let rough = (f_u - f_l) * alpha * f_l.powf(beta).max(f_u.powf(beta));
    adaptive_simpson(&g, f_l.ln(), f_u.ln(), 1e-13 * rough).sqrt()
}
