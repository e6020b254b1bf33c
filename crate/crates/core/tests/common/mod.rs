//! Full nodal Newton-Raphson load flow used as an independent reference for
//! the sweep solver. Polar form, analytic Jacobian, dense LU.

#![allow(dead_code)]

pub mod stats;

use dgopt_core::network::{Base, Branch, Bus};
use dgopt_core::powerflow::InjectionSet;
use dgopt_core::NetworkModel;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub struct OracleSolution {
    pub v_mag: Vec<f64>,
    pub v_angle: Vec<f64>,
    /// Sum of series I²R over branches, kW.
    pub loss_kw: f64,
    pub iterations: usize,
}

pub fn newton(net: &NetworkModel, inj: &InjectionSet) -> OracleSolution {
    let n = net.n_bus();
    let base = net.base();
    let s_base = base.mva * 1000.0;
    let z_base = base.kv * base.kv / base.mva;

    let mut y = DMatrix::<Complex64>::zeros(n, n);
    let mut z_br = Vec::new();
    for br in net.branches() {
        let (a, b) = (br.from - 1, br.to - 1);
        let z = Complex64::new(br.r_ohm / z_base, br.x_ohm / z_base);
        let yb = z.inv();
        y[(a, a)] += yb;
        y[(b, b)] += yb;
        y[(a, b)] -= yb;
        y[(b, a)] -= yb;
        z_br.push((a, b, z));
    }
    let g = y.map(|c| c.re);
    let bm = y.map(|c| c.im);

    // Specified net injection (generation minus load), pu.
    let mut p_spec = vec![0.0; n];
    let mut q_spec = vec![0.0; n];
    for k in 1..n {
        let (p, q) = net.bus_demand(k);
        p_spec[k] = (inj.p_kw()[k] - p) / s_base;
        q_spec[k] = (inj.q_kvar()[k] - q) / s_base;
    }

    let mut vm = vec![base.v_nom; n];
    let mut va = vec![0.0; n];
    let m = n - 1;
    let mut iterations = 0;
    for it in 1..=50 {
        iterations = it;
        let (p_calc, q_calc) = injections(&g, &bm, &vm, &va);
        let mut f = DVector::zeros(2 * m);
        for k in 1..n {
            f[k - 1] = p_spec[k] - p_calc[k];
            f[m + k - 1] = q_spec[k] - q_calc[k];
        }
        if f.amax() < 1e-13 {
            break;
        }
        let mut jac = DMatrix::zeros(2 * m, 2 * m);
        for i in 1..n {
            for k in 1..n {
                let (r, c) = (i - 1, k - 1);
                if i == k {
                    let vi = vm[i];
                    jac[(r, c)] = -q_calc[i] - bm[(i, i)] * vi * vi;
                    jac[(r, m + c)] = p_calc[i] / vi + g[(i, i)] * vi;
                    jac[(m + r, c)] = p_calc[i] - g[(i, i)] * vi * vi;
                    jac[(m + r, m + c)] = q_calc[i] / vi - bm[(i, i)] * vi;
                } else {
                    let t = va[i] - va[k];
                    let (s, co) = t.sin_cos();
                    let gs = g[(i, k)] * s - bm[(i, k)] * co;
                    let gc = g[(i, k)] * co + bm[(i, k)] * s;
                    jac[(r, c)] = vm[i] * vm[k] * gs;
                    jac[(r, m + c)] = vm[i] * gc;
                    jac[(m + r, c)] = -vm[i] * vm[k] * gc;
                    jac[(m + r, m + c)] = vm[i] * gs;
                }
            }
        }
        let dx = jac.lu().solve(&f).expect("non-singular Jacobian");
        for k in 1..n {
            va[k] += dx[k - 1];
            vm[k] += dx[m + k - 1];
        }
    }

    let v: Vec<Complex64> = vm
        .iter()
        .zip(&va)
        .map(|(&r, &a)| Complex64::from_polar(r, a))
        .collect();
    let loss_pu: f64 = z_br
        .iter()
        .map(|&(a, b, z)| ((v[a] - v[b]) / z).norm_sqr() * z.re)
        .sum();
    OracleSolution {
        v_mag: vm,
        v_angle: va,
        loss_kw: loss_pu * s_base,
        iterations,
    }
}

fn injections(g: &DMatrix<f64>, b: &DMatrix<f64>, vm: &[f64], va: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = vm.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        for k in 0..n {
            let (s, c) = (va[i] - va[k]).sin_cos();
            p[i] += vm[i] * vm[k] * (g[(i, k)] * c + b[(i, k)] * s);
            q[i] += vm[i] * vm[k] * (g[(i, k)] * s - b[(i, k)] * c);
        }
    }
    (p, q)
}

/// Random radial feeder on `n` buses: bus k attaches to a random earlier bus.
/// `parents[k - 2]` picks the parent of bus k, `loads` and `imp` supply
/// per-bus demand and per-branch impedance scale factors in [0, 1].
pub fn random_tree(
    n: usize,
    parents: &[f64],
    loads: &[(f64, f64)],
    imp: &[(f64, f64)],
) -> NetworkModel {
    let mut buses = vec![Bus {
        id: 1,
        p_kw: 0.0,
        q_kvar: 0.0,
    }];
    let mut branches = Vec::new();
    for k in 2..=n {
        let (lp, lq) = loads[k - 2];
        buses.push(Bus {
            id: k,
            p_kw: 20.0 + 180.0 * lp,
            q_kvar: 10.0 + 90.0 * lq,
        });
        let parent = 1 + ((parents[k - 2] * (k - 1) as f64) as usize).min(k - 2);
        let (ir, ix) = imp[k - 2];
        branches.push(Branch {
            id: k - 1,
            from: parent,
            to: k,
            r_ohm: 0.05 + 0.45 * ir,
            x_ohm: 0.05 + 0.35 * ix,
            amp_max: None,
        });
    }
    NetworkModel::new(buses, branches, Base::default()).expect("random tree is radial")
}
