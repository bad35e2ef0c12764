//! Independent hand-rolled oracle for the real three-box arrangement:
//! plain `f64` 3x3 arrays, no library types.
#![allow(dead_code)]

pub mod gen;

use std::path::PathBuf;

pub type M3 = [[f64; 3]; 3];

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/three_box.json")
}

pub fn ket_bra(u: [f64; 3], v: [f64; 3]) -> M3 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = u[i] * v[j];
        }
    }
    m
}

pub fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

pub fn proj(v: [f64; 3]) -> M3 {
    let u = unit(v);
    ket_bra(u, u)
}

pub fn id() -> M3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

pub fn sub(a: M3, b: M3) -> M3 {
    let mut m = a;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] -= b[i][j];
        }
    }
    m
}

pub fn mul(a: M3, b: M3) -> M3 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

pub fn transpose(a: M3) -> M3 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[j][i];
        }
    }
    m
}

pub fn trace(a: M3) -> f64 {
    a[0][0] + a[1][1] + a[2][2]
}

/// `E_n ... E_1`.
pub fn chain(events: &[M3]) -> M3 {
    events.iter().fold(id(), |acc, e| mul(*e, acc))
}

/// `(1/3) Tr(C1 C2^T)` with the maximally mixed state.
pub fn d(h1: &[M3], h2: &[M3]) -> f64 {
    trace(mul(chain(h1), transpose(chain(h2)))) / 3.0
}

pub const A: [f64; 3] = [1.0, 0.0, 0.0];
pub const B: [f64; 3] = [0.0, 1.0, 0.0];
pub const C: [f64; 3] = [0.0, 0.0, 1.0];
pub const PSI: [f64; 3] = [1.0, 1.0, 1.0];
pub const PHI: [f64; 3] = [1.0, 1.0, -1.0];

/// Elementary histories of a family given per-slot member lists, first slot most significant.
pub fn elementary(slots: &[Vec<M3>]) -> Vec<Vec<M3>> {
    let mut out = vec![Vec::new()];
    for s in slots {
        out = out
            .into_iter()
            .flat_map(|p: Vec<M3>| {
                s.iter().map(move |m| {
                    let mut q = p.clone();
                    q.push(*m);
                    q
                })
            })
            .collect();
    }
    out
}

/// Largest `|Re D|` over distinct elementary pairs.
pub fn max_off_diagonal(slots: &[Vec<M3>]) -> f64 {
    let hs = elementary(slots);
    let mut worst: f64 = 0.0;
    for i in 0..hs.len() {
        for j in (i + 1)..hs.len() {
            worst = worst.max(d(&hs[i], &hs[j]).abs());
        }
    }
    worst
}

pub fn c1_slots() -> Vec<Vec<M3>> {
    let e0 = proj(PSI);
    let e1 = proj(A);
    let e2 = proj(PHI);
    vec![vec![e0, sub(id(), e0)], vec![e1, sub(id(), e1)], vec![e2, sub(id(), e2)]]
}

pub fn c2_slots() -> Vec<Vec<M3>> {
    let mut s = c1_slots();
    let f1 = proj(B);
    s[1] = vec![f1, sub(id(), f1)];
    s
}

pub fn joint_slots() -> Vec<Vec<M3>> {
    let mut s = c1_slots();
    s[1] = vec![proj(A), proj(B), proj(C)];
    s
}
