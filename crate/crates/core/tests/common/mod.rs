//! Shared oracles for the integration and acceptance tests.
#![allow(dead_code)]

use droplet::glauber::{SpinLattice, Window};

/// Window around the origin with the given `-1` sites, in row-major order
/// from `(0, 0)`.
pub fn lattice_with(width: i64, height: i64, minus: &[(i64, i64)]) -> SpinLattice {
    let window = Window {
        i0: 0,
        j0: 0,
        i1: width - 1,
        j1: height - 1,
    };
    let mut spins = vec![1i8; (width * height) as usize];
    for &(i, j) in minus {
        spins[(j * width + i) as usize] = -1;
    }
    SpinLattice::from_spins(16, window, spins).unwrap()
}

/// State of the 3×3 window as a 9-bit word, bit `3j + i` set for a `-1`.
pub fn encode(lat: &SpinLattice) -> usize {
    lat.spins()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == -1)
        .map(|(k, _)| 1 << k)
        .sum()
}

/// `p(1) = p(0) exp(Q)` for the 512-state chain, by uniformization.
pub fn exact_law_at_one(start: usize) -> Vec<f64> {
    let spin = |s: usize, i: i64, j: i64| -> i32 {
        if (0..3).contains(&i) && (0..3).contains(&j) && s >> (3 * j + i) & 1 == 1 {
            -1
        } else {
            1
        }
    };
    // off-diagonal rates
    let mut jumps: Vec<Vec<(usize, f64)>> = vec![Vec::new(); 512];
    for (s, out) in jumps.iter_mut().enumerate() {
        for k in 0..9 {
            let (i, j) = ((k % 3) as i64, (k / 3) as i64);
            let sum: i32 = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .map(|(di, dj)| spin(s, i + di, j + dj))
                .sum();
            let own = spin(s, i, j);
            let rate = match sum.signum() {
                0 => 0.5,
                x if x != own => 1.0,
                _ => 0.0,
            };
            if rate > 0.0 {
                out.push((s ^ (1 << k), rate));
            }
        }
    }
    let lambda = 9.0;
    let mut p = vec![0.0; 512];
    p[start] = 1.0;
    let mut law = vec![0.0; 512];
    let mut weight = (-lambda as f64).exp();
    for n in 0..120 {
        for (l, q) in law.iter_mut().zip(&p) {
            *l += weight * q;
        }
        let mut next = vec![0.0; 512];
        for s in 0..512 {
            let out: f64 = jumps[s].iter().map(|(_, r)| r).sum();
            next[s] += p[s] * (1.0 - out / lambda);
            for &(t, r) in &jumps[s] {
                next[t] += p[s] * r / lambda;
            }
        }
        p = next;
        weight *= lambda / (n + 1) as f64;
    }
    law
}

