//! Seeded generators for random families, coarse-grainings and history sets.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use cohist::histories::{Decomposition, Family, History};
use cohist::random::{haar_basis, random_partition, stream_rng};
use cohist::Projector;

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 0)
}

fn span(basis: &[Vec<Complex64>], idx: &[usize]) -> Projector {
    let vs: Vec<_> = idx.iter().map(|&i| basis[i].clone()).collect();
    Projector::from_vectors(&vs, 1e-10).unwrap()
}

/// Decomposition from a random partition of an orthonormal basis.
pub fn partition_decomposition(rng: &mut ChaCha8Rng, basis: &[Vec<Complex64>]) -> Decomposition {
    let n = basis.len();
    let parts = rng.random_range(1..=n);
    let groups = random_partition(rng, n, parts);
    Decomposition::new(groups.iter().map(|g| span(basis, g)).collect(), 1e-10).unwrap()
}

/// A family that is weakly decoherent for the maximally mixed state: one or
/// two slots with independent Haar bases, or three slots where two adjacent
/// slots share a basis.
pub fn consistent_family(rng: &mut ChaCha8Rng, dim: usize, slots: usize) -> Family {
    let b0 = haar_basis(rng, dim);
    let b1 = haar_basis(rng, dim);
    let bases: Vec<&[Vec<Complex64>]> = match slots {
        1 => vec![&b0],
        2 => vec![&b0, &b1],
        _ => {
            if rng.random_bool(0.5) {
                vec![&b0, &b0, &b1]
            } else {
                vec![&b0, &b1, &b1]
            }
        }
    };
    let decs = bases.iter().map(|b| partition_decomposition(rng, b)).collect();
    Family::from_slots(decs).unwrap()
}

/// Merges members of every slot along a random partition.
pub fn coarse_graining(rng: &mut ChaCha8Rng, family: &Family) -> Family {
    let slots = family
        .slots()
        .iter()
        .map(|s| {
            let parts = rng.random_range(1..=s.len());
            let groups = random_partition(rng, s.len(), parts);
            let members = groups
                .iter()
                .map(|g| s.subset_sum(g.iter().fold(0u64, |m, &i| m | 1 << i)))
                .collect();
            Decomposition::new(members, 1e-9).unwrap()
        })
        .collect();
    Family::new(family.times().to_vec(), slots).unwrap()
}

/// Random history sets with per-slot commuting events, plus a random family
/// containing them (a refinement of the atoms, possibly with extra times).
pub struct HistorySet {
    pub histories: Vec<History>,
    pub containing: Family,
}

pub fn history_set(rng: &mut ChaCha8Rng, dim: usize) -> HistorySet {
    let slots = rng.random_range(1..=3usize);
    let bases: Vec<Vec<Vec<Complex64>>> = (0..slots).map(|_| haar_basis(rng, dim)).collect();
    let count = rng.random_range(1..=3usize);
    // Events are spans of basis subsets; the coarsest partition refining all
    // of them is given by the "signature" of each basis index.
    let mut signatures = vec![vec![0u64; dim]; slots];
    let mut histories = Vec::new();
    for h in 0..count {
        // Each history uses a random subset of the slot times.
        let used: Vec<usize> = loop {
            let u: Vec<usize> = (0..slots).filter(|_| rng.random_bool(0.7)).collect();
            if !u.is_empty() {
                break u;
            }
        };
        let mut events = Vec::new();
        for &k in &used {
            let idx: Vec<usize> = loop {
                let i: Vec<usize> = (0..dim).filter(|_| rng.random_bool(0.5)).collect();
                if !i.is_empty() {
                    break i;
                }
            };
            for &i in &idx {
                signatures[k][i] |= 1 << h;
            }
            events.push(span(&bases[k], &idx));
        }
        let times = used.iter().map(|&k| k as f64).collect();
        histories.push(History::new(times, events).unwrap());
    }
    let mut times = Vec::new();
    let mut decs = Vec::new();
    for k in 0..slots {
        // Group indices by signature, then split groups further at random.
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut sigs: Vec<u64> = signatures[k].clone();
        sigs.sort_unstable();
        sigs.dedup();
        for s in sigs {
            let g: Vec<usize> = (0..dim).filter(|&i| signatures[k][i] == s).collect();
            let parts = rng.random_range(1..=g.len());
            for sub in random_partition(rng, g.len(), parts) {
                groups.push(sub.iter().map(|&j| g[j]).collect());
            }
        }
        times.push(k as f64);
        decs.push(Decomposition::new(groups.iter().map(|g| span(&bases[k], g)).collect(), 1e-10).unwrap());
    }
    if rng.random_bool(0.5) {
        let extra = haar_basis(rng, dim);
        times.push(slots as f64 + 0.5);
        decs.push(partition_decomposition(rng, &extra));
    }
    HistorySet {
        histories,
        containing: Family::new(times, decs).unwrap(),
    }
}
