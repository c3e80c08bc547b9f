#![allow(dead_code)]

use rand::Rng;
use riseig::channel::ChannelSet;
use riseig::linalg::{cn01_matrix, CMat};

/// Single-surface channel set with `rank(H_s) = rank`, all blocks CN(0, 1).
pub fn random_channels<R: Rng>(rng: &mut R, r: usize, n_bs: usize, n_ris: usize, rank: usize) -> ChannelSet {
    let h_d = cn01_matrix(rng, r, n_bs);
    let h_re = cn01_matrix(rng, r, n_ris);
    let h_s = low_rank(rng, n_ris, n_bs, rank);
    ChannelSet::new(h_d, vec![h_re], vec![h_s]).unwrap()
}

pub fn low_rank<R: Rng>(rng: &mut R, rows: usize, cols: usize, rank: usize) -> CMat {
    cn01_matrix(rng, rows, rank) * cn01_matrix(rng, rank, cols)
}

pub fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty());
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
