//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use assocgeom_core::behavior::CueResponseMatrix;
use assocgeom_core::seed::Stream;

pub fn random_counts(rows: usize, cols: usize, density: f64, seed: u64) -> CueResponseMatrix {
    let mut s = Stream::new(seed);
    let columns: Vec<String> = (0..cols).map(|j| format!("r{j:03}")).collect();
    let mut trip = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if s.unit() < density {
                trip.push((i, j, 1 + s.below(9)));
            }
        }
    }
    CueResponseMatrix::from_triplets(rows, columns, &trip).unwrap()
}

pub fn dense_counts(m: &CueResponseMatrix) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; m.n_cols()]; m.n_rows()];
    for (i, j, v) in m.triplets() {
        d[i][j] = v as f64;
    }
    d
}

/// PPMI straight from the definition over a dense matrix.
pub fn dense_ppmi(b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n: f64 = b.iter().flatten().sum();
    let rows = b.len();
    let cols = b[0].len();
    let pr: Vec<f64> = b.iter().map(|r| r.iter().sum::<f64>() / n).collect();
    let pc: Vec<f64> = (0..cols).map(|j| b.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mut out = vec![vec![0.0; cols]; rows];
    for i in 0..rows {
        for j in 0..cols {
            if b[i][j] > 0.0 {
                out[i][j] = f64::max(0.0, (b[i][j] / n / (pr[i] * pc[j])).ln());
            }
        }
    }
    out
}

pub fn dense_cosine(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let norm = |r: &Vec<f64>| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (norm(&rows[i]), norm(&rows[j]));
            out[i][j] = if a == 0.0 || b == 0.0 {
                0.0
            } else {
                rows[i].iter().zip(&rows[j]).map(|(x, y)| x * y).sum::<f64>() / (a * b)
            };
        }
    }
    out
}

pub fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Top-k neighbor set by full sort: similarity descending, index ascending.
pub fn naive_top_k(sim: &[Vec<f64>], i: usize, k: usize, mask: &[bool]) -> Vec<usize> {
    let mut c: Vec<usize> = (0..sim.len()).filter(|&j| j != i && !mask[j]).collect();
    c.sort_by(|&a, &b| sim[i][b].partial_cmp(&sim[i][a]).unwrap().then(a.cmp(&b)));
    c.truncate(k);
    c.sort_unstable();
    c
}

pub fn gaussian_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = Stream::new(seed);
    (0..n).map(|_| (0..d).map(|_| s.normal()).collect()).collect()
}
