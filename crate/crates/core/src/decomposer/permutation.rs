//! Permutations realized by linear couplings, up to the signs of the entries.

use super::DecomposeError;
use crate::coupling::{Layer, LayerSequence, LinearCouplingLayer};
use crate::matcore::{DenseMatrix, Permutation};

/// Three couplings mapping `(x_i, y_j) ↦ (y_j, −x_i)` for every pair
/// `(i, j)`, with `i` indexing the first half and `j` the second half.
///
/// The steps are `(x, y) ↦ (x, y − x) ↦ (y, y − x) ↦ (y, −x)`.
pub fn signed_swap_layers(d: usize, pairs: &[(usize, usize)]) -> Result<[LinearCouplingLayer; 3], DecomposeError> {
    let mut used_l = vec![false; d];
    let mut used_r = vec![false; d];
    for &(i, j) in pairs {
        if i >= d || j >= d {
            return Err(DecomposeError::InvalidInput(format!("pair ({i}, {j}) out of range for half-dimension {d}")));
        }
        if std::mem::replace(&mut used_l[i], true) || std::mem::replace(&mut used_r[j], true) {
            return Err(DecomposeError::OverlappingPairs);
        }
    }
    let mut sub = DenseMatrix::zeros(d, d);
    let mut add = DenseMatrix::zeros(d, d);
    for &(i, j) in pairs {
        sub[(j, i)] = -1.0;
        add[(i, j)] = 1.0;
    }
    let ones = vec![1.0; d];
    Ok([
        LinearCouplingLayer::lower(sub.clone(), ones.clone())?,
        LinearCouplingLayer::upper(ones.clone(), add)?,
        LinearCouplingLayer::lower(sub, ones)?,
    ])
}

/// Writes `π = σ2 ∘ σ1` with both factors involutions.
///
/// Each cycle `(c_1 … c_r)` with `r ≥ 3` is split by `σ1: 1↔2, s ↔ r+3−s`
/// and `σ2: 1↔3, s ↔ r+4−s` acting on cycle positions.
pub fn order2_factor(pi: &Permutation) -> (Permutation, Permutation) {
    let n = pi.len();
    let mut s1: Vec<usize> = (0..n).collect();
    let mut s2: Vec<usize> = (0..n).collect();
    for cyc in pi.cycles() {
        let r = cyc.len();
        if r <= 2 {
            for (k, &c) in cyc.iter().enumerate() {
                s1[c] = cyc[(k + 1) % r];
            }
            continue;
        }
        // 1-based positions within the cycle
        let at = |s: usize| cyc[s - 1];
        for s in 1..=r {
            let t1 = match s {
                1 => 2,
                2 => 1,
                _ => r + 3 - s,
            };
            let t2 = match s {
                1 => 3,
                2 => 2,
                3 => 1,
                _ => r + 4 - s,
            };
            s1[at(s)] = at(t1);
            s2[at(s)] = at(t2);
        }
    }
    (Permutation::from_vec_unchecked(s1), Permutation::from_vec_unchecked(s2))
}

/// A round of disjoint cross-half swaps, as `(first-half index, second-half index)`.
type Round = Vec<(usize, usize)>;

/// Rounds of signed swaps realizing a side-preserving involution.
///
/// Transpositions in the first half are paired with transpositions in the
/// second half and done together in two rounds; the leftovers borrow a fixed
/// point on the opposite side and take three rounds.
fn involution_rounds(sigma: &Permutation, d: usize) -> [Round; 3] {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for a in 0..2 * d {
        let b = sigma.apply(a);
        if a < b {
            debug_assert_eq!(a < d, b < d, "involution must preserve halves");
            if b < d {
                left.push((a, b));
            } else {
                right.push((a - d, b - d));
            }
        }
    }
    let mut rounds: [Round; 3] = Default::default();
    let paired = left.len().min(right.len());
    for k in 0..paired {
        let (a, b) = left[k];
        let (a2, b2) = right[k];
        rounds[0].push((a, a2));
        rounds[0].push((b, b2));
        rounds[1].push((a, b2));
        rounds[1].push((b, a2));
    }

    let (extra, other_side_moved, extra_on_left): (&[(usize, usize)], Vec<bool>, bool) = if left.len() > paired {
        let mut moved = vec![false; d];
        for &(a, b) in &right {
            moved[a] = true;
            moved[b] = true;
        }
        (&left[paired..], moved, true)
    } else {
        let mut moved = vec![false; d];
        for &(a, b) in &left {
            moved[a] = true;
            moved[b] = true;
        }
        (&right[paired..], moved, false)
    };
    let mut storage = (0..d).filter(|&k| !other_side_moved[k]);
    for &(a, b) in extra {
        let s = storage.next().expect("enough fixed points on the opposite half");
        let pair = |x: usize| if extra_on_left { (x, s) } else { (s, x) };
        rounds[0].push(pair(a));
        rounds[1].push(pair(b));
        rounds[2].push(pair(a));
    }
    rounds
}

fn push_round(seq: &mut LayerSequence, d: usize, round: &[(usize, usize)]) -> Result<(), DecomposeError> {
    if round.is_empty() {
        return Ok(());
    }
    for layer in signed_swap_layers(d, round)? {
        seq.push(Layer::Linear(layer))?;
    }
    Ok(())
}

/// Coupling sequence whose matrix equals the matrix of `p` up to entry signs.
///
/// One round moves every element that changes half; the remaining
/// side-preserving permutation is split into two involutions of at most
/// three rounds each, so at most 21 matrices are used.
pub fn permutation_layers(p: &Permutation) -> Result<LayerSequence, DecomposeError> {
    let n = p.len();
    if n % 2 != 0 {
        return Err(DecomposeError::OddDimension(n));
    }
    let d = n / 2;
    let mut seq = LayerSequence::empty(n);

    let l_to_r: Vec<usize> = (0..d).filter(|&k| p.apply(k) >= d).collect();
    let r_to_l: Vec<usize> = (d..n).filter(|&k| p.apply(k) < d).collect();
    debug_assert_eq!(l_to_r.len(), r_to_l.len());
    let crossing: Round = l_to_r.iter().zip(&r_to_l).map(|(&a, &b)| (a, b - d)).collect();
    let mut c = Permutation::identity(n).mapping().to_vec();
    for &(a, b) in &crossing {
        c.swap(a, b + d);
    }
    let c = Permutation::from_vec_unchecked(c);
    push_round(&mut seq, d, &crossing)?;

    // p = τ ∘ c with τ side-preserving, and τ = σ2 ∘ σ1
    let tau = p.compose(&c);
    let (s1, s2) = order2_factor(&tau);
    for sigma in [&s1, &s2] {
        for round in involution_rounds(sigma, d) {
            push_round(&mut seq, d, &round)?;
        }
    }
    Ok(seq)
}

/// Signs `s_k` with `P̃ e_k = s_k e_{p(k)}`, read off the realized matrix.
pub fn achieved_signs(p: &Permutation, realized: &DenseMatrix) -> Vec<f64> {
    (0..p.len()).map(|k| realized[(p.apply(k), k)].signum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    fn random_perm(n: usize, seed: u64) -> Permutation {
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(&mut crate::rng::seeded(seed));
        Permutation::new(v).unwrap()
    }

    fn product(layers: &[LinearCouplingLayer]) -> DenseMatrix {
        let n = 2 * layers[0].dim_half();
        layers.iter().fold(DenseMatrix::identity(n), |acc, l| &l.as_matrix() * &acc)
    }

    #[test]
    fn single_signed_swap_is_rotation() {
        let layers = signed_swap_layers(1, &[(0, 0)]).unwrap();
        assert_eq!(product(&layers), DenseMatrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]));
    }

    #[test]
    fn empty_signed_swap_is_identity() {
        let layers = signed_swap_layers(3, &[]).unwrap();
        assert!(layers.iter().all(|l| l.is_identity()));
    }

    #[test]
    fn two_disjoint_swaps_on_basis_vectors() {
        let layers = signed_swap_layers(3, &[(0, 2), (2, 1)]).unwrap();
        let seq = LayerSequence::new(6, layers.iter().cloned().map(Layer::Linear).collect()).unwrap();
        // (x_i, y_j) -> (y_j, -x_i): e_i goes to -e_{d+j}, e_{d+j} goes to e_i
        let want: [(usize, usize, f64); 6] = [(0, 5, -1.0), (1, 1, 1.0), (2, 4, -1.0), (3, 3, 1.0), (4, 2, 1.0), (5, 0, 1.0)];
        for (k, to, s) in want {
            let mut e = vec![0.0; 6];
            e[k] = 1.0;
            let y = seq.apply(&e).unwrap();
            let mut expect = vec![0.0; 6];
            expect[to] = s;
            assert_eq!(y, expect, "basis vector {k}");
        }
    }

    #[test]
    fn overlapping_pairs_rejected() {
        assert!(matches!(signed_swap_layers(3, &[(0, 1), (0, 2)]), Err(DecomposeError::OverlappingPairs)));
    }

    #[test]
    fn order2_three_cycle_matches_hand_construction() {
        let pi = Permutation::from_cycles(3, &[&[0, 1, 2]]).unwrap();
        let (s1, s2) = order2_factor(&pi);
        assert_eq!(s1.mapping(), &[1, 0, 2]);
        assert_eq!(s2.mapping(), &[2, 1, 0]);
        assert_eq!(s2.compose(&s1), pi);
    }

    #[test]
    fn order2_exhaustive_small() {
        fn all_perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in all_perms(n - 1) {
                for pos in 0..n {
                    let mut q = p.clone();
                    q.insert(pos, n - 1);
                    out.push(q);
                }
            }
            out
        }
        for n in 0..=6 {
            for v in all_perms(n) {
                let pi = Permutation::new(v).unwrap();
                let (s1, s2) = order2_factor(&pi);
                assert!(s1.is_involution() && s2.is_involution());
                assert_eq!(s2.compose(&s1), pi);
            }
        }
        let (a, b) = order2_factor(&Permutation::identity(5));
        assert!(a.is_identity() && b.is_identity());
    }

    #[test]
    fn permutation_layers_random() {
        for seed in 0..200 {
            let n = 2 * (1 + seed as usize % 8);
            let p = random_perm(n, seed);
            let seq = permutation_layers(&p).unwrap();
            assert!(seq.len() <= 21);
            let m = seq.as_matrix().unwrap();
            let pm = p.to_matrix();
            for i in 0..n {
                for j in 0..n {
                    assert!((m[(i, j)].abs() - pm[(i, j)]).abs() <= 1e-12);
                }
            }
            assert!(m.det().unwrap() > 0.0);
        }
    }

    #[test]
    fn permutation_layers_special_cases() {
        assert!(permutation_layers(&Permutation::identity(8)).unwrap().is_empty());
        let t = Permutation::transposition(8, 1, 6);
        assert_eq!(permutation_layers(&t).unwrap().len(), 3);
        assert!(permutation_layers(&Permutation::identity(3)).is_err());
    }
}
