//! GOSPA, RMSE over assigned targets, and detection rates.

use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq)]
pub struct GospaResult {
    pub gospa: f64,
    /// Sum of `d^p` over assigned pairs.
    pub localization_component: f64,
    /// `xi^p / 2 * (|Z| + |Z_hat| - 2 |assignment|)`.
    pub cardinality_component: f64,
    /// `(truth index, estimate index)` pairs, sorted by truth index.
    pub assignment: Vec<(usize, usize)>,
    pub detection_rate: f64,
    pub false_rate: f64,
    pub missed_rate: f64,
    pub rmse: Option<f64>,
}

fn finish(
    truth: &[Point2],
    estimates: &[Point2],
    p: f64,
    xi: f64,
    mut assignment: Vec<(usize, usize)>,
) -> GospaResult {
    assignment.sort_unstable();
    let (n, m, k) = (truth.len(), estimates.len(), assignment.len());
    let loc: f64 = assignment
        .iter()
        .map(|&(i, j)| truth[i].distance(estimates[j]).powf(p))
        .sum();
    let card = 0.5 * xi.powf(p) * (n + m - 2 * k) as f64;
    let n_c = n + m - k;
    let gospa = if n_c == 0 {
        0.0
    } else {
        ((loc + card) / n_c as f64).powf(1.0 / p)
    };
    let detection_rate = if n == 0 { 0.0 } else { k as f64 / n as f64 };
    GospaResult {
        gospa,
        localization_component: loc,
        cardinality_component: card,
        detection_rate,
        false_rate: if m == 0 { 0.0 } else { (m - k) as f64 / m as f64 },
        missed_rate: if n == 0 { 0.0 } else { 1.0 - detection_rate },
        rmse: rmse(truth, estimates, &assignment),
        assignment,
    }
}

/// Minimum-cost perfect matching of a square cost matrix (row-major).
/// Returns the column assigned to each row.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    // Shortest augmenting paths with potentials, 1-based with a virtual column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            col_of_row[row_of[j] - 1] = j - 1;
        }
    }
    col_of_row
}

/// GOSPA with the assignment minimizing `sum min(d^p, xi^p)`; pairs at or
/// beyond the cutoff are left unassigned.
pub fn gospa(truth: &[Point2], estimates: &[Point2], p: f64, xi_g: f64) -> GospaResult {
    let (n, m) = (truth.len(), estimates.len());
    let size = n.max(m);
    let cap = xi_g.powf(p);
    let mut cost = vec![cap; size * size];
    for i in 0..n {
        for j in 0..m {
            cost[i * size + j] = truth[i].distance(estimates[j]).powf(p).min(cap);
        }
    }
    let cols = hungarian(&cost, size);
    let assignment = (0..n)
        .filter_map(|i| {
            let j = cols[i];
            (j < m && truth[i].distance(estimates[j]) < xi_g).then_some((i, j))
        })
        .collect();
    finish(truth, estimates, p, xi_g, assignment)
}

/// Root mean squared distance over assigned pairs, `None` without pairs.
pub fn rmse(truth: &[Point2], estimates: &[Point2], assignment: &[(usize, usize)]) -> Option<f64> {
    if assignment.is_empty() {
        return None;
    }
    let s: f64 = assignment
        .iter()
        .map(|&(i, j)| truth[i].distance(estimates[j]).powi(2))
        .sum();
    Some((s / assignment.len() as f64).sqrt())
}

/// Exhaustive search over all partial matchings with pair distances below
/// the cutoff. Minimizes the unnormalized cost; ties go to the lower metric.
pub fn brute_force_gospa(
    truth: &[Point2],
    estimates: &[Point2],
    p: f64,
    xi_g: f64,
) -> Result<GospaResult> {
    if truth.len() > 6 || estimates.len() > 6 {
        return Err(Error::Dimension("brute-force GOSPA is limited to six points per set".into()));
    }
    let mut best: Option<(f64, f64, Vec<(usize, usize)>)> = None;
    let mut current = Vec::new();
    let mut used = vec![false; estimates.len()];
    search(truth, estimates, p, xi_g, 0, &mut used, &mut current, &mut best);
    let (_, _, assignment) = best.expect("empty matching is always feasible");
    Ok(finish(truth, estimates, p, xi_g, assignment))
}

#[allow(clippy::too_many_arguments)]
fn search(
    truth: &[Point2],
    estimates: &[Point2],
    p: f64,
    xi: f64,
    i: usize,
    used: &mut [bool],
    current: &mut Vec<(usize, usize)>,
    best: &mut Option<(f64, f64, Vec<(usize, usize)>)>,
) {
    if i == truth.len() {
        let r = finish(truth, estimates, p, xi, current.clone());
        let total = r.localization_component + r.cardinality_component;
        let better = match best {
            None => true,
            Some((bt, bg, _)) => total < *bt || (total == *bt && r.gospa < *bg),
        };
        if better {
            *best = Some((total, r.gospa, current.clone()));
        }
        return;
    }
    search(truth, estimates, p, xi, i + 1, used, current, best);
    for j in 0..estimates.len() {
        if used[j] || truth[i].distance(estimates[j]) >= xi {
            continue;
        }
        used[j] = true;
        current.push((i, j));
        search(truth, estimates, p, xi, i + 1, used, current, best);
        current.pop();
        used[j] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn empty_sets() {
        let r = gospa(&[], &[], 2.0, 5.0);
        assert_eq!(r.gospa, 0.0);
        assert_eq!((r.detection_rate, r.false_rate, r.missed_rate), (0.0, 0.0, 0.0));
        assert_eq!(r.rmse, None);
    }

    #[test]
    fn one_missed_target() {
        let r = gospa(&[pt(0.0, 0.0)], &[], 2.0, 5.0);
        assert!((r.gospa - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!((r.detection_rate, r.missed_rate), (0.0, 1.0));
    }

    #[test]
    fn partial_assignment_example() {
        let r = gospa(&[pt(0.0, 0.0), pt(10.0, 0.0)], &[pt(0.0, 1.0)], 2.0, 5.0);
        assert_eq!(r.assignment, vec![(0, 0)]);
        assert!((r.gospa - (13.5f64 / 2.0).sqrt()).abs() < 1e-12);
        assert_eq!((r.detection_rate, r.false_rate), (0.5, 0.0));
        // N_c * gospa^2 identity
        let n_c = 2.0;
        assert!((r.gospa.powi(2) * n_c - (r.localization_component + r.cardinality_component)).abs() < 1e-12);
    }

    #[test]
    fn far_apart_sets_have_no_assignment() {
        let r = gospa(&[pt(0.0, 0.0), pt(50.0, 0.0)], &[pt(20.0, 20.0)], 2.0, 5.0);
        assert!(r.assignment.is_empty());
        assert!((r.gospa - 5.0 / 2f64.sqrt()).abs() < 1e-12);
        let b = brute_force_gospa(&[pt(0.0, 0.0)], &[pt(0.0, 3.0)], 2.0, 5.0).unwrap();
        assert!((b.gospa - 3.0).abs() < 1e-12);
        assert!((gospa(&[pt(0.0, 0.0)], &[pt(0.0, 3.0)], 2.0, 5.0).gospa - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rmse_examples() {
        let z = [pt(0.0, 0.0), pt(5.0, 0.0)];
        assert_eq!(rmse(&z, &z, &[(0, 0), (1, 1)]), Some(0.0));
        assert!((rmse(&z, &[pt(0.4, 0.0)], &[(0, 0)]).unwrap() - 0.4).abs() < 1e-15);
        let e = [pt(0.3, 0.0), pt(5.0, 0.5)];
        assert!((rmse(&z, &e, &[(0, 0), (1, 1)]).unwrap() - 0.17f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn oversized_brute_force_is_rejected() {
        let big = vec![pt(0.0, 0.0); 7];
        assert!(brute_force_gospa(&big, &[], 2.0, 5.0).is_err());
    }

    #[test]
    fn hungarian_small() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        assert_eq!(hungarian(&cost, 3), vec![1, 0, 2]);
        assert!(hungarian(&[], 0).is_empty());
    }

    fn random_set(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point2> {
        (0..n)
            .map(|_| pt(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)))
            .collect()
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..2000 {
            let (n, m) = (rng.gen_range(0..=5), rng.gen_range(0..=5));
            let z = random_set(&mut rng, n);
            let e = random_set(&mut rng, m);
            let a = gospa(&z, &e, 2.0, 5.0);
            let b = brute_force_gospa(&z, &e, 2.0, 5.0).unwrap();
            assert!((a.gospa - b.gospa).abs() < 1e-12, "{z:?} {e:?}");
        }
    }

    proptest! {
        #[test]
        fn symmetric_in_its_arguments(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (n, m) = (rng.gen_range(0..=5), rng.gen_range(0..=5));
            let z = random_set(&mut rng, n);
            let e = random_set(&mut rng, m);
            let ab = gospa(&z, &e, 2.0, 5.0);
            let ba = gospa(&e, &z, 2.0, 5.0);
            prop_assert!((ab.gospa - ba.gospa).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariant(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (n, m) = (rng.gen_range(0..=5), rng.gen_range(0..=5));
            let z = random_set(&mut rng, n);
            let e = random_set(&mut rng, m);
            let mut zs = z.clone();
            let mut es = e.clone();
            zs.shuffle(&mut rng);
            es.shuffle(&mut rng);
            let a = gospa(&z, &e, 2.0, 5.0);
            let b = gospa(&zs, &es, 2.0, 5.0);
            prop_assert!((a.gospa - b.gospa).abs() < 1e-12);
            prop_assert_eq!(a.assignment.len(), b.assignment.len());
            prop_assert!((a.detection_rate - b.detection_rate).abs() < 1e-15);
            match (a.rmse, b.rmse) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                (x, y) => prop_assert_eq!(x, y),
            }
        }

        #[test]
        fn distant_new_target_never_lowers_total_cost(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (n, m) = (rng.gen_range(0..=4), rng.gen_range(1..=4));
            let z = random_set(&mut rng, n);
            let e = random_set(&mut rng, m);
            let before = gospa(&z, &e, 2.0, 5.0);
            let mut z2 = z.clone();
            z2.push(pt(100.0, 100.0));
            let after = gospa(&z2, &e, 2.0, 5.0);
            // the 1/N_c normalization can lower the metric itself; the
            // unnormalized cost is monotone
            let total = |r: &GospaResult| r.localization_component + r.cardinality_component;
            prop_assert!(total(&after) >= total(&before) - 1e-12);
            prop_assert!(before.assignment.iter().all(|&(i, j)| z[i].distance(e[j]) < 5.0));
            let want_md = if n == 0 { 0.0 } else { 1.0 - before.detection_rate };
            prop_assert!((before.missed_rate - want_md).abs() < 1e-15);
        }
    }
}
