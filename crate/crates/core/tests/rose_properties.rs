use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recurrence_core::counterexample::local_geodesy_check;
use recurrence_core::metric::{four_point_defect, gromov_product, GeodesicSpace, MetricSpace};
use recurrence_core::rose::{
    axis_point, Gen, cyclic_reduce, path_point, project_to_axis, rose_distance, substitution_word, tree_distance,
    word_reduce, EdgeWord, Letter, RoseConfig, RoseGeodesic, RoseTree, SubstitutionRule, TreePos,
};

const ALPHABET: [Letter; 4] = [Letter::A, Letter::A_INV, Letter::B, Letter::B_INV];

fn w(s: &str) -> EdgeWord {
    s.parse().unwrap()
}

fn random_reduced(r: &mut ChaCha8Rng, len: usize) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(len);
    while out.len() < len {
        let l = ALPHABET[r.gen_range(0..4)];
        if !out.last().is_some_and(|x| x.cancels(l)) {
            out.push(l);
        }
    }
    out
}

/// Every reduced word of length at most `depth`.
fn ball(depth: usize) -> Vec<EdgeWord> {
    let mut out = vec![EdgeWord::empty()];
    let mut frontier = vec![EdgeWord::empty()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for v in &frontier {
            for l in ALPHABET {
                if v.letters().last().is_some_and(|x| x.cancels(l)) {
                    continue;
                }
                next.push(v.mul(&EdgeWord::from_letters(vec![l])));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Dijkstra on the Cayley graph truncated to a ball; exact for vertices of
/// the ball because tree geodesics between them stay inside it.
fn graph_distances(nodes: &[EdgeWord], src: usize, cfg: &RoseConfig) -> Vec<f64> {
    let index: BTreeMap<String, usize> = nodes.iter().enumerate().map(|(i, v)| (v.to_string(), i)).collect();
    let mut dist = vec![f64::INFINITY; nodes.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Reverse((0u64, src)));
    while let Some(Reverse((key, u))) = heap.pop() {
        let du = f64::from_bits(key);
        if du > dist[u] {
            continue;
        }
        for l in ALPHABET {
            let v = nodes[u].mul(&EdgeWord::from_letters(vec![l]));
            if let Some(&j) = index.get(&v.to_string()) {
                let nd = du + cfg.edge_length(l.gen);
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Reverse((nd.to_bits(), j)));
                }
            }
        }
    }
    dist
}

#[test]
fn tree_distance_matches_graph_search() {
    let cfg = RoseConfig::golden();
    let nodes = ball(5);
    let pos = |s: &str| nodes.iter().position(|v| v.to_string() == s).unwrap();
    let from_ab = graph_distances(&nodes, pos("ab"), &cfg);
    assert!((from_ab[pos("abAb")] - (cfg.edge_length(Gen::A) + cfg.edge_length(Gen::B))).abs() < 1e-12);

    let mut r = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..40 {
        let src = r.gen_range(0..nodes.len());
        let dist = graph_distances(&nodes, src, &cfg);
        let p = TreePos::at_vertex(nodes[src].clone()).unwrap();
        for (j, v) in nodes.iter().enumerate() {
            let q = TreePos::at_vertex(v.clone()).unwrap();
            let d = tree_distance(&p, &q, &cfg).unwrap();
            assert!((d - dist[j]).abs() < 1e-9, "{} to {v}: {d} vs {}", nodes[src], dist[j]);
        }
    }
}

#[test]
fn four_point_condition_is_exact() {
    let tree = RoseTree::new(RoseConfig::golden());
    let mut r = ChaCha8Rng::seed_from_u64(32);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100_000 {
        let [x, y, z, base] = [(); 4].map(|_| tree.sample(&mut r, 8.0));
        worst = worst.max(four_point_defect(&tree, &x, &y, &z, &base));
    }
    assert!(worst <= 1e-12, "worst defect {worst}");
}

#[test]
fn gromov_product_is_common_prefix_length() {
    let cfg = RoseConfig::new(0.7, 1.3).unwrap();
    let tree = RoseTree::new(cfg);
    let mut r = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..5000 {
        let (lx, ly) = (r.gen_range(0..10), r.gen_range(0..10));
        let x = EdgeWord::from_letters(random_reduced(&mut r, lx));
        let mut yl = x.letters()[..r.gen_range(0..=lx)].to_vec();
        while yl.len() < ly {
            let l = ALPHABET[r.gen_range(0..4)];
            if !yl.last().is_some_and(|p: &Letter| p.cancels(l)) {
                yl.push(l);
            }
        }
        let y = EdgeWord::from_letters(yl);
        let prefix: f64 = x
            .letters()
            .iter()
            .zip(y.letters())
            .take_while(|(a, b)| a == b)
            .map(|(a, _)| cfg.edge_length(a.gen))
            .sum();
        let gp = gromov_product(
            &tree,
            &TreePos::at_vertex(x.clone()).unwrap(),
            &TreePos::at_vertex(y.clone()).unwrap(),
            &TreePos::base(),
        );
        assert!((gp - prefix).abs() < 1e-12, "({x}, {y}): {gp} vs {prefix}");
    }
}

#[test]
fn reduced_paths_are_geodesic_and_backtracks_are_not() {
    let cfg = RoseConfig::golden();
    let mut r = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..200 {
        let n = r.gen_range(1..12);
        let letters = random_reduced(&mut r, n);
        let total = EdgeWord::from_letters(letters.clone()).length(&cfg);
        let end = path_point(&letters, total, &cfg);
        assert!((tree_distance(&TreePos::base(), &end, &cfg).unwrap() - total).abs() < 1e-12);
        let (t1, t2) = (r.gen_range(0.0..=total), r.gen_range(0.0..=total));
        let d = tree_distance(&path_point(&letters, t1, &cfg), &path_point(&letters, t2, &cfg), &cfg).unwrap();
        assert!((d - (t1 - t2).abs()).abs() < 1e-12);

        let mut back = letters.clone();
        back.push(letters.last().unwrap().inv());
        let len = EdgeWord::from_letters(back.clone()).length(&cfg);
        let far = path_point(&back, len, &cfg);
        assert!(tree_distance(&TreePos::base(), &far, &cfg).unwrap() < len - 0.5);
    }
}

#[test]
fn tree_segments_and_lipschitz_projection() {
    let cfg = RoseConfig::golden();
    let tree = RoseTree::new(cfg);
    let mut r = ChaCha8Rng::seed_from_u64(35);
    for _ in 0..5000 {
        let (p, q) = (tree.sample(&mut r, 6.0), tree.sample(&mut r, 6.0));
        let d = tree.distance(&p, &q);
        let t = r.gen_range(0.0..=d);
        let m = tree.segment_point(&p, &q, t);
        assert!((tree.distance(&p, &m) - t).abs() < 1e-9);
        assert!((tree.distance(&m, &q) - (d - t)).abs() < 1e-9);
        assert!(rose_distance(&p.project(&cfg), &q.project(&cfg), &cfg) <= d + 1e-12);
    }
}

#[test]
fn axis_projection_beats_every_sample() {
    let cfg = RoseConfig::golden();
    let tree = RoseTree::new(cfg);
    let mut r = ChaCha8Rng::seed_from_u64(36);
    for _ in 0..300 {
        let n = r.gen_range(1..5);
        let g = cyclic_reduce(&EdgeWord::from_letters(random_reduced(&mut r, n)));
        if g.is_empty() {
            continue;
        }
        let p = tree.sample(&mut r, 6.0);
        let (sigma, dist) = project_to_axis(&p, &g, &cfg).unwrap();
        assert!((tree.distance(&p, &axis_point(&g, sigma, &cfg)) - dist).abs() < 1e-9);
        let best = (-2000..=2000)
            .map(|k| tree.distance(&p, &axis_point(&g, k as f64 * 0.01, &cfg)))
            .fold(f64::INFINITY, f64::min);
        assert!(dist <= best + 1e-12);
        assert!(best - dist < 0.011);
    }
}

#[test]
fn fibonacci_word_is_uniformly_recurrent() {
    for depth in 4..=12 {
        let word = substitution_word(SubstitutionRule::Fibonacci, depth);
        let letters = word.letters();
        let n_max = (letters.len() / 8).max(1);
        for n in 1..=n_max {
            let window = 4 * n;
            for start in 0..=letters.len() - n {
                let factor = &letters[start..start + n];
                for w0 in 0..=letters.len() - window {
                    let hay = &letters[w0..w0 + window];
                    assert!(
                        hay.windows(n).any(|x| x == factor),
                        "depth {depth}: factor at {start} of length {n} missing from window at {w0}"
                    );
                }
            }
        }
    }
}

#[test]
fn substitution_geodesics_are_local_geodesics() {
    let cfg = RoseConfig::golden();
    for rule in [SubstitutionRule::Fibonacci, SubstitutionRule::ThueMorse] {
        let g = RoseGeodesic::substitution(rule, 10, 0.5, cfg).unwrap();
        let local = g.to_local();
        let times: Vec<f64> = (0..200).map(|k| -20.0 + 0.2 * k as f64).collect();
        let u = 0.25 * cfg.shortest_petal();
        assert!(local_geodesy_check(&local, &times, u).unwrap().iter().all(|c| c.pass));
        for &t in &times {
            let d = tree_distance(&g.lift(t).unwrap(), &g.lift(t + 3.0).unwrap(), &cfg).unwrap();
            assert!((d - 3.0).abs() < 1e-9);
        }
    }
}

#[test]
fn reduction_is_idempotent_and_inverse_cancels() {
    let mut r = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..2000 {
        let raw: Vec<Letter> = (0..r.gen_range(0..16)).map(|_| ALPHABET[r.gen_range(0..4)]).collect();
        let red = word_reduce(&EdgeWord::from_letters(raw));
        assert!(red.is_reduced());
        assert_eq!(word_reduce(&red), red);
        assert!(red.mul(&red.inverse()).is_empty());
        let cyc = cyclic_reduce(&red);
        assert!(cyc.is_cyclically_reduced());
    }
    assert_eq!(word_reduce(&w("abBA")), EdgeWord::empty());
}
