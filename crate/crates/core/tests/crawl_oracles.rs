mod oracles;

use std::collections::{BTreeMap, BTreeSet};

use oracles::{best_modularity, modularity_oracle};
use recaudit_core::crawl::{cluster_channels, modularity, snowball_channels, ChannelGraph, Partition};
use recaudit_core::hash::CounterHash;
use recaudit_core::simulator::{planted_partition, SimParams, SimulatedPlatform};
use recaudit_core::source::RecommendationSource;

fn name(i: usize) -> String {
    format!("n{i:02}")
}

fn random_graph(n: usize, p: f64, seed: u64) -> (ChannelGraph, Vec<Vec<f64>>) {
    let key = CounterHash::new(seed);
    let mut g = ChannelGraph::new();
    let mut adj = vec![vec![0.0; n]; n];
    for i in 0..n {
        g.add_node(&name(i));
        for j in i + 1..n {
            if key.with(i as u64).with(j as u64).unit() < p {
                let w = 1 + key.with(i as u64).with(j as u64).with(1).index(3) as u64;
                g.add_edge(&name(i), &name(j), w);
                adj[i][j] = w as f64;
                adj[j][i] = w as f64;
            }
        }
    }
    (g, adj)
}

fn labels_of(p: &Partition, n: usize) -> Vec<usize> {
    (0..n).map(|i| p.community(&name(i)).unwrap()).collect()
}

#[test]
fn modularity_matches_pairwise_definition() {
    for seed in 0..20 {
        let (g, adj) = random_graph(8, 0.4, seed);
        if g.total_weight() == 0 {
            continue;
        }
        let labels: Vec<usize> = (0..8).map(|i| (i * 7 + seed as usize) % 3).collect();
        let p = Partition::from_assignment((0..8).map(|i| (name(i), labels[i])).collect());
        let q = modularity(&g, &p).unwrap();
        assert!((q - modularity_oracle(&adj, &labels)).abs() < 1e-12);
    }
}

#[test]
fn louvain_never_beats_exhaustive_optimum() {
    for seed in 0..30 {
        let n = 5 + (seed as usize % 4);
        let (g, adj) = random_graph(n, 0.45, 100 + seed);
        if g.total_weight() == 0 {
            continue;
        }
        let p = cluster_channels(&g).unwrap();
        let q = modularity(&g, &p).unwrap();
        let best = best_modularity(&adj);
        assert!(q <= best + 1e-12, "seed {seed}: {q} > {best}");
        assert!((q - modularity_oracle(&adj, &labels_of(&p, n))).abs() < 1e-12);
        let single = modularity(&g, &Partition::singletons(&g)).unwrap();
        assert!(q >= single - 1e-12);
    }
}

#[test]
fn two_triangles_reach_the_exhaustive_optimum() {
    let g = ChannelGraph::from_edges([
        ("n00", "n01", 1),
        ("n01", "n02", 1),
        ("n00", "n02", 1),
        ("n03", "n04", 1),
        ("n04", "n05", 1),
        ("n03", "n05", 1),
    ]);
    let mut adj = vec![vec![0.0; 6]; 6];
    for (a, b, w) in g.edges() {
        let (i, j) = (a[1..].parse::<usize>().unwrap(), b[1..].parse::<usize>().unwrap());
        adj[i][j] = w as f64;
        adj[j][i] = w as f64;
    }
    assert!((best_modularity(&adj) - 0.5).abs() < 1e-12);
    let p = cluster_channels(&g).unwrap();
    assert_eq!(labels_of(&p, 6), [0, 0, 0, 1, 1, 1]);
    assert_eq!(modularity(&g, &p).unwrap(), 0.5);
}

#[test]
fn planted_blocks_recovered() {
    for seed in 0..10 {
        let (edges, block) = planted_partition(2, 20, 0.9, 0.05, seed);
        let g = ChannelGraph::from_edges(
            edges
                .iter()
                .map(|&(a, b)| (name(a), name(b)))
                .collect::<Vec<_>>()
                .iter()
                .map(|(a, b)| (a.as_str(), b.as_str(), 1)),
        );
        let p = cluster_channels(&g).unwrap();
        assert_eq!(p.community_count(), 2, "seed {seed}");
        for i in 0..40 {
            for j in 0..40 {
                assert_eq!(
                    p.community(&name(i)) == p.community(&name(j)),
                    block[i] == block[j],
                    "seed {seed}"
                );
            }
        }
    }
}

/// Replays the crawl from scratch and checks every admission against a
/// recount of all recommendations observed before it.
#[test]
fn snowball_counts_match_brute_force_recount() {
    for seed in 0..5 {
        let platform = SimulatedPlatform::generate(&SimParams {
            channels: 50,
            videos_per_channel: 3,
            seed,
            ..SimParams::default()
        })
        .unwrap();
        let day = platform.on(SimParams::default().start);
        let seeds = vec![String::from("UC00000"), String::from("UC00001")];
        let result = snowball_channels(&day, &seeds, 30, 20).unwrap();

        let mut replay = Vec::new();
        for member in &result.channels {
            let last = day.fetch_last_video(member).unwrap();
            for rec in day.fetch_watch_next(&last.video_id, 20).unwrap() {
                let owner = day.fetch_video(&rec).unwrap().channel_id;
                replay.push((member.clone(), owner));
            }
        }
        assert_eq!(replay, result.observations);

        let mut members: BTreeSet<String> = seeds.iter().cloned().collect();
        for adm in &result.admissions {
            let mut counts = BTreeMap::<&str, u64>::new();
            for (_, rec) in &result.observations[..adm.observed] {
                *counts.entry(rec).or_insert(0) += 1;
            }
            let best = counts
                .iter()
                .filter(|(c, _)| !members.contains(**c))
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .unwrap();
            assert_eq!(*best.0, adm.channel_id);
            assert_eq!(*best.1, adm.count);
            members.insert(adm.channel_id.clone());
        }
    }
}
