mod common;

use std::collections::HashMap;

use trustfactor::data::{Sign, SocialGraph, SparseRatings};
use trustfactor::experiments::batch::batch_study;
use trustfactor::experiments::consistency::{consistency_eval, ConsistencyConfig};
use trustfactor::experiments::grid::{argmin, grid_search, GridAxis};
use trustfactor::experiments::split::split_ratings;
use trustfactor::experiments::synth::{synth_generate, Synthetic, SyntheticSpec};
use trustfactor::experiments::tradeoff::distrust_tradeoff_run;
use trustfactor::experiments::evaluate_predictor;
use trustfactor::factors::FactorModel;
use trustfactor::metrics::{ndcg_at_k, precision_recall_at_k, RankedList};
use trustfactor::neighborhood::{pearson, social_pool, NbConfig, NbVariant, NeighborhoodModel};
use trustfactor::optimize::StopReason;
use trustfactor::params::Hyperparams;
use trustfactor::registry::{fit_factors, MethodConfig, OptimizerKind, Registry, TrainingData};
use trustfactor::rng::substream;
use trustfactor::triplets::{extract_triplets, StoreMode, Triplet, TripletStore};
use trustfactor::Error;

use common::{random_graph, random_ratings};

fn small_synth(seed: u64) -> Synthetic {
    synth_generate(&SyntheticSpec {
        n_users: 60,
        n_items: 40,
        trust_edges: 200,
        distrust_edges: 200,
        seed,
        ..SyntheticSpec::default()
    })
    .unwrap()
}

fn quick_config() -> MethodConfig {
    MethodConfig {
        hp: Hyperparams {
            rank: 3,
            epochs: 40,
            batch_size: 16,
            ..Hyperparams::default()
        },
        seed: 9,
        ..MethodConfig::default()
    }
}

/// Users 0..3 with 8, 3 and 4 triplets respectively.
fn uneven_graph() -> SocialGraph {
    let mut g = SocialGraph::new(9);
    let edges = [
        (0, 1, Sign::Trust),
        (0, 3, Sign::Trust),
        (0, 5, Sign::Trust),
        (0, 6, Sign::Trust),
        (0, 2, Sign::Distrust),
        (0, 4, Sign::Distrust),
        (1, 0, Sign::Trust),
        (1, 2, Sign::Distrust),
        (1, 7, Sign::Distrust),
        (1, 8, Sign::Distrust),
        (2, 0, Sign::Trust),
        (2, 1, Sign::Trust),
        (2, 7, Sign::Distrust),
        (2, 8, Sign::Distrust),
    ];
    for (a, b, s) in edges {
        g.add_edge(a, b, s).unwrap();
    }
    g
}

#[test]
fn triplet_sampling_is_uniform() {
    // chi-square with 14 degrees of freedom, critical value at p = 0.001
    const CRITICAL: f64 = 36.12;
    const DRAWS: usize = 60_000;
    let g = uneven_graph();
    for mode in [StoreMode::Materialized, StoreMode::Lazy] {
        let store = TripletStore::build(&g, mode);
        assert_eq!(store.total(), 15);
        let mut rng = substream(1, "chi-square", 0);
        let mut counts: HashMap<Triplet, usize> = HashMap::new();
        for _ in 0..DRAWS {
            *counts.entry(store.sample(&mut rng).unwrap()).or_default() += 1;
        }
        assert_eq!(counts.len(), 15);
        let expected = DRAWS as f64 / 15.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < CRITICAL, "{mode:?}: chi-square {chi2}");
    }
}

#[test]
fn empty_store_refuses_to_sample() {
    let store = extract_triplets(&SocialGraph::new(3));
    let mut rng = substream(0, "empty", 0);
    assert!(matches!(store.sample(&mut rng), Err(Error::NoSocialConstraints)));
}

/// Resnick prediction computed directly from the definitions.
fn manual_prediction(
    ratings: &SparseRatings,
    graph: &SocialGraph,
    variant: NbVariant,
    (p, q): (usize, usize),
    u: usize,
    item: usize,
) -> f64 {
    let rows = ratings.by_user();
    let mean = |v: usize| -> Option<f64> {
        (!rows[v].is_empty()).then(|| rows[v].iter().map(|r| r.1).sum::<f64>() / rows[v].len() as f64)
    };
    let candidates: Vec<usize> = match social_pool(graph, u, variant, p, q) {
        Some(pool) => pool,
        None => (0..ratings.n_users()).filter(|&v| v != u).collect(),
    };
    let (mut num, mut den) = (0.0, 0.0);
    for v in candidates {
        let Some(w) = pearson(&rows[u], &rows[v], 3) else { continue };
        let Some(r) = rows[v].iter().find(|x| x.0 == item).map(|x| x.1) else { continue };
        if w > 0.0 {
            num += w * (r - mean(v).unwrap());
            den += w;
        }
    }
    let raw = match mean(u) {
        Some(m) if den > 0.0 => m + num / den,
        Some(m) => m,
        None => ratings.mean().unwrap(),
    };
    ratings.scale().clamp(raw)
}

#[test]
fn neighborhood_predictions_match_manual_resnick() {
    for seed in 0..4 {
        let mut rng = substream(seed, "nb-oracle", 0);
        let ratings = random_ratings(&mut rng, 12, 10, 0.6);
        let graph = random_graph(&mut rng, 12, 0.25, 0.15);
        for variant in NbVariant::ALL {
            let (p, q) = (2, 2);
            let config = NbConfig {
                variant,
                p,
                q,
                ..NbConfig::default()
            };
            let model = NeighborhoodModel::fit(&ratings, &graph, config).unwrap();
            for u in 0..12 {
                for item in 0..10 {
                    let got = model.predict(u, item).unwrap();
                    let want = manual_prediction(&ratings, &graph, variant, (p, q), u, item);
                    assert!((got - want).abs() < 1e-12, "{variant} u{u} i{item}: {got} vs {want}");
                }
            }
            assert!(model.predict(12, 0).is_err());
        }
    }
}

#[test]
fn consistency_matches_brute_force_ranking() {
    let mut rng = substream(3, "consistency-oracle", 0);
    let ratings = random_ratings(&mut rng, 25, 15, 0.5);
    let graph = random_graph(&mut rng, 25, 0.15, 0.1);
    for relation in [Sign::Trust, Sign::Distrust] {
        let config = ConsistencyConfig {
            relation,
            ..ConsistencyConfig::default()
        };
        let rows = ratings.by_user();
        let mut ndcg10 = Vec::new();
        let mut recall20 = Vec::new();
        for u in 0..25 {
            let items: Vec<usize> = rows[u].iter().map(|r| r.0).collect();
            let mut scored: Vec<(f64, bool, usize)> = (0..25)
                .filter(|&v| v != u && rows[v].iter().any(|r| items.contains(&r.0)))
                .map(|v| {
                    let s = pearson(&rows[u], &rows[v], 3).unwrap_or(0.0);
                    let s = if relation == Sign::Trust { s } else { -s };
                    (s, graph.neighbors(u, relation).contains(&v), v)
                })
                .collect();
            if !scored.iter().any(|s| s.1) {
                continue;
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
            let list = RankedList::new(scored.iter().map(|s| s.1).collect());
            ndcg10.push(ndcg_at_k(&list, 10));
            recall20.push(precision_recall_at_k(&list, 20).1.unwrap());
        }
        let bins = consistency_eval(&ratings, &graph, &config).unwrap();
        let all = bins.last().unwrap();
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert_eq!(all.users, ndcg10.len());
        assert!((all.ndcg10 - avg(&ndcg10)).abs() < 1e-12);
        assert!((all.recall20 - avg(&recall20)).abs() < 1e-12);
        let binned: usize = bins[..bins.len() - 1].iter().map(|b| b.users).sum();
        assert_eq!(binned, all.users);
    }
}

#[test]
fn shuffled_relevance_changes_ranking_but_not_counts() {
    let s = small_synth(5);
    let base = consistency_eval(&s.ratings, &s.graph, &ConsistencyConfig::default()).unwrap();
    let shuffled = consistency_eval(
        &s.ratings,
        &s.graph,
        &ConsistencyConfig {
            shuffle_seed: Some(1),
            ..ConsistencyConfig::default()
        },
    )
    .unwrap();
    assert_eq!(base.last().unwrap().users, shuffled.last().unwrap().users);
    // cluster-aligned trust should beat the permuted control
    assert!(base.last().unwrap().map > shuffled.last().unwrap().map);
}

#[test]
fn grid_surface_matches_individual_fits() {
    let s = small_synth(1);
    let (train, validation) = split_ratings(&s.ratings, 0.8, 1, 0).unwrap();
    let registry = Registry::builtin();
    let method = registry.get("mf-td").unwrap();
    let base = quick_config();
    let data = TrainingData {
        ratings: &train,
        graph: &s.graph,
        validation: Some(&validation),
    };
    let lambda_s = [0.0, 5.0, 20.0];
    let second = [1.0, 5.0];
    let result = grid_search(method, data, &base, GridAxis::LambdaU, &lambda_s, &second).unwrap();
    assert_eq!(result.surface.len(), 6);
    for point in &result.surface {
        let mut config = base.clone();
        config.hp.lambda_s = point.lambda_s;
        config.hp.lambda_u = point.second;
        let fit_data = TrainingData {
            validation: None,
            ..data
        };
        let predictor = method.fit(fit_data, &config).unwrap();
        let rmse = evaluate_predictor(predictor.as_ref(), &validation).unwrap().rmse;
        assert_eq!(rmse.to_bits(), point.rmse.to_bits());
    }
    assert_eq!(Some(result.best), argmin(&result.surface));
    let no_validation = TrainingData {
        validation: None,
        ..data
    };
    assert!(grid_search(method, no_validation, &base, GridAxis::LambdaV, &lambda_s, &second).is_err());
}

#[test]
fn tradeoff_reference_row_uses_full_graph() {
    let s = small_synth(2);
    let (train, test) = split_ratings(&s.ratings, 0.8, 2, 0).unwrap();
    let config = quick_config();
    let rows = distrust_tradeoff_run(&train, &test, &s.graph, 0.9, &[0.0, 0.5, 1.0], &config).unwrap();
    assert_eq!(rows.len(), 4);
    let reference = rows.last().unwrap();
    assert_eq!((reference.method, reference.trust_fraction, reference.distrust_fraction), ("mf-t", 1.0, 0.0));
    let registry = Registry::builtin();
    let data = TrainingData {
        ratings: &train,
        graph: &s.graph,
        validation: None,
    };
    let direct = registry.get("mf-t").unwrap().fit(data, &config).unwrap();
    assert_eq!(evaluate_predictor(direct.as_ref(), &test).unwrap(), reference.accuracy);
    assert!(rows[..3].iter().all(|r| r.method == "mf-td" && r.trust_fraction == 0.9));
}

#[test]
fn batch_study_shares_initialization_with_plain_gd() {
    let s = small_synth(4);
    let (train, test) = split_ratings(&s.ratings, 0.8, 4, 0).unwrap();
    let config = quick_config();
    let runs = batch_study(&train, &test, &s.graph, &config, &[8, 32]).unwrap();
    assert_eq!(runs.iter().map(|r| r.label()).collect::<Vec<_>>(), ["gd", "sgd-8", "sgd-32"]);
    let data = TrainingData {
        ratings: &train,
        graph: &s.graph,
        validation: Some(&test),
    };
    let init = FactorModel::random(60, 40, 3, config.seed);
    let (_, report) = fit_factors(data, &config, config.hp.triplet_margin(), init).unwrap();
    assert_eq!(report.trajectory(), runs[0].report.trajectory());
    for run in &runs {
        assert_eq!(run.report.records.len(), config.hp.epochs);
        assert_eq!(run.report.initial_objective, runs[0].report.initial_objective);
        assert!(run.final_accuracy().is_some());
    }
}

#[test]
fn lazy_store_runs_with_sgd_only() {
    let s = small_synth(6);
    let registry = Registry::builtin();
    let data = TrainingData {
        ratings: &s.ratings,
        graph: &s.graph,
        validation: None,
    };
    let mut config = quick_config();
    config.store_mode = StoreMode::Lazy;
    config.optimizer = OptimizerKind::Sgd;
    let fitted = registry.get("mf-td").unwrap().fit(data, &config).unwrap();
    assert!(fitted.factors().unwrap().is_finite());
    config.optimizer = OptimizerKind::Gd;
    assert!(matches!(
        registry.get("mf-td").unwrap().fit(data, &config),
        Err(Error::LazyFullGradient)
    ));
}

#[test]
fn sgd_rejects_batches_larger_than_the_triplet_set() {
    let s = small_synth(7);
    let total = extract_triplets(&s.graph).total() as usize;
    let mut config = quick_config();
    config.optimizer = OptimizerKind::Sgd;
    config.hp.batch_size = total + 1;
    let data = TrainingData {
        ratings: &s.ratings,
        graph: &s.graph,
        validation: None,
    };
    assert!(Registry::builtin().get("mf-td").unwrap().fit(data, &config).is_err());
    config.hp.batch_size = total;
    assert!(Registry::builtin().get("mf-td").unwrap().fit(data, &config).is_ok());
}

#[test]
fn early_stopping_halts_on_stalled_validation() {
    let s = small_synth(8);
    let (train, validation) = split_ratings(&s.ratings, 0.8, 8, 0).unwrap();
    let mut config = quick_config();
    config.hp.epochs = 3000;
    config.hp.eta0 = 0.02;
    config.patience = Some(2);
    let data = TrainingData {
        ratings: &train,
        graph: &s.graph,
        validation: Some(&validation),
    };
    let fitted = Registry::builtin().get("mf").unwrap().fit(data, &config).unwrap();
    let report = fitted.report().unwrap();
    assert_eq!(report.stop_reason, StopReason::EarlyStop);
    assert!(report.records.len() < 3000);
    assert!(report.records.iter().all(|r| r.validation.is_some()));
}

#[test]
fn registry_lists_every_method() {
    let names: Vec<&str> = Registry::builtin().names().collect();
    assert_eq!(names, ["mf", "mf-d", "mf-t", "mf-td", "nb", "nb-t", "nb-td-d", "nb-td-f"]);
    assert!(matches!(Registry::builtin().get("svd"), Err(Error::UnknownMethod(_))));
}

#[test]
fn synthetic_graph_follows_clusters() {
    let a = small_synth(3);
    let b = small_synth(3);
    assert_eq!(a.ratings, b.ratings);
    assert_eq!(a.graph.trust_edge_count(), 200);
    assert_eq!(a.graph.distrust_edge_count(), 200);
    for e in a.graph.edges() {
        let same = a.clusters[e.from] == a.clusters[e.to];
        assert_eq!(same, e.sign == Sign::Trust);
    }
    let c = small_synth(4);
    assert_ne!(a.ratings, c.ratings);
}
