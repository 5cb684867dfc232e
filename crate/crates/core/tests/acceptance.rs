//! Acceptance criteria 1-8. Each criterion prints one PASS/FAIL line; the
//! test fails if any criterion does.
//!
//!     cargo test -p framemap --test acceptance

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use framemap::coherence::{CoherenceMatrix, Combiner};
use framemap::corpus::{largest_remainder_quotas, stratified_sample, Corpus, Document};
use framemap::evaluation::{frame_consistency, js_divergence, run_grid, summary_stats, EndpointMatch};
use framemap::extraction::{
    build_lp, decode_map, solve_lp, ExtractionError, ExtractionParams, MapEdge, MapNode, NarrativeMap,
};
use framemap::synthetic::{generate, SyntheticConfig, GVFC_FRAME_COUNTS};
use framemap::topics::{TopicConfig, TopicModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

/// Hamilton apportionment with exact integer arithmetic: floor of
/// `count * n / total`, leftovers to the largest remainders, ties to the
/// lower frame.
fn hamilton_oracle(counts: &[usize], n: usize) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let mut quotas: Vec<usize> = counts.iter().map(|c| c * n / total).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(counts[i] * n % total), i));
    let left = n - quotas.iter().sum::<usize>();
    for &i in order.iter().take(left) {
        quotas[i] += 1;
    }
    quotas
}

fn criterion_1() -> Outcome {
    let expected = hamilton_oracle(&GVFC_FRAME_COUNTS, 131);
    let quotas = largest_remainder_quotas(&GVFC_FRAME_COUNTS, 131);
    check(quotas == expected, || format!("quotas {quotas:?} vs oracle {expected:?}"))?;
    let grouped = [
        quotas[0] + quotas[1] + quotas[2],
        quotas[3] + quotas[4],
        quotas[5..].iter().sum(),
    ];
    check(grouped == [64, 20, 47], || format!("grouped quotas {grouped:?}"))?;
    let share = 100.0 * grouped[0] as f64 / 131.0;
    check((share - 48.8).abs() <= 0.5, || format!("frame-1 share {share:.2}%"))?;

    // the sampler realises the quotas on a corpus with the published marginals
    let data = generate(&SyntheticConfig::default());
    let a = stratified_sample(&data.corpus, 131, 42).map_err(|e| e.to_string())?;
    let b = stratified_sample(&data.corpus, 131, 42).map_err(|e| e.to_string())?;
    check(a == b, || "sampling is not deterministic".into())?;
    let a = a.apply_frame_grouping().map_err(|e| e.to_string())?;
    let realised: Vec<usize> = (1..=3).map(|f| a.frames().filter(|&x| x == f).count()).collect();
    check(realised == [64, 20, 47], || format!("sampled grouped counts {realised:?}"))?;
    Ok(format!("grouped quotas {grouped:?}, frame-1 share {share:.2}% (target 48.8 ± 0.5)"))
}

fn jsd_oracle(p: &[f64], q: &[f64]) -> f64 {
    let kl = |a: &[f64], m: &[f64]| -> f64 {
        a.iter()
            .zip(m)
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, y)| x * (x / y).log2())
            .sum()
    };
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    0.5 * kl(p, &m) + 0.5 * kl(q, &m)
}

fn criterion_2() -> Outcome {
    let p = [0.2, 0.5, 0.3];
    check(js_divergence(&p, &p) == 0.0, || "JSD(P,P) != 0".into())?;
    let disjoint = js_divergence(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]);
    check(disjoint == 1.0, || format!("disjoint one-hots gave {disjoint}"))?;
    let v: f64 = js_divergence(&[0.5, 0.5], &[0.25, 0.75]);
    check((v - 0.04879).abs() <= 1e-4, || format!("JSD((.5,.5),(.25,.75)) = {v}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = rng.random_range(2..=9);
        let mut draw = || -> Vec<f64> {
            // some zero cells exercise the 0 log 0 convention
            let raw: Vec<f64> = (0..k)
                .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
                .collect();
            let s: f64 = raw.iter().sum();
            if s == 0.0 {
                let mut one = vec![0.0; k];
                one[0] = 1.0;
                one
            } else {
                raw.iter().map(|x| x / s).collect()
            }
        };
        let (p, q) = (draw(), draw());
        let d = js_divergence(&p, &q);
        check(d == js_divergence(&q, &p), || format!("asymmetric on {p:?} {q:?}"))?;
        check((0.0..=1.0).contains(&d), || format!("out of bounds: {d}"))?;
        worst = worst.max((d - jsd_oracle(&p, &q)).abs());
    }
    check(worst < 1e-12, || format!("max deviation from oracle {worst:e}"))?;
    Ok(format!("fixed cases exact; 1000 random pairs symmetric, bounded, max |Δ| vs oracle {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let sizes = [24.0, 21.0, 19.0, 16.0, 17.0, 22.0, 22.0, 22.0, 15.0];
    let s = summary_stats(&sizes).ok_or("no stats")?;
    let mean = sizes.iter().sum::<f64>() / 9.0;
    check((s.mean - mean).abs() < 1e-12 && (s.mean - 19.78).abs() < 0.005, || format!("mean {}", s.mean))?;
    check(s.median == 21.0, || format!("median {}", s.median))?;
    check((s.std - 3.15).abs() <= 0.005, || format!("std {}", s.std))?;
    Ok(format!("mean {:.4}, median {}, sample std {:.4}", s.mean, s.median, s.std))
}

fn criterion_4() -> Outcome {
    let t0 = Utc.with_ymd_and_hms(2018, 2, 14, 0, 0, 0).unwrap();
    let frames: Vec<u8> = (0..24).map(|i| if [3, 7, 11, 15, 19].contains(&i) { 2 } else { 1 }).collect();
    let ids: Vec<String> = (0..24).map(|i| format!("ev{i:02}")).collect();
    let map: NarrativeMap<f64> = NarrativeMap {
        params: ExtractionParams::default(),
        source: ids[0].clone(),
        sink: ids[23].clone(),
        objective: 0.5,
        nodes: (0..24)
            .map(|i| MapNode {
                id: ids[i].clone(),
                headline: format!("event {i}"),
                timestamp: t0 + chrono::Duration::days(i as i64),
                source: "wire".into(),
                frame: frames[i],
                on_main: true,
            })
            .collect(),
        edges: ids
            .windows(2)
            .map(|w| MapEdge { from: w[0].clone(), to: w[1].clone(), flow: 1.0, coherence: 0.5 })
            .collect(),
        main_storyline: ids.clone(),
    };
    map.validate()?;
    let m = frame_consistency(&map).map_err(|e| e.to_string())?;
    let EndpointMatch::Shared { frame: 1, rate } = m.endpoint_match else {
        return Err(format!("unexpected endpoint match {:?}", m.endpoint_match));
    };
    check((rate - 0.792).abs() <= 0.001, || format!("rate {rate}"))?;
    Ok(format!("endpoint match rate {rate:.4} = 19/24"))
}

/// Flow-level checks computed from the edge list, independent of the
/// program's own rows.
fn structural_check(
    model: &framemap::extraction::LpModel<f64>,
    sol: &framemap::extraction::ExtractionSolution<f64>,
    tol: f64,
) -> Result<(), String> {
    let n = model.ids.len();
    let mut inflow = vec![0.0; n];
    let mut outflow = vec![0.0; n];
    for (k, &(i, j)) in model.edges.iter().enumerate() {
        let x = sol.flows[k];
        check(x >= -tol && x <= 1.0 + tol, || format!("flow {x} out of [0,1]"))?;
        outflow[i] += x;
        inflow[j] += x;
    }
    check((outflow[0] - 1.0).abs() <= tol, || format!("source outflow {}", outflow[0]))?;
    check((inflow[n - 1] - 1.0).abs() <= tol, || format!("sink inflow {}", inflow[n - 1]))?;
    for v in 1..n - 1 {
        check((inflow[v] - outflow[v]).abs() <= tol, || format!("conservation at {} off by {}", model.ids[v], inflow[v] - outflow[v]))?;
    }
    let total: f64 = sol.flows.iter().sum();
    let k = model.params.k as f64;
    check((total - (k - 1.0)).abs() <= tol, || format!("total flow {total} vs {}", k - 1.0))?;
    let covered: f64 = sol.coverage.iter().sum();
    check(covered >= model.required_topics as f64 - tol, || format!("coverage {covered} < {}", model.required_topics))?;
    Ok(())
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut solved, mut infeasible) = (0, 0);
    for case in 0..200 {
        let n = rng.random_range(8..=40);
        let inst = common::random_instance(n, 5_000 + case);
        let params = ExtractionParams::default();
        let model = build_lp(&inst.matrix, &inst.topics, inst.first_id(), inst.last_id(), &params)
            .map_err(|e| format!("case {case}: {e}"))?;
        let sol = match solve_lp(&model) {
            Ok(sol) => sol,
            Err(ExtractionError::Infeasible { binding }) => {
                infeasible += 1;
                eprintln!("case {case} (n={n}) infeasible: {binding}");
                continue;
            }
            Err(e) => return Err(format!("case {case}: {e}")),
        };
        structural_check(&model, &sol, 1e-6).map_err(|e| format!("case {case} (n={n}): {e}"))?;
        let x = sol.values();
        for r in 0..model.program.constraints.len() {
            let v = model.program.violation(r, &x);
            check(v <= 1e-6, || format!("case {case}: row {r} ({:?}) violated by {v}", model.classes[r]))?;
        }
        let map = decode_map(&sol, &model, &inst.corpus).map_err(|e| format!("case {case}: {e}"))?;
        map.validate().map_err(|e| format!("case {case}: {e}"))?;
        solved += 1;
    }
    check(infeasible == 0, || format!("{infeasible} of 200 instances infeasible"))?;
    Ok(format!("{solved} random corpora (n in [8, 40]): flows, coverage and decoded DAGs within 1e-6"))
}

/// Best bottleneck over integral chronological source-to-sink paths with
/// exactly `k` nodes whose topic coverage meets the requirement.
fn brute_force_bottleneck(model: &framemap::extraction::LpModel<f64>, topics: &TopicModel<f64>) -> Option<f64> {
    let n = model.ids.len();
    let k = model.params.k;
    if k > n {
        return None;
    }
    let coh = |i: usize, j: usize| {
        let e = model.edges.iter().position(|&e| e == (i, j)).unwrap();
        model.coherence[e]
    };
    let mut best: Option<f64> = None;
    // every subset of intermediates of size k - 2, in chronological order
    for mask in 0u32..(1 << (n - 2)) {
        if mask.count_ones() as usize != k - 2 {
            continue;
        }
        let mut path = vec![0];
        path.extend((1..n - 1).filter(|v| mask & (1 << (v - 1)) != 0));
        path.push(n - 1);
        let covered: f64 = (0..model.topic_count)
            .map(|t| {
                path.iter()
                    .map(|&v| topics.membership[&model.ids[v]][t])
                    .sum::<f64>()
                    .min(1.0)
            })
            .sum();
        if covered < model.required_topics as f64 - 1e-9 {
            continue;
        }
        let bottleneck = path.windows(2).map(|w| coh(w[0], w[1])).fold(f64::INFINITY, f64::min);
        if best.is_none_or(|b| bottleneck > b) {
            best = Some(bottleneck);
        }
    }
    best
}

fn chain_fixture() -> (Corpus, CoherenceMatrix<f64>, TopicModel<f64>) {
    let names = ["s", "m", "e"];
    let corpus = Corpus::new(
        names
            .iter()
            .enumerate()
            .map(|(i, id)| {
                Document::new(*id, *id, Utc.with_ymd_and_hms(2018, 1, 1 + i as u32, 0, 0, 0).unwrap(), "w", 1)
            })
            .collect(),
    )
    .unwrap();
    let ids: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let table = [[0.0, 0.8, 0.3], [0.0, 0.0, 0.6]];
    let matrix = CoherenceMatrix::from_fn(ids.clone(), |i, j| table[i][j]);
    let labels: BTreeMap<String, i64> = ids.iter().map(|id| (id.clone(), 0)).collect();
    let points = ids.iter().map(|id| (id.clone(), [0.0, 0.0])).collect();
    let topics = TopicModel::from_assignments(points, &labels, 0.0).unwrap();
    (corpus, matrix, topics)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut compared = 0;
    let mut min_gap = f64::INFINITY;
    for case in 0..300 {
        let n = rng.random_range(3..=8);
        let inst = common::random_instance(n, 6_000 + case);
        let params = ExtractionParams {
            k: rng.random_range(2..=n),
            coverage_threshold: [0.3, 0.5, 0.75, 1.0][rng.random_range(0..4)],
            ..Default::default()
        };
        let model = build_lp(&inst.matrix, &inst.topics, inst.first_id(), inst.last_id(), &params)
            .map_err(|e| e.to_string())?;
        let Some(best) = brute_force_bottleneck(&model, &inst.topics) else {
            continue;
        };
        let sol = solve_lp(&model).map_err(|e| format!("case {case}: integral path exists but {e}"))?;
        let gap = sol.objective - best;
        check(gap >= -1e-6, || format!("case {case}: LP {} below integral {best}", sol.objective))?;
        min_gap = min_gap.min(gap);
        compared += 1;
    }

    let (corpus, matrix, topics) = chain_fixture();
    for (k, path, mu) in [(3, vec!["s", "m", "e"], 0.6), (2, vec!["s", "e"], 0.3)] {
        let params = ExtractionParams { k, ..Default::default() };
        let model = build_lp(&matrix, &topics, "s", "e", &params).map_err(|e| e.to_string())?;
        let map = decode_map(&solve_lp(&model).map_err(|e| e.to_string())?, &model, &corpus)
            .map_err(|e| e.to_string())?;
        let nodes: Vec<&str> = map.nodes.iter().map(|n| n.id.as_str()).collect();
        let edges: Vec<(&str, &str)> = map.edges.iter().map(|e| (e.from.as_str(), e.to.as_str())).collect();
        let want_edges: Vec<(&str, &str)> = path.windows(2).map(|w| (w[0], w[1])).collect();
        check(nodes == path && edges == want_edges && map.main_storyline == path, || {
            format!("k={k}: nodes {nodes:?}, edges {edges:?}, storyline {:?}", map.main_storyline)
        })?;
        check((map.objective - mu).abs() < 1e-9, || format!("k={k}: mu* {}", map.objective))?;
        check(map.edges.iter().all(|e| (e.flow - 1.0).abs() < 1e-9), || format!("k={k}: fractional flow"))?;
    }
    Ok(format!(
        "{compared} brute-forced corpora (n <= 8): LP >= best integral bottleneck (min gap {min_gap:.2e}); hand fixtures exact"
    ))
}

struct GridOutput {
    report_json: String,
    map_jsons: Vec<String>,
    mean_jsd: Option<f64>,
    maps: usize,
}

fn synthetic_grid() -> Result<GridOutput, String> {
    let data = generate(&SyntheticConfig::default());
    let sample = stratified_sample(&data.corpus, 131, 42)
        .and_then(|c| c.apply_frame_grouping())
        .map_err(|e| e.to_string())?;
    let store = data
        .embeddings
        .subset(sample.documents().iter().map(|d| d.id.as_str()))
        .ok_or("sample ids missing from embeddings")?;
    let topics = TopicModel::from_embeddings(&store, &TopicConfig::default(), 42).map_err(|e| e.to_string())?;
    let run = run_grid(&sample, &store, &topics, &ExtractionParams::default(), Combiner::GeometricMean)
        .map_err(|e| e.to_string())?;
    Ok(GridOutput {
        report_json: run.report.to_json(),
        map_jsons: run.maps.iter().flatten().map(|m| m.to_json()).collect(),
        mean_jsd: run.report.jsd.mean,
        maps: run.maps.iter().flatten().count(),
    })
}

fn criterion_7() -> Result<(String, GridOutput), String> {
    let out = synthetic_grid()?;
    check(out.maps == 9, || format!("only {} of 9 cells produced maps", out.maps))?;
    let jsd = out.mean_jsd.ok_or("no JSD average")?;
    check(jsd <= 0.15, || format!("global average JSD {jsd}"))?;
    Ok((format!("9 maps, global average JSD {jsd:.6} (bound 0.15)"), out))
}

fn criterion_8(first: &GridOutput) -> Outcome {
    let second = synthetic_grid()?;
    check(second.report_json == first.report_json, || "report JSON differs between runs".into())?;
    check(second.map_jsons == first.map_jsons, || "map JSON differs between runs".into())?;
    let bytes: usize = first.map_jsons.iter().map(String::len).sum::<usize>() + first.report_json.len();
    Ok(format!("report and {} maps byte-identical across runs ({bytes} bytes)", first.map_jsons.len()))
}

fn report(id: u8, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let result = f();
    let elapsed = t0.elapsed();
    let result = result.and_then(|msg| {
        if elapsed <= limit {
            Ok(msg)
        } else {
            Err(format!("{msg}; took {elapsed:.2?}, limit {limit:?}"))
        }
    });
    let line = match &result {
        Ok(msg) => format!("criterion {id}: PASS ({elapsed:.2?}) {msg}"),
        Err(msg) => format!("criterion {id}: FAIL ({elapsed:.2?}) {msg}"),
    };
    // straight to the stderr handle so the line shows without --nocapture
    let _ = writeln!(std::io::stderr(), "{line}");
    result.is_ok()
}

#[test]
fn acceptance() {
    let mut ok = true;
    ok &= report(1, Duration::from_secs(1), criterion_1);
    ok &= report(2, Duration::from_secs(1), criterion_2);
    ok &= report(3, Duration::from_secs(1), criterion_3);
    ok &= report(4, Duration::from_secs(1), criterion_4);
    ok &= report(5, Duration::from_secs(60), criterion_5);
    ok &= report(6, Duration::from_secs(30), criterion_6);
    let mut grid = None;
    ok &= report(7, Duration::from_secs(300), || {
        criterion_7().map(|(msg, out)| {
            grid = Some(out);
            msg
        })
    });
    ok &= report(8, Duration::from_secs(300), || match &grid {
        Some(first) => criterion_8(first),
        None => Err("criterion 7 produced no grid to compare".into()),
    });
    assert!(ok, "acceptance criteria failed");
}
