//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the binary
//! exits non-zero if any criterion fails. Built without the libtest harness so
//! the report is never captured.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::{Duration, Instant};

use cdplus::agent::{WantSource, WantStatus};
use cdplus::cdx;
use cdplus::dialogue::{EventKind, RunOutcome, Scenario, Trace};
use cdplus::vocab::Attitude;
use cdplus::world::PlanResult;
use common::*;
use rand::seq::SliceRandom;
use rand::Rng;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed_run(text: &str) -> Result<(RunOutcome, Duration), String> {
    let start = Instant::now();
    let out = Scenario::from_text(text).and_then(Scenario::run).map_err(|e| e.to_string())?;
    Ok((out, start.elapsed()))
}

fn onsets<'a>(t: &'a Trace, agent: &str) -> Vec<(u32, &'a str)> {
    t.of_kind(EventKind::AffectOnset).filter(|e| e.agent == agent).map(|e| (e.id, e.payload.as_str())).collect()
}

fn success_golden() -> Verdict {
    let (out, took) = timed_run(SUCCESS)?;
    let t = &out.trace;
    let utterances = t.utterances();
    ensure(utterances == ["Robot, please bring me Tool(X) from the table.", "Here is Tool(X)."], || {
        format!("utterances {utterances:?}")
    })?;
    let person: Vec<&str> = onsets(t, "Person").into_iter().map(|(_, s)| s).collect();
    ensure(person == ["ANTICIPATION", "HOPE", "Pleased"], || format!("Person onsets {person:?}"))?;
    let fulfilled = t
        .of_kind(EventKind::ProspUpdate)
        .find(|e| e.agent == "Person" && e.payload.starts_with("fulfilled"))
        .ok_or("no fulfilled expectation")?;
    let onset_ids = onsets(t, "Person");
    ensure(onset_ids[1].0 < fulfilled.id && fulfilled.id < onset_ids[2].0, || {
        "fulfilment is not between HOPE and Pleased".into()
    })?;
    let robot = &out.agents["Robot"];
    ensure(
        robot.motc.iter().any(|m| matches!(m.source, WantSource::Adopted { .. }) && m.status == WantStatus::Satisfied),
        || "Robot has no satisfied adopted want".into(),
    )?;
    ensure(t.to_jsonl() == SUCCESS_GOLDEN, || "trace differs from golden".into())?;
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!("{} events, {} ticks, {took:?}", t.len(), out.ticks))
}

fn failure_golden() -> Verdict {
    let (out, took) = timed_run(FAILURE)?;
    let t = &out.trace;
    let utterances = t.utterances();
    ensure(
        utterances
            == [
                "Robot, please bring me Tool(X) from the table.",
                "I cannot bring Tool(X) from the table to you.",
                "Why can't you bring Tool(X) to me?",
                "Because Tool(X) is not on the table.",
            ],
        || format!("utterances {utterances:?}"),
    )?;
    let robot: Vec<&str> = onsets(t, "Robot").into_iter().map(|(_, s)| s).collect();
    ensure(robot == ["FRUSTRATED", "Displeased", "FEAR", "RELIEVED"], || format!("Robot onsets {robot:?}"))?;
    let relieved = onsets(t, "Robot")[3].0;
    let fear_off = t
        .of_kind(EventKind::AffectOffset)
        .find(|e| e.agent == "Robot" && e.payload == "FEAR")
        .ok_or("FEAR never cleared")?;
    ensure(fear_off.id > relieved && !out.agents["Robot"].has_affect(cdplus::cdgraph::StateName::Fear), || {
        "FEAR not cleared after RELIEVED".into()
    })?;
    let report = t
        .of_kind(EventKind::Utterance)
        .find(|e| e.payload.starts_with("I cannot"))
        .map(|e| e.id)
        .ok_or("no inability report")?;
    let person_after: Vec<&str> =
        onsets(t, "Person").into_iter().filter(|(id, _)| *id > report).map(|(_, s)| s).collect();
    ensure(person_after == ["DISAPPOINTED", "Displeased"], || format!("Person onsets after report {person_after:?}"))?;
    ensure(t.to_jsonl() == FAILURE_GOLDEN, || "trace differs from golden".into())?;
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!("{} events, {} ticks, {took:?}", t.len(), out.ticks))
}

fn explanations() -> Verdict {
    let out = Scenario::from_text(FAILURE).and_then(Scenario::run).map_err(|e| e.to_string())?;
    let t = &out.trace;
    let utterance = |prefix: &str| {
        t.of_kind(EventKind::Utterance).find(|e| e.payload.starts_with(prefix)).map(|e| e.id).ok_or(format!("no {prefix:?}"))
    };

    let chain = t.why(utterance("Robot, please")?).map_err(|e| e.to_string())?;
    let last = t.get(*chain.last().unwrap()).unwrap();
    let person_mconc = out.agents["Person"].motc[0].event;
    ensure(last.kind == EventKind::Motivation && last.agent == "Person" && Some(last.id) == person_mconc, || {
        format!("directive chain ends at {last}")
    })?;
    let elaborated = chain.iter().map(|id| t.get(*id).unwrap()).any(|e| {
        e.kind == EventKind::Assertion
            && e.payload.contains("(causal")
            && e.payload.contains("(cz :actor Person :act BE :state Pleased :mods (f)) :mods (c f))")
    });
    ensure(elaborated, || "directive chain lacks the Person BE Pleased consequent".into())?;

    let because = t.why(utterance("Because")?).map_err(|e| e.to_string())?;
    let hops: Vec<_> = because.iter().map(|id| t.get(*id).unwrap()).collect();
    ensure(hops.iter().any(|e| e.kind == EventKind::RuleFiring && e.payload == "R10"), || "no R10 hop".into())?;
    ensure(hops.iter().any(|e| e.kind == EventKind::Cause && e.payload == "at(Tool(X), Table)"), || {
        "no recorded unsatisfied precondition".into()
    })?;
    Ok(format!("directive chain {} hops, answer chain {} hops", chain.len(), because.len()))
}

fn matcher_oracle() -> Verdict {
    let mut r = rng(0x5eed_0004);
    let mut pairs = 0;
    let mut matched = 0;
    for _ in 0..240 {
        let size = r.gen_range(1..=8);
        let store = gen_store(&mut r, size);
        let p = gen_pattern(&mut r, &store);
        check_matcher(&p, &store)?;
        pairs += 1;
        matched += usize::from(!cdplus::matcher::find_all(&p, &store).is_empty());
    }
    ensure(pairs >= 200, || format!("only {pairs} pairs"))?;
    Ok(format!("{pairs} pairs, {matched} with matches, 0 mismatches"))
}

fn cdx_round_trip() -> Verdict {
    let mut r = rng(0x5eed_0005);
    let mut docs = 0;
    for _ in 0..150 {
        let doc = gen_document(&mut r);
        let text = cdx::serialize(&doc);
        let back = cdx::parse(&text).map_err(|e| format!("{e}\n{text}"))?;
        ensure(back == doc, || format!("round trip changed the document:\n{text}"))?;
        docs += 1;
    }
    for (name, text) in [("fetch-success", SUCCESS), ("fetch-failure", FAILURE)] {
        let doc = cdx::parse(text).map_err(|e| format!("{name}: {e}"))?;
        let again = cdx::parse(&cdx::serialize(&doc)).map_err(|e| format!("{name}: {e}"))?;
        ensure(again == doc, || format!("{name} does not round-trip"))?;
    }
    Ok(format!("{docs} generated documents and both scenarios, 0 mismatches"))
}

fn planner_oracle() -> Verdict {
    let mut worlds = 0;
    for tool_at in LOCATIONS {
        for target in LOCATIONS {
            for mask in 0..16u8 {
                let unreachable: Vec<&str> =
                    LOCATIONS.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, l)| *l).collect();
                let placements = BTreeMap::from([(tool(), tool_at.to_string())]);
                let w = build_world(&placements, &unreachable);
                let g = goal(tool(), target);
                let expected = exhaustive_min_plan(&placements, &unreachable, &g.atom, 3);
                match (w.plan(&g, "Robot", 3), expected) {
                    (PlanResult::Plan(steps), Some(n)) => {
                        ensure(steps.len() as u32 == n, || format!("{tool_at}->{target} {unreachable:?}: length {} vs {n}", steps.len()))?;
                        let mut after = w.clone();
                        after.execute(&steps).map_err(|e| e.to_string())?;
                        ensure(after.holds(&g.atom), || format!("{tool_at}->{target}: plan does not reach goal"))?;
                    }
                    (PlanResult::Failure { .. }, None) => {}
                    (got, want) => return Err(format!("{tool_at}->{target} {unreachable:?}: planner {got:?}, oracle {want:?}")),
                }
                worlds += 1;
            }
        }
    }
    Ok(format!("{worlds} worlds, 0 mismatches"))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for name in ["fetch-success", "fetch-failure"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{name}-{run}.jsonl"));
            let status = Command::new(env!("CARGO_BIN_EXE_cdplus"))
                .arg("run")
                .arg(scenario_path(&format!("{name}.cdx")))
                .arg("--trace")
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.success(), || format!("{name}: run exited with {status}"))?;
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        ensure(!outputs[0].is_empty() && outputs[0] == outputs[1], || format!("{name}: traces differ between runs"))?;
    }
    Ok("both scenarios byte-identical across two runs".into())
}

fn rule_invariants() -> Verdict {
    let mut r = rng(0x5eed_0008);
    let mut fears = 0;
    let mut failures = 0;
    // Every pair of attitudes twice, each with a random tool placement.
    let pairs: Vec<(Attitude, Attitude)> =
        Attitude::ALL.iter().flat_map(|p| Attitude::ALL.iter().map(move |q| (*p, *q))).collect();
    for variant_no in 0..50 {
        let tool_at = *LOCATIONS.choose(&mut r).unwrap();
        let (person, robot) = pairs[variant_no % pairs.len()];
        let label = format!("variant {variant_no} (tool at {tool_at}, Person->Robot {person}, Robot->Person {robot})");
        let out = Scenario::from_text(&variant(tool_at, person, robot))
            .and_then(Scenario::run)
            .map_err(|e| format!("{label}: {e}"))?;
        let t = &out.trace;
        ensure(out.ticks < 20, || format!("{label}: no quiescence"))?;

        let mut seen = BTreeSet::new();
        for e in t.of_kind(EventKind::RuleFiring) {
            let key = (e.tick, e.agent.clone(), e.payload.clone(), e.detail.clone());
            ensure(seen.insert(key), || format!("{label}: {e} fired twice"))?;
        }

        let firings: BTreeMap<(u32, &str, &str), u32> = t
            .of_kind(EventKind::RuleFiring)
            .map(|e| ((e.tick, e.agent.as_str(), e.payload.as_str()), e.id))
            .collect();
        for e in t.of_kind(EventKind::RuleFiring).filter(|e| e.payload == "R6") {
            failures += 1;
            let at = |rule| firings.get(&(e.tick, e.agent.as_str(), rule)).copied();
            let order: Vec<u32> = [Some(e.id), at("R7"), at("R8")].into_iter().flatten().collect();
            ensure(order.windows(2).all(|w| w[0] < w[1]), || format!("{label}: R6/R7/R8 out of order at tick {}", e.tick))?;
            let onset_of = |state: &str| {
                t.of_kind(EventKind::AffectOnset).find(|o| o.tick == e.tick && o.agent == e.agent && o.payload == state).map(|o| o.id)
            };
            let onsets: Vec<u32> = ["FRUSTRATED", "Displeased", "FEAR"].into_iter().filter_map(onset_of).collect();
            ensure(onsets.windows(2).all(|w| w[0] < w[1]), || format!("{label}: affect onsets out of order"))?;
        }

        for fear in t.of_kind(EventKind::AffectOnset).filter(|e| e.payload == "FEAR") {
            fears += 1;
            let predicted = t
                .of_kind(EventKind::Prediction)
                .any(|p| p.tick == fear.tick && p.agent == fear.agent && p.id < fear.id);
            ensure(predicted, || format!("{label}: FEAR at tick {} without a prediction", fear.tick))?;
        }
    }
    ensure(failures > 0 && fears > 0, || format!("variants never exercised failure ({failures}) or fear ({fears})"))?;
    Ok(format!("50 variants, {failures} plan failures, {fears} FEAR onsets, 0 violations"))
}

fn main() -> std::process::ExitCode {
    type Check = (&'static str, fn() -> Verdict);
    let criteria: [Check; 8] = [
        ("success scenario golden trace", success_golden),
        ("failure scenario golden trace", failure_golden),
        ("explanation soundness", explanations),
        ("matcher oracle equivalence", matcher_oracle),
        ("CDX round-trip", cdx_round_trip),
        ("planner oracle", planner_oracle),
        ("determinism", determinism),
        ("rule invariants", rule_invariants),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::ExitCode::FAILURE
    }
}
