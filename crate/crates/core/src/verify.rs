//! Acceptance criteria, shared by the test suite and the command line.
//!
//! Every check is exact: rationals compare for equality, no tolerances.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equilibria::{
    efficiency_ratios, enumerate_equilibria, is_k_strong, is_nash, strategy_grid, verify_no_ne_construction, Ratio,
};
use crate::error::Result;
use crate::flow::{certify_max_flow, max_flow, saturated_by_capacity_reduction, saturated_in_all_max_flows};
use crate::game::{admissibility, optimal_welfare, profile_from_flow, utilities, welfare, Utility};
use crate::instances::{paper_instance, random_instance, random_profile, PaperInstanceId, RandomParams};
use crate::model::{apply_strategy, build_expanded_graph, ExpandedGraph, Instance, StrategyProfile};
use crate::pricing::PriceProfile;
use crate::quantity::Quantity;

pub const CRITERIA: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} [{:>2}] {}: {}", self.id, self.name, self.detail)
    }
}

const NAMES: [&str; CRITERIA] = [
    "admissibility golden profiles",
    "residual oracle equals capacity-reduction oracle",
    "two-step flow profiles are equilibria",
    "two-step price of anarchy",
    "no equilibrium in the four-step gadget",
    "ascending-price price of stability",
    "supply-sign price of stability",
    "cooperation threshold",
    "strong-equilibrium anarchy bound",
    "property suites",
];

/// Collects failed checks; a criterion passes when none failed.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    count: usize,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.count += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self, summary: String) -> (bool, String) {
        if self.failures.is_empty() {
            (true, format!("{summary} ({} checks)", self.count))
        } else {
            let shown: Vec<&str> = self.failures.iter().take(3).map(String::as_str).collect();
            (false, format!("{} of {} checks failed: {}", self.failures.len(), self.count, shown.join("; ")))
        }
    }
}

fn q(n: i64) -> Quantity {
    Quantity::from_integer(n)
}

fn ascending(horizon: usize) -> PriceProfile {
    PriceProfile::new((1..=horizon as i64).map(q).collect())
}

fn paper(id: PaperInstanceId) -> Result<(Instance, PriceProfile)> {
    paper_instance(id)
}

fn profile(rows: &[&[i64]]) -> StrategyProfile {
    StrategyProfile::from_integers(rows)
}

pub fn run(id: usize) -> CriterionOutcome {
    assert!((1..=CRITERIA).contains(&id), "criterion {id} does not exist");
    let result = match id {
        1 => admissibility_golden(),
        2 => oracle_agreement(),
        3 => two_step_existence(),
        4 => two_step_anarchy(),
        5 => gadget_non_existence(),
        6 => ascending_stability(),
        7 => supply_sign_stability(),
        8 => cooperation_threshold(),
        9 => strong_anarchy_bound(),
        _ => property_suites(),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome { id, name: NAMES[id - 1], passed, detail }
}

pub fn run_all() -> Vec<CriterionOutcome> {
    (1..=CRITERIA).map(run).collect()
}

fn admissibility_golden() -> Result<(bool, String)> {
    let (inst, prices) = paper(PaperInstanceId::Fig2FlowExample)?;
    let mut c = Checks::default();
    let a = profile(&[&[0, 0], &[0, 0], &[1, -1]]);
    let b = profile(&[&[1, -1], &[0, 0], &[1, -1]]);
    let all = profile(&[&[1, -1], &[1, -1], &[1, -1]]);
    let d = profile(&[&[0, 0], &[1, -1], &[1, -1]]);
    c.check(admissibility(&inst, &a)?.profile, || "(a) not admissible".into());
    c.check(admissibility(&inst, &b)?.profile, || "(b) not admissible".into());
    let v = admissibility(&inst, &all)?;
    c.check(v.agents == [false, false, true], || format!("(c) agent verdicts {:?}", v.agents));
    let u = utilities(&inst, &all, &prices)?;
    let expected = [Utility::NegativeInfinity, Utility::NegativeInfinity, Utility::Finite(q(1))];
    c.check(u == expected, || format!("(c) utilities {u:?}"));
    c.check(admissibility(&inst, &d)?.profile, || "(d) not admissible".into());
    let w = welfare(&inst, &d)?;
    c.check(w == q(2), || format!("(d) welfare {w}"));
    Ok(c.finish("verdicts (a)-(d) reproduced".into()))
}

/// Transaction-edge verdicts of both oracles on one graph.
fn compare_oracles(graph: &ExpandedGraph, c: &mut Checks, label: &str) {
    let mf = max_flow(graph);
    for e in graph.transaction_edges() {
        let residual = saturated_in_all_max_flows(graph, &mf.flow, e).expect("flow from max_flow is maximum");
        let reduced = saturated_by_capacity_reduction(graph, e);
        c.check(residual == reduced, || format!("{label}: edge {e} residual {residual} vs reduction {reduced}"));
    }
}

fn oracle_graphs(instance: &Instance, seed: u64) -> Result<Vec<ExpandedGraph>> {
    let base = build_expanded_graph(instance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = vec![base.clone()];
    graphs.push(apply_strategy(&base, &StrategyProfile::zero(instance.agents.len(), instance.horizon))?);
    for _ in 0..4 {
        graphs.push(apply_strategy(&base, &random_profile(instance, q(1), &mut rng)?)?);
    }
    graphs.push(apply_strategy(&base, &profile_from_flow(instance, &max_flow(&base).flow)?)?);
    Ok(graphs)
}

fn oracle_agreement() -> Result<(bool, String)> {
    let mut c = Checks::default();
    let mut graphs = 0;
    let mut paper_profiles = vec![
        (PaperInstanceId::Fig2FlowExample, profile(&[&[1, -1], &[1, -1], &[1, -1]])),
        (PaperInstanceId::Fig2FlowExample, profile(&[&[0, 0], &[1, -1], &[1, -1]])),
        (PaperInstanceId::Fig3T2Poa, profile(&[&[0, 0], &[1, -1], &[0, 0]])),
        (PaperInstanceId::Fig5AscPos { horizon: 4 }, profile(&[&[1, -1, 1, -1]])),
        (PaperInstanceId::Fig6SupplySign { q: q(1), r: q(1) }, profile(&[&[1, -1, 0], &[0, 1, -1]])),
        (PaperInstanceId::Fig7StrongPoa { horizon: 4 }, profile(&[&[1, -1, 0, 0], &[0, 1, -1, 0], &[0, 0, 1, -1]])),
    ];
    for (i, id) in PaperInstanceId::suite().into_iter().enumerate() {
        let (inst, _) = paper(id)?;
        for g in oracle_graphs(&inst, i as u64)? {
            compare_oracles(&g, &mut c, &id.to_string());
            graphs += 1;
        }
    }
    for (id, p) in paper_profiles.drain(..) {
        let (inst, _) = paper(id)?;
        compare_oracles(&apply_strategy(&build_expanded_graph(&inst)?, &p)?, &mut c, &id.to_string());
        graphs += 1;
    }
    for seed in 0..200u64 {
        let params = RandomParams {
            nodes: 1 + (seed % 4) as usize,
            horizon: 1 + (seed / 4 % 4) as usize,
            agents: 1 + (seed % 3) as usize,
            ..RandomParams::default()
        };
        let inst = random_instance(seed, &params)?;
        for g in oracle_graphs(&inst, seed)? {
            compare_oracles(&g, &mut c, &format!("random seed {seed}"));
            graphs += 1;
        }
    }
    Ok(c.finish(format!("{graphs} graphs, verdicts agree on every transaction edge")))
}

fn two_step_existence() -> Result<(bool, String)> {
    let mut c = Checks::default();
    for id in [PaperInstanceId::Fig1Structure, PaperInstanceId::Fig3T2Poa] {
        let (inst, _) = paper(id)?;
        let prices = ascending(inst.horizon);
        let graph = build_expanded_graph(&inst)?;
        let s = profile_from_flow(&inst, &max_flow(&graph).flow)?;
        let verdict = is_nash(&inst, &prices, &s, q(1))?;
        c.check(verdict.is_nash, || format!("{id}: {:?} has deviation {:?}", s, verdict.witness));
        let w = welfare(&inst, &s)?;
        let opt = optimal_welfare(&inst)?;
        c.check(w == opt, || format!("{id}: welfare {w} below optimum {opt}"));
    }
    Ok(c.finish("flow profiles on both two-step instances are optimal equilibria".into()))
}

fn two_step_anarchy() -> Result<(bool, String)> {
    let (inst, prices) = paper(PaperInstanceId::Fig3T2Poa)?;
    let report = efficiency_ratios(&inst, &prices, q(1), 1)?;
    let mut c = Checks::default();
    let welfares: Vec<Quantity> = report.equilibria.iter().map(|e| e.welfare).collect();
    c.check(welfares.contains(&q(1)), || format!("no welfare-1 equilibrium in {welfares:?}"));
    c.check(welfares.contains(&q(2)), || format!("no welfare-2 equilibrium in {welfares:?}"));
    c.check(report.poa == Ratio::Finite(q(2)), || format!("PoA {}", report.poa));
    c.check(report.pos == Ratio::Finite(q(1)), || format!("PoS {}", report.pos));
    Ok(c.finish(format!("{} equilibria, PoA {}, PoS {}", report.equilibria.len(), report.poa, report.pos)))
}

fn gadget_non_existence() -> Result<(bool, String)> {
    let (inst, prices) = paper(PaperInstanceId::Fig4NoNe)?;
    let half = Quantity::new(1, 2);
    let mut c = Checks::default();
    c.check(prices == PriceProfile::from_integers(&[1, 11, 12, 13]), || format!("prices {prices}"));
    let found = enumerate_equilibria(&inst, &prices, half, 1)?;
    c.check(found.is_empty(), || {
        let shown: Vec<String> = found.iter().map(|e| format!("{:?} (welfare {})", e.profile, e.welfare)).collect();
        format!("{} grid equilibria: {}", found.len(), shown.join(", "))
    });
    let cert = verify_no_ne_construction(half)?;
    c.check(cert.failures.is_empty(), || {
        format!("certificate lists {} profiles without deviation", cert.failures.len())
    });
    let inadmissible_deviations = cert
        .candidates
        .iter()
        .filter(|k| !k.deviation_a_engine.is_finite() || !k.deviation_c_engine.is_finite())
        .count();
    c.check(cert.candidates.iter().all(|k| k.lhs_below_bound), || {
        "a candidate meets 8(z_a+z_c)+2(y_a+y_c) >= 11".into()
    });
    c.check(cert.holds, || {
        format!(
            "certificate does not hold ({} candidates, {} with an inadmissible targeted deviation)",
            cert.candidates.len(),
            inadmissible_deviations
        )
    });
    Ok(c.finish(format!("{} profiles checked, {} candidates", cert.profiles, cert.candidates.len())))
}

fn ascending_stability() -> Result<(bool, String)> {
    let mut c = Checks::default();
    let mut summary = Vec::new();
    for horizon in [4usize, 6] {
        let (inst, prices) = paper(PaperInstanceId::Fig5AscPos { horizon })?;
        c.check(prices == ascending(horizon), || format!("T={horizon}: prices {prices}"));
        let report = efficiency_ratios(&inst, &prices, q(1), 1)?;
        let expected = q(horizon as i64 / 2);
        c.check(report.opt == expected, || format!("T={horizon}: OPT {}", report.opt));
        c.check(report.equilibria.len() == 1, || format!("T={horizon}: {} equilibria", report.equilibria.len()));
        c.check(report.equilibria.iter().all(|e| e.welfare == q(1)), || format!("T={horizon}: equilibrium welfare"));
        c.check(report.pos == Ratio::Finite(expected), || format!("T={horizon}: PoS {}", report.pos));
        let alternating: Vec<i64> = (0..horizon).map(|t| if t % 2 == 0 { 1 } else { -1 }).collect();
        let optimal = profile(&[&alternating]);
        let w = welfare(&inst, &optimal)?;
        c.check(w == expected, || format!("T={horizon}: alternating profile welfare {w}"));
        let verdict = is_nash(&inst, &prices, &optimal, q(1))?;
        let witnessed = verdict.witness.as_ref().is_some_and(|d| d.utility > verdict.utilities[d.agent]);
        c.check(!verdict.is_nash && witnessed, || format!("T={horizon}: optimal profile not refuted"));
        summary.push(format!("T={horizon} PoS {}", report.pos));
    }
    Ok(c.finish(summary.join(", ")))
}

fn supply_sign_stability() -> Result<(bool, String)> {
    let (inst, prices) = paper(PaperInstanceId::Fig6SupplySign { q: q(1), r: q(1) })?;
    let mut c = Checks::default();
    let report = efficiency_ratios(&inst, &prices, q(1), 1)?;
    c.check(report.equilibria.len() == 1 && report.equilibria[0].profile.is_zero(), || {
        format!("equilibria {:?}", report.equilibria.iter().map(|e| &e.profile).collect::<Vec<_>>())
    });
    c.check(report.opt == q(1), || format!("OPT {}", report.opt));
    c.check(report.pos == Ratio::Infinity, || format!("PoS {}", report.pos));
    let depicted = profile(&[&[1, -1, 0], &[0, 1, -1]]);
    let w = welfare(&inst, &depicted)?;
    c.check(w == q(1), || format!("depicted welfare {w}"));
    let u = utilities(&inst, &depicted, &prices)?;
    c.check(u[0] == Utility::Finite(q(-1)), || format!("agent a utility {}", u[0]));
    Ok(c.finish(format!("PoS {}", report.pos)))
}

fn cooperation_threshold() -> Result<(bool, String)> {
    let mut c = Checks::default();
    for horizon in [4usize, 5] {
        let (inst, prices) = paper(PaperInstanceId::Fig7StrongPoa { horizon })?;
        let agents = inst.agents.len();
        let empty = StrategyProfile::zero(agents, horizon);
        let low = is_k_strong(&inst, &prices, &empty, horizon - 2, q(1))?;
        c.check(low.holds, || format!("T={horizon}: empty profile not {}-strong: {:?}", horizon - 2, low.witness));
        let high = is_k_strong(&inst, &prices, &empty, horizon - 1, q(1))?;
        let coalition = high.witness.as_ref().map(|w| w.agents.clone()).unwrap_or_default();
        c.check(!high.holds && coalition == (0..agents).collect::<Vec<_>>(), || {
            format!("T={horizon}: k={} witness {:?}", horizon - 1, high.witness)
        });
        let report = efficiency_ratios(&inst, &prices, q(1), horizon - 2)?;
        c.check(report.poa == Ratio::Infinity, || format!("T={horizon}: {}-strong PoA {}", horizon - 2, report.poa));
    }
    Ok(c.finish("empty profile is (T-2)-strong, broken by all T-1 agents, PoA inf".into()))
}

fn strong_anarchy_bound() -> Result<(bool, String)> {
    let mut c = Checks::default();
    let mut instances: Vec<(String, Instance)> = Vec::new();
    for id in PaperInstanceId::suite() {
        instances.push((id.to_string(), paper(id)?.0));
    }
    for seed in 0..50u64 {
        let params = RandomParams {
            nodes: 1 + (seed % 3) as usize,
            horizon: 2 + (seed % 2) as usize,
            agents: 1 + (seed / 3 % 2) as usize,
            ..RandomParams::default()
        };
        instances.push((format!("random seed {seed}"), random_instance(1000 + seed, &params)?));
    }
    let mut equilibria = 0;
    for (label, inst) in &instances {
        let horizon = inst.horizon;
        let k = inst.agents.len().min(horizon - 1).max(1);
        let report = efficiency_ratios(inst, &ascending(horizon), q(1), k)?;
        for e in &report.equilibria {
            equilibria += 1;
            let bound = e.welfare * q(horizon as i64);
            c.check(report.opt <= bound, || {
                format!("{label}: OPT {} vs welfare {} with T={horizon}", report.opt, e.welfare)
            });
        }
    }
    Ok(c.finish(format!("{} instances, {equilibria} strong equilibria within OPT/W <= T", instances.len())))
}

fn property_suites() -> Result<(bool, String)> {
    let mut c = Checks::default();
    let mut certified = 0;
    let mut certify = |graph: &ExpandedGraph, c: &mut Checks, label: &str| {
        let mf = max_flow(graph);
        let ok = certify_max_flow(graph, &mf.flow).map(|cut| cut == mf.min_cut).unwrap_or(false);
        c.check(ok && mf.cut_capacity(graph) == mf.value(), || format!("{label}: cut certificate"));
        certified += 1;
    };

    // equilibria are admissible with non-negative utilities; uniform prices
    for id in PaperInstanceId::suite() {
        let (inst, prices) = paper(id)?;
        let label = id.to_string();
        for e in enumerate_equilibria(&inst, &prices, q(1), 1)? {
            c.check(e.utilities.iter().all(|u| *u >= Utility::Finite(Quantity::ZERO)), || {
                format!("{label}: negative utility")
            });
            c.check(admissibility(&inst, &e.profile)?.profile, || format!("{label}: inadmissible equilibrium"));
        }
        // the half-unit grid is the coarsest one reaching the gadget's optimum
        let step = if id == PaperInstanceId::Fig4NoNe { Quantity::new(1, 2) } else { q(1) };
        let uniform = PriceProfile::new(vec![q(1); inst.horizon]);
        let report = efficiency_ratios(&inst, &uniform, step, 1)?;
        let found: Vec<&StrategyProfile> = report.equilibria.iter().map(|e| &e.profile).collect();
        let admissible = admissible_grid_profiles(&inst, step)?;
        c.check(found == admissible.iter().collect::<Vec<_>>(), || {
            format!("{label}: {} uniform equilibria vs {} admissible profiles", found.len(), admissible.len())
        });
        c.check(report.pos == Ratio::Finite(Quantity::ONE), || format!("{label}: uniform PoS {}", report.pos));
        certify(&build_expanded_graph(&inst)?, &mut c, &label);
    }

    // welfare never exceeds the optimum
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..1000u64 {
        let params = RandomParams {
            nodes: 1 + (seed % 4) as usize,
            horizon: 1 + (seed / 4 % 4) as usize,
            agents: (seed % 3) as usize,
            ..RandomParams::default()
        };
        let inst = random_instance(5000 + seed, &params)?;
        let s = random_profile(&inst, q(1), &mut rng)?;
        let graph = apply_strategy(&build_expanded_graph(&inst)?, &s)?;
        certify(&graph, &mut c, &format!("random seed {seed}"));
        let (w, opt) = (welfare(&inst, &s)?, optimal_welfare(&inst)?);
        c.check(w <= opt, || format!("seed {seed}: welfare {w} above optimum {opt}"));
    }

    // scaling every quantity by an integer scales values, keeps verdicts
    for seed in 0..100u64 {
        let inst = random_instance(9000 + seed, &RandomParams::default())?;
        let s = random_profile(&inst, q(1), &mut rng)?;
        let factor = q(2 + (seed % 3) as i64);
        let (big, big_s) = (inst.scaled(factor), s.scaled(factor));
        let label = format!("scaling seed {seed}");
        c.check(optimal_welfare(&big)? == optimal_welfare(&inst)? * factor, || format!("{label}: optimum"));
        c.check(welfare(&big, &big_s)? == welfare(&inst, &s)? * factor, || format!("{label}: welfare"));
        c.check(admissibility(&big, &big_s)?.agents == admissibility(&inst, &s)?.agents, || {
            format!("{label}: verdicts")
        });
        certify(&apply_strategy(&build_expanded_graph(&big)?, &big_s)?, &mut c, &label);
    }
    Ok(c.finish(format!("{certified} flows certified by their cuts")))
}

/// Every admissible grid profile, in lexicographic order.
fn admissible_grid_profiles(instance: &Instance, step: Quantity) -> Result<Vec<StrategyProfile>> {
    let grids = (0..instance.agents.len()).map(|b| strategy_grid(instance, b, step)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    let mut digits = vec![0usize; grids.len()];
    loop {
        let p = StrategyProfile::new(digits.iter().enumerate().map(|(b, &d)| grids[b][d].clone()).collect());
        if admissibility(instance, &p)?.profile {
            out.push(p);
        }
        let mut j = grids.len();
        loop {
            if j == 0 {
                return Ok(out);
            }
            j -= 1;
            digits[j] += 1;
            if digits[j] < grids[j].len() {
                break;
            }
            digits[j] = 0;
        }
    }
}
