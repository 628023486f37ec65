//! Strategy grids, best responses, Nash and k-strong equilibria, and the
//! price of anarchy and stability over a grid.

use std::fmt;

use dashmap::DashMap;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::{Game, Utility};
use crate::instances::{paper_instance, PaperInstanceId};
use crate::model::{Instance, StrategyProfile};
use crate::pricing::PriceProfile;
use crate::quantity::Quantity;

/// Default cap on the number of grid profiles an exhaustive search visits.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Default grid step, fine enough for the half units of the four-step gadget.
pub fn default_granularity() -> Quantity {
    Quantity::new(1, 2)
}

/// Rejects non-positive steps and steps that do not divide every battery
/// capacity of `agent`.
fn check_granularity(instance: &Instance, agent: usize, granularity: Quantity) -> Result<()> {
    if !granularity.is_positive() {
        return Err(Error::Parameter(format!("granularity {granularity} must be positive")));
    }
    let a = &instance.agents[agent];
    for (t, cap) in a.battery_capacity.iter().enumerate() {
        if !cap.is_multiple_of(granularity) {
            return Err(Error::IncompatibleGranularity {
                granularity,
                value: *cap,
                what: format!("battery capacity of agent `{}` at step {}", a.id, t + 1),
                suggestion: granularity.gcd(cap),
            });
        }
    }
    Ok(())
}

fn extend(t: usize, prefix: i64, caps: &[i64], horizon: usize, current: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if t + 1 == horizon {
        for s in -prefix..=0 {
            current.push(s);
            out.push(current.clone());
            current.pop();
        }
        return;
    }
    for p in 0..=caps[t] {
        current.push(p - prefix);
        extend(t + 1, p, caps, horizon, current, out);
        current.pop();
    }
}

/// Every battery-feasible strategy of `agent` with entries in `g·ℤ`, in
/// ascending lexicographic order. The all-zero strategy comes first.
///
/// Charging in the last step is left out: energy stored then can never leave
/// the battery, so such strategies are never admissible.
pub fn strategy_grid(instance: &Instance, agent: usize, granularity: Quantity) -> Result<Vec<Vec<Quantity>>> {
    if agent >= instance.agents.len() {
        return Err(Error::Parameter(format!("agent index {agent} out of range")));
    }
    check_granularity(instance, agent, granularity)?;
    Ok(integer_grid(instance, agent, granularity)
        .into_iter()
        .map(|v| v.into_iter().map(|x| granularity * x).collect())
        .collect())
}

fn integer_grid(instance: &Instance, agent: usize, granularity: Quantity) -> Vec<Vec<i64>> {
    let horizon = instance.horizon;
    if horizon == 0 {
        return vec![vec![]];
    }
    let caps: Vec<i64> = instance.agents[agent].battery_capacity.iter().map(|c| c.floor_div(granularity)).collect();
    let mut out = Vec::new();
    extend(0, 0, &caps, horizon, &mut Vec::with_capacity(horizon), &mut out);
    out
}

/// Number of profiles in the grid product space, saturating at `u128::MAX`.
pub fn space_size(instance: &Instance, granularity: Quantity) -> Result<u128> {
    let mut size: u128 = 1;
    for b in 0..instance.agents.len() {
        check_granularity(instance, b, granularity)?;
        size = size.saturating_mul(integer_grid(instance, b, granularity).len() as u128);
    }
    Ok(size)
}

/// The grids of all agents, their payoffs and the game they are evaluated on.
struct Space {
    game: Game,
    grids: Vec<Vec<Vec<Quantity>>>,
    scaled: Vec<Vec<Vec<i64>>>,
    payoffs: Vec<Vec<Quantity>>,
    /// Grid indices by payoff, highest first, ties by index.
    order: Vec<Vec<usize>>,
}

impl Space {
    fn new(instance: &Instance, prices: &PriceProfile, granularity: Quantity, extra: &[Quantity]) -> Result<Space> {
        prices.check_horizon(instance.horizon)?;
        let mut covered = vec![granularity];
        covered.extend_from_slice(extra);
        let game = Game::covering(instance, &covered)?;
        let grids =
            (0..instance.agents.len()).map(|b| strategy_grid(instance, b, granularity)).collect::<Result<Vec<_>>>()?;
        let scaled = grids.iter().map(|g| g.iter().map(|s| game.scale_strategy(s)).collect()).collect();
        let payoffs: Vec<Vec<Quantity>> = grids.iter().map(|g| g.iter().map(|s| prices.payoff(s)).collect()).collect();
        let order = payoffs
            .iter()
            .map(|p| {
                let mut idx: Vec<usize> = (0..p.len()).collect();
                idx.sort_by(|&i, &j| p[j].cmp(&p[i]).then(i.cmp(&j)));
                idx
            })
            .collect();
        Ok(Space { game, grids, scaled, payoffs, order })
    }

    fn agents(&self) -> usize {
        self.grids.len()
    }

    fn sizes(&self) -> Vec<usize> {
        self.grids.iter().map(Vec::len).collect()
    }

    /// The grid strategy of `agent` with the highest utility against the
    /// other rows, lexicographically smallest among ties.
    fn best_response<'a>(&'a self, rows: &mut [&'a [i64]], agent: usize) -> (usize, Quantity) {
        let saved = rows[agent];
        for &i in &self.order[agent] {
            rows[agent] = &self.scaled[agent][i];
            if self.game.agent_admissible_scaled(rows, agent) {
                rows[agent] = saved;
                return (i, self.payoffs[agent][i]);
            }
        }
        unreachable!("the zero strategy is always admissible")
    }

    /// The best response if it strictly beats `current`.
    fn improving<'a>(&'a self, rows: &mut [&'a [i64]], agent: usize, current: Utility) -> Option<usize> {
        let saved = rows[agent];
        let mut found = None;
        for &i in &self.order[agent] {
            if Utility::Finite(self.payoffs[agent][i]) <= current {
                break;
            }
            rows[agent] = &self.scaled[agent][i];
            if self.game.agent_admissible_scaled(rows, agent) {
                found = Some(i);
                break;
            }
        }
        rows[agent] = saved;
        found
    }

    /// First coalition (by size, then lexicographically) with a joint grid
    /// deviation that strictly improves every member. Returns the members and
    /// their grid indices.
    fn coalition_deviation<'a>(
        &'a self,
        rows: &mut [&'a [i64]],
        current: &[Utility],
        sizes: std::ops::RangeInclusive<usize>,
    ) -> Option<(Vec<usize>, Vec<usize>)> {
        let n = self.agents();
        for size in sizes {
            for members in combinations(n, size) {
                if size == 1 {
                    let b = members[0];
                    if let Some(i) = self.improving(rows, b, current[b]) {
                        return Some((members, vec![i]));
                    }
                    continue;
                }
                let candidates: Vec<Vec<usize>> = members
                    .iter()
                    .map(|&b| {
                        (0..self.grids[b].len()).filter(|&i| Utility::Finite(self.payoffs[b][i]) > current[b]).collect()
                    })
                    .collect();
                if candidates.iter().any(Vec::is_empty) {
                    continue;
                }
                let saved: Vec<&[i64]> = members.iter().map(|&b| rows[b]).collect();
                let mut digits = vec![0usize; size];
                let hit = loop {
                    for (j, &b) in members.iter().enumerate() {
                        rows[b] = &self.scaled[b][candidates[j][digits[j]]];
                    }
                    let eval = self.game.evaluate_scaled(rows);
                    if members.iter().all(|&b| eval.admissible[b]) {
                        break Some(digits.iter().enumerate().map(|(j, &d)| candidates[j][d]).collect());
                    }
                    if !advance(&mut digits, &candidates.iter().map(Vec::len).collect::<Vec<_>>()) {
                        break None;
                    }
                };
                for (j, &b) in members.iter().enumerate() {
                    rows[b] = saved[j];
                }
                if let Some(choice) = hit {
                    return Some((members, choice));
                }
            }
        }
        None
    }
}

/// Odometer step, last position fastest. False once every tuple was visited.
fn advance(digits: &mut [usize], radices: &[usize]) -> bool {
    for j in (0..digits.len()).rev() {
        digits[j] += 1;
        if digits[j] < radices[j] {
            return true;
        }
        digits[j] = 0;
    }
    false
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return vec![];
    }
    let mut out = Vec::new();
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
            return out;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Prepares the profile for grid searches: checks it, evaluates it, and
/// builds a space whose scale resolves its entries.
fn setup(
    instance: &Instance,
    prices: &PriceProfile,
    profile: &StrategyProfile,
    granularity: Quantity,
) -> Result<(Space, Vec<Vec<i64>>, Vec<Utility>)> {
    let entries: Vec<Quantity> = profile.rows().iter().flatten().copied().collect();
    let space = Space::new(instance, prices, granularity, &entries)?;
    let utilities = space.game.utilities(profile, prices)?;
    let rows = profile.rows().iter().map(|r| space.game.scale_strategy(r)).collect();
    Ok((space, rows, utilities))
}

/// A single agent's improving move.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub agent: usize,
    pub strategy: Vec<Quantity>,
    pub utility: Utility,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NashVerdict {
    pub is_nash: bool,
    pub utilities: Vec<Utility>,
    pub witness: Option<Deviation>,
}

/// The grid strategy maximizing `agent`'s utility with the others fixed;
/// lexicographically smallest among ties. The utility is never negative.
pub fn best_response(
    instance: &Instance,
    prices: &PriceProfile,
    profile: &StrategyProfile,
    agent: usize,
    granularity: Quantity,
) -> Result<(Vec<Quantity>, Utility)> {
    let (space, rows, _) = setup(instance, prices, profile, granularity)?;
    if agent >= space.agents() {
        return Err(Error::Parameter(format!("agent index {agent} out of range")));
    }
    let mut refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
    let (i, value) = space.best_response(&mut refs, agent);
    Ok((space.grids[agent][i].clone(), Utility::Finite(value)))
}

/// Whether no agent has a strictly better grid strategy. The witness is the
/// first such agent and its best response.
pub fn is_nash(
    instance: &Instance,
    prices: &PriceProfile,
    profile: &StrategyProfile,
    granularity: Quantity,
) -> Result<NashVerdict> {
    let (space, rows, utilities) = setup(instance, prices, profile, granularity)?;
    let mut refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
    for b in 0..space.agents() {
        if let Some(i) = space.improving(&mut refs, b, utilities[b]) {
            let witness = Deviation {
                agent: b,
                strategy: space.grids[b][i].clone(),
                utility: Utility::Finite(space.payoffs[b][i]),
            };
            return Ok(NashVerdict { is_nash: false, utilities, witness: Some(witness) });
        }
    }
    Ok(NashVerdict { is_nash: true, utilities, witness: None })
}

/// How "coalition of k agents" is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoalitionMode {
    /// Coalitions of size 1 through k.
    #[default]
    UpTo,
    /// Coalitions of size exactly k.
    Exact,
}

impl CoalitionMode {
    fn sizes(self, k: usize) -> std::ops::RangeInclusive<usize> {
        match self {
            CoalitionMode::UpTo => 1..=k,
            CoalitionMode::Exact => k..=k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoalitionDeviation {
    pub agents: Vec<usize>,
    pub strategies: Vec<Vec<Quantity>>,
    /// The members' utilities after deviating.
    pub utilities: Vec<Utility>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrongVerdict {
    pub k: usize,
    pub mode: CoalitionMode,
    pub holds: bool,
    pub utilities: Vec<Utility>,
    pub witness: Option<CoalitionDeviation>,
}

fn check_k(k: usize, agents: usize) -> Result<()> {
    if k == 0 || k > agents.max(1) {
        return Err(Error::Parameter(format!("k = {k} outside [1, {}]", agents.max(1))));
    }
    Ok(())
}

pub fn is_k_strong(
    instance: &Instance,
    prices: &PriceProfile,
    profile: &StrategyProfile,
    k: usize,
    granularity: Quantity,
) -> Result<StrongVerdict> {
    is_k_strong_with(instance, prices, profile, k, granularity, CoalitionMode::UpTo)
}

/// Whether no coalition has a joint grid deviation strictly improving every
/// member. Non-members may end up inadmissible; that does not block the
/// deviation.
pub fn is_k_strong_with(
    instance: &Instance,
    prices: &PriceProfile,
    profile: &StrategyProfile,
    k: usize,
    granularity: Quantity,
    mode: CoalitionMode,
) -> Result<StrongVerdict> {
    check_k(k, instance.agents.len())?;
    let (space, rows, utilities) = setup(instance, prices, profile, granularity)?;
    let mut refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
    let witness = space.coalition_deviation(&mut refs, &utilities, mode.sizes(k)).map(|(members, choice)| {
        let strategies: Vec<Vec<Quantity>> =
            members.iter().zip(&choice).map(|(&b, &i)| space.grids[b][i].clone()).collect();
        let utilities = members.iter().zip(&choice).map(|(&b, &i)| Utility::Finite(space.payoffs[b][i])).collect();
        CoalitionDeviation { agents: members, strategies, utilities }
    });
    Ok(StrongVerdict { k, mode, holds: witness.is_none(), utilities, witness })
}

/// Parameters of an exhaustive grid search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOptions {
    pub granularity: Quantity,
    pub k: usize,
    pub mode: CoalitionMode,
    pub budget: u128,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { granularity: default_granularity(), k: 1, mode: CoalitionMode::UpTo, budget: DEFAULT_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Equilibrium {
    pub profile: StrategyProfile,
    pub utilities: Vec<Utility>,
    pub welfare: Quantity,
}

/// What a scan learned about one grid profile.
enum Outcome {
    Inadmissible,
    Improvable,
    Equilibrium(Equilibrium),
}

/// Classifies every grid profile in parallel. Best-response values depend
/// only on the other agents' strategies and are cached on that key.
fn scan(space: &Space, k: usize, mode: CoalitionMode, budget: u128) -> Result<Vec<Outcome>> {
    let sizes = space.sizes();
    let total: u128 = sizes.iter().fold(1u128, |acc, &n| acc.saturating_mul(n as u128));
    if total > budget || total > u64::MAX as u128 {
        return Err(Error::BudgetExceeded { size: total, budget });
    }
    let n = space.agents();
    let mut weights = vec![1u64; n];
    for b in (0..n.saturating_sub(1)).rev() {
        weights[b] = weights[b + 1] * sizes[b + 1] as u64;
    }
    let memo: DashMap<(usize, u64), Quantity> = DashMap::new();
    let coalition_sizes = match mode {
        CoalitionMode::UpTo => 2..=k,
        CoalitionMode::Exact => k..=k,
    };
    let needs_nash = mode == CoalitionMode::UpTo || k == 1;

    let outcomes = (0..total as u64)
        .into_par_iter()
        .map(|index| {
            let digits: Vec<usize> = (0..n).map(|b| (index / weights[b]) as usize % sizes[b]).collect();
            let mut rows: Vec<&[i64]> =
                digits.iter().enumerate().map(|(b, &d)| space.scaled[b][d].as_slice()).collect();
            let eval = space.game.evaluate_scaled(&rows);
            if !eval.profile_admissible() {
                return Outcome::Inadmissible;
            }
            let utilities: Vec<Utility> =
                digits.iter().enumerate().map(|(b, &d)| Utility::Finite(space.payoffs[b][d])).collect();
            if needs_nash {
                for b in 0..n {
                    let key = (b, index - digits[b] as u64 * weights[b]);
                    let best = match memo.get(&key) {
                        Some(v) => *v,
                        None => {
                            let (_, v) = space.best_response(&mut rows, b);
                            memo.insert(key, v);
                            v
                        }
                    };
                    if Utility::Finite(best) > utilities[b] {
                        return Outcome::Improvable;
                    }
                }
            }
            if !coalition_sizes.is_empty()
                && space.coalition_deviation(&mut rows, &utilities, coalition_sizes.clone()).is_some()
            {
                return Outcome::Improvable;
            }
            let profile =
                StrategyProfile::new(digits.iter().enumerate().map(|(b, &d)| space.grids[b][d].clone()).collect());
            Outcome::Equilibrium(Equilibrium { profile, utilities, welfare: eval.welfare })
        })
        .collect();
    Ok(outcomes)
}

/// Every admissible grid profile that is k-strong, in the lexicographic order
/// of the profile space (agent 0 most significant).
///
/// With [`CoalitionMode::Exact`] and `k > 1` only coalitions of exactly `k`
/// agents are tried; profiles must still be admissible.
pub fn enumerate_equilibria_with(
    instance: &Instance,
    prices: &PriceProfile,
    options: &SearchOptions,
) -> Result<Vec<Equilibrium>> {
    check_k(options.k, instance.agents.len())?;
    let space = Space::new(instance, prices, options.granularity, &[])?;
    let outcomes = scan(&space, options.k, options.mode, options.budget)?;
    Ok(outcomes
        .into_iter()
        .filter_map(|o| match o {
            Outcome::Equilibrium(e) => Some(e),
            _ => None,
        })
        .collect())
}

pub fn enumerate_equilibria(
    instance: &Instance,
    prices: &PriceProfile,
    granularity: Quantity,
    k: usize,
) -> Result<Vec<Equilibrium>> {
    enumerate_equilibria_with(instance, prices, &SearchOptions { granularity, k, ..SearchOptions::default() })
}

/// `OPT / W` for a price of anarchy or stability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ratio {
    Finite(Quantity),
    Infinity,
    NoEquilibrium,
}

impl Ratio {
    /// `0/0` counts as 1; a positive optimum over zero welfare is infinite.
    pub fn of(opt: Quantity, welfare: Option<Quantity>) -> Ratio {
        match welfare {
            None => Ratio::NoEquilibrium,
            Some(_) if opt.is_zero() => Ratio::Finite(Quantity::ONE),
            Some(w) if w.is_zero() => Ratio::Infinity,
            Some(w) => Ratio::Finite(opt / w),
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(q) => write!(f, "{q}"),
            Ratio::Infinity => f.write_str("inf"),
            Ratio::NoEquilibrium => f.write_str("no-equilibrium"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquilibriumReport {
    pub prices: PriceProfile,
    pub granularity: Quantity,
    pub k: usize,
    pub mode: CoalitionMode,
    pub space_size: u128,
    pub equilibria: Vec<Equilibrium>,
    pub opt: Quantity,
    pub best_welfare: Option<Quantity>,
    pub worst_welfare: Option<Quantity>,
    pub poa: Ratio,
    pub pos: Ratio,
}

pub fn efficiency_ratios_with(
    instance: &Instance,
    prices: &PriceProfile,
    options: &SearchOptions,
) -> Result<EquilibriumReport> {
    let equilibria = enumerate_equilibria_with(instance, prices, options)?;
    let opt = crate::game::optimal_welfare(instance)?;
    let best_welfare = equilibria.iter().map(|e| e.welfare).max();
    let worst_welfare = equilibria.iter().map(|e| e.welfare).min();
    Ok(EquilibriumReport {
        prices: prices.clone(),
        granularity: options.granularity,
        k: options.k,
        mode: options.mode,
        space_size: space_size(instance, options.granularity)?,
        poa: Ratio::of(opt, worst_welfare),
        pos: Ratio::of(opt, best_welfare),
        equilibria,
        opt,
        best_welfare,
        worst_welfare,
    })
}

pub fn efficiency_ratios(
    instance: &Instance,
    prices: &PriceProfile,
    granularity: Quantity,
    k: usize,
) -> Result<EquilibriumReport> {
    efficiency_ratios_with(instance, prices, &SearchOptions { granularity, k, ..SearchOptions::default() })
}

/// One profile of the four-step gadget that meets the necessary conditions
/// for an equilibrium, with the targeted deviations evaluated both by the
/// closed-form utilities and by the engine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateCheck {
    pub profile: StrategyProfile,
    /// Discharge of agent a (resp. c) at step 2.
    pub z_a: Quantity,
    pub z_c: Quantity,
    /// Charge of agent a (resp. c) at step 3.
    pub y_a: Quantity,
    pub y_c: Quantity,
    pub utility_sum: Quantity,
    pub utility_sum_formula: Quantity,
    pub deviation_a: Vec<Quantity>,
    pub deviation_c: Vec<Quantity>,
    pub deviation_a_formula: Quantity,
    pub deviation_c_formula: Quantity,
    pub deviation_a_engine: Utility,
    pub deviation_c_engine: Utility,
    /// `8 (z_a + z_c) + 2 (y_a + y_c)`, which an equilibrium would need at 11 or above.
    pub lhs: Quantity,
    pub lhs_below_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NoNeCertificate {
    pub granularity: Quantity,
    pub profiles: u128,
    pub inadmissible: u128,
    pub improvable: u128,
    /// Grid profiles without an improving deviation.
    pub failures: Vec<StrategyProfile>,
    pub candidates: Vec<CandidateCheck>,
    pub holds: bool,
}

/// Exhaustive check that the four-step gadget under prices (1, 11, 12, 13)
/// has no equilibrium on the `g`-grid. Every admissible profile that buys all
/// of step 1, sells 3/2 at step 4 and never both discharges at step 2 and
/// charges at step 3 is also checked against two targeted deviations.
pub fn verify_no_ne_construction(granularity: Quantity) -> Result<NoNeCertificate> {
    let half = Quantity::new(1, 2);
    if !granularity.is_positive() || !half.is_multiple_of(granularity) {
        return Err(Error::IncompatibleGranularity {
            granularity,
            value: half,
            what: "the half units of the gadget".into(),
            suggestion: if granularity.is_positive() { granularity.gcd(&half) } else { half },
        });
    }
    let (instance, prices) = paper_instance(PaperInstanceId::Fig4NoNe)?;
    let space = Space::new(&instance, &prices, granularity, &[])?;
    let outcomes = scan(&space, 1, CoalitionMode::UpTo, u128::MAX)?;
    let sizes = space.sizes();
    let decode = |mut index: usize| {
        let (j, i) = (index % sizes[1], {
            index /= sizes[1];
            index
        });
        StrategyProfile::new(vec![space.grids[0][i].clone(), space.grids[1][j].clone()])
    };

    let mut cert = NoNeCertificate {
        granularity,
        profiles: outcomes.len() as u128,
        inadmissible: 0,
        improvable: 0,
        failures: vec![],
        candidates: vec![],
        holds: false,
    };
    let mut admissible = Vec::new();
    for (index, outcome) in outcomes.iter().enumerate() {
        match outcome {
            Outcome::Inadmissible => cert.inadmissible += 1,
            Outcome::Improvable => {
                cert.improvable += 1;
                admissible.push(index);
            }
            Outcome::Equilibrium(e) => {
                cert.failures.push(e.profile.clone());
                admissible.push(index);
            }
        }
    }

    let q = Quantity::from_integer;
    let zero = Quantity::ZERO;
    for index in admissible {
        let profile = decode(index);
        let (a, c) = (profile.strategy(0), profile.strategy(1));
        let (z_a, z_c) = ((-a[1]).max(zero), (-c[1]).max(zero));
        let (y_a, y_c) = (a[2].max(zero), c[2].max(zero));
        let meets = a[0] + c[0] == Quantity::ONE
            && -(a[3] + c[3]) == Quantity::new(3, 2)
            && (!z_a.is_positive() || y_a.is_zero())
            && (!z_c.is_positive() || y_c.is_zero());
        if !meets {
            continue;
        }
        let three_halves = Quantity::new(3, 2);
        let deviation =
            |z: Quantity, y: Quantity| vec![Quantity::ONE - z, z - Quantity::ONE, three_halves - y, y - three_halves];
        let deviation_a = deviation(z_c, y_c);
        let deviation_c = deviation(z_a, y_a);
        let engine = |agent: usize, strategy: &Vec<Quantity>| -> Result<Utility> {
            let u = space.game.utilities(&profile.with_strategy(agent, strategy.clone()), &prices)?;
            Ok(u[agent])
        };
        let lhs = q(8) * (z_a + z_c) + q(2) * (y_a + y_c);
        cert.candidates.push(CandidateCheck {
            utility_sum: prices.payoff(a) + prices.payoff(c),
            utility_sum_formula: q(10) * (z_a + z_c) + q(12) * (Quantity::ONE - z_a - z_c) + (y_a + y_c),
            deviation_a_formula: q(10) * (Quantity::ONE - z_c) + three_halves - y_c,
            deviation_c_formula: q(10) * (Quantity::ONE - z_a) + three_halves - y_a,
            deviation_a_engine: engine(0, &deviation_a)?,
            deviation_c_engine: engine(1, &deviation_c)?,
            deviation_a,
            deviation_c,
            lhs_below_bound: lhs < q(11),
            lhs,
            z_a,
            z_c,
            y_a,
            y_c,
            profile,
        });
    }
    cert.holds = cert.failures.is_empty() && cert.candidates.iter().all(|c| c.lhs_below_bound);
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Quantity {
        Quantity::from_integer(n)
    }

    fn ints(rows: &[&[i64]]) -> Vec<Vec<Quantity>> {
        rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect()
    }

    fn fig(id: PaperInstanceId) -> (Instance, PriceProfile) {
        paper_instance(id).unwrap()
    }

    #[test]
    fn grids() {
        let (fig5, _) = fig(PaperInstanceId::Fig5AscPos { horizon: 2 });
        assert_eq!(strategy_grid(&fig5, 0, q(1)).unwrap(), ints(&[&[0, 0], &[1, -1], &[1, 0]]));
        let (fig1, _) = fig(PaperInstanceId::Fig1Structure);
        assert_eq!(
            strategy_grid(&fig1, 0, q(1)).unwrap(),
            ints(&[&[0, 0], &[1, -1], &[1, 0], &[2, -2], &[2, -1], &[2, 0]])
        );
        let (fig4, _) = fig(PaperInstanceId::Fig4NoNe);
        assert_eq!(strategy_grid(&fig4, 0, Quantity::new(1, 2)).unwrap().len(), 375);
        assert_eq!(space_size(&fig4, Quantity::new(1, 2)).unwrap(), 375 * 375);
    }

    #[test]
    fn incompatible_granularity() {
        let (fig1, _) = fig(PaperInstanceId::Fig1Structure);
        let err = strategy_grid(&fig1, 0, Quantity::new(3, 2)).unwrap_err();
        assert!(matches!(err, Error::IncompatibleGranularity { suggestion, .. } if suggestion == Quantity::new(1, 2)));
        assert!(strategy_grid(&fig1, 0, q(0)).is_err());
    }

    #[test]
    fn combinations_in_order() {
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(combinations(2, 3), Vec::<Vec<usize>>::new());
        assert_eq!(combinations(2, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn fig3_best_response_and_nash() {
        let (inst, prices) = fig(PaperInstanceId::Fig3T2Poa);
        let zero = StrategyProfile::zero(3, 2);
        let (s, u) = best_response(&inst, &prices, &zero, 1, q(1)).unwrap();
        assert_eq!(s, vec![q(1), q(-1)]);
        assert_eq!(u, Utility::Finite(q(1)));
        let ne = StrategyProfile::from_integers(&[&[0, 0], &[1, -1], &[0, 0]]);
        assert!(is_nash(&inst, &prices, &ne, q(1)).unwrap().is_nash);
    }

    #[test]
    fn fig5_nash_examples() {
        let (inst, prices) = fig(PaperInstanceId::Fig5AscPos { horizon: 4 });
        let good = StrategyProfile::from_integers(&[&[1, 0, 0, -1]]);
        assert!(is_nash(&inst, &prices, &good, q(1)).unwrap().is_nash);
        let bad = StrategyProfile::from_integers(&[&[1, -1, 1, -1]]);
        let v = is_nash(&inst, &prices, &bad, q(1)).unwrap();
        assert!(!v.is_nash);
        let w = v.witness.unwrap();
        assert_eq!(w.agent, 0);
        assert!(w.utility > v.utilities[0]);
    }

    #[test]
    fn fig7_strong() {
        let (inst, prices) = fig(PaperInstanceId::Fig7StrongPoa { horizon: 4 });
        let zero = StrategyProfile::zero(3, 4);
        assert!(is_k_strong(&inst, &prices, &zero, 2, q(1)).unwrap().holds);
        let v = is_k_strong(&inst, &prices, &zero, 3, q(1)).unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert_eq!(w.agents, vec![0, 1, 2]);
        assert_eq!(w.strategies, ints(&[&[1, -1, 0, 0], &[0, 1, -1, 0], &[0, 0, 1, -1]]));
        assert!(is_k_strong_with(&inst, &prices, &zero, 3, q(1), CoalitionMode::Exact).map(|v| !v.holds).unwrap());
        assert!(is_k_strong_with(&inst, &prices, &zero, 2, q(1), CoalitionMode::Exact).unwrap().holds);
    }

    #[test]
    fn k_bounds() {
        let (inst, prices) = fig(PaperInstanceId::Fig3T2Poa);
        let zero = StrategyProfile::zero(3, 2);
        assert!(is_k_strong(&inst, &prices, &zero, 0, q(1)).is_err());
        assert!(is_k_strong(&inst, &prices, &zero, 4, q(1)).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let (fig1, _) = fig(PaperInstanceId::Fig1Structure);
        let desc = PriceProfile::from_integers(&[2, 1]);
        let eq = enumerate_equilibria(&fig1, &desc, q(1), 1).unwrap();
        assert_eq!(eq.len(), 1);
        assert!(eq[0].profile.is_zero());

        let (fig3, prices) = fig(PaperInstanceId::Fig3T2Poa);
        let report = efficiency_ratios(&fig3, &prices, q(1), 1).unwrap();
        assert_eq!(report.opt, q(2));
        assert_eq!(report.worst_welfare, Some(q(1)));
        assert_eq!(report.best_welfare, Some(q(2)));
        assert_eq!(report.poa, Ratio::Finite(q(2)));
        assert_eq!(report.pos, Ratio::Finite(q(1)));
        assert_eq!(report.space_size, 27);
    }

    #[test]
    fn fig6_pos_infinite() {
        let (inst, prices) = fig(PaperInstanceId::Fig6SupplySign { q: q(1), r: q(1) });
        let report = efficiency_ratios(&inst, &prices, q(1), 1).unwrap();
        assert_eq!(report.equilibria.len(), 1);
        assert!(report.equilibria[0].profile.is_zero());
        assert_eq!(report.pos, Ratio::Infinity);
    }

    #[test]
    fn budget_refusal() {
        let (fig4, prices) = fig(PaperInstanceId::Fig4NoNe);
        let options = SearchOptions { budget: 1000, ..SearchOptions::default() };
        let err = enumerate_equilibria_with(&fig4, &prices, &options).unwrap_err();
        assert_eq!(err, Error::BudgetExceeded { size: 140_625, budget: 1000 });
    }

    #[test]
    fn ratio_edge_cases() {
        assert_eq!(Ratio::of(q(0), Some(q(0))), Ratio::Finite(q(1)));
        assert_eq!(Ratio::of(q(1), Some(q(0))), Ratio::Infinity);
        assert_eq!(Ratio::of(q(1), None), Ratio::NoEquilibrium);
        assert_eq!(Ratio::of(q(3), Some(q(2))).to_string(), "3/2");
    }

    #[test]
    fn gadget_certificate_at_half_units() {
        let cert = verify_no_ne_construction(Quantity::new(1, 2)).unwrap();
        assert_eq!(cert.profiles, 140_625);
        // a stores the step-3 unit, c splits its step-1 unit between steps 2 and 4
        let h = Quantity::new(1, 2);
        let found = StrategyProfile::new(vec![vec![q(0), q(0), q(1), q(-1)], vec![q(1), -h, q(0), -h]]);
        let mirrored = StrategyProfile::new(vec![found.strategy(1).to_vec(), found.strategy(0).to_vec()]);
        assert_eq!(cert.failures, vec![found.clone(), mirrored]);
        assert!(!cert.holds);

        let check = cert.candidates.iter().find(|c| c.profile == found).unwrap();
        assert_eq!((check.z_a, check.z_c, check.y_a, check.y_c), (q(0), h, q(1), q(0)));
        assert_eq!(check.lhs, q(6));
        assert_eq!(check.utility_sum, q(12));
        assert_eq!(check.deviation_a, vec![h, -h, Quantity::new(3, 2), Quantity::new(-3, 2)]);
        // step 3 offers agent a only one unit
        assert_eq!(check.deviation_a_engine, Utility::NegativeInfinity);
        assert!(verify_no_ne_construction(Quantity::new(1, 3)).is_err());
    }

    #[test]
    fn zero_profile_of_gadget_improves_at_step_one() {
        let (inst, prices) = fig(PaperInstanceId::Fig4NoNe);
        let v = is_nash(&inst, &prices, &StrategyProfile::zero(2, 4), Quantity::new(1, 2)).unwrap();
        let w = v.witness.unwrap();
        assert!(w.strategy[0].is_positive());
    }
}
