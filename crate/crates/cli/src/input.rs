use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use chargegame::{
    load_document, make_price_profile, paper_instance, Instance, PaperInstanceId, PriceProfile, PriceSpec, Quantity,
    StrategyProfile,
};
use clap::Args;

/// Where the instance comes from.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Built-in instance, e.g. `fig3_t2poa` or `fig5_asc_pos:6`.
    #[arg(long, value_name = "ID[:PARAMS]")]
    pub paper: Option<String>,
    /// Instance document on disk.
    #[arg(long, value_name = "PATH")]
    pub file: Option<PathBuf>,
}

pub struct Loaded {
    pub instance: Instance,
    pub prices: Option<PriceProfile>,
    pub label: String,
}

impl Source {
    pub fn load(&self) -> anyhow::Result<Loaded> {
        if let Some(id) = &self.paper {
            let id: PaperInstanceId = id.parse()?;
            let (instance, prices) = paper_instance(id)?;
            return Ok(Loaded { instance, prices: Some(prices), label: format!("paper:{id}") });
        }
        let path = self.file.as_ref().expect("clap enforces one source");
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let (instance, prices) = load_document(&text).with_context(|| format!("in {}", path.display()))?;
        Ok(Loaded { instance, prices, label: format!("file:{}", path.display()) })
    }
}

fn quantities(text: &str) -> anyhow::Result<Vec<Quantity>> {
    text.split(',').map(|v| v.trim().parse::<Quantity>().map_err(anyhow::Error::from)).collect()
}

fn pair(text: &str, what: &str) -> anyhow::Result<(Quantity, Quantity)> {
    match quantities(text)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => bail!("{what} takes `start,step`, got `{text}`"),
    }
}

/// `1,2,3`, `uniform:c`, `asc:start,step`, `desc:start,step` or `sign:m1,...,mT`.
pub fn parse_price_spec(text: &str) -> anyhow::Result<PriceSpec> {
    let spec = match text.split_once(':') {
        Some(("uniform", c)) => PriceSpec::Uniform(c.trim().parse()?),
        Some(("asc", p)) => {
            let (start, step) = pair(p, "asc")?;
            PriceSpec::Ascending { start, step }
        }
        Some(("desc", p)) => {
            let (start, step) = pair(p, "desc")?;
            PriceSpec::Descending { start, step }
        }
        Some(("sign", m)) => PriceSpec::SupplySign(quantities(m)?),
        Some((kind, _)) => bail!("unknown price kind `{kind}`; use uniform, asc, desc or sign"),
        None => PriceSpec::Explicit(quantities(text)?),
    };
    Ok(spec)
}

/// Explicit `--prices` win over the ones shipped with the instance.
pub fn resolve_prices(flag: Option<&str>, loaded: &Loaded) -> anyhow::Result<PriceProfile> {
    match flag {
        Some(text) => Ok(make_price_profile(&parse_price_spec(text)?, &loaded.instance)?),
        None => match &loaded.prices {
            Some(p) => Ok(p.clone()),
            None => bail!("{} carries no prices; pass --prices", loaded.label),
        },
    }
}

/// Rows separated by `;`, one per agent in instance order, e.g. `1,-1;0,0`.
pub fn parse_profile(text: &str, instance: &Instance) -> anyhow::Result<StrategyProfile> {
    let rows: Vec<Vec<Quantity>> = text.split(';').map(quantities).collect::<anyhow::Result<_>>()?;
    if rows.len() != instance.agents.len() {
        bail!("profile has {} rows but the instance has {} agents", rows.len(), instance.agents.len());
    }
    if let Some(row) = rows.iter().find(|r| r.len() != instance.horizon) {
        bail!("profile row has {} entries, expected T = {}", row.len(), instance.horizon);
    }
    Ok(StrategyProfile::new(rows))
}

pub fn agent_index(text: &str, instance: &Instance) -> anyhow::Result<usize> {
    if let Some(i) = instance.agent_index(text) {
        return Ok(i);
    }
    match text.parse::<usize>() {
        Ok(i) if i < instance.agents.len() => Ok(i),
        _ => bail!("no agent `{text}`"),
    }
}
