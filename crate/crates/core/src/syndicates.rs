//! Cross-token address graph and syndicate extraction.
//!
//! Core addresses of a token are its creator, its first liquidity provider
//! and every address that took a positive liquidity profit from it. Core
//! addresses of the same token are linked; groups are the connected
//! components of the resulting graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Address, DefiKind, QuoteAsset, TokenRecord};
use crate::profits::{aggregate_losses, LossSummary, PriceTable, ProfitError, ProfitRecord};
use crate::stats::Describe;

#[derive(Debug, Error)]
pub enum SyndicateError {
    #[error("no groups to summarize")]
    EmptyInput,
    #[error(transparent)]
    Profit(#[from] ProfitError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub creator: bool,
    pub liquidity_provider: bool,
    pub profiteer: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub roles: Roles,
    /// Tokens this address is a core address of.
    pub mints: BTreeSet<Address>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    CoToken,
    Funded,
    ProfitedFrom,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub a: Address,
    pub b: Address,
    pub relation: Relation,
    pub mint: Address,
}

#[derive(Debug, Clone, Default)]
pub struct AddressGraph {
    pub nodes: BTreeMap<Address, NodeInfo>,
    pub edges: Vec<Edge>,
    adjacency: BTreeMap<Address, BTreeSet<Address>>,
    /// Creator-side profit records for tokens in the graph.
    profits: Vec<ProfitRecord>,
    /// Quote-asset profit takers per token (positive net only).
    profiteers: BTreeMap<Address, BTreeSet<Address>>,
}

impl AddressGraph {
    fn touch(&mut self, addr: &str, mint: &str) -> &mut NodeInfo {
        let node = self.nodes.entry(addr.to_string()).or_default();
        node.mints.insert(mint.to_string());
        node
    }

    fn link(&mut self, a: &str, b: &str, relation: Relation, mint: &str) {
        if a == b {
            return;
        }
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        self.edges.push(Edge {
            a: x.to_string(),
            b: y.to_string(),
            relation,
            mint: mint.to_string(),
        });
        self.adjacency.entry(x.to_string()).or_default().insert(y.to_string());
        self.adjacency.entry(y.to_string()).or_default().insert(x.to_string());
    }

    pub fn neighbors(&self, addr: &str) -> impl Iterator<Item = &Address> {
        self.adjacency.get(addr).into_iter().flatten()
    }

    /// Connected components by breadth-first search, each sorted, listed in
    /// order of their smallest member.
    pub fn components(&self) -> Vec<BTreeSet<Address>> {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.nodes.keys() {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            while let Some(n) = queue.pop_front() {
                comp.insert(n.clone());
                for m in self.neighbors(n) {
                    if seen.insert(m) {
                        queue.push_back(m);
                    }
                }
            }
            out.push(comp);
        }
        out
    }
}

pub fn build_address_graph(records: &[TokenRecord], profits: &[ProfitRecord]) -> AddressGraph {
    let mut g = AddressGraph::default();
    let mut by_mint: BTreeMap<&str, Vec<&ProfitRecord>> = BTreeMap::new();
    for p in profits {
        by_mint.entry(p.mint.as_str()).or_default().push(p);
    }
    for r in records {
        let mint = r.mint.as_str();
        let creator = r.meta.creator.as_str();
        let mut core: BTreeSet<&str> = BTreeSet::new();

        g.touch(creator, mint).roles.creator = true;
        core.insert(creator);
        if let Some(first) = r
            .defi_activities
            .iter()
            .find(|a| a.kind == DefiKind::AddLiquidity)
        {
            g.touch(&first.actor, mint).roles.liquidity_provider = true;
            core.insert(&first.actor);
        }
        let token_profits = by_mint.get(mint).map(Vec::as_slice).unwrap_or(&[]);
        let mut net: BTreeMap<(&str, &QuoteAsset), crate::fixed::Fixed> = BTreeMap::new();
        for p in token_profits {
            *net.entry((p.address.as_str(), &p.asset)).or_default() += p.net_profit;
            g.profits.push((*p).clone());
        }
        let sinks: BTreeSet<&str> = net
            .iter()
            .filter(|(_, v)| v.is_positive())
            .map(|((a, _), _)| *a)
            .collect();
        for s in &sinks {
            g.touch(s, mint).roles.profiteer = true;
            core.insert(s);
        }
        g.profiteers.insert(
            mint.to_string(),
            sinks.iter().map(|s| s.to_string()).collect(),
        );

        let core: Vec<&str> = core.into_iter().collect();
        for (i, a) in core.iter().enumerate() {
            for b in &core[i + 1..] {
                g.link(a, b, Relation::CoToken, mint);
            }
        }
        for s in &sinks {
            g.link(creator, s, Relation::ProfitedFrom, mint);
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    SingleActor,
    Star,
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyndicateConfig {
    /// Groups need `members + tokens` strictly above this.
    pub min_combined_size: usize,
    /// Share of a group's tokens a single profit sink must cover for a star.
    pub star_share: f64,
}

impl Default for SyndicateConfig {
    fn default() -> Self {
        SyndicateConfig {
            min_combined_size: 50,
            star_share: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyndicateGroup {
    /// Smallest member address.
    pub group_id: Address,
    pub members: BTreeSet<Address>,
    pub tokens: BTreeSet<Address>,
    pub creators: BTreeSet<Address>,
    pub profitable_addrs: BTreeSet<Address>,
    /// Profit takers per token.
    pub token_profiteers: BTreeMap<Address, BTreeSet<Address>>,
    pub topology: Topology,
    pub profit_summary: LossSummary,
}

/// `SingleActor` for one member; `Star` when exactly one address takes a
/// profit on at least `star_share` of the group's tokens; `Cluster` otherwise.
pub fn classify_topology(group: &SyndicateGroup, star_share: f64) -> Topology {
    if group.members.len() == 1 {
        return Topology::SingleActor;
    }
    let n_tokens = group.tokens.len();
    if n_tokens == 0 {
        return Topology::Cluster;
    }
    let mut coverage: BTreeMap<&str, usize> = BTreeMap::new();
    for sinks in group.token_profiteers.values() {
        for s in sinks {
            *coverage.entry(s.as_str()).or_default() += 1;
        }
    }
    let dominant = coverage
        .values()
        .filter(|&&c| c as f64 >= star_share * n_tokens as f64)
        .count();
    if dominant == 1 {
        Topology::Star
    } else {
        Topology::Cluster
    }
}

/// Components large enough to count as organized groups, most profitable
/// (in USD) first, ties broken by group id.
pub fn extract_groups(
    graph: &AddressGraph,
    config: &SyndicateConfig,
    prices: &PriceTable,
) -> Result<Vec<SyndicateGroup>, SyndicateError> {
    let mut groups = Vec::new();
    for members in graph.components() {
        let tokens: BTreeSet<Address> = members
            .iter()
            .flat_map(|m| graph.nodes[m].mints.iter().cloned())
            .collect();
        if members.len() + tokens.len() <= config.min_combined_size {
            continue;
        }
        let creators = members
            .iter()
            .filter(|m| graph.nodes[*m].roles.creator)
            .cloned()
            .collect();
        let profitable_addrs = members
            .iter()
            .filter(|m| graph.nodes[*m].roles.profiteer)
            .cloned()
            .collect();
        let token_profiteers = tokens
            .iter()
            .map(|t| (t.clone(), graph.profiteers.get(t).cloned().unwrap_or_default()))
            .collect();
        let records: Vec<ProfitRecord> = graph
            .profits
            .iter()
            .filter(|p| tokens.contains(&p.mint) && members.contains(&p.address))
            .cloned()
            .collect();
        let mut group = SyndicateGroup {
            group_id: members.first().cloned().unwrap_or_default(),
            members,
            tokens,
            creators,
            profitable_addrs,
            token_profiteers,
            topology: Topology::Cluster,
            profit_summary: aggregate_losses(&records, prices)?,
        };
        group.topology = classify_topology(&group, config.star_share);
        groups.push(group);
    }
    groups.sort_by(|a, b| {
        b.profit_summary
            .total_usd
            .cmp(&a.profit_summary.total_usd)
            .then_with(|| a.group_id.cmp(&b.group_id))
    });
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub metric: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

impl StatRow {
    fn of(metric: &str, values: &[f64]) -> Option<StatRow> {
        let d = Describe::of(values)?;
        Some(StatRow {
            metric: metric.to_string(),
            min: d.min,
            max: d.max,
            mean: d.mean,
            median: d.median,
        })
    }
}

/// Descriptive statistics over groups: structure counts, per-asset profit
/// (over groups that profited in that asset) and total USD.
pub fn group_stats(groups: &[SyndicateGroup]) -> Result<Vec<StatRow>, SyndicateError> {
    if groups.is_empty() {
        return Err(SyndicateError::EmptyInput);
    }
    let count = |f: fn(&SyndicateGroup) -> usize| -> Vec<f64> {
        groups.iter().map(|g| f(g) as f64).collect()
    };
    let mut rows: Vec<StatRow> = [
        ("members", count(|g| g.members.len())),
        ("tokens", count(|g| g.tokens.len())),
        ("creators", count(|g| g.creators.len())),
        ("profitable_addrs", count(|g| g.profitable_addrs.len())),
    ]
    .iter()
    .filter_map(|(m, v)| StatRow::of(m, v))
    .collect();

    let assets: BTreeSet<&QuoteAsset> = groups
        .iter()
        .flat_map(|g| g.profit_summary.per_asset.iter().map(|a| &a.asset))
        .collect();
    for asset in assets {
        let vals: Vec<f64> = groups
            .iter()
            .filter_map(|g| g.profit_summary.asset(asset))
            .map(|a| a.total.to_f64())
            .collect();
        rows.extend(StatRow::of(&format!("profit_{asset}"), &vals));
    }
    let usd: Vec<f64> = groups
        .iter()
        .map(|g| g.profit_summary.total_usd.to_f64())
        .collect();
    rows.extend(StatRow::of("total_usd", &usd));
    Ok(rows)
}

pub fn stats_csv(rows: &[StatRow]) -> String {
    let mut out = String::from("metric,min,max,mean,median\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.2},{:.2},{:.2},{:.2}", r.metric, r.min, r.max, r.mean, r.median);
    }
    out
}

/// Graphviz rendering of one group's subgraph.
pub fn to_dot(graph: &AddressGraph, group: &SyndicateGroup) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph \"{}\" {{", group.group_id);
    for m in &group.members {
        let roles = graph.nodes[m].roles;
        let shape = if roles.profiteer {
            "doublecircle"
        } else if roles.creator {
            "box"
        } else {
            "ellipse"
        };
        let _ = writeln!(out, "  \"{m}\" [shape={shape}];");
    }
    let mut seen = BTreeSet::new();
    for e in &graph.edges {
        if group.members.contains(&e.a) && seen.insert((&e.a, &e.b, e.relation)) {
            let style = match e.relation {
                Relation::CoToken => "solid",
                Relation::Funded => "dotted",
                Relation::ProfitedFrom => "dashed",
            };
            let _ = writeln!(out, "  \"{}\" -- \"{}\" [style={style}];", e.a, e.b);
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::Fixed;
    use crate::model::*;
    use crate::profits::trace_profits;

    fn token(mint: &str, creator: &str, lp: Option<(&str, &str)>) -> TokenRecord {
        let meta = TokenMeta {
            name: "T".into(),
            symbol: "T".into(),
            freeze_authority: None,
            mint_authority: None,
            creator: creator.into(),
            decimals: 6,
            links: vec![],
        };
        let mut acts = vec![];
        if let Some((lp, removed)) = lp {
            acts.push(DefiActivity {
                signature: format!("{mint}-add"),
                kind: DefiKind::AddLiquidity,
                actor: lp.into(),
                timestamp: 1,
                base_amount: -1,
                quote_asset: QuoteAsset::Sol,
                quote_amount: Fixed::from_int(-1),
                pool: format!("{mint}-pool"),
            });
            acts.push(DefiActivity {
                signature: format!("{mint}-rm"),
                kind: DefiKind::RemoveLiquidity,
                actor: lp.into(),
                timestamp: 2,
                base_amount: 1,
                quote_asset: QuoteAsset::Sol,
                quote_amount: removed.parse().unwrap(),
                pool: format!("{mint}-pool"),
            });
        }
        TokenRecord::new(mint, meta, 0, vec![], acts, vec![]).unwrap()
    }

    fn graph(records: &[TokenRecord]) -> AddressGraph {
        let profits: Vec<_> = records.iter().flat_map(trace_profits).collect();
        build_address_graph(records, &profits)
    }

    fn prices() -> PriceTable {
        PriceTable::parse("SOL,100").unwrap()
    }

    #[test]
    fn shared_creator_joins_tokens() {
        let g = graph(&[token("T1", "X", Some(("L1", "2"))), token("T2", "X", Some(("L2", "2")))]);
        let comps = g.components();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 3);
        assert!(g.nodes["L1"].roles.profiteer && g.nodes["L1"].roles.liquidity_provider);
    }

    #[test]
    fn disjoint_tokens_stay_apart() {
        let g = graph(&[token("T1", "X", None), token("T2", "Y", None)]);
        assert_eq!(g.components().len(), 2);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn threshold_is_strict() {
        // 25 members (creators) + 25 tokens, hub LP ties them
        let recs: Vec<_> = (0..25)
            .map(|i| token(&format!("T{i:02}"), &format!("C{i:02}"), Some(("HUB", "0.5"))))
            .collect();
        // members: 25 creators + HUB = 26, tokens 25 => 51 > 50
        let g = graph(&recs);
        let groups = extract_groups(&g, &SyndicateConfig::default(), &prices()).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].members.len() + groups[0].tokens.len(), 51);

        let cfg = SyndicateConfig {
            min_combined_size: 51,
            ..Default::default()
        };
        assert!(extract_groups(&g, &cfg, &prices()).unwrap().is_empty());
    }

    fn bare_group(members: usize, tokens: usize, sinks: Vec<Vec<usize>>) -> SyndicateGroup {
        SyndicateGroup {
            group_id: "m0".into(),
            members: (0..members).map(|i| format!("m{i}")).collect(),
            tokens: (0..tokens).map(|i| format!("t{i}")).collect(),
            creators: BTreeSet::new(),
            profitable_addrs: BTreeSet::new(),
            token_profiteers: sinks
                .into_iter()
                .enumerate()
                .map(|(t, s)| (format!("t{t}"), s.into_iter().map(|i| format!("m{i}")).collect()))
                .collect(),
            topology: Topology::Cluster,
            profit_summary: LossSummary::default(),
        }
    }

    #[test]
    fn topology_labels() {
        assert_eq!(classify_topology(&bare_group(1, 60, vec![]), 0.8), Topology::SingleActor);
        let star = bare_group(40, 50, (0..50).map(|_| vec![0]).collect());
        assert_eq!(classify_topology(&star, 0.8), Topology::Star);
        let rotating = bare_group(40, 50, (0..50).map(|t| vec![t % 5]).collect());
        assert_eq!(classify_topology(&rotating, 0.8), Topology::Cluster);
        // two addresses both on every token: not a single sink
        let twin = bare_group(40, 10, (0..10).map(|_| vec![0, 1]).collect());
        assert_eq!(classify_topology(&twin, 0.8), Topology::Cluster);
        // exactly 80% coverage counts
        let edge = bare_group(40, 10, (0..10).map(|t| if t < 8 { vec![3] } else { vec![4] }).collect());
        assert_eq!(classify_topology(&edge, 0.8), Topology::Star);
    }

    #[test]
    fn stats_over_groups() {
        let mut a = bare_group(10, 5, vec![]);
        let mut b = bare_group(30, 5, vec![]);
        a.group_id = "a".into();
        b.group_id = "b".into();
        let rows = group_stats(&[a.clone(), b]).unwrap();
        let members = rows.iter().find(|r| r.metric == "members").unwrap();
        assert_eq!((members.mean, members.median), (20.0, 20.0));
        let single = group_stats(&[a]).unwrap();
        let m = &single[0];
        assert!(m.min == m.max && m.max == m.mean && m.mean == m.median);
        assert!(matches!(group_stats(&[]), Err(SyndicateError::EmptyInput)));
    }

    #[test]
    fn dot_lists_members_and_edges() {
        let recs: Vec<_> = (0..30)
            .map(|i| token(&format!("T{i:02}"), &format!("C{i:02}"), Some(("HUB", "3"))))
            .collect();
        let g = graph(&recs);
        let groups = extract_groups(&g, &SyndicateConfig::default(), &prices()).unwrap();
        assert_eq!(groups[0].topology, Topology::Star);
        let dot = to_dot(&g, &groups[0]);
        assert!(dot.starts_with("graph \"C00\""));
        assert!(dot.contains("\"HUB\" [shape=doublecircle]"));
        assert!(dot.contains("\"C00\" -- \"HUB\""));
    }
}
