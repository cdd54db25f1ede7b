//! Soundness criteria at side-effect calls, imprecision ranking, and the report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::ir::{Program, Receiver, SiteId, StmtId, StmtKind, VarId};
use crate::pta::{AbstractObj, PointsToState};
use crate::reflection::{ptp, EngineConfig};

pub use crate::reflection::all_known;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EntryKind {
    UnsoundInvoke,
    UnsoundGet,
    UnsoundSet,
    ImpreciseCast,
    ImpreciseTargets,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnsoundEntry {
    pub site: String,
    pub kind: EntryKind,
    pub provenance: Vec<String>,
    /// No metaobject at the site carries an origin to point at.
    pub untraced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImpreciseEntry {
    pub site: String,
    pub kind: EntryKind,
    pub metric: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallEdge {
    pub site: String,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Sound,
    Unsound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Stats {
    pub reachable_methods: usize,
    pub call_edges: usize,
    pub reflective_edges: usize,
    pub objects: usize,
    pub facts: usize,
    pub iterations: usize,
    pub diagnostics: Vec<String>,
    pub rule_hits: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub verdict: Verdict,
    pub unsound: Vec<UnsoundEntry>,
    pub imprecise: Vec<ImpreciseEntry>,
    pub call_graph: Vec<CallEdge>,
    pub stats: Stats,
}

fn meta_objs<'s>(st: &'s PointsToState, v: VarId) -> impl Iterator<Item = &'s AbstractObj> + 's {
    st.var_objs(v).filter(|o| {
        matches!(
            o,
            AbstractObj::MethodObj { .. } | AbstractObj::FieldObj { .. }
        )
    })
}

/// `∀ m^u_s ∈ pt(v)`: every metaobject of unknown class satisfies `cond`.
fn unknown_class_metas_all(
    st: &PointsToState,
    v: VarId,
    cond: impl Fn(&AbstractObj) -> bool,
) -> bool {
    meta_objs(st, v)
        .filter(|o| {
            matches!(
                o,
                AbstractObj::MethodObj { class: None, .. }
                    | AbstractObj::FieldObj { class: None, .. }
            )
        })
        .all(cond)
}

fn receiver_known(st: &PointsToState, recv: Receiver) -> bool {
    match recv {
        Receiver::Var(y) => all_known(st, y),
        Receiver::Null => false,
    }
}

/// `SC(m.invoke(y, args))`. With a `null` receiver only the second disjunct counts.
pub fn sc_invoke(p: &Program, st: &PointsToState, sid: StmtId) -> bool {
    let StmtKind::Invoke {
        method_var,
        recv,
        args,
        ..
    } = p.stmt(sid).kind
    else {
        return true;
    };
    let exact_args = !ptp(p, st, args).is_empty();
    receiver_known(st, recv)
        || unknown_class_metas_all(st, method_var, |o| {
            exact_args && matches!(o, AbstractObj::MethodObj { sig, .. } if sig.name.is_some())
        })
}

/// `SC(f.get(y))`: a cast of `Object` counts as no cast.
pub fn sc_get(p: &Program, st: &PointsToState, sid: StmtId) -> bool {
    let StmtKind::FieldGet {
        cast,
        field_var,
        recv,
        ..
    } = p.stmt(sid).kind
    else {
        return true;
    };
    receiver_known(st, recv)
        || unknown_class_metas_all(st, field_var, |o| {
            cast != crate::ir::ClassId::OBJECT
                && matches!(o, AbstractObj::FieldObj { sig, .. } if sig.name.is_some())
        })
}

/// `SC(f.set(y, x))`.
pub fn sc_set(p: &Program, st: &PointsToState, sid: StmtId) -> bool {
    let StmtKind::FieldSet {
        field_var,
        recv,
        value,
    } = p.stmt(sid).kind
    else {
        return true;
    };
    receiver_known(st, recv)
        || unknown_class_metas_all(st, field_var, |o| {
            all_known(st, value)
                && matches!(o, AbstractObj::FieldObj { sig, .. } if sig.name.is_some())
        })
}

fn is_reached(p: &Program, st: &PointsToState, sid: StmtId) -> bool {
    st.is_reachable(p.stmt(sid).method)
}

/// Reachable side-effect calls whose criterion fails, in statement order.
pub fn unsound_sites(p: &Program, st: &PointsToState) -> Vec<(StmtId, EntryKind)> {
    p.stmt_ids()
        .filter(|&sid| is_reached(p, st, sid))
        .filter_map(|sid| match p.stmt(sid).kind {
            StmtKind::Invoke { .. } => {
                (!sc_invoke(p, st, sid)).then_some((sid, EntryKind::UnsoundInvoke))
            }
            StmtKind::FieldGet { .. } => {
                (!sc_get(p, st, sid)).then_some((sid, EntryKind::UnsoundGet))
            }
            StmtKind::FieldSet { .. } => {
                (!sc_set(p, st, sid)).then_some((sid, EntryKind::UnsoundSet))
            }
            _ => None,
        })
        .collect()
}

/// Entry and member-introspecting sites behind the metaobjects at a side-effect call.
pub fn provenance(p: &Program, st: &PointsToState, sid: StmtId) -> BTreeSet<StmtId> {
    let meta_var = match p.stmt(sid).kind {
        StmtKind::Invoke { method_var, .. } => method_var,
        StmtKind::FieldGet { field_var, .. } | StmtKind::FieldSet { field_var, .. } => field_var,
        _ => return BTreeSet::new(),
    };
    meta_objs(st, meta_var)
        .flat_map(AbstractObj::origins)
        .collect()
}

fn sorted_sites(p: &Program, sids: impl IntoIterator<Item = StmtId>) -> Vec<String> {
    let mut sites: Vec<&SiteId> = sids.into_iter().map(|s| &p.stmt(s).site).collect();
    sites.sort();
    sites.into_iter().map(SiteId::to_string).collect()
}

/// Casts with many lazily created types, then side-effect calls with many
/// targets; each group by decreasing metric, ties by site.
pub fn rank_imprecise(p: &Program, st: &PointsToState, cfg: &EngineConfig) -> Vec<ImpreciseEntry> {
    let group = |kind: EntryKind, items: Vec<(StmtId, usize)>, threshold: usize| {
        let mut v: Vec<(usize, &SiteId)> = items
            .into_iter()
            .filter(|&(_, n)| n > threshold)
            .map(|(s, n)| (n, &p.stmt(s).site))
            .collect();
        v.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        v.into_iter().map(move |(metric, site)| ImpreciseEntry {
            site: site.to_string(),
            kind,
            metric,
        })
    };
    let casts = st.lhm_cast().iter().map(|(&s, ts)| (s, ts.len())).collect();
    let targets = st.targets().iter().map(|(&s, ts)| (s, ts.len())).collect();
    group(EntryKind::ImpreciseCast, casts, cfg.cast_threshold)
        .chain(group(
            EntryKind::ImpreciseTargets,
            targets,
            cfg.target_threshold,
        ))
        .collect()
}

pub fn build_report(p: &Program, st: &PointsToState, cfg: &EngineConfig) -> Report {
    let unsound: Vec<UnsoundEntry> = unsound_sites(p, st)
        .into_iter()
        .map(|(sid, kind)| {
            let provenance = sorted_sites(p, provenance(p, st, sid));
            UnsoundEntry {
                site: p.stmt(sid).site.to_string(),
                kind,
                untraced: provenance.is_empty(),
                provenance,
            }
        })
        .collect();
    let mut call_graph: Vec<CallEdge> = st
        .call_edges()
        .iter()
        .map(|&(s, m)| CallEdge {
            site: p.stmt(s).site.to_string(),
            target: p.method_descriptor(m),
        })
        .collect();
    call_graph.sort_by(|a, b| (&a.site, &a.target).cmp(&(&b.site, &b.target)));
    let stats = Stats {
        reachable_methods: st.reachable().len(),
        call_edges: st.call_edges().len(),
        reflective_edges: st.reflective_edges(p).len(),
        objects: st.objects().len(),
        facts: st.fact_count(),
        iterations: st.iterations(),
        diagnostics: st
            .diagnostics()
            .iter()
            .map(|d| format!("{}: {}", p.stmt(d.site).site, d.message))
            .collect(),
        rule_hits: st
            .rule_hits()
            .iter()
            .map(|(r, &n)| (r.name().to_string(), n))
            .collect(),
    };
    Report {
        verdict: if unsound.is_empty() {
            Verdict::Sound
        } else {
            Verdict::Unsound
        },
        unsound,
        imprecise: rank_imprecise(p, st, cfg),
        call_graph,
        stats,
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// The two-list text layout.
impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verdict: {:?}", self.verdict)?;
        writeln!(f, "unsound ({}):", self.unsound.len())?;
        for e in &self.unsound {
            let from = if e.untraced {
                "untraced".to_string()
            } else {
                e.provenance.join(", ")
            };
            writeln!(f, "  {} {:?} <- {}", e.site, e.kind, from)?;
        }
        writeln!(f, "imprecise ({}):", self.imprecise.len())?;
        for e in &self.imprecise {
            writeln!(f, "  {} {:?} {}", e.site, e.kind, e.metric)?;
        }
        write!(
            f,
            "{} call edges ({} reflective), {} reachable methods",
            self.stats.call_edges, self.stats.reflective_edges, self.stats.reachable_methods
        )
    }
}
