#![allow(dead_code)]

pub mod fixtures;
pub mod gen;
pub mod suite;

use std::collections::BTreeSet;

use refpta::annotations::ResolvedAnnotations;
use refpta::ir::{parse_program, Program, SiteId, StmtId, VarId};
use refpta::pta::{solve, PointsToState, Target};
use refpta::reflection::EngineConfig;

pub fn analyze(src: &str, cfg: &EngineConfig) -> (Program, PointsToState) {
    let p = parse_program(src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    let st = solve(&p, cfg, &ResolvedAnnotations::default()).expect("solver budget");
    (p, st)
}

pub fn main_var(p: &Program, name: &str) -> VarId {
    (0..p.vars.len() as u32)
        .map(VarId)
        .find(|&v| p.var(v).name == name && p.var(v).method == p.main)
        .unwrap_or_else(|| panic!("no variable `{name}` in main"))
}

pub fn site(p: &Program, s: &str) -> StmtId {
    p.stmt_by_site(&SiteId::parse(s).expect("site syntax"))
        .unwrap_or_else(|| panic!("no site {s}"))
}

pub fn class_names(
    p: &Program,
    it: impl IntoIterator<Item = refpta::ir::ClassId>,
) -> BTreeSet<String> {
    it.into_iter()
        .map(|c| p.class_name(c).to_string())
        .collect()
}

pub fn rendered(p: &Program, st: &PointsToState, v: &str) -> BTreeSet<String> {
    st.var_objs(main_var(p, v)).map(|o| o.render(p)).collect()
}

/// Method targets at a site, as descriptors.
pub fn method_targets(p: &Program, st: &PointsToState, sid: StmtId) -> BTreeSet<String> {
    st.targets_at(sid)
        .into_iter()
        .filter_map(|t| match t {
            Target::Method(m) => Some(p.method_descriptor(m)),
            Target::Field(_) => None,
        })
        .collect()
}

pub fn edges_at(p: &Program, st: &PointsToState, sid: StmtId) -> BTreeSet<String> {
    st.call_edges()
        .iter()
        .filter(|(s, _)| *s == sid)
        .map(|&(_, m)| p.method_descriptor(m))
        .collect()
}

pub fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}
