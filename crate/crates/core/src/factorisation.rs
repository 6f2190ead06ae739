//! Directed Hammersley-Clifford factorisation.
//!
//! A hereditary density is Markov for a reflexive relation `~` iff
//!
//! ```text
//! f(y) = f(()) prod_i prod_{z ⊆ y_{<i}} phi(y_i, z)
//! ```
//!
//! with `phi(u, z) = 1` unless every member of `z` is a directed neighbour of
//! `u`. The interaction functions follow from `f` recursively:
//!
//! ```text
//! phi(u, {z_1..z_n}) = f(z_1, .., z_n, u) / (f(z_1, .., z_n) prod_{w ⊊ z} phi(u, w))
//! ```
//!
//! with `0/0 = 0`. Everything is kept in log space.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{log_ratio, Model};
use crate::models::Ssi;
use crate::oracle::DiscreteStateSpace;
use crate::point::{MarkedPoint, PointKey, PointSequence};
use crate::relation::{directed_neighbours, NeighbourRelation, SharedRelation};
use crate::samplers::trace::{format_float, format_mark};
use crate::window::{MarkDistribution, Window};

pub const DEFAULT_CLIQUE_CAP: usize = 12;

/// Whether every member of `z` is a directed neighbour of `u`; true for `z = ∅`.
pub fn is_clique(relation: &dyn NeighbourRelation, u: &MarkedPoint, z: &[MarkedPoint]) -> bool {
    z.iter().all(|v| relation.related(u, v))
}

/// Order-free key of `(head, set)`; the set is sorted lexicographically by
/// `(x, y, mark)` and may contain repeats.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetKey {
    head: PointKey,
    set: Vec<PointKey>,
}

fn sorted(z: &[MarkedPoint]) -> Vec<MarkedPoint> {
    let mut v = z.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

impl SetKey {
    pub fn new(head: &MarkedPoint, z: &[MarkedPoint]) -> Self {
        SetKey {
            head: head.key(),
            set: sorted(z).iter().map(MarkedPoint::key).collect(),
        }
    }
}

fn describe_set(z: &[MarkedPoint]) -> String {
    let mut s = String::new();
    for (k, p) in sorted(z).iter().enumerate() {
        if k > 0 {
            s.push(';');
        }
        let _ = write!(
            s,
            "{} {} {}",
            format_float(p.x),
            format_float(p.y),
            format_mark(&p.mark)
        );
        if s.ends_with(' ') {
            s.pop();
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct TableEntry {
    pub head: MarkedPoint,
    /// Set members in canonical order.
    pub set: Vec<MarkedPoint>,
    pub log_phi: f64,
}

/// `log phi(u, z)` for clique keys. Non-clique keys are implicitly 0 (`phi = 1`).
#[derive(Debug, Clone, Default)]
pub struct InteractionTable {
    entries: BTreeMap<SetKey, TableEntry>,
}

impl InteractionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, head: &MarkedPoint, z: &[MarkedPoint], log_phi: f64) {
        self.entries.insert(
            SetKey::new(head, z),
            TableEntry {
                head: *head,
                set: sorted(z),
                log_phi,
            },
        );
    }

    pub fn get(&self, head: &MarkedPoint, z: &[MarkedPoint]) -> Option<f64> {
        self.entries.get(&SetKey::new(head, z)).map(|e| e.log_phi)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TableEntry> {
        self.entries.values()
    }

    /// Columns `head_x, head_y, head_mark, set_key, log_phi`; set members are
    /// `x y [mark]` joined by `;`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "head_x,head_y,head_mark,set_key,log_phi")?;
        for e in self.entries.values() {
            writeln!(
                out,
                "{},{},{},{},{}",
                format_float(e.head.x),
                format_float(e.head.y),
                format_mark(&e.head.mark),
                describe_set(&e.set),
                format_float(e.log_phi)
            )?;
        }
        Ok(())
    }
}

fn subset(z: &[MarkedPoint], mask: u32) -> Vec<MarkedPoint> {
    z.iter()
        .enumerate()
        .filter(|(k, _)| mask & (1 << k) != 0)
        .map(|(_, p)| *p)
        .collect()
}

/// Memoised evaluation of the interaction recursion for one model and relation.
///
/// The memo is filled through `&mut self`; once warm, the table can be shared
/// read-only (see [`Factoriser::into_table`]).
pub struct Factoriser<'a> {
    model: &'a dyn Model,
    relation: SharedRelation,
    cap: usize,
    check_order: bool,
    table: InteractionTable,
    log_f_empty: f64,
}

impl<'a> Factoriser<'a> {
    pub fn new(model: &'a dyn Model) -> Result<Self> {
        Self::with_relation(model, model.relation())
    }

    pub fn with_relation(model: &'a dyn Model, relation: SharedRelation) -> Result<Self> {
        let log_f_empty = model.log_density(&PointSequence::empty())?;
        Ok(Factoriser {
            model,
            relation,
            cap: DEFAULT_CLIQUE_CAP,
            check_order: false,
            table: InteractionTable::new(),
            log_f_empty,
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap.min(31);
        self
    }

    /// Recompute memoised values under every new ordering and fail if they differ.
    pub fn checking_order(mut self, on: bool) -> Self {
        self.check_order = on;
        self
    }

    pub fn log_f_empty(&self) -> f64 {
        self.log_f_empty
    }

    pub fn relation(&self) -> &SharedRelation {
        &self.relation
    }

    pub fn table(&self) -> &InteractionTable {
        &self.table
    }

    pub fn into_table(self) -> InteractionTable {
        self.table
    }

    /// `log phi(u, z_seq)`.
    pub fn interaction(&mut self, u: &MarkedPoint, z_seq: &[MarkedPoint]) -> Result<f64> {
        let n = z_seq.len();
        if n > self.cap {
            return Err(Error::Capacity {
                what: "interaction set size",
                required: n as u128,
                limit: self.cap as u128,
            });
        }
        if !is_clique(self.relation.as_ref(), u, z_seq) {
            return Ok(0.0);
        }
        if let Some(v) = self.table.get(u, z_seq) {
            if self.check_order && n > 1 {
                let again = self.evaluate(u, z_seq)?;
                let same = (again == v) || (again - v).abs() <= 1e-9 * v.abs().max(1.0);
                if !same {
                    return Err(Error::contract(format!(
                        "interaction for head {u} depends on the order of its set: {v} vs {again}"
                    )));
                }
            }
            return Ok(v);
        }
        let v = self.evaluate(u, z_seq)?;
        self.table.insert(u, z_seq, v);
        Ok(v)
    }

    fn evaluate(&mut self, u: &MarkedPoint, z_seq: &[MarkedPoint]) -> Result<f64> {
        let n = z_seq.len();
        let base: PointSequence = z_seq.to_vec().into();
        let log_den = if n == 0 {
            self.log_f_empty
        } else {
            self.model.log_density(&base)?
        };
        let mut grown = base.clone();
        grown.push(*u);
        let log_num = self.model.log_density(&grown)?;
        let full = (1u32 << n) - 1;
        let mut lower = 0.0;
        let mut lower_zero = false;
        for mask in 0..full {
            let w = subset(z_seq, mask);
            let v = self.interaction(u, &w)?;
            if v == f64::NEG_INFINITY {
                lower_zero = true;
            } else {
                lower += v;
            }
        }
        if log_num == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        if log_den == f64::NEG_INFINITY {
            return Err(Error::contract(format!(
                "density is not hereditary: f({grown}) > 0 but f({base}) = 0"
            )));
        }
        if lower_zero {
            return Err(Error::contract(format!(
                "f({grown}) > 0 although a lower-order interaction of {u} vanishes"
            )));
        }
        Ok(log_num - log_den - lower)
    }

    /// Fills the table with every key needed to factorise `seq`. Stops at
    /// the first prefix with zero density.
    pub fn cover_sequence(&mut self, seq: &PointSequence) -> Result<()> {
        let pts = seq.points();
        for i in 0..pts.len() {
            let prefix = seq.prefix(i);
            if i > 0 && self.model.log_density(&prefix)? == f64::NEG_INFINITY {
                break;
            }
            let nbrs: Vec<MarkedPoint> = directed_neighbours(self.relation.as_ref(), &pts[i], &prefix)
                .into_iter()
                .map(|k| pts[k - 1])
                .collect();
            self.interaction(&pts[i], &nbrs)?;
        }
        Ok(())
    }

    /// `log f(seq)` rebuilt from the (filled) table.
    pub fn factorised(&self, seq: &PointSequence) -> Result<f64> {
        factorised_log_density(&self.table, self.log_f_empty, seq, self.relation.as_ref(), self.cap)
    }
}

/// `log phi(u, z_seq)` for a single query.
pub fn interaction_recursion(model: &dyn Model, u: &MarkedPoint, z_seq: &PointSequence) -> Result<f64> {
    Factoriser::new(model)?.interaction(u, z_seq.points())
}

/// `log f(()) + sum_i sum_{z ⊆ ∂(y_i) ∩ y_{<i}} log phi(y_i, z)`. Only subsets
/// of the directed neighbours are visited, since all other keys are 1.
pub fn factorised_log_density(
    table: &InteractionTable,
    f_empty_log: f64,
    seq: &PointSequence,
    relation: &dyn NeighbourRelation,
    cap: usize,
) -> Result<f64> {
    let mut total = f_empty_log;
    if total == f64::NEG_INFINITY {
        return Ok(total);
    }
    let pts = seq.points();
    for i in 0..pts.len() {
        let nbrs: Vec<MarkedPoint> = directed_neighbours(relation, &pts[i], &seq.prefix(i))
            .into_iter()
            .map(|k| pts[k - 1])
            .collect();
        if nbrs.len() > cap.min(31) {
            return Err(Error::Capacity {
                what: "directed neighbourhood size",
                required: nbrs.len() as u128,
                limit: cap as u128,
            });
        }
        for mask in 0..(1u32 << nbrs.len()) {
            let z = subset(&nbrs, mask);
            let v = table
                .get(&pts[i], &z)
                .ok_or_else(|| Error::Lookup(format!("head {} with set {{{}}}", pts[i], describe_set(&z))))?;
            if v == f64::NEG_INFINITY {
                return Ok(v);
            }
            total += v;
        }
    }
    Ok(total)
}

/// Factorised form of `log f(s_i(y, u)) - log f(y)`:
/// `sum_{z ⊆ y_{<i}} log phi(u, z) + sum_{j >= i} sum_{z ⊆ y_{<j}} log phi(y_j, z ∪ {u})`.
pub fn factorised_log_insertion_ratio(
    table: &InteractionTable,
    seq: &PointSequence,
    position: usize,
    u: &MarkedPoint,
    relation: &dyn NeighbourRelation,
) -> Result<f64> {
    let pts = seq.points();
    let grown = seq.insert_at(position, *u)?;
    let lookup = |head: &MarkedPoint, z: &[MarkedPoint]| {
        table
            .get(head, z)
            .ok_or_else(|| Error::Lookup(format!("head {head} with set {{{}}}", describe_set(z))))
    };
    let mut total = 0.0;
    let mut add = |v: f64| {
        if v == f64::NEG_INFINITY || total == f64::NEG_INFINITY {
            total = f64::NEG_INFINITY;
        } else {
            total += v;
        }
    };
    let before = seq.prefix(position - 1);
    let nbrs: Vec<MarkedPoint> = directed_neighbours(relation, u, &before)
        .into_iter()
        .map(|k| pts[k - 1])
        .collect();
    for mask in 0..(1u32 << nbrs.len()) {
        add(lookup(u, &subset(&nbrs, mask))?);
    }
    for j in position..=pts.len() {
        // y_j now sits at position j + 1 of the grown sequence.
        let head = pts[j - 1];
        if !relation.related(&head, u) {
            continue;
        }
        let prior = grown.prefix(j);
        let others: Vec<MarkedPoint> = directed_neighbours(relation, &head, &prior)
            .into_iter()
            .filter(|&k| k != position)
            .map(|k| grown.points()[k - 1])
            .collect();
        for mask in 0..(1u32 << others.len()) {
            let mut z = subset(&others, mask);
            z.push(*u);
            add(lookup(&head, &z)?);
        }
    }
    Ok(total)
}

/// Builds the interaction table needed to factorise every state of `space`.
pub fn factorise_space(factoriser: &mut Factoriser<'_>, space: &DiscreteStateSpace) -> Result<()> {
    for i in 0..space.len() {
        factoriser.cover_sequence(&space.state(i))?;
    }
    Ok(())
}

/// Largest `|log f - log f_factorised|` over the space, counting matching
/// zeros as exact and mismatched zeros as infinite.
pub fn factorisation_max_error(model: &dyn Model, space: &DiscreteStateSpace, cap: usize) -> Result<f64> {
    let mut fz = Factoriser::new(model)?.with_cap(cap);
    factorise_space(&mut fz, space)?;
    let mut worst: f64 = 0.0;
    for i in 0..space.len() {
        let seq = space.state(i);
        let direct = model.log_density(&seq)?;
        let rebuilt = fz.factorised(&seq)?;
        worst = worst.max(log_abs_diff(direct, rebuilt));
    }
    Ok(worst)
}

fn log_abs_diff(a: f64, b: f64) -> f64 {
    match (a == f64::NEG_INFINITY, b == f64::NEG_INFINITY) {
        (true, true) => 0.0,
        (false, false) => (a - b).abs(),
        _ => f64::INFINITY,
    }
}

/// `sum_{mask ⊆ full} (-1)^{n - |mask|} g(mask)` over the `2^n` subsets of an
/// `n`-set; zero for constant `g` and `n >= 1`.
pub fn alternating_subset_sum(n: usize, mut g: impl FnMut(u32) -> f64) -> f64 {
    let mut total = 0.0;
    for mask in 0..(1u32 << n) {
        let sign = if (n as u32 - mask.count_ones()).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        total += sign * g(mask);
    }
    total
}

/// `log phi(x, y) = log 1{d(x, y) > r} + sum_{z ⊆ y} (-1)^{|y \ z|} log(r_{|z|+1} / I(z))`,
/// and `log(r_1 pi(x))` for `y = ∅`.
pub fn ssi_interaction_closed_form(model: &Ssi, x: &MarkedPoint, y: &[MarkedPoint]) -> Result<f64> {
    let r_coef = |n: usize| {
        model
            .r_coefficient(n)
            .ok_or_else(|| Error::Unsupported(format!("normalising ratio r_{n} is unknown in continuous mode")))
    };
    if y.is_empty() {
        let v = r_coef(1)? * model.location_density(x.x, x.y);
        return Ok(if v > 0.0 { v.ln() } else { f64::NEG_INFINITY });
    }
    let r = model.inhibition_distance();
    if y.iter().any(|p| p.distance_sq(x) <= r * r) || model.admissible_integral(y) <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let n = y.len();
    let mut logs = Vec::with_capacity(n + 1);
    for k in 1..=n + 1 {
        logs.push(r_coef(k)?);
    }
    if logs[n] == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if let Some(k) = logs.iter().position(|&v| v == 0.0) {
        return Err(Error::contract(format!(
            "r_{} vanishes below r_{}: the length weights are not hereditary",
            k + 1,
            n + 1
        )));
    }
    Ok(alternating_subset_sum(n, |mask| {
        let z = subset(y, mask);
        logs[z.len()].ln() - model.admissible_integral(&z).ln()
    }))
}

/// Outcome of [`verify_markov`].
#[derive(Debug, Clone)]
pub struct MarkovReport {
    pub hereditary: bool,
    pub hereditary_counterexample: Option<(PointSequence, PointSequence)>,
    pub locality: bool,
    /// Largest disagreement of `log f((y, u)) - log f(y)` within a group of
    /// sequences sharing the directed-neighbour multiset of `u`.
    pub locality_max_err: f64,
    pub locality_counterexample: Option<String>,
    pub comparisons: usize,
}

impl MarkovReport {
    pub fn passed(&self) -> bool {
        self.hereditary && self.locality
    }
}

pub const LOCALITY_TOLERANCE: f64 = 1e-10;

/// Checks hereditariness and that append ratios depend only on the directed
/// neighbours, under the model's own relation.
pub fn verify_markov(model: &dyn Model, space: &DiscreteStateSpace) -> Result<MarkovReport> {
    verify_markov_under(model, model.relation().as_ref(), space)
}

pub fn verify_markov_under(
    model: &dyn Model,
    relation: &dyn NeighbourRelation,
    space: &DiscreteStateSpace,
) -> Result<MarkovReport> {
    let log_f: Vec<f64> = (0..space.len())
        .map(|i| model.log_density(&space.state(i)))
        .collect::<Result<_>>()?;
    let mut report = MarkovReport {
        hereditary: true,
        hereditary_counterexample: None,
        locality: true,
        locality_max_err: 0.0,
        locality_counterexample: None,
        comparisons: 0,
    };
    let atoms = space.atoms();
    // (atom, neighbour multiset) -> (first log ratio, witness state)
    let mut groups: HashMap<(usize, Vec<usize>), (f64, usize)> = HashMap::new();
    for s in 0..space.len() {
        if log_f[s] == f64::NEG_INFINITY {
            continue;
        }
        let idx = space.atom_indices(s);
        for i in 0..idx.len() {
            let mut shrunk = idx.clone();
            shrunk.remove(i);
            let t = space.index_of_atoms(&shrunk).expect("shorter states are enumerated");
            if log_f[t] == f64::NEG_INFINITY && report.hereditary {
                report.hereditary = false;
                report.hereditary_counterexample = Some((space.state(s), space.state(t)));
            }
        }
        if idx.len() >= space.n_max() {
            continue;
        }
        for (a, u) in atoms.iter().enumerate() {
            let mut nbrs: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&b| relation.related(u, &atoms[b]))
                .collect();
            nbrs.sort_unstable();
            let mut grown = idx.clone();
            grown.push(a);
            let t = space.index_of_atoms(&grown).expect("within n_max");
            let lr = log_ratio(log_f[t], log_f[s]);
            match groups.get(&(a, nbrs.clone())) {
                None => {
                    groups.insert((a, nbrs), (lr, s));
                }
                Some(&(first, witness)) => {
                    report.comparisons += 1;
                    let err = log_abs_diff(first, lr);
                    if err > report.locality_max_err {
                        report.locality_max_err = err;
                    }
                    if err > LOCALITY_TOLERANCE && report.locality {
                        report.locality = false;
                        report.locality_counterexample = Some(format!(
                            "appending {u} to {} and {} gives log ratios {first} and {lr} with the same neighbours",
                            space.state(witness),
                            space.state(s)
                        ));
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Density defined by an interaction table through the factorised product.
#[derive(Debug, Clone)]
pub struct FactorisedModel {
    table: Arc<InteractionTable>,
    log_f_empty: f64,
    relation: SharedRelation,
    window: Window,
    marks: MarkDistribution,
    cap: usize,
}

impl FactorisedModel {
    pub fn new(
        table: InteractionTable,
        log_f_empty: f64,
        relation: SharedRelation,
        window: Window,
        marks: MarkDistribution,
    ) -> Self {
        FactorisedModel {
            table: Arc::new(table),
            log_f_empty,
            relation,
            window,
            marks,
            cap: DEFAULT_CLIQUE_CAP,
        }
    }

    pub fn table(&self) -> &InteractionTable {
        &self.table
    }
}

impl Model for FactorisedModel {
    fn name(&self) -> &str {
        "factorised"
    }

    fn window(&self) -> &Window {
        &self.window
    }

    fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    fn relation(&self) -> SharedRelation {
        self.relation.clone()
    }

    fn log_density(&self, seq: &PointSequence) -> Result<f64> {
        factorised_log_density(&self.table, self.log_f_empty, seq, self.relation.as_ref(), self.cap)
    }

    fn local_stability_bound(&self) -> Option<f64> {
        None
    }
}

/// Table with an entry `phi(head, z)` from `assign` for every clique key met
/// while factorising the states of `space`.
pub fn synthesize_table(
    space: &DiscreteStateSpace,
    relation: &dyn NeighbourRelation,
    mut assign: impl FnMut(&MarkedPoint, &[MarkedPoint]) -> f64,
) -> InteractionTable {
    let mut table = InteractionTable::new();
    // One more point than n_max is needed for append ratios of full-length states.
    for s in 0..space.len() {
        let seq = space.state(s);
        let pts = seq.points();
        for i in 0..pts.len() {
            let nbrs: Vec<MarkedPoint> = directed_neighbours(relation, &pts[i], &seq.prefix(i))
                .into_iter()
                .map(|k| pts[k - 1])
                .collect();
            for mask in 0..(1u32 << nbrs.len()) {
                let z = subset(&nbrs, mask);
                if table.get(&pts[i], &z).is_none() {
                    let v = assign(&pts[i], &z);
                    table.insert(&pts[i], &z, v);
                }
            }
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SoftCore;
    use crate::oracle::{build_state_space, DEFAULT_STATE_BUDGET};
    use crate::point::Mark;
    use crate::relation::{Identity, Trivial};

    fn softcore() -> SoftCore {
        SoftCore::new(
            2.0,
            0.5,
            MarkDistribution::Exponential { rate: 1.0 },
            Window::new(-5.0, -5.0, 5.0, 5.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn clique_examples() {
        let u = MarkedPoint::with_radius(0.0, 0.0, 1.0);
        let far = MarkedPoint::with_radius(3.0, 0.0, 1.0);
        let sc = softcore();
        assert!(is_clique(sc.relation().as_ref(), &u, &[]));
        assert!(is_clique(&Trivial, &u, &[far]));
        assert!(!is_clique(sc.relation().as_ref(), &u, &[far]));
    }

    #[test]
    fn softcore_interactions() {
        let sc = softcore();
        let y1 = MarkedPoint::with_radius(0.0, 0.0, 1.0);
        let y2 = MarkedPoint::with_radius(0.5, 0.0, 0.3);
        let y3 = MarkedPoint::with_radius(0.0, 0.6, 0.3);
        let empty = PointSequence::empty();
        assert!((interaction_recursion(&sc, &y1, &empty).unwrap() - 2f64.ln()).abs() < 1e-14);
        // y2 lies in y1's territory: gamma.
        let one: PointSequence = vec![y1].into();
        assert!((interaction_recursion(&sc, &y2, &one).unwrap() - 0.5f64.ln()).abs() < 1e-14);
        // y1 is outside y2's territory (0.5 > 0.3): not a clique, phi = 1.
        let two: PointSequence = vec![y2].into();
        assert_eq!(interaction_recursion(&sc, &y1, &two).unwrap(), 0.0);
        // Triples interact trivially.
        let u = MarkedPoint::with_radius(0.1, 0.1, 0.2);
        let pair: PointSequence = vec![y1, y3].into();
        assert!(interaction_recursion(&sc, &u, &pair).unwrap().abs() < 1e-14);
    }

    #[test]
    fn factorised_density_matches_softcore() {
        let sc = softcore();
        let seq: PointSequence = vec![
            MarkedPoint::with_radius(0.0, 0.0, 1.0),
            MarkedPoint::with_radius(0.5, 0.0, 0.3),
            MarkedPoint::with_radius(0.3, 0.2, 0.7),
        ]
        .into();
        let mut fz = Factoriser::new(&sc).unwrap();
        fz.cover_sequence(&seq).unwrap();
        assert!((fz.factorised(&seq).unwrap() - sc.log_density(&seq).unwrap()).abs() < 1e-10);
        let empty = PointSequence::empty();
        assert_eq!(fz.factorised(&empty).unwrap(), 0.0);
        let single = seq.prefix(1);
        assert!((fz.factorised(&single).unwrap() - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn missing_key_is_lookup_error() {
        let table = InteractionTable::new();
        let seq: PointSequence = vec![MarkedPoint::unmarked(0.0, 0.0)].into();
        assert!(matches!(
            factorised_log_density(&table, 0.0, &seq, &Trivial, DEFAULT_CLIQUE_CAP),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let sc = SoftCore::new(2.0, 0.5, MarkDistribution::Exponential { rate: 1.0 }, Window::unit()).unwrap();
        let z: PointSequence = (0..4)
            .map(|k| MarkedPoint::with_radius(0.5, 0.5 + 0.01 * k as f64, 1.0))
            .collect();
        let mut fz = Factoriser::new(&sc).unwrap().with_cap(3);
        let u = MarkedPoint::with_radius(0.5, 0.5, 1.0);
        assert!(matches!(fz.interaction(&u, z.points()), Err(Error::Capacity { .. })));
    }

    #[test]
    fn alternating_sum_of_constant_vanishes() {
        assert_eq!(alternating_subset_sum(0, |_| 3.0), 3.0);
        for n in 1..8 {
            assert_eq!(alternating_subset_sum(n, |_| 3.5), 0.0);
        }
        // Inclusion-exclusion recovers the top term of a cumulative sum.
        let vals = [0.3, 1.1, -0.4];
        let g = |mask: u32| (0..3).filter(|k| mask & (1 << k) != 0).map(|k| vals[k]).sum::<f64>();
        assert!(alternating_subset_sum(3, g).abs() < 1e-15);
    }

    #[test]
    fn softcore_is_markov_on_a_grid() {
        let space = build_state_space(
            Window::new(0.0, 0.0, 2.0, 1.0).unwrap(),
            2,
            2,
            vec![(Mark::Radius(0.6), 1.0)],
            3,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        let sc = SoftCore::new(
            2.0,
            0.5,
            MarkDistribution::Discrete {
                levels: vec![(0.6, 1.0)],
            },
            *space.window(),
        )
        .unwrap();
        let r = verify_markov(&sc, &space).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.comparisons > 0);
        // Under the identity relation, cross-cell inhibition is invisible.
        let r = verify_markov_under(&sc, &Identity, &space).unwrap();
        assert!(!r.locality);
    }

    #[test]
    fn table_csv_has_header_and_rows() {
        let sc = softcore();
        let seq: PointSequence = vec![
            MarkedPoint::with_radius(0.0, 0.0, 1.0),
            MarkedPoint::with_radius(0.5, 0.0, 0.3),
        ]
        .into();
        let mut fz = Factoriser::new(&sc).unwrap();
        fz.cover_sequence(&seq).unwrap();
        let mut buf = Vec::new();
        fz.table().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "head_x,head_y,head_mark,set_key,log_phi");
        assert_eq!(lines.len(), 1 + fz.table().len());
        assert!(lines.iter().any(|l| l.contains(";") || l.split(',').count() == 5));
    }
}
