//! Alternatives, antisymmetric comparison matrices and the edits between them.
//!
//! Each compared pair is stored once, keyed by `(lo, hi)` with `lo < hi`, and
//! the value is `r_{lo,hi}`. Reading the pair the other way round returns the
//! negation, so antisymmetry holds by construction.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rootlaw::RootLaw;

/// Ordered, duplicate-free alternative identifiers with a dense index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlternativeSet {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl AlternativeSet {
    pub fn new<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = Self {
            ids: Vec::new(),
            index: HashMap::new(),
        };
        for id in ids {
            let id = id.into();
            if set.index.contains_key(&id) {
                return Err(Error::DuplicateAlternative(id));
            }
            set.index.insert(id.clone(), set.ids.len());
            set.ids.push(id);
        }
        if set.ids.is_empty() {
            return Err(Error::InvalidArgument("an alternative set needs at least one id".into()));
        }
        Ok(set)
    }

    /// Alternatives named `"0"`, `"1"`, ..., `"n-1"`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownAlternative(id.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditKind {
    Add,
    Remove,
    Change,
}

impl std::fmt::Display for EditKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EditKind::Add => "add",
            EditKind::Remove => "remove",
            EditKind::Change => "change",
        })
    }
}

/// An elementary modification of a comparison matrix. `value` is oriented
/// as `r_ab` for the pair `(a, b)` as given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonEdit {
    pub kind: EditKind,
    pub a: usize,
    pub b: usize,
    pub value: Option<f64>,
}

impl ComparisonEdit {
    pub fn add(a: usize, b: usize, value: f64) -> Self {
        Self { kind: EditKind::Add, a, b, value: Some(value) }
    }

    pub fn remove(a: usize, b: usize) -> Self {
        Self { kind: EditKind::Remove, a, b, value: None }
    }

    pub fn change(a: usize, b: usize, value: f64) -> Self {
        Self { kind: EditKind::Change, a, b, value: Some(value) }
    }

    /// The edit that undoes `self` when applied to the result of applying it to `before`.
    pub fn inverse(&self, before: &ComparisonMatrix) -> Result<Self> {
        let old = before.get(self.a, self.b);
        match (self.kind, old) {
            (EditKind::Add, None) => Ok(Self::remove(self.a, self.b)),
            (EditKind::Remove, Some(v)) => Ok(Self::add(self.a, self.b, v)),
            (EditKind::Change, Some(v)) => Ok(Self::change(self.a, self.b, v)),
            _ => Err(Error::Edit(format!("{} does not apply to this matrix", self.kind))),
        }
    }
}

/// Classification of two matrices under the row-`a` partial order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartialOrder {
    Equal,
    /// `R <_a R′`: row `a` weakly larger in `R′`, strictly on at least one pair, all else equal.
    StrictlyLess,
    /// `R′ <_a R`.
    StrictlyGreater,
    Incomparable,
}

#[derive(Debug, Clone)]
pub struct ComparisonMatrix {
    alternatives: Arc<AlternativeSet>,
    entries: BTreeMap<(usize, usize), f64>,
}

impl PartialEq for ComparisonMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.same_alternatives(other) && self.entries == other.entries
    }
}

fn canonical(a: usize, b: usize, value: f64) -> ((usize, usize), f64) {
    if a < b {
        ((a, b), value)
    } else {
        ((b, a), -value)
    }
}

impl ComparisonMatrix {
    pub fn new(alternatives: Arc<AlternativeSet>) -> Self {
        Self {
            alternatives,
            entries: BTreeMap::new(),
        }
    }

    /// Builds a matrix from `(a, b, r_ab)` triples; each unordered pair at most once.
    pub fn from_triples<I>(alternatives: Arc<AlternativeSet>, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut m = Self::new(alternatives);
        for (a, b, r) in triples {
            m.insert(a, b, r)?;
        }
        Ok(m)
    }

    /// Records `r_ab = value`. Fails on self-pairs, unknown indices,
    /// non-finite values and pairs already present.
    pub fn insert(&mut self, a: usize, b: usize, value: f64) -> Result<()> {
        self.check_pair(a, b)?;
        if !value.is_finite() {
            return Err(Error::Comparison(format!("non-finite value {value}")));
        }
        let (key, v) = canonical(a, b, value);
        if self.entries.contains_key(&key) {
            return Err(Error::Comparison(format!(
                "pair ({}, {}) compared twice",
                self.alternatives.id(a),
                self.alternatives.id(b)
            )));
        }
        self.entries.insert(key, v);
        Ok(())
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        let n = self.alternatives.len();
        if a >= n || b >= n {
            return Err(Error::Dimension { expected: n, got: a.max(b) + 1 });
        }
        if a == b {
            return Err(Error::Comparison(format!(
                "self comparison of `{}`",
                self.alternatives.id(a)
            )));
        }
        Ok(())
    }

    pub fn alternatives(&self) -> &Arc<AlternativeSet> {
        &self.alternatives
    }

    pub fn num_alternatives(&self) -> usize {
        self.alternatives.len()
    }

    /// Number of compared unordered pairs, `C`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn same_alternatives(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.alternatives, &other.alternatives) || self.alternatives == other.alternatives
    }

    /// `r_ab`, correctly oriented, if the pair was compared.
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        if a == b {
            return None;
        }
        let (key, sign) = if a < b { ((a, b), 1.0) } else { ((b, a), -1.0) };
        self.entries.get(&key).map(|v| sign * v)
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.get(a, b).is_some()
    }

    /// Stored pairs `(lo, hi, r_{lo,hi})` in canonical order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(a, b), &r)| (a, b, r))
    }

    /// Compared partners of `a` with `r_ab` oriented from `a`.
    pub fn neighbors(&self, a: usize) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self
            .entries
            .iter()
            .filter_map(|(&(lo, hi), &r)| {
                if lo == a {
                    Some((hi, r))
                } else if hi == a {
                    Some((lo, -r))
                } else {
                    None
                }
            })
            .collect();
        out.sort_by_key(|&(b, _)| b);
        out
    }

    /// Like [`neighbors`](Self::neighbors) but addressed by identifier.
    pub fn neighbors_of(&self, id: &str) -> Result<Vec<(String, f64)>> {
        let a = self.alternatives.index_of(id)?;
        Ok(self
            .neighbors(a)
            .into_iter()
            .map(|(b, r)| (self.alternatives.id(b).to_string(), r))
            .collect())
    }

    /// `A_a` for every alternative.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_alternatives()];
        for &(a, b) in self.entries.keys() {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Row sums `r̄_a = Σ_{b ∈ A_a} r_ab`.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.num_alternatives()];
        for (&(a, b), &r) in &self.entries {
            sums[a] += r;
            sums[b] -= r;
        }
        sums
    }

    /// Whether every unordered pair of distinct alternatives is compared.
    pub fn is_complete(&self) -> bool {
        let n = self.num_alternatives();
        self.len() == n * (n - 1) / 2
    }

    /// Connected components of the comparison graph, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.num_alternatives();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in self.entries.keys() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..n {
            let root = find(&mut parent, x);
            groups.entry(root).or_default().push(x);
        }
        groups.into_values().collect()
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// The sub-matrix on `members` (given in the desired new index order).
    pub fn restrict(&self, members: &[usize]) -> Result<Self> {
        let ids: Vec<String> = members.iter().map(|&i| self.alternatives.id(i).to_string()).collect();
        let alts = Arc::new(AlternativeSet::new(ids)?);
        let mut position = vec![usize::MAX; self.num_alternatives()];
        for (new, &old) in members.iter().enumerate() {
            position[old] = new;
        }
        let triples = self.pairs().filter_map(|(a, b, r)| {
            let (na, nb) = (position[a], position[b]);
            (na != usize::MAX && nb != usize::MAX).then_some((na, nb, r))
        });
        Self::from_triples(alts, triples)
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            alternatives: Arc::clone(&self.alternatives),
            entries: self.entries.iter().map(|(&k, &v)| (k, v * factor)).collect(),
        }
    }

    /// Checks every entry against `law`: exact support when `strict`,
    /// otherwise the closed hull `[-r_max, r_max]`.
    pub fn validate(&self, law: &RootLaw, strict: bool) -> Result<()> {
        for (a, b, r) in self.pairs() {
            let ok = if strict { law.on_support(r) } else { law.in_hull(r) };
            if !ok {
                return Err(Error::OutOfSupport {
                    a: self.alternatives.id(a).to_string(),
                    b: self.alternatives.id(b).to_string(),
                    value: r,
                    law: law.to_string(),
                });
            }
        }
        Ok(())
    }

    /// `Δ(R, R′) = |C Δ C′| + #{pairs in C ∩ C′ whose values differ}`.
    pub fn edit_distance(&self, other: &Self) -> Result<usize> {
        if !self.same_alternatives(other) {
            return Err(Error::MismatchedAlternatives);
        }
        let mut distance = 0;
        for (key, v) in &self.entries {
            match other.entries.get(key) {
                Some(w) if w == v => {}
                _ => distance += 1,
            }
        }
        distance += other
            .entries
            .keys()
            .filter(|k| !self.entries.contains_key(k))
            .count();
        Ok(distance)
    }

    pub fn apply_edit(&self, edit: &ComparisonEdit) -> Result<Self> {
        self.check_pair(edit.a, edit.b)?;
        let existing = self.get(edit.a, edit.b);
        let mut next = self.clone();
        match edit.kind {
            EditKind::Add => {
                if existing.is_some() {
                    return Err(Error::Edit("add requires the pair to be absent".into()));
                }
                let v = edit.value.ok_or_else(|| Error::Edit("add needs a value".into()))?;
                next.insert(edit.a, edit.b, v)?;
            }
            EditKind::Remove => {
                if existing.is_none() {
                    return Err(Error::Edit("remove requires the pair to be present".into()));
                }
                next.entries.remove(&(edit.a.min(edit.b), edit.a.max(edit.b)));
            }
            EditKind::Change => {
                let old = existing.ok_or_else(|| Error::Edit("change requires the pair to be present".into()))?;
                let v = edit.value.ok_or_else(|| Error::Edit("change needs a value".into()))?;
                if !v.is_finite() {
                    return Err(Error::Edit(format!("non-finite value {v}")));
                }
                if v == old {
                    return Err(Error::Edit("change must modify the value".into()));
                }
                let (key, stored) = canonical(edit.a, edit.b, v);
                next.entries.insert(key, stored);
            }
        }
        Ok(next)
    }

    /// Compares `self` (R) with `other` (R′) under the row-`a` order.
    /// Both matrices must share the same comparison set.
    pub fn leq_at(&self, other: &Self, a: usize) -> Result<PartialOrder> {
        if !self.same_alternatives(other) {
            return Err(Error::MismatchedAlternatives);
        }
        if a >= self.num_alternatives() {
            return Err(Error::Dimension { expected: self.num_alternatives(), got: a + 1 });
        }
        if self.entries.len() != other.entries.len()
            || self.entries.keys().any(|k| !other.entries.contains_key(k))
        {
            return Err(Error::Incomparable);
        }
        let (mut up, mut down) = (false, false);
        for (&(lo, hi), &v) in &self.entries {
            let w = other.entries[&(lo, hi)];
            if v == w {
                continue;
            }
            if lo != a && hi != a {
                return Ok(PartialOrder::Incomparable);
            }
            // orient from a
            let (r, r_prime) = if lo == a { (v, w) } else { (-v, -w) };
            if r_prime > r {
                up = true;
            } else {
                down = true;
            }
        }
        Ok(match (up, down) {
            (false, false) => PartialOrder::Equal,
            (true, false) => PartialOrder::StrictlyLess,
            (false, true) => PartialOrder::StrictlyGreater,
            (true, true) => PartialOrder::Incomparable,
        })
    }

    /// Reads `a,b,r` rows. Alternatives are indexed in order of first
    /// appearance. Row numbers in errors are CSV line numbers. When `law`
    /// is given, values must lie on its support.
    pub fn read_csv<R: Read>(reader: R, law: Option<&RootLaw>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 3 || &headers[0] != "a" || &headers[1] != "b" || &headers[2] != "r" {
            return Err(Error::Csv { row: 1, message: "expected header `a,b,r`".into() });
        }
        let mut ids: Vec<String> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
        let mut pair_rows: HashMap<(usize, usize), usize> = HashMap::new();
        let mut intern = |id: &str, ids: &mut Vec<String>| -> usize {
            *seen.entry(id.to_string()).or_insert_with(|| {
                ids.push(id.to_string());
                ids.len() - 1
            })
        };
        for record in rdr.records() {
            let record = record?;
            let row = record.position().map(|p| p.line() as usize).unwrap_or_default();
            if record.len() != 3 {
                return Err(Error::Csv { row, message: format!("expected 3 fields, got {}", record.len()) });
            }
            let (a_id, b_id) = (&record[0], &record[1]);
            if a_id.is_empty() || b_id.is_empty() {
                return Err(Error::Csv { row, message: "empty alternative id".into() });
            }
            if a_id == b_id {
                return Err(Error::Csv { row, message: format!("self comparison of `{a_id}`") });
            }
            let r: f64 = record[2]
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Csv { row, message: format!("`{}` is not a finite number", &record[2]) })?;
            let a = intern(a_id, &mut ids);
            let b = intern(b_id, &mut ids);
            let key = (a.min(b), a.max(b));
            if let Some(first) = pair_rows.insert(key, row) {
                return Err(Error::Csv {
                    row,
                    message: format!("pair ({a_id}, {b_id}) already compared on row {first}"),
                });
            }
            rows.push((row, a, b, r));
        }
        if ids.is_empty() {
            return Err(Error::Csv { row: 1, message: "no comparisons".into() });
        }
        let alternatives = Arc::new(AlternativeSet::new(ids)?);
        let mut matrix = Self::new(alternatives);
        for (row, a, b, r) in rows {
            if let Some(law) = law {
                if !law.on_support(r) {
                    return Err(Error::OutOfSupport {
                        a: matrix.alternatives.id(a).to_string(),
                        b: matrix.alternatives.id(b).to_string(),
                        value: r,
                        law: format!("{law} (row {row})"),
                    });
                }
            }
            matrix.insert(a, b, r)?;
        }
        Ok(matrix)
    }

    /// Writes `a,b,r` rows in canonical orientation, sorted by index pair.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["a", "b", "r"])?;
        for (a, b, r) in self.pairs() {
            wtr.write_record([self.alternatives.id(a), self.alternatives.id(b), &r.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}
