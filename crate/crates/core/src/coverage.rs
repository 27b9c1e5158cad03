//! Coverage points, per-run recording, and cumulative coverage sets.
//!
//! Point ids live in a 2^16 space split into three regions by the two high
//! bits. Each instrumented site owns two consecutive ids, one per branch arm,
//! so `id = region_base + 2 * site + arm`.

use serde::{Deserialize, Serialize};
use std::fmt;

pub const ID_SPACE: u32 = 1 << 16;
const REGION_SPAN: u32 = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Syntax,
    Semantic,
    Other,
}

impl Region {
    const fn base(self) -> u32 {
        match self {
            Region::Syntax => 0,
            Region::Semantic => REGION_SPAN,
            Region::Other => 2 * REGION_SPAN,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Syntax => "syntax",
            Region::Semantic => "semantic",
            Region::Other => "other",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One branch arm of an instrumented site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoveragePoint(u32);

impl CoveragePoint {
    pub const fn new(region: Region, site: u16, arm: bool) -> Self {
        assert!((site as u32) < REGION_SPAN / 2);
        CoveragePoint(region.base() + 2 * site as u32 + arm as u32)
    }

    pub fn from_id(id: u32) -> Option<Self> {
        (id < 3 * REGION_SPAN).then_some(CoveragePoint(id))
    }

    pub fn id(self) -> u32 {
        self.0
    }

    pub fn region(self) -> Region {
        match self.0 / REGION_SPAN {
            0 => Region::Syntax,
            1 => Region::Semantic,
            _ => Region::Other,
        }
    }

    pub fn site(self) -> u16 {
        ((self.0 % REGION_SPAN) / 2) as u16
    }

    pub fn arm(self) -> bool {
        self.0 & 1 == 1
    }
}

impl fmt::Display for CoveragePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.region(), self.site())
    }
}

/// Declared instrumentation of a target: how many sites each region owns.
///
/// Totals count both arms of every site, including arms that can never be
/// taken, so coverage ratios use a conservative denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageLayout {
    pub syntax_sites: u16,
    pub semantic_sites: u16,
}

impl CoverageLayout {
    pub fn total(&self, region: Region) -> usize {
        match region {
            Region::Syntax => 2 * self.syntax_sites as usize,
            Region::Semantic => 2 * self.semantic_sites as usize,
            Region::Other => 0,
        }
    }

    pub fn contains(&self, point: CoveragePoint) -> bool {
        let sites = match point.region() {
            Region::Syntax => self.syntax_sites,
            Region::Semantic => self.semantic_sites,
            Region::Other => 0,
        };
        point.site() < sites
    }
}

/// A set of coverage point ids, kept sorted and deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoverageSet {
    ids: Vec<u32>,
}

impl CoverageSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids<I: IntoIterator<Item = u32>>(ids: I) -> Self {
        let mut ids: Vec<u32> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        Self { ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn iter(&self) -> impl Iterator<Item = CoveragePoint> + '_ {
        self.ids.iter().map(|&id| CoveragePoint(id))
    }

    pub fn contains(&self, point: CoveragePoint) -> bool {
        self.ids.binary_search(&point.0).is_ok()
    }

    pub fn insert(&mut self, point: CoveragePoint) -> bool {
        match self.ids.binary_search(&point.0) {
            Ok(_) => false,
            Err(at) => {
                self.ids.insert(at, point.0);
                true
            }
        }
    }

    pub fn is_subset(&self, other: &CoverageSet) -> bool {
        self.first_missing_from(other).is_none()
    }

    fn first_missing_from(&self, other: &CoverageSet) -> Option<u32> {
        let mut theirs = other.ids.iter().peekable();
        for &id in &self.ids {
            loop {
                match theirs.peek() {
                    Some(&&t) if t < id => {
                        theirs.next();
                    }
                    Some(&&t) if t == id => break,
                    _ => return Some(id),
                }
            }
        }
        None
    }

    /// Ids in `self` that are absent from `other`, in ascending order.
    pub fn difference(&self, other: &CoverageSet) -> Vec<u32> {
        self.ids
            .iter()
            .copied()
            .filter(|id| other.ids.binary_search(id).is_err())
            .collect()
    }

    /// Adds every id of `other`; returns the ids that were new.
    pub fn union_with(&mut self, other: &CoverageSet) -> Vec<u32> {
        let added = other.difference(self);
        if !added.is_empty() {
            self.ids.extend_from_slice(&added);
            self.ids.sort_unstable();
        }
        added
    }

    pub fn count_region(&self, region: Region) -> usize {
        self.iter().filter(|p| p.region() == region).count()
    }

    pub fn filter_region(&self, region: Region) -> CoverageSet {
        CoverageSet {
            ids: self
                .ids
                .iter()
                .copied()
                .filter(|&id| CoveragePoint(id).region() == region)
                .collect(),
        }
    }
}

/// True iff `run` covers a point absent from `cumulative`.
pub fn new_coverage(run: &CoverageSet, cumulative: &CoverageSet) -> bool {
    !run.is_subset(cumulative)
}

/// Covered semantic points and their ratio to the declared semantic total.
pub fn semantic_branch_count(cumulative: &CoverageSet, layout: &CoverageLayout) -> (usize, f64) {
    let covered = cumulative.count_region(Region::Semantic);
    let total = layout.total(Region::Semantic);
    let ratio = if total == 0 {
        0.0
    } else {
        covered as f64 / total as f64
    };
    (covered, ratio)
}

/// Collects the points hit during one target execution.
pub struct CoverageRecorder {
    seen: Box<[u64]>,
    hits: Vec<u32>,
    last: Option<CoveragePoint>,
    active: bool,
}

impl Default for CoverageRecorder {
    fn default() -> Self {
        Self::new()
    }
}

impl CoverageRecorder {
    pub fn new() -> Self {
        Self {
            seen: vec![0u64; (ID_SPACE / 64) as usize].into_boxed_slice(),
            hits: Vec::with_capacity(256),
            last: None,
            active: false,
        }
    }

    /// Clear the current-run set and start recording.
    pub fn begin(&mut self) {
        self.reset();
        self.active = true;
    }

    fn reset(&mut self) {
        for &id in &self.hits {
            self.seen[(id / 64) as usize] &= !(1u64 << (id % 64));
        }
        self.hits.clear();
        self.last = None;
    }

    /// Stop recording and hand back this run's set.
    pub fn finish(&mut self) -> CoverageSet {
        self.active = false;
        let set = CoverageSet::from_ids(self.hits.iter().copied());
        self.reset();
        set
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    /// The most recently recorded point of this run.
    pub fn last_point(&self) -> Option<CoveragePoint> {
        self.last
    }

    #[inline]
    pub fn record(&mut self, point: CoveragePoint) {
        if !self.active {
            return;
        }
        self.last = Some(point);
        let (word, bit) = ((point.0 / 64) as usize, point.0 % 64);
        if self.seen[word] & (1 << bit) == 0 {
            self.seen[word] |= 1 << bit;
            self.hits.push(point.0);
        }
    }

    /// Record the arm of `site` selected by `cond` and pass `cond` through.
    #[inline]
    pub fn branch(&mut self, region: Region, site: u16, cond: bool) -> bool {
        self.record(CoveragePoint::new(region, site, cond));
        cond
    }

    #[inline]
    pub fn syn(&mut self, site: u16, cond: bool) -> bool {
        self.branch(Region::Syntax, site, cond)
    }

    #[inline]
    pub fn sem(&mut self, site: u16, cond: bool) -> bool {
        self.branch(Region::Semantic, site, cond)
    }

    /// Single-arm probe for a syntax site (match arms, loop bodies).
    #[inline]
    pub fn syn_hit(&mut self, site: u16) {
        self.branch(Region::Syntax, site, true);
    }

    #[inline]
    pub fn sem_hit(&mut self, site: u16) {
        self.branch(Region::Semantic, site, true);
    }

    /// One semantic site per threshold: site `first + i` records whether
    /// `value >= thresholds[i]`. Returns the first site after the range.
    pub fn sem_levels(&mut self, first: u16, value: usize, thresholds: &[usize]) -> u16 {
        for (i, &t) in thresholds.iter().enumerate() {
            self.sem(first + i as u16, value >= t);
        }
        first + thresholds.len() as u16
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn record_is_idempotent() {
        let mut rec = CoverageRecorder::new();
        rec.begin();
        let p = CoveragePoint::new(Region::Semantic, 3, true);
        rec.record(p);
        rec.record(p);
        let set = rec.finish();
        assert_eq!(set.len(), 1);
        assert!(set.contains(p));
    }

    #[test]
    fn run_set_is_exactly_the_touched_points() {
        let mut rec = CoverageRecorder::new();
        rec.begin();
        for id in [1, 5, 9] {
            rec.record(CoveragePoint::from_id(id).unwrap());
        }
        assert_eq!(rec.finish().ids(), &[1, 5, 9]);
    }

    #[test]
    fn consecutive_runs_do_not_bleed() {
        let mut rec = CoverageRecorder::new();
        rec.begin();
        rec.record(CoveragePoint::from_id(1).unwrap());
        let a = rec.finish();
        rec.begin();
        rec.record(CoveragePoint::from_id(2).unwrap());
        let b = rec.finish();
        rec.begin();
        rec.record(CoveragePoint::from_id(1).unwrap());
        let c = rec.finish();
        assert_eq!(a.ids(), &[1]);
        assert_eq!(b.ids(), &[2]);
        assert_eq!(a, c);
    }

    #[test]
    fn inactive_recorder_ignores_points() {
        let mut rec = CoverageRecorder::new();
        rec.record(CoveragePoint::from_id(4).unwrap());
        rec.begin();
        assert!(rec.finish().is_empty());
    }

    #[test]
    fn new_coverage_cases() {
        let empty = CoverageSet::new();
        assert!(new_coverage(&CoverageSet::from_ids([1, 2]), &empty));
        assert!(!new_coverage(
            &CoverageSet::from_ids([1]),
            &CoverageSet::from_ids([1, 2])
        ));
        assert!(!new_coverage(&empty, &empty));
    }

    #[test]
    fn region_layout() {
        let p = CoveragePoint::new(Region::Semantic, 7, false);
        assert_eq!(p.region(), Region::Semantic);
        assert_eq!(p.site(), 7);
        assert!(!p.arm());
        let q = CoveragePoint::new(Region::Syntax, 7, true);
        assert_eq!(q.region(), Region::Syntax);
        assert!(q.arm());
        assert_ne!(p, q);
        assert_eq!(p.to_string(), "semantic:7");
    }

    #[test]
    fn semantic_count_cases() {
        let layout = CoverageLayout {
            syntax_sites: 2,
            semantic_sites: 2,
        };
        assert_eq!(semantic_branch_count(&CoverageSet::new(), &layout), (0, 0.0));
        let all: Vec<u32> = (0..2u16)
            .flat_map(|s| {
                [false, true].map(|arm| CoveragePoint::new(Region::Semantic, s, arm).id())
            })
            .chain([CoveragePoint::new(Region::Syntax, 0, true).id()])
            .collect();
        let (n, ratio) = semantic_branch_count(&CoverageSet::from_ids(all), &layout);
        assert_eq!(n, 4);
        assert_eq!(ratio, 1.0);
    }

    #[test]
    fn semantic_count_matches_event_tally() {
        // a raw event log of (region, site, arm) probes across several runs
        let events = [
            (Region::Semantic, 1, true),
            (Region::Syntax, 1, true),
            (Region::Semantic, 1, true),
            (Region::Semantic, 4, false),
            (Region::Other, 0, true),
            (Region::Semantic, 4, true),
        ];
        let mut cumulative = CoverageSet::new();
        let mut rec = CoverageRecorder::new();
        for chunk in events.chunks(2) {
            rec.begin();
            for &(r, s, a) in chunk {
                rec.branch(r, s, a);
            }
            cumulative.union_with(&rec.finish());
        }
        let layout = CoverageLayout {
            syntax_sites: 2,
            semantic_sites: 5,
        };
        assert_eq!(semantic_branch_count(&cumulative, &layout), (3, 0.3));
    }

    proptest! {
        #[test]
        fn subset_agrees_with_naive(a in proptest::collection::vec(0u32..64, 0..20),
                                    b in proptest::collection::vec(0u32..64, 0..40)) {
            let run = CoverageSet::from_ids(a.clone());
            let cum = CoverageSet::from_ids(b.clone());
            let naive = a.iter().any(|x| !b.contains(x));
            prop_assert_eq!(new_coverage(&run, &cum), naive);
        }

        #[test]
        fn union_is_monotone_and_reports_additions(a in proptest::collection::vec(0u32..64, 0..20),
                                                   b in proptest::collection::vec(0u32..64, 0..20)) {
            let mut cum = CoverageSet::from_ids(b.clone());
            let before = cum.clone();
            let run = CoverageSet::from_ids(a.clone());
            let added = cum.union_with(&run);
            prop_assert!(before.is_subset(&cum));
            prop_assert!(run.is_subset(&cum));
            prop_assert_eq!(added.len(), cum.len() - before.len());
            prop_assert!(added.iter().all(|x| !b.contains(x)));
        }
    }
}
