//! The coupling partial order between cookie environments.
//!
//! Two environments are comparable when their cookie-window product laws
//! admit a joint distribution supported on prefix-sum-dominated pairs of
//! binary vectors. Deciding comparability is a transportation feasibility
//! problem: supplies are the outcome masses of the lower environment,
//! demands those of the upper one, and edges connect dominated pairs. A
//! feasible unit flow is exactly a coupling certificate.

use serde::Serialize;

use crate::env::CookieEnvironment;
use crate::error::Error;
use crate::Result;

/// Outcome-space budget: the transportation graph has `2^M` nodes per side.
pub const MAX_ORDER_WIDTH: usize = 12;

const FEASIBILITY_TOL: f64 = 1e-10;
const MARGINAL_TOL: f64 = 1e-10;
const MASS_SUM_TOL: f64 = 1e-12;

/// One support pair of a coupling: cookie-window outcomes for both
/// components (bit `j-1` holds trial `j`) and their joint mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingRow {
    pub first: u64,
    pub second: u64,
    pub mass: f64,
}

/// A joint law over pairs of length-`M` binary vectors whose support
/// satisfies prefix-sum dominance and whose marginals are the two product
/// Bernoulli laws.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    width: usize,
    rows: Vec<CouplingRow>,
}

/// Outcome of the order decision between two environments.
#[derive(Debug, Clone)]
pub enum OrderVerdict {
    /// No dominating coupling exists.
    Incomparable,
    /// The environments coincide entrywise; the certificate is diagonal.
    Equal { certificate: CouplingTable },
    /// Comparable with distinct environments but no strict prefix gap.
    /// Believed unreachable; kept so a counterexample fails loudly.
    WeakOnly { certificate: CouplingTable },
    /// Strictly comparable: `witness` is the least `m` with a strict
    /// cumulative-strength gap.
    Strict {
        witness: usize,
        certificate: CouplingTable,
    },
}

impl OrderVerdict {
    /// Certificate table, when the pair is comparable.
    pub fn certificate(&self) -> Option<&CouplingTable> {
        match self {
            OrderVerdict::Incomparable => None,
            OrderVerdict::Equal { certificate }
            | OrderVerdict::WeakOnly { certificate }
            | OrderVerdict::Strict { certificate, .. } => Some(certificate),
        }
    }

    pub fn is_comparable(&self) -> bool {
        self.certificate().is_some()
    }

    /// Short tag for reports.
    pub fn label(&self) -> &'static str {
        match self {
            OrderVerdict::Incomparable => "incomparable",
            OrderVerdict::Equal { .. } => "equal",
            OrderVerdict::WeakOnly { .. } => "weak-only",
            OrderVerdict::Strict { .. } => "strict",
        }
    }
}

/// Wire form of a verdict for JSON output.
#[derive(Debug, Serialize)]
pub struct VerdictSummary {
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict_gap: Option<f64>,
    pub support_rows: usize,
}

impl CouplingTable {
    /// Validating constructor: masses positive and summing to one, all
    /// support pairs prefix-dominated.
    pub fn from_rows(width: usize, mut rows: Vec<CouplingRow>) -> Result<Self> {
        if width > MAX_ORDER_WIDTH {
            return Err(Error::CouplingBudgetExceeded {
                len: width,
                max: MAX_ORDER_WIDTH,
            });
        }
        rows.retain(|r| r.mass != 0.0);
        let mut total = 0.0;
        for row in &rows {
            if !(row.mass > 0.0) {
                return Err(Error::InvalidCouplingTable(format!(
                    "nonpositive mass {} on ({}, {})",
                    row.mass,
                    mask_string(row.first, width),
                    mask_string(row.second, width)
                )));
            }
            if !prefix_dominated(row.first, row.second, width) {
                return Err(Error::InvalidCouplingTable(format!(
                    "support pair ({}, {}) violates prefix dominance",
                    mask_string(row.first, width),
                    mask_string(row.second, width)
                )));
            }
            total += row.mass;
        }
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::InvalidCouplingTable(format!(
                "masses sum to {total}, not 1"
            )));
        }
        rows.sort_by_key(|r| (lex_key(r.first, width), lex_key(r.second, width)));
        Ok(Self { width, rows })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> &[CouplingRow] {
        &self.rows
    }

    /// First-component marginal mass of `outcome`.
    pub fn first_marginal(&self, outcome: u64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.first == outcome)
            .map(|r| r.mass)
            .sum()
    }

    pub fn second_marginal(&self, outcome: u64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.second == outcome)
            .map(|r| r.mass)
            .sum()
    }

    /// Checks that this table couples the product laws of `(p, q)`:
    /// dominance support (already structural), marginals within 1e-10 per
    /// outcome, masses summing to 1.
    pub fn validate(&self, p: &CookieEnvironment, q: &CookieEnvironment) -> Result<()> {
        let p = p.padded_to(self.width);
        let q = q.padded_to(self.width);
        if p.len() != self.width || q.len() != self.width {
            return Err(Error::InvalidCouplingTable(format!(
                "table width {} does not match environment length {}",
                self.width,
                p.len().max(q.len())
            )));
        }
        for outcome in 0..(1u64 << self.width) {
            let want_p = product_mass(p.probs(), outcome);
            let got_p = self.first_marginal(outcome);
            if (want_p - got_p).abs() > MARGINAL_TOL {
                return Err(Error::InvalidCouplingTable(format!(
                    "first marginal at {} is {got_p}, expected {want_p}",
                    mask_string(outcome, self.width)
                )));
            }
            let want_q = product_mass(q.probs(), outcome);
            let got_q = self.second_marginal(outcome);
            if (want_q - got_q).abs() > MARGINAL_TOL {
                return Err(Error::InvalidCouplingTable(format!(
                    "second marginal at {} is {got_q}, expected {want_q}",
                    mask_string(outcome, self.width)
                )));
            }
        }
        Ok(())
    }

    /// CSV rendering with columns `y,z,mass`, outcomes as 0/1 strings in
    /// trial order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,z,mass\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                mask_string(row.first, self.width),
                mask_string(row.second, self.width),
                row.mass
            ));
        }
        out
    }
}

/// `Sum_{j<=m} y_j <= Sum_{j<=m} z_j` for every prefix `m`.
pub fn prefix_dominated(y: u64, z: u64, width: usize) -> bool {
    let mut sy = 0u32;
    let mut sz = 0u32;
    for j in 0..width {
        sy += ((y >> j) & 1) as u32;
        sz += ((z >> j) & 1) as u32;
        if sy > sz {
            return false;
        }
    }
    true
}

fn mask_string(mask: u64, width: usize) -> String {
    (0..width)
        .map(|j| if (mask >> j) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Sort key realizing lexicographic order on the trial-ordered vector.
fn lex_key(mask: u64, width: usize) -> u64 {
    mask.reverse_bits() >> (64 - width.max(1))
}

fn product_mass(probs: &[f64], outcome: u64) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(j, &p)| if (outcome >> j) & 1 == 1 { p } else { 1.0 - p })
        .product()
}

/// Decides the coupling partial order between `p` and `q`.
///
/// Unequal lengths are padded with fair cookies, which do not change the
/// walk law. The necessary cumulative-strength test runs in exact
/// arithmetic; feasibility is then a unit max-flow over the dominance
/// bipartite graph.
pub fn decide_order(p: &CookieEnvironment, q: &CookieEnvironment) -> Result<OrderVerdict> {
    let width = p.len().max(q.len());
    if width > MAX_ORDER_WIDTH {
        return Err(Error::CouplingBudgetExceeded {
            len: width,
            max: MAX_ORDER_WIDTH,
        });
    }
    let p = p.padded_to(width);
    let q = q.padded_to(width);

    if p.exact() == q.exact() {
        let certificate = diagonal_table(&p)?;
        return Ok(OrderVerdict::Equal { certificate });
    }

    // necessary condition: cumulative strengths dominate at every prefix
    let mut witness = None;
    let mut cum_p = num_rational::BigRational::from_integer(0.into());
    let mut cum_q = cum_p.clone();
    for m in 0..width {
        cum_p += &p.exact()[m];
        cum_q += &q.exact()[m];
        if cum_p > cum_q {
            return Ok(OrderVerdict::Incomparable);
        }
        if witness.is_none() && cum_p < cum_q {
            witness = Some(m + 1);
        }
    }

    match feasible_coupling(&p, &q)? {
        Some(certificate) => Ok(match witness {
            Some(witness) => OrderVerdict::Strict {
                witness,
                certificate,
            },
            None => OrderVerdict::WeakOnly { certificate },
        }),
        None => Ok(OrderVerdict::Incomparable),
    }
}

/// Builds a coupling certificate, failing on incomparable pairs.
pub fn build_coupling_table(
    p: &CookieEnvironment,
    q: &CookieEnvironment,
) -> Result<CouplingTable> {
    match decide_order(p, q)? {
        OrderVerdict::Incomparable => Err(Error::NotComparable(format!("{p} vs {q}"))),
        verdict => Ok(verdict.certificate().expect("comparable carries table").clone()),
    }
}

/// Least `m` whose cumulative strengths differ strictly; requires a
/// strict verdict.
pub fn minimal_strict_index(p: &CookieEnvironment, q: &CookieEnvironment) -> Result<usize> {
    match decide_order(p, q)? {
        OrderVerdict::Strict { witness, .. } => Ok(witness),
        other => Err(Error::NotComparable(format!(
            "minimal strict index needs a strict pair, got {}",
            other.label()
        ))),
    }
}

/// The probability gap `(1-q_1)...(1-q_{k-1}) q_k - (1-p_1)...(1-p_{k-1}) p_k`
/// of observing the first success exactly at trial `k`.
pub fn strict_gap_value(p: &CookieEnvironment, q: &CookieEnvironment, k: usize) -> Result<f64> {
    let width = p.len().max(q.len());
    if k == 0 || k > width {
        return Err(Error::Precondition(format!(
            "index {k} outside 1..={width}"
        )));
    }
    let p = p.padded_to(width);
    let q = q.padded_to(width);
    let head = |probs: &[f64]| -> f64 {
        let miss: f64 = probs[..k - 1].iter().map(|&x| 1.0 - x).product();
        miss * probs[k - 1]
    };
    Ok(head(q.probs()) - head(p.probs()))
}

/// Summary of a verdict for CLI/JSON output.
pub fn summarize(p: &CookieEnvironment, q: &CookieEnvironment, v: &OrderVerdict) -> VerdictSummary {
    let (witness, strict_gap) = match v {
        OrderVerdict::Strict { witness, .. } => (
            Some(*witness),
            strict_gap_value(p, q, *witness).ok(),
        ),
        _ => (None, None),
    };
    VerdictSummary {
        verdict: v.label(),
        witness,
        strict_gap,
        support_rows: v.certificate().map_or(0, |t| t.rows().len()),
    }
}

fn diagonal_table(p: &CookieEnvironment) -> Result<CouplingTable> {
    let width = p.len();
    let rows = (0..(1u64 << width))
        .map(|outcome| CouplingRow {
            first: outcome,
            second: outcome,
            mass: product_mass(p.probs(), outcome),
        })
        .collect();
    CouplingTable::from_rows(width, rows)
}

/// Unit max-flow over the dominance graph; `Some(table)` iff the full mass
/// is routable within tolerance.
fn feasible_coupling(
    p: &CookieEnvironment,
    q: &CookieEnvironment,
) -> Result<Option<CouplingTable>> {
    let width = p.len();
    let n = 1usize << width;
    let source = 2 * n;
    let sink = 2 * n + 1;
    let mut dinic = Dinic::new(2 * n + 2);

    // deterministic edge order: outcomes ascending in lexicographic order
    let mut order: Vec<u64> = (0..n as u64).collect();
    order.sort_by_key(|&mask| lex_key(mask, width));

    for &y in &order {
        dinic.add_edge(source, y as usize, product_mass(p.probs(), y));
    }
    for &z in &order {
        dinic.add_edge(n + z as usize, sink, product_mass(q.probs(), z));
    }
    let mut pair_edges = Vec::new();
    for &y in &order {
        for &z in &order {
            if prefix_dominated(y, z, width) {
                let id = dinic.add_edge(y as usize, n + z as usize, f64::INFINITY);
                pair_edges.push((y, z, id));
            }
        }
    }

    let flow = dinic.max_flow(source, sink);
    if (flow - 1.0).abs() > FEASIBILITY_TOL {
        return Ok(None);
    }
    let mut rows = Vec::new();
    for (y, z, id) in pair_edges {
        let mass = dinic.flow_on(id);
        if mass > 1e-15 {
            rows.push(CouplingRow {
                first: y,
                second: z,
                mass,
            });
        }
    }
    // rounding drift from the flow solve is far below the validation
    // tolerances; rescale so masses sum to exactly one
    let total: f64 = rows.iter().map(|r| r.mass).sum();
    for row in &mut rows {
        row.mass /= total;
    }
    let table = CouplingTable::from_rows(width, rows)?;
    table.validate(p, q)?;
    Ok(Some(table))
}

const FLOW_EPS: f64 = 1e-13;

/// Dinic's blocking-flow algorithm with real capacities.
struct Dinic {
    heads: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(nodes: usize) -> Self {
        Self {
            heads: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            level: vec![-1; nodes],
            iter: vec![0; nodes],
        }
    }

    /// Adds a directed edge and returns its id; the reverse edge is id^1.
    fn add_edge(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let id = self.to.len();
        self.heads[from].push(id);
        self.to.push(to);
        self.cap.push(cap);
        self.heads[to].push(id + 1);
        self.to.push(from);
        self.cap.push(0.0);
        id
    }

    fn flow_on(&self, id: usize) -> f64 {
        // flow pushed forward equals the residual accumulated on the twin
        self.cap[id ^ 1]
    }

    fn bfs(&mut self, source: usize, sink: usize) -> bool {
        self.level.fill(-1);
        let mut queue = std::collections::VecDeque::new();
        self.level[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &e in &self.heads[u] {
                let v = self.to[e];
                if self.cap[e] > FLOW_EPS && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[sink] >= 0
    }

    fn dfs(&mut self, u: usize, sink: usize, limit: f64) -> f64 {
        if u == sink {
            return limit;
        }
        while self.iter[u] < self.heads[u].len() {
            let e = self.heads[u][self.iter[u]];
            let v = self.to[e];
            if self.cap[e] > FLOW_EPS && self.level[v] == self.level[u] + 1 {
                let pushed = self.dfs(v, sink, limit.min(self.cap[e]));
                if pushed > FLOW_EPS {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            self.iter[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, source: usize, sink: usize) -> f64 {
        let mut flow = 0.0;
        while self.bfs(source, sink) {
            self.iter.fill(0);
            loop {
                let pushed = self.dfs(source, sink, f64::INFINITY);
                if pushed <= FLOW_EPS {
                    break;
                }
                flow += pushed;
            }
        }
        flow
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn env(probs: &[f64]) -> CookieEnvironment {
        CookieEnvironment::new(probs.to_vec()).unwrap()
    }

    fn paper_example_table() -> CouplingTable {
        // explicit coupling of (0.5, 0.9) below (0.9, 0.5)
        let rows = vec![
            CouplingRow { first: 0b00, second: 0b00, mass: 0.05 },
            CouplingRow { first: 0b10, second: 0b10, mass: 0.05 },
            CouplingRow { first: 0b01, second: 0b01, mass: 0.05 },
            CouplingRow { first: 0b10, second: 0b01, mass: 0.40 },
            CouplingRow { first: 0b11, second: 0b11, mass: 0.45 },
        ];
        CouplingTable::from_rows(2, rows).unwrap()
    }

    #[test]
    fn paper_example_validates_as_certificate() {
        let p = env(&[0.5, 0.9]);
        let q = env(&[0.9, 0.5]);
        paper_example_table().validate(&p, &q).unwrap();
    }

    #[test]
    fn equal_envs_get_diagonal_table() {
        let p = env(&[0.7]);
        match decide_order(&p, &p).unwrap() {
            OrderVerdict::Equal { certificate } => {
                let rows = certificate.rows();
                assert_eq!(rows.len(), 2);
                assert!(rows.iter().all(|r| r.first == r.second));
                let m0 = certificate.first_marginal(0b0);
                let m1 = certificate.first_marginal(0b1);
                assert!((m0 - 0.3).abs() <= 1e-12);
                assert!((m1 - 0.7).abs() <= 1e-12);
            }
            other => panic!("expected Equal, got {}", other.label()),
        }
    }

    #[test]
    fn paper_example_pair_is_strict_with_witness_1() {
        let p = env(&[0.5, 0.9]);
        let q = env(&[0.9, 0.5]);
        match decide_order(&p, &q).unwrap() {
            OrderVerdict::Strict { witness, certificate } => {
                assert_eq!(witness, 1);
                certificate.validate(&p, &q).unwrap();
            }
            other => panic!("expected Strict, got {}", other.label()),
        }
        assert_eq!(minimal_strict_index(&p, &q).unwrap(), 1);
    }

    #[test]
    fn reversed_pair_is_incomparable() {
        let p = env(&[0.9, 0.5]);
        let q = env(&[0.5, 0.9]);
        assert!(matches!(
            decide_order(&p, &q).unwrap(),
            OrderVerdict::Incomparable
        ));
    }

    #[test]
    fn cumulative_pass_can_still_be_infeasible() {
        // prefix sums dominate but the top outcome has too much mass below
        let p = env(&[0.5, 0.5]);
        let q = env(&[0.9, 0.1]);
        assert!(matches!(
            decide_order(&p, &q).unwrap(),
            OrderVerdict::Incomparable
        ));
    }

    #[test]
    fn minimal_strict_index_examples() {
        let cases: [(&[f64], &[f64], usize); 2] = [
            (&[0.7, 0.5, 0.9], &[0.7, 0.9, 0.5], 2),
            (&[0.7, 0.9, 0.9], &[0.9, 0.7, 0.9], 1),
        ];
        for (p, q, want) in cases {
            assert_eq!(minimal_strict_index(&env(p), &env(q)).unwrap(), want);
        }
    }

    #[test]
    fn strict_gap_examples() {
        let p = env(&[0.5, 0.9]);
        let q = env(&[0.9, 0.5]);
        assert!((strict_gap_value(&p, &q, 1).unwrap() - 0.4).abs() <= 1e-12);
        assert_eq!(strict_gap_value(&p, &p, 2).unwrap(), 0.0);

        // equal head, p_k < q_k: the gap is strictly positive
        let p = env(&[0.7, 0.5, 0.9]);
        let q = env(&[0.7, 0.9, 0.5]);
        assert!(strict_gap_value(&p, &q, 2).unwrap() > 0.0);
    }

    #[test]
    fn unequal_lengths_are_padded_with_fair_cookies() {
        let p = env(&[0.5]);
        let q = env(&[0.9, 0.5]);
        // padded p = (0.5, 0.5): cumulative 0.5 <= 0.9, 1.0 <= 1.4
        match decide_order(&p, &q).unwrap() {
            OrderVerdict::Strict { witness, .. } => assert_eq!(witness, 1),
            other => panic!("expected Strict, got {}", other.label()),
        }
    }

    #[test]
    fn rejects_corrupted_tables() {
        // non-dominance support pair
        let rows = vec![
            CouplingRow { first: 0b01, second: 0b10, mass: 1.0 },
        ];
        assert!(CouplingTable::from_rows(2, rows).is_err());

        // masses failing to sum to one
        let rows = vec![
            CouplingRow { first: 0b00, second: 0b00, mass: 0.5 },
        ];
        assert!(CouplingTable::from_rows(1, rows).is_err());

        // good structure, wrong marginals for the claimed environments
        let rows = vec![
            CouplingRow { first: 0b0, second: 0b0, mass: 0.5 },
            CouplingRow { first: 0b1, second: 0b1, mass: 0.5 },
        ];
        let table = CouplingTable::from_rows(1, rows).unwrap();
        assert!(table.validate(&env(&[0.7]), &env(&[0.7])).is_err());
    }

    /// Strassen-style oracle: a dominating coupling exists iff every
    /// up-closed outcome set has at least as much mass above as below.
    fn upset_feasible(p: &CookieEnvironment, q: &CookieEnvironment) -> bool {
        let width = p.len();
        let n = 1usize << width;
        assert!(n <= 16, "oracle is exhaustive over subsets of outcomes");
        let masses_p: Vec<f64> = (0..n as u64).map(|o| product_mass(p.probs(), o)).collect();
        let masses_q: Vec<f64> = (0..n as u64).map(|o| product_mass(q.probs(), o)).collect();
        'subsets: for set in 0u32..(1 << n) {
            // up-closed: members dominate only members
            for a in 0..n {
                if (set >> a) & 1 == 1 {
                    for b in 0..n {
                        if prefix_dominated(a as u64, b as u64, width) && (set >> b) & 1 == 0 {
                            continue 'subsets;
                        }
                    }
                }
            }
            let mass_p: f64 = (0..n).filter(|&o| (set >> o) & 1 == 1).map(|o| masses_p[o]).sum();
            let mass_q: f64 = (0..n).filter(|&o| (set >> o) & 1 == 1).map(|o| masses_q[o]).sum();
            if mass_p > mass_q + 1e-9 {
                return false;
            }
        }
        true
    }

    #[test]
    fn maxflow_agrees_with_upset_oracle_on_random_grid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2718);
        for case in 0..1000 {
            let m = rng.gen_range(1..=3usize);
            let p: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..0.95)).collect();
            let q: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..0.95)).collect();
            let p = env(&p);
            let q = env(&q);
            let got = decide_order(&p, &q).unwrap().is_comparable();
            let want = upset_feasible(&p, &q);
            assert_eq!(got, want, "case {case}: {p} vs {q}");
        }
    }

    #[test]
    fn built_tables_always_validate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut built = 0;
        while built < 50 {
            let m = rng.gen_range(1..=4usize);
            let p: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..0.9)).collect();
            // force comparability by pointwise increase
            let q: Vec<f64> = p.iter().map(|&x| (x + rng.gen_range(0.0..0.08)).min(0.95)).collect();
            let p = env(&p);
            let q = env(&q);
            if let Ok(table) = build_coupling_table(&p, &q) {
                table.validate(&p, &q).unwrap();
                built += 1;
            }
        }
    }

    #[test]
    fn csv_layout() {
        let table = paper_example_table();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("y,z,mass"));
        assert!(csv.contains("01,10,0.4"));
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn weak_only_is_unreachable_on_grid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let m = rng.gen_range(1..=4usize);
            let p: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..0.95)).collect();
            let q: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..0.95)).collect();
            let verdict = decide_order(&env(&p), &env(&q)).unwrap();
            assert!(
                !matches!(verdict, OrderVerdict::WeakOnly { .. }),
                "weak-only verdict reached for {p:?} vs {q:?}"
            );
        }
    }
}
