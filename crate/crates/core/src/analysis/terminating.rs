//! Searching for one finite fair derivation.

use std::collections::HashMap;

use super::explore::{by_age, state_code};
use crate::chase::{
    run_chase, ChaseError, ChaseState, Strategy, TriggerChoice, DEFAULT_HOM_BUDGET,
};
use crate::derivation::{ChaseVariant, Derivation, Trigger};
use crate::hom::CanonicalCode;
use crate::model::KnowledgeBase;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TerminatingSearch {
    /// Longest derivation considered.
    pub max_steps: usize,
    /// State expansions allowed to the exhaustive search over trigger choices.
    pub max_nodes: usize,
    pub hom_budget: Option<u64>,
}

impl Default for TerminatingSearch {
    fn default() -> Self {
        TerminatingSearch {
            max_steps: 200,
            max_nodes: 5000,
            hom_budget: Some(DEFAULT_HOM_BUDGET),
        }
    }
}

/// A finite fair derivation and how it was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Found {
    pub derivation: Derivation,
    /// `fifo`, `datalog-first`, `phased#<k>` (index into the supplied pool) or `search`.
    pub via: String,
}

/// The first finite fair derivation found by FIFO, Datalog-first, each supplied strategy, and
/// finally an iterative-deepening search over trigger choices. `None` is not a proof that no such
/// derivation exists.
pub fn find_terminating(
    kb: &KnowledgeBase,
    variant: ChaseVariant,
    max_steps: usize,
    pool: &[Strategy],
) -> Option<Derivation> {
    let search = TerminatingSearch {
        max_steps,
        ..Default::default()
    };
    find_terminating_with(kb, variant, search, pool).map(|f| f.derivation)
}

pub fn find_terminating_with(
    kb: &KnowledgeBase,
    variant: ChaseVariant,
    search: TerminatingSearch,
    pool: &[Strategy],
) -> Option<Found> {
    let fixed = [
        (Strategy::Fifo, "fifo".to_string()),
        (Strategy::DatalogFirst, "datalog-first".to_string()),
    ];
    let supplied = pool
        .iter()
        .enumerate()
        .map(|(k, s)| (s.clone(), format!("{}#{}", s.name(), k + 1)));
    for (strategy, via) in fixed.into_iter().chain(supplied) {
        let run = crate::chase::Chase::new(kb, variant)
            .strategy(&strategy)
            .max_steps(search.max_steps)
            .hom_budget(search.hom_budget)
            .run();
        if let Ok(d) = run {
            if d.is_terminating() {
                return Some(Found { derivation: d, via });
            }
        }
    }
    let triggers = deepening(kb, variant, search)?;
    let script = Strategy::Scripted(
        triggers
            .iter()
            .map(|t| TriggerChoice {
                rule: t.rule().id().to_string(),
                matching: t.matching(),
            })
            .collect(),
    );
    let d = run_chase(kb, variant, &script, search.max_steps).ok()?;
    d.is_terminating().then(|| Found {
        derivation: d,
        via: "search".to_string(),
    })
}

/// Shortest trigger sequence reaching a state without admissible triggers.
fn deepening(
    kb: &KnowledgeBase,
    variant: ChaseVariant,
    search: TerminatingSearch,
) -> Option<Vec<Trigger>> {
    let root = ChaseState::new(kb, variant).with_hom_budget(search.hom_budget);
    let mut s = Deepening {
        variant,
        dead: HashMap::new(),
        expanded: 0,
        max_nodes: search.max_nodes,
    };
    for limit in 0..=search.max_steps {
        let mut path = Vec::new();
        match s.dfs(&root, limit, &mut path) {
            Ok(true) => return Some(path),
            Ok(false) => {}
            Err(_) => return None,
        }
    }
    None
}

struct Deepening {
    variant: ChaseVariant,
    /// State → largest remaining depth known not to reach a terminal state.
    dead: HashMap<CanonicalCode, usize>,
    expanded: usize,
    max_nodes: usize,
}

struct OutOfBudget;

impl From<ChaseError> for OutOfBudget {
    fn from(_: ChaseError) -> Self {
        OutOfBudget
    }
}

impl Deepening {
    fn dfs(
        &mut self,
        st: &ChaseState,
        remaining: usize,
        path: &mut Vec<Trigger>,
    ) -> Result<bool, OutOfBudget> {
        let code = state_code(st, self.variant);
        if self.dead.get(&code).is_some_and(|&r| r >= remaining) {
            return Ok(false);
        }
        self.expanded += 1;
        if self.expanded > self.max_nodes {
            return Err(OutOfBudget);
        }
        let successors = by_age(st)?;
        if successors.is_empty() {
            return Ok(true);
        }
        if remaining > 0 {
            for t in successors {
                let mut child = st.clone();
                child.apply(&t);
                path.push(child.steps().last().expect("just applied").trigger.clone());
                if self.dfs(&child, remaining - 1, path)? {
                    return Ok(true);
                }
                path.pop();
            }
        }
        self.dead.insert(code, remaining);
        Ok(false)
    }
}
