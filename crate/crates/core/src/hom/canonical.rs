//! Canonical codes: equal iff the atom sets are isomorphic (nulls and variables renamed
//! bijectively, constants rigid).
//!
//! The atom set is split into components linked by movable terms. Each component gets a canonical
//! string from colour refinement followed by individualisation of the first non-singleton cell,
//! keeping the lexicographically least leaf. Members of a cell whose transposition is an
//! automorphism lead to identical leaves, so only one representative of each such twin class is
//! tried; this keeps stars and other highly symmetric shapes from blowing up the search.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::model::{Atom, Symbol, Term};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CanonicalCode(String);

impl CanonicalCode {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Argument of an indexed atom: a rigid term or the index of a movable term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Key {
    Rigid(Term),
    Movable(usize),
}

type IAtom = (Symbol, Vec<Key>);

/// Canonical code of an atom set; nulls and variables are the movable terms.
pub fn canonical_code<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> CanonicalCode {
    let atoms: Vec<&Atom> = atoms.into_iter().collect();
    let mut ground: Vec<String> = Vec::new();
    let mut index: HashMap<&Term, usize> = HashMap::new();
    let mut movable_atoms: Vec<&Atom> = Vec::new();
    for a in &atoms {
        let mut any = false;
        for t in &a.args {
            if !t.is_constant() {
                any = true;
                let n = index.len();
                index.entry(t).or_insert(n);
            }
        }
        if any {
            movable_atoms.push(a);
        } else {
            ground.push(a.to_string());
        }
    }
    ground.sort();
    ground.dedup();

    // Union-find over movable terms to split into components.
    let n = index.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for a in &movable_atoms {
        let ids: Vec<usize> = a
            .args
            .iter()
            .filter(|t| !t.is_constant())
            .map(|t| index[t])
            .collect();
        for w in ids.windows(2) {
            let (x, y) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if x != y {
                parent[x] = y;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<&Atom>> = BTreeMap::new();
    for a in &movable_atoms {
        let first = a
            .args
            .iter()
            .find(|t| !t.is_constant())
            .expect("movable atom");
        let root = find(&mut parent, index[first]);
        groups.entry(root).or_default().push(a);
    }
    let mut comps: Vec<String> = groups.values().map(|g| component_code(g)).collect();
    comps.sort();
    let mut out = ground.join(";");
    for c in comps {
        out.push('|');
        out.push_str(&c);
    }
    CanonicalCode(out)
}

fn component_code(atoms: &[&Atom]) -> String {
    let mut index: HashMap<&Term, usize> = HashMap::new();
    for a in atoms {
        for t in &a.args {
            if !t.is_constant() {
                let n = index.len();
                index.entry(t).or_insert(n);
            }
        }
    }
    let mut iatoms: Vec<IAtom> = atoms
        .iter()
        .map(|a| {
            let args = a
                .args
                .iter()
                .map(|t| {
                    if t.is_constant() {
                        Key::Rigid(t.clone())
                    } else {
                        Key::Movable(index[t])
                    }
                })
                .collect();
            (a.predicate.clone(), args)
        })
        .collect();
    iatoms.sort();
    iatoms.dedup();
    let comp = Component::new(iatoms, index.len());
    let colors = comp.refine(vec![0; comp.n]);
    let mut best: Option<String> = None;
    comp.search(colors, &mut best);
    best.expect("at least one leaf")
}

struct Component {
    atoms: Vec<IAtom>,
    n: usize,
    /// For each movable term, the (atom index, position) pairs where it occurs.
    occ: Vec<Vec<(usize, usize)>>,
    set: HashSet<IAtom>,
}

impl Component {
    fn new(atoms: Vec<IAtom>, n: usize) -> Component {
        let mut occ = vec![Vec::new(); n];
        for (i, (_, args)) in atoms.iter().enumerate() {
            for (pos, k) in args.iter().enumerate() {
                if let Key::Movable(m) = k {
                    occ[*m].push((i, pos));
                }
            }
        }
        let set = atoms.iter().cloned().collect();
        Component { atoms, n, occ, set }
    }

    /// Iterated colour refinement. Colours are ranks of signatures whose first entry is the old
    /// colour, so refinement only splits cells and preserves their relative order.
    fn refine(&self, mut colors: Vec<usize>) -> Vec<usize> {
        let mut classes = count_classes(&colors);
        loop {
            let sigs: Vec<(usize, Vec<(Symbol, usize, Vec<Key>)>)> = (0..self.n)
                .map(|m| {
                    let mut s: Vec<(Symbol, usize, Vec<Key>)> = self.occ[m]
                        .iter()
                        .map(|&(i, pos)| {
                            let (p, args) = &self.atoms[i];
                            let shape = args
                                .iter()
                                .map(|k| match k {
                                    Key::Rigid(t) => Key::Rigid(t.clone()),
                                    Key::Movable(x) => Key::Movable(colors[*x]),
                                })
                                .collect();
                            (p.clone(), pos, shape)
                        })
                        .collect();
                    s.sort();
                    (colors[m], s)
                })
                .collect();
            let mut sorted: Vec<&(usize, Vec<(Symbol, usize, Vec<Key>)>)> = sigs.iter().collect();
            sorted.sort();
            sorted.dedup();
            let rank: HashMap<&(usize, Vec<(Symbol, usize, Vec<Key>)>), usize> =
                sorted.iter().enumerate().map(|(i, s)| (*s, i)).collect();
            colors = sigs.iter().map(|s| rank[s]).collect();
            let now = count_classes(&colors);
            if now == classes {
                return colors;
            }
            classes = now;
        }
    }

    fn leaf(&self, colors: &[usize]) -> String {
        let mut rendered: Vec<String> = self
            .atoms
            .iter()
            .map(|(p, args)| {
                let mut s = String::new();
                s.push_str(p);
                s.push('(');
                for (i, k) in args.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    match k {
                        Key::Rigid(t) => s.push_str(&t.to_string()),
                        Key::Movable(m) => {
                            s.push('#');
                            s.push_str(&colors[*m].to_string());
                        }
                    }
                }
                s.push(')');
                s
            })
            .collect();
        rendered.sort();
        rendered.join(";")
    }

    fn search(&self, colors: Vec<usize>, best: &mut Option<String>) {
        let classes = count_classes(&colors);
        if classes == self.n {
            let leaf = self.leaf(&colors);
            if best.as_ref().is_none_or(|b| leaf < *b) {
                *best = Some(leaf);
            }
            return;
        }
        // First colour (in colour order) whose cell is not a singleton.
        let mut sizes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (m, &c) in colors.iter().enumerate() {
            sizes.entry(c).or_default().push(m);
        }
        let cell = sizes
            .values()
            .find(|v| v.len() > 1)
            .expect("non-discrete colouring")
            .clone();
        let mut reps: Vec<usize> = Vec::new();
        for &m in &cell {
            if !reps.iter().any(|&r| self.is_twin(r, m)) {
                reps.push(m);
            }
        }
        for m in reps {
            let mut next: Vec<usize> = colors.iter().map(|&c| 2 * c).collect();
            next[m] += 1;
            let refined = self.refine(next);
            self.search(refined, best);
        }
    }

    /// Is the transposition of movable terms `a` and `b` an automorphism?
    fn is_twin(&self, a: usize, b: usize) -> bool {
        let swap = |k: &Key| match k {
            Key::Movable(x) if *x == a => Key::Movable(b),
            Key::Movable(x) if *x == b => Key::Movable(a),
            other => other.clone(),
        };
        self.occ[a].iter().chain(self.occ[b].iter()).all(|&(i, _)| {
            let (p, args) = &self.atoms[i];
            let image = (p.clone(), args.iter().map(swap).collect::<Vec<_>>());
            self.set.contains(&image)
        })
    }
}

fn count_classes(colors: &[usize]) -> usize {
    let mut v = colors.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}
